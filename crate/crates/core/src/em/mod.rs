//! Method-of-moments operators for perfectly or resistively conducting surfaces.
//!
//! Time convention `exp(jωt)`. With flux-normalised RWG functions `ψ_n`
//!
//! ```text
//! Z0_mn = jωμ0 ∫∫ [ψ_m·ψ_n − (∇·ψ_m)(∇·ψ_n)/k²] exp(−jkR)/(4πR) dS dS'
//! ```
//!
//! so that `R0 = Re Z0` is positive semidefinite (radiated power) and the
//! quasi-static reactance is capacitive. `R0` is evaluated through the far
//! field, which keeps it semidefinite to rounding.

mod assemble;
pub mod farfield;
pub mod quadrature;
pub mod singular;
mod solve;

pub use assemble::*;
pub use farfield::{ecc, far_field, pattern_ecc, pattern_power, radiation_matrix, SphereGrid};
pub use solve::*;

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;
/// Vacuum permeability (H/m).
pub const MU0: f64 = 1.256_637_062_12e-6;
/// Free-space wave impedance (Ω).
pub const ETA0: f64 = MU0 * C0;

//! Orthogonal excitation states on symmetric multi-port radiators.
//!
//! The crate couples finite point-group theory with a surface method-of-moments
//! kernel. Excitations are projected onto the species of the structure's point
//! group, which makes them orthogonal with respect to every group-invariant
//! operator at once. On top of that it evaluates the total active reflection
//! coefficient (TARC) of the resulting states and searches port placements that
//! minimise it.
//!
//! Module map:
//! - [`point_group`]: symmetry operations, irreducible representations, species counts.
//! - [`geometry`]: triangle meshes, RWG edge basis, mapping matrices, generator cell.
//! - [`em`]: impedance, loss and stored-energy operators, solves, far fields.
//! - [`symmetry`]: adaptation, symmetry-adapted bases, block diagonalization, modes.
//! - [`ports`]: port matrices, port voltages, TARC and optimal generator amplitudes.
//! - [`optimizer`]: exhaustive port-placement search.
//! - [`io`]: CSV and binary dumps.

// `!(x > 0.0)` is how validation rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod em;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod optimizer;
pub mod point_group;
pub mod ports;
pub mod symmetry;

mod par;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMatrix = nalgebra::DMatrix<C64>;
pub type CVector = nalgebra::DVector<C64>;
pub type RMatrix = nalgebra::DMatrix<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;

use std::f64::consts::PI;

use super::farfield::radiation_matrix;
use super::quadrature::{tri3_points, TRI3};
use super::singular::potential_integrals;
use super::{C0, MU0};
use crate::geometry::EdgeBasisSet;
use crate::{par, CMatrix, Error, Result, Vec3, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Z0,
    R0,
    X0,
    Rrho,
    W,
    Y,
    Custom,
}

impl Role {
    /// Eight-byte tag used in binary dumps.
    pub fn tag(self) -> [u8; 8] {
        let s: &[u8] = match self {
            Role::Z0 => b"Z0",
            Role::R0 => b"R0",
            Role::X0 => b"X0",
            Role::Rrho => b"Rrho",
            Role::W => b"W",
            Role::Y => b"Y",
            Role::Custom => b"custom",
        };
        let mut t = [b' '; 8];
        t[..s.len()].copy_from_slice(s);
        t
    }

    pub fn from_tag(tag: &[u8]) -> Option<Role> {
        let s = std::str::from_utf8(tag).ok()?.trim_end();
        s.parse().ok()
    }
}

impl std::str::FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Role> {
        Ok(match s {
            "Z0" => Role::Z0,
            "R0" => Role::R0,
            "X0" => Role::X0,
            "Rrho" => Role::Rrho,
            "W" => Role::W,
            "Y" => Role::Y,
            "custom" => Role::Custom,
            other => return Err(Error::Invalid(format!("unknown operator `{other}`"))),
        })
    }
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let t = self.tag();
        f.write_str(std::str::from_utf8(&t).unwrap_or("?").trim_end())
    }
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub role: Role,
    pub data: CMatrix,
    /// Angular frequency (rad/s); zero for frequency-independent operators.
    pub omega: f64,
    pub ka: f64,
}

impl OperatorMatrix {
    pub fn new(role: Role, data: CMatrix, omega: f64, ka: f64) -> Self {
        OperatorMatrix { role, data, omega, ka }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn with_data(&self, role: Role, data: CMatrix) -> OperatorMatrix {
        OperatorMatrix { role, data, omega: self.omega, ka: self.ka }
    }
}

/// Sampled electrical sizes of a structure with circumscribing radius `radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub ka: Vec<f64>,
    pub radius: f64,
}

impl FrequencyGrid {
    pub fn new(ka: Vec<f64>, radius: f64) -> Result<Self> {
        if ka.is_empty() {
            return Err(Error::Invalid("frequency grid is empty".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::Invalid(format!("radius must be positive, got {radius}")));
        }
        if ka.iter().any(|&k| !(k > 0.0) || !k.is_finite()) {
            return Err(Error::Invalid("ka samples must be positive".into()));
        }
        if ka.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("ka samples must be strictly increasing".into()));
        }
        Ok(FrequencyGrid { ka, radius })
    }

    /// `count` samples from `start` to `stop` inclusive.
    pub fn linspace(start: f64, stop: f64, count: usize, radius: f64) -> Result<Self> {
        let ka = match count {
            0 => vec![],
            1 => vec![start],
            _ => (0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect(),
        };
        Self::new(ka, radius)
    }

    pub fn len(&self) -> usize {
        self.ka.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ka.is_empty()
    }

    pub fn omega(&self, i: usize) -> f64 {
        omega_of(self.ka[i], self.radius)
    }
}

pub fn omega_of(ka: f64, radius: f64) -> f64 {
    ka / radius * C0
}

/// Vacuum impedance matrix at electrical size `ka`.
///
/// The reactance comes from the EFIE kernel. The resistance comes from the
/// far field, which keeps it positive semidefinite to rounding; the kernel's
/// real part carries quadrature noise that makes weakly radiating directions
/// indefinite.
pub fn assemble_z0(basis: &EdgeBasisSet, ka: f64) -> OperatorMatrix {
    let radius = basis.radius();
    let k = ka / radius;
    let omega = omega_of(ka, radius);
    let x0 = efie_matrix(basis, k, omega);
    let r0 = radiation_matrix(basis, ka);
    let data = x0.zip_map(&r0, |x, r| C64::new(r, x.im));
    OperatorMatrix::new(Role::Z0, data, omega, ka)
}

/// Impedance with both parts taken from the EFIE kernel. Its real part is
/// only as accurate as the near-field quadrature; use it to cross-check
/// [`assemble_z0`], not to solve.
pub fn assemble_z0_kernel(basis: &EdgeBasisSet, ka: f64) -> OperatorMatrix {
    let radius = basis.radius();
    let omega = omega_of(ka, radius);
    OperatorMatrix::new(Role::Z0, efie_matrix(basis, ka / radius, omega), omega, ka)
}

/// `R0 = Re Z0`.
pub fn radiation_part(z0: &OperatorMatrix) -> OperatorMatrix {
    z0.with_data(Role::R0, z0.data.map(|z| C64::new(z.re, 0.0)))
}

/// `X0 = Im Z0`.
pub fn reactance_part(z0: &OperatorMatrix) -> OperatorMatrix {
    z0.with_data(Role::X0, z0.data.map(|z| C64::new(z.im, 0.0)))
}

/// Thin-sheet loss operator for a uniform surface resistivity `rho` (Ω/sq).
pub fn assemble_rrho(basis: &EdgeBasisSet, rho: f64) -> Result<OperatorMatrix> {
    if !(rho >= 0.0) {
        return Err(Error::NegativeResistivity(rho));
    }
    let n = basis.len();
    let mut data = CMatrix::zeros(n, n);
    for (t, funcs) in basis.triangle_functions().iter().enumerate() {
        let tri = &basis.triangles[t];
        let pts = tri3_points(&tri.points);
        for &(a, sa, va) in funcs {
            for &(b, sb, vb) in funcs {
                let pa = basis.mesh.vertices[va];
                let pb = basis.mesh.vertices[vb];
                let mut s = 0.0;
                for (q, (_, w)) in pts.iter().zip(TRI3) {
                    s += w * (q - pa).dot(&(q - pb));
                }
                // weights sum to one, so multiply by the area once
                let val = rho * sa * sb * s * tri.area / (4.0 * tri.area * tri.area);
                data[(a, b)] += C64::new(val, 0.0);
            }
        }
    }
    Ok(OperatorMatrix::new(Role::Rrho, data, 0.0, 0.0))
}

/// Stored-energy operator `W = ω ∂X0/∂ω` by a central difference of relative step `delta`.
pub fn assemble_w(basis: &EdgeBasisSet, ka: f64, delta: f64) -> Result<OperatorMatrix> {
    if !(delta > 0.0 && delta <= 1e-2) {
        return Err(Error::Invalid(format!("finite-difference step must lie in (0, 1e-2], got {delta}")));
    }
    let hi = assemble_z0(basis, ka * (1.0 + delta));
    let lo = assemble_z0(basis, ka * (1.0 - delta));
    let data = hi.data.zip_map(&lo.data, |a, b| C64::new((a.im - b.im) / (2.0 * delta), 0.0));
    Ok(OperatorMatrix::new(Role::W, data, omega_of(ka, basis.radius()), ka))
}

/// Default finite-difference step for [`assemble_w`].
pub const W_STEP: f64 = 1e-3;

/// Pairs closer than this many triangle sizes get singularity extraction.
const NEAR_FACTOR: f64 = 3.0;

fn efie_matrix(basis: &EdgeBasisSet, k: f64, omega: f64) -> CMatrix {
    let n = basis.len();
    let tris = &basis.triangles;
    let funcs = basis.triangle_functions();
    let verts = &basis.mesh.vertices;
    let points: Vec<[Vec3; 3]> = tris.iter().map(|t| tri3_points(&t.points)).collect();
    let jwmu = C64::new(0.0, omega * MU0);
    let inv_k2 = 1.0 / (k * k);

    // each test triangle yields its contribution to up to three rows; summing
    // them afterwards in triangle order keeps the result schedule-independent
    let partial: Vec<Vec<(usize, Vec<C64>)>> = par::map_indexed(tris.len(), |p| {
        let tp = &tris[p];
        let mut rows: Vec<(usize, Vec<C64>)> = funcs[p].iter().map(|&(a, _, _)| (a, vec![C64::default(); n])).collect();
        if rows.is_empty() {
            return rows;
        }
        for (q, tq) in tris.iter().enumerate() {
            if funcs[q].is_empty() {
                continue;
            }
            let shares_vertex = tp.vertices.iter().any(|v| tq.vertices.contains(v));
            let near = shares_vertex || (tp.centroid - tq.centroid).norm() < NEAR_FACTOR * tp.size.max(tq.size);
            for (r, _) in points[p].iter().zip(TRI3) {
                let wp = tp.area / 3.0;
                let (phi0, phi1) = potentials(r, tq, &points[q], k, near);
                for (row, &(_, sa, va)) in rows.iter_mut().zip(&funcs[p]) {
                    let ra = r - verts[va];
                    for &(b, sb, vb) in &funcs[q] {
                        let rb = r - verts[vb];
                        // (r − v_a)·∫(r' − v_b) G = (r − v_a)·Φ1 + (r − v_a)·(r − v_b) Φ0
                        let vec_term = dotc(&ra, &phi1) + phi0 * ra.dot(&rb);
                        let s = sa * sb / (tp.area * tq.area);
                        row.1[b] += jwmu * wp * s * (vec_term * 0.25 - phi0 * inv_k2);
                    }
                }
            }
        }
        rows
    });

    let mut z = CMatrix::zeros(n, n);
    for rows in partial {
        for (a, row) in rows {
            for (b, v) in row.into_iter().enumerate() {
                z[(a, b)] += v;
            }
        }
    }
    (&z + z.transpose()) * C64::new(0.5, 0.0)
}

fn dotc(a: &Vec3, b: &[C64; 3]) -> C64 {
    b[0] * a.x + b[1] * a.y + b[2] * a.z
}

/// `Φ0 = ∫ G dS'` and `Φ1 = ∫ (r' − r) G dS'` over the source triangle, with
/// `G = exp(−jkR)/(4πR)`.
fn potentials(r: &Vec3, tq: &crate::geometry::Triangle, pts: &[Vec3; 3], k: f64, near: bool) -> (C64, [C64; 3]) {
    let wq = tq.area / 3.0;
    let mut phi0 = C64::default();
    let mut phi1 = [C64::default(); 3];
    if near {
        let (s, v) = potential_integrals(r, &tq.points);
        phi0 += s;
        for i in 0..3 {
            phi1[i] += v[i];
        }
        for rp in pts {
            let d = rp - r;
            let dist = d.norm();
            // (exp(−jkR) − 1)/R, evaluated without cancellation
            let g = if dist == 0.0 {
                C64::new(0.0, -k)
            } else {
                let h = (0.5 * k * dist).sin();
                C64::new(-2.0 * h * h, -(k * dist).sin()) / dist
            };
            phi0 += g * wq;
            for i in 0..3 {
                phi1[i] += g * (wq * d[i]);
            }
        }
    } else {
        for rp in pts {
            let d = rp - r;
            let dist = d.norm();
            let g = C64::new(0.0, -k * dist).exp() / dist;
            phi0 += g * wq;
            for i in 0..3 {
                phi1[i] += g * (wq * d[i]);
            }
        }
    }
    let f = 1.0 / (4.0 * PI);
    (phi0 * f, phi1.map(|c| c * f))
}

//! Radiation patterns of surface currents.
//!
//! The pattern `F(θ, φ)` is scaled so that `∫ |F|² dΩ` is the radiated power:
//! `F = −jωμ0/(4π√(2η0)) · N⊥` with `N = Σ_n I_n ∫ ψ_n exp(jk r̂·r') dS'`.

use std::f64::consts::PI;

use super::assemble::{omega_of, OperatorMatrix};
use super::quadrature::{gauss_legendre, tri3_points};
use super::{ETA0, MU0};
use crate::geometry::EdgeBasisSet;
use crate::{par, CVector, Error, RMatrix, Result, Vec3, C64};

/// Product grid on the unit sphere: Gauss–Legendre in `cos θ`, uniform in `φ`
/// with a half-step offset. With an even `φ` count the grid is mapped onto
/// itself by the `xz` and `yz` mirrors and by `C2z`.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub directions: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

impl SphereGrid {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        let dphi = 2.0 * PI / n_phi as f64;
        let mut directions = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (ct, wt) in x.iter().zip(&w) {
            for j in 0..n_phi {
                directions.push((ct.acos(), (j as f64 + 0.5) * dphi));
                weights.push(wt * dphi);
            }
        }
        SphereGrid { directions, weights }
    }

    /// Grid resolving patterns of a structure of electrical size `ka`
    /// (at least 18 × 36 points).
    pub fn for_ka(ka: f64) -> Self {
        let n_theta = (ka.ceil() as usize + 12).max(18);
        Self::new(n_theta, 2 * n_theta)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

fn unit_vectors(theta: f64, phi: f64) -> (Vec3, Vec3, Vec3) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let r = Vec3::new(st * cp, st * sp, ct);
    let t = Vec3::new(ct * cp, ct * sp, -st);
    let p = Vec3::new(-sp, cp, 0.0);
    (r, t, p)
}

/// `(F_θ, F_φ)` in each direction for the current coefficients `i`.
pub fn far_field(basis: &EdgeBasisSet, ka: f64, i: &CVector, directions: &[(f64, f64)]) -> Vec<[C64; 2]> {
    let radius = basis.radius();
    let k = ka / radius;
    let omega = omega_of(ka, radius);
    let scale = C64::new(0.0, -omega * MU0 / (4.0 * PI * (2.0 * ETA0).sqrt()));
    let funcs = basis.triangle_functions();
    // per triangle: quadrature points and the current-weighted moments at them
    let samples: Vec<(Vec3, [C64; 3])> = basis
        .triangles
        .iter()
        .zip(&funcs)
        .flat_map(|(tri, fs)| {
            tri3_points(&tri.points)
                .into_iter()
                .map(|q| {
                    let mut j = [C64::default(); 3];
                    for &(n, s, v) in fs {
                        // (A/3) · s (q − v)/(2A)
                        let d = (q - basis.mesh.vertices[v]) * (s / 6.0);
                        for c in 0..3 {
                            j[c] += i[n] * d[c];
                        }
                    }
                    (q, j)
                })
                .collect::<Vec<_>>()
        })
        .collect();

    par::map_indexed(directions.len(), |d| {
        let (theta, phi) = directions[d];
        let (r_hat, t_hat, p_hat) = unit_vectors(theta, phi);
        let mut n = [C64::default(); 3];
        for (q, j) in &samples {
            let ph = C64::new(0.0, k * r_hat.dot(q)).exp();
            for c in 0..3 {
                n[c] += j[c] * ph;
            }
        }
        let proj = |u: &Vec3| (n[0] * u.x + n[1] * u.y + n[2] * u.z) * scale;
        [proj(&t_hat), proj(&p_hat)]
    })
}

/// Extra Gauss–Legendre orders beyond `ka` for the radiation operator; the
/// plane-wave expansion of a source inside radius `a` has decayed to rounding
/// by degree `ka + 16` for the sizes used here.
const RADIATION_MARGIN: usize = 16;

/// Radiation operator `R0 = 2 ∫ F_mᴴ F_n dΩ`, so that `½ IᴴR0I` is the
/// radiated power. Positive semidefinite by construction. The grid is mapped
/// onto itself by inversion and the basis functions are real, so the result
/// is real.
pub fn radiation_matrix(basis: &EdgeBasisSet, ka: f64) -> RMatrix {
    let n_theta = ka.ceil() as usize + RADIATION_MARGIN;
    radiation_matrix_on(basis, ka, &SphereGrid::new(n_theta, 2 * n_theta))
}

fn radiation_matrix_on(basis: &EdgeBasisSet, ka: f64, grid: &SphereGrid) -> RMatrix {
    let n = basis.len();
    let k = ka / basis.radius();
    let omega = omega_of(ka, basis.radius());
    let scale = omega * MU0 / (4.0 * PI * (2.0 * ETA0).sqrt());
    let funcs = basis.triangle_functions();
    let points: Vec<[Vec3; 3]> = basis.triangles.iter().map(|t| tri3_points(&t.points)).collect();

    let rows: Vec<[Vec<C64>; 2]> = par::map_indexed(grid.len(), |d| {
        let (theta, phi) = grid.directions[d];
        let (r_hat, t_hat, p_hat) = unit_vectors(theta, phi);
        let mut acc = vec![[C64::default(); 3]; n];
        for (fs, pts) in funcs.iter().zip(&points) {
            for q in pts {
                let ph = C64::new(0.0, k * r_hat.dot(q)).exp();
                for &(m, s, v) in fs {
                    let j = (q - basis.mesh.vertices[v]) * (s / 6.0);
                    for c in 0..3 {
                        acc[m][c] += ph * j[c];
                    }
                }
            }
        }
        let w = scale * grid.weights[d].sqrt();
        let proj = |u: &Vec3| acc.iter().map(|a| (a[0] * u.x + a[1] * u.y + a[2] * u.z) * w).collect();
        [proj(&t_hat), proj(&p_hat)]
    });

    let m = 2 * grid.len();
    let mut re = RMatrix::zeros(m, n);
    let mut im = RMatrix::zeros(m, n);
    for (d, pair) in rows.iter().enumerate() {
        for (p, row) in pair.iter().enumerate() {
            for (c, z) in row.iter().enumerate() {
                re[(2 * d + p, c)] = z.re;
                im[(2 * d + p, c)] = z.im;
            }
        }
    }
    let r = (re.transpose() * &re + im.transpose() * &im) * 2.0;
    (&r + r.transpose()) * 0.5
}

/// Radiated power by integrating `|F|²` over the grid.
pub fn pattern_power(basis: &EdgeBasisSet, ka: f64, i: &CVector, grid: &SphereGrid) -> f64 {
    let f = far_field(basis, ka, i, &grid.directions);
    f.iter().zip(&grid.weights).map(|(v, w)| w * (v[0].norm_sqr() + v[1].norm_sqr())).sum()
}

/// Envelope correlation of two patterns, `|∫ F_m·F_n* dΩ|² / (P_m P_n)`.
pub fn pattern_ecc(basis: &EdgeBasisSet, ka: f64, im: &CVector, in_: &CVector, grid: &SphereGrid) -> Result<f64> {
    let fm = far_field(basis, ka, im, &grid.directions);
    let fn_ = far_field(basis, ka, in_, &grid.directions);
    let mut cross = C64::default();
    let (mut pm, mut pn) = (0.0, 0.0);
    for ((a, b), w) in fm.iter().zip(&fn_).zip(&grid.weights) {
        cross += (a[0] * b[0].conj() + a[1] * b[1].conj()) * *w;
        pm += w * (a[0].norm_sqr() + a[1].norm_sqr());
        pn += w * (b[0].norm_sqr() + b[1].norm_sqr());
    }
    if !(pm > 0.0 && pn > 0.0) {
        return Err(Error::ZeroRadiatedPower);
    }
    Ok(cross.norm_sqr() / (pm * pn))
}

/// Envelope correlation from the radiation operator:
/// `|I_mᴴ R0 I_n|² / ((I_mᴴ R0 I_m)(I_nᴴ R0 I_n))`.
pub fn ecc(im: &CVector, in_: &CVector, r0: &OperatorMatrix) -> Result<f64> {
    let rm = &r0.data * im;
    let rn = &r0.data * in_;
    let pm = im.dotc(&rm).re;
    let pn = in_.dotc(&rn).re;
    if !(pm > 0.0 && pn > 0.0) {
        return Err(Error::ZeroRadiatedPower);
    }
    Ok((im.dotc(&rn).norm_sqr() / (pm * pn)).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::{assemble_z0, radiation_part};
    use crate::fixtures;
    use crate::geometry::build_edge_basis;

    #[test]
    fn grid_weights_cover_the_sphere() {
        let g = SphereGrid::new(18, 36);
        assert_eq!(g.len(), 648);
        assert!((g.weights.iter().sum::<f64>() - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn radiation_operator_is_converged_in_the_grid() {
        let b = build_edge_basis(&fixtures::rim_mesh()).unwrap();
        let ka = 12.0f64;
        let fine = radiation_matrix_on(&b, ka, &SphereGrid::new(ka as usize + 40, 2 * (ka as usize + 40)));
        let used = radiation_matrix(&b, ka);
        assert!((used - &fine).norm() < 1e-13 * fine.norm());
    }

    #[test]
    fn radiation_operator_is_semidefinite() {
        let b = build_edge_basis(&fixtures::rim_mesh()).unwrap();
        let r = radiation_matrix(&b, 3.0);
        let ev = r.symmetric_eigenvalues();
        let top = ev.max();
        assert!(ev.iter().all(|&e| e > -1e-13 * top), "{}", ev.min() / top);
    }

    #[test]
    fn zero_current_has_zero_pattern() {
        let b = build_edge_basis(&fixtures::star_mesh()).unwrap();
        let f = far_field(&b, 1.0, &CVector::zeros(5), &[(0.3, 0.2), (1.0, 2.0)]);
        assert!(f.iter().all(|v| v[0].norm() == 0.0 && v[1].norm() == 0.0));
    }

    #[test]
    fn pattern_power_matches_radiation_operator() {
        let b = build_edge_basis(&fixtures::star_mesh()).unwrap();
        let ka = 1.0;
        let r0 = radiation_part(&assemble_z0(&b, ka));
        let i = CVector::from_fn(5, |n, _| C64::new(1.0 + n as f64, 0.5 - n as f64));
        let p_op = 0.5 * i.dotc(&(&r0.data * &i)).re;
        let p_ff = pattern_power(&b, ka, &i, &SphereGrid::for_ka(ka));
        assert!((p_ff - p_op).abs() < 1e-2 * p_op, "{p_ff} {p_op}");
    }

    #[test]
    fn ecc_limits() {
        let b = build_edge_basis(&fixtures::star_mesh()).unwrap();
        let r0 = radiation_part(&assemble_z0(&b, 1.0));
        let i = CVector::from_fn(5, |n, _| C64::new(1.0, n as f64));
        assert!((ecc(&i, &i, &r0).unwrap() - 1.0).abs() < 1e-12);
        let scaled = &i * C64::new(-2.0, 3.0);
        assert!((ecc(&i, &scaled, &r0).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(ecc(&i, &CVector::zeros(5), &r0), Err(Error::ZeroRadiatedPower)));
    }
}

//! Dense complex kernels that nalgebra does not provide directly: an LU that
//! also solves with the adjoint (for condition estimation), Hermitian pencils
//! with a semidefinite right-hand side, and pivoted orthonormalisation.

use nalgebra::{Cholesky, SymmetricEigen};

use crate::{CMatrix, CVector, Error, Result, C64};

/// Partial-pivoting LU factorisation `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    /// Row `i` of `P A` is row `perm[i]` of `A`.
    perm: Vec<usize>,
    /// 1-norm condition estimate.
    pub condition: f64,
}

/// Above this condition estimate a factorisation is reported as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

impl Lu {
    pub fn new(a: &CMatrix) -> Result<Self> {
        Self::with_limit(a, CONDITION_LIMIT)
    }

    pub fn with_limit(a: &CMatrix, limit: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!("LU of a {}x{} matrix", n, a.ncols())));
        }
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) =
                (k..n)
                    .map(|i| (i, lu[(i, k)].norm()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot == 0.0 {
                return Err(Error::SingularMatrix(f64::INFINITY));
            }
            if p != k {
                lu.swap_rows(p, k);
                perm.swap(p, k);
            }
            let inv = lu[(k, k)].inv();
            for i in k + 1..n {
                lu[(i, k)] *= inv;
            }
            for j in k + 1..n {
                let u = lu[(k, j)];
                if u == C64::new(0.0, 0.0) {
                    continue;
                }
                for i in k + 1..n {
                    let l = lu[(i, k)];
                    lu[(i, j)] -= l * u;
                }
            }
        }
        let mut f = Lu { lu, perm, condition: 0.0 };
        f.condition = norm1(a) * f.inverse_norm1_estimate();
        if !(f.condition <= limit) {
            return Err(Error::SingularMatrix(f.condition));
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, b: &CVector) -> CVector {
        let n = self.dim();
        let mut x = CVector::from_fn(n, |i, _| b[self.perm[i]]);
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    /// Solve `A^H x = b`.
    pub fn solve_adjoint(&self, b: &CVector) -> CVector {
        let n = self.dim();
        // U^H z = b
        let mut z = b.clone();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.lu[(j, i)].conj() * z[j];
            }
            z[i] = s / self.lu[(i, i)].conj();
        }
        // L^H w = z
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in i + 1..n {
                s -= self.lu[(j, i)].conj() * z[j];
            }
            z[i] = s;
        }
        let mut x = CVector::zeros(n);
        for i in 0..n {
            x[self.perm[i]] = z[i];
        }
        x
    }

    /// Solve for every column of `b`.
    pub fn solve_matrix(&self, b: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(b.nrows(), b.ncols());
        for (j, col) in b.column_iter().enumerate() {
            out.set_column(j, &self.solve(&col.into_owned()));
        }
        out
    }

    // Hager's estimator of ||A^{-1}||_1.
    fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let mut x = CVector::from_element(n, C64::new(1.0 / n as f64, 0.0));
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = y.iter().map(|z| z.norm()).sum::<f64>();
            let xi = y.map(|z| if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) });
            let z = self.solve_adjoint(&xi);
            let (j, zmax) =
                z.iter().map(|v| v.norm()).enumerate().fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b });
            if zmax <= z.dotc(&x).re {
                break;
            }
            x = CVector::zeros(n);
            x[j] = C64::new(1.0, 0.0);
        }
        // alternative lower bound from a sign-alternating vector
        let alt = CVector::from_fn(n, |i, _| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(s * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
        });
        let alt_est = 2.0 * self.solve(&alt).iter().map(|z| z.norm()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt_est)
    }
}

pub fn norm1(a: &CMatrix) -> f64 {
    a.column_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `(A + A^H) / 2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(a));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
    (values, vectors)
}

/// `A x = λ B x` with `A` Hermitian and `B` Hermitian positive definite.
/// Eigenvalues ascending, eigenvectors `B`-orthonormal.
pub fn hermitian_definite_pencil(a: &CMatrix, b: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let chol = Cholesky::new(hermitian_part(b)).ok_or(Error::SingularB)?;
    let l = chol.l();
    let linv_a = l.solve_lower_triangular(&hermitian_part(a)).ok_or(Error::SingularB)?;
    let c = l.solve_lower_triangular(&linv_a.adjoint()).ok_or(Error::SingularB)?;
    let (values, y) = hermitian_eigen(&c);
    let x = l.adjoint().solve_upper_triangular(&y).ok_or(Error::SingularB)?;
    Ok((values, x))
}

const NOISE_MARGIN: f64 = 10.0;

/// Finite spectrum of `X x = λ R x` for Hermitian `X` and positive
/// semidefinite `R`.
///
/// Directions where `R` is numerically zero (eigenvalues at or below
/// `tol · max eig R`, or within ten times the magnitude of its most negative
/// eigenvalue) are eliminated through a Schur complement, so the
/// returned vectors satisfy the full pencil, not a truncated one. Vectors
/// are normalised so that `x_m^H R x_n = δ_mn`; eigenvalues ascend.
pub fn semidefinite_pencil(x: &CMatrix, r: &CMatrix, tol: f64) -> Result<(Vec<f64>, CMatrix)> {
    let n = r.nrows();
    if n == 0 {
        return Ok((vec![], CMatrix::zeros(0, 0)));
    }
    let (rv, ru) = hermitian_eigen(r);
    let rmax = rv.iter().cloned().fold(0.0, f64::max);
    if rmax <= 0.0 {
        return Ok((vec![], CMatrix::zeros(n, 0)));
    }
    // R is PSD in exact arithmetic; its most negative eigenvalue measures the
    // discretization noise, and directions within that noise are treated as null
    let noise = NOISE_MARGIN * (-rv[0]).max(0.0);
    let floor = (tol * rmax).max(noise);
    let keep: Vec<usize> = (0..n).filter(|&i| rv[i] > floor).collect();
    let drop: Vec<usize> = (0..n).filter(|&i| rv[i] <= floor).collect();
    let u1 = ru.select_columns(&keep);
    let u2 = ru.select_columns(&drop);
    let xh = hermitian_part(x);
    let x11 = u1.adjoint() * &xh * &u1;
    let (s, elim) = if drop.is_empty() {
        (x11, None)
    } else {
        let x12 = u1.adjoint() * &xh * &u2;
        let x22 = u2.adjoint() * &xh * &u2;
        let lu = Lu::with_limit(&x22, 1e14)?;
        // y2 = -X22^{-1} X21 y1
        let coupling = -lu.solve_matrix(&x12.adjoint());
        (&x11 + &x12 * &coupling, Some(coupling))
    };
    let scale: Vec<f64> = keep.iter().map(|&i| 1.0 / rv[i].sqrt()).collect();
    let d = CMatrix::from_diagonal(&CVector::from_iterator(keep.len(), scale.iter().map(|&v| C64::new(v, 0.0))));
    let (values, z) = hermitian_eigen(&(&d * s * &d));
    let y1 = &d * z;
    let mut modes = &u1 * &y1;
    if let (Some(c), false) = (elim, drop.is_empty()) {
        modes += &u2 * (c * &y1);
    }
    // fix the arbitrary phase: largest component real positive
    for mut col in modes.column_iter_mut() {
        let big = col.iter().cloned().fold(C64::new(0.0, 0.0), |a, b| if b.norm() > a.norm() { b } else { a });
        if big.norm() > 0.0 {
            let ph = big.conj() / big.norm();
            col *= ph;
        }
    }
    Ok((values, modes))
}

/// Orthonormal basis of the span of the columns of `a`, by column-pivoted
/// Gram–Schmidt (equivalent to pivoted QR). Columns whose residual falls to
/// `drop_tol · max column norm` or below are discarded.
pub fn orthonormal_columns(a: &CMatrix, drop_tol: f64) -> CMatrix {
    let n = a.nrows();
    let mut cols: Vec<CVector> = a.column_iter().map(|c| c.into_owned()).collect();
    let scale = cols.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut q: Vec<CVector> = Vec::new();
    if scale == 0.0 {
        return CMatrix::zeros(n, 0);
    }
    let mut alive: Vec<bool> = vec![true; cols.len()];
    loop {
        let best = (0..cols.len()).filter(|&i| alive[i]).map(|i| (i, cols[i].norm())).fold(
            None,
            |b: Option<(usize, f64)>, c| match b {
                Some(bb) if bb.1 >= c.1 => Some(bb),
                _ => Some(c),
            },
        );
        let Some((k, nrm)) = best else { break };
        if nrm <= drop_tol * scale {
            break;
        }
        alive[k] = false;
        let mut v = cols[k].clone() / C64::new(nrm, 0.0);
        // second pass against the accepted set keeps orthogonality at rounding level
        for qq in &q {
            let c = qq.dotc(&v);
            v -= qq * c;
        }
        let vn = v.norm();
        v /= C64::new(vn, 0.0);
        for i in 0..cols.len() {
            if alive[i] {
                let c = v.dotc(&cols[i]);
                let upd = &v * c;
                cols[i] -= upd;
            }
        }
        q.push(v);
    }
    if q.is_empty() {
        CMatrix::zeros(n, 0)
    } else {
        CMatrix::from_columns(&q)
    }
}

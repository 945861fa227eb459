//! Triangle and sphere quadrature rules.

use crate::Vec3;

/// Barycentric points and weights (summing to one) of the symmetric
/// three-point rule, exact for quadratics.
pub const TRI3: [([f64; 3], f64); 3] = [
    ([2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1.0 / 3.0),
    ([1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0], 1.0 / 3.0),
];

/// Physical points of the three-point rule; weights are `area / 3`.
pub fn tri3_points(p: &[Vec3; 3]) -> [Vec3; 3] {
    TRI3.map(|(b, _)| p[0] * b[0] + p[1] * b[1] + p[2] * b[2])
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Split a triangle into `4^levels` congruent children (test-oracle helper).
pub fn subdivide(p: &[Vec3; 3], levels: usize) -> Vec<[Vec3; 3]> {
    let mut tris = vec![*p];
    for _ in 0..levels {
        tris = tris
            .iter()
            .flat_map(|t| {
                let m01 = (t[0] + t[1]) / 2.0;
                let m12 = (t[1] + t[2]) / 2.0;
                let m20 = (t[2] + t[0]) / 2.0;
                [[t[0], m01, m20], [m01, t[1], m12], [m20, m12, t[2]], [m01, m12, m20]]
            })
            .collect();
    }
    tris
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((i - 2.0 / 15.0).abs() < 1e-14);
        let (x1, w1) = gauss_legendre(1);
        assert_eq!((x1[0], w1[0]), (0.0, 2.0));
    }

    #[test]
    fn tri3_exact_for_quadratics() {
        let p = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        let pts = tri3_points(&p);
        let i: f64 = pts.iter().map(|q| q.x * q.x / 3.0 * 0.5).sum();
        assert!((i - 1.0 / 12.0).abs() < 1e-15);
    }
}

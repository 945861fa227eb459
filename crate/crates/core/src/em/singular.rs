//! Closed-form integrals of `1/R` and `(r' − r)/R` over a flat triangle.

use crate::Vec3;

/// Returns `(∫ 1/|r−r'| dS', ∫ (r'−r)/|r−r'| dS')` over the triangle `p`.
///
/// Valid for any observation point not on the triangle's edges.
pub fn potential_integrals(r: &Vec3, p: &[Vec3; 3]) -> (f64, Vec3) {
    let cross = (p[1] - p[0]).cross(&(p[2] - p[0]));
    let n = cross.normalize();
    let d = n.dot(&(r - p[0]));
    let rho = r - n * d;
    let ad = d.abs();
    let scale = cross.norm().sqrt();
    let tiny = 1e-12 * scale;

    let mut scalar = 0.0;
    let mut in_plane = Vec3::zeros();
    for i in 0..3 {
        let (a, b) = (p[i], p[(i + 1) % 3]);
        let len = (b - a).norm();
        let l_hat = (b - a) / len;
        let u_hat = l_hat.cross(&n);
        let l_plus = (b - rho).dot(&l_hat);
        let l_minus = (a - rho).dot(&l_hat);
        let p0 = (a - rho).dot(&u_hat);
        let r0_sq = p0 * p0 + d * d;
        let r_plus = (b - r).norm();
        let r_minus = (a - r).norm();

        let f = if r0_sq.sqrt() < tiny {
            0.0 // every term using f carries a factor of P0 or R0²
        } else if l_plus < 0.0 {
            ((r_minus - l_minus) / (r_plus - l_plus)).ln()
        } else {
            ((r_plus + l_plus) / (r_minus + l_minus)).ln()
        };

        let mut s = p0 * f;
        if ad > tiny {
            s -= ad * ((p0 * l_plus / (r0_sq + ad * r_plus)).atan() - (p0 * l_minus / (r0_sq + ad * r_minus)).atan());
        }
        scalar += s;
        in_plane += u_hat * (0.5 * (r0_sq * f + l_plus * r_plus - l_minus * r_minus));
    }
    // r' − r = (ρ' − ρ) − d n
    (scalar, in_plane - n * (d * scalar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::quadrature::{subdivide, tri3_points};

    fn brute(r: &Vec3, p: &[Vec3; 3], levels: usize) -> (f64, Vec3) {
        let mut s = 0.0;
        let mut v = Vec3::zeros();
        for t in subdivide(p, levels) {
            let a = 0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm();
            for q in tri3_points(&t) {
                let rr = (q - r).norm();
                s += a / 3.0 / rr;
                v += (q - r) * (a / 3.0 / rr);
            }
        }
        (s, v)
    }

    fn tri() -> [Vec3; 3] {
        [Vec3::new(0.1, -0.2, 0.3), Vec3::new(1.0, 0.1, 0.2), Vec3::new(0.3, 0.9, 0.5)]
    }

    #[test]
    fn far_point_matches_quadrature() {
        let r = Vec3::new(3.0, -2.0, 4.0);
        let (s, v) = potential_integrals(&r, &tri());
        let (bs, bv) = brute(&r, &tri(), 5);
        assert!((s - bs).abs() < 1e-10 * bs.abs());
        assert!((v - bv).norm() < 1e-10 * bv.norm());
    }

    #[test]
    fn near_off_plane_point_matches_refined_quadrature() {
        let p = tri();
        let c = (p[0] + p[1] + p[2]) / 3.0;
        let n = (p[1] - p[0]).cross(&(p[2] - p[0])).normalize();
        let r = c + n * 0.3;
        let (s, v) = potential_integrals(&r, &p);
        let (bs, bv) = brute(&r, &p, 6);
        assert!((s - bs).abs() < 1e-6 * bs.abs(), "{s} {bs}");
        assert!((v - bv).norm() < 1e-6 * bv.norm());
    }

    #[test]
    fn in_plane_points_match_refined_quadrature() {
        let p = tri();
        // inside (singular) and outside on an edge extension line
        let inside = (p[0] * 0.5 + p[1] * 0.3 + p[2] * 0.2) as Vec3;
        let on_extension = p[0] + (p[1] - p[0]) * 1.7;
        let outside = p[0] * 1.4 + p[1] * 0.1 - p[2] * 0.5;
        for r in [on_extension, outside] {
            let (s, v) = potential_integrals(&r, &p);
            let (bs, bv) = brute(&r, &p, 6);
            assert!((s - bs).abs() < 1e-5 * bs.abs(), "{s} {bs}");
            assert!((v - bv).norm() < 1e-5 * bv.norm());
        }
        // singular self point: refined quadrature converges slowly, compare loosely
        let (s, _) = potential_integrals(&inside, &p);
        let (bs, _) = brute(&inside, &p, 7);
        assert!((s - bs).abs() < 2e-2 * s, "{s} {bs}");
    }

    #[test]
    fn equilateral_centroid_closed_form() {
        // ∫ 1/R over an equilateral triangle of side a seen from its centroid is √3·a·ln(2+√3)
        let a = 2.0;
        let p = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(a, 0.0, 0.0), Vec3::new(a / 2.0, a * 3f64.sqrt() / 2.0, 0.0)];
        let c = (p[0] + p[1] + p[2]) / 3.0;
        let (s, v) = potential_integrals(&c, &p);
        let want = 3f64.sqrt() * a * (2.0 + 3f64.sqrt()).ln();
        assert!((s - want).abs() < 1e-12 * want);
        assert!(v.norm() < 1e-12);
    }
}

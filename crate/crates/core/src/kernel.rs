//! Closed forms for a straight current segment from `a` to `b`.
//!
//! Every routine returns a purely geometric factor; callers multiply by
//! `current / 4π`.

use crate::scalar::Real;
use crate::vector::Vec3;

/// `∫₀^ℓ ds / |x − a − s û|`.
///
/// Equals `2 atanh(ℓ / (|x−a| + |x−b|))`, which stays well conditioned everywhere
/// except on the segment itself.
#[inline]
pub fn potential_factor<T: Real>(a: Vec3<T>, b: Vec3<T>, x: Vec3<T>) -> T {
    let l = (b - a).norm();
    let s = (x - a).norm() + (x - b).norm();
    if l == T::zero() {
        return T::zero();
    }
    T::lit(2.0) * (l / s).atanh()
}

/// `∫ dℓ × (x − x′) / |x − x′|³` along the segment.
///
/// With `Ra = x − a`, `Rb = x − b` this is
/// `(Ra × Rb)(|Ra| + |Rb|) / (|Ra||Rb|(|Ra||Rb| + Ra·Rb))`.
#[inline]
pub fn field_factor<T: Real>(a: Vec3<T>, b: Vec3<T>, x: Vec3<T>) -> Vec3<T> {
    let ra = x - a;
    let rb = x - b;
    let na = ra.norm();
    let nb = rb.norm();
    let den = na * nb * (na * nb + ra.dot(rb));
    if den == T::zero() {
        return Vec3::zero();
    }
    ra.cross(rb) * ((na + nb) / den)
}

/// Distance from `x` to the closed segment `[a, b]`.
pub fn distance_to_segment<T: Real>(a: Vec3<T>, b: Vec3<T>, x: Vec3<T>) -> T {
    let d = b - a;
    let l2 = d.norm_sq();
    if l2 == T::zero() {
        return (x - a).norm();
    }
    let t = ((x - a).dot(d) / l2).max(T::zero()).min(T::one());
    (x - (a + d * t)).norm()
}

/// `∫_{z1}^{z2} dz ∫₀^ℓ ds / |(px, py, z) − a − s û|`: the segment kernel
/// integrated along a vertical line.
///
/// Uses the closed-form double antiderivative in coordinates measured from the
/// feet of the common perpendicular of the two lines. The vertical line is
/// anchored at height `a.z`, which keeps those offsets of order `|w⊥|/sinθ`
/// instead of `1/sin²θ`.
pub fn zline_factor<T: Real>(a: Vec3<T>, b: Vec3<T>, px: T, py: T, z1: T, z2: T) -> T {
    let dv = b - a;
    let l = dv.norm();
    if l == T::zero() || z1 == z2 {
        return T::zero();
    }
    let u = dv * (T::one() / l);
    let wx = px - a.x;
    let wy = py - a.y;
    let (t1, t2) = (z1 - a.z, z2 - a.z);
    let c = u.z;
    let s2 = u.x * u.x + u.y * u.y;
    let s = s2.sqrt();
    let wu = wx * u.x + wy * u.y;

    if s < T::lit(1e-8) {
        // parallel lines: integrand depends on q = w·u + t c − s only
        let d = (wx * wx + wy * wy).sqrt();
        let g = |q: T| q * (q / d).asinh() - (q * q + d * d).sqrt();
        let f = |ss: T, t: T| -c * g(wu + t * c - ss);
        return f(l, t2) - f(T::zero(), t2) - f(l, t1) + f(T::zero(), t1);
    }

    let s0 = wu / s2;
    let t0 = s0 * c;
    let d = (wx * u.y - wy * u.x).abs() / s;
    let d2 = d * d;

    let lnp = |arg: T, b2: T, r: T| -> T {
        if arg > T::zero() {
            (arg + r).ln()
        } else {
            (b2 / (r - arg)).ln()
        }
    };
    let f = |sg: T, tau: T| -> T {
        let p = tau - sg * c;
        let r = (p * p + d2 + sg * sg * s2).sqrt();
        let mut v = T::zero();
        if sg != T::zero() {
            v = v + sg * lnp(p, d2 + sg * sg * s2, r);
        }
        if tau != T::zero() {
            v = v + tau * lnp(sg - tau * c, d2 + tau * tau * s2, r);
        }
        if d != T::zero() {
            v = v - (d / s) * ((d2 * c + sg * tau * s2) / (d * r * s)).atan();
        }
        v
    };
    let (sa, sb) = (-s0, l - s0);
    let (ta, tb) = (t1 - t0, t2 - t0);
    f(sb, tb) - f(sa, tb) - f(sb, ta) + f(sa, ta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{AdaptiveOptions, PanelRule};
    use std::convert::Infallible;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    fn brute_zline(a: Vec3<f64>, b: Vec3<f64>, px: f64, py: f64, z1: f64, z2: f64) -> f64 {
        let rule = PanelRule::<f64>::default();
        let opts = AdaptiveOptions { rel_tol: 1e-13, initial_panels: 8, ..Default::default() };
        rule.integrate(&[z1, z2], &opts, |z| -> Result<f64, Infallible> {
            Ok(potential_factor(a, b, v(px, py, z)))
        })
        .unwrap()
        .value
    }

    #[test]
    fn potential_matches_quadrature() {
        let (a, b, x) = (v(0.1, -0.2, 0.3), v(0.7, 0.4, -0.1), v(0.5, 0.9, 0.6));
        let rule = PanelRule::<f64>::default();
        let l = (b - a).norm();
        let u = (b - a) * (1.0 / l);
        let q = rule
            .integrate(&[0.0, l], &AdaptiveOptions::default(), |s| -> Result<f64, Infallible> {
                Ok(1.0 / (x - a - u * s).norm())
            })
            .unwrap();
        assert!((potential_factor(a, b, x) - q.value).abs() < 1e-12);
    }

    #[test]
    fn field_direction_and_infinite_wire_limit() {
        // z-directed segment, point on +x: field along +y
        let f = field_factor(v(0.0, 0.0, -1.0), v(0.0, 0.0, 1.0), v(0.5, 0.0, 0.0));
        assert!(f.y > 0.0 && f.x.abs() < 1e-15 && f.z.abs() < 1e-15);
        // long wire: 2/ρ
        let f = field_factor(v(0.0, 0.0, -1e5), v(0.0, 0.0, 1e5), v(0.25, 0.0, 0.0));
        assert!((f.y - 8.0).abs() < 1e-8);
    }

    #[test]
    fn zline_matches_quadrature_in_generic_positions() {
        let cases = [
            (v(0.1, -0.2, 0.3), v(0.7, 0.4, -0.1), 0.5, 0.9, -3.0, 0.7),
            (v(0.0, 0.5, 0.0), v(0.0, 0.49, 0.1), 0.05, 0.2, -10.0, 10.0),
            (v(-0.3, 0.2, 0.4), v(0.3, 0.25, 0.41), 0.0, 0.0, -2.0, 5.0),
            // line crosses above the segment's shadow
            (v(-1.0, 0.0, 0.5), v(1.0, 0.0, 0.5), 0.0, 0.3, -4.0, 4.0),
        ];
        for (a, b, px, py, z1, z2) in cases {
            let exact = zline_factor(a, b, px, py, z1, z2);
            let q = brute_zline(a, b, px, py, z1, z2);
            assert!((exact - q).abs() < 1e-9 * q.abs().max(1.0), "{exact} vs {q}");
        }
    }

    #[test]
    fn zline_parallel_and_near_parallel_branches_agree() {
        let a = v(0.2, 0.1, -0.4);
        let px = 0.6;
        let py = -0.3;
        let par = zline_factor(a, v(0.2, 0.1, 0.6), px, py, -5.0, 2.0);
        let near = zline_factor(a, v(0.2 + 1e-6, 0.1, 0.6), px, py, -5.0, 2.0);
        let q = brute_zline(a, v(0.2, 0.1, 0.6), px, py, -5.0, 2.0);
        assert!((par - q).abs() < 1e-10 * q.abs(), "{par} vs {q}");
        assert!((near - par).abs() < 1e-6 * q.abs(), "{near} vs {par}");
    }

    #[test]
    fn zline_antisymmetric_in_limits_and_segment_orientation() {
        let (a, b) = (v(0.1, -0.2, 0.3), v(0.7, 0.4, -0.1));
        let x = zline_factor(a, b, 0.3, 0.1, -1.0, 2.0);
        assert!((x + zline_factor(a, b, 0.3, 0.1, 2.0, -1.0)).abs() < 1e-13);
        assert!((x - zline_factor(b, a, 0.3, 0.1, -1.0, 2.0)).abs() < 1e-12);
    }
}

use std::f64::consts::PI;

use abgauge_core::boyer::{boyer_energy, MovingChargeField};
use abgauge_core::field::{Gauge, GaugePotential, LambdaSpec, SourceField, Tolerances};
use abgauge_core::modes::{completeness_residual, polarization_basis, GridSpec, ModeGrid};
use abgauge_core::path::{ab_phase, gauge_dependence_report, ParticlePath, ParticleState};
use abgauge_core::source::{discretize, CurrentSource};
use abgauge_core::vector::Vec3;
use proptest::prelude::*;

fn vec3(range: f64) -> impl Strategy<Value = Vec3<f64>> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn nonzero_k() -> impl Strategy<Value = Vec3<f64>> {
    vec3(50.0).prop_filter("k away from zero", |k| k.norm() > 1e-3)
}

fn ideal(flux: f64) -> SourceField<f64> {
    let s = CurrentSource::ideal_solenoid(Vec3::zero(), Vec3::unit_z(), 0.5, flux);
    SourceField::new(&s, 0, Tolerances::default()).unwrap()
}

fn small_grid(src: &CurrentSource<f64>) -> ModeGrid<f64> {
    ModeGrid::from_source(GridSpec::symmetric(PI / 4.0, 6), src, 1).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn polarization_triad(k in nonzero_k()) {
        let (e1, e2) = polarization_basis(k).unwrap();
        let kh = k.normalized().unwrap();
        prop_assert!(e1.dot(kh).abs() < 1e-12 && e2.dot(kh).abs() < 1e-12);
        prop_assert!((e1.dot(e2)).abs() < 1e-12);
        prop_assert!((e1.cross(e2).dot(kh) - 1.0).abs() < 1e-12);
        prop_assert!(completeness_residual(k).unwrap() < 1e-12);
    }

    #[test]
    fn moving_charge_field_is_transverse(q in vec3(2.0), p in vec3(3.0), d in vec3(2.0)) {
        prop_assume!(d.norm() > 1e-2);
        let part = ParticleState::new(1.3, 0.7, p, q).unwrap();
        let b = MovingChargeField::new(part).eval(q + d).unwrap();
        let scale = b.norm() * d.norm() + 1e-300;
        prop_assert!(b.dot(d).abs() < 1e-12 * scale);
        prop_assert!(b.dot(part.velocity()).abs() < 1e-12 * b.norm() * part.velocity().norm() + 1e-300);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reversal_and_concatenation(
        cx in -0.3..0.3f64, cy in -0.3..0.3f64, r in 0.8..2.0f64,
        a in -3.0..3.0f64, m in 0.05..0.95f64, span in 0.2..3.0f64,
    ) {
        let f = ideal(1.7);
        let pot = GaugePotential::coulomb(&f);
        let c = Vec3::new(cx, cy, 0.2);
        let b = a + span;
        let mid = a + m * span;
        let whole = ParticlePath::arc(c, Vec3::unit_z(), r, a, b);
        let fwd = ab_phase(&whole, &pot, 1.0).unwrap().value;
        let back = ab_phase(&whole.clone().reverse(), &pot, 1.0).unwrap().value;
        prop_assert!((fwd + back).abs() < 1e-12 * fwd.abs().max(1.0));
        let p1 = ab_phase(&ParticlePath::arc(c, Vec3::unit_z(), r, a, mid), &pot, 1.0).unwrap().value;
        let p2 = ab_phase(&ParticlePath::arc(c, Vec3::unit_z(), r, mid, b), &pot, 1.0).unwrap().value;
        prop_assert!((p1 + p2 - fwd).abs() < 1e-11 * fwd.abs().max(1.0));
    }

    #[test]
    fn phase_is_bilinear_in_e_and_g(e in -3.0..3.0f64, g in -3.0..3.0f64, r in 0.8..2.0f64) {
        let s = CurrentSource::ideal_solenoid(Vec3::zero(), Vec3::unit_z(), 0.5, 1.1);
        let base = SourceField::new(&s, 0, Tolerances::default()).unwrap();
        let scaled = SourceField::new(&s.clone().with_strength(g), 0, Tolerances::default()).unwrap();
        let path = ParticlePath::arc(Vec3::zero(), Vec3::unit_z(), r, 0.1, 2.3);
        let unit = ab_phase(&path, &GaugePotential::coulomb(&base), 1.0).unwrap().value;
        let v = ab_phase(&path, &GaugePotential::coulomb(&scaled), e).unwrap().value;
        prop_assert!((v - e * g * unit).abs() < 1e-13 * unit.abs().max(1.0));
    }

    #[test]
    fn shifted_gauge_obeys_the_boundary_law(
        amp in -2.0..2.0f64, width in 0.4..2.0f64, c in vec3(1.0), a in -3.0..3.0f64, span in 0.2..4.0f64,
    ) {
        let f = ideal(2.0);
        let lam = LambdaSpec::gaussian(amp, width, c);
        let pots = [GaugePotential::coulomb(&f), GaugePotential::new(&f, Gauge::shifted(lam.clone()))];
        let open = ParticlePath::arc(Vec3::new(0.1, 0.0, 0.3), Vec3::unit_z(), 1.3, a, a + span);
        let rep = gauge_dependence_report(&open, &pots, 1.0).unwrap();
        let pair = &rep.pairs[0];
        let expected = -(lam.value(open.end()) - lam.value(open.start()));
        prop_assert!((pair.boundary_term - expected).abs() < 1e-14);
        prop_assert!(pair.residual.abs() < 1e-10, "{:?}", pair);
        let closed = ParticlePath::circle(Vec3::new(0.1, 0.0, 0.3), Vec3::unit_z(), 1.3);
        let rep = gauge_dependence_report(&closed, &pots, 1.0).unwrap();
        prop_assert!(rep.max_abs_difference() < 1e-10);
    }

    #[test]
    fn polygon_loops_close_and_conserve_current(
        verts in prop::collection::vec(vec3(1.0), 3..8), k in nonzero_k(), g in -2.0..2.0f64,
    ) {
        let src = CurrentSource::polyline(verts.clone(), 1.0);
        let set = discretize(&src, 2).unwrap();
        prop_assert!(set.closure_residual() < 1e-12);
        prop_assert!(set.endpoint_gap() < 1e-12);
        prop_assert!(set.divergence_residual(1.0) < 1e-10);
        let jk = set.fourier_current(k);
        prop_assert!(jk.dot_real(k).norm() <= 1e-10 * k.norm() * jk.norm() + 1e-14);
        let jg = discretize(&src.with_strength(g), 2).unwrap().fourier_current(k);
        let d = jg.re() - jk.re() * g;
        let di = jg.im() - jk.im() * g;
        prop_assert!(d.norm() + di.norm() <= 1e-14 * jk.norm().max(1e-300) * g.abs().max(1.0) + 1e-300);
    }

    #[test]
    fn potentials_are_linear_in_g(g in -3.0..3.0f64, x in vec3(2.0)) {
        let base = CurrentSource::circular_loop(Vec3::zero(), Vec3::unit_x(), 0.5, 1.0);
        let f1 = SourceField::new(&base, 1, Tolerances::default()).unwrap();
        prop_assume!(f1.clearance(x).is_none_or(|(d, ex)| d > 4.0 * ex));
        let fg = SourceField::new(&base.clone().with_strength(g), 1, Tolerances::default()).unwrap();
        let a1 = f1.coulomb_a(x).unwrap();
        let ag = fg.coulomb_a(x).unwrap();
        prop_assert!((ag - a1 * g).norm() <= 1e-13 * a1.norm() * g.abs().max(1.0));
        let b1 = f1.b_field(x).unwrap();
        let bg = fg.b_field(x).unwrap();
        prop_assert!((bg - b1 * g).norm() <= 1e-13 * b1.norm() * g.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn boyer_energy_is_linear_in_e_g_and_p(
        e in 0.2..2.0f64, g in -2.0..2.0f64, s in -2.0..2.0f64, p in vec3(1.0), q in vec3(0.8),
    ) {
        prop_assume!(p.norm() > 1e-2);
        let src = CurrentSource::circular_loop(Vec3::zero(), Vec3::unit_x(), 0.5, 1.0);
        let grid = small_grid(&src);
        let grid_g = small_grid(&src.with_strength(g));
        let unit = boyer_energy(&grid, &ParticleState::new(1.0, 1.0, p, q).unwrap()).value;
        prop_assume!(unit.abs() > 1e-8);
        let ve = boyer_energy(&grid, &ParticleState::new(e, 1.0, p, q).unwrap()).value;
        let vg = boyer_energy(&grid_g, &ParticleState::new(1.0, 1.0, p, q).unwrap()).value;
        let vp = boyer_energy(&grid, &ParticleState::new(1.0, 1.0, p * s, q).unwrap()).value;
        prop_assert!(rel(ve, e * unit) < 1e-12);
        prop_assert!((vg - g * unit).abs() < 1e-12 * unit.abs().max(1e-300) * g.abs().max(1.0));
        prop_assert!((vp - s * unit).abs() < 1e-12 * unit.abs() * s.abs().max(1.0));
    }
}

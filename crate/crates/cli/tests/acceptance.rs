//! Acceptance criteria 1-10, each with its tolerance and time budget. Prints one
//! PASS/FAIL line per criterion and exits non-zero if any fails.

use std::f64::consts::FRAC_PI_2;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use abgauge_core::boyer::hg_cancellation;
use abgauge_core::field::{extrapolated_divergence, Gauge, GaugePotential, LambdaSpec, SourceField, Tolerances};
use abgauge_core::modes::{
    axial_second_order_terms, completeness_residual, delta_e_coherent, delta_eps_coulomb, polarization_basis, reconstruct_a,
    GridSpec, ModeGauge, ModeGrid, DEFAULT_AXIAL_TAPER,
};
use abgauge_core::path::{ab_phase, enclosed_flux, gauge_dependence_report, ParticlePath, ParticleState};
use abgauge_core::source::CurrentSource;
use abgauge_core::vector::Vec3;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const R: f64 = 0.5;

fn canonical_loop() -> CurrentSource<f64> {
    CurrentSource::circular_loop(Vec3::zero(), Vec3::unit_x(), R, 1.0)
}

fn canonical_solenoid() -> SourceField<f64> {
    let s = CurrentSource::finite_solenoid(Vec3::zero(), Vec3::unit_x(), R, 2.0, 12.5, 1.0);
    SourceField::new(&s, 2, Tolerances::default()).unwrap()
}

fn particle() -> ParticleState<f64> {
    ParticleState::new(1.0, 1.0, Vec3::new(0.0, 0.6, 0.8), Vec3::new(0.9, 0.9, 0.8)).unwrap()
}

fn shifted() -> Gauge<f64> {
    Gauge::shifted(LambdaSpec::gaussian(0.7, 1.0, Vec3::new(0.8, 0.0, 0.0)))
}

fn rel(v: f64, r: f64) -> f64 {
    (v - r).abs() / r.abs()
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn polarization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = Vec3::new(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0));
        let (e1, e2) = polarization_basis(k).unwrap();
        let kh = k.normalized().unwrap();
        let (a, b, c) = (e1.to_f64(), e2.to_f64(), kh.to_f64());
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a[i] * a[j] + b[i] * b[j] - (delta - c[i] * c[j])).abs());
            }
        }
        worst = worst.max(completeness_residual(k).unwrap());
    }
    outcome(worst < 1e-12, format!("max elementwise residual {worst:.2e} < 1e-12"))
}

fn transversality() -> Outcome {
    let f = SourceField::new(&canonical_loop(), 2, Tolerances::default()).unwrap();
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut worst = 0.0f64;
    for i in 0..100 {
        let z = 1.0 - (2.0 * i as f64 + 1.0) / 100.0;
        let r = (1.0 - z * z).sqrt();
        let x = Vec3::new(r * (golden * i as f64).cos(), r * (golden * i as f64).sin(), z) * (2.0 * R);
        let a = f.coulomb_a(x).unwrap();
        let (div, _) = extrapolated_divergence(|y| f.coulomb_a(y), x, f.derivative_step()).unwrap();
        worst = worst.max(div.abs() * f.length_scale() / a.norm());
    }
    outcome(worst < 1e-6, format!("max |div A| L/|A| over 100 probes {worst:.2e} < 1e-6"))
}

fn closed_invariance() -> Outcome {
    let f = canonical_solenoid();
    let path = ParticlePath::circle(Vec3::zero(), Vec3::unit_x(), 3.0 * R);
    let pots = [GaugePotential::coulomb(&f), GaugePotential::axial(&f), GaugePotential::new(&f, shifted())];
    let rep = gauge_dependence_report(&path, &pots, 1.0).unwrap();
    let v = rep.max_abs_difference() / rep.max_abs_phase();
    outcome(v < 1e-6, format!("max pairwise relative phase difference {v:.2e} < 1e-6"))
}

fn stokes() -> Outcome {
    let f = canonical_solenoid();
    let path = ParticlePath::circle(Vec3::zero(), Vec3::unit_x(), 3.0 * R);
    let phase = ab_phase(&path, &GaugePotential::coulomb(&f), 1.0).unwrap().value;
    let flux = enclosed_flux(&path, &f).unwrap().value;
    let finite = rel(phase, -flux);
    let ideal = SourceField::new(&CurrentSource::ideal_solenoid(Vec3::zero(), Vec3::unit_x(), R, 2.0), 0, Tolerances::default()).unwrap();
    let ip = ab_phase(&path, &GaugePotential::coulomb(&ideal), 1.0).unwrap().value;
    let iflux = enclosed_flux(&path, &ideal).unwrap().value;
    let closed_form = rel(ip, -2.0).max(rel(iflux, 2.0));
    outcome(finite < 1e-4 && closed_form < 1e-10, format!("finite {finite:.2e} < 1e-4, ideal {closed_form:.2e} < 1e-10"))
}

fn open_path() -> Outcome {
    let f = canonical_solenoid();
    let path = ParticlePath::arc(Vec3::new(0.0, 1.5 * R, 0.0), Vec3::unit_x(), 3.0 * R, -FRAC_PI_2, FRAC_PI_2);
    let pots = [GaugePotential::coulomb(&f), GaugePotential::axial(&f)];
    let rep = gauge_dependence_report(&path, &pots, 1.0).unwrap();
    let coulomb = rep.phases[0].value;
    let p = &rep.pairs[0];
    // boundary term from χ evaluated directly at the endpoints
    let chi = |x| f.axial_chi(x).unwrap().value;
    let law = (rep.phases[1].value - coulomb - (chi(path.end()) - chi(path.start()))).abs();
    let tol = 1e-6 * coulomb.abs();
    let combined = tol + p.quadrature_error;
    let material = p.difference.abs() > 10.0 * combined;
    outcome(
        law < tol && material,
        format!("boundary residual {law:.2e} < {tol:.2e}; |dPhi| {:.3e} > 10 x {combined:.2e}", p.difference.abs()),
    )
}

fn default_grid() -> ModeGrid<f64> {
    ModeGrid::from_source(GridSpec::for_radius(R), &canonical_loop(), 2).unwrap()
}

fn pt_coherent(grid: &ModeGrid<f64>) -> Outcome {
    let p = particle();
    let eps = delta_eps_coulomb(grid, &p).value;
    let coh = delta_e_coherent(grid, &p, ModeGauge::Coulomb).value;
    let v = rel(eps, coh);
    outcome(v < 1e-12, format!("delta_eps {eps:.6e} vs coherent {coh:.6e}: rel {v:.2e} < 1e-12"))
}

const PROBES: [[f64; 3]; 5] = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.7, 0.3], [0.3, -0.6, 0.6], [-0.6, 0.2, -0.7]];

fn faithfulness(grid: &ModeGrid<f64>) -> Outcome {
    let f = SourceField::new(&canonical_loop(), 2, Tolerances::default()).unwrap();
    let errors = |g: &ModeGrid<f64>| -> Vec<f64> {
        PROBES
            .iter()
            .map(|p| {
                let x = Vec3::from_f64(*p);
                let a = f.coulomb_a(x).unwrap();
                (reconstruct_a(g, x).value - a).norm() / a.norm()
            })
            .collect()
    };
    let base = errors(grid);
    let fine = errors(&ModeGrid::from_source(grid.spec().refined(), &canonical_loop(), 2).unwrap());
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let (b, r) = (max(&base), max(&fine));
    let fmt = |v: &[f64]| v.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(",");
    outcome(b < 2e-2 && r < b, format!("max error {b:.3e} < 2e-2, at dk/2 {r:.3e} < {b:.3e}; per probe [{}] -> [{}]", fmt(&base), fmt(&fine)))
}

fn axial(grid: &ModeGrid<f64>) -> Outcome {
    let f = SourceField::new(&canonical_loop(), 2, Tolerances::default()).unwrap();
    let p = particle();
    let g = grid.retaper(Some(DEFAULT_AXIAL_TAPER));
    let t = axial_second_order_terms(&g, &p).unwrap();
    let reference = -p.charge * p.velocity().dot(f.axial_a(p.position).unwrap());
    let v = rel(2.0 * t.term1.re, reference);
    let ratio = t.real_to_imaginary();
    outcome(
        v < 2e-2 && ratio < 1e-10,
        format!("2 Re term1 {:.6e} vs {reference:.6e}: rel {v:.2e} < 2e-2; Re/Im {ratio:.1e} < 1e-10", 2.0 * t.term1.re),
    )
}

fn boyer(grid: &ModeGrid<f64>) -> Outcome {
    let p = particle();
    let c = hg_cancellation(grid, &p);
    let eps = delta_eps_coulomb(grid, &p).value;
    let sign = rel(c.boyer, -eps);
    let cancel = c.residual.abs() / c.boyer.abs();
    outcome(sign < 1e-2 && cancel < 1e-10, format!("boyer {:.6e} vs -delta_eps: rel {sign:.2e} < 1e-2; residual {cancel:.1e} < 1e-10", c.boyer))
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_abgauge");
    let dir = std::env::temp_dir().join(format!("abgauge-acceptance-{}", std::process::id()));
    let mut reports = Vec::new();
    let mut slowest = Duration::ZERO;
    for run in ["a", "b"] {
        let out = dir.join(run);
        let _ = std::fs::remove_dir_all(&out);
        let t = Instant::now();
        let status = Command::new(bin).args(["--quiet", "--out", out.to_str().unwrap(), "verify"]).status().unwrap();
        slowest = slowest.max(t.elapsed());
        if !status.success() {
            return outcome(false, format!("verify exited with {status}"));
        }
        reports.push(std::fs::read(out.join("canonical.json")).unwrap());
    }
    let _ = std::fs::remove_dir_all(&dir);
    let same = reports[0] == reports[1];
    let fast = slowest < Duration::from_secs(300);
    outcome(same && fast, format!("reports identical: {same}; slowest verify {:.1}s < 300s", slowest.as_secs_f64()))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: u32, name: &str, budget: u64, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        let s = t.elapsed().as_secs_f64();
        let ok = o.passed && s < budget as f64;
        if !ok {
            failed += 1;
        }
        println!("{} criterion {n:>2} {name}: {} [{s:.1}s / {budget}s]", if ok { "PASS" } else { "FAIL" }, o.detail);
    };
    report(1, "polarization completeness", 1, &mut polarization);
    report(2, "transversality", 30, &mut transversality);
    report(3, "closed-path gauge invariance", 60, &mut closed_invariance);
    report(4, "Stokes consistency", 60, &mut stokes);
    report(5, "open-path boundary law", 120, &mut open_path);
    let t = Instant::now();
    let grid = default_grid();
    let build = t.elapsed().as_secs();
    report(6, "perturbative/coherent equality", 60 - build.min(59), &mut || pt_coherent(&grid));
    report(7, "mode-grid faithfulness", 300, &mut || faithfulness(&grid));
    report(8, "axial second-order identity", 120 - build.min(119), &mut || axial(&grid));
    report(9, "Boyer sign and cancellation", 120 - build.min(119), &mut || boyer(&grid));
    report(10, "end-to-end determinism", 600, &mut determinism);
    if failed == 0 {
        println!("acceptance: all 10 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}

//! Named identity checks and the shared, lazily built state they draw on.

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use abgauge_core::boyer::hg_cancellation;
use abgauge_core::field::{extrapolated_divergence, Gauge, GaugePotential, SourceField};
use abgauge_core::modes::{
    axial_second_order_terms, completeness_residual, delta_e_coherent, delta_e_coherent_axial, delta_eps_coulomb,
    mode_identity_residual, polarization_basis, reconstruct_a, reconstruct_axial_a, ModeGauge, ModeGrid,
};
use abgauge_core::path::{ab_phase, enclosed_flux, gauge_dependence_report, GaugeReport, ParticlePath, ParticleState};
use abgauge_core::source::discretize;
use abgauge_core::vector::Vec3;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::report::{Appendix, CheckRecord, Item};
use crate::scenario::{Scenario, SourceSpec, PRIMARY};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    PolarizationCompleteness,
    Transversality,
    ClosedPathInvariance,
    Stokes,
    OpenPathBoundaryLaw,
    OpenPathGaugeDependence,
    PtCoherentEquality,
    AxialIdentity,
    PurelyImaginary,
    BoyerSign,
    BoyerCancellation,
    ModeGridFaithfulness,
    GaugeDiscrepancy,
}

impl CheckName {
    pub const ALL: [CheckName; 13] = [
        CheckName::PolarizationCompleteness,
        CheckName::Transversality,
        CheckName::ClosedPathInvariance,
        CheckName::Stokes,
        CheckName::OpenPathBoundaryLaw,
        CheckName::OpenPathGaugeDependence,
        CheckName::PtCoherentEquality,
        CheckName::AxialIdentity,
        CheckName::PurelyImaginary,
        CheckName::BoyerSign,
        CheckName::BoyerCancellation,
        CheckName::ModeGridFaithfulness,
        CheckName::GaugeDiscrepancy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::PolarizationCompleteness => "polarization-completeness",
            CheckName::Transversality => "transversality",
            CheckName::ClosedPathInvariance => "closed-path-invariance",
            CheckName::Stokes => "stokes",
            CheckName::OpenPathBoundaryLaw => "open-path-boundary-law",
            CheckName::OpenPathGaugeDependence => "open-path-gauge-dependence",
            CheckName::PtCoherentEquality => "pt-coherent-equality",
            CheckName::AxialIdentity => "axial-identity",
            CheckName::PurelyImaginary => "purely-imaginary",
            CheckName::BoyerSign => "boyer-sign",
            CheckName::BoyerCancellation => "boyer-cancellation",
            CheckName::ModeGridFaithfulness => "mode-grid-faithfulness",
            CheckName::GaugeDiscrepancy => "gauge-discrepancy",
        }
    }
}

impl fmt::Display for CheckName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tolerance keys with their defaults. Keys ending in `-factor` are materiality
/// margins and ignore the tolerance scale.
pub const TOLERANCE_KEYS: [(&str, f64); 17] = [
    ("polarization-completeness", 1e-12),
    ("transversality", 1e-6),
    ("k-transversality", 1e-10),
    ("closed-path-invariance", 1e-6),
    ("stokes", 1e-4),
    ("stokes-ideal", 1e-10),
    ("open-path-boundary-law", 1e-6),
    ("open-path-gauge-dependence-factor", 10.0),
    ("pt-coherent-equality", 1e-12),
    ("axial-identity", 2e-2),
    ("axial-exact", 1e-10),
    ("purely-imaginary", 1e-10),
    ("boyer-sign", 1e-2),
    ("boyer-reference", 1e-2),
    ("boyer-cancellation", 1e-10),
    ("mode-grid-faithfulness", 2e-2),
    ("gauge-discrepancy-factor", 10.0),
];

/// Keys whose comparisons are limited by the lattice extent.
const LATTICE_LIMITED: [&str; 3] = ["axial-identity", "boyer-reference", "mode-grid-faithfulness"];

/// `|v − r| / |r|`, zero when the two agree exactly (including both zero).
pub fn rel(v: f64, r: f64) -> f64 {
    if v == r {
        0.0
    } else {
        (v - r).abs() / r.abs()
    }
}

/// Cached per-path gauge comparison.
struct PathRun {
    name: String,
    source: String,
    path: ParticlePath<f64>,
    gauges: Vec<Gauge<f64>>,
    report: OnceCell<GaugeReport<f64>>,
}

pub struct Context<'a> {
    pub scenario: &'a Scenario,
    fields: BTreeMap<String, OnceCell<SourceField<f64>>>,
    grid: OnceCell<ModeGrid<f64>>,
    axial_grid: OnceCell<ModeGrid<f64>>,
    paths: Vec<PathRun>,
    pub appendix: Option<Appendix>,
    pub timings: Vec<(CheckName, f64)>,
    quiet: bool,
}

impl<'a> Context<'a> {
    pub fn new(scenario: &'a Scenario, quiet: bool) -> Self {
        let mut fields = BTreeMap::new();
        fields.insert(PRIMARY.to_string(), OnceCell::new());
        for k in scenario.extra_sources.keys() {
            fields.insert(k.clone(), OnceCell::new());
        }
        let paths = scenario
            .paths
            .iter()
            .map(|p| PathRun {
                name: p.name.clone(),
                source: p.source_name().to_string(),
                path: p.geometry.build(scenario.length_unit),
                gauges: scenario.gauges_for(p).iter().map(|g| g.gauge.clone()).collect(),
                report: OnceCell::new(),
            })
            .collect();
        Self {
            scenario,
            fields,
            grid: OnceCell::new(),
            axial_grid: OnceCell::new(),
            paths,
            appendix: None,
            timings: Vec::new(),
            quiet,
        }
    }

    fn log(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }

    pub fn tolerance(&self, key: &str) -> f64 {
        let base = self
            .scenario
            .tolerances
            .overrides
            .get(key)
            .copied()
            .or_else(|| TOLERANCE_KEYS.iter().find(|(k, _)| *k == key).map(|(_, v)| *v))
            .unwrap_or_else(|| panic!("unknown tolerance key {key}"));
        if key.ends_with("-factor") {
            return base;
        }
        let relax = if LATTICE_LIMITED.contains(&key) { self.scenario.relax_factor() } else { 1.0 };
        base * self.scenario.tolerances.scale * relax
    }

    fn field(&self, name: &str) -> Result<&SourceField<f64>, CliError> {
        let cell = self.fields.get(name).ok_or_else(|| CliError::Schema(format!("unknown source `{name}`")))?;
        if let Some(f) = cell.get() {
            return Ok(f);
        }
        let f = self.scenario.field(name)?;
        Ok(cell.get_or_init(|| f))
    }

    fn grid(&self) -> Result<&ModeGrid<f64>, CliError> {
        if let Some(g) = self.grid.get() {
            return Ok(g);
        }
        let t = Instant::now();
        let spec = self.scenario.grid_spec();
        let src = self.scenario.source.build(self.scenario.length_unit);
        let g = ModeGrid::from_source(spec, &src, self.scenario.source.level())?;
        self.log(&format!("  built {} modes in {:.1}s", g.len(), t.elapsed().as_secs_f64()));
        Ok(self.grid.get_or_init(|| g))
    }

    fn axial_grid(&self) -> Result<&ModeGrid<f64>, CliError> {
        if let Some(g) = self.axial_grid.get() {
            return Ok(g);
        }
        let g = self.grid()?.retaper(self.scenario.grid.axial_taper);
        Ok(self.axial_grid.get_or_init(|| g))
    }

    fn particle(&self) -> Result<ParticleState<f64>, CliError> {
        self.scenario.particle_state().ok_or_else(|| CliError::Schema("invalid or missing particle".into()))
    }

    fn path_report(&self, i: usize) -> Result<&GaugeReport<f64>, CliError> {
        let run = &self.paths[i];
        if let Some(r) = run.report.get() {
            return Ok(r);
        }
        let t = Instant::now();
        let field = self.field(&run.source)?;
        let pots: Vec<_> = run.gauges.iter().map(|g| GaugePotential::new(field, g.clone())).collect();
        let charge = self.particle_charge();
        let r = gauge_dependence_report(&run.path, &pots, charge)?;
        self.log(&format!("  path `{}`: {} gauges in {:.1}s", run.name, pots.len(), t.elapsed().as_secs_f64()));
        Ok(run.report.get_or_init(|| r))
    }

    fn particle_charge(&self) -> f64 {
        self.scenario.particle.as_ref().map_or(1.0, |p| p.e)
    }

    fn strength_is_zero(&self) -> bool {
        let g = |s: &SourceSpec| match s {
            SourceSpec::CircularLoop { g, .. }
            | SourceSpec::FiniteSolenoid { g, .. }
            | SourceSpec::IdealSolenoid { g, .. }
            | SourceSpec::PolylineLoop { g, .. } => *g,
        };
        g(&self.scenario.source) == 0.0
    }

    pub fn run(&mut self, name: CheckName) -> Result<CheckRecord, CliError> {
        self.log(&format!("running {name}"));
        let t = Instant::now();
        let mut rec = CheckRecord::new(name.as_str(), self.inputs_digest(name));
        match name {
            CheckName::PolarizationCompleteness => self.polarization(&mut rec)?,
            CheckName::Transversality => self.transversality(&mut rec)?,
            CheckName::ClosedPathInvariance => self.closed_invariance(&mut rec)?,
            CheckName::Stokes => self.stokes(&mut rec)?,
            CheckName::OpenPathBoundaryLaw => self.boundary_law(&mut rec)?,
            CheckName::OpenPathGaugeDependence => self.open_dependence(&mut rec)?,
            CheckName::PtCoherentEquality => self.pt_coherent(&mut rec)?,
            CheckName::AxialIdentity => self.axial_identity(&mut rec)?,
            CheckName::PurelyImaginary => self.purely_imaginary(&mut rec)?,
            CheckName::BoyerSign => self.boyer_sign(&mut rec)?,
            CheckName::BoyerCancellation => self.boyer_cancellation(&mut rec)?,
            CheckName::ModeGridFaithfulness => self.faithfulness(&mut rec)?,
            CheckName::GaugeDiscrepancy => self.gauge_discrepancy(&mut rec)?,
        }
        rec.finish();
        self.timings.push((name, t.elapsed().as_secs_f64()));
        Ok(rec)
    }

    fn inputs_digest(&self, name: CheckName) -> String {
        #[derive(Serialize)]
        struct Inputs<'b> {
            check: &'b str,
            scenario: &'b Scenario,
            relax: f64,
        }
        let mut sc = self.scenario.clone();
        sc.output = Default::default();
        sc.checks.clear();
        let json = serde_json::to_vec(&Inputs { check: name.as_str(), scenario: &sc, relax: self.scenario.relax_factor() })
            .expect("scenario serializes");
        hex::encode(Sha256::digest(&json))
    }

    fn polarization(&self, rec: &mut CheckRecord) -> Result<(), CliError> {
        let tol = self.tolerance("polarization-completeness");
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let (mut worst, mut hand) = (0.0f64, 0.0f64);
        let mut drawn = 0;
        while drawn < 1000 {
            let k = Vec3::new(rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0));
            let (Some(r), Some((e1, e2))) = (completeness_residual(k), polarization_basis(k)) else { continue };
            let kh = k.normalized().expect("nonzero");
            worst = worst.max(r);
            hand = hand.max((e1.cross(e2).dot(kh) - 1.0).abs());
            drawn += 1;
        }
        rec.push(Item::bound("random modes (1000): max |Σλ e_i e_j − (δ_ij − k̂_i k̂_j)|", worst, tol));
        rec.push(Item::bound("random modes (1000): max |det[e1, e2, k̂] − 1|", hand, tol));
        if !matches!(self.scenario.source, SourceSpec::IdealSolenoid { .. }) {
            let g = self.grid()?;
            rec.push(Item::bound("lattice modes: max completeness residual", g.completeness_residual(), tol));
        }
        Ok(())
    }

    fn transversality(&self, rec: &mut CheckRecord) -> Result<(), CliError> {
        let tol = self.tolerance("transversality");
        let f = self.field(PRIMARY)?;
        let src = f.source();
        let center = Vec3::from_f64(crate::scenario::source_center(&self.scenario.source)) * self.scenario.length_unit;
        let shell = 2.0 * (src.radius() + src.half_length());
        let (mut worst, mut used) = (0.0f64, 0usize);
        for x in fibonacci_sphere(100).into_iter().map(|d| center + d * shell) {
            if f.clearance(x).is_some_and(|(d, ex)| d < 4.0 * ex) {
                continue;
            }
            let a = f.coulomb_a(x)?;
            let n = a.norm();
            if n == 0.0 {
                continue;
            }
            let (div, _) = extrapolated_divergence(|y| f.coulomb_a(y), x, f.derivative_step())?;
            worst = worst.max(div.abs() * f.length_scale() / n);
            used += 1;
        }
        rec.push(Item::bound(&format!("real space ({used} probes): max |∇·A| L / |A|"), worst, tol));
        rec.info("probe shell radius", shell);
        let set = discretize(src, self.scenario.source.level())?;
        rec.push(Item::bound(
            "k space: max |k·J_k| / (|k||J_k|)",
            set.divergence_residual(src.radius()),
            self.tolerance("k-transversality"),
        ));
        if let Ok(g) = self.grid() {
            rec.push(Item::bound("lattice modes: max |k·J_k| / (|k||J_k|)", g.transversality_residual(), self.tolerance("k-transversality")));
        }
        Ok(())
    }

    fn closed_invariance(&self, rec: &mut CheckRecord) -> Result<(), CliError> {
        let tol = self.tolerance("closed-path-invariance");
        for i in 0..self.paths.len() {
            if !self.paths[i].path.is_closed() {
                continue;
            }
            let r = self.path_report(i)?;
            let scale = r.max_abs_phase();
            let d = r.max_abs_difference();
            let v = if d == 0.0 { 0.0 } else { d / scale };
            rec.push(Item::bound(&format!("{}: max pairwise |ΔΦ| / |Φ|", self.paths[i].name), v, tol));
            for p in &r.phases {
                rec.info(&format!("{}: Φ[{}]", self.paths[i].name, p.gauge), p.value);
            }
        }
        Ok(())
    }

    fn stokes(&self, rec: &mut CheckRecord) -> Result<(), CliError> {
        let e = self.particle_charge();
        for i in 0..self.paths.len() {
            let run = &self.paths[i];
            if !run.path.is_closed() {
                continue;
            }
            let field = self.field(&run.source)?;
            let phase = match run.gauges.iter().position(|g| *g == Gauge::Coulomb) {
                Some(j) => self.path_report(i)?.phases[j].value,
                None => ab_phase(&run.path, &GaugePotential::coulomb(field), e)?.value,
            };
            let flux = enclosed_flux(&run.path, field)?;
            let want = -e * flux.value;
            let key = if field.source().is_closed_form_only() { "stokes-ideal" } else { "stokes" };
            rec.push(Item::relative(&format!("{}: Φ vs −e·g·flux", run.name), phase, want, self.tolerance(key)));
            rec.info(&format!("{}: flux quadrature error", run.name), flux.error_estimate);
        }
        Ok(())
    }

    fn boundary_law(&self, rec: &mut CheckRecord) -> Result<(), CliError> {
        let tol = self.tolerance("open-path-boundary-law");
        for i in 0..self.paths.len() {
            if self.paths[i].path.is_closed() {
                continue;
            }
            let run = &self.paths[i];
            let r = self.path_report(i)?;
            let scale = r.max_abs_phase();
            for p in &r.pairs {
                let (a, b) = (&r.phases[p.first].gauge, &r.phases[p.second].gauge);
                let v = if p.residual == 0.0 { 0.0 } else { p.residual.abs() / scale };
                rec.push(Item::bound(&format!("{}: |Φ[{b}] − Φ[{a}] − boundary| / |Φ|", run.name), v, tol));
            }
            for p in &r.phases {
                rec.info(&format!("{}: Φ[{}]", run.name, p.gauge), p.value);
            }
        }
        Ok(())
    }

    fn open_dependence(&self, rec: &mut CheckRecord) -> Result<(), CliError> {
        let factor = self.tolerance("open-path-gauge-dependence-factor");
        let tol = self.tolerance("open-path-boundary-law");
        for i in 0..self.paths.len() {
            if self.paths[i].path.is_closed() {
                continue;
            }
            let run = &self.paths[i];
            let r = self.path_report(i)?;
            let scale = r.max_abs_phase();
            for p in &r.pairs {
                let (a, b) = (&r.phases[p.first].gauge, &r.phases[p.second].gauge);
                if !is_axial_coulomb_pair(&run.gauges[p.first], &run.gauges[p.second]) {
                    rec.info(&format!("{}: |Φ[{b}] − Φ[{a}]|", run.name), p.difference.abs());
                    continue;
                }
                let combined = tol * scale + p.quadrature_error;
                let label = format!("{}: |Φ[{b}] − Φ[{a}]| vs {factor}× combined tolerance", run.name);
                if self.strength_is_zero() {
                    rec.push(Item::skipped(&label, "g = 0: every gauge gives the same (zero) phase"));
                } else {
                    rec.push(Item::floor(&label, p.difference.abs(), factor * combined));
                }
            }
        }
        Ok(())
    }

    fn pt_coherent(&self, rec: &mut CheckRecord) -> Result<(), CliError> {
        let tol = self.tolerance("pt-coherent-equality");
        let g = self.grid()?;
        let p = self.particle()?;
        let eps = delta_eps_coulomb(g, &p);
        let coh = delta_e_coherent(g, &p, ModeGauge::Coulomb);
        rec.push(Item::relative("Δε (second order) vs ΔE (coherent)", eps.value, coh.value, tol));
        rec.push(Item::bound("max mode-wise |summand difference| / |Δε|", mode_identity_residual(g, &p), tol));
        let im = if eps.imaginary_residue == 0.0 { 0.0 } else { eps.imaginary_residue.abs() / eps.value.abs() };
        rec.push(Item::bound("imaginary residue of Δε / |Δε|", im, tol));
        Ok(())
    }

    fn axial_identity(&self, rec: &mut CheckRecord) -> Result<(), CliError> {
        let tol = self.tolerance("axial-identity");
        let exact = self.tolerance("axial-exact");
        let g = self.axial_grid()?;
        let p = self.particle()?;
        let f = self.field(PRIMARY)?;
        let t = axial_second_order_terms(g, &p)?;
        let coh = delta_e_coherent_axial(g, &p);
        let two_re = 2.0 * t.term1.re;
        let reference = -p.velocity().dot(f.axial_a(p.position)?) * p.charge;
        rec.push(Item::relative("2 Re⟨0|H_g G H_e(1)|0⟩ vs −e g (p/m)·A^X(q)", two_re, reference, tol));
        rec.push(Item::relative("2 Re term1 vs ΔE_axial (coherent)", two_re, coh.energy.value, tol));
        let scale = coh.energy.value.abs().max(f64::MIN_POSITIVE);
        rec.push(Item::bound("|⟨H_e(2)⟩| / |ΔE_axial|", coh.he2.abs() / scale, exact));
        let en = coh.e_field[0].abs().max(coh.e_field[1].abs());
        let a_scale = reconstruct_a(g, p.position).value.norm().max(f64::MIN_POSITIVE);
        rec.push(Item::bound("max |⟨E_1,2(q)⟩| / |⟨A(q)⟩|", en / a_scale, exact));
        let jmax = g.stored_modes().iter().map(|m| m.current.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        rec.push(Item::bound("max |e^X·J_k − e·J_k| / max|J_k|", g.axial_replacement_residual() / jmax, exact));
        let ax = reconstruct_axial_a(g, p.position).value;
        rec.push(Item::bound("|⟨A^X_3(q)⟩| / |⟨A^X(q)⟩|", ax.z.abs() / ax.norm().max(f64::MIN_POSITIVE), exact));
        rec.info("axial taper start", self.scenario.grid.axial_taper.unwrap_or(f64::NAN));
        Ok(())
    }

    fn purely_imaginary(&self, rec: &mut CheckRecord) -> Result<(), CliError> {
        let tol = self.tolerance("purely-imaginary");
        let g = self.axial_grid()?;
        let p = self.particle()?;
        let t = axial_second_order_terms(g, &p)?;
        if t.term2_degenerate {
            rec.push(Item::skipped("|Re term2| / |Im term2|", "term2 is degenerate (J_3 vanishes); reported as 0"));
        } else {
            rec.push(Item::bound("|Re term2| / |Im term2|", t.real_to_imaginary(), tol));
        }
        rec.info("Re term2", t.term2.re);
        rec.info("Im term2", t.term2.im);
        rec.info("per mode: max |Re| / |summand|", t.max_mode_real_fraction);
        rec.info("per ±k pair: max |Re| / |pair sum|", t.max_pair_real_fraction);
        Ok(())
    }

    fn boyer(&mut self) -> Result<Appendix, CliError> {
        if let Some(a) = &self.appendix {
            return Ok(a.clone());
        }
        let g = self.grid()?;
        let p = self.particle()?;
        let c = hg_cancellation(g, &p);
        let eps = delta_eps_coulomb(g, &p).value;
        let f = self.field(PRIMARY)?;
        let reference = p.charge * p.velocity().dot(f.coulomb_a(p.position)?);
        let a = Appendix { boyer: c.boyer, hg_term: c.hg_term, residual: c.residual, delta_eps: eps, reference, warning: c.warning };
        self.appendix = Some(a.clone());
        Ok(a)
    }

    fn boyer_sign(&mut self, rec: &mut CheckRecord) -> Result<(), CliError> {
        let a = self.boyer()?;
        rec.push(Item::relative("Boyer energy vs −Δε", a.boyer, -a.delta_eps, self.tolerance("boyer-sign")));
        rec.push(Item::relative("Boyer energy vs +e g (p/m)·A⊥(q)", a.boyer, a.reference, self.tolerance("boyer-reference")));
        if let Some(w) = &a.warning {
            rec.note(w);
        }
        Ok(())
    }

    fn boyer_cancellation(&mut self, rec: &mut CheckRecord) -> Result<(), CliError> {
        let a = self.boyer()?;
        let v = if a.residual == 0.0 { 0.0 } else { a.residual.abs() / a.boyer.abs() };
        rec.push(Item::bound("|Boyer + ⟨H_g⟩| / |Boyer|", v, self.tolerance("boyer-cancellation")));
        rec.info("Boyer energy", a.boyer);
        rec.info("⟨H_g⟩", a.hg_term);
        Ok(())
    }

    fn faithfulness(&self, rec: &mut CheckRecord) -> Result<(), CliError> {
        let tol = self.tolerance("mode-grid-faithfulness");
        let f = self.field(PRIMARY)?;
        let probes = self.scenario.probe_points();
        let exact: Vec<Vec3<f64>> = probes.iter().map(|x| f.coulomb_a(*x)).collect::<Result<_, _>>()?;
        let errors = |g: &ModeGrid<f64>| -> (Vec<f64>, f64) {
            let mut imag = 0.0f64;
            let errs = probes
                .iter()
                .zip(&exact)
                .map(|(x, a)| {
                    let r = reconstruct_a(g, *x);
                    imag = imag.max(r.imaginary / a.norm().max(f64::MIN_POSITIVE));
                    let d = (r.value - *a).norm();
                    if d == 0.0 {
                        0.0
                    } else {
                        d / a.norm()
                    }
                })
                .collect();
            (errs, imag)
        };
        let g = self.grid()?;
        let (base, imag) = errors(g);
        for (x, e) in probes.iter().zip(&base) {
            rec.push(Item::bound(&format!("probe ({:.3}, {:.3}, {:.3}): |A_k − A| / |A|", x.x, x.y, x.z), *e, tol));
        }
        rec.push(Item::bound("max |Im⟨A⟩| / |A|", imag, self.tolerance("axial-exact")));
        let worst = base.iter().copied().fold(0.0, f64::max);
        if self.scenario.grid.refine {
            let t = Instant::now();
            let src = self.scenario.source.build(self.scenario.length_unit);
            let fine = ModeGrid::from_source(g.spec().refined(), &src, self.scenario.source.level())?;
            let (errs, _) = errors(&fine);
            self.log(&format!("  refined lattice ({} modes) in {:.1}s", fine.len(), t.elapsed().as_secs_f64()));
            let fine_worst = errs.iter().copied().fold(0.0, f64::max);
            for (x, e) in probes.iter().zip(&errs) {
                rec.info(&format!("Δk/2 probe ({:.3}, {:.3}, {:.3})", x.x, x.y, x.z), *e);
            }
            if worst == 0.0 && fine_worst == 0.0 {
                rec.push(Item::skipped("max error decreases when Δk is halved", "both lattices are exact"));
            } else {
                rec.push(Item::strictly_below("max error at Δk/2 (same k_max) < max error at Δk", fine_worst, worst));
            }
        }
        Ok(())
    }

    fn gauge_discrepancy(&self, rec: &mut CheckRecord) -> Result<(), CliError> {
        let factor = self.tolerance("gauge-discrepancy-factor");
        let p = self.particle()?;
        let coul = delta_eps_coulomb(self.grid()?, &p).value;
        let axial = delta_e_coherent_axial(self.axial_grid()?, &p).energy.value;
        let combined = self.tolerance("axial-identity") * axial.abs() + self.tolerance("mode-grid-faithfulness") * coul.abs();
        rec.info("ΔE_coulomb", coul);
        rec.info("ΔE_axial", axial);
        let label = format!("|ΔE_axial − ΔE_coulomb| vs {factor}× combined tolerance");
        if self.strength_is_zero() {
            rec.push(Item::skipped(&label, "g = 0: both energies vanish"));
        } else {
            rec.push(Item::floor(&label, (axial - coul).abs(), factor * combined));
        }
        Ok(())
    }
}

/// The materiality comparison is between the plain axial and Coulomb gauges;
/// a shifted gauge may have equal values of Λ at both ends of a path.
pub fn is_axial_coulomb_pair(a: &Gauge<f64>, b: &Gauge<f64>) -> bool {
    matches!((a, b), (Gauge::Axial, Gauge::Coulomb) | (Gauge::Coulomb, Gauge::Axial))
}

/// `n` nearly uniform unit vectors.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let th = golden * i as f64;
            Vec3::new(r * th.cos(), r * th.sin(), z)
        })
        .collect()
}

/// Runs the requested checks in declaration order.
pub fn run_all(scenario: &Scenario, quiet: bool) -> Result<(Vec<CheckRecord>, Context<'_>), CliError> {
    let mut ctx = Context::new(scenario, quiet);
    let mut out = Vec::with_capacity(scenario.checks.len());
    for &c in &scenario.checks {
        out.push(ctx.run(c)?);
    }
    Ok((out, ctx))
}

//! Scenario files: schema, loading with located diagnostics, and conversion to
//! core objects.
//!
//! Lengths (positions, radii, half-lengths, path geometry, probes) are given in
//! multiples of `length_unit`; winding densities and grid spacings scale with its
//! inverse. Everything else is in absolute Heaviside–Lorentz units with ħ = c = 1.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use abgauge_core::field::{Gauge, SourceField, Tolerances};
use abgauge_core::modes::{GridSpec, DEFAULT_AXIAL_TAPER, DEFAULT_HALF_EXTENT};
use abgauge_core::path::{ParticlePath, ParticleState};
use abgauge_core::source::CurrentSource;
use abgauge_core::vector::Vec3;
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::checks::CheckName;
use crate::CliError;

/// Name under which the scenario's main `source` is referenced by paths.
pub const PRIMARY: &str = "primary";

fn one() -> f64 {
    1.0
}

fn default_level() -> u32 {
    2
}

fn origin() -> [f64; 3] {
    [0.0; 3]
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default = "one")]
    pub length_unit: f64,
    pub source: SourceSpec,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra_sources: BTreeMap<String, SourceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub particle: Option<ParticleSpec>,
    #[serde(default)]
    pub gauges: Vec<GaugeString>,
    #[serde(default)]
    pub paths: Vec<PathSpec>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub probes: Vec<[f64; 3]>,
    #[serde(default)]
    pub export: ExportConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub checks: Vec<CheckName>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    CircularLoop {
        #[serde(default = "origin")]
        center: [f64; 3],
        normal: [f64; 3],
        radius: f64,
        #[serde(default = "one")]
        current: f64,
        #[serde(default = "one")]
        g: f64,
        #[serde(default = "default_level")]
        level: u32,
    },
    FiniteSolenoid {
        #[serde(default = "origin")]
        center: [f64; 3],
        axis: [f64; 3],
        radius: f64,
        half_length: f64,
        turns_per_length: f64,
        #[serde(default = "one")]
        current: f64,
        #[serde(default = "one")]
        g: f64,
        #[serde(default = "default_level")]
        level: u32,
    },
    IdealSolenoid {
        #[serde(default = "origin")]
        center: [f64; 3],
        axis: [f64; 3],
        radius: f64,
        flux: f64,
        #[serde(default = "one")]
        g: f64,
    },
    PolylineLoop {
        vertices: Vec<[f64; 3]>,
        #[serde(default = "one")]
        current: f64,
        #[serde(default = "one")]
        g: f64,
        #[serde(default = "default_level")]
        level: u32,
    },
}

impl SourceSpec {
    pub fn level(&self) -> u32 {
        match self {
            SourceSpec::CircularLoop { level, .. }
            | SourceSpec::FiniteSolenoid { level, .. }
            | SourceSpec::PolylineLoop { level, .. } => *level,
            SourceSpec::IdealSolenoid { .. } => 0,
        }
    }

    pub fn set_strength(&mut self, value: f64) {
        match self {
            SourceSpec::CircularLoop { g, .. }
            | SourceSpec::FiniteSolenoid { g, .. }
            | SourceSpec::IdealSolenoid { g, .. }
            | SourceSpec::PolylineLoop { g, .. } => *g = value,
        }
    }

    pub fn build(&self, unit: f64) -> CurrentSource<f64> {
        let v = |p: &[f64; 3]| Vec3::from_f64(*p) * unit;
        let dir = |p: &[f64; 3]| Vec3::from_f64(*p);
        match self {
            SourceSpec::CircularLoop { center, normal, radius, current, g, .. } => {
                CurrentSource::circular_loop(v(center), dir(normal), radius * unit, *current).with_strength(*g)
            }
            SourceSpec::FiniteSolenoid { center, axis, radius, half_length, turns_per_length, current, g, .. } => {
                CurrentSource::finite_solenoid(v(center), dir(axis), radius * unit, half_length * unit, turns_per_length / unit, *current)
                    .with_strength(*g)
            }
            SourceSpec::IdealSolenoid { center, axis, radius, flux, g } => {
                CurrentSource::ideal_solenoid(v(center), dir(axis), radius * unit, *flux).with_strength(*g)
            }
            SourceSpec::PolylineLoop { vertices, current, g, .. } => {
                CurrentSource::polyline(vertices.iter().map(v).collect(), *current).with_strength(*g)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSpec {
    pub e: f64,
    pub m: f64,
    pub p: [f64; 3],
    pub q: [f64; 3],
}

/// A gauge string validated while the file is parsed, so that a bad entry is
/// reported with its line and column.
#[derive(Clone, Debug, PartialEq)]
pub struct GaugeString {
    pub text: String,
    pub gauge: Gauge<f64>,
}

impl FromStr for GaugeString {
    type Err = abgauge_core::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Self { text: s.trim().to_string(), gauge: s.parse()? })
    }
}

impl<'de> Deserialize<'de> for GaugeString {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

impl Serialize for GaugeString {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl fmt::Display for GaugeString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PathSpec {
    pub name: String,
    /// Key into `extra_sources`, or `primary`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// Replaces the scenario-wide gauge list for this path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gauges: Option<Vec<GaugeString>>,
    pub geometry: Geometry,
}

impl PathSpec {
    pub fn source_name(&self) -> &str {
        self.source.as_deref().unwrap_or(PRIMARY)
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Geometry {
    Circle {
        center: [f64; 3],
        normal: [f64; 3],
        radius: f64,
    },
    Arc {
        center: [f64; 3],
        normal: [f64; 3],
        radius: f64,
        start_angle: f64,
        end_angle: f64,
    },
    Polyline {
        vertices: Vec<[f64; 3]>,
    },
}

impl Geometry {
    pub fn build(&self, unit: f64) -> ParticlePath<f64> {
        let v = |p: &[f64; 3]| Vec3::from_f64(*p) * unit;
        match self {
            Geometry::Circle { center, normal, radius } => ParticlePath::circle(v(center), Vec3::from_f64(*normal), radius * unit),
            Geometry::Arc { center, normal, radius, start_angle, end_angle } => {
                ParticlePath::arc(v(center), Vec3::from_f64(*normal), radius * unit, *start_angle, *end_angle)
            }
            Geometry::Polyline { vertices } => ParticlePath::polyline(vertices.iter().map(v).collect()),
        }
    }
}

fn default_taper() -> Option<f64> {
    Some(DEFAULT_AXIAL_TAPER)
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Lattice points per half-axis.
    #[serde(default)]
    pub half_extent: Option<usize>,
    /// `Δk` in inverse length units; defaults to `π/(8R)` for the primary source.
    #[serde(default)]
    pub spacing: Option<f64>,
    /// Taper start for axial-gauge sums; `null` gives a sharp cutoff.
    #[serde(default = "default_taper")]
    pub axial_taper: Option<f64>,
    /// Also evaluate the `Δk/2` lattice with the same `k_max` in the faithfulness check.
    #[serde(default = "default_true")]
    pub refine: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { half_extent: None, spacing: None, axial_taper: default_taper(), refine: true }
    }
}

fn default_counts() -> [usize; 3] {
    [10, 10, 1]
}

/// Probe lattice for `export-fields`.
#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExportConfig {
    #[serde(default = "default_counts")]
    pub counts: [usize; 3],
    /// `[min, max]` per axis; defaults to a cube of half-width `2(R + half-length)`
    /// around the primary source.
    #[serde(default)]
    pub bounds: Option<[[f64; 2]; 3]>,
    #[serde(default)]
    pub gauges: Option<Vec<GaugeString>>,
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self { counts: default_counts(), bounds: None, gauges: None }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub quadrature_rel_tol: Option<f64>,
    #[serde(default)]
    pub derivative_step: Option<f64>,
    /// Per-key overrides; see [`crate::checks::TOLERANCE_KEYS`].
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self { scale: 1.0, quadrature_rel_tol: None, derivative_step: None, overrides: BTreeMap::new() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub stem: Option<String>,
}

/// Command-line adjustments applied after loading.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub tolerance_scale: Option<f64>,
    pub grid_n: Option<usize>,
    pub strength: Option<f64>,
}

pub fn parse(text: &str, origin: &str) -> Result<Scenario, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let sc: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        CliError::Schema(format!("{origin}:{}:{}: at `{path}`: {inner}", inner.line(), inner.column()))
    })?;
    sc.validate().map_err(|m| CliError::Schema(format!("{origin}: {m}")))?;
    Ok(sc)
}

pub fn load(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse(&text, &path.display().to_string())
}

impl Scenario {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(s) = o.tolerance_scale {
            self.tolerances.scale *= s;
        }
        if let Some(n) = o.grid_n {
            self.grid.half_extent = Some(n);
        }
        if let Some(g) = o.strength {
            self.source.set_strength(g);
            for s in self.extra_sources.values_mut() {
                s.set_strength(g);
            }
        }
        self.validate().map_err(CliError::Schema)
    }

    pub fn validate(&self) -> Result<(), String> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.length_unit) {
            return Err("`length_unit` must be positive".into());
        }
        self.source_named(PRIMARY).ok_or("missing source")?;
        if self.extra_sources.contains_key(PRIMARY) {
            return Err(format!("`extra_sources` may not use the reserved name `{PRIMARY}`"));
        }
        for (name, s) in std::iter::once((PRIMARY, &self.source)).chain(self.extra_sources.iter().map(|(k, v)| (k.as_str(), v))) {
            s.build(self.length_unit).validate().map_err(|e| format!("source `{name}`: {e}"))?;
        }
        if !pos(self.tolerances.scale) {
            return Err("tolerance scale must be positive".into());
        }
        for v in [self.tolerances.quadrature_rel_tol, self.tolerances.derivative_step].into_iter().flatten() {
            if !pos(v) {
                return Err("tolerances must be positive".into());
            }
        }
        for (k, v) in &self.tolerances.overrides {
            if !crate::checks::TOLERANCE_KEYS.iter().any(|(key, _)| key == k) {
                return Err(format!("unknown tolerance key `{k}`"));
            }
            if !pos(*v) {
                return Err(format!("tolerance `{k}` must be positive"));
            }
        }
        if let Some(n) = self.grid.half_extent {
            if n < 2 {
                return Err("grid half_extent must be at least 2".into());
            }
        }
        if let Some(s) = self.grid.spacing {
            if !pos(s) {
                return Err("grid spacing must be positive".into());
            }
        }
        if let Some(t) = self.grid.axial_taper {
            if !(0.0..1.0).contains(&t) {
                return Err("grid axial_taper must lie in [0, 1)".into());
            }
        }
        let mut names = std::collections::BTreeSet::new();
        for (i, p) in self.paths.iter().enumerate() {
            if !names.insert(p.name.as_str()) {
                return Err(format!("paths[{i}]: duplicate path name `{}`", p.name));
            }
            if self.source_named(p.source_name()).is_none() {
                return Err(format!("paths[{i}]: unknown source `{}`", p.source_name()));
            }
            p.geometry.build(self.length_unit).validate().map_err(|e| format!("paths[{i}]: {e}"))?;
        }
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.checks {
            if !seen.insert(*c) {
                return Err(format!("check `{c}` is requested twice"));
            }
            self.check_prerequisites(*c).map_err(|m| format!("check `{c}`: {m}"))?;
        }
        if self.export.counts.contains(&0) {
            return Err("export counts must be positive".into());
        }
        Ok(())
    }

    fn check_prerequisites(&self, c: CheckName) -> Result<(), String> {
        use CheckName::*;
        let localized = !matches!(self.source, SourceSpec::IdealSolenoid { .. });
        let needs_grid = matches!(
            c,
            PtCoherentEquality | AxialIdentity | PurelyImaginary | BoyerSign | BoyerCancellation | ModeGridFaithfulness | GaugeDiscrepancy
        );
        if (needs_grid || c == Transversality) && !localized {
            return Err("needs a localized primary source".into());
        }
        if needs_grid && c != ModeGridFaithfulness && self.particle.is_none() {
            return Err("needs a particle".into());
        }
        let closed = self.paths.iter().filter(|p| p.geometry.build(self.length_unit).is_closed()).count();
        let open = self.paths.len() - closed;
        match c {
            ClosedPathInvariance | Stokes if closed == 0 => Err("needs at least one closed path".into()),
            OpenPathBoundaryLaw | OpenPathGaugeDependence if open == 0 => Err("needs at least one open path".into()),
            OpenPathGaugeDependence
                if !self.paths.iter().any(|p| {
                    let g: Vec<_> = self.gauges_for(p).iter().map(|g| &g.gauge).collect();
                    !p.geometry.build(self.length_unit).is_closed()
                        && g.iter().any(|a| g.iter().any(|b| crate::checks::is_axial_coulomb_pair(a, b)))
                }) =>
            {
                Err("needs an open path compared in both the coulomb and axial gauges".into())
            }
            ClosedPathInvariance | OpenPathBoundaryLaw | OpenPathGaugeDependence => {
                for p in &self.paths {
                    if self.gauges_for(p).len() < 2 {
                        return Err(format!("path `{}` needs at least two gauges", p.name));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn source_named(&self, name: &str) -> Option<&SourceSpec> {
        if name == PRIMARY {
            Some(&self.source)
        } else {
            self.extra_sources.get(name)
        }
    }

    pub fn gauges_for<'a>(&'a self, p: &'a PathSpec) -> &'a [GaugeString] {
        p.gauges.as_deref().unwrap_or(&self.gauges)
    }

    pub fn field_tolerances(&self) -> Tolerances<f64> {
        let mut t = Tolerances::default();
        if let Some(q) = self.tolerances.quadrature_rel_tol {
            t.quadrature_rel_tol = q;
        }
        if let Some(h) = self.tolerances.derivative_step {
            t.derivative_step = h;
        }
        t
    }

    pub fn field(&self, name: &str) -> Result<SourceField<f64>, CliError> {
        let spec = self.source_named(name).ok_or_else(|| CliError::Schema(format!("unknown source `{name}`")))?;
        SourceField::new(&spec.build(self.length_unit), spec.level(), self.field_tolerances()).map_err(CliError::from)
    }

    pub fn particle_state(&self) -> Option<ParticleState<f64>> {
        let p = self.particle.as_ref()?;
        ParticleState::new(p.e, p.m, Vec3::from_f64(p.p), Vec3::from_f64(p.q) * self.length_unit).ok()
    }

    pub fn half_extent(&self) -> usize {
        self.grid.half_extent.unwrap_or(DEFAULT_HALF_EXTENT)
    }

    /// Sharp-cutoff lattice for the primary source.
    pub fn grid_spec(&self) -> GridSpec<f64> {
        let r = self.source.build(self.length_unit).radius();
        let spacing = match self.grid.spacing {
            Some(s) => s / self.length_unit,
            None => GridSpec::for_radius(r).spacing,
        };
        GridSpec::symmetric(spacing, self.half_extent())
    }

    /// Tolerance multiplier for lattice-limited comparisons on lattices smaller
    /// than the default.
    pub fn relax_factor(&self) -> f64 {
        (DEFAULT_HALF_EXTENT as f64 / self.half_extent() as f64).max(1.0)
    }

    pub fn probe_points(&self) -> Vec<Vec3<f64>> {
        let pts: &[[f64; 3]] = if self.probes.is_empty() { &CANONICAL_PROBES } else { &self.probes };
        pts.iter().map(|p| Vec3::from_f64(*p) * self.length_unit).collect()
    }
}

/// Faithfulness probes used when a scenario lists none.
pub const CANONICAL_PROBES: [[f64; 3]; 5] =
    [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.5, 0.7, 0.3], [0.3, -0.6, 0.6], [-0.6, 0.2, -0.7]];

/// The scenario run by `verify`.
pub const CANONICAL: &str = include_str!("../examples/canonical.json");

pub fn canonical() -> Scenario {
    parse(CANONICAL, "canonical.json").expect("shipped canonical scenario parses")
}

/// Centre of a source in units of `length_unit`; the vertex mean for polylines.
pub fn source_center(s: &SourceSpec) -> [f64; 3] {
    match s {
        SourceSpec::CircularLoop { center, .. } | SourceSpec::FiniteSolenoid { center, .. } | SourceSpec::IdealSolenoid { center, .. } => *center,
        SourceSpec::PolylineLoop { vertices, .. } => {
            let n = vertices.len() as f64;
            let mut c = [0.0; 3];
            for v in vertices {
                for i in 0..3 {
                    c[i] += v[i] / n;
                }
            }
            c
        }
    }
}

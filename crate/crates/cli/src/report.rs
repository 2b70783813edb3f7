//! Machine (JSON) and human (aligned text) reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checks::{rel, Context};
use crate::scenario::Scenario;

pub const SCHEMA: &str = "abgauge-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `error ≤ tolerance`.
    AtMost,
    /// `error ≥ tolerance`.
    AtLeast,
    /// `error < tolerance`.
    Below,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
pub struct Item {
    pub label: String,
    pub computed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    /// The quantity compared against `tolerance`.
    pub error: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

impl Item {
    fn make(label: &str, computed: f64, reference: Option<f64>, error: f64, tolerance: f64, comparison: Comparison) -> Self {
        let passed = match comparison {
            Comparison::AtMost => error <= tolerance,
            Comparison::AtLeast => error >= tolerance,
            Comparison::Below => error < tolerance,
        };
        Self { label: label.to_string(), computed, reference, error, tolerance, comparison, passed, skipped: None }
    }

    pub fn bound(label: &str, value: f64, tolerance: f64) -> Self {
        Self::make(label, value, None, value, tolerance, Comparison::AtMost)
    }

    /// Relative error of `value` against `reference`.
    pub fn relative(label: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        Self::make(label, value, Some(reference), rel(value, reference), tolerance, Comparison::AtMost)
    }

    /// Materiality: `value` must reach `floor`.
    pub fn floor(label: &str, value: f64, floor: f64) -> Self {
        Self::make(label, value, None, value, floor, Comparison::AtLeast)
    }

    pub fn strictly_below(label: &str, value: f64, limit: f64) -> Self {
        Self::make(label, value, Some(limit), value, limit, Comparison::Below)
    }

    pub fn skipped(label: &str, reason: &str) -> Self {
        Self {
            label: label.to_string(),
            computed: 0.0,
            reference: None,
            error: 0.0,
            tolerance: 0.0,
            comparison: Comparison::AtMost,
            passed: true,
            skipped: Some(reason.to_string()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub inputs_digest: String,
    pub items: Vec<Item>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub info: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
    pub passed: bool,
}

impl CheckRecord {
    pub fn new(name: &str, inputs_digest: String) -> Self {
        Self { name: name.to_string(), inputs_digest, items: Vec::new(), info: BTreeMap::new(), notes: Vec::new(), passed: false }
    }

    pub fn push(&mut self, item: Item) {
        self.items.push(item);
    }

    pub fn info(&mut self, key: &str, value: f64) {
        self.info.insert(key.to_string(), value);
    }

    pub fn note(&mut self, note: &str) {
        self.notes.push(note.to_string());
    }

    pub fn finish(&mut self) {
        self.passed = self.items.iter().all(|i| i.passed);
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
pub struct Appendix {
    pub boyer: f64,
    pub hg_term: f64,
    pub residual: f64,
    pub delta_eps: f64,
    /// `+e g (p/m)·A⊥(q)`.
    pub reference: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
pub struct Metadata {
    pub grid_half_extent: usize,
    pub grid_spacing: f64,
    pub grid_k_max: f64,
    pub grid_modes: usize,
    pub axial_taper: Option<f64>,
    pub quadrature_rel_tol: f64,
    pub derivative_step: f64,
    pub source_level: u32,
    pub strength: f64,
    pub tolerance_scale: f64,
    pub relax_factor: f64,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub suite_passed: bool,
}

#[derive(Clone, Debug, PartialEq, Deserialize, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub schema: String,
    pub scenario: String,
    pub scenario_digest: String,
    pub metadata: Metadata,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub appendix: Option<Appendix>,
}

impl Report {
    pub fn new(scenario: &Scenario, checks: Vec<CheckRecord>, appendix: Option<Appendix>) -> Self {
        let spec = scenario.grid_spec();
        let tol = scenario.field_tolerances();
        let strength = scenario.source.build(scenario.length_unit).strength;
        let json = serde_json::to_vec(scenario).expect("scenario serializes");
        let passed = checks.iter().filter(|c| c.passed).count();
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            schema: SCHEMA.to_string(),
            scenario: scenario.name.clone(),
            scenario_digest: hex::encode(Sha256::digest(&json)),
            metadata: Metadata {
                grid_half_extent: scenario.half_extent(),
                grid_spacing: spec.spacing,
                grid_k_max: spec.k_max(),
                grid_modes: spec.mode_count(),
                axial_taper: scenario.grid.axial_taper,
                quadrature_rel_tol: tol.quadrature_rel_tol,
                derivative_step: tol.derivative_step,
                source_level: scenario.source.level(),
                strength,
                tolerance_scale: scenario.tolerances.scale,
                relax_factor: scenario.relax_factor(),
            },
            summary: Summary { total: checks.len(), passed, failed: checks.len() - passed, suite_passed: passed == checks.len() },
            checks,
            appendix,
        }
    }

    pub fn passed(&self) -> bool {
        self.summary.suite_passed
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Aligned text; `timings` (seconds per check) appear only here.
    pub fn to_text(&self, timings: &[(String, f64)]) -> String {
        let mut out = String::new();
        let m = &self.metadata;
        let _ = writeln!(out, "{} {}  scenario: {}", self.tool, self.version, if self.scenario.is_empty() { "-" } else { &self.scenario });
        let _ = writeln!(
            out,
            "grid: N = {}, dk = {:.6}, k_max = {:.4}, {} modes, axial taper {}",
            m.grid_half_extent,
            m.grid_spacing,
            m.grid_k_max,
            m.grid_modes,
            m.axial_taper.map_or("off".to_string(), |t| t.to_string())
        );
        let _ = writeln!(
            out,
            "quadrature rel tol {:.1e}, derivative step {:.1e}, g = {}, tolerance scale {}, relax {}",
            m.quadrature_rel_tol, m.derivative_step, m.strength, m.tolerance_scale, m.relax_factor
        );
        let width = self.checks.iter().flat_map(|c| c.items.iter().map(|i| i.label.chars().count())).max().unwrap_or(0);
        for c in &self.checks {
            let t = timings.iter().find(|(n, _)| *n == c.name).map_or(String::new(), |(_, s)| format!("  ({s:.2}s)"));
            let _ = writeln!(out, "\n[{}] {}{t}", if c.passed { "PASS" } else { "FAIL" }, c.name);
            for i in &c.items {
                let pad = width - i.label.chars().count();
                let verdict = match (&i.skipped, i.passed) {
                    (Some(_), _) => "skip",
                    (None, true) => "ok",
                    (None, false) => "FAIL",
                };
                let op = match i.comparison {
                    Comparison::AtMost => "<=",
                    Comparison::AtLeast => ">=",
                    Comparison::Below => "<",
                };
                match &i.skipped {
                    Some(why) => {
                        let _ = writeln!(out, "  {}{}  {verdict:>4}  {why}", i.label, " ".repeat(pad));
                    }
                    None => {
                        let _ = writeln!(
                            out,
                            "  {}{}  {verdict:>4}  {:>12.4e} {op:>2} {:<10.3e}",
                            i.label,
                            " ".repeat(pad),
                            i.error,
                            i.tolerance
                        );
                    }
                }
            }
            for (k, v) in &c.info {
                let _ = writeln!(out, "    {k}: {v:.6e}");
            }
            for n in &c.notes {
                let _ = writeln!(out, "    note: {n}");
            }
        }
        if let Some(a) = &self.appendix {
            let _ = writeln!(
                out,
                "\nBoyer energy {:.6e}, <H_g> {:.6e}, residual {:.3e}, delta_eps {:.6e}",
                a.boyer, a.hg_term, a.residual, a.delta_eps
            );
        }
        let s = &self.summary;
        let _ = writeln!(out, "\n{} of {} checks passed: suite {}", s.passed, s.total, if s.suite_passed { "PASSED" } else { "FAILED" });
        out
    }
}

/// Runs the scenario's checks and assembles the report and per-check timings.
pub fn run_report(scenario: &Scenario, quiet: bool) -> Result<(Report, Vec<(String, f64)>), crate::CliError> {
    let (records, ctx): (_, Context) = crate::checks::run_all(scenario, quiet)?;
    let timings = ctx.timings.iter().map(|(n, t)| (n.to_string(), *t)).collect();
    let appendix = ctx.appendix.clone();
    Ok((Report::new(scenario, records, appendix), timings))
}

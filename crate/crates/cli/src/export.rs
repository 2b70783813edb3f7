//! CSV dumps of probe-grid fields and of lattice mode amplitudes.

use std::io::Write;

use abgauge_core::field::{Gauge, GaugePotential};
use abgauge_core::modes::{coherent_amplitudes, ModeGrid};
use abgauge_core::vector::Vec3;

use crate::scenario::{Scenario, PRIMARY};
use crate::CliError;

pub const FIELD_HEADER: [&str; 10] = ["x", "y", "z", "gauge", "Ax", "Ay", "Az", "Bx", "By", "Bz"];

fn io(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

/// Probe points in x-fastest order. A single point along an axis sits at the
/// middle of its range.
pub fn probe_points(scenario: &Scenario, counts: [usize; 3]) -> Vec<Vec3<f64>> {
    let bounds = scenario.export.bounds.unwrap_or_else(|| {
        let src = scenario.source.build(1.0);
        let h = 2.0 * (src.radius() + src.half_length());
        let c = crate::scenario::source_center(&scenario.source);
        [[c[0] - h, c[0] + h], [c[1] - h, c[1] + h], [c[2] - h, c[2] + h]]
    });
    let axis = |i: usize| -> Vec<f64> {
        let [lo, hi] = bounds[i];
        let n = counts[i];
        if n == 1 {
            return vec![0.5 * (lo + hi)];
        }
        (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect()
    };
    let (xs, ys, zs) = (axis(0), axis(1), axis(2));
    let mut out = Vec::with_capacity(xs.len() * ys.len() * zs.len());
    for &z in &zs {
        for &y in &ys {
            for &x in &xs {
                out.push(Vec3::new(x, y, z) * scenario.length_unit);
            }
        }
    }
    out
}

/// Gauges exported: `export.gauges`, else the scenario gauges, else Coulomb and axial.
pub fn export_gauges(scenario: &Scenario) -> Vec<(String, Gauge<f64>)> {
    let list = scenario.export.gauges.as_ref().filter(|g| !g.is_empty()).unwrap_or(&scenario.gauges);
    if list.is_empty() {
        return vec![("coulomb".into(), Gauge::Coulomb), ("axial".into(), Gauge::Axial)];
    }
    list.iter().map(|g| (g.text.clone(), g.gauge.clone())).collect()
}

/// One row per probe point and gauge. Values that cannot be evaluated (on a wire,
/// or past the axial tail bound) are written as `NaN`.
pub fn write_fields<W: Write>(scenario: &Scenario, counts: [usize; 3], out: W) -> Result<usize, CliError> {
    let field = scenario.field(PRIMARY)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FIELD_HEADER).map_err(io)?;
    let pts = probe_points(scenario, counts);
    let mut rows = 0;
    for (label, gauge) in export_gauges(scenario) {
        let pot = GaugePotential::new(&field, gauge);
        for x in &pts {
            let a = pot.vector_potential(*x).unwrap_or(Vec3::new(f64::NAN, f64::NAN, f64::NAN));
            let b = pot.curl(*x).unwrap_or(Vec3::new(f64::NAN, f64::NAN, f64::NAN));
            let mut rec = vec![x.x.to_string(), x.y.to_string(), x.z.to_string(), label.clone()];
            rec.extend([a.x, a.y, a.z, b.x, b.y, b.z].iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(io)?;
            rows += 1;
        }
    }
    w.flush().map_err(io)?;
    Ok(rows)
}

/// Stored lattice modes with their coherent amplitudes for both polarizations.
pub fn write_modes<W: Write>(grid: &ModeGrid<f64>, out: W) -> Result<usize, CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kx", "ky", "kz", "omega", "weight", "alpha1_re", "alpha1_im", "alpha2_re", "alpha2_im"]).map_err(io)?;
    for m in grid.stored_modes() {
        let [a1, a2] = coherent_amplitudes(m.k, &m.current);
        let rec = [m.k.x, m.k.y, m.k.z, m.k.norm(), m.weight, a1.re, a1.im, a2.re, a2.im];
        w.write_record(rec.iter().map(|v| v.to_string())).map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(grid.stored_modes().len())
}

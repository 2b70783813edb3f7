//! Particle paths, Aharonov–Bohm line integrals and enclosed flux.

use crate::error::{Error, Result};
use crate::field::{GaugePotential, SourceField};
use crate::quadrature::{AdaptiveOptions, PanelRule};
use crate::scalar::Real;
use crate::source::SourceKind;
use crate::vector::Vec3;

/// Charged particle entering `H_e = −e (p/m)·A(q)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParticleState<T> {
    pub charge: T,
    pub mass: T,
    pub momentum: Vec3<T>,
    pub position: Vec3<T>,
}

impl<T: Real> ParticleState<T> {
    pub fn new(charge: T, mass: T, momentum: Vec3<T>, position: Vec3<T>) -> Result<Self> {
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::InvalidParameter("particle mass must be positive".into()));
        }
        if !charge.is_finite() || !momentum.is_finite() || !position.is_finite() {
            return Err(Error::InvalidParameter("particle state must be finite".into()));
        }
        Ok(Self { charge, mass, momentum, position })
    }

    pub fn velocity(&self) -> Vec3<T> {
        self.momentum * (T::one() / self.mass)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PathShape<T> {
    /// Arc `center + radius (cos θ a + sin θ b)` for θ from `start_angle` to
    /// `end_angle`, with `(a, b)` the transverse frame of `normal`.
    CircleArc { center: Vec3<T>, normal: Vec3<T>, radius: T, start_angle: T, end_angle: T },
    Polyline { vertices: Vec<Vec3<T>> },
}

/// Oriented curve with its quadrature settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticlePath<T> {
    pub shape: PathShape<T>,
    /// Traverse the shape backwards.
    pub reversed: bool,
    /// Initial Gauss–Legendre panels per arc or per polyline edge.
    pub panels: usize,
    /// Points per panel for the low-order rule; the estimate uses twice as many.
    pub order: usize,
}

#[derive(Clone, Copy, Debug)]
enum Piece<T> {
    Arc { center: Vec3<T>, a: Vec3<T>, b: Vec3<T>, radius: T, th0: T, th1: T },
    Line { p0: Vec3<T>, p1: Vec3<T> },
}

impl<T: Real> Piece<T> {
    /// Point and derivative at `t ∈ [0, 1]`.
    fn eval(&self, t: T) -> (Vec3<T>, Vec3<T>) {
        match *self {
            Piece::Arc { center, a, b, radius, th0, th1 } => {
                let dth = th1 - th0;
                let th = th0 + dth * t;
                let (s, c) = th.sin_cos();
                (center + (a * c + b * s) * radius, (b * c - a * s) * (radius * dth))
            }
            Piece::Line { p0, p1 } => (p0 + (p1 - p0) * t, p1 - p0),
        }
    }

    fn reversed(self) -> Self {
        match self {
            Piece::Arc { center, a, b, radius, th0, th1 } => Piece::Arc { center, a, b, radius, th0: th1, th1: th0 },
            Piece::Line { p0, p1 } => Piece::Line { p0: p1, p1: p0 },
        }
    }
}

impl<T: Real> ParticlePath<T> {
    pub fn new(shape: PathShape<T>) -> Self {
        Self { shape, reversed: false, panels: 8, order: 8 }
    }

    pub fn arc(center: Vec3<T>, normal: Vec3<T>, radius: T, start_angle: T, end_angle: T) -> Self {
        Self::new(PathShape::CircleArc { center, normal, radius, start_angle, end_angle })
    }

    /// Full circle, counter-clockwise about `normal`.
    pub fn circle(center: Vec3<T>, normal: Vec3<T>, radius: T) -> Self {
        Self::arc(center, normal, radius, T::zero(), T::TAU())
    }

    pub fn polyline(vertices: Vec<Vec3<T>>) -> Self {
        Self::new(PathShape::Polyline { vertices })
    }

    pub fn reverse(mut self) -> Self {
        self.reversed = !self.reversed;
        self
    }

    pub fn with_panels(mut self, panels: usize) -> Self {
        self.panels = panels.max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::UnsupportedPath(m.to_string()));
        if self.order == 0 || self.panels == 0 {
            return bad("quadrature order and panel count must be positive");
        }
        match &self.shape {
            PathShape::CircleArc { center, normal, radius, start_angle, end_angle } => {
                if normal.normalized().is_none() || !(*radius >= T::zero()) || !center.is_finite() {
                    return bad("arc needs a nonzero normal and non-negative radius");
                }
                if !start_angle.is_finite() || !end_angle.is_finite() {
                    return bad("arc angles must be finite");
                }
            }
            PathShape::Polyline { vertices } => {
                if vertices.is_empty() || vertices.iter().any(|v| !v.is_finite()) {
                    return bad("polyline needs finite vertices");
                }
            }
        }
        Ok(())
    }

    fn pieces(&self) -> Vec<Piece<T>> {
        let mut out = match &self.shape {
            PathShape::CircleArc { center, normal, radius, start_angle, end_angle } => {
                let (a, b) = Vec3::transverse_frame(*normal).expect("validated normal");
                vec![Piece::Arc { center: *center, a, b, radius: *radius, th0: *start_angle, th1: *end_angle }]
            }
            PathShape::Polyline { vertices } => {
                if vertices.len() == 1 {
                    vec![Piece::Line { p0: vertices[0], p1: vertices[0] }]
                } else {
                    vertices.windows(2).map(|w| Piece::Line { p0: w[0], p1: w[1] }).collect()
                }
            }
        };
        if self.reversed {
            out.reverse();
            out = out.into_iter().map(Piece::reversed).collect();
        }
        out
    }

    pub fn start(&self) -> Vec3<T> {
        self.pieces()[0].eval(T::zero()).0
    }

    pub fn end(&self) -> Vec3<T> {
        self.pieces().last().expect("non-empty").eval(T::one()).0
    }

    /// Largest distance between path points, sampled.
    pub fn diameter(&self) -> T {
        match &self.shape {
            PathShape::CircleArc { radius, start_angle, end_angle, .. } => {
                let span = (*end_angle - *start_angle).abs();
                if span >= T::PI() {
                    *radius * T::lit(2.0)
                } else {
                    *radius * T::lit(2.0) * (span * T::lit(0.5)).sin()
                }
            }
            PathShape::Polyline { vertices } => {
                let mut d = T::zero();
                for (i, a) in vertices.iter().enumerate() {
                    for b in &vertices[i + 1..] {
                        d = d.max((*a - *b).norm());
                    }
                }
                d
            }
        }
    }

    /// Endpoints coincide within `1e-12` of the diameter (or a few ulps in `f32`).
    pub fn is_closed(&self) -> bool {
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(64.0));
        (self.end() - self.start()).norm() <= tol * self.diameter()
    }

    pub fn length(&self) -> T {
        match &self.shape {
            PathShape::CircleArc { radius, start_angle, end_angle, .. } => *radius * (*end_angle - *start_angle).abs(),
            PathShape::Polyline { vertices } => vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseResult<T> {
    pub value: T,
    pub gauge: String,
    /// Sum over panels of the difference between the two rule orders.
    pub error_estimate: T,
    pub evaluations: usize,
}

/// `Φ = −e ∫_path A·dq` with `A` the potential of `potential` (which already
/// includes the source strength `g`).
pub fn ab_phase<T: Real>(path: &ParticlePath<T>, potential: &GaugePotential<'_, T>, charge: T) -> Result<PhaseResult<T>> {
    path.validate()?;
    let rule = PanelRule::new(path.order);
    let opts = AdaptiveOptions {
        rel_tol: potential.field.tolerances().quadrature_rel_tol,
        abs_tol: T::zero(),
        max_subdivisions: 4000,
        initial_panels: path.panels,
        plateau_splits: 32,
    };
    let mut value = T::zero();
    let mut err = T::zero();
    let mut evals = 0;
    for piece in path.pieces() {
        let r = rule.integrate(&[T::zero(), T::one()], &opts, |t| {
            let (q, dq) = piece.eval(t);
            if dq == Vec3::zero() {
                return Ok(T::zero());
            }
            Ok(potential.vector_potential(q)?.dot(dq))
        })?;
        value = value + r.value;
        err = err + r.error;
        evals += r.evaluations;
    }
    Ok(PhaseResult { value: -charge * value, gauge: potential.label(), error_estimate: charge.abs() * err, evaluations: evals })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxResult<T> {
    pub value: T,
    pub error_estimate: T,
}

/// Flux of `g·B` through the flat surface spanned by a closed planar path,
/// oriented by the direction of travel.
pub fn enclosed_flux<T: Real>(path: &ParticlePath<T>, field: &SourceField<T>) -> Result<FluxResult<T>> {
    path.validate()?;
    if !path.is_closed() {
        return Err(Error::UnsupportedPath("flux needs a closed path".into()));
    }
    let orient = if path.reversed { -T::one() } else { T::one() };
    match &path.shape {
        PathShape::CircleArc { center, normal, radius, start_angle, end_angle } => {
            let sense = if *end_angle >= *start_angle { T::one() } else { -T::one() };
            let n = normal.normalized().expect("validated normal");
            let r = match &field.source().kind {
                SourceKind::IdealSolenoid { center: sc, axis, radius: sr, .. } => {
                    let ax = axis.normalized().expect("validated axis");
                    if ax.cross(n).norm() > T::lit(1e-12) {
                        return Err(Error::UnsupportedPath(
                            "ideal-solenoid flux needs a circle normal to the solenoid axis".into(),
                        ));
                    }
                    let d = *center - *sc;
                    let offset = (d - ax * d.dot(ax)).norm();
                    let b = field.b_field_unchecked(*sc).dot(n);
                    FluxResult { value: b * circle_overlap(*sr, *radius, offset), error_estimate: T::zero() }
                }
                _ => disc_flux(field, *center, n, *radius)?,
            };
            Ok(FluxResult { value: r.value * sense * orient, error_estimate: r.error_estimate })
        }
        PathShape::Polyline { vertices } => {
            if let SourceKind::IdealSolenoid { .. } = field.source().kind {
                return Err(Error::UnsupportedPath("ideal-solenoid flux is available for circles only".into()));
            }
            let r = polygon_flux(field, vertices)?;
            Ok(FluxResult { value: r.value * orient, error_estimate: r.error_estimate })
        }
    }
}

/// Area of the intersection of two discs with radii `r1`, `r2` and centre distance `d`.
fn circle_overlap<T: Real>(r1: T, r2: T, d: T) -> T {
    let pi = T::PI();
    if d >= r1 + r2 {
        return T::zero();
    }
    if d <= (r1 - r2).abs() {
        let r = r1.min(r2);
        return pi * r * r;
    }
    let two = T::lit(2.0);
    let a1 = ((d * d + r1 * r1 - r2 * r2) / (two * d * r1)).max(-T::one()).min(T::one()).acos();
    let a2 = ((d * d + r2 * r2 - r1 * r1) / (two * d * r2)).max(-T::one()).min(T::one()).acos();
    let k = ((-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)).max(T::zero()).sqrt();
    r1 * r1 * a1 + r2 * r2 * a2 - k * T::lit(0.5)
}

/// Surface quadratures stop at this relative accuracy even when the line
/// integrals are asked for more; the nested rule is far costlier per digit.
pub const FLUX_REL_TOL_FLOOR: f64 = 1e-7;

fn flux_options<T: Real>(field: &SourceField<T>) -> AdaptiveOptions<T> {
    AdaptiveOptions {
        rel_tol: field.tolerances().quadrature_rel_tol.max(T::lit(FLUX_REL_TOL_FLOOR)),
        abs_tol: T::zero(),
        max_subdivisions: 400,
        initial_panels: 2,
        ..Default::default()
    }
}

fn sorted_points<T: Real>(lo: T, hi: T, mut inner: Vec<T>, min_gap: T) -> Vec<T> {
    inner.retain(|p| *p > lo + min_gap && *p < hi - min_gap);
    inner.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    let mut pts = vec![lo];
    for p in inner {
        if p - *pts.last().expect("non-empty") > min_gap {
            pts.push(p);
        }
    }
    pts.push(hi);
    pts
}

/// Points where wires cross the plane through `c` with normal `n`.
fn piercings<T: Real>(field: &SourceField<T>, c: Vec3<T>, n: Vec3<T>) -> Vec<Vec3<T>> {
    let Some(set) = field.segments() else { return Vec::new() };
    let mut out = Vec::new();
    for s in &set.segments {
        let da = (s.start - c).dot(n);
        let db = (s.end - c).dot(n);
        if (da <= T::zero() && db > T::zero()) || (da >= T::zero() && db < T::zero()) {
            let t = da / (da - db);
            out.push(s.start + (s.end - s.start) * t);
        }
    }
    out
}

/// Polar-coordinate quadrature over the disc, with breakpoints at the radii and
/// angles where wires pierce it.
fn disc_flux<T: Real>(field: &SourceField<T>, c: Vec3<T>, n: Vec3<T>, radius: T) -> Result<FluxResult<T>> {
    let (ea, eb) = Vec3::transverse_frame(n).expect("unit normal");
    let mut radii = Vec::new();
    let mut angles = Vec::new();
    let tiny = radius * T::lit(1e-9);
    for p in piercings(field, c, n) {
        let d = p - c;
        let r = d.norm();
        if r <= radius {
            radii.push(r);
            if r > tiny {
                let mut th = d.dot(eb).atan2(d.dot(ea));
                if th < T::zero() {
                    th = th + T::TAU();
                }
                angles.push(th);
            }
        }
    }
    let r_pts = sorted_points(T::zero(), radius, radii, tiny);
    let th_pts = sorted_points(T::zero(), T::TAU(), angles, T::lit(1e-9));
    let rule = PanelRule::<T>::default();
    let opts = flux_options(field);
    let mut inner_err = T::zero();
    let outer = rule.integrate(&th_pts, &opts, |th| -> Result<T> {
        let (s, co) = th.sin_cos();
        let dir = ea * co + eb * s;
        let r = rule.integrate(&r_pts, &opts, |r| -> Result<T> {
            Ok(field.b_field_unchecked(c + dir * r).dot(n) * r)
        })?;
        inner_err = inner_err.max(r.error);
        Ok(r.value)
    })?;
    Ok(FluxResult { value: outer.value, error_estimate: outer.error + inner_err * T::TAU() })
}

/// Fan of signed triangles from the first vertex; exact for any closed planar polygon.
fn polygon_flux<T: Real>(field: &SourceField<T>, vertices: &[Vec3<T>]) -> Result<FluxResult<T>> {
    let m = vertices.len();
    // drop the repeated closing vertex
    let verts = if m > 1 && vertices[0] == vertices[m - 1] { &vertices[..m - 1] } else { vertices };
    if verts.len() < 3 {
        return Ok(FluxResult { value: T::zero(), error_estimate: T::zero() });
    }
    let v0 = verts[0];
    let mut area = Vec3::zero();
    for w in verts[1..].windows(2) {
        area += (w[0] - v0).cross(w[1] - v0);
    }
    let Some(normal) = area.normalized() else {
        return Ok(FluxResult { value: T::zero(), error_estimate: T::zero() });
    };
    let diam = verts.iter().map(|v| (*v - v0).norm()).fold(T::zero(), T::max);
    if verts.iter().any(|v| (*v - v0).dot(normal).abs() > T::lit(1e-9) * diam) {
        return Err(Error::UnsupportedPath("closed polyline is not planar".into()));
    }
    let rule = PanelRule::<T>::default();
    let opts = flux_options(field);
    let mut total = FluxResult { value: T::zero(), error_estimate: T::zero() };
    for w in verts[1..].windows(2) {
        let (p1, p2) = (w[0], w[1]);
        let nvec = (p1 - v0).cross(p2 - v0);
        if nvec.norm() == T::zero() {
            continue;
        }
        let mut inner_err = T::zero();
        let r = rule.integrate(&[T::zero(), T::one()], &opts, |u| -> Result<T> {
            let r = rule.integrate(&[T::zero(), T::one()], &opts, |s| -> Result<T> {
                let p = v0 + ((p1 - v0) + (p2 - p1) * s) * u;
                Ok(field.b_field_unchecked(p).dot(nvec) * u)
            })?;
            inner_err = inner_err.max(r.error);
            Ok(r.value)
        })?;
        total.value = total.value + r.value;
        total.error_estimate = total.error_estimate + r.error + inner_err;
    }
    Ok(total)
}

/// Phases of one path in two gauges, with the endpoint prediction for their difference.
#[derive(Clone, Debug, PartialEq)]
pub struct PairComparison<T> {
    pub first: usize,
    pub second: usize,
    /// `Φ_second − Φ_first`.
    pub difference: T,
    /// `−e[(Λ₂(b) − Λ₂(a)) − (Λ₁(b) − Λ₁(a))]`, the boundary term.
    pub boundary_term: T,
    pub residual: T,
    /// Combined quadrature error estimate of the two phases.
    pub quadrature_error: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeReport<T> {
    pub closed: bool,
    pub phases: Vec<PhaseResult<T>>,
    pub pairs: Vec<PairComparison<T>>,
}

impl<T: Real> GaugeReport<T> {
    pub fn max_abs_difference(&self) -> T {
        self.pairs.iter().map(|p| p.difference.abs()).fold(T::zero(), T::max)
    }

    pub fn max_abs_residual(&self) -> T {
        self.pairs.iter().map(|p| p.residual.abs()).fold(T::zero(), T::max)
    }

    pub fn max_abs_phase(&self) -> T {
        self.phases.iter().map(|p| p.value.abs()).fold(T::zero(), T::max)
    }
}

/// Phases of `path` in every gauge and all pairwise differences. For open paths
/// each difference is reported next to the boundary term it should equal.
pub fn gauge_dependence_report<T: Real>(
    path: &ParticlePath<T>,
    potentials: &[GaugePotential<'_, T>],
    charge: T,
) -> Result<GaugeReport<T>> {
    if potentials.len() < 2 {
        return Err(Error::InvalidParameter("gauge comparison needs at least two gauges".into()));
    }
    let (a, b) = (path.start(), path.end());
    let mut phases = Vec::with_capacity(potentials.len());
    let mut jumps = Vec::with_capacity(potentials.len());
    for p in potentials {
        phases.push(ab_phase(path, p, charge)?);
        jumps.push(p.gauge_function(b)? - p.gauge_function(a)?);
    }
    let mut pairs = Vec::new();
    for i in 0..potentials.len() {
        for j in i + 1..potentials.len() {
            let difference = phases[j].value - phases[i].value;
            let boundary_term = -charge * (jumps[j] - jumps[i]);
            pairs.push(PairComparison {
                first: i,
                second: j,
                difference,
                boundary_term,
                residual: difference - boundary_term,
                quadrature_error: phases[i].error_estimate + phases[j].error_estimate,
            });
        }
    }
    Ok(GaugeReport { closed: path.is_closed(), phases, pairs })
}

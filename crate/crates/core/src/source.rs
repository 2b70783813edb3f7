//! Static current sources and their thin-wire discretization.
//!
//! All currents carry the strength factor `g`: a segment's `current` is `g·I`,
//! so every field, potential and Fourier transform derived from it is linear in `g`.

use std::ops::Range;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vector::{CVec3, Vec3};

#[derive(Clone, Debug, PartialEq)]
pub enum SourceKind<T> {
    /// Infinitely long solenoid of given flux; only closed-form evaluators accept it.
    IdealSolenoid { center: Vec3<T>, axis: Vec3<T>, radius: T, flux: T },
    /// Helix with a return conductor along its axis.
    FiniteSolenoid { center: Vec3<T>, axis: Vec3<T>, radius: T, half_length: T, turns_per_length: T, current: T },
    CircularLoop { center: Vec3<T>, normal: Vec3<T>, radius: T, current: T },
    /// Closed polygon; the last vertex connects back to the first.
    PolylineLoop { vertices: Vec<Vec3<T>>, current: T },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurrentSource<T> {
    pub kind: SourceKind<T>,
    /// Strength `g` multiplying the current.
    pub strength: T,
}

impl<T: Real> CurrentSource<T> {
    pub fn new(kind: SourceKind<T>, strength: T) -> Self {
        Self { kind, strength }
    }

    /// Current loop of unit strength.
    pub fn circular_loop(center: Vec3<T>, normal: Vec3<T>, radius: T, current: T) -> Self {
        Self::new(SourceKind::CircularLoop { center, normal, radius, current }, T::one())
    }

    pub fn finite_solenoid(
        center: Vec3<T>,
        axis: Vec3<T>,
        radius: T,
        half_length: T,
        turns_per_length: T,
        current: T,
    ) -> Self {
        Self::new(SourceKind::FiniteSolenoid { center, axis, radius, half_length, turns_per_length, current }, T::one())
    }

    pub fn ideal_solenoid(center: Vec3<T>, axis: Vec3<T>, radius: T, flux: T) -> Self {
        Self::new(SourceKind::IdealSolenoid { center, axis, radius, flux }, T::one())
    }

    pub fn polyline(vertices: Vec<Vec3<T>>, current: T) -> Self {
        Self::new(SourceKind::PolylineLoop { vertices, current }, T::one())
    }

    pub fn with_strength(mut self, g: T) -> Self {
        self.strength = g;
        self
    }

    pub fn is_closed_form_only(&self) -> bool {
        matches!(self.kind, SourceKind::IdealSolenoid { .. })
    }

    /// Transverse size: loop or solenoid radius, or the largest vertex distance
    /// from the polygon centroid.
    pub fn radius(&self) -> T {
        match &self.kind {
            SourceKind::IdealSolenoid { radius, .. }
            | SourceKind::FiniteSolenoid { radius, .. }
            | SourceKind::CircularLoop { radius, .. } => *radius,
            SourceKind::PolylineLoop { vertices, .. } => {
                if vertices.is_empty() {
                    return T::zero();
                }
                let c = centroid(vertices);
                vertices.iter().map(|v| (*v - c).norm()).fold(T::zero(), T::max)
            }
        }
    }

    /// Half extent along the axis; zero for planar loops.
    pub fn half_length(&self) -> T {
        match &self.kind {
            SourceKind::FiniteSolenoid { half_length, .. } => *half_length,
            _ => T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !self.strength.is_finite() {
            return bad("strength g must be finite");
        }
        match &self.kind {
            SourceKind::IdealSolenoid { axis, radius, flux, .. } => {
                if axis.normalized().is_none() || !(*radius > T::zero()) || !flux.is_finite() {
                    return bad("ideal solenoid needs a nonzero axis, positive radius and finite flux");
                }
            }
            SourceKind::FiniteSolenoid { axis, radius, half_length, turns_per_length, current, .. } => {
                if axis.normalized().is_none()
                    || !(*radius > T::zero())
                    || !(*half_length > T::zero())
                    || !(*turns_per_length > T::zero())
                    || !current.is_finite()
                {
                    return bad("finite solenoid needs a nonzero axis and positive radius, half-length and winding density");
                }
            }
            SourceKind::CircularLoop { normal, radius, current, .. } => {
                if normal.normalized().is_none() || !(*radius > T::zero()) || !current.is_finite() {
                    return bad("circular loop needs a nonzero normal and positive radius");
                }
            }
            SourceKind::PolylineLoop { vertices, current } => {
                if vertices.len() < 2 || !current.is_finite() {
                    return bad("polyline loop needs at least two vertices");
                }
            }
        }
        Ok(())
    }
}

fn centroid<T: Real>(vs: &[Vec3<T>]) -> Vec3<T> {
    let mut c = Vec3::zero();
    for v in vs {
        c += *v;
    }
    c * (T::one() / T::from_count(vs.len()))
}

/// Straight piece of wire carrying `current` (already multiplied by `g`) from `start` to `end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurrentSegment<T> {
    pub start: Vec3<T>,
    pub end: Vec3<T>,
    pub current: T,
}

impl<T: Real> CurrentSegment<T> {
    pub fn midpoint(&self) -> Vec3<T> {
        (self.start + self.end) * T::lit(0.5)
    }

    /// Direction times length.
    pub fn displacement(&self) -> Vec3<T> {
        self.end - self.start
    }

    pub fn length(&self) -> T {
        self.displacement().norm()
    }
}

/// Thin-wire sampling of a source as chains of segments.
#[derive(Clone, Debug, PartialEq)]
pub struct CurrentSegmentSet<T> {
    pub segments: Vec<CurrentSegment<T>>,
    /// Index ranges of the individual chains in `segments`.
    pub chains: Vec<Range<usize>>,
    pub level: u32,
}

impl<T: Real> CurrentSegmentSet<T> {
    /// Single chain through `vertices` carrying `current`; closed chains return to
    /// the first vertex.
    pub fn from_chain(vertices: &[Vec3<T>], current: T, closed: bool) -> Self {
        let mut segments = Vec::new();
        push_chain(&mut segments, vertices, current, closed);
        let n = segments.len();
        Self { segments, chains: vec![0..n], level: 0 }
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn total_length(&self) -> T {
        self.segments.iter().map(|s| s.length()).sum()
    }

    /// Largest `|Σ dℓ|` over chains.
    pub fn closure_residual(&self) -> T {
        self.chains
            .iter()
            .map(|r| {
                let mut acc = Vec3::zero();
                for s in &self.segments[r.clone()] {
                    acc += s.displacement();
                }
                acc.norm()
            })
            .fold(T::zero(), T::max)
    }

    /// Largest head-to-tail mismatch, including the wrap-around of each chain.
    pub fn endpoint_gap(&self) -> T {
        let mut gap = T::zero();
        for r in &self.chains {
            let segs = &self.segments[r.clone()];
            for w in segs.windows(2) {
                gap = gap.max((w[1].start - w[0].end).norm());
            }
            if let (Some(first), Some(last)) = (segs.first(), segs.last()) {
                gap = gap.max((first.start - last.end).norm());
            }
        }
        gap
    }

    /// `J_k = (2π)^{-3/2} ∫ J(x) e^{-ik·x} d³x` for the thin-wire current.
    ///
    /// Each straight segment is transformed exactly:
    /// `I dℓ e^{-ik·m} sinc(k·dℓ/2)` with `m` the midpoint. This is the midpoint
    /// rule with its exact correction factor, and it keeps `k·J_k = 0` to rounding
    /// for every closed chain.
    pub fn fourier_current(&self, k: Vec3<T>) -> CVec3<T> {
        let mut re = Vec3::zero();
        let mut im = Vec3::zero();
        for s in &self.segments {
            let dl = s.displacement();
            let phase = k.dot(s.midpoint());
            let w = s.current * sinc(k.dot(dl) * T::lit(0.5));
            let (sn, cs) = phase.sin_cos();
            re += dl * (w * cs);
            im -= dl * (w * sn);
        }
        let norm = inv_two_pi_three_halves::<T>();
        CVec3::from_parts(re * norm, im * norm)
    }

    /// Largest `|k·J_k| / (|k||J_k|)` over a fixed set of wave vectors scaled to the
    /// source size `scale`.
    pub fn divergence_residual(&self, scale: T) -> T {
        let mut worst = T::zero();
        for k in probe_wavevectors(scale) {
            let jk = self.fourier_current(k);
            let den = k.norm() * jk.norm();
            if den > T::zero() {
                let kj: Complex<T> = jk.dot_real(k);
                worst = worst.max(kj.norm() / den);
            }
        }
        worst
    }

    /// Largest segment length; the near-wire exclusion radius is half of it.
    pub fn max_segment_length(&self) -> T {
        self.segments.iter().map(|s| s.length()).fold(T::zero(), T::max)
    }
}

fn push_chain<T: Real>(out: &mut Vec<CurrentSegment<T>>, vertices: &[Vec3<T>], current: T, closed: bool) {
    for w in vertices.windows(2) {
        out.push(CurrentSegment { start: w[0], end: w[1], current });
    }
    if closed && vertices.len() > 1 {
        out.push(CurrentSegment { start: vertices[vertices.len() - 1], end: vertices[0], current });
    }
}

/// `sin(x)/x` with the removable point handled.
#[inline]
pub fn sinc<T: Real>(x: T) -> T {
    if x.abs() < T::lit(1e-4) {
        let x2 = x * x;
        T::one() - x2 / T::lit(6.0) + x2 * x2 / T::lit(120.0)
    } else {
        x.sin() / x
    }
}

#[inline]
pub fn inv_two_pi_three_halves<T: Real>() -> T {
    T::one() / (T::TAU() * T::TAU().sqrt())
}

/// Fixed probe set: 32 directions on a Fibonacci sphere at 4 magnitudes.
fn probe_wavevectors<T: Real>(scale: T) -> Vec<Vec3<T>> {
    let n = 32;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut out = Vec::with_capacity(4 * n);
    for mag in [0.37, 1.3, 3.1, 7.9] {
        for i in 0..n {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = golden * i as f64;
            let d = Vec3::from_f64([r * phi.cos(), r * phi.sin(), z]);
            out.push(d * (T::lit(mag) / scale));
        }
    }
    out
}

/// Segments for a circular loop: `45·2^level` of them.
pub fn loop_segments_per_level(level: u32) -> usize {
    45 << level
}

/// Helix segments per turn: `4·2^level`.
pub fn helix_segments_per_turn(level: u32) -> usize {
    4 << level
}

/// Samples `source` as closed chains of straight segments.
pub fn discretize<T: Real>(source: &CurrentSource<T>, level: u32) -> Result<CurrentSegmentSet<T>> {
    source.validate()?;
    let g = source.strength;
    let mut segments = Vec::new();
    match &source.kind {
        SourceKind::IdealSolenoid { .. } => return Err(Error::ClosedFormOnly("discretization")),
        SourceKind::CircularLoop { center, normal, radius, current } => {
            let (ea, eb) = Vec3::transverse_frame(*normal).expect("validated normal");
            let n = loop_segments_per_level(level);
            let verts: Vec<_> = (0..n)
                .map(|i| {
                    let th = T::TAU() * T::from_count(i) / T::from_count(n);
                    *center + (ea * th.cos() + eb * th.sin()) * *radius
                })
                .collect();
            push_chain(&mut segments, &verts, g * *current, true);
        }
        SourceKind::PolylineLoop { vertices, current } => {
            let per_edge = 1usize << level;
            let m = vertices.len();
            let mut verts = Vec::with_capacity(m * per_edge);
            for i in 0..m {
                let (a, b) = (vertices[i], vertices[(i + 1) % m]);
                for j in 0..per_edge {
                    let t = T::from_count(j) / T::from_count(per_edge);
                    verts.push(a + (b - a) * t);
                }
            }
            push_chain(&mut segments, &verts, g * *current, true);
        }
        SourceKind::FiniteSolenoid { center, axis, radius, half_length, turns_per_length, current } => {
            let verts = solenoid_vertices(*center, *axis, *radius, *half_length, *turns_per_length, level);
            push_chain(&mut segments, &verts, g * *current, true);
        }
    }
    let n = segments.len();
    Ok(CurrentSegmentSet { segments, chains: vec![0..n], level })
}

/// Helix vertices followed by the return path: a radial leg to the axis at the
/// far end, the axis back to the near end, and a radial leg out to the helix
/// start. Return legs are cut into pieces no longer than a helix segment.
///
/// The winding phase is fixed so the wire crosses the midplane at angle π/2 of
/// the axis frame, i.e. at `center + radius·e_b`.
fn solenoid_vertices<T: Real>(
    center: Vec3<T>,
    axis: Vec3<T>,
    radius: T,
    half_length: T,
    turns_per_length: T,
    level: u32,
) -> Vec<Vec3<T>> {
    let n_axis = axis.normalized().expect("validated axis");
    let (ea, eb) = Vec3::transverse_frame(n_axis).expect("validated axis");
    let turns = turns_per_length * half_length * T::lit(2.0);
    let per_turn = T::from_count(helix_segments_per_turn(level));
    let nseg = (turns * per_turn).ceil().to_usize().unwrap_or(1).max(1);
    let phi0 = T::FRAC_PI_2() - T::PI() * turns;
    let point = |s: T| {
        // s in [0, 1] from the near end (-half_length) to the far end
        let xa = -half_length + s * half_length * T::lit(2.0);
        let phi = phi0 + T::TAU() * turns * s;
        center + n_axis * xa + (ea * phi.cos() + eb * phi.sin()) * radius
    };
    let mut verts: Vec<Vec3<T>> = (0..=nseg).map(|i| point(T::from_count(i) / T::from_count(nseg))).collect();
    let seg_len = (verts[1] - verts[0]).norm();
    let pieces = |len: T| (len / seg_len).ceil().to_usize().unwrap_or(1).max(1);

    let far_end = *verts.last().unwrap();
    let far_axis = center + n_axis * half_length;
    let near_axis = center - n_axis * half_length;
    let near_start = verts[0];
    let mut leg = |from: Vec3<T>, to: Vec3<T>, include_end: bool| {
        let m = pieces((to - from).norm());
        for j in 1..m {
            verts.push(from + (to - from) * (T::from_count(j) / T::from_count(m)));
        }
        if include_end {
            verts.push(to);
        }
    };
    leg(far_end, far_axis, true);
    leg(far_axis, near_axis, true);
    // the final leg closes onto verts[0]
    leg(near_axis, near_start, false);
    verts
}

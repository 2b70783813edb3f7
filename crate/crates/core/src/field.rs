//! External vector potential in Coulomb, axial and shifted gauges, and the
//! gauge-independent magnetic field.
//!
//! Units are Heaviside–Lorentz with ħ = c = 1. A wire carrying `I` in a source of
//! strength `g` contributes `g·I/(4π) ∫ dℓ/|x − x′|` to the potential, so the field
//! at the centre of a circular loop is `g·I/(2r)`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kernel;
use crate::scalar::Real;
use crate::source::{discretize, CurrentSegmentSet, CurrentSource, SourceKind};
use crate::vector::Vec3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances<T> {
    /// Relative accuracy target for adaptive quadratures.
    pub quadrature_rel_tol: T,
    /// Finite-difference step in units of the source radius.
    pub derivative_step: T,
    /// Half-length of the z-integration window for χ; `None` selects
    /// `20 × (radius + half-length)`.
    pub axial_cutoff: Option<T>,
    /// Largest tolerated estimate of the χ tail beyond the cutoff.
    pub axial_tail_bound: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            quadrature_rel_tol: T::lit(1e-10),
            derivative_step: T::lit(1e-4),
            axial_cutoff: None,
            axial_tail_bound: T::lit(1e-6),
        }
    }
}

impl<T: Real> Tolerances<T> {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: T| v > T::zero() && v.is_finite();
        if !pos(self.quadrature_rel_tol)
            || !pos(self.derivative_step)
            || !pos(self.axial_tail_bound)
            || self.axial_cutoff.is_some_and(|l| !pos(l))
        {
            return Err(Error::InvalidParameter("tolerances must be positive and finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct Wire<T> {
    a: Vec3<T>,
    b: Vec3<T>,
    len: T,
    /// `current / 4π`
    weight: T,
}

#[derive(Clone, Debug)]
enum Repr<T> {
    Ideal { center: Vec3<T>, axis: Vec3<T>, radius: T, flux: T },
    Wires { set: CurrentSegmentSet<T>, wires: Vec<Wire<T>> },
}

/// A source prepared for field evaluation.
#[derive(Clone, Debug)]
pub struct SourceField<T> {
    source: CurrentSource<T>,
    repr: Repr<T>,
    tol: Tolerances<T>,
}

/// χ at a point together with the estimated contribution from beyond the cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiValue<T> {
    pub value: T,
    pub tail_estimate: T,
}

impl<T: Real> SourceField<T> {
    /// Discretizes wire sources at `level`; ideal solenoids are kept in closed form.
    pub fn new(source: &CurrentSource<T>, level: u32, tol: Tolerances<T>) -> Result<Self> {
        source.validate()?;
        tol.validate()?;
        let repr = match &source.kind {
            SourceKind::IdealSolenoid { center, axis, radius, flux } => Repr::Ideal {
                center: *center,
                axis: axis.normalized().expect("validated axis"),
                radius: *radius,
                flux: *flux * source.strength,
            },
            _ => {
                let set = discretize(source, level)?;
                Self::wires_from(set)
            }
        };
        Ok(Self { source: source.clone(), repr, tol })
    }

    /// Uses an already discretized current (for example an open chain in tests).
    pub fn from_segments(source: &CurrentSource<T>, set: CurrentSegmentSet<T>, tol: Tolerances<T>) -> Result<Self> {
        tol.validate()?;
        Ok(Self { source: source.clone(), repr: Self::wires_from(set), tol })
    }

    fn wires_from(set: CurrentSegmentSet<T>) -> Repr<T> {
        let inv4pi = T::one() / (T::lit(4.0) * T::PI());
        let wires = set
            .segments
            .iter()
            .map(|s| Wire { a: s.start, b: s.end, len: s.length(), weight: s.current * inv4pi })
            .collect();
        Repr::Wires { set, wires }
    }

    pub fn source(&self) -> &CurrentSource<T> {
        &self.source
    }

    pub fn tolerances(&self) -> &Tolerances<T> {
        &self.tol
    }

    pub fn segments(&self) -> Option<&CurrentSegmentSet<T>> {
        match &self.repr {
            Repr::Wires { set, .. } => Some(set),
            Repr::Ideal { .. } => None,
        }
    }

    pub fn strength(&self) -> T {
        self.source.strength
    }

    /// Characteristic length: the source radius.
    pub fn length_scale(&self) -> T {
        self.source.radius()
    }

    /// Central-difference step `h`.
    pub fn derivative_step(&self) -> T {
        self.tol.derivative_step * self.length_scale()
    }

    /// `L_max` for the χ integration window.
    pub fn axial_cutoff(&self) -> T {
        self.tol
            .axial_cutoff
            .unwrap_or_else(|| T::lit(20.0) * (self.source.radius() + self.source.half_length()))
    }

    /// Smallest distance from `x` to any wire, with the exclusion radius of that wire.
    pub fn clearance(&self, x: Vec3<T>) -> Option<(T, T)> {
        let Repr::Wires { wires, .. } = &self.repr else { return None };
        let mut best: Option<(T, T)> = None;
        for w in wires {
            let d = kernel::distance_to_segment(w.a, w.b, x);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, w.len * T::lit(0.5)));
            }
        }
        best
    }

    fn near_singular(x: Vec3<T>, w: &Wire<T>, ra: T, rb: T) -> Result<()> {
        // distance ≤ ℓ/2 implies |x−a| + |x−b| ≤ 2ℓ, so most wires skip the exact test
        if ra + rb < w.len * T::lit(2.0) {
            let d = kernel::distance_to_segment(w.a, w.b, x);
            let excl = w.len * T::lit(0.5);
            if d < excl {
                return Err(Error::NearSingular { distance: d.as_f64(), exclusion: excl.as_f64() });
            }
        }
        Ok(())
    }

    /// Coulomb-gauge potential `g·A⊥(x)`: exact straight-segment Biot–Savart sum.
    pub fn coulomb_a(&self, x: Vec3<T>) -> Result<Vec3<T>> {
        match &self.repr {
            Repr::Ideal { center, axis, radius, flux } => Ok(ideal_a(*center, *axis, *radius, *flux, x)),
            Repr::Wires { wires, .. } => {
                let mut acc = Vec3::zero();
                for w in wires {
                    if w.len == T::zero() {
                        continue;
                    }
                    let ra = (x - w.a).norm();
                    let rb = (x - w.b).norm();
                    Self::near_singular(x, w, ra, rb)?;
                    let f = T::lit(2.0) * (w.len / (ra + rb)).atanh();
                    acc += (w.b - w.a) * (w.weight * f / w.len);
                }
                Ok(acc)
            }
        }
    }

    /// Magnetic field `g·B(x)` summed directly from the segments.
    pub fn b_field(&self, x: Vec3<T>) -> Result<Vec3<T>> {
        match &self.repr {
            Repr::Ideal { center, axis, radius, flux } => Ok(ideal_b(*center, *axis, *radius, *flux, x)),
            Repr::Wires { wires, .. } => {
                let mut acc = Vec3::zero();
                for w in wires {
                    let ra = (x - w.a).norm();
                    let rb = (x - w.b).norm();
                    Self::near_singular(x, w, ra, rb)?;
                    acc += kernel::field_factor(w.a, w.b, x) * w.weight;
                }
                Ok(acc)
            }
        }
    }

    /// Field without the near-wire guard, for surface quadratures whose nodes may
    /// approach a wire piercing the surface.
    pub fn b_field_unchecked(&self, x: Vec3<T>) -> Vec3<T> {
        match &self.repr {
            Repr::Ideal { center, axis, radius, flux } => ideal_b(*center, *axis, *radius, *flux, x),
            Repr::Wires { wires, .. } => {
                let mut acc = Vec3::zero();
                for w in wires {
                    acc += kernel::field_factor(w.a, w.b, x) * w.weight;
                }
                acc
            }
        }
    }

    /// Principal-value antiderivative of `A⊥₃` along z:
    /// `χ = ½[∫_{−L}^{z} A₃ dz′ − ∫_{z}^{L} A₃ dz′]`, integrated in closed form per segment.
    ///
    /// The tail beyond `±L` is estimated from the `1/z³` decay of `A₃` as
    /// `(L/4)|A₃(L) − A₃(−L)|` and must stay below the configured bound.
    pub fn axial_chi(&self, x: Vec3<T>) -> Result<ChiValue<T>> {
        let value = self.chi_raw(x)?;
        let tail_estimate = match &self.repr {
            Repr::Ideal { .. } => T::zero(),
            Repr::Wires { .. } => {
                let l = self.axial_cutoff();
                let up = self.coulomb_a(Vec3::new(x.x, x.y, l))?;
                let down = self.coulomb_a(Vec3::new(x.x, x.y, -l))?;
                l * T::lit(0.25) * (up.z - down.z).abs()
            }
        };
        if tail_estimate > self.tol.axial_tail_bound {
            return Err(Error::TailBoundExceeded {
                estimate: tail_estimate.as_f64(),
                bound: self.tol.axial_tail_bound.as_f64(),
            });
        }
        Ok(ChiValue { value, tail_estimate })
    }

    fn chi_raw(&self, x: Vec3<T>) -> Result<T> {
        match &self.repr {
            Repr::Ideal { axis, .. } => {
                if axis.cross(Vec3::unit_z()).norm() < T::lit(1e-12) {
                    Ok(T::zero())
                } else {
                    Err(Error::ClosedFormOnly("the axial gauge unless its axis is along z"))
                }
            }
            Repr::Wires { wires, .. } => {
                let l = self.axial_cutoff();
                let half = T::lit(0.5);
                let mut acc = T::zero();
                for w in wires {
                    let dz = w.b.z - w.a.z;
                    if dz == T::zero() {
                        continue;
                    }
                    let ra = (x - w.a).norm();
                    let rb = (x - w.b).norm();
                    Self::near_singular(x, w, ra, rb)?;
                    let below = kernel::zline_factor(w.a, w.b, x.x, x.y, -l, x.z);
                    let above = kernel::zline_factor(w.a, w.b, x.x, x.y, x.z, l);
                    acc = acc + w.weight * (dz / w.len) * half * (below - above);
                }
                Ok(acc)
            }
        }
    }

    /// `∇χ` by central differences with step [`Self::derivative_step`].
    pub fn chi_gradient(&self, x: Vec3<T>) -> Result<Vec3<T>> {
        central_gradient(|p| self.chi_raw(p), x, self.derivative_step())
    }

    /// Axial-gauge potential `A⊥ − ∇χ`, whose third component vanishes.
    pub fn axial_a(&self, x: Vec3<T>) -> Result<Vec3<T>> {
        let a = self.coulomb_a(x)?;
        if let Repr::Ideal { .. } = self.repr {
            self.chi_raw(x)?;
            return Ok(a);
        }
        Ok(a - self.chi_gradient(x)?)
    }
}

/// Closed-form potential of an ideal solenoid carrying `flux` (already times `g`):
/// azimuthal, `Φρ/(2πR²)` inside and `Φ/(2πρ)` outside.
pub fn ideal_solenoid_a<T: Real>(center: Vec3<T>, axis: Vec3<T>, radius: T, flux: T, x: Vec3<T>) -> Vec3<T> {
    match axis.normalized() {
        Some(n) => ideal_a(center, n, radius, flux, x),
        None => Vec3::zero(),
    }
}

fn ideal_a<T: Real>(center: Vec3<T>, n: Vec3<T>, radius: T, flux: T, x: Vec3<T>) -> Vec3<T> {
    let r = x - center;
    let rho_v = r - n * r.dot(n);
    let rho2 = rho_v.norm_sq();
    if rho2 == T::zero() {
        return Vec3::zero();
    }
    let f = if rho2 <= radius * radius { T::one() / (radius * radius) } else { T::one() / rho2 };
    n.cross(rho_v) * (flux / T::TAU() * f)
}

fn ideal_b<T: Real>(center: Vec3<T>, n: Vec3<T>, radius: T, flux: T, x: Vec3<T>) -> Vec3<T> {
    let r = x - center;
    let rho_v = r - n * r.dot(n);
    if rho_v.norm_sq() < radius * radius {
        n * (flux / (T::PI() * radius * radius))
    } else {
        Vec3::zero()
    }
}

/// Coulomb potential with its discretization error estimated by comparing
/// refinement levels (the polygon error is second order in segment length).
///
/// Starting at `level`, refines until the Richardson error estimate falls below
/// `tol.quadrature_rel_tol · |A|` or `max_level` is reached; returns the
/// extrapolated value and the estimate.
pub fn coulomb_a_refined<T: Real>(
    source: &CurrentSource<T>,
    x: Vec3<T>,
    level: u32,
    max_level: u32,
    tol: Tolerances<T>,
) -> Result<(Vec3<T>, T)> {
    let mut prev = SourceField::new(source, level, tol)?.coulomb_a(x)?;
    let mut lv = level;
    loop {
        lv += 1;
        let next = SourceField::new(source, lv, tol)?.coulomb_a(x)?;
        let est = (next - prev).norm() / T::lit(3.0);
        let extrap = next + (next - prev) * (T::one() / T::lit(3.0));
        if est <= tol.quadrature_rel_tol * extrap.norm() || lv >= max_level {
            return Ok((extrap, est));
        }
        prev = next;
    }
}

/// Central-difference gradient of a scalar field.
pub fn central_gradient<T: Real, F>(f: F, x: Vec3<T>, h: T) -> Result<Vec3<T>>
where
    F: Fn(Vec3<T>) -> Result<T>,
{
    let inv = T::one() / (h + h);
    let mut g = [T::zero(); 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let e = Vec3::unit(i) * h;
        *gi = (f(x + e)? - f(x - e)?) * inv;
    }
    Ok(Vec3::new(g[0], g[1], g[2]))
}

/// Central-difference curl of a vector field.
pub fn central_curl<T: Real, F>(f: F, x: Vec3<T>, h: T) -> Result<Vec3<T>>
where
    F: Fn(Vec3<T>) -> Result<Vec3<T>>,
{
    let inv = T::one() / (h + h);
    let mut d = [[T::zero(); 3]; 3]; // d[i][j] = ∂_i A_j
    for (i, row) in d.iter_mut().enumerate() {
        let e = Vec3::unit(i) * h;
        let diff = (f(x + e)? - f(x - e)?) * inv;
        *row = [diff.x, diff.y, diff.z];
    }
    Ok(Vec3::new(d[1][2] - d[2][1], d[2][0] - d[0][2], d[0][1] - d[1][0]))
}

/// Central-difference divergence.
pub fn central_divergence<T: Real, F>(f: F, x: Vec3<T>, h: T) -> Result<T>
where
    F: Fn(Vec3<T>) -> Result<Vec3<T>>,
{
    let inv = T::one() / (h + h);
    let mut acc = T::zero();
    for i in 0..3 {
        let e = Vec3::unit(i) * h;
        acc = acc + (f(x + e)?[i] - f(x - e)?[i]) * inv;
    }
    Ok(acc)
}

/// Divergence at steps `h` and `h/2` combined by Richardson extrapolation.
/// Returns `(extrapolated, |D_h − D_{h/2}|)`.
pub fn extrapolated_divergence<T: Real, F>(f: F, x: Vec3<T>, h: T) -> Result<(T, T)>
where
    F: Fn(Vec3<T>) -> Result<Vec3<T>>,
{
    let d1 = central_divergence(&f, x, h)?;
    let d2 = central_divergence(&f, x, h * T::lit(0.5))?;
    Ok(((T::lit(4.0) * d2 - d1) / T::lit(3.0), (d1 - d2).abs()))
}

/// Gaussian envelope `exp(−|x − center|²/width²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Envelope<T> {
    pub width: T,
    pub center: Vec3<T>,
}

/// Gauge function `Λ(x) = P(x − c) · E(x)`: a polynomial of degree ≤ 3 in the
/// offset from the envelope centre (or the origin), optionally times a Gaussian
/// envelope. Non-constant polynomials require the envelope so that `∇Λ` decays.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaSpec<T> {
    /// `(coefficient, [px, py, pz])` for `coefficient · x^px y^py z^pz`.
    pub terms: Vec<(T, [u8; 3])>,
    pub envelope: Option<Envelope<T>>,
}

impl<T: Real> LambdaSpec<T> {
    pub fn zero() -> Self {
        Self { terms: Vec::new(), envelope: None }
    }

    /// `amplitude · exp(−|x − center|²/width²)`.
    pub fn gaussian(amplitude: T, width: T, center: Vec3<T>) -> Self {
        Self { terms: vec![(amplitude, [0, 0, 0])], envelope: Some(Envelope { width, center }) }
    }

    pub fn validate(&self) -> Result<()> {
        let unsupported = |m: String| Err(Error::UnsupportedGaugeFunction(m));
        for (c, p) in &self.terms {
            if !c.is_finite() {
                return unsupported("non-finite coefficient".into());
            }
            let deg: u32 = p.iter().map(|&d| d as u32).sum();
            if deg > 3 {
                return unsupported(format!("monomial degree {deg} exceeds 3"));
            }
            if deg > 0 && self.envelope.is_none() && *c != T::zero() {
                return unsupported("a non-constant polynomial needs a Gaussian envelope".into());
            }
        }
        if let Some(e) = &self.envelope {
            if !(e.width > T::zero()) || !e.width.is_finite() || !e.center.is_finite() {
                return unsupported("envelope width must be positive".into());
            }
        }
        Ok(())
    }

    fn origin(&self) -> Vec3<T> {
        self.envelope.map_or(Vec3::zero(), |e| e.center)
    }

    fn poly(&self, y: Vec3<T>) -> (T, Vec3<T>) {
        let mut p = T::zero();
        let mut g = Vec3::zero();
        let yy = [y.x, y.y, y.z];
        for (c, pw) in &self.terms {
            let mut mono = *c;
            for i in 0..3 {
                mono = mono * yy[i].powi(pw[i] as i32);
            }
            p = p + mono;
            let mut dg = [T::zero(); 3];
            for i in 0..3 {
                if pw[i] == 0 {
                    continue;
                }
                let mut d = *c * T::from_count(pw[i] as usize);
                for j in 0..3 {
                    let e = if i == j { pw[j] as i32 - 1 } else { pw[j] as i32 };
                    d = d * yy[j].powi(e);
                }
                dg[i] = d;
            }
            g += Vec3::new(dg[0], dg[1], dg[2]);
        }
        (p, g)
    }

    pub fn value(&self, x: Vec3<T>) -> T {
        let y = x - self.origin();
        let (p, _) = self.poly(y);
        match &self.envelope {
            Some(e) => p * (-y.norm_sq() / (e.width * e.width)).exp(),
            None => p,
        }
    }

    pub fn gradient(&self, x: Vec3<T>) -> Vec3<T> {
        let y = x - self.origin();
        let (p, gp) = self.poly(y);
        match &self.envelope {
            Some(e) => {
                let w2 = e.width * e.width;
                let env = (-y.norm_sq() / w2).exp();
                (gp - y * (T::lit(2.0) * p / w2)) * env
            }
            None => gp,
        }
    }
}

impl<T: Real> fmt::Display for LambdaSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        for (i, (c, p)) in self.terms.iter().enumerate() {
            let mut s = format!("{}", c);
            if i > 0 && !s.starts_with('-') {
                s.insert(0, '+');
            }
            write!(f, "{s}")?;
            for (axis, &pw) in ["x", "y", "z"].iter().zip(p) {
                match pw {
                    0 => {}
                    1 => write!(f, "*{axis}")?,
                    n => write!(f, "*{axis}^{n}")?,
                }
            }
        }
        if let Some(e) = &self.envelope {
            write!(f, "@gauss({};{},{},{})", e.width, e.center.x, e.center.y, e.center.z)?;
        }
        Ok(())
    }
}

impl<T: Real> FromStr for LambdaSpec<T> {
    type Err = Error;

    /// Grammar: `poly [@gauss(width[;cx,cy,cz])]` where `poly` is a sum of terms
    /// such as `0.3`, `-2*x*y`, `1.5e-2*z^2` or `x*y*z`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: &str| Error::UnsupportedGaugeFunction(format!("{m} in `{s}`"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (poly, env) = match compact.split_once('@') {
            Some((p, e)) => (p.to_string(), Some(e.to_string())),
            None => (compact.clone(), None),
        };
        let envelope = match env {
            None => None,
            Some(e) => {
                let inner = e
                    .strip_prefix("gauss(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| bad("envelope must be gauss(...)"))?;
                let (w, c) = match inner.split_once(';') {
                    Some((w, c)) => (w, Some(c)),
                    None => (inner, None),
                };
                let width = parse_num::<T>(w).ok_or_else(|| bad("bad envelope width"))?;
                let center = match c {
                    None => Vec3::zero(),
                    Some(c) => {
                        let v: Vec<T> = c.split(',').map(parse_num).collect::<Option<_>>().ok_or_else(|| bad("bad envelope centre"))?;
                        if v.len() != 3 {
                            return Err(bad("envelope centre needs three coordinates"));
                        }
                        Vec3::new(v[0], v[1], v[2])
                    }
                };
                Some(Envelope { width, center })
            }
        };
        let terms = parse_poly::<T>(&poly).ok_or_else(|| bad("malformed polynomial"))?;
        let spec = Self { terms, envelope };
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_num<T: Real>(s: &str) -> Option<T> {
    let v: f64 = s.parse().ok()?;
    v.is_finite().then(|| T::lit(v))
}

fn parse_poly<T: Real>(s: &str) -> Option<Vec<(T, [u8; 3])>> {
    if s.is_empty() {
        return None;
    }
    // split into signed terms, leaving exponent signs (1e-3) alone
    let bytes = s.as_bytes();
    let mut pieces = Vec::new();
    let mut start = 0;
    for i in 1..bytes.len() {
        let c = bytes[i];
        if (c == b'+' || c == b'-') && !matches!(bytes[i - 1], b'e' | b'E' | b'*' | b'^') {
            pieces.push(&s[start..i]);
            start = i;
        }
    }
    pieces.push(&s[start..]);
    let mut out = Vec::new();
    for p in pieces {
        let (sign, body) = match p.as_bytes()[0] {
            b'-' => (-1.0, &p[1..]),
            b'+' => (1.0, &p[1..]),
            _ => (1.0, p),
        };
        if body.is_empty() {
            return None;
        }
        let mut coef = sign;
        let mut pw = [0u8; 3];
        for (j, factor) in body.split('*').enumerate() {
            let (var, exp) = match factor.split_once('^') {
                Some((v, e)) => (v, e.parse::<u8>().ok()?),
                None => (factor, 1),
            };
            match var {
                "x" => pw[0] = pw[0].checked_add(exp)?,
                "y" => pw[1] = pw[1].checked_add(exp)?,
                "z" => pw[2] = pw[2].checked_add(exp)?,
                num if j == 0 && !factor.contains('^') => coef *= num.parse::<f64>().ok()?,
                _ => return None,
            }
        }
        if !coef.is_finite() {
            return None;
        }
        out.push((T::lit(coef), pw));
    }
    Some(out)
}

/// Gauge of an evaluated potential.
#[derive(Clone, Debug, PartialEq)]
pub enum Gauge<T> {
    Coulomb,
    Axial,
    /// `base + g∇Λ`.
    Shifted { base: Box<Gauge<T>>, lambda: LambdaSpec<T> },
}

impl<T: Real> Gauge<T> {
    pub fn shifted(lambda: LambdaSpec<T>) -> Self {
        Gauge::Shifted { base: Box::new(Gauge::Coulomb), lambda }
    }
}

impl<T: Real> fmt::Display for Gauge<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gauge::Coulomb => write!(f, "coulomb"),
            Gauge::Axial => write!(f, "axial"),
            Gauge::Shifted { base, lambda } => match **base {
                Gauge::Coulomb => write!(f, "shifted:{lambda}"),
                ref b => write!(f, "{b}+shifted:{lambda}"),
            },
        }
    }
}

impl<T: Real> FromStr for Gauge<T> {
    type Err = Error;

    /// `coulomb`, `axial`, `shifted:<Λ>` (on top of Coulomb) or `axial+shifted:<Λ>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((base, rest)) = s.split_once("+shifted:") {
            let base: Gauge<T> = base.parse()?;
            return Ok(Gauge::Shifted { base: Box::new(base), lambda: rest.parse()? });
        }
        match s {
            "coulomb" => Ok(Gauge::Coulomb),
            "axial" => Ok(Gauge::Axial),
            _ => match s.strip_prefix("shifted:") {
                Some(spec) => Ok(Gauge::shifted(spec.parse()?)),
                None => Err(Error::UnsupportedGaugeFunction(format!(
                    "unknown gauge `{s}` (expected coulomb, axial or shifted:<spec>)"
                ))),
            },
        }
    }
}

/// A source potential in a definite gauge.
#[derive(Clone, Debug)]
pub struct GaugePotential<'a, T> {
    pub field: &'a SourceField<T>,
    pub gauge: Gauge<T>,
}

impl<'a, T: Real> GaugePotential<'a, T> {
    pub fn new(field: &'a SourceField<T>, gauge: Gauge<T>) -> Self {
        Self { field, gauge }
    }

    pub fn coulomb(field: &'a SourceField<T>) -> Self {
        Self::new(field, Gauge::Coulomb)
    }

    pub fn axial(field: &'a SourceField<T>) -> Self {
        Self::new(field, Gauge::Axial)
    }

    /// `g·A(x)` in this gauge.
    pub fn vector_potential(&self, x: Vec3<T>) -> Result<Vec3<T>> {
        eval(self.field, &self.gauge, x)
    }

    /// Gauge function `Λ_G` with `A_G = A⊥ + ∇Λ_G` (strength included); zero for Coulomb.
    pub fn gauge_function(&self, x: Vec3<T>) -> Result<T> {
        gauge_fn(self.field, &self.gauge, x)
    }

    pub fn curl(&self, x: Vec3<T>) -> Result<Vec3<T>> {
        central_curl(|p| self.vector_potential(p), x, self.field.derivative_step())
    }

    pub fn divergence(&self, x: Vec3<T>) -> Result<T> {
        central_divergence(|p| self.vector_potential(p), x, self.field.derivative_step())
    }

    pub fn label(&self) -> String {
        self.gauge.to_string()
    }
}

fn eval<T: Real>(field: &SourceField<T>, gauge: &Gauge<T>, x: Vec3<T>) -> Result<Vec3<T>> {
    match gauge {
        Gauge::Coulomb => field.coulomb_a(x),
        Gauge::Axial => field.axial_a(x),
        Gauge::Shifted { base, lambda } => {
            lambda.validate()?;
            Ok(eval(field, base, x)? + lambda.gradient(x) * field.strength())
        }
    }
}

fn gauge_fn<T: Real>(field: &SourceField<T>, gauge: &Gauge<T>, x: Vec3<T>) -> Result<T> {
    match gauge {
        Gauge::Coulomb => Ok(T::zero()),
        Gauge::Axial => Ok(-field.axial_chi(x)?.value),
        Gauge::Shifted { base, lambda } => Ok(gauge_fn(field, base, x)? + lambda.value(x) * field.strength()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    fn canonical_loop() -> SourceField<f64> {
        let s = CurrentSource::circular_loop(Vec3::zero(), v(1., 0., 0.), 0.5, 1.0);
        SourceField::new(&s, 2, Tolerances::default()).unwrap()
    }

    #[test]
    fn loop_center_field() {
        let s = CurrentSource::circular_loop(Vec3::zero(), v(0., 0., 1.), 1.0, 1.0);
        let (b, err) = {
            // Richardson over levels, as for the potential
            let f3 = SourceField::new(&s, 3, Tolerances::default()).unwrap().b_field(Vec3::zero()).unwrap();
            let f4 = SourceField::new(&s, 4, Tolerances::default()).unwrap().b_field(Vec3::zero()).unwrap();
            (f4 + (f4 - f3) * (1.0 / 3.0), (f4 - f3).norm())
        };
        assert!(err < 1e-4);
        assert!((b.z - 0.5).abs() < 1e-9, "{b:?}");
    }

    #[test]
    fn on_axis_potential_vanishes() {
        let f = canonical_loop();
        for x in [0.0, 0.3, -2.0] {
            let a = f.coulomb_a(v(x, 0.0, 0.0)).unwrap().norm();
            assert!(a < 1e-14, "{a}");
        }
    }

    #[test]
    fn near_wire_is_rejected() {
        let f = canonical_loop();
        let e = f.coulomb_a(v(0.0, 0.5, 0.001)).unwrap_err();
        assert!(matches!(e, Error::NearSingular { .. }));
    }

    #[test]
    fn ideal_solenoid_continuity_and_circulation() {
        let c = Vec3::zero();
        let n = v(0.0, 0.0, 1.0);
        let inside = ideal_solenoid_a(c, n, 0.5, 2.0, v(0.5 - 1e-15, 0.0, 0.0));
        let outside = ideal_solenoid_a(c, n, 0.5, 2.0, v(0.5 + 1e-15, 0.0, 0.0));
        assert!((inside - outside).norm() < 1e-12);
        assert_eq!(ideal_solenoid_a(c, n, 0.5, 2.0, v(0.0, 0.0, 3.0)), Vec3::zero());
        let a = ideal_solenoid_a(c, n, 0.5, 2.0, v(1.5, 0.0, 0.0));
        assert!((a.y * std::f64::consts::TAU * 1.5 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn chi_k_space_free_spot_values() {
        // reference values from an independent principal-value quadrature of A₃
        // along z (L = 10) for the canonical loop discretized with 120 segments
        let s = CurrentSource::circular_loop(Vec3::zero(), v(1., 0., 0.), 0.5, 1.0);
        let set = {
            let n = 120;
            let verts: Vec<_> = (0..n)
                .map(|i| {
                    let th = std::f64::consts::TAU * i as f64 / n as f64;
                    v(0.0, 0.5 * th.cos(), 0.5 * th.sin())
                })
                .collect();
            CurrentSegmentSet::from_chain(&verts, 1.0, true)
        };
        let tol = Tolerances { axial_cutoff: Some(10.0), ..Default::default() };
        let f = SourceField::from_segments(&s, set, tol).unwrap();
        let probes = [(v(0.5, 0.7, 0.3), 0.0173324), (v(0.3, -0.6, 0.6), -0.0530828), (v(-0.6, 0.2, -0.7), -0.0143332)];
        for (x, want) in probes {
            let got = f.axial_chi(x).unwrap().value;
            assert!((got - want).abs() < 2e-7, "{x:?}: {got} vs {want}");
        }
    }

    #[test]
    fn axial_condition_and_field_invariance() {
        let f = canonical_loop();
        let ax = GaugePotential::axial(&f);
        let co = GaugePotential::coulomb(&f);
        for x in [v(0.2, 0.9, 0.4), v(-0.4, -0.3, 0.8), v(0.7, 0.1, -0.6)] {
            let a = ax.vector_potential(x).unwrap();
            assert!(a.z.abs() < 1e-6, "{a:?}");
            let b = f.b_field(x).unwrap();
            assert!((ax.curl(x).unwrap() - b).norm() < 1e-4 * b.norm());
            assert!((co.curl(x).unwrap() - b).norm() < 1e-4 * b.norm());
        }
    }

    #[test]
    fn chi_is_odd_about_the_midplane_for_the_canonical_loop() {
        let f = canonical_loop();
        let a = f.axial_chi(v(0.3, 0.4, 0.7)).unwrap().value;
        let b = f.axial_chi(v(0.3, 0.4, -0.7)).unwrap().value;
        assert!((a + b).abs() < 1e-12 * a.abs().max(1e-3), "{a} {b}");
        assert!(a.abs() > 1e-3);
    }

    #[test]
    fn tail_bound_is_enforced() {
        // tilted loop: no z-reflection symmetry, so the tails do not cancel
        let s = CurrentSource::circular_loop(v(0.0, 0.2, 0.4), v(1., 0., 0.5), 0.5, 1.0);
        let tol = Tolerances { axial_cutoff: Some(1.5), axial_tail_bound: 1e-9, ..Default::default() };
        let f = SourceField::new(&s, 1, tol).unwrap();
        assert!(matches!(f.axial_chi(v(0.1, 0.3, 0.2)), Err(Error::TailBoundExceeded { .. })));
    }

    #[test]
    fn lambda_parse_roundtrip_and_gradient() {
        let l: LambdaSpec<f64> = "0.3 - 2*x*y + 1.5e-1*z^2 @ gauss(0.8;0.1,0,-0.2)".parse().unwrap();
        assert_eq!(l.terms.len(), 3);
        let again: LambdaSpec<f64> = l.to_string().parse().unwrap();
        assert_eq!(again, l);
        let x = v(0.3, -0.2, 0.5);
        let g = central_gradient(|p| Ok(l.value(p)), x, 1e-5).unwrap();
        assert!((g - l.gradient(x)).norm() < 1e-9);
    }

    #[test]
    fn lambda_rejects_unbounded_and_high_degree() {
        assert!("x".parse::<LambdaSpec<f64>>().is_err());
        assert!("x^4@gauss(1)".parse::<LambdaSpec<f64>>().is_err());
        assert!("2*q@gauss(1)".parse::<LambdaSpec<f64>>().is_err());
        assert!("1.5".parse::<LambdaSpec<f64>>().is_ok());
        assert!("0".parse::<LambdaSpec<f64>>().is_ok());
    }

    #[test]
    fn gauge_strings() {
        for s in ["coulomb", "axial", "shifted:0.3@gauss(1;0,0,0)", "axial+shifted:1*x*y@gauss(2;0,0,0)"] {
            let g: Gauge<f64> = s.parse().unwrap();
            assert_eq!(g.to_string(), s);
        }
        assert!("lorenz".parse::<Gauge<f64>>().is_err());
        assert!("shifted:x".parse::<Gauge<f64>>().is_err());
    }

    #[test]
    fn ideal_solenoid_along_z_has_trivial_axial_gauge() {
        let s = CurrentSource::ideal_solenoid(Vec3::zero(), v(0., 0., 1.), 0.5, 2.0);
        let f = SourceField::new(&s, 0, Tolerances::default()).unwrap();
        let x = v(0.9, 0.4, 0.3);
        assert_eq!(f.axial_a(x).unwrap(), f.coulomb_a(x).unwrap());
        let tilted = CurrentSource::ideal_solenoid(Vec3::zero(), v(1., 0., 0.), 0.5, 2.0);
        let f = SourceField::new(&tilted, 0, Tolerances::default()).unwrap();
        assert!(matches!(f.axial_a(x), Err(Error::ClosedFormOnly(_))));
    }
}

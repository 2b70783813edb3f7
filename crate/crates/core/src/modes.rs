//! Photon modes on a momentum lattice and the energy corrections built from them.
//!
//! The field expansions are
//! `A⊥(x) = ∫ d³k (2π)^{-3/2} (2ω)^{-1/2} Σ_λ e (a e^{ik·x} + a† e^{-ik·x})` and
//! `E⊥(x) = i ∫ d³k (2π)^{-3/2} (ω/2)^{1/2} Σ_λ e (a e^{ik·x} − a† e^{-ik·x})`,
//! and the coherent ground state of `H_EM + H_g` has `a|Õ⟩ = α|Õ⟩` with
//! `α(k,λ) = e(k,λ)·(gJ_k) / √(2ω³)`.
//!
//! Integrals over `k` become sums over the lattice `k = Δk (n + ½)` with weight
//! `Δk³`. On a symmetric lattice only modes with `k_x > 0` are stored; the
//! partner `−k` carries `J_{−k} = J_k*` exactly, so every sum visits both
//! members of a pair together.

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::path::ParticleState;
use crate::scalar::Real;
use crate::source::{discretize, inv_two_pi_three_halves, CurrentSegmentSet, CurrentSource};
use crate::sum::par_pairwise_map;
use crate::vector::{CVec3, Vec3};

/// Default number of lattice points per half-axis.
pub const DEFAULT_HALF_EXTENT: usize = 48;

/// Taper start used for axial-gauge sums. `A^X` jumps across the sheet of
/// z-lines through the wire, so a sharp cutoff leaves ringing that decays
/// only like `1/(k_max·d)` with the distance `d` to that sheet.
pub const DEFAULT_AXIAL_TAPER: f64 = 0.3;

/// Lattice `k_i = Δk (n_i + ½)` with `n_i` in `lo[i]..=hi[i]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec<T> {
    pub spacing: T,
    pub lo: [i64; 3],
    pub hi: [i64; 3],
    /// Start of the spectral taper as a fraction of the lattice edge, or `None`
    /// for a sharp cutoff.
    pub taper: Option<T>,
}

impl<T: Real> GridSpec<T> {
    /// `n ∈ [−N, N−1]` on every axis.
    pub fn symmetric(spacing: T, half_extent: usize) -> Self {
        let n = half_extent as i64;
        Self { spacing, lo: [-n; 3], hi: [n - 1; 3], taper: None }
    }

    /// The default lattice for a source of the given radius: `N = 48`,
    /// `Δk = π / (8 R)`.
    pub fn for_radius(radius: T) -> Self {
        Self::symmetric(T::PI() / (T::lit(8.0) * radius), DEFAULT_HALF_EXTENT)
    }

    pub fn with_taper(mut self, t0: Option<T>) -> Self {
        self.taper = t0;
        self
    }

    /// Halves `Δk` and doubles `N`, keeping the largest `|k_i|` fixed.
    pub fn refined(&self) -> Self {
        let mut out = *self;
        out.spacing = self.spacing * T::lit(0.5);
        for i in 0..3 {
            out.lo[i] = 2 * self.lo[i];
            out.hi[i] = 2 * self.hi[i] + 1;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.taper.is_some_and(|t| !(t >= T::zero() && t < T::one())) {
            return Err(Error::InvalidParameter("taper start must lie in [0, 1)".into()));
        }
        if !(self.spacing > T::zero()) || !self.spacing.is_finite() {
            return Err(Error::InvalidParameter("grid spacing must be positive".into()));
        }
        for i in 0..3 {
            if self.hi[i] - self.lo[i] + 1 < 4 {
                return Err(Error::InvalidParameter("grid needs at least 4 points per axis".into()));
            }
        }
        Ok(())
    }

    pub fn is_symmetric(&self) -> bool {
        (0..3).all(|i| self.lo[i] + self.hi[i] == -1)
    }

    pub fn cell_weight(&self) -> T {
        self.spacing * self.spacing * self.spacing
    }

    pub fn mode_count(&self) -> usize {
        (0..3).map(|i| (self.hi[i] - self.lo[i] + 1) as usize).product()
    }

    pub fn k_max(&self) -> T {
        let n = (0..3).map(|i| self.lo[i].abs().max(self.hi[i].abs() + 1)).max().unwrap_or(0);
        self.spacing * T::from_count(n as usize)
    }

    /// `π/Δk`: the lattice reproduces a field periodically with period `2π/Δk`,
    /// so only points well inside this radius are faithful.
    pub fn resolvable_radius(&self) -> T {
        T::PI() / self.spacing
    }

    /// A warning when `q` lies beyond 80% of the resolvable radius.
    pub fn resolution_warning(&self, q: Vec3<T>) -> Option<String> {
        let limit = T::lit(0.8) * self.resolvable_radius();
        (q.norm() > limit).then(|| {
            format!("|q| = {:.4} exceeds 80% of the resolvable radius π/Δk ({:.4})", q.norm().as_f64(), limit.as_f64())
        })
    }

    /// Quadrature weight of the mode at `k`: `Δk³` times the taper.
    pub fn weight(&self, k: Vec3<T>) -> T {
        let mut w = self.cell_weight();
        if let Some(t0) = self.taper {
            for i in 0..3 {
                let edge = self.spacing * T::lit(self.lo[i].abs().max(self.hi[i] + 1) as f64);
                w = w * planck_taper(k[i].abs() / edge, t0);
            }
        }
        w
    }

    fn wavevector(&self, n: [i64; 3]) -> Vec3<T> {
        let c = |v: i64| self.spacing * (T::lit(v as f64) + T::lit(0.5));
        Vec3::new(c(n[0]), c(n[1]), c(n[2]))
    }
}

/// Smooth step from 1 at `t ≤ t0` to 0 at `t ≥ 1`, flat to all orders at both ends.
pub fn planck_taper<T: Real>(t: T, t0: T) -> T {
    if t <= t0 {
        return T::one();
    }
    if t >= T::one() {
        return T::zero();
    }
    let s = (t - t0) / (T::one() - t0);
    let z = T::one() / (T::one() - s) - T::one() / s;
    if z > T::lit(500.0) {
        T::zero()
    } else {
        T::one() / (T::one() + z.exp())
    }
}

/// `(e1, e2)` with `e1 = ẑ×k̂/|ẑ×k̂|` (or `x̂` projected off `k̂` when `k` is
/// within 1e-9 of the z axis) and `e2 = k̂×e1`, so `(e1, e2, k̂)` is right-handed.
pub fn polarization_basis<T: Real>(k: Vec3<T>) -> Option<(Vec3<T>, Vec3<T>)> {
    let khat = k.normalized()?;
    let zk = Vec3::unit_z().cross(khat);
    let n = zk.norm();
    let e1 = if n > T::lit(1e-9) {
        zk * (T::one() / n)
    } else {
        (Vec3::unit_x() - khat * khat.x).normalized()?
    };
    Some((e1, khat.cross(e1)))
}

/// Axial-gauge polarization `e^X_i = e_i − (k_i/k_3) e_3`.
#[inline]
pub fn axial_polarization<T: Real>(k: Vec3<T>, e: Vec3<T>) -> Vec3<T> {
    e - k * (e.z / k.z)
}

/// Largest elementwise deviation of `Σ_λ e_i e_j` from `δ_ij − k̂_i k̂_j`.
pub fn completeness_residual<T: Real>(k: Vec3<T>) -> Option<T> {
    let (e1, e2) = polarization_basis(k)?;
    let khat = k.normalized()?;
    let mut worst = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { T::one() } else { T::zero() };
            let lhs = e1[i] * e1[j] + e2[i] * e2[j];
            worst = worst.max((lhs - (delta - khat[i] * khat[j])).abs());
        }
    }
    Some(worst)
}

/// `α(k,λ) = e(k,λ)·(gJ_k) / √(2ω³)` for both polarizations.
pub fn coherent_amplitudes<T: Real>(k: Vec3<T>, current: &CVec3<T>) -> [Complex<T>; 2] {
    let (e1, e2) = polarization_basis(k).expect("lattice modes are nonzero");
    let w = k.norm();
    let s = T::one() / (T::lit(2.0) * w * w * w).sqrt();
    [current.dot_real(e1) * s, current.dot_real(e2) * s]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mode<T> {
    pub k: Vec3<T>,
    /// `g J_k`.
    pub current: CVec3<T>,
    /// Quadrature weight, shared with the partner mode.
    pub weight: T,
}

/// Photon lattice with the Fourier-transformed source current on every mode.
#[derive(Clone, Debug)]
pub struct ModeGrid<T> {
    spec: GridSpec<T>,
    paired: bool,
    modes: Vec<Mode<T>>,
}

impl<T: Real> ModeGrid<T> {
    /// Builds the grid for an already discretized current (which carries `g`).
    pub fn build(spec: GridSpec<T>, segments: &CurrentSegmentSet<T>) -> Result<Self> {
        spec.validate()?;
        let paired = spec.is_symmetric();
        let x_lo = if paired { 0 } else { spec.lo[0] };
        let ny = (spec.hi[1] - spec.lo[1] + 1) as usize;
        let nz = (spec.hi[2] - spec.lo[2] + 1) as usize;
        let nx = (spec.hi[0] - x_lo + 1) as usize;
        let modes = (0..nx * ny * nz)
            .into_par_iter()
            .map(|i| {
                let n = [x_lo + (i / (ny * nz)) as i64, spec.lo[1] + ((i / nz) % ny) as i64, spec.lo[2] + (i % nz) as i64];
                let k = spec.wavevector(n);
                Mode { k, current: segments.fourier_current(k), weight: spec.weight(k) }
            })
            .collect();
        Ok(Self { spec, paired, modes })
    }

    /// Discretizes `source` at `level` and builds the grid.
    pub fn from_source(spec: GridSpec<T>, source: &CurrentSource<T>, level: u32) -> Result<Self> {
        Self::build(spec, &discretize(source, level)?)
    }

    /// The same lattice with a different taper; only the weights change.
    pub fn retaper(&self, t0: Option<T>) -> Self {
        let spec = self.spec.with_taper(t0);
        let modes = self.modes.iter().map(|m| Mode { weight: spec.weight(m.k), ..*m }).collect();
        Self { spec, paired: self.paired, modes }
    }

    pub fn spec(&self) -> &GridSpec<T> {
        &self.spec
    }

    pub fn is_symmetric(&self) -> bool {
        self.paired
    }

    /// Number of lattice modes, counting both members of each pair.
    pub fn len(&self) -> usize {
        self.modes.len() * if self.paired { 2 } else { 1 }
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Stored modes; on a symmetric grid each one also stands for its partner.
    pub fn stored_modes(&self) -> &[Mode<T>] {
        &self.modes
    }

    /// Every lattice mode, partners included, in the order the sums visit them.
    pub fn modes(&self) -> impl Iterator<Item = Mode<T>> + '_ {
        self.modes.iter().flat_map(move |m| {
            let partner = self.paired.then(|| Mode { k: -m.k, current: m.current.conj(), weight: m.weight });
            std::iter::once(*m).chain(partner)
        })
    }

    /// `Σ_modes w_k f(k, gJ_k)` in a fixed pairwise order.
    pub fn sum<S, F>(&self, f: F) -> S
    where
        S: Copy + std::ops::Add<Output = S> + std::ops::Mul<T, Output = S> + Zero + Send + Sync,
        F: Fn(Vec3<T>, &CVec3<T>) -> S + Sync + Send,
    {
        par_pairwise_map(self.modes.len(), |i| {
            let m = &self.modes[i];
            let s = f(m.k, &m.current);
            let s = if self.paired { s + f(-m.k, &m.current.conj()) } else { s };
            s * m.weight
        })
    }

    /// Largest completeness residual over all stored modes (partners share it).
    pub fn completeness_residual(&self) -> T {
        self.modes
            .par_iter()
            .map(|m| completeness_residual(m.k).unwrap_or(T::infinity()))
            .reduce(T::zero, T::max)
    }

    /// Largest `|e^X·J_k − e·J_k| / |J_k|` over modes and polarizations.
    pub fn axial_replacement_residual(&self) -> T {
        self.modes
            .par_iter()
            .map(|m| {
                let (e1, e2) = polarization_basis(m.k).expect("nonzero mode");
                let norm = m.current.norm();
                if norm == T::zero() {
                    return T::zero();
                }
                [e1, e2]
                    .iter()
                    .map(|&e| (m.current.dot_real(axial_polarization(m.k, e)) - m.current.dot_real(e)).norm() / norm)
                    .fold(T::zero(), T::max)
            })
            .reduce(T::zero, T::max)
    }

    /// Largest `|k·J_k| / (|k||J_k|)` over stored modes with nonzero current.
    pub fn transversality_residual(&self) -> T {
        self.modes
            .par_iter()
            .map(|m| {
                let den = m.k.norm() * m.current.norm();
                if den == T::zero() {
                    T::zero()
                } else {
                    m.current.dot_real(m.k).norm() / den
                }
            })
            .reduce(T::zero, T::max)
    }
}

#[inline]
fn phase<T: Real>(k: Vec3<T>, x: Vec3<T>) -> Complex<T> {
    let (s, c) = k.dot(x).sin_cos();
    Complex::new(c, s)
}

/// `(2π)^{-3/2} (2ω)^{-1/2} Σ_λ v(k,λ) α(k,λ) e^{ik·x}`: one mode's share of the
/// `a` half of the expectation of a field with polarization `v` built from `e`.
fn coherent_term<T: Real>(k: Vec3<T>, current: &CVec3<T>, x: Vec3<T>, axial: bool) -> CVec3<T> {
    let (e1, e2) = polarization_basis(k).expect("nonzero mode");
    let alpha = coherent_amplitudes(k, current);
    let c = inv_two_pi_three_halves::<T>() / (T::lit(2.0) * k.norm()).sqrt();
    let ph = phase(k, x) * c;
    let pol = |e: Vec3<T>| if axial { axial_polarization(k, e) } else { e };
    CVec3::from_real_scaled(pol(e1), alpha[0] * ph) + CVec3::from_real_scaled(pol(e2), alpha[1] * ph)
}

/// A coherent-state expectation `2 Re S` together with the size of `Im S`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reconstruction<T> {
    pub value: Vec3<T>,
    /// Largest component of `|Im S|`; zero up to rounding on a symmetric grid.
    pub imaginary: T,
}

fn split<T: Real>(s: CVec3<T>) -> Reconstruction<T> {
    Reconstruction { value: s.re() * T::lit(2.0), imaginary: s.im().max_abs() }
}

/// `⟨Õ|A⊥(x)|Õ⟩`, which approximates `g A⊥_ext(x)`.
pub fn reconstruct_a<T: Real>(grid: &ModeGrid<T>, x: Vec3<T>) -> Reconstruction<T> {
    split(grid.sum(|k, j| coherent_term(k, j, x, false)))
}

/// `⟨Õ|A^X(x)|Õ⟩`, which approximates `g A^X_ext(x)`.
pub fn reconstruct_axial_a<T: Real>(grid: &ModeGrid<T>, x: Vec3<T>) -> Reconstruction<T> {
    split(grid.sum(|k, j| coherent_term(k, j, x, true)))
}

/// `g χ(x)` from `χ_k = A⊥_{3,k} / (i k_3)`, the k-space twin of the
/// principal-value antiderivative.
pub fn reconstruct_chi<T: Real>(grid: &ModeGrid<T>, x: Vec3<T>) -> T {
    let s: Complex<T> = grid.sum(|k, j| coherent_term(k, j, x, false).z / Complex::new(T::zero(), k.z));
    s.re * T::lit(2.0)
}

/// `⟨Õ|E⊥_i(x)|Õ⟩ = −2 Im S_E`; zero for a static source.
pub fn reconstruct_e<T: Real>(grid: &ModeGrid<T>, x: Vec3<T>) -> Vec3<T> {
    let s: CVec3<T> = grid.sum(|k, j| coherent_term(k, j, x, false).scale_real(k.norm()));
    s.im() * T::lit(-2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergyOrder {
    /// `Σ ⟨0|H_g|k⟩(E₀ − ω)^{-1}⟨k|H_e|0⟩ + c.c.`
    SecondOrderEg,
    /// `⟨Õ|H_e|Õ⟩`.
    FirstOrderECoherent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeGauge {
    Coulomb,
    Axial,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyCorrection<T> {
    pub value: T,
    /// `|Im S| / max(|Re S|, tiny)` for the sum `S` whose real part is reported.
    pub imaginary_residue: T,
    pub order: EnergyOrder,
    pub gauge: ModeGauge,
}

fn energy<T: Real>(s: Complex<T>, order: EnergyOrder, gauge: ModeGauge) -> EnergyCorrection<T> {
    let residue = if s.re == T::zero() { s.im.abs() } else { (s.im / s.re).abs() };
    EnergyCorrection { value: s.re * T::lit(2.0), imaginary_residue: residue, order, gauge }
}

/// `⟨0|H_g|k,λ⟩ = −(2ω)^{-1/2} e·(gJ_k)*`.
#[inline]
fn hg_element<T: Real>(k: Vec3<T>, e: Vec3<T>, current: &CVec3<T>) -> Complex<T> {
    -current.conj().dot_real(e) / (T::lit(2.0) * k.norm()).sqrt()
}

/// `⟨k,λ|H_e|0⟩ = −e (v·pol) (2π)^{-3/2} (2ω)^{-1/2} e^{-ik·q}`.
#[inline]
fn he_element<T: Real>(k: Vec3<T>, pol: Vec3<T>, p: &ParticleState<T>) -> Complex<T> {
    let c = inv_two_pi_three_halves::<T>() / (T::lit(2.0) * k.norm()).sqrt();
    phase(k, p.position).conj() * (-p.charge * p.velocity().dot(pol) * c)
}

/// `⟨k,λ|H_e^{(2)}|0⟩ = −e (2π)^{-3/2} (ω/2)^{1/2} D e^{-ik·q}` with
/// `D = Σ_{i≤2} k_i e_i / k_3²` from `(1/∂₃²) ∂_i E_i`.
#[inline]
fn he2_element<T: Real>(k: Vec3<T>, e: Vec3<T>, p: &ParticleState<T>) -> Complex<T> {
    let d = (k.x * e.x + k.y * e.y) / (k.z * k.z);
    let c = inv_two_pi_three_halves::<T>() * (k.norm() * T::lit(0.5)).sqrt();
    phase(k, p.position).conj() * (-p.charge * c * d)
}

/// One mode's `Σ_λ ⟨0|H_g|k,λ⟩ (−1/ω) ⟨k,λ|H_e|0⟩` in the Coulomb gauge.
pub fn coulomb_pt_summand<T: Real>(k: Vec3<T>, current: &CVec3<T>, p: &ParticleState<T>) -> Complex<T> {
    let (e1, e2) = polarization_basis(k).expect("nonzero mode");
    let inv = -T::one() / k.norm();
    (hg_element(k, e1, current) * he_element(k, e1, p) + hg_element(k, e2, current) * he_element(k, e2, p)) * inv
}

/// One mode's share of `⟨Õ|H_e|Õ⟩` before adding the complex conjugate:
/// `−e v·(2π)^{-3/2}(2ω)^{-1/2} Σ_λ e α e^{ik·q}`.
pub fn coulomb_coherent_summand<T: Real>(k: Vec3<T>, current: &CVec3<T>, p: &ParticleState<T>) -> Complex<T> {
    coherent_term(k, current, p.position, false).dot_real(p.velocity()) * (-p.charge)
}

/// `Δε = ⟨0|H_g G H_e|0⟩ + c.c.` on the grid, `G = (E₀ − H_EM)^{-1}`.
pub fn delta_eps_coulomb<T: Real>(grid: &ModeGrid<T>, p: &ParticleState<T>) -> EnergyCorrection<T> {
    energy(grid.sum(|k, j| coulomb_pt_summand(k, j, p)), EnergyOrder::SecondOrderEg, ModeGauge::Coulomb)
}

/// Per-mode terms of the two Coulomb routes, partners included.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeTerm<T> {
    pub k: Vec3<T>,
    /// Second-order summand (before `+ c.c.`).
    pub second_order: Complex<T>,
    /// Coherent-expectation summand (before `+ c.c.`).
    pub coherent: Complex<T>,
}

/// Mode-by-mode decomposition of both Coulomb energy routes. The two summands
/// are complex conjugates of each other, so `2 Re` of either gives the same
/// contribution.
pub fn coulomb_mode_terms<T: Real>(grid: &ModeGrid<T>, p: &ParticleState<T>) -> Vec<ModeTerm<T>> {
    grid.modes()
        .map(|m| ModeTerm {
            k: m.k,
            second_order: coulomb_pt_summand(m.k, &m.current, p) * m.weight,
            coherent: coulomb_coherent_summand(m.k, &m.current, p) * m.weight,
        })
        .collect()
}

/// Largest `|2 Re(pt) − 2 Re(coherent)|` over modes, relative to the largest
/// single contribution.
pub fn mode_identity_residual<T: Real>(grid: &ModeGrid<T>, p: &ParticleState<T>) -> T {
    let (diff, scale) = grid
        .stored_modes()
        .par_iter()
        .map(|m| {
            let mut d = T::zero();
            let mut s = T::zero();
            for (k, j) in [(m.k, m.current), (-m.k, m.current.conj())] {
                let a = coulomb_pt_summand(k, &j, p).re;
                let b = coulomb_coherent_summand(k, &j, p).re;
                d = d.max((a - b).abs());
                s = s.max(a.abs());
            }
            (d, s)
        })
        .reduce(|| (T::zero(), T::zero()), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    if scale == T::zero() {
        diff
    } else {
        diff / scale
    }
}

/// Axial coherent energy with its `H_e^{(2)}` and `⟨E_i⟩` pieces exposed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxialCoherent<T> {
    pub energy: EnergyCorrection<T>,
    /// `⟨Õ|H_e^{(1)}|Õ⟩ = −e v·⟨A^X(q)⟩`.
    pub he1: T,
    /// `⟨Õ|H_e^{(2)}|Õ⟩`, which vanishes identically.
    pub he2: T,
    /// `⟨Õ|E_i(q)|Õ⟩` for `i = 1, 2`.
    pub e_field: [T; 2],
}

/// `ΔE = ⟨Õ|H_e|Õ⟩` in the Coulomb gauge.
pub fn delta_e_coherent_coulomb<T: Real>(grid: &ModeGrid<T>, p: &ParticleState<T>) -> EnergyCorrection<T> {
    energy(grid.sum(|k, j| coulomb_coherent_summand(k, j, p)), EnergyOrder::FirstOrderECoherent, ModeGauge::Coulomb)
}

/// `ΔE = ⟨Õ|H_e^{(1)} + H_e^{(2)}|Õ⟩` in the axial gauge.
pub fn delta_e_coherent_axial<T: Real>(grid: &ModeGrid<T>, p: &ParticleState<T>) -> AxialCoherent<T> {
    let v = p.velocity();
    let s1: Complex<T> = grid.sum(|k, j| coherent_term(k, j, p.position, true).dot_real(v) * (-p.charge));
    let s2: Complex<T> = grid.sum(|k, j| {
        let (e1, e2) = polarization_basis(k).expect("nonzero mode");
        let a = coherent_amplitudes(k, j);
        let c = inv_two_pi_three_halves::<T>() * (k.norm() * T::lit(0.5)).sqrt();
        let d = |e: Vec3<T>| (k.x * e.x + k.y * e.y) / (k.z * k.z);
        (a[0] * d(e1) + a[1] * d(e2)) * phase(k, p.position) * (-p.charge * c)
    });
    let e = reconstruct_e(grid, p.position);
    let total = s1 + s2;
    AxialCoherent {
        energy: energy(total, EnergyOrder::FirstOrderECoherent, ModeGauge::Axial),
        he1: s1.re * T::lit(2.0),
        he2: s2.re * T::lit(2.0),
        e_field: [e.x, e.y],
    }
}

/// `ΔE` in either gauge.
pub fn delta_e_coherent<T: Real>(grid: &ModeGrid<T>, p: &ParticleState<T>, gauge: ModeGauge) -> EnergyCorrection<T> {
    match gauge {
        ModeGauge::Coulomb => delta_e_coherent_coulomb(grid, p),
        ModeGauge::Axial => delta_e_coherent_axial(grid, p).energy,
    }
}

/// The two axial-gauge second-order matrix elements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxialSecondOrder<T> {
    /// `⟨0|H_g G H_e^{(1)}|0⟩`.
    pub term1: Complex<T>,
    /// `⟨0|H_g G H_e^{(2)}|0⟩`; set to zero when degenerate.
    pub term2: Complex<T>,
    /// The summed `term2` was below `1e-12 |term1|`, as for currents with no
    /// component along z.
    pub term2_degenerate: bool,
    /// Largest `|Re f|/|f|` over single modes, `f` the mode's `term2` summand.
    /// Individual modes are not purely imaginary; only `k, −k` pairs are.
    pub max_mode_real_fraction: T,
    /// Same ratio for `k, −k` pairs.
    pub max_pair_real_fraction: T,
}

impl<T: Real> AxialSecondOrder<T> {
    /// `|Re term2| / |Im term2|`, or 0 when degenerate.
    pub fn real_to_imaginary(&self) -> T {
        if self.term2_degenerate || self.term2.im == T::zero() {
            T::zero()
        } else {
            (self.term2.re / self.term2.im).abs()
        }
    }
}

fn axial_pt_summand<T: Real>(k: Vec3<T>, current: &CVec3<T>, p: &ParticleState<T>, second: bool) -> Complex<T> {
    let (e1, e2) = polarization_basis(k).expect("nonzero mode");
    let inv = -T::one() / k.norm();
    let term = |e: Vec3<T>| {
        let he = if second { he2_element(k, e, p) } else { he_element(k, axial_polarization(k, e), p) };
        hg_element(k, e, current) * he
    };
    (term(e1) + term(e2)) * inv
}

/// `⟨0|H_g G H_e^{(1)}|0⟩` and `⟨0|H_g G H_e^{(2)}|0⟩`. The principal-value
/// cancellations need the `k → −k` symmetry, so asymmetric grids are refused.
pub fn axial_second_order_terms<T: Real>(grid: &ModeGrid<T>, p: &ParticleState<T>) -> Result<AxialSecondOrder<T>> {
    if !grid.is_symmetric() {
        return Err(Error::AsymmetricGrid);
    }
    let term1: Complex<T> = grid.sum(|k, j| axial_pt_summand(k, j, p, false));
    let mut term2: Complex<T> = grid.sum(|k, j| axial_pt_summand(k, j, p, true));
    let frac = |f: Complex<T>| if f.norm() == T::zero() { T::zero() } else { f.re.abs() / f.norm() };
    let (mode_frac, pair_frac) = grid
        .stored_modes()
        .par_iter()
        .map(|m| {
            let a = axial_pt_summand(m.k, &m.current, p, true);
            let b = axial_pt_summand(-m.k, &m.current.conj(), p, true);
            (frac(a).max(frac(b)), frac(a + b))
        })
        .reduce(|| (T::zero(), T::zero()), |x, y| (x.0.max(y.0), x.1.max(y.1)));
    let degenerate = term2.norm() < T::lit(1e-12) * term1.norm();
    if degenerate {
        term2 = Complex::zero();
    }
    Ok(AxialSecondOrder {
        term1,
        term2,
        term2_degenerate: degenerate,
        max_mode_real_fraction: mode_frac,
        max_pair_real_fraction: pair_frac,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{SourceField, Tolerances};

    fn small_loop_grid(n: usize) -> (ModeGrid<f64>, SourceField<f64>) {
        let src = CurrentSource::circular_loop(Vec3::zero(), Vec3::unit_x(), 0.5, 1.0);
        let spec = GridSpec::symmetric(std::f64::consts::PI / 4.0, n);
        let grid = ModeGrid::from_source(spec, &src, 1).unwrap();
        (grid, SourceField::new(&src, 1, Tolerances::default()).unwrap())
    }

    #[test]
    fn basis_is_right_handed_and_transverse() {
        for k in [Vec3::<f64>::new(0.3, -1.2, 0.7), Vec3::new(0.0, 0.0, 2.0), Vec3::new(1e-11, 0.0, -1.0)] {
            let (e1, e2) = polarization_basis(k).unwrap();
            let khat = k.normalized().unwrap();
            assert!(e1.dot(khat).abs() < 1e-12 && e2.dot(khat).abs() < 1e-12);
            assert!((e1.cross(e2).dot(khat) - 1.0).abs() < 1e-12);
            assert!(completeness_residual(k).unwrap() < 1e-12);
        }
        assert!(polarization_basis(Vec3::<f64>::zero()).is_none());
    }

    #[test]
    fn grid_layout() {
        let spec = GridSpec::<f64>::symmetric(0.5, 3);
        assert!(spec.is_symmetric());
        assert_eq!(spec.mode_count(), 216);
        assert_eq!(spec.refined().mode_count(), 1728);
        assert!((spec.refined().k_max() - spec.k_max()).abs() < 1e-15);
        let set = CurrentSegmentSet::from_chain(&[Vec3::new(0.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 1.0, 1.0)], 1.0, true);
        let grid = ModeGrid::build(spec, &set).unwrap();
        assert_eq!(grid.len(), 216);
        assert!(grid.modes().all(|m| m.k.z != 0.0 && m.k.norm() > 0.0));
        let mut asym = spec;
        asym.hi[2] += 1;
        let grid = ModeGrid::build(asym, &set).unwrap();
        assert!(!grid.is_symmetric());
        assert_eq!(grid.len(), 252);
        let p = ParticleState::new(1.0, 1.0, Vec3::unit_y(), Vec3::zero()).unwrap();
        assert_eq!(axial_second_order_terms(&grid, &p), Err(Error::AsymmetricGrid));
    }

    #[test]
    fn zero_strength_gives_zero_amplitudes() {
        let src = CurrentSource::circular_loop(Vec3::zero(), Vec3::unit_x(), 0.5, 1.0).with_strength(0.0);
        let grid = ModeGrid::from_source(GridSpec::symmetric(0.8, 4), &src, 0).unwrap();
        assert!(grid.modes().all(|m| coherent_amplitudes(m.k, &m.current).iter().all(|a| *a == Complex::zero())));
        let p = ParticleState::new(1.0, 1.0, Vec3::unit_y(), Vec3::new(0.0, 0.8, 0.1)).unwrap();
        assert_eq!(delta_eps_coulomb(&grid, &p).value, 0.0);
    }

    #[test]
    fn pair_cancellations_are_exact() {
        let (grid, _) = small_loop_grid(10);
        let q = Vec3::new(0.3, 0.7, 0.2);
        let p = ParticleState::new(1.0, 2.0, Vec3::new(0.2, 0.5, -0.3), q).unwrap();
        let ax = delta_e_coherent_axial(&grid, &p);
        assert_eq!(ax.he2, 0.0);
        assert!(ax.e_field[0].abs() < 1e-15 && ax.e_field[1].abs() < 1e-15, "{:?}", ax.e_field);
        let t = axial_second_order_terms(&grid, &p).unwrap();
        assert!(!t.term2_degenerate);
        assert!(t.real_to_imaginary() < 1e-10, "{:?}", t);
        assert_eq!(t.max_pair_real_fraction, 0.0);
        assert!(t.max_mode_real_fraction > 0.1);
        assert!(reconstruct_a(&grid, q).imaginary < 1e-14);
    }

    #[test]
    fn routes_agree_exactly() {
        let (grid, _) = small_loop_grid(10);
        let p = ParticleState::new(0.7, 1.3, Vec3::new(0.2, 0.5, -0.3), Vec3::new(0.3, 0.7, 0.2)).unwrap();
        let pt = delta_eps_coulomb(&grid, &p);
        let coh = delta_e_coherent(&grid, &p, ModeGauge::Coulomb);
        assert!((pt.value - coh.value).abs() < 1e-12 * pt.value.abs());
        assert!(pt.imaginary_residue < 1e-12);
        assert!(mode_identity_residual(&grid, &p) < 1e-12);
        let a = reconstruct_a(&grid, p.position).value;
        assert!((pt.value + p.charge * p.velocity().dot(a)).abs() < 1e-12 * pt.value.abs());
        let t = axial_second_order_terms(&grid, &p).unwrap();
        let ax = delta_e_coherent_axial(&grid, &p);
        assert!((t.term1.re * 2.0 - ax.energy.value).abs() < 1e-12 * ax.energy.value.abs());
    }

    #[test]
    fn axial_reconstruction_satisfies_gauge_condition() {
        let (grid, _) = small_loop_grid(10);
        let x = Vec3::new(0.2, 0.6, -0.4);
        let a = reconstruct_axial_a(&grid, x).value;
        let b = reconstruct_a(&grid, x).value;
        assert!(a.z.abs() < 1e-14 * b.norm());
        // A^X = A⊥ − ∇χ, with the gradient of the k-space χ by differences
        let h = 1e-4;
        let dchi = Vec3::new(
            reconstruct_chi(&grid, x + Vec3::unit_x() * h) - reconstruct_chi(&grid, x - Vec3::unit_x() * h),
            reconstruct_chi(&grid, x + Vec3::unit_y() * h) - reconstruct_chi(&grid, x - Vec3::unit_y() * h),
            reconstruct_chi(&grid, x + Vec3::unit_z() * h) - reconstruct_chi(&grid, x - Vec3::unit_z() * h),
        ) * (0.5 / h);
        assert!((b - dchi - a).norm() < 1e-7 * b.norm());
    }

    #[test]
    fn axis_z_source_makes_axial_trivial() {
        let src = CurrentSource::circular_loop(Vec3::zero(), Vec3::unit_z(), 0.5, 1.0);
        let grid = ModeGrid::from_source(GridSpec::symmetric(std::f64::consts::PI / 4.0, 8), &src, 1).unwrap();
        let p = ParticleState::new(1.0, 1.0, Vec3::new(0.3, 0.4, 0.1), Vec3::new(0.6, 0.2, 0.1)).unwrap();
        let c = delta_e_coherent(&grid, &p, ModeGauge::Coulomb).value;
        let a = delta_e_coherent(&grid, &p, ModeGauge::Axial).value;
        assert!((a - c).abs() < 1e-12 * c.abs());
        let t = axial_second_order_terms(&grid, &p).unwrap();
        assert!(t.term2_degenerate && t.term2 == Complex::zero());
        assert!((2.0 * t.term1.re - c).abs() < 1e-12 * c.abs());
    }
}

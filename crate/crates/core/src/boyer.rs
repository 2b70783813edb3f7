//! Field energy of a moving charge against the external field, and its
//! cancellation by the current coupling.
//!
//! Both magnetic fields have closed-form transforms, so the overlap integral
//! `∫ B̃·B_ext d³x` is evaluated by Parseval on the mode grid:
//! `B̃_k = −i e (2π)^{-3/2} (v×k) e^{-ik·q} / k²` and `B_ext,k = i k×(gJ_k) / k²`.

use num_complex::Complex;

use crate::modes::ModeGrid;
use crate::path::ParticleState;
use crate::scalar::Real;
use crate::source::inv_two_pi_three_halves;
use crate::vector::{CVec3, Vec3};

/// Magnetic field of a charge moving with velocity `p/m`:
/// `B̃(x) = (e/4π) v × (x − q) / |x − q|³`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MovingChargeField<T> {
    pub particle: ParticleState<T>,
}

impl<T: Real> MovingChargeField<T> {
    pub fn new(particle: ParticleState<T>) -> Self {
        Self { particle }
    }

    /// `None` at the charge itself.
    pub fn eval(&self, x: Vec3<T>) -> Option<Vec3<T>> {
        let r = x - self.particle.position;
        let d = r.norm();
        if d == T::zero() {
            return None;
        }
        let c = self.particle.charge / (T::lit(4.0) * T::PI() * d * d * d);
        Some(self.particle.velocity().cross(r) * c)
    }

    /// `B̃_k`.
    pub fn fourier(&self, k: Vec3<T>) -> CVec3<T> {
        let p = &self.particle;
        let (s, c) = k.dot(p.position).sin_cos();
        // −i e^{-ik·q} = −sin − i cos
        let f = Complex::new(-s, -c) * (p.charge * inv_two_pi_three_halves::<T>() / k.norm_sq());
        CVec3::from_real_scaled(p.velocity().cross(k), f)
    }
}

/// `B_ext,k = i k × (gJ_k) / k²`.
pub fn external_field_fourier<T: Real>(k: Vec3<T>, current: &CVec3<T>) -> CVec3<T> {
    current.cross_from_real(k).scale(Complex::new(T::zero(), T::one() / k.norm_sq()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoyerEnergy<T> {
    pub value: T,
    pub warning: Option<String>,
}

/// `∫ B̃·B_ext d³x` (up to the dropped constants), which approximates
/// `+e g (p/m)·A⊥_ext(q)`.
pub fn boyer_energy<T: Real>(grid: &ModeGrid<T>, particle: &ParticleState<T>) -> BoyerEnergy<T> {
    let field = MovingChargeField::new(*particle);
    let s: Complex<T> = grid.sum(|k, j| field.fourier(k).conj().dot(&external_field_fourier(k, j)));
    BoyerEnergy { value: s.re, warning: grid.spec().resolution_warning(particle.position) }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cancellation<T> {
    pub boyer: T,
    /// `⟨H_g⟩ = −∫ B_ext·B̃ d³x`.
    pub hg_term: T,
    /// `boyer + hg_term`.
    pub residual: T,
    pub warning: Option<String>,
}

/// Boyer's energy next to the current-coupling expectation, each summed on its
/// own over the same grid.
pub fn hg_cancellation<T: Real>(grid: &ModeGrid<T>, particle: &ParticleState<T>) -> Cancellation<T> {
    let b = boyer_energy(grid, particle);
    let field = MovingChargeField::new(*particle);
    let s: Complex<T> = grid.sum(|k, j| external_field_fourier(k, j).conj().dot(&field.fourier(k)));
    let hg = -s.re;
    Cancellation { boyer: b.value, hg_term: hg, residual: b.value + hg, warning: b.warning }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{delta_eps_coulomb, GridSpec};
    use crate::source::CurrentSource;

    #[test]
    fn moving_charge_field_shape() {
        let p = ParticleState::<f64>::new(1.5, 2.0, Vec3::new(0.3, -0.4, 1.0), Vec3::new(0.1, 0.2, 0.3)).unwrap();
        let f = MovingChargeField::new(p);
        assert!(f.eval(p.position).is_none());
        let dir = Vec3::new(0.6, -0.3, 0.2);
        let near = f.eval(p.position + dir).unwrap();
        let far = f.eval(p.position + dir * 10.0).unwrap();
        assert!(near.dot(dir).abs() < 1e-15 && near.dot(p.velocity()).abs() < 1e-15);
        assert!((near.norm() / far.norm() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn static_charge_and_cancellation() {
        let src = CurrentSource::circular_loop(Vec3::zero(), Vec3::unit_x(), 0.5, 1.0);
        let grid = ModeGrid::from_source(GridSpec::symmetric(std::f64::consts::PI / 4.0, 8), &src, 1).unwrap();
        let q = Vec3::new(0.1, 0.8, 0.2);
        let rest = ParticleState::new(1.0, 1.0, Vec3::zero(), q).unwrap();
        let c = hg_cancellation(&grid, &rest);
        assert_eq!((c.boyer, c.hg_term, c.residual), (0.0, 0.0, 0.0));
        let p = ParticleState::new(1.0, 1.0, Vec3::new(0.0, 0.2, 0.9), q).unwrap();
        let c = hg_cancellation(&grid, &p);
        assert!(c.residual.abs() <= 1e-10 * c.boyer.abs());
        let eps = delta_eps_coulomb(&grid, &p).value;
        assert!((c.boyer + eps).abs() < 1e-2 * eps.abs(), "{} vs {}", c.boyer, eps);
        assert!(c.warning.is_none());
        let far = ParticleState::new(1.0, 1.0, Vec3::unit_y(), Vec3::new(0.0, 3.5, 0.0)).unwrap();
        assert!(boyer_energy(&grid, &far).warning.is_some());
    }
}

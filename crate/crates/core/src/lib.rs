//! Gauge constructions for the vector potential of a static current, Aharonov–Bohm
//! phases along open and closed paths, and photon-mode energy corrections.
//!
//! Units are Heaviside–Lorentz with ħ = c = 1. Every routine is generic over
//! [`Real`] (`f32` or `f64`); the aliases below fix `f64`.
//!
//! ```
//! use abgauge_core::{CurrentSource, SourceField, Tolerances, Vec3};
//!
//! let src = CurrentSource::<f64>::circular_loop(Vec3::zero(), Vec3::unit_z(), 1.0, 1.0);
//! let f = SourceField::new(&src, 2, Tolerances::default()).unwrap();
//! let b = f.b_field(Vec3::zero()).unwrap();
//! assert!((b.z - 0.5).abs() < 1e-4);
//! ```

pub mod boyer;
pub mod error;
pub mod field;
pub mod kernel;
pub mod modes;
pub mod path;
pub mod quadrature;
pub mod scalar;
pub mod source;
pub mod sum;
pub mod vector;

pub use boyer::{boyer_energy, hg_cancellation, BoyerEnergy, Cancellation, MovingChargeField};
pub use error::{Error, Result};
pub use field::{ideal_solenoid_a, Gauge, GaugePotential, LambdaSpec, SourceField, Tolerances};
pub use modes::{
    axial_second_order_terms, delta_e_coherent, delta_eps_coulomb, polarization_basis, reconstruct_a,
    reconstruct_axial_a, reconstruct_chi, EnergyCorrection, GridSpec, ModeGauge, ModeGrid,
};
pub use path::{ab_phase, enclosed_flux, gauge_dependence_report, GaugeReport, ParticlePath, ParticleState, PhaseResult};
pub use scalar::Real;
pub use source::{discretize, CurrentSegmentSet, CurrentSource, SourceKind};
pub use vector::{CVec3, Vec3};

pub type Vec3d = Vec3<f64>;
pub type SourceF64 = CurrentSource<f64>;
pub type FieldF64 = SourceField<f64>;
pub type PathF64 = ParticlePath<f64>;
pub type ParticleF64 = ParticleState<f64>;
pub type GridF64 = ModeGrid<f64>;

pub type Vec3f = Vec3<f32>;
pub type FieldF32 = SourceField<f32>;

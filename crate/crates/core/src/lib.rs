//! Spectral simulation and verification toolkit for the one-dimensional
//! defocusing nonlinear Schrödinger equation with a potential,
//!
//! ```text
//! i u_t + u_xx - V u = u |u|^alpha
//! ```
//!
//! The numerical core is generic over the scalar type ([`Real`], implemented
//! for `f32` and `f64`); the `*64` aliases below fix it to `f64`, which is
//! what every documented tolerance assumes.

pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod potentials;
pub mod propagators;
pub mod scalar;
pub mod spectral_theory;
pub mod virial;

pub use error::{Error, Result};
pub use scalar::{Complex, Real};

pub type Grid64 = grid::Grid<f64>;
pub type WaveField64 = grid::WaveField<f64>;
pub type Spectrum64 = grid::Spectrum<f64>;
pub type EvolutionTrace64 = grid::EvolutionTrace<f64>;
pub type PotentialSample64 = potentials::PotentialSample<f64>;
pub type CutoffFamily64 = virial::CutoffFamily<f64>;
pub type JostResult64 = spectral_theory::JostResult<f64>;
pub type StepperConfig64<'a> = propagators::StepperConfig<'a, f64>;
pub type ExponentSet64 = diagnostics::ExponentSet<f64>;

pub type Grid32 = grid::Grid<f32>;
pub type WaveField32 = grid::WaveField<f32>;
pub type EvolutionTrace32 = grid::EvolutionTrace<f32>;

//! Initial data and randomized test fields.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{Grid, WaveField};
use crate::scalar::{cis, lit, Complex, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialKind {
    /// `A exp(-(x-c)^2 / (2 w^2)) exp(i v x)`
    Gaussian,
    /// `A sech((x-c)/w) exp(i v x)`, soliton-like profile.
    Bump,
    /// `A cos(v (x-c)) exp(-(x-c)^2 / (2 w^2))`, a standing modulated packet.
    PlaneModulated,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub kind: InitialKind,
    pub amplitude: f64,
    pub width: f64,
    #[serde(default)]
    pub center: f64,
    #[serde(default)]
    pub velocity: f64,
}

impl InitialData {
    pub fn gaussian(amplitude: f64, width: f64) -> Self {
        InitialData {
            kind: InitialKind::Gaussian,
            amplitude,
            width,
            center: 0.0,
            velocity: 0.0,
        }
    }

    pub fn sample<T: Real>(&self, grid: &Arc<Grid<T>>) -> WaveField<T> {
        let a: T = lit(self.amplitude);
        let w: T = lit(self.width);
        let c: T = lit(self.center);
        let v: T = lit(self.velocity);
        let half: T = lit(0.5);
        let g = Arc::clone(grid);
        match self.kind {
            InitialKind::Gaussian => WaveField::from_fn(g, |x| {
                let s = (x - c) / w;
                cis(v * x).scale(a * (-half * s * s).exp())
            }),
            InitialKind::Bump => WaveField::from_fn(g, |x| {
                let s = (x - c) / w;
                cis(v * x).scale(a / s.cosh())
            }),
            InitialKind::PlaneModulated => WaveField::from_real_fn(g, |x| {
                let s = (x - c) / w;
                a * (v * (x - c)).cos() * (-half * s * s).exp()
            }),
            InitialKind::Zero => WaveField::zeros(g),
        }
    }

    /// Amplitude giving a Gaussian of the given width the requested H1 norm,
    /// from `||u||^2 = A^2 w sqrt(pi)` and `||u'||^2 = A^2 sqrt(pi) / (2 w)`.
    pub fn gaussian_amplitude_for_h1(h1: f64, width: f64) -> f64 {
        let per_unit = std::f64::consts::PI.sqrt() * (width + 0.5 / width);
        h1 / per_unit.sqrt()
    }
}

/// Random field with Fourier content in `|k| <= k_cut`, localized by a
/// Gaussian envelope of width `envelope` around the origin.
pub fn random_band_limited<T: Real, R: Rng + ?Sized>(
    grid: &Arc<Grid<T>>,
    rng: &mut R,
    k_cut: f64,
    envelope: f64,
) -> WaveField<T> {
    let mut coeffs: Vec<Complex<T>> = grid
        .wavenumbers()
        .iter()
        .map(|&k| {
            if k.abs() <= lit(k_cut) {
                Complex::new(lit(rng.gen_range(-1.0..1.0)), lit(rng.gen_range(-1.0..1.0)))
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
        .collect();
    grid.fft_inverse(&mut coeffs);
    let norm = T::one() / T::from(grid.num_points()).unwrap().sqrt();
    let w: T = lit(envelope);
    let half: T = lit(0.5);
    let samples = grid
        .nodes()
        .iter()
        .zip(coeffs)
        .map(|(&x, z)| z.scale(norm * (-half * (x / w) * (x / w)).exp()))
        .collect();
    WaveField::new(Arc::clone(grid), samples).expect("finite random field")
}

//! Localized virial quantities.
//!
//! The cutoff is `chi(x) = x^2 sigma(2 - |x|)` with the smooth step
//! `sigma(s) = f(s) / (f(s) + f(1 - s))`, `f(s) = exp(-1/s)` for `s > 0`
//! and `0` otherwise, rescaled as `chi_R(x) = R^2 chi(x / R)`. Hence
//! `chi_R = x^2` on `|x| <= R` and `chi_R = 0` on `|x| >= 2R`. All four
//! derivatives are evaluated in closed form.
//!
//! With `z_R(t) = int chi_R |u(t)|^2`, solutions of the flow satisfy
//!
//! ```text
//! z_R'  = 2 Im int chi_R' u' conj(u)
//! z_R'' = 4 int chi_R'' |u'|^2 + 2 alpha/(alpha+2) int chi_R'' |u|^(alpha+2)
//!         - 2 int chi_R' V' |u|^2 - int chi_R'''' |u|^2
//! ```

use std::sync::Arc;

use serde::Serialize;

use crate::diagnostics::{energy, mass};
use crate::error::{Error, Result};
use crate::grid::{check_same_grid, EvolutionTrace, Grid, WaveField};
use crate::potentials::{hypothesis_report, PotentialSample};
use crate::scalar::{lit, pow_abs, to_f64, Real};

pub const CUTOFF_RECIPE: &str =
    "chi(x) = x^2 sigma(2-|x|), sigma(s) = f(s)/(f(s)+f(1-s)), f(s) = exp(-1/s); chi_R = R^2 chi(x/R)";

/// `f^{(n)}(s)` for `f(s) = exp(-1/s)`, `n = 0..=4`.
fn bump_derivatives<T: Real>(s: T) -> [T; 5] {
    if s <= T::zero() {
        return [T::zero(); 5];
    }
    let w = T::one() / s;
    let f = (-w).exp();
    if f == T::zero() {
        return [T::zero(); 5];
    }
    let c = |x: f64| lit::<T>(x);
    let w2 = w * w;
    let w3 = w2 * w;
    let w4 = w2 * w2;
    [
        f,
        f * w2,
        f * (w4 - c(2.0) * w3),
        f * (w4 * w2 - c(6.0) * w4 * w + c(6.0) * w4),
        f * (w4 * w4 - c(12.0) * w4 * w3 + c(36.0) * w4 * w2 - c(24.0) * w4 * w),
    ]
}

const BINOMIAL: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 1.0, 0.0, 0.0, 0.0],
    [1.0, 2.0, 1.0, 0.0, 0.0],
    [1.0, 3.0, 3.0, 1.0, 0.0],
    [1.0, 4.0, 6.0, 4.0, 1.0],
];

/// `sigma^{(n)}(s)`, `n = 0..=4`, from Leibniz applied to `sigma * D = A`
/// with `A(s) = f(s)`, `D(s) = f(s) + f(1 - s)`.
pub fn smooth_step_derivatives<T: Real>(s: T) -> [T; 5] {
    if s <= T::zero() {
        return [T::zero(); 5];
    }
    if s >= T::one() {
        let mut out = [T::zero(); 5];
        out[0] = T::one();
        return out;
    }
    let a = bump_derivatives(s);
    let b = bump_derivatives(T::one() - s);
    let mut d = [T::zero(); 5];
    for n in 0..5 {
        let sign = if n % 2 == 0 { T::one() } else { -T::one() };
        d[n] = a[n] + sign * b[n];
    }
    let mut sigma = [T::zero(); 5];
    for n in 0..5 {
        let mut acc = a[n];
        for k in 0..n {
            acc -= lit::<T>(BINOMIAL[n][k]) * sigma[k] * d[n - k];
        }
        sigma[n] = acc / d[0];
    }
    sigma
}

/// `chi_R^{(n)}(x)` for `n = 0..=4`.
pub fn cutoff_derivatives<T: Real>(x: T, radius: T) -> [T; 5] {
    let ax = x.abs();
    let two: T = lit(2.0);
    let step = smooth_step_derivatives(two - ax / radius);
    // G_n: n-th derivative of sigma(2 - |x|/R) with respect to |x|.
    let mut g = [T::zero(); 5];
    let mut scale = T::one();
    for n in 0..5 {
        let sign = if n % 2 == 0 { T::one() } else { -T::one() };
        g[n] = sign * step[n] * scale;
        scale = scale / radius;
    }
    let c = |v: f64| lit::<T>(v);
    let x2 = ax * ax;
    let even = [
        x2 * g[0],
        c(2.0) * ax * g[0] + x2 * g[1],
        c(2.0) * g[0] + c(4.0) * ax * g[1] + x2 * g[2],
        c(6.0) * g[1] + c(6.0) * ax * g[2] + x2 * g[3],
        c(12.0) * g[2] + c(8.0) * ax * g[3] + x2 * g[4],
    ];
    let mut out = even;
    if x < T::zero() {
        out[1] = -out[1];
        out[3] = -out[3];
    }
    out
}

/// `chi_R` and its first four derivatives sampled on a grid.
#[derive(Clone, Debug)]
pub struct CutoffFamily<T: Real> {
    grid: Arc<Grid<T>>,
    radius: T,
    /// `derivatives[n][j] = chi_R^{(n)}(x_j)`
    derivatives: [Vec<T>; 5],
}

pub fn build_cutoff<T: Real>(radius: T, grid: &Arc<Grid<T>>) -> Result<CutoffFamily<T>> {
    if !(radius > T::zero()) || !(radius + radius < grid.half_width()) {
        return Err(Error::CutoffExceedsBox {
            radius: to_f64(radius),
            half_width: to_f64(grid.half_width()),
        });
    }
    let mut derivatives: [Vec<T>; 5] = Default::default();
    for &x in grid.nodes() {
        let d = cutoff_derivatives(x, radius);
        for n in 0..5 {
            derivatives[n].push(d[n]);
        }
    }
    Ok(CutoffFamily {
        grid: Arc::clone(grid),
        radius,
        derivatives,
    })
}

impl<T: Real> CutoffFamily<T> {
    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn recipe(&self) -> &'static str {
        CUTOFF_RECIPE
    }

    pub fn chi(&self) -> &[T] {
        &self.derivatives[0]
    }

    /// `n`-th derivative samples, `n <= 4`.
    pub fn derivative(&self, n: usize) -> &[T] {
        &self.derivatives[n]
    }

    /// `sup |chi_R'|` over the grid.
    pub fn max_slope(&self) -> T {
        self.derivatives[1]
            .iter()
            .fold(T::zero(), |m, d| m.max(d.abs()))
    }
}

fn weighted<T: Real>(weights: &[T], density: impl Iterator<Item = T>, dx: T) -> T {
    dx * weights.iter().zip(density).map(|(w, d)| *w * d).sum::<T>()
}

/// `z_R(t) = int chi_R |u(t)|^2` for every snapshot.
pub fn z_series<T: Real>(trace: &EvolutionTrace<T>, cutoff: &CutoffFamily<T>) -> Result<Vec<T>> {
    trace
        .snapshots()
        .iter()
        .map(|u| z_value(u, cutoff))
        .collect()
}

pub fn z_value<T: Real>(field: &WaveField<T>, cutoff: &CutoffFamily<T>) -> Result<T> {
    check_same_grid(field.grid(), &cutoff.grid)?;
    Ok(weighted(
        cutoff.chi(),
        field.samples().iter().map(|z| z.norm_sqr()),
        field.grid().dx(),
    ))
}

/// `2 Im int chi_R' u' conj(u)`
pub fn z_prime<T: Real>(field: &WaveField<T>, cutoff: &CutoffFamily<T>) -> Result<T> {
    check_same_grid(field.grid(), &cutoff.grid)?;
    let du = field.derivative();
    let density = du
        .samples()
        .iter()
        .zip(field.samples())
        .map(|(d, u)| (d * u.conj()).im);
    Ok(lit::<T>(2.0) * weighted(cutoff.derivative(1), density, field.grid().dx()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VirialTerms {
    /// `4 int chi'' |u'|^2`
    pub kinetic: f64,
    /// `2 alpha/(alpha+2) int chi'' |u|^(alpha+2)`
    pub nonlinear: f64,
    /// `-2 int chi' V' |u|^2`
    pub potential: f64,
    /// `-int chi'''' |u|^2`
    pub bilaplacian: f64,
    pub total: f64,
}

pub fn z_doubleprime<T: Real>(
    field: &WaveField<T>,
    cutoff: &CutoffFamily<T>,
    sample: Option<&PotentialSample<T>>,
    alpha: T,
) -> Result<VirialTerms> {
    check_same_grid(field.grid(), &cutoff.grid)?;
    if let Some(s) = sample {
        check_same_grid(field.grid(), s.grid())?;
    }
    let dx = field.grid().dx();
    let two: T = lit(2.0);
    let du = field.derivative();
    let chi1 = cutoff.derivative(1);
    let chi2 = cutoff.derivative(2);
    let chi4 = cutoff.derivative(4);
    let kinetic = lit::<T>(4.0) * weighted(chi2, du.samples().iter().map(|d| d.norm_sqr()), dx);
    let nonlinear = if alpha == T::zero() {
        T::zero()
    } else {
        two * alpha / (alpha + two)
            * weighted(
                chi2,
                field.samples().iter().map(|z| pow_abs(z.norm(), alpha + two)),
                dx,
            )
    };
    let potential = sample.map_or(T::zero(), |s| {
        -two * dx
            * chi1
                .iter()
                .zip(s.derivatives())
                .zip(field.samples())
                .map(|((c, v), z)| *c * *v * z.norm_sqr())
                .sum::<T>()
    });
    let bilaplacian = -weighted(chi4, field.samples().iter().map(|z| z.norm_sqr()), dx);
    let (kinetic, nonlinear, potential, bilaplacian) = (
        to_f64(kinetic),
        to_f64(nonlinear),
        to_f64(potential),
        to_f64(bilaplacian),
    );
    Ok(VirialTerms {
        kinetic,
        nonlinear,
        potential,
        bilaplacian,
        total: kinetic + nonlinear + potential + bilaplacian,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RigidityReport {
    pub radius: f64,
    /// `delta = (1/2) int |u|^(alpha+2)`
    pub delta: f64,
    /// `int_{|x|>R} (|u|^2 + |u|^(alpha+2) + |u'|^2)`
    pub tail: f64,
    /// `R^{-2} ||u||_{L2}`
    pub mass_term: f64,
    /// `||x V'||_{L1(|x|>R)}`
    pub xvprime_tail: f64,
    /// `delta - (tail + mass_term + xvprime_tail)`
    pub lower_bound_combination: f64,
    /// `sqrt(2) sup|chi_R'| / R`: the factor with
    /// `2 int |chi_R'| |u'| |u| <= 2 * slack * E^{1/2} M^{1/2} R` when `V >= 0`.
    pub cauchy_schwarz_slack: f64,
    /// `2 * slack * E^{1/2} M^{1/2} R`
    pub ceiling: f64,
    pub energy: f64,
    pub mass: f64,
    pub z_prime: f64,
    pub z_doubleprime: VirialTerms,
    pub narrative: String,
}

/// Evaluates every term of the rigidity lower bound for one field, plus the
/// ceiling on `|z_R'|`. Requires a repulsive, nonnegative potential.
pub fn rigidity_report<T: Real>(
    field: &WaveField<T>,
    cutoff: &CutoffFamily<T>,
    sample: &PotentialSample<T>,
    alpha: T,
) -> Result<RigidityReport> {
    let hyp = hypothesis_report(sample);
    if !hyp.repulsive {
        return Err(Error::HypothesisViolation(format!(
            "potential is not repulsive (max x V' = {:.3e})",
            hyp.max_xvprime
        )));
    }
    if !hyp.nonneg {
        return Err(Error::HypothesisViolation(format!(
            "potential has a negative part (min V = {:.3e})",
            hyp.min_v
        )));
    }
    check_same_grid(field.grid(), &cutoff.grid)?;
    check_same_grid(field.grid(), sample.grid())?;
    let radius = cutoff.radius;
    let dx = field.grid().dx();
    let two: T = lit(2.0);
    let du = field.derivative();
    let nodes = field.grid().nodes();

    let full_power: T = dx * field
        .samples()
        .iter()
        .map(|z| pow_abs(z.norm(), alpha + two))
        .sum::<T>();
    let delta = lit::<T>(0.5) * full_power;
    let tail = dx * nodes
        .iter()
        .zip(field.samples().iter().zip(du.samples()))
        .filter(|(x, _)| x.abs() > radius)
        .map(|(_, (u, d))| {
            let m = u.norm();
            m * m + pow_abs(m, alpha + two) + d.norm_sqr()
        })
        .sum::<T>();
    let m = mass(field);
    let mass_term = m.sqrt() / (radius * radius);
    let xvprime_tail = dx * nodes
        .iter()
        .zip(sample.derivatives())
        .filter(|(x, _)| x.abs() > radius)
        .map(|(x, v)| (*x * *v).abs())
        .sum::<T>();
    let e = energy(field, Some(sample), alpha);
    let slack = two.sqrt() * cutoff.max_slope() / radius;
    let ceiling = two * slack * e.max(T::zero()).sqrt() * m.sqrt() * radius;
    let zp = z_prime(field, cutoff)?;
    let zpp = z_doubleprime(field, cutoff, Some(sample), alpha)?;
    let combination = delta - (tail + mass_term + xvprime_tail);
    let narrative = format!(
        "z'' = {:.6e} with lower-bound combination {:.6e}; |z'| = {:.6e} against ceiling {:.6e}. \
         A positive combination on a flow with precompact orbit would force z'' >= c > 0, \
         i.e. linear growth of z', which the ceiling forbids.",
        zpp.total,
        to_f64(combination),
        to_f64(zp.abs()),
        to_f64(ceiling)
    );
    Ok(RigidityReport {
        radius: to_f64(radius),
        delta: to_f64(delta),
        tail: to_f64(tail),
        mass_term: to_f64(mass_term),
        xvprime_tail: to_f64(xvprime_tail),
        lower_bound_combination: to_f64(combination),
        cauchy_schwarz_slack: to_f64(slack),
        ceiling: to_f64(ceiling),
        energy: to_f64(e),
        mass: to_f64(m),
        z_prime: to_f64(zp),
        z_doubleprime: zpp,
        narrative,
    })
}

//! Conserved quantities, Strichartz exponent algebra, decay-rate fits and
//! numerical scattering detection.
//!
//! # Energy normalization
//!
//! The quantity conserved by `i u_t = -u_xx + V u + |u|^alpha u` is
//!
//! ```text
//! E(u) = 1/2 int |u'|^2 + 1/2 int V |u|^2 + 1/(alpha+2) int |u|^(alpha+2)
//! ```
//!
//! [`energy`] computes it. [`energy_literal`] drops the 1/2 on the
//! potential term; it is kept only to show, along a trace, that this variant
//! is not conserved.

use num_traits::{Num, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{spacetime_norm, EvolutionTrace, WaveField};
use crate::potentials::PotentialSample;
use crate::propagators::{free_flow_unchecked, propagate_linear};
use crate::scalar::{lit, pow_abs, to_f64, Real};

/// `int |u|^2 dx`
pub fn mass<T: Real>(field: &WaveField<T>) -> T {
    field.grid().dx() * field.samples().iter().map(|z| z.norm_sqr()).sum::<T>()
}

fn energy_terms<T: Real>(
    field: &WaveField<T>,
    sample: Option<&PotentialSample<T>>,
    alpha: T,
) -> (T, T, T) {
    let dx = field.grid().dx();
    let du = field.derivative();
    let kinetic = dx * du.samples().iter().map(|z| z.norm_sqr()).sum::<T>();
    let potential = sample.map_or(T::zero(), |s| {
        assert!(
            s.grid().same_as(field.grid()),
            "potential sampled on a different grid"
        );
        dx * field
            .samples()
            .iter()
            .zip(s.values())
            .map(|(z, v)| *v * z.norm_sqr())
            .sum::<T>()
    });
    let nonlinear = if alpha == T::zero() {
        T::zero()
    } else {
        let two: T = lit(2.0);
        dx * field
            .samples()
            .iter()
            .map(|z| pow_abs(z.norm(), alpha + two))
            .sum::<T>()
            / (alpha + two)
    };
    (kinetic, potential, nonlinear)
}

/// Conserved energy (see module docs). `alpha = 0` means the linear flow and
/// drops the nonlinear term.
pub fn energy<T: Real>(field: &WaveField<T>, sample: Option<&PotentialSample<T>>, alpha: T) -> T {
    let (k, p, n) = energy_terms(field, sample, alpha);
    let half: T = lit(0.5);
    half * k + half * p + n
}

/// Energy with coefficient 1 on `int V |u|^2`.
pub fn energy_literal<T: Real>(
    field: &WaveField<T>,
    sample: Option<&PotentialSample<T>>,
    alpha: T,
) -> T {
    let (k, p, n) = energy_terms(field, sample, alpha);
    lit::<T>(0.5) * k + p + n
}

/// Exponents `r = alpha+2`, `q = 2 alpha(alpha+2)/(alpha^2-alpha-4)`,
/// `p = 2 alpha(alpha+2)/(alpha+4)`, `gamma = 2 alpha/(alpha-2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentSet<S> {
    pub alpha: S,
    pub r: S,
    pub q: S,
    pub p: S,
    pub gamma: S,
}

/// Works for any exact or floating number type; `Ratio<i64>` gives the
/// exponents as exact rationals.
pub fn strichartz_exponents<S>(alpha: S) -> Result<ExponentSet<S>>
where
    S: Num + Clone + PartialOrd + ToPrimitive,
{
    let one = S::one();
    let two = one.clone() + one.clone();
    let four = two.clone() + two.clone();
    if !(alpha > four) {
        return Err(Error::OutOfRange(alpha.to_f64().unwrap_or(f64::NAN)));
    }
    let a = alpha;
    let r = a.clone() + two.clone();
    let numerator = two.clone() * a.clone() * r.clone();
    let q = numerator.clone() / (a.clone() * a.clone() - a.clone() - four.clone());
    let p = numerator / (a.clone() + four);
    let gamma = two.clone() * a.clone() / (a.clone() - two);
    Ok(ExponentSet {
        alpha: a,
        r,
        q,
        p,
        gamma,
    })
}

impl<S: ToPrimitive> ExponentSet<S> {
    pub fn to_f64(&self) -> ExponentSet<f64> {
        let f = |x: &S| x.to_f64().unwrap_or(f64::NAN);
        ExponentSet {
            alpha: f(&self.alpha),
            r: f(&self.r),
            q: f(&self.q),
            p: f(&self.p),
            gamma: f(&self.gamma),
        }
    }
}

/// Hölder conjugate `x / (x - 1)`, with `1' = infinity` and `infinity' = 1`.
pub fn conjugate(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else if x == 1.0 {
        f64::INFINITY
    } else {
        x / (x - 1.0)
    }
}

/// One-dimensional admissibility `2/q + 1/r = 1/2` for `q, r` in `[2, inf]`.
pub fn admissible_pair_check(q: f64, r: f64) -> bool {
    if q.is_nan() || r.is_nan() || q < 2.0 || r < 2.0 {
        return false;
    }
    (2.0 / q + 1.0 / r - 0.5).abs() <= 1e-12
}

/// Expected `L^a` decay exponent `-(1/2)(1/a' - 1/a) = -(1/2)(1 - 2/a)`.
pub fn expected_decay_slope(a: f64) -> f64 {
    if a.is_infinite() {
        -0.5
    } else {
        -0.5 * (1.0 - 2.0 / a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub expected_slope: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 8;

/// Least-squares fit of `log ||u(t)||_{L^a}` against `log t` on `window`.
pub fn decay_fit<T: Real>(trace: &EvolutionTrace<T>, a: T, window: (T, T)) -> Result<DecayFit> {
    let (t0, t1) = window;
    if !(t0 > T::zero()) || !(t1 > t0) {
        return Err(Error::InvalidWindow(format!(
            "need 0 < t0 < t1, got [{t0}, {t1}]"
        )));
    }
    if t1 > trace.horizon() {
        return Err(Error::UntrustedWindow {
            t: to_f64(t1),
            horizon: to_f64(trace.horizon()),
        });
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (t, s) in trace.times().iter().zip(trace.snapshots()) {
        if *t >= t0 && *t <= t1 {
            xs.push(to_f64(t.ln()));
            ys.push(to_f64(s.lp_norm(a)?.ln()));
        }
    }
    if xs.len() < MIN_FIT_SAMPLES {
        return Err(Error::InvalidWindow(format!(
            "{} samples in [{t0}, {t1}], need at least {MIN_FIT_SAMPLES}",
            xs.len()
        )));
    }
    let (slope, intercept, residual) = least_squares(&xs, &ys);
    Ok(DecayFit {
        slope,
        intercept,
        residual,
        expected_slope: expected_decay_slope(to_f64(a)),
        samples: xs.len(),
    })
}

/// Ordinary least squares `y = slope x + intercept`; returns the RMS residual too.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ScatteringConsistent,
    Inconclusive,
    NonScatteringSuspected,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScatterSettings {
    /// H1 Cauchy threshold on the final pullback residual.
    pub threshold: f64,
    /// Number of consecutive time windows for the `L^p L^r` tails.
    pub windows: usize,
    /// Step used for the with-potential pullback when the trace carries none.
    pub fallback_step: f64,
}

impl Default for ScatterSettings {
    fn default() -> Self {
        ScatterSettings {
            threshold: 1e-3,
            windows: 4,
            fallback_step: 1e-2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScatterReport {
    pub pullback_times: Vec<f64>,
    /// `||psi(t_{i+1}) - psi(t_i)||_{H1}` for the comparison flow (with
    /// potential when a sample is given, free otherwise).
    pub cauchy_residuals: Vec<f64>,
    /// Same residuals measured against the free flow.
    pub free_cauchy_residuals: Vec<f64>,
    pub strichartz_tail: Vec<f64>,
    pub comparison_flow: &'static str,
    pub verdict: Verdict,
    pub reason: String,
}

impl ScatterReport {
    pub fn final_residual(&self) -> Option<f64> {
        self.cauchy_residuals.last().copied()
    }

    pub fn tails_decreasing(&self) -> bool {
        strictly_decreasing(&self.strichartz_tail)
    }
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.len() >= 2 && values.windows(2).all(|w| w[1] < w[0])
}

/// Pulls each snapshot back to `t = 0` with the inverse linear flow and
/// checks that the pullbacks form a Cauchy sequence in H1, corroborated by
/// decreasing `L^p L^r` norms over successive windows.
pub fn scattering_detector<T: Real>(
    trace: &EvolutionTrace<T>,
    sample: Option<&PotentialSample<T>>,
    exponents: &ExponentSet<f64>,
    settings: &ScatterSettings,
) -> Result<ScatterReport> {
    if trace.len() < 2 {
        return Err(Error::InvalidInput(
            "scattering detection needs at least two snapshots".into(),
        ));
    }
    let step = trace.step().unwrap_or_else(|| lit(settings.fallback_step));
    let pullback = |u: &WaveField<T>, t: T| -> Result<WaveField<T>> {
        match sample {
            Some(v) => propagate_linear(u, -t, step, v),
            None => Ok(free_flow_unchecked(u, -t)),
        }
    };
    let mut residuals = Vec::with_capacity(trace.len() - 1);
    let mut free_residuals = Vec::with_capacity(trace.len() - 1);
    let mut previous: Option<(WaveField<T>, WaveField<T>)> = None;
    for (&t, u) in trace.times().iter().zip(trace.snapshots()) {
        let psi = pullback(u, t)?;
        let psi_free = free_flow_unchecked(u, -t);
        if let Some((prev, prev_free)) = &previous {
            residuals.push(to_f64(psi.difference(prev)?.h1_norm()));
            free_residuals.push(to_f64(psi_free.difference(prev_free)?.h1_norm()));
        }
        previous = Some((psi, psi_free));
    }

    let p: T = lit(exponents.p);
    let r: T = lit(exponents.r);
    let windows = settings.windows.clamp(1, trace.len() - 1);
    let mut tails = Vec::with_capacity(windows);
    let last = trace.len() - 1;
    for w in 0..windows {
        let lo = w * last / windows;
        let hi = (w + 1) * last / windows;
        let sub = EvolutionTrace::new(
            trace.times()[lo..=hi].to_vec(),
            trace.snapshots()[lo..=hi].to_vec(),
        )?;
        tails.push(to_f64(spacetime_norm(&sub, p, r)?));
    }

    let final_residual = *residuals.last().unwrap();
    let first_residual = residuals[0];
    let (verdict, reason) = if !trace.trusted() {
        (
            Verdict::Inconclusive,
            format!(
                "trace extends to t = {} beyond the wraparound horizon {}",
                trace.times()[last],
                trace.horizon()
            ),
        )
    } else if final_residual <= settings.threshold && strictly_decreasing(&tails) {
        (
            Verdict::ScatteringConsistent,
            format!(
                "final H1 Cauchy residual {final_residual:.3e} <= {:.1e} and window tails decrease",
                settings.threshold
            ),
        )
    } else if final_residual > settings.threshold && final_residual >= 0.5 * first_residual {
        (
            Verdict::NonScatteringSuspected,
            format!("H1 Cauchy residuals stay near {final_residual:.3e}"),
        )
    } else {
        (
            Verdict::Inconclusive,
            format!(
                "final residual {final_residual:.3e}, tails decreasing: {}",
                strictly_decreasing(&tails)
            ),
        )
    };
    Ok(ScatterReport {
        pullback_times: trace.times().iter().map(|&t| to_f64(t)).collect(),
        cauchy_residuals: residuals,
        free_cauchy_residuals: free_residuals,
        strichartz_tail: tails,
        comparison_flow: if sample.is_some() {
            "linear-with-potential"
        } else {
            "free"
        },
        verdict,
        reason,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailIntegral {
    pub radius: f64,
    pub value: f64,
}

/// `int_{|x| >= R} (|u'|^2 + |u|^2 + |u|^(alpha+2)) dx` for each radius.
pub fn tail_compactness<T: Real>(field: &WaveField<T>, alpha: T, radii: &[T]) -> Vec<TailIntegral> {
    let du = field.derivative();
    let dx = field.grid().dx();
    let two: T = lit(2.0);
    let density: Vec<(T, T)> = field
        .grid()
        .nodes()
        .iter()
        .zip(field.samples().iter().zip(du.samples()))
        .map(|(&x, (u, d))| {
            let m = u.norm();
            (x.abs(), d.norm_sqr() + m * m + pow_abs(m, alpha + two))
        })
        .collect();
    radii
        .iter()
        .map(|&radius| {
            let value = dx * density
                .iter()
                .filter(|(ax, _)| *ax >= radius)
                .map(|(_, w)| *w)
                .sum::<T>();
            TailIntegral {
                radius: to_f64(radius),
                value: to_f64(value),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::InitialData;
    use crate::grid::Grid;
    use num_rational::Ratio;
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn mass_cases() {
        let g = Grid::new(1024, 30.0).unwrap();
        assert_eq!(mass(&WaveField::zeros(Arc::clone(&g))), 0.0);
        let u = WaveField::from_real_fn(Arc::clone(&g), |x: f64| (-x * x).exp());
        assert!((mass(&u) - (PI / 2.0).sqrt()).abs() <= 1e-8);
        let m = mass(&u.translate(3.3).unwrap());
        assert!((m - mass(&u)).abs() <= 1e-12 * m);
    }

    #[test]
    fn energy_matches_direct_quadrature() {
        let g = Grid::new(2048, 30.0).unwrap();
        let u = WaveField::from_real_fn(Arc::clone(&g), |x: f64| (-x * x).exp());
        assert_eq!(energy(&WaveField::zeros(Arc::clone(&g)), None, 6.0), 0.0);
        // u' = -2x e^{-x^2}; oracle from closed-form integrands on a fine Simpson grid.
        let n = 200_000;
        let (a, b) = (-15.0_f64, 15.0_f64);
        let h = (b - a) / n as f64;
        let f = |x: f64| {
            let e = (-x * x).exp();
            0.5 * (2.0 * x * e).powi(2) + e.powi(8) / 8.0
        };
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        let oracle = s * h / 3.0;
        assert!((energy(&u, None, 6.0) - oracle).abs() <= 1e-8, "{oracle}");
    }

    #[test]
    fn exponents_alpha_six_and_eight() {
        let e = strichartz_exponents(6.0_f64).unwrap();
        assert!((e.r - 8.0).abs() < 1e-12);
        assert!((e.q - 48.0 / 13.0).abs() < 1e-12);
        assert!((e.p - 48.0 / 5.0).abs() < 1e-12);
        assert!((e.gamma - 3.0).abs() < 1e-12);

        let e = strichartz_exponents(Ratio::from_integer(8_i64)).unwrap();
        assert_eq!(e.r, Ratio::from_integer(10));
        assert_eq!(e.q, Ratio::new(40, 13));
        assert_eq!(e.p, Ratio::new(40, 3));
        assert_eq!(e.gamma, Ratio::new(8, 3));
    }

    #[test]
    fn exponents_reject_alpha_four() {
        assert!(matches!(strichartz_exponents(4.0_f64), Err(Error::OutOfRange(_))));
        assert!(strichartz_exponents(Ratio::from_integer(3_i64)).is_err());
    }

    #[test]
    fn admissibility() {
        assert!(admissible_pair_check(f64::INFINITY, 2.0));
        assert!(admissible_pair_check(4.0, f64::INFINITY));
        assert!(!admissible_pair_check(48.0 / 13.0, 8.0));
        assert!(!admissible_pair_check(1.0, 2.0));
    }

    #[test]
    fn conjugates() {
        assert_eq!(conjugate(2.0), 2.0);
        assert_eq!(conjugate(f64::INFINITY), 1.0);
        assert_eq!(conjugate(1.0), f64::INFINITY);
        assert!((conjugate(4.0) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn decay_fit_rejects_sparse_windows() {
        let g = Grid::new(64, 10.0).unwrap();
        let u = WaveField::from_real_fn(Arc::clone(&g), |x: f64| (-x * x).exp());
        let times: Vec<f64> = (0..5).map(|i| i as f64 + 1.0).collect();
        let trace = EvolutionTrace::new(times, vec![u; 5]).unwrap().with_horizon(100.0);
        assert!(matches!(
            decay_fit(&trace, 2.0, (1.0, 5.0)),
            Err(Error::InvalidWindow(_))
        ));
        assert!(matches!(
            decay_fit(&trace, 2.0, (1.0, 500.0)),
            Err(Error::UntrustedWindow { .. })
        ));
    }

    #[test]
    fn tail_integrals() {
        let g = Grid::new(4096, 40.0 * PI).unwrap();
        let u = InitialData::gaussian(1.0, 1.0 / 2f64.sqrt()).sample(&g);
        let t = tail_compactness(&u, 6.0, &[0.0, 1.0, 2.0, 10.0]);
        let full = {
            let d = u.derivative().lp_norm(2.0).unwrap();
            let m = u.lp_norm(2.0).unwrap();
            d * d + m * m + u.lp_norm(8.0).unwrap().powi(8)
        };
        assert!((t[0].value - full).abs() <= 1e-12 * full);
        assert!(t[3].value <= 1e-20);
        assert!(t.windows(2).all(|w| w[1].value <= w[0].value));
    }
}

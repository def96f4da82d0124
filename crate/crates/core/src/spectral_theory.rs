//! Zero-energy resonance detection through the Wronskian of the Jost
//! solutions of `u'' = V u`, negative-spectrum counting by Sturm sequences,
//! and numerical checks of the quadratic-form bounds of `-d^2/dx^2 + V`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::WaveField;
use crate::potentials::{PotentialSample, PotentialSpec, SIGN_TOLERANCE};
use crate::propagators::propagate_linear;
use crate::scalar::{lit, to_f64, Real};

/// RK4 substeps per grid interval in the Jost integration.
pub const JOST_SUBSTEPS: usize = 4;
pub const JOST_OVERFLOW: f64 = 1e8;
/// `|W|` below this after refinement flags a zero-energy resonance.
pub const RESONANCE_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct JostResult<T: Real> {
    /// Solution normalized to 1 at the left edge, sampled at the grid nodes.
    pub u_minus: Vec<T>,
    /// Solution normalized to 1 at the right edge, sampled at the grid nodes.
    pub u_plus: Vec<T>,
    /// `W(x) = u_+ u_-' - u_+' u_-` at every node.
    pub wronskian_profile: Vec<T>,
    /// Wronskian at the refined resolution.
    pub wronskian: T,
    /// `max_x |W(x) - W|` at the base resolution.
    pub wronskian_spread: T,
    pub resolution_pair: (usize, usize),
    /// `|W_N - W_2N| / max(|W_2N|, 1)`.
    pub relative_drift: T,
}

impl<T: Real> JostResult<T> {
    pub fn resonant(&self) -> bool {
        self.wronskian.abs() < lit(RESONANCE_THRESHOLD)
    }

    pub fn summary(&self) -> JostSummary {
        JostSummary {
            wronskian: to_f64(self.wronskian),
            wronskian_spread: to_f64(self.wronskian_spread),
            resolution_pair: self.resolution_pair,
            relative_drift: to_f64(self.relative_drift),
            resonant: self.resonant(),
        }
    }
}

/// Serializable part of a [`JostResult`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JostSummary {
    pub wronskian: f64,
    pub wronskian_spread: f64,
    pub resolution_pair: (usize, usize),
    pub relative_drift: f64,
    pub resonant: bool,
}

struct JostSolutions<T> {
    u: Vec<T>,
    du: Vec<T>,
}

/// RK4 for `(u, u')' = (u', V u)` from `start` over `intervals` grid
/// intervals of signed width `h`, recording at interval ends.
fn integrate_jost<T: Real>(
    spec: &PotentialSpec,
    start: T,
    h: T,
    intervals: usize,
    substeps: usize,
) -> Result<JostSolutions<T>> {
    let limit: T = lit(JOST_OVERFLOW);
    let sub = h / T::from(substeps).unwrap();
    let half: T = lit(0.5);
    let sixth = T::one() / lit(6.0);
    let two: T = lit(2.0);
    let mut x = start;
    let (mut u, mut du) = (T::one(), T::zero());
    let mut out_u = Vec::with_capacity(intervals + 1);
    let mut out_du = Vec::with_capacity(intervals + 1);
    out_u.push(u);
    out_du.push(du);
    for i in 0..intervals {
        for _ in 0..substeps {
            let v0 = spec.value(x);
            let vm = spec.value(x + half * sub);
            let v1 = spec.value(x + sub);
            let (k1u, k1d) = (du, v0 * u);
            let (k2u, k2d) = (du + half * sub * k1d, vm * (u + half * sub * k1u));
            let (k3u, k3d) = (du + half * sub * k2d, vm * (u + half * sub * k2u));
            let (k4u, k4d) = (du + sub * k3d, v1 * (u + sub * k3u));
            u += sub * sixth * (k1u + two * k2u + two * k3u + k4u);
            du += sub * sixth * (k1d + two * k2d + two * k3d + k4d);
            x += sub;
        }
        if !(u.abs() <= limit) {
            return Err(Error::Overflow {
                x: to_f64(start + h * T::from(i + 1).unwrap()),
                limit: JOST_OVERFLOW,
            });
        }
        out_u.push(u);
        out_du.push(du);
    }
    Ok(JostSolutions { u: out_u, du: out_du })
}

struct WronskianAtResolution<T> {
    u_minus: Vec<T>,
    u_plus: Vec<T>,
    profile: Vec<T>,
    center: T,
}

fn wronskian_at<T: Real>(spec: &PotentialSpec, half_width: T, intervals: usize) -> Result<WronskianAtResolution<T>> {
    let h = (half_width + half_width) / T::from(intervals).unwrap();
    let left = integrate_jost(spec, -half_width, h, intervals, JOST_SUBSTEPS)?;
    let mut right = integrate_jost(spec, half_width, -h, intervals, JOST_SUBSTEPS)?;
    right.u.reverse();
    right.du.reverse();
    // Node j sits at -L + j h for j = 0..intervals; drop the x = +L endpoint.
    let profile: Vec<T> = (0..intervals)
        .map(|j| right.u[j] * left.du[j] - right.du[j] * left.u[j])
        .collect();
    let center = profile[intervals / 2];
    Ok(WronskianAtResolution {
        u_minus: left.u[..intervals].to_vec(),
        u_plus: right.u[..intervals].to_vec(),
        profile,
        center,
    })
}

/// Integrates `u'' = V u` from both box edges with `(u, u') = (1, 0)` and
/// reports the Wronskian of the two solutions at `N` and `2N` intervals.
pub fn jost_wronskian<T: Real>(sample: &PotentialSample<T>) -> Result<JostResult<T>> {
    let grid = sample.grid();
    let n = grid.num_points();
    let base = wronskian_at(sample.spec(), grid.half_width(), n)?;
    let fine = wronskian_at(sample.spec(), grid.half_width(), 2 * n)?;
    let spread = base
        .profile
        .iter()
        .map(|w| (*w - base.center).abs())
        .fold(T::zero(), T::max);
    let drift = (base.center - fine.center).abs() / fine.center.abs().max(T::one());
    Ok(JostResult {
        u_minus: base.u_minus,
        u_plus: base.u_plus,
        wronskian_profile: base.profile,
        wronskian: fine.center,
        wronskian_spread: spread,
        resolution_pair: (n, 2 * n),
        relative_drift: drift,
    })
}

/// Number of eigenvalues of the symmetric tridiagonal matrix
/// `(diag, off)` strictly below `shift` (Sturm sequence / LDL^T inertia).
pub fn sturm_count<T: Real>(diag: &[T], off: &[T], shift: T) -> usize {
    let tiny = T::epsilon() * T::epsilon();
    let mut count = 0;
    let mut d = T::one();
    for (j, &a) in diag.iter().enumerate() {
        d = if j == 0 {
            a - shift
        } else {
            let b = off[j - 1];
            a - shift - b * b / d
        };
        if d == T::zero() {
            d = -tiny;
        }
        if d < T::zero() {
            count += 1;
        }
    }
    count
}

/// Three-point finite-difference matrix of `-d^2/dx^2 + V` with Dirichlet
/// conditions just outside the box: `(diagonal, off-diagonal)`.
pub fn schrodinger_tridiagonal<T: Real>(sample: &PotentialSample<T>) -> (Vec<T>, Vec<T>) {
    let dx = sample.grid().dx();
    let inv = T::one() / (dx * dx);
    let two: T = lit(2.0);
    let diag = sample.values().iter().map(|&v| two * inv + v).collect();
    let off = vec![-inv; sample.values().len() - 1];
    (diag, off)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundStates {
    pub count: usize,
    pub lowest: Option<f64>,
}

/// Bisection tolerance for the lowest eigenvalue.
pub const EIGENVALUE_TOLERANCE: f64 = 1e-9;

/// Counts negative eigenvalues of the discretized operator and, when there
/// is at least one, locates the lowest by bisection on the Sturm count.
pub fn bound_state_count<T: Real>(sample: &PotentialSample<T>) -> BoundStates {
    let (diag, off) = schrodinger_tridiagonal(sample);
    let count = sturm_count(&diag, &off, T::zero());
    if count == 0 {
        return BoundStates { count, lowest: None };
    }
    // Gershgorin lower bound.
    let mut lo = diag
        .iter()
        .enumerate()
        .map(|(j, &a)| {
            let left = if j > 0 { off[j - 1].abs() } else { T::zero() };
            let right = if j < off.len() { off[j].abs() } else { T::zero() };
            a - left - right
        })
        .fold(T::infinity(), T::min);
    let mut hi = T::zero();
    let tol: T = lit(EIGENVALUE_TOLERANCE);
    let half: T = lit(0.5);
    while hi - lo > tol {
        let mid = half * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if sturm_count(&diag, &off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    BoundStates {
        count,
        lowest: Some(to_f64(half * (lo + hi))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuadraticFormReport {
    /// `Q(u) / ||u||_{H1}^2` per field, with `Q(u) = ||u||_{H1}^2 + int V |u|^2`.
    pub ratios: Vec<f64>,
    /// `sup ||u||_inf^2 / ||u||_{H1}^2` over the fields.
    pub sobolev_constant: f64,
    pub v_l1: f64,
    /// `1 + sobolev_constant * ||V||_{L1}`
    pub upper_bound: f64,
    pub all_within: bool,
}

fn require_nonnegative<T: Real>(sample: &PotentialSample<T>) -> Result<()> {
    let min_v = to_f64(sample.min_value());
    if min_v < -SIGN_TOLERANCE {
        Err(Error::HypothesisViolation(format!(
            "potential has a negative part (min V = {min_v:.3e})"
        )))
    } else {
        Ok(())
    }
}

/// `Q(u) = ||u'||^2 + int V |u|^2 + ||u||^2`.
pub fn quadratic_form<T: Real>(sample: &PotentialSample<T>, field: &WaveField<T>) -> T {
    let h1 = field.h1_norm();
    let dx = field.grid().dx();
    let pot = dx * field
        .samples()
        .iter()
        .zip(sample.values())
        .map(|(z, v)| *v * z.norm_sqr())
        .sum::<T>();
    h1 * h1 + pot
}

/// Measured Sobolev constant `sup ||u||_inf^2 / ||u||_{H1}^2` over `fields`.
pub fn sobolev_constant<T: Real>(fields: &[WaveField<T>]) -> f64 {
    fields
        .iter()
        .filter_map(|u| {
            let h1 = u.h1_norm();
            (h1 > T::zero()).then(|| {
                let s = u.sup_norm();
                to_f64(s * s / (h1 * h1))
            })
        })
        .fold(0.0, f64::max)
}

/// Checks `1 <= Q(u)/||u||_{H1}^2 <= 1 + C_s ||V||_{L1}` on each field.
pub fn quadratic_form_bounds<T: Real>(
    sample: &PotentialSample<T>,
    fields: &[WaveField<T>],
) -> Result<QuadraticFormReport> {
    require_nonnegative(sample)?;
    let cs = sobolev_constant(fields);
    let v_l1 = to_f64(sample.l1_norm());
    let upper = 1.0 + cs * v_l1;
    let ratios: Vec<f64> = fields
        .iter()
        .map(|u| {
            let h1 = u.h1_norm();
            to_f64(quadratic_form(sample, u) / (h1 * h1))
        })
        .collect();
    let all_within = ratios.iter().all(|&r| (1.0..=upper).contains(&r));
    Ok(QuadraticFormReport {
        ratios,
        sobolev_constant: cs,
        v_l1,
        upper_bound: upper,
        all_within,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowBoundReport {
    pub times: Vec<f64>,
    /// `||u(t)||_{H1} / ||u(0)||_{H1}` at each time.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub bound: f64,
    pub within: bool,
}

/// Evolves `field` under the linear flow with potential and reports
/// `max_t ||u(t)||_{H1} / ||u(0)||_{H1}` against `1 + C_s ||V||_{L1}`.
/// `sobolev` defaults to the constant measured on `field` itself.
pub fn h1_flow_bound<T: Real>(
    sample: &PotentialSample<T>,
    field: &WaveField<T>,
    times: &[T],
    dt: T,
    sobolev: Option<f64>,
) -> Result<FlowBoundReport> {
    require_nonnegative(sample)?;
    let horizon = field.wrap_horizon();
    if let Some(&t) = times.iter().find(|t| t.abs() > horizon) {
        return Err(Error::UntrustedWindow {
            t: to_f64(t),
            horizon: to_f64(horizon),
        });
    }
    let cs = sobolev.unwrap_or_else(|| sobolev_constant(std::slice::from_ref(field)));
    let bound = 1.0 + cs * to_f64(sample.l1_norm());
    let h0 = field.h1_norm();
    let mut sorted: Vec<T> = times.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut current = field.clone();
    let mut t_now = T::zero();
    let mut ratios = Vec::with_capacity(sorted.len());
    for &t in &sorted {
        current = propagate_linear(&current, t - t_now, dt, sample)?;
        t_now = t;
        ratios.push(to_f64(current.h1_norm() / h0));
    }
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(FlowBoundReport {
        times: sorted.iter().map(|&t| to_f64(t)).collect(),
        ratios,
        max_ratio,
        bound,
        within: max_ratio <= bound,
    })
}

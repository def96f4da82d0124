//! Time evolution: exact free flow, Strang-split linear flow with a
//! potential, and the split-step nonlinear flow.
//!
//! Every propagator follows [`FLOW`]: the solved equation is
//! `i u_t = -u_xx + V u + |u|^alpha u`.

use std::sync::Arc;

use serde::Serialize;

use crate::diagnostics::{energy, energy_literal, mass};
use crate::error::{Error, Result};
use crate::grid::{check_same_grid, spacetime_norm, EvolutionTrace, Grid, WaveField};
use crate::potentials::PotentialSample;
use crate::scalar::{cis, lit, pow_abs, to_f64, Complex, Real};

/// Sign and form of the evolution, shared by every propagator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlowConvention {
    pub equation: &'static str,
    pub free_multiplier: &'static str,
}

pub const FLOW: FlowConvention = FlowConvention {
    equation: "i u_t = -u_xx + V u + |u|^alpha u",
    free_multiplier: "exp(-i k^2 t)",
};

impl FlowConvention {
    /// Free-flow multiplier `exp(-i k^2 t)` for one mode.
    #[inline]
    pub fn kinetic_factor<T: Real>(&self, k: T, t: T) -> Complex<T> {
        cis(-k * k * t)
    }

    /// Pointwise phase `exp(-i w t)` for the local frequency `w = V + |u|^alpha`.
    #[inline]
    pub fn pointwise_factor<T: Real>(&self, w: T, t: T) -> Complex<T> {
        cis(-w * t)
    }
}

pub const MAX_STEP: f64 = 0.1;
pub const BLOW_UP_THRESHOLD: f64 = 1e6;
/// Outer fraction of the box watched for wrapped content.
pub const EDGE_BAND: f64 = 0.1;
pub const EDGE_MASS_LIMIT: f64 = 1e-8;

#[derive(Clone, Copy, Debug)]
pub struct StepperConfig<'a, T: Real> {
    dt: T,
    alpha: T,
    record_every: usize,
    potential: Option<&'a PotentialSample<T>>,
}

impl<'a, T: Real> StepperConfig<'a, T> {
    pub fn new(dt: T, alpha: T, record_every: usize) -> Result<Self> {
        if !(dt > T::zero()) || dt > lit(MAX_STEP) {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: to_f64(dt),
                reason: "time step must lie in (0, 0.1]",
            });
        }
        if !(alpha == T::zero() || alpha > lit(4.0)) || !alpha.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: to_f64(alpha),
                reason: "alpha must be 0 (linear) or greater than 4",
            });
        }
        if record_every == 0 {
            return Err(Error::InvalidParameter {
                name: "record_every",
                value: 0.0,
                reason: "must be positive",
            });
        }
        Ok(StepperConfig {
            dt,
            alpha,
            record_every,
            potential: None,
        })
    }

    pub fn with_potential(mut self, sample: &'a PotentialSample<T>) -> Self {
        self.potential = Some(sample);
        self
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn record_every(&self) -> usize {
        self.record_every
    }

    pub fn potential(&self) -> Option<&'a PotentialSample<T>> {
        self.potential
    }
}

/// Number of equal substeps of size at most `dt` covering `span`.
fn substeps<T: Real>(span: T, dt: T) -> usize {
    let ratio = (span.abs() / dt).to_f64().unwrap_or(0.0);
    (ratio - 1e-9).ceil().max(1.0) as usize
}

/// In-place Strang stepper over a fixed grid.
struct SplitStepper<'a, T: Real> {
    grid: Arc<Grid<T>>,
    state: Vec<Complex<T>>,
    kinetic: Vec<Complex<T>>,
    potential: Option<&'a [T]>,
    alpha: T,
    step: T,
}

impl<'a, T: Real> SplitStepper<'a, T> {
    fn new(field: &WaveField<T>, step: T, potential: Option<&'a [T]>, alpha: T) -> Self {
        let grid = Arc::clone(field.grid());
        let inv_n = T::one() / T::from(grid.num_points()).unwrap();
        let kinetic = grid
            .wavenumbers()
            .iter()
            .map(|&k| FLOW.kinetic_factor(k, step).scale(inv_n))
            .collect();
        SplitStepper {
            grid,
            state: field.samples().to_vec(),
            kinetic,
            potential,
            alpha,
            step,
        }
    }

    fn kinetic_step(&mut self) {
        self.grid.fft_forward(&mut self.state);
        for (z, m) in self.state.iter_mut().zip(&self.kinetic) {
            *z = *z * m;
        }
        self.grid.fft_inverse(&mut self.state);
    }

    /// Multiplies by `exp(-i (V + |u|^alpha) fraction * step)`; returns the
    /// sup norm seen. `|u|` is unchanged by the phase, so the substep is exact.
    fn phase_step(&mut self, fraction: T) -> T {
        let tau = fraction * self.step;
        let nonlinear = self.alpha != T::zero();
        let mut sup = T::zero();
        for (j, z) in self.state.iter_mut().enumerate() {
            let modulus = z.norm();
            sup = sup.max(modulus);
            let mut w = self.potential.map_or(T::zero(), |v| v[j]);
            if nonlinear {
                w += pow_abs(modulus, self.alpha);
            }
            if w != T::zero() {
                *z = *z * FLOW.pointwise_factor(w, tau);
            }
        }
        sup
    }

    fn field(&self) -> WaveField<T> {
        WaveField::from_parts_unchecked(Arc::clone(&self.grid), self.state.clone())
    }
}

/// Exact free evolution `exp(-i k^2 t)` with no horizon check.
pub fn free_flow_unchecked<T: Real>(field: &WaveField<T>, t: T) -> WaveField<T> {
    if t == T::zero() {
        return field.clone();
    }
    field.apply_multiplier(|_, k| FLOW.kinetic_factor(k, t))
}

/// Exact free evolution; refuses times beyond the field's wraparound horizon.
pub fn free_flow<T: Real>(field: &WaveField<T>, t: T) -> Result<WaveField<T>> {
    let horizon = field.wrap_horizon();
    if t.abs() > horizon {
        return Err(Error::UntrustedWindow {
            t: to_f64(t),
            horizon: to_f64(horizon),
        });
    }
    Ok(free_flow_unchecked(field, t))
}

/// Free evolution sampled at `times` (exact, no stepping).
pub fn free_flow_trace<T: Real>(field: &WaveField<T>, times: &[T]) -> Result<EvolutionTrace<T>> {
    let snapshots = times.iter().map(|&t| free_flow_unchecked(field, t)).collect();
    Ok(EvolutionTrace::new(times.to_vec(), snapshots)?.with_horizon(field.wrap_horizon()))
}

/// Strang-split linear flow with potential over signed time `t`; returns the
/// final state only. Steps of size at most `dt`.
pub fn propagate_linear<T: Real>(
    field: &WaveField<T>,
    t: T,
    dt: T,
    potential: &PotentialSample<T>,
) -> Result<WaveField<T>> {
    check_same_grid(field.grid(), potential.grid())?;
    if t == T::zero() {
        return Ok(field.clone());
    }
    let n = substeps(t, dt);
    let h = t / T::from(n).unwrap();
    let mut stepper = SplitStepper::new(field, h, Some(potential.values()), T::zero());
    let half_phase: Vec<Complex<T>> = potential
        .values()
        .iter()
        .map(|&v| FLOW.pointwise_factor(v, h * lit(0.5)))
        .collect();
    let full_phase: Vec<Complex<T>> = half_phase.iter().map(|p| p * p).collect();
    apply_pointwise(&mut stepper.state, &half_phase);
    for s in 0..n {
        stepper.kinetic_step();
        let phase = if s + 1 == n { &half_phase } else { &full_phase };
        apply_pointwise(&mut stepper.state, phase);
    }
    Ok(stepper.field())
}

fn apply_pointwise<T: Real>(state: &mut [Complex<T>], phase: &[Complex<T>]) {
    for (z, p) in state.iter_mut().zip(phase) {
        *z = *z * p;
    }
}

/// Linear flow with potential on `[0, t]`, recording every
/// `cfg.record_every` steps. Beyond the wraparound horizon the trace is
/// flagged (see [`EvolutionTrace::trusted`]) rather than rejected.
pub fn linear_flow_v<T: Real>(
    field: &WaveField<T>,
    t: T,
    cfg: &StepperConfig<'_, T>,
) -> Result<EvolutionTrace<T>> {
    let potential = cfg.potential.ok_or_else(|| {
        Error::InvalidInput("linear_flow_v needs a potential sample (use the zero potential for V = 0)".into())
    })?;
    if cfg.alpha != T::zero() {
        return Err(Error::InvalidInput("linear_flow_v requires alpha = 0".into()));
    }
    run_split_step(field, t, cfg, potential.grid().as_ref(), Some(potential))
}

/// Split-step flow for the nonlinear equation on `[0, t_final]`. Records
/// `mass`, `energy`, `energy_literal`, `sup_norm` and `h1` series.
pub fn nls_flow<T: Real>(
    field: &WaveField<T>,
    t_final: T,
    cfg: &StepperConfig<'_, T>,
) -> Result<EvolutionTrace<T>> {
    if !(cfg.alpha > lit(4.0)) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            value: to_f64(cfg.alpha),
            reason: "the nonlinear flow needs alpha > 4",
        });
    }
    run_split_step(field, t_final, cfg, field.grid().as_ref(), cfg.potential)
}

fn run_split_step<T: Real>(
    field: &WaveField<T>,
    t_final: T,
    cfg: &StepperConfig<'_, T>,
    grid: &Grid<T>,
    potential: Option<&PotentialSample<T>>,
) -> Result<EvolutionTrace<T>> {
    check_same_grid(field.grid(), grid)?;
    if !(t_final >= T::zero()) || !t_final.is_finite() {
        return Err(Error::InvalidParameter {
            name: "T",
            value: to_f64(t_final),
            reason: "final time must be finite and nonnegative",
        });
    }
    let alpha = cfg.alpha;
    let mut recorder = Recorder::new(potential, alpha);
    recorder.record(T::zero(), field.clone());
    let initial_horizon = field.wrap_horizon();
    if t_final == T::zero() {
        return recorder.finish(initial_horizon, None);
    }

    let n = substeps(t_final, cfg.dt);
    let h = t_final / T::from(n).unwrap();
    let mut stepper = SplitStepper::new(field, h, potential.map(|p| p.values()), alpha);
    let half: T = lit(0.5);
    let limit: T = lit(BLOW_UP_THRESHOLD);
    let check = |sup: T, s: usize| -> Result<()> {
        if sup > limit || !sup.is_finite() {
            Err(Error::BlowUpSuspected {
                t: to_f64(h * T::from(s).unwrap()),
                sup_norm: to_f64(sup),
            })
        } else {
            Ok(())
        }
    };

    // Consecutive half phases merge into one full phase between records.
    check(stepper.phase_step(half), 0)?;
    for s in 1..=n {
        stepper.kinetic_step();
        let record = s % cfg.record_every == 0 || s == n;
        if record {
            check(stepper.phase_step(half), s)?;
            recorder.record(h * T::from(s).unwrap(), stepper.field());
            if s < n {
                check(stepper.phase_step(half), s)?;
            }
        } else {
            check(stepper.phase_step(T::one()), s)?;
        }
    }
    let final_horizon = recorder.last_horizon();
    recorder.finish(initial_horizon.min(final_horizon), Some(h))
}

struct Recorder<'a, T: Real> {
    potential: Option<&'a PotentialSample<T>>,
    alpha: T,
    times: Vec<T>,
    snapshots: Vec<WaveField<T>>,
    mass: Vec<T>,
    energy: Vec<T>,
    energy_literal: Vec<T>,
    sup: Vec<T>,
    h1: Vec<T>,
}

impl<'a, T: Real> Recorder<'a, T> {
    fn new(potential: Option<&'a PotentialSample<T>>, alpha: T) -> Self {
        Recorder {
            potential,
            alpha,
            times: Vec::new(),
            snapshots: Vec::new(),
            mass: Vec::new(),
            energy: Vec::new(),
            energy_literal: Vec::new(),
            sup: Vec::new(),
            h1: Vec::new(),
        }
    }

    fn record(&mut self, t: T, field: WaveField<T>) {
        self.times.push(t);
        self.mass.push(mass(&field));
        self.energy.push(energy(&field, self.potential, self.alpha));
        self.energy_literal
            .push(energy_literal(&field, self.potential, self.alpha));
        self.sup.push(field.sup_norm());
        self.h1.push(field.h1_norm());
        self.snapshots.push(field);
    }

    fn last_horizon(&self) -> T {
        self.snapshots
            .last()
            .map_or(T::infinity(), |s| s.wrap_horizon())
    }

    fn finish(self, horizon: T, step: Option<T>) -> Result<EvolutionTrace<T>> {
        let mut trace = EvolutionTrace::new(self.times, self.snapshots)?
            .with_series("mass", self.mass)?
            .with_series("energy", self.energy)?
            .with_series("energy_literal", self.energy_literal)?
            .with_series("sup_norm", self.sup)?
            .with_series("h1", self.h1)?
            .with_horizon(horizon);
        if let Some(h) = step {
            trace = trace.with_step(h);
        }
        Ok(trace)
    }
}

/// One value of a translation experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OffsetValue {
    pub offset: f64,
    pub value: f64,
    pub trusted: bool,
}

fn wrapped<T: Real>(trace: &EvolutionTrace<T>) -> bool {
    trace
        .snapshots()
        .iter()
        .any(|s| s.edge_mass_fraction(lit(EDGE_BAND)) > lit(EDGE_MASS_LIMIT))
}

/// For each offset `y`, the space-time `L^p_t L^r_x` norm over `[0, T]` of
/// the difference between the free and the with-potential linear flows of
/// `tau_y psi`.
#[allow(clippy::too_many_arguments)]
pub fn flow_difference_decay<T: Real>(
    psi: &WaveField<T>,
    sample: &PotentialSample<T>,
    offsets: &[T],
    t_final: T,
    p: T,
    r: T,
    dt: T,
    record_every: usize,
) -> Result<Vec<OffsetValue>> {
    check_same_grid(psi.grid(), sample.grid())?;
    let cfg = StepperConfig::new(dt, T::zero(), record_every)?.with_potential(sample);
    offsets
        .iter()
        .map(|&y| {
            let shifted = psi.translate(y)?;
            let with_v = linear_flow_v(&shifted, t_final, &cfg)?;
            let free = free_flow_trace(&shifted, with_v.times())?;
            let diffs = with_v
                .snapshots()
                .iter()
                .zip(free.snapshots())
                .map(|(a, b)| a.difference(b))
                .collect::<Result<Vec<_>>>()?;
            let diff_trace = EvolutionTrace::new(with_v.times().to_vec(), diffs)?;
            let value = spacetime_norm(&diff_trace, p, r)?;
            Ok(OffsetValue {
                offset: to_f64(y),
                value: to_f64(value),
                trusted: !wrapped(&with_v) && !wrapped(&free),
            })
        })
        .collect()
}

/// For each offset `y`, `sup_t int |V(x + y)| |e^{free t} psi(x)| dx` over
/// `records + 1` equally spaced times in `[0, T]`.
pub fn potential_overlap_decay<T: Real>(
    psi: &WaveField<T>,
    sample: &PotentialSample<T>,
    offsets: &[T],
    t_final: T,
    records: usize,
) -> Result<Vec<OffsetValue>> {
    check_same_grid(psi.grid(), sample.grid())?;
    let records = records.max(1);
    let times: Vec<T> = (0..=records)
        .map(|i| t_final * T::from(i).unwrap() / T::from(records).unwrap())
        .collect();
    let flow = if t_final > T::zero() {
        free_flow_trace(psi, &times)?
    } else {
        EvolutionTrace::new(vec![T::zero()], vec![psi.clone()])?
    };
    let spec = sample.spec();
    let grid = psi.grid();
    let dx = grid.dx();
    let untrusted = wrapped(&flow);
    Ok(offsets
        .iter()
        .map(|&y| {
            let shifted_v: Vec<T> = grid.nodes().iter().map(|&x| spec.value(x + y).abs()).collect();
            let sup = flow
                .snapshots()
                .iter()
                .map(|s| {
                    dx * s
                        .samples()
                        .iter()
                        .zip(&shifted_v)
                        .map(|(z, v)| *v * z.norm())
                        .sum::<T>()
                })
                .fold(T::zero(), T::max);
            OffsetValue {
                offset: to_f64(y),
                value: to_f64(sup),
                trusted: !untrusted,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::InitialData;
    use crate::potentials::{builtin_potential, sample_potential, PotentialKind};
    use std::f64::consts::PI;

    fn grid(n: usize, l: f64) -> Arc<Grid<f64>> {
        Grid::new(n, l).unwrap()
    }

    fn sech2(g: &Arc<Grid<f64>>) -> PotentialSample<f64> {
        let spec = builtin_potential(PotentialKind::Sech2, 1.0, 1.0).unwrap();
        sample_potential(&spec, g).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(StepperConfig::<f64>::new(0.0, 6.0, 1).is_err());
        assert!(StepperConfig::<f64>::new(0.2, 6.0, 1).is_err());
        assert!(StepperConfig::<f64>::new(0.01, 3.0, 1).is_err());
        assert!(StepperConfig::<f64>::new(0.01, 4.0, 1).is_err());
        assert!(StepperConfig::<f64>::new(0.01, 6.0, 0).is_err());
        assert!(StepperConfig::<f64>::new(0.01, 0.0, 1).is_ok());
        assert!(StepperConfig::<f64>::new(0.01, 4.5, 1).is_ok());
    }

    #[test]
    fn free_flow_zero_time_is_identity() {
        let g = grid(256, 20.0);
        let u = InitialData::gaussian(1.0, 1.0).sample(&g);
        assert_eq!(free_flow(&u, 0.0).unwrap().samples(), u.samples());
    }

    #[test]
    fn free_gaussian_peak_matches_closed_form() {
        let g = grid(4096, 40.0 * PI);
        let u = InitialData::gaussian(1.0, 1.0).sample(&g);
        let center = g.num_points() / 2;
        assert_eq!(g.nodes()[center], 0.0);
        for &t in &[0.5, 1.0, 3.0, 7.0, 12.0] {
            let v = free_flow(&u, t).unwrap();
            let exact = (1.0 + 4.0 * t * t).powf(-0.25);
            assert!((v.samples()[center].norm() - exact).abs() <= 1e-6);
            let m0 = mass(&u);
            assert!((mass(&v) - m0).abs() <= 1e-12 * m0);
        }
    }

    #[test]
    fn free_flow_refuses_beyond_horizon() {
        let g = grid(1024, 20.0);
        let u = InitialData::gaussian(1.0, 1.0).sample(&g);
        let h = u.wrap_horizon();
        assert!(free_flow(&u, 1.01 * h).is_err());
        assert!(free_flow(&u, 0.99 * h).is_ok());
    }

    #[test]
    fn free_flow_group_law() {
        let g = grid(1024, 60.0);
        let u = InitialData {
            velocity: 1.0,
            ..InitialData::gaussian(1.0, 1.5)
        }
        .sample(&g);
        let a = free_flow(&free_flow(&u, 0.7).unwrap(), 1.3).unwrap();
        let b = free_flow(&u, 2.0).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((x - y).norm() <= 1e-12);
        }
    }

    #[test]
    fn linear_flow_with_zero_potential_is_exact() {
        let g = grid(1024, 40.0);
        let u = InitialData::gaussian(1.0, 1.0).sample(&g);
        let zero = PotentialSample::zero(&g);
        let cfg = StepperConfig::new(0.05, 0.0, 10).unwrap().with_potential(&zero);
        let trace = linear_flow_v(&u, 2.0, &cfg).unwrap();
        let exact = free_flow(&u, 2.0).unwrap();
        let err = trace.last().unwrap().difference(&exact).unwrap().sup_norm();
        assert!(err <= 1e-10, "{err}");
    }

    #[test]
    fn linear_flow_requires_potential_and_linear_alpha() {
        let g = grid(256, 20.0);
        let u = InitialData::gaussian(1.0, 1.0).sample(&g);
        let cfg = StepperConfig::new(0.01, 0.0, 1).unwrap();
        assert!(linear_flow_v(&u, 1.0, &cfg).is_err());
        let zero = PotentialSample::zero(&g);
        let cfg = StepperConfig::new(0.01, 6.0, 1).unwrap().with_potential(&zero);
        assert!(linear_flow_v(&u, 1.0, &cfg).is_err());
    }

    #[test]
    fn linear_flow_second_order_and_unitary() {
        let g = grid(2048, 40.0 * PI);
        let v = sech2(&g);
        let u = InitialData::gaussian(1.0, 1.0).sample(&g);
        let run = |dt: f64| {
            let cfg = StepperConfig::new(dt, 0.0, 1_000_000).unwrap().with_potential(&v);
            linear_flow_v(&u, 2.0, &cfg).unwrap()
        };
        let (a, b, c) = (run(0.04), run(0.02), run(0.01));
        let e1 = a.last().unwrap().difference(b.last().unwrap()).unwrap().lp_norm(2.0).unwrap();
        let e2 = b.last().unwrap().difference(c.last().unwrap()).unwrap().lp_norm(2.0).unwrap();
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "self-convergence ratio {ratio}");
        let m = c.series("mass").unwrap();
        assert!((m[m.len() - 1] - m[0]).abs() <= 1e-12 * m[0]);
    }

    #[test]
    fn propagate_linear_backward_inverts_forward() {
        let g = grid(1024, 40.0);
        let v = sech2(&g);
        let u = InitialData::gaussian(1.0, 1.0).sample(&g);
        let fwd = propagate_linear(&u, 1.5, 0.01, &v).unwrap();
        let back = propagate_linear(&fwd, -1.5, 0.01, &v).unwrap();
        assert!(back.difference(&u).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn nls_zero_time_returns_initial_data() {
        let g = grid(256, 20.0);
        let u = InitialData::gaussian(1.0, 1.0).sample(&g);
        let cfg = StepperConfig::new(0.01, 6.0, 1).unwrap();
        let trace = nls_flow(&u, 0.0, &cfg).unwrap();
        assert_eq!(trace.len(), 1);
        assert_eq!(trace.snapshots()[0].samples(), u.samples());
    }

    #[test]
    fn nls_rejects_linear_alpha() {
        let g = grid(256, 20.0);
        let u = InitialData::gaussian(1.0, 1.0).sample(&g);
        let cfg = StepperConfig::new(0.01, 0.0, 1).unwrap();
        assert!(nls_flow(&u, 1.0, &cfg).is_err());
    }

    #[test]
    fn nls_self_convergence_with_potential() {
        let g = grid(2048, 40.0 * PI);
        let v = sech2(&g);
        let u = InitialData::gaussian(1.0, 1.0).sample(&g);
        let run = |dt: f64| {
            let cfg = StepperConfig::new(dt, 6.0, 1_000_000).unwrap().with_potential(&v);
            nls_flow(&u, 1.0, &cfg).unwrap()
        };
        let (a, b, c) = (run(0.01), run(0.005), run(0.0025));
        let e1 = a.last().unwrap().difference(b.last().unwrap()).unwrap().lp_norm(2.0).unwrap();
        let e2 = b.last().unwrap().difference(c.last().unwrap()).unwrap().lp_norm(2.0).unwrap();
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "self-convergence ratio {ratio}");
    }

    #[test]
    fn nls_records_every_n_steps() {
        let g = grid(256, 20.0);
        let u = InitialData::gaussian(0.5, 1.0).sample(&g);
        let cfg = StepperConfig::new(0.01, 6.0, 10).unwrap();
        let trace = nls_flow(&u, 0.95, &cfg).unwrap();
        // 95 steps: records at 0, 10, ..., 90 and the final step.
        assert_eq!(trace.len(), 11);
        assert!((trace.times()[10] - 0.95).abs() < 1e-12);
        for name in ["mass", "energy", "energy_literal", "sup_norm", "h1"] {
            assert_eq!(trace.series(name).unwrap().len(), 11);
        }
    }

    #[test]
    fn flow_difference_vanishes_without_potential() {
        let g = grid(1024, 60.0);
        let zero = PotentialSample::zero(&g);
        let psi = InitialData::gaussian(1.0, 1.0).sample(&g);
        let d = flow_difference_decay(&psi, &zero, &[0.0, 10.0], 2.0, 4.0, 4.0, 0.05, 4).unwrap();
        for v in d {
            assert!(v.value < 1e-10, "{v:?}");
        }
    }

    #[test]
    fn overlap_of_zero_field_vanishes() {
        let g = grid(1024, 60.0);
        let v = sech2(&g);
        let psi = WaveField::zeros(Arc::clone(&g));
        let d = potential_overlap_decay(&psi, &v, &[0.0, 10.0], 2.0, 10).unwrap();
        assert!(d.iter().all(|o| o.value == 0.0));
        let psi = InitialData::gaussian(1.0, 1.0).sample(&g);
        let d = potential_overlap_decay(&psi, &v, &[0.0], 2.0, 10).unwrap();
        assert!(d[0].value > 0.0);
    }
}

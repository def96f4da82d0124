use std::path::{Path, PathBuf};

use disperse_core::diagnostics::{
    decay_fit, energy, mass, scattering_detector, strichartz_exponents, DecayFit,
    ScatterReport, ScatterSettings,
};
use disperse_core::fields::random_band_limited;
use disperse_core::potentials::{hypothesis_report, HypothesisReport};
use disperse_core::propagators::{
    flow_difference_decay, linear_flow_v, nls_flow, potential_overlap_decay, OffsetValue, StepperConfig,
};
use disperse_core::spectral_theory::{bound_state_count, jost_wronskian, quadratic_form_bounds, BoundStates, JostSummary, QuadraticFormReport};
use disperse_core::virial::{build_cutoff, rigidity_report, z_doubleprime, z_prime, z_series, RigidityReport, CUTOFF_RECIPE};
use disperse_core::{Error as CoreError, EvolutionTrace64, PotentialSample64, WaveField64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use crate::config::{LoadedConfig, Prepared};
use crate::output::{exponent_label, num, summary, Table};
use crate::CliError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_RESONANT: i32 = 3;

pub struct Context<'a> {
    pub loaded: &'a LoadedConfig,
    pub output_dir: PathBuf,
    pub allow_untrusted: bool,
}

/// Result of one command: exit code, JSON summary, CSV files written.
pub struct Outcome {
    pub code: i32,
    pub summary: Value,
    pub csv: Vec<PathBuf>,
}

impl Context<'_> {
    fn prepared(&self) -> Result<Prepared, CliError> {
        Ok(self.loaded.prepare()?)
    }

    fn hash(&self) -> String {
        self.loaded.hash()
    }

    fn write_table(&self, name: &str, table: &Table, csv: &mut Vec<PathBuf>) -> Result<(), CliError> {
        let path = self.output_dir.join(name);
        table.write(&path).map_err(|e| CliError::Io(path.clone(), e))?;
        csv.push(path);
        Ok(())
    }

    fn outcome<T: Serialize>(&self, code: i32, report: &T, csv: Vec<PathBuf>) -> Outcome {
        Outcome {
            code,
            summary: summary(report, &self.hash()),
            csv,
        }
    }

    /// Refuses `t` beyond the wraparound horizon of `u0` unless allowed.
    fn check_horizon(&self, u0: &WaveField64, t: f64) -> Result<f64, CliError> {
        let horizon = u0.wrap_horizon();
        if t > horizon && !self.allow_untrusted {
            return Err(CliError::Untrusted { t, horizon });
        }
        Ok(horizon)
    }
}

fn require_potential(p: &Prepared) -> Result<&PotentialSample64, CliError> {
    p.sample
        .as_ref()
        .ok_or_else(|| CliError::Usage("this command needs a [potential] block".into()))
}

fn sample_or_zero(p: &Prepared) -> PotentialSample64 {
    p.sample
        .clone()
        .unwrap_or_else(|| PotentialSample64::zero(&p.grid))
}

#[derive(Serialize)]
struct CheckPotential {
    potential: String,
    #[serde(flatten)]
    report: HypothesisReport,
}

pub fn check_potential(ctx: &Context) -> Result<Outcome, CliError> {
    let p = ctx.prepared()?;
    let sample = require_potential(&p)?;
    let report = hypothesis_report(sample);
    let mut table = Table::new(["x", "V", "dV"]);
    for ((x, v), d) in p.grid.nodes().iter().zip(sample.values()).zip(sample.derivatives()) {
        table.push(vec![num(*x), num(*v), num(*d)]);
    }
    let mut csv = Vec::new();
    ctx.write_table("potential.csv", &table, &mut csv)?;
    let code = if report.admissible { EXIT_OK } else { EXIT_HYPOTHESIS };
    Ok(ctx.outcome(
        code,
        &CheckPotential {
            potential: sample.spec().name(),
            report,
        },
        csv,
    ))
}

#[derive(Serialize)]
struct Resonance {
    potential: String,
    #[serde(flatten)]
    jost: JostSummary,
}

pub fn resonance(ctx: &Context) -> Result<Outcome, CliError> {
    let p = ctx.prepared()?;
    let sample = sample_or_zero(&p);
    let jost = jost_wronskian(&sample)?;
    let mut table = Table::new(["x", "u_minus", "u_plus", "wronskian"]);
    for (j, x) in p.grid.nodes().iter().enumerate() {
        table.push(vec![
            num(*x),
            num(jost.u_minus[j]),
            num(jost.u_plus[j]),
            num(jost.wronskian_profile[j]),
        ]);
    }
    let mut csv = Vec::new();
    ctx.write_table("jost.csv", &table, &mut csv)?;
    let summary = jost.summary();
    let code = if summary.resonant { EXIT_RESONANT } else { EXIT_OK };
    Ok(ctx.outcome(
        code,
        &Resonance {
            potential: sample.spec().name(),
            jost: summary,
        },
        csv,
    ))
}

#[derive(Serialize)]
struct Spectrum {
    potential: String,
    #[serde(flatten)]
    bound_states: BoundStates,
    /// Present only for nonnegative potentials.
    quadratic_form: Option<QuadraticFormReport>,
}

pub fn spectrum(ctx: &Context) -> Result<Outcome, CliError> {
    let p = ctx.prepared()?;
    let sample = sample_or_zero(&p);
    let bound_states = bound_state_count(&sample);
    let settings = &ctx.loaded.config.spectrum;
    let quadratic_form = if sample.min_value() >= 0.0 && settings.random_fields > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.loaded.config.seed);
        let fields: Vec<WaveField64> = (0..settings.random_fields)
            .map(|_| random_band_limited(&p.grid, &mut rng, settings.k_cut, settings.envelope))
            .collect();
        Some(quadratic_form_bounds(&sample, &fields)?)
    } else {
        None
    };
    let mut csv = Vec::new();
    if let Some(q) = &quadratic_form {
        let mut table = Table::new(["field", "ratio"]);
        for (i, r) in q.ratios.iter().enumerate() {
            table.push(vec![i.to_string(), num(*r)]);
        }
        ctx.write_table("quadratic_form.csv", &table, &mut csv)?;
    }
    Ok(ctx.outcome(
        EXIT_OK,
        &Spectrum {
            potential: sample.spec().name(),
            bound_states,
            quadratic_form,
        },
        csv,
    ))
}

/// Runs the configured flow: linear with potential when `alpha = 0`,
/// nonlinear otherwise.
fn run_flow(p: &Prepared, ctx: &Context, u0: &WaveField64, t_final: f64) -> Result<EvolutionTrace64, CliError> {
    let c = &ctx.loaded.config;
    let zero;
    let sample = match &p.sample {
        Some(s) => s,
        None => {
            zero = PotentialSample64::zero(&p.grid);
            &zero
        }
    };
    let cfg = StepperConfig::new(c.stepper.dt, c.alpha, c.stepper.record_every)?.with_potential(sample);
    let trace = if c.alpha == 0.0 {
        linear_flow_v(u0, t_final, &cfg)?
    } else {
        nls_flow(u0, t_final, &cfg)?
    };
    Ok(trace)
}

fn relative_drift(series: &[f64]) -> f64 {
    let first = series[0];
    let scale = first.abs().max(f64::MIN_POSITIVE);
    series.iter().map(|v| (v - first).abs() / scale).fold(0.0, f64::max)
}

#[derive(Serialize)]
struct Evolve {
    alpha: f64,
    t_final: f64,
    step: Option<f64>,
    records: usize,
    horizon: f64,
    trusted: bool,
    mass_drift: f64,
    energy_drift: f64,
    energy_literal_drift: f64,
}

pub fn evolve(ctx: &Context) -> Result<Outcome, CliError> {
    let p = ctx.prepared()?;
    let c = &ctx.loaded.config;
    let u0 = p.initial.sample(&p.grid);
    ctx.check_horizon(&u0, c.stepper.t_final)?;
    let trace = run_flow(&p, ctx, &u0, c.stepper.t_final)?;

    let names = ["mass", "energy", "energy_literal", "sup_norm", "h1"];
    let series: Vec<&[f64]> = names.iter().map(|n| trace.series(n).expect("recorded series")).collect();
    let mut table = Table::new(std::iter::once("t").chain(names));
    for (i, t) in trace.times().iter().enumerate() {
        let mut row = vec![num(*t)];
        row.extend(series.iter().map(|s| num(s[i])));
        table.push(row);
    }
    let mut csv = Vec::new();
    ctx.write_table("trace.csv", &table, &mut csv)?;

    let last = trace.last().expect("nonempty trace");
    let mut state = Table::new(["x", "re", "im"]);
    for (x, z) in p.grid.nodes().iter().zip(last.samples()) {
        state.push(vec![num(*x), num(z.re), num(z.im)]);
    }
    ctx.write_table("final_state.csv", &state, &mut csv)?;

    let report = Evolve {
        alpha: c.alpha,
        t_final: c.stepper.t_final,
        step: trace.step(),
        records: trace.len(),
        horizon: trace.horizon(),
        trusted: trace.trusted(),
        mass_drift: relative_drift(series[0]),
        energy_drift: relative_drift(series[1]),
        energy_literal_drift: relative_drift(series[2]),
    };
    Ok(ctx.outcome(EXIT_OK, &report, csv))
}

#[derive(Serialize)]
struct NormFit {
    norm: String,
    #[serde(flatten)]
    fit: DecayFit,
}

#[derive(Serialize)]
struct Decay {
    window: [f64; 2],
    horizon: f64,
    trusted: bool,
    fits: Vec<NormFit>,
    /// Slope of the first requested norm, for quick inspection.
    slope: f64,
}

pub fn decay(ctx: &Context) -> Result<Outcome, CliError> {
    let p = ctx.prepared()?;
    let c = &ctx.loaded.config;
    let u0 = p.initial.sample(&p.grid);
    let [t0, t1] = c.decay.window;
    let t_final = c.stepper.t_final.max(t1);
    ctx.check_horizon(&u0, t_final)?;
    let mut trace = run_flow(&p, ctx, &u0, t_final)?;
    let horizon = trace.horizon();
    let trusted = t1 <= horizon;
    if !trusted {
        if !ctx.allow_untrusted {
            return Err(CliError::Untrusted { t: t1, horizon });
        }
        trace = trace.with_horizon(f64::INFINITY);
    }
    let fits = c
        .decay
        .norms
        .iter()
        .map(|&a| {
            Ok(NormFit {
                norm: exponent_label(a),
                fit: decay_fit(&trace, a, (t0, t1))?,
            })
        })
        .collect::<Result<Vec<_>, CoreError>>()?;

    let mut table = Table::new(std::iter::once("t".to_string()).chain(c.decay.norms.iter().map(|a| format!("norm_{}", exponent_label(*a)))));
    for (t, u) in trace.times().iter().zip(trace.snapshots()) {
        let mut row = vec![num(*t)];
        for &a in &c.decay.norms {
            row.push(num(u.lp_norm(a)?));
        }
        table.push(row);
    }
    let mut csv = Vec::new();
    ctx.write_table("decay.csv", &table, &mut csv)?;
    let report = Decay {
        window: c.decay.window,
        horizon,
        trusted,
        slope: fits[0].fit.slope,
        fits,
    };
    Ok(ctx.outcome(EXIT_OK, &report, csv))
}

#[derive(Serialize)]
struct Scatter {
    alpha: f64,
    t_final: f64,
    horizon: f64,
    initial_h1: f64,
    final_residual: Option<f64>,
    tails_decreasing: bool,
    #[serde(flatten)]
    report: ScatterReport,
}

/// Flow plus detector; shared with the sweep.
fn scatter_run(p: &Prepared, ctx: &Context) -> Result<(EvolutionTrace64, Scatter), CliError> {
    let c = &ctx.loaded.config;
    if !(c.alpha > 4.0) {
        return Err(CliError::Usage("scatter needs a nonlinear flow (alpha > 4)".into()));
    }
    let u0 = p.initial.sample(&p.grid);
    ctx.check_horizon(&u0, c.stepper.t_final)?;
    let trace = run_flow(p, ctx, &u0, c.stepper.t_final)?;
    let exponents = strichartz_exponents(c.alpha)?;
    let settings = ScatterSettings {
        threshold: c.scatter.threshold,
        windows: c.scatter.windows,
        ..ScatterSettings::default()
    };
    let report = scattering_detector(&trace, p.sample.as_ref(), &exponents, &settings)?;
    let scatter = Scatter {
        alpha: c.alpha,
        t_final: c.stepper.t_final,
        horizon: trace.horizon(),
        initial_h1: u0.h1_norm(),
        final_residual: report.final_residual(),
        tails_decreasing: report.tails_decreasing(),
        report,
    };
    Ok((trace, scatter))
}

fn scatter_table(s: &Scatter) -> Table {
    let mut table = Table::new(["t_start", "t_end", "cauchy_residual", "free_cauchy_residual"]);
    let times = &s.report.pullback_times;
    for (i, (r, f)) in s
        .report
        .cauchy_residuals
        .iter()
        .zip(&s.report.free_cauchy_residuals)
        .enumerate()
    {
        table.push(vec![num(times[i]), num(times[i + 1]), num(*r), num(*f)]);
    }
    table
}

pub fn scatter(ctx: &Context) -> Result<Outcome, CliError> {
    let p = ctx.prepared()?;
    let (_, report) = scatter_run(&p, ctx)?;
    let mut csv = Vec::new();
    ctx.write_table("scatter.csv", &scatter_table(&report), &mut csv)?;
    Ok(ctx.outcome(EXIT_OK, &report, csv))
}

#[derive(Serialize)]
struct CeilingCheck {
    fields: usize,
    /// `max |z'| / (2 slack E^{1/2} M^{1/2} R)`
    max_ratio: f64,
    /// `max |z'| / (2 E^{1/2} M^{1/2} R)`
    max_ratio_unit_constant: f64,
    holds: bool,
}

#[derive(Serialize)]
struct RadiusSummary {
    radius: f64,
    max_residual_z_prime: f64,
    max_residual_z_doubleprime: f64,
    rigidity: Option<RigidityReport>,
    ceiling_check: Option<CeilingCheck>,
}

#[derive(Serialize)]
struct Virial {
    cutoff: &'static str,
    alpha: f64,
    radii: Vec<RadiusSummary>,
}

pub fn virial(ctx: &Context) -> Result<Outcome, CliError> {
    let p = ctx.prepared()?;
    let c = &ctx.loaded.config;
    let u0 = p.initial.sample(&p.grid);
    ctx.check_horizon(&u0, c.stepper.t_final)?;
    let trace = run_flow(&p, ctx, &u0, c.stepper.t_final)?;
    let admissible = p.sample.as_ref().map(|s| hypothesis_report(s).admissible);
    let mut csv = Vec::new();
    let mut radii = Vec::new();
    for (index, &radius) in c.virial.radii.iter().enumerate() {
        let cutoff = build_cutoff(radius, &p.grid)?;
        let z = z_series(&trace, &cutoff)?;
        let times = trace.times();
        let mut table = Table::new([
            "t", "z", "z_prime", "fd_z_prime", "kinetic", "nonlinear", "potential", "bilaplacian", "z_doubleprime",
            "fd_z_doubleprime",
        ]);
        let (mut worst1, mut worst2) = (0.0_f64, 0.0_f64);
        for (i, u) in trace.snapshots().iter().enumerate() {
            let zp = z_prime(u, &cutoff)?;
            let terms = z_doubleprime(u, &cutoff, p.sample.as_ref(), c.alpha)?;
            let (fd1, fd2) = if i > 0 && i + 1 < z.len() {
                let (hl, hr) = (times[i] - times[i - 1], times[i + 1] - times[i]);
                let d1 = (z[i + 1] - z[i - 1]) / (hl + hr);
                let d2 = 2.0 * (hl * z[i + 1] - (hl + hr) * z[i] + hr * z[i - 1]) / (hl * hr * (hl + hr));
                worst1 = worst1.max((d1 - zp).abs());
                worst2 = worst2.max((d2 - terms.total).abs());
                (d1, d2)
            } else {
                (f64::NAN, f64::NAN)
            };
            table.push(vec![
                num(times[i]),
                num(z[i]),
                num(zp),
                num(fd1),
                num(terms.kinetic),
                num(terms.nonlinear),
                num(terms.potential),
                num(terms.bilaplacian),
                num(terms.total),
                num(fd2),
            ]);
        }
        ctx.write_table(&format!("virial_r{index}.csv"), &table, &mut csv)?;

        let (rigidity, ceiling_check) = match (&p.sample, admissible) {
            (Some(sample), Some(true)) => {
                let rigidity = rigidity_report(&u0, &cutoff, sample, c.alpha)?;
                let mut rng = ChaCha8Rng::seed_from_u64(c.seed.wrapping_add(index as u64));
                let mut max_ratio: f64 = 0.0;
                let mut max_unit: f64 = 0.0;
                for _ in 0..c.virial.random_fields {
                    let u = random_band_limited(&p.grid, &mut rng, c.virial.k_cut, c.virial.envelope);
                    let r = rigidity_report(&u, &cutoff, sample, c.alpha)?;
                    max_ratio = max_ratio.max(r.z_prime.abs() / r.ceiling);
                    let unit = 2.0 * energy(&u, Some(sample), c.alpha).sqrt() * mass(&u).sqrt() * radius;
                    max_unit = max_unit.max(r.z_prime.abs() / unit);
                }
                let check = (c.virial.random_fields > 0).then_some(CeilingCheck {
                    fields: c.virial.random_fields,
                    max_ratio,
                    max_ratio_unit_constant: max_unit,
                    holds: max_ratio <= 1.0,
                });
                (Some(rigidity), check)
            }
            _ => (None, None),
        };
        radii.push(RadiusSummary {
            radius,
            max_residual_z_prime: worst1,
            max_residual_z_doubleprime: worst2,
            rigidity,
            ceiling_check,
        });
    }
    Ok(ctx.outcome(
        EXIT_OK,
        &Virial {
            cutoff: CUTOFF_RECIPE,
            alpha: c.alpha,
            radii,
        },
        csv,
    ))
}

#[derive(Serialize)]
struct Profiles {
    offsets: Vec<f64>,
    flow_difference: Vec<OffsetValue>,
    potential_overlap: Vec<OffsetValue>,
    flow_difference_non_increasing: bool,
    potential_overlap_non_increasing: bool,
}

fn non_increasing(values: &[OffsetValue]) -> bool {
    values.windows(2).all(|w| w[1].value <= w[0].value)
}

pub fn profiles(ctx: &Context) -> Result<Outcome, CliError> {
    let p = ctx.prepared()?;
    let sample = require_potential(&p)?;
    let cfg = &ctx.loaded.config.profiles;
    let psi = p.initial.sample(&p.grid);
    let flows = flow_difference_decay(&psi, sample, &cfg.offsets, cfg.t_final, cfg.p, cfg.r, cfg.dt, cfg.record_every)?;
    let overlaps = potential_overlap_decay(&psi, sample, &cfg.offsets, cfg.t_final, cfg.records)?;
    if !ctx.allow_untrusted {
        if let Some(bad) = flows.iter().chain(&overlaps).find(|o| !o.trusted) {
            return Err(CliError::Usage(format!(
                "offset {} reaches the box edge within T = {}; widen the grid or pass --allow-untrusted",
                bad.offset, cfg.t_final
            )));
        }
    }
    let mut table = Table::new(["offset", "flow_difference", "potential_overlap", "trusted"]);
    for (f, o) in flows.iter().zip(&overlaps) {
        table.push(vec![
            num(f.offset),
            num(f.value),
            num(o.value),
            (f.trusted && o.trusted).to_string(),
        ]);
    }
    let mut csv = Vec::new();
    ctx.write_table("profiles.csv", &table, &mut csv)?;
    let report = Profiles {
        offsets: cfg.offsets.clone(),
        flow_difference_non_increasing: non_increasing(&flows),
        potential_overlap_non_increasing: non_increasing(&overlaps),
        flow_difference: flows,
        potential_overlap: overlaps,
    };
    Ok(ctx.outcome(EXIT_OK, &report, csv))
}

pub(crate) fn write_scatter_artifacts(dir: &Path, s: &ScatterArtifacts) -> Result<Vec<PathBuf>, CliError> {
    let path = dir.join("scatter.csv");
    scatter_table(&s.0).write(&path).map_err(|e| CliError::Io(path.clone(), e))?;
    Ok(vec![path])
}

/// Opaque handle so the sweep can reuse the scatter CSV layout.
pub(crate) struct ScatterArtifacts(Scatter);

impl ScatterArtifacts {
    pub(crate) fn run(p: &Prepared, ctx: &Context) -> Result<Self, CliError> {
        scatter_run(p, ctx).map(|(_, s)| ScatterArtifacts(s))
    }

    pub(crate) fn verdict(&self) -> String {
        serde_json::to_value(self.0.report.verdict)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    }

    pub(crate) fn final_residual(&self) -> Option<f64> {
        self.0.final_residual
    }

    pub(crate) fn tails_decreasing(&self) -> bool {
        self.0.tails_decreasing
    }

    pub(crate) fn summary(&self, hash: &str) -> Value {
        summary(&self.0, hash)
    }
}

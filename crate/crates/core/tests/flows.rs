use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use disperse_core::diagnostics::{decay_fit, scattering_detector, strichartz_exponents, ScatterSettings, Verdict};
use disperse_core::fields::InitialData;
use disperse_core::grid::{spacetime_norm, EvolutionTrace, Grid};
use disperse_core::potentials::{builtin_potential, sample_potential, PotentialKind, PotentialSample};
use disperse_core::propagators::{
    flow_difference_decay, free_flow, free_flow_trace, linear_flow_v, nls_flow, potential_overlap_decay,
    StepperConfig,
};
use disperse_core::{Grid64, WaveField64};

fn barrier(grid: &Arc<Grid64>) -> PotentialSample<f64> {
    let spec = builtin_potential(PotentialKind::Sech2, 1.0, 1.0).unwrap();
    sample_potential(&spec, grid).unwrap()
}

fn max_relative_drift(series: &[f64]) -> f64 {
    let e0 = series[0];
    series
        .iter()
        .map(|e| ((e - e0) / e0).abs())
        .fold(0.0, f64::max)
}

#[test]
fn nls_mass_and_energy_on_barrier() {
    let grid = Grid::new(4096, 40.0 * PI).unwrap();
    let v = barrier(&grid);
    let u0 = InitialData::gaussian(1.0, 1.0).sample(&grid);
    let started = Instant::now();
    let coarse = nls_flow(&u0, 10.0, &StepperConfig::new(1e-3, 6.0, 100).unwrap().with_potential(&v)).unwrap();
    let elapsed = started.elapsed();
    let fine = nls_flow(&u0, 10.0, &StepperConfig::new(5e-4, 6.0, 200).unwrap().with_potential(&v)).unwrap();

    let mass_drift = max_relative_drift(coarse.series("mass").unwrap());
    let drift = max_relative_drift(coarse.series("energy").unwrap());
    let drift_half = max_relative_drift(fine.series("energy").unwrap());
    let literal = max_relative_drift(coarse.series("energy_literal").unwrap());
    println!(
        "mass drift {mass_drift:.3e}, energy drift {drift:.3e} / {drift_half:.3e} = {:.3}, literal {literal:.3e}, {elapsed:?}",
        drift / drift_half
    );
    assert!(mass_drift <= 1e-10);
    let ratio = drift / drift_half;
    assert!((3.5..=4.5).contains(&ratio), "{ratio}");
    assert!(literal > 100.0 * drift);
}

#[test]
fn free_gaussian_center_amplitude() {
    let grid = Grid::new(4096, 40.0 * PI).unwrap();
    let u0 = WaveField64::from_real_fn(Arc::clone(&grid), |x| (-0.5 * x * x).exp());
    let horizon = u0.wrap_horizon();
    let centre = grid.num_points() / 2;
    assert_eq!(grid.nodes()[centre], 0.0);
    let mut worst: f64 = 0.0;
    for i in 0..=200 {
        let t = (horizon * i as f64 / 200.0).min(horizon);
        let u = free_flow(&u0, t).unwrap();
        let exact = (1.0 + 4.0 * t * t).powf(-0.25);
        worst = worst.max((u.samples()[centre].norm() - exact).abs());
    }
    println!("horizon {horizon:.3}, worst {worst:.3e}");
    assert!(horizon > 10.0);
    assert!(worst <= 1e-6);
}

#[test]
fn linear_barrier_dispersive_decay() {
    // The barrier scatters into wavenumbers near 8.5, so the box must be
    // wide enough that those reach the edge only after t = 40.
    let grid = Grid::new(32768, 256.0 * PI).unwrap();
    let v = barrier(&grid);
    let u0 = InitialData::gaussian(1.0, 1.0).sample(&grid);
    let started = Instant::now();
    let cfg = StepperConfig::new(1e-2, 0.0, 50).unwrap().with_potential(&v);
    let trace = linear_flow_v(&u0, 40.0, &cfg).unwrap();
    let sup = decay_fit(&trace, f64::INFINITY, (5.0, 40.0)).unwrap();
    let l4 = decay_fit(&trace, 4.0, (5.0, 40.0)).unwrap();
    println!("sup slope {:.4}, L4 slope {:.4}, {:?}", sup.slope, l4.slope, started.elapsed());
    assert!((sup.slope + 0.5).abs() <= 0.05);
    assert!((l4.slope + 0.25).abs() <= 0.05);
}

#[test]
fn small_data_scatters() {
    let grid = Grid::new(16384, 160.0 * PI).unwrap();
    let v = barrier(&grid);
    let amp = InitialData::gaussian_amplitude_for_h1(0.1, 2.0);
    let u0 = InitialData::gaussian(amp, 2.0).sample(&grid);
    let started = Instant::now();
    let cfg = StepperConfig::new(1e-2, 6.0, 100).unwrap().with_potential(&v);
    let t_final = 20.0;
    let trace = nls_flow(&u0, t_final, &cfg).unwrap();
    let ex = strichartz_exponents(6.0).unwrap();
    let report = scattering_detector(&trace, Some(&v), &ex, &ScatterSettings::default()).unwrap();
    println!(
        "T {t_final:.2}, residuals {:?}, tails {:?}, {:?}",
        report.cauchy_residuals,
        report.strichartz_tail,
        started.elapsed()
    );
    assert_eq!(report.verdict, Verdict::ScatteringConsistent, "{}", report.reason);
    assert!(report.final_residual().unwrap() <= 1e-3);
    assert!(report.tails_decreasing());
}

#[test]
fn translated_packets_decouple_from_the_barrier() {
    let grid = Grid::new(4096, 40.0 * PI).unwrap();
    let v = barrier(&grid);
    let psi = InitialData::gaussian(1.0, 1.0).sample(&grid);
    let offsets = [0.0, 10.0, 20.0, 30.0];
    let flows = flow_difference_decay(&psi, &v, &offsets, 2.0, 6.0, 6.0, 1e-2, 10).unwrap();
    let overlaps = potential_overlap_decay(&psi, &v, &offsets, 2.0, 40).unwrap();
    for series in [&flows, &overlaps] {
        let values: Vec<f64> = series.iter().map(|o| o.value).collect();
        println!("{values:?}");
        assert!(values.windows(2).all(|w| w[1] <= w[0]));
        assert!(values[3] <= 0.2 * values[0]);
        assert!(series.iter().all(|o| o.trusted));
    }
}

#[test]
fn spacetime_norm_converges_under_refinement() {
    let grid = Grid::new(4096, 40.0 * PI).unwrap();
    let u0 = WaveField64::from_real_fn(Arc::clone(&grid), |x| (-0.5 * x * x).exp());
    let horizon = u0.wrap_horizon();
    let times = |n: usize| (0..=n).map(|i| horizon * i as f64 / n as f64).collect::<Vec<_>>();
    let coarse: EvolutionTrace<f64> = free_flow_trace(&u0, &times(50)).unwrap();
    let fine = free_flow_trace(&u0, &times(200)).unwrap();
    let a = spacetime_norm(&coarse, 4.0, 4.0).unwrap();
    let b = spacetime_norm(&fine, 4.0, 4.0).unwrap();
    assert!(((a - b) / b).abs() <= 0.01, "{a} {b}");
}

#[test]
fn single_precision_flow_runs() {
    use disperse_core::{Grid32, WaveField32};
    let grid: Arc<Grid32> = Grid::new(1024, 40.0_f32 * std::f32::consts::PI).unwrap();
    let spec = builtin_potential(PotentialKind::Sech2, 1.0, 1.0).unwrap();
    let v = sample_potential(&spec, &grid).unwrap();
    let u0: WaveField32 = InitialData::gaussian(1.0, 1.0).sample(&grid);
    let trace = nls_flow(&u0, 2.0_f32, &StepperConfig::new(1e-2_f32, 6.0, 20).unwrap().with_potential(&v)).unwrap();
    let mass = trace.series("mass").unwrap();
    let drift = mass.iter().map(|m| ((m - mass[0]) / mass[0]).abs()).fold(0.0_f32, f32::max);
    assert!(drift <= 1e-4, "{drift}");
}

use std::f64::consts::PI;
use std::sync::Arc;

use disperse_core::fields::random_band_limited;
use disperse_core::grid::Grid;
use disperse_core::potentials::{builtin_potential, sample_potential, PotentialKind, PotentialSample};
use disperse_core::spectral_theory::{
    bound_state_count, h1_flow_bound, jost_wronskian, quadratic_form_bounds, schrodinger_tridiagonal,
    sobolev_constant, sturm_count,
};
use disperse_core::{Grid64, WaveField64};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid(n: usize, l: f64) -> Arc<Grid64> {
    Grid::new(n, l).unwrap()
}

fn sample(kind: PotentialKind, v0: f64, g: &Arc<Grid64>) -> PotentialSample<f64> {
    sample_potential(&builtin_potential(kind, v0, 1.0).unwrap(), g).unwrap()
}

#[test]
fn wronskian_dichotomy() {
    let g = grid(4096, 40.0 * PI);
    let free = jost_wronskian(&PotentialSample::zero(&g)).unwrap();
    assert!(free.wronskian.abs() <= 1e-8);
    assert!(free.resonant());

    let barrier = jost_wronskian(&sample(PotentialKind::Sech2, 1.0, &g)).unwrap();
    assert!(barrier.wronskian.abs() >= 0.1);
    assert!(barrier.relative_drift <= 0.01);
    assert!(!barrier.resonant());
}

#[test]
fn poschl_teller_levels() {
    let g = grid(8192, 40.0 * PI);
    // -l(l+1) sech^2 has bound states at -(l-n)^2, n < l.
    let one = bound_state_count(&sample(PotentialKind::Well, 2.0, &g));
    assert_eq!(one.count, 1);
    assert!((one.lowest.unwrap() + 1.0).abs() <= 1e-3, "{:?}", one.lowest);

    let two = bound_state_count(&sample(PotentialKind::Well, 6.0, &g));
    assert_eq!(two.count, 2);
    assert!((two.lowest.unwrap() + 4.0).abs() <= 1e-2, "{:?}", two.lowest);

    let none = bound_state_count(&sample(PotentialKind::Sech2, 1.0, &g));
    assert_eq!(none.count, 0);
    assert_eq!(none.lowest, None);
}

#[test]
fn sturm_agrees_with_dense_eigenvalues() {
    let g = grid(512, 20.0);
    let s = sample(PotentialKind::Well, 2.0, &g);
    let (diag, off) = schrodinger_tridiagonal(&s);
    let n = diag.len();
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            0.0
        }
    });
    let eig = m.symmetric_eigenvalues();
    for shift in [-2.0, -1.5, -1.0, -0.5, -0.1, 0.0, 0.5, 3.0] {
        let dense = eig.iter().filter(|&&e| e < shift).count();
        assert_eq!(sturm_count(&diag, &off, shift), dense, "shift {shift}");
    }
}

fn random_fields(g: &Arc<Grid64>, count: usize, seed: u64) -> Vec<WaveField64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_band_limited(g, &mut rng, 3.0, 8.0))
        .collect()
}

#[test]
fn quadratic_form_between_bounds() {
    let g = grid(4096, 40.0 * PI);
    let v = sample(PotentialKind::Sech2, 1.0, &g);
    let fields = random_fields(&g, 100, 11);
    let report = quadratic_form_bounds(&v, &fields).unwrap();
    assert!(report.all_within);
    assert!(report.ratios.iter().all(|&r| r >= 1.0));
}

#[test]
fn linear_flow_respects_h1_bound() {
    let g = grid(4096, 40.0 * PI);
    let v = sample(PotentialKind::Sech2, 1.0, &g);
    let fields = random_fields(&g, 4, 5);
    let cs = sobolev_constant(&fields);
    let times: Vec<f64> = (0..=20).map(|i| 0.5 * i as f64).collect();
    for u in &fields {
        let report = h1_flow_bound(&v, u, &times, 1e-2, Some(cs)).unwrap();
        assert!(report.within, "{} > {}", report.max_ratio, report.bound);
    }
}

//! Potential library and checks of the admissibility hypotheses
//! `V >= 0`, `x V' <= 0`, and finiteness of `int |V|(1+|x|)`, `int |V'|(1+|x|)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, WaveField};
use crate::scalar::{lit, to_f64, Real};

/// Samples below this magnitude at the box edge count as decayed.
pub const EDGE_DECAY_TOLERANCE: f64 = 1e-12;
/// Tolerance of the sign predicates in [`HypothesisReport`].
pub const SIGN_TOLERANCE: f64 = 1e-12;
/// Relative agreement required between analytic and spectral `V'`.
pub const DERIVATIVE_CROSS_CHECK: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    /// `V0 sech^2((x - c)/a)`
    Sech2,
    /// `V0 exp(-((x - c)/a)^2)`
    Gaussian,
    /// `-|V0| sech^2((x - c)/a)`
    Well,
    Zero,
}

impl PotentialKind {
    pub fn name(self) -> &'static str {
        match self {
            PotentialKind::Sech2 => "sech2",
            PotentialKind::Gaussian => "gaussian",
            PotentialKind::Well => "well",
            PotentialKind::Zero => "zero",
        }
    }
}

impl fmt::Display for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Analytic potential: value and derivative at any point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
}

/// `V0 sech^2(x/a)`, `V0 exp(-(x/a)^2)` or `-|V0| sech^2(x/a)`.
pub fn builtin_potential(kind: PotentialKind, amplitude: f64, width: f64) -> Result<PotentialSpec> {
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::InvalidParameter {
            name: "a",
            value: width,
            reason: "potential width must be positive",
        });
    }
    if !amplitude.is_finite() {
        return Err(Error::InvalidParameter {
            name: "V0",
            value: amplitude,
            reason: "potential amplitude must be finite",
        });
    }
    Ok(PotentialSpec {
        kind,
        amplitude,
        width,
        center: 0.0,
    })
}

fn sech2<T: Real>(s: T) -> T {
    // cosh overflows to +inf far out, giving exactly zero.
    let c = s.cosh();
    T::one() / (c * c)
}

impl PotentialSpec {
    pub fn zero() -> Self {
        PotentialSpec {
            kind: PotentialKind::Zero,
            amplitude: 0.0,
            width: 1.0,
            center: 0.0,
        }
    }

    pub fn centered_at(mut self, center: f64) -> Self {
        self.center = center;
        self
    }

    pub fn name(&self) -> String {
        match self.kind {
            PotentialKind::Zero => "zero".to_string(),
            k => format!("{}(V0={}, a={})", k.name(), self.amplitude, self.width),
        }
    }

    pub fn value<T: Real>(&self, x: T) -> T {
        let a: T = lit(self.width);
        let v0: T = lit(self.amplitude);
        let s = (x - lit(self.center)) / a;
        match self.kind {
            PotentialKind::Sech2 => v0 * sech2(s),
            PotentialKind::Gaussian => v0 * (-s * s).exp(),
            PotentialKind::Well => -v0.abs() * sech2(s),
            PotentialKind::Zero => T::zero(),
        }
    }

    pub fn derivative<T: Real>(&self, x: T) -> T {
        let a: T = lit(self.width);
        let v0: T = lit(self.amplitude);
        let s = (x - lit(self.center)) / a;
        let two: T = lit(2.0);
        match self.kind {
            PotentialKind::Sech2 => -two * v0 / a * sech2(s) * s.tanh(),
            PotentialKind::Gaussian => -two * s / a * v0 * (-s * s).exp(),
            PotentialKind::Well => two * v0.abs() / a * sech2(s) * s.tanh(),
            PotentialKind::Zero => T::zero(),
        }
    }

    /// Distance from the center beyond which `|V|` and `|V'|` stay below
    /// `tolerance`.
    pub fn decay_radius(&self, tolerance: f64) -> f64 {
        let below = |r: f64| {
            [self.center - r, self.center + r].iter().all(|&x| {
                self.value(x).abs() < tolerance && self.derivative(x).abs() < tolerance
            })
        };
        if below(0.0) {
            return 0.0;
        }
        let mut hi = self.width.max(1e-3);
        while !below(hi) {
            hi *= 2.0;
        }
        let mut lo = hi / 2.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if below(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}

/// `V` and `V'` sampled on a grid.
#[derive(Clone, Debug)]
pub struct PotentialSample<T: Real> {
    grid: Arc<Grid<T>>,
    v: Vec<T>,
    v_prime: Vec<T>,
    spec: PotentialSpec,
}

/// Samples `spec` on `grid`, checking edge decay and cross-checking the
/// analytic derivative against the spectral derivative of the samples.
pub fn sample_potential<T: Real>(
    spec: &PotentialSpec,
    grid: &Arc<Grid<T>>,
) -> Result<PotentialSample<T>> {
    let l = grid.half_width();
    let tol: T = lit(EDGE_DECAY_TOLERANCE);
    let edges = [-l, grid.nodes()[grid.num_points() - 1], l];
    let decayed = edges
        .iter()
        .all(|&x| spec.value(x).abs() < tol && spec.derivative(x).abs() < tol);
    if !decayed {
        let radius = spec.decay_radius(EDGE_DECAY_TOLERANCE);
        return Err(Error::DomainTooSmall {
            potential: spec.name(),
            half_width: to_f64(l),
            required_half_width: radius + spec.center.abs(),
        });
    }
    let v: Vec<T> = grid.nodes().iter().map(|&x| spec.value(x)).collect();
    let v_prime: Vec<T> = grid.nodes().iter().map(|&x| spec.derivative(x)).collect();

    let spectral = WaveField::from_real_fn(Arc::clone(grid), |x| spec.value(x)).derivative();
    let scale = v_prime.iter().fold(T::zero(), |m, d| m.max(d.abs()));
    let worst = spectral
        .samples()
        .iter()
        .zip(&v_prime)
        .fold(T::zero(), |m, (s, d)| m.max((s.re - *d).abs()));
    let allowed: T = lit::<T>(DERIVATIVE_CROSS_CHECK).max(T::epsilon() * lit(1e3));
    if worst > allowed * scale.max(T::min_positive_value()) {
        return Err(Error::UnderResolved {
            potential: spec.name(),
            relative_error: to_f64(worst / scale),
        });
    }
    Ok(PotentialSample {
        grid: Arc::clone(grid),
        v,
        v_prime,
        spec: *spec,
    })
}

impl<T: Real> PotentialSample<T> {
    pub fn zero(grid: &Arc<Grid<T>>) -> Self {
        PotentialSample {
            grid: Arc::clone(grid),
            v: vec![T::zero(); grid.num_points()],
            v_prime: vec![T::zero(); grid.num_points()],
            spec: PotentialSpec::zero(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.v
    }

    pub fn derivatives(&self) -> &[T] {
        &self.v_prime
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    /// `int |V| dx` by the rectangle rule.
    pub fn l1_norm(&self) -> T {
        self.grid.dx() * self.v.iter().map(|v| v.abs()).sum::<T>()
    }

    pub fn min_value(&self) -> T {
        self.v.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn is_identically_zero(&self) -> bool {
        self.v.iter().all(|v| *v == T::zero())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    /// `int |V| (1 + |x|) dx`
    pub l11_v: f64,
    /// `int |V'| (1 + |x|) dx`
    pub l11_vprime: f64,
    pub min_v: f64,
    pub max_xvprime: f64,
    pub nonneg: bool,
    pub repulsive: bool,
    pub admissible: bool,
}

pub fn hypothesis_report<T: Real>(sample: &PotentialSample<T>) -> HypothesisReport {
    let dx = sample.grid.dx();
    let nodes = sample.grid.nodes();
    let origin = sample.grid.nyquist_index();
    // The weight 1 + |x| has a kink at the node x = 0; the rectangle rule
    // then misses dx^2/6 * h(0) for integrands |x| h(x) with h smooth.
    let weighted_l1 = |values: &[T]| -> T {
        let rect = dx * nodes
            .iter()
            .zip(values)
            .map(|(&x, v)| v.abs() * (T::one() + x.abs()))
            .sum::<T>();
        rect + dx * dx / lit(6.0) * values[origin].abs()
    };
    let l11_v = weighted_l1(&sample.v);
    let l11_vprime = weighted_l1(&sample.v_prime);
    let max_xvprime = nodes
        .iter()
        .zip(&sample.v_prime)
        .map(|(&x, &d)| x * d)
        .fold(T::neg_infinity(), T::max);
    let min_v = sample.min_value();
    let (l11_v, l11_vprime) = (to_f64(l11_v), to_f64(l11_vprime));
    let (min_v, max_xvprime) = (to_f64(min_v), to_f64(max_xvprime));
    let nonneg = min_v >= -SIGN_TOLERANCE;
    let repulsive = max_xvprime <= SIGN_TOLERANCE;
    HypothesisReport {
        l11_v,
        l11_vprime,
        min_v,
        max_xvprime,
        nonneg,
        repulsive,
        admissible: nonneg && repulsive && l11_v.is_finite() && l11_vprime.is_finite(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Arc<Grid<f64>> {
        Grid::new(n, 40.0 * PI).unwrap()
    }

    #[test]
    fn builtin_rejects_nonpositive_width() {
        assert!(builtin_potential(PotentialKind::Sech2, 1.0, 0.0).is_err());
        assert!(builtin_potential(PotentialKind::Gaussian, 1.0, -2.0).is_err());
    }

    #[test]
    fn sech2_peak() {
        let v = builtin_potential(PotentialKind::Sech2, 1.0, 1.0).unwrap();
        assert_eq!(v.value(0.0_f64), 1.0);
        assert_eq!(v.derivative(0.0_f64), 0.0);
    }

    #[test]
    fn gaussian_xvprime_closed_form() {
        let v = builtin_potential(PotentialKind::Gaussian, 2.0, 1.0).unwrap();
        for i in -40..=40 {
            let x = i as f64 * 0.1;
            let xv = x * v.derivative(x);
            let expect = -4.0 * x * x * (-x * x).exp();
            assert!((xv - expect).abs() < 1e-14);
            assert!(xv <= 0.0);
        }
    }

    #[test]
    fn well_minimum() {
        let v = builtin_potential(PotentialKind::Well, 2.0, 1.0).unwrap();
        let s = sample_potential(&v, &grid(4096)).unwrap();
        assert!((s.min_value() + 2.0).abs() < 1e-12);
        assert!(!hypothesis_report(&s).nonneg);
    }

    #[test]
    fn sample_edge_checks() {
        let v = builtin_potential(PotentialKind::Sech2, 1.0, 1.0).unwrap();
        assert!(sample_potential(&v, &grid(4096)).is_ok());
        let wide = builtin_potential(PotentialKind::Gaussian, 1.0, 50.0).unwrap();
        match sample_potential(&wide, &grid(4096)) {
            Err(Error::DomainTooSmall {
                required_half_width,
                ..
            }) => {
                // exp(-(r/50)^2) = 1e-12 at r = 50 sqrt(12 ln 10) ~ 262.9
                assert!((required_half_width - 262.9).abs() < 1.0, "{required_half_width}");
            }
            other => panic!("expected DomainTooSmall, got {other:?}"),
        }
        let z = sample_potential(&PotentialSpec::zero(), &grid(256)).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        assert!(z.derivatives().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coarse_grid_fails_cross_check() {
        let narrow = builtin_potential(PotentialKind::Gaussian, 1.0, 0.05).unwrap();
        let g = Grid::new(64, 10.0).unwrap();
        assert!(matches!(
            sample_potential(&narrow, &g),
            Err(Error::UnderResolved { .. })
        ));
    }

    #[test]
    fn sech2_weighted_l1() {
        let v = builtin_potential(PotentialKind::Sech2, 1.0, 1.0).unwrap();
        let r = hypothesis_report(&sample_potential(&v, &grid(4096)).unwrap());
        let exact = 2.0 + 2.0 * 2f64.ln();
        assert!((r.l11_v - exact).abs() < 1e-4, "{}", r.l11_v);
        assert!(r.admissible);
    }

    #[test]
    fn gaussian_is_repulsive() {
        let v = builtin_potential(PotentialKind::Gaussian, 1.0, 1.0).unwrap();
        let r = hypothesis_report(&sample_potential(&v, &grid(4096)).unwrap());
        assert!(r.repulsive);
        assert!(r.max_xvprime <= 0.0);
        assert!(r.admissible);
    }

    #[test]
    fn builtins_with_positive_amplitude_are_admissible() {
        for kind in [PotentialKind::Sech2, PotentialKind::Gaussian] {
            for &(v0, a) in &[(0.5, 1.0), (1.0, 2.0), (3.0, 0.5)] {
                let spec = builtin_potential(kind, v0, a).unwrap();
                let r = hypothesis_report(&sample_potential(&spec, &grid(4096)).unwrap());
                assert!(r.admissible, "{kind} V0={v0} a={a}: {r:?}");
            }
        }
    }

    #[test]
    fn l11_converges_under_refinement() {
        for kind in [PotentialKind::Sech2, PotentialKind::Gaussian, PotentialKind::Well] {
            let spec = builtin_potential(kind, 1.0, 1.0).unwrap();
            let a = hypothesis_report(&sample_potential(&spec, &grid(2048)).unwrap()).l11_v;
            let b = hypothesis_report(&sample_potential(&spec, &grid(4096)).unwrap()).l11_v;
            assert!((a - b).abs() <= 1e-3 * b, "{kind}: {a} vs {b}");
        }
    }
}

//! Periodic spectral discretization of the line.
//!
//! The box `[-L, L)` carries `N` equispaced nodes `x_n = -L + n dx`. Spectra
//! use the unitary DFT convention
//!
//! ```text
//! u_hat[j] = N^{-1/2} * sum_n u[n] exp(-2 pi i j n / N)
//! ```
//!
//! indexed in transform order, so mode `j` carries wavenumber
//! `k_j = (pi / L) * j` for `j < N/2` and `(pi / L) * (j - N)` otherwise.
//! With this convention `||u||_{L^2}^2 = dx * sum_j |u_hat[j]|^2`, and every
//! norm in this module is written against it.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{cis, lit, to_f64, Complex, Real};

/// Tail fraction of spectral mass ignored when estimating the effective
/// bandwidth of a field.
pub const BANDWIDTH_TOLERANCE: f64 = 1e-12;

pub struct Grid<T: Real> {
    num_points: usize,
    half_width: T,
    dx: T,
    nodes: Vec<T>,
    wavenumbers: Vec<T>,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for Grid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("num_points", &self.num_points)
            .field("half_width", &self.half_width)
            .field("dx", &self.dx)
            .finish()
    }
}

impl<T: Real> Grid<T> {
    pub fn new(num_points: usize, half_width: T) -> Result<Arc<Self>> {
        if num_points < 8 || !num_points.is_power_of_two() {
            return Err(Error::InvalidParameter {
                name: "num_points",
                value: num_points as f64,
                reason: "must be a power of two and at least 8",
            });
        }
        if !(half_width > T::zero()) || !half_width.is_finite() {
            return Err(Error::InvalidParameter {
                name: "half_width",
                value: to_f64(half_width),
                reason: "must be positive and finite",
            });
        }
        let n = T::from(num_points).unwrap();
        let dx = (half_width + half_width) / n;
        let nodes = (0..num_points)
            .map(|j| -half_width + T::from(j).unwrap() * dx)
            .collect();
        let dk = T::PI() / half_width;
        let half = num_points / 2;
        let wavenumbers = (0..num_points)
            .map(|j| {
                if j < half {
                    T::from(j).unwrap() * dk
                } else {
                    -T::from(num_points - j).unwrap() * dk
                }
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(num_points);
        let inverse = planner.plan_fft_inverse(num_points);
        Ok(Arc::new(Grid {
            num_points,
            half_width,
            dx,
            nodes,
            wavenumbers,
            forward,
            inverse,
        }))
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn dx(&self) -> T {
        self.dx
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Wavenumbers in transform order.
    pub fn wavenumbers(&self) -> &[T] {
        &self.wavenumbers
    }

    pub fn nyquist_index(&self) -> usize {
        self.num_points / 2
    }

    /// Wavenumber used by spectral differentiation: identical to
    /// [`Grid::wavenumbers`] except that the Nyquist mode is zeroed.
    pub fn derivative_wavenumber(&self, j: usize) -> T {
        if j == self.nyquist_index() {
            T::zero()
        } else {
            self.wavenumbers[j]
        }
    }

    /// Largest resolvable wavenumber `pi N / (2L)`.
    pub fn nyquist_wavenumber(&self) -> T {
        T::PI() / self.dx
    }

    /// Time before content travelling at group velocity `2 k_max` from the
    /// origin reaches the box edge.
    pub fn wrap_horizon(&self, k_max: T) -> T {
        if k_max <= T::zero() {
            T::infinity()
        } else {
            self.half_width / (k_max + k_max)
        }
    }

    /// Two grids are compatible when they discretize the same box with the
    /// same number of nodes.
    pub fn same_as(&self, other: &Grid<T>) -> bool {
        self.num_points == other.num_points && self.half_width == other.half_width
    }

    /// Unnormalized in-place forward DFT.
    pub fn fft_forward(&self, buffer: &mut [Complex<T>]) {
        self.forward.process(buffer);
    }

    /// Unnormalized in-place inverse DFT.
    pub fn fft_inverse(&self, buffer: &mut [Complex<T>]) {
        self.inverse.process(buffer);
    }

    fn unitary_scale(&self) -> T {
        T::one() / T::from(self.num_points).unwrap().sqrt()
    }
}

pub(crate) fn check_same_grid<T: Real>(a: &Grid<T>, b: &Grid<T>) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "N = {}, L = {} vs N = {}, L = {}",
            a.num_points, a.half_width, b.num_points, b.half_width
        )))
    }
}

/// Complex field sampled on a [`Grid`].
#[derive(Clone)]
pub struct WaveField<T: Real> {
    grid: Arc<Grid<T>>,
    samples: Vec<Complex<T>>,
}

impl<T: Real> fmt::Debug for WaveField<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WaveField")
            .field("grid", &self.grid)
            .field("samples", &self.samples.len())
            .finish()
    }
}

/// Unitary spectrum of a [`WaveField`], in transform order.
#[derive(Clone, Debug)]
pub struct Spectrum<T: Real> {
    grid: Arc<Grid<T>>,
    coefficients: Vec<Complex<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn new(grid: Arc<Grid<T>>, coefficients: Vec<Complex<T>>) -> Result<Self> {
        if coefficients.len() != grid.num_points() {
            return Err(Error::InvalidInput(format!(
                "spectrum has {} coefficients, grid has {} points",
                coefficients.len(),
                grid.num_points()
            )));
        }
        Ok(Spectrum { grid, coefficients })
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coefficients
    }

    pub fn inverse(self) -> WaveField<T> {
        let Spectrum {
            grid,
            mut coefficients,
        } = self;
        grid.fft_inverse(&mut coefficients);
        let s = grid.unitary_scale();
        coefficients.iter_mut().for_each(|c| *c = c.scale(s));
        WaveField {
            grid,
            samples: coefficients,
        }
    }

    /// `dx * sum |u_hat|^2`, which equals the squared L2 norm of the field.
    pub fn scaled_l2_squared(&self) -> T {
        self.grid.dx() * self.coefficients.iter().map(|c| c.norm_sqr()).sum::<T>()
    }
}

impl<T: Real> WaveField<T> {
    pub fn new(grid: Arc<Grid<T>>, samples: Vec<Complex<T>>) -> Result<Self> {
        if samples.len() != grid.num_points() {
            return Err(Error::InvalidInput(format!(
                "field has {} samples, grid has {} points",
                samples.len(),
                grid.num_points()
            )));
        }
        if let Some(j) = samples
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::InvalidInput(format!("non-finite sample at index {j}")));
        }
        Ok(WaveField { grid, samples })
    }

    pub fn zeros(grid: Arc<Grid<T>>) -> Self {
        let samples = vec![Complex::new(T::zero(), T::zero()); grid.num_points()];
        WaveField { grid, samples }
    }

    /// Samples `f` at the grid nodes. Panics if `f` returns a non-finite value.
    pub fn from_fn(grid: Arc<Grid<T>>, f: impl Fn(T) -> Complex<T>) -> Self {
        let samples = grid.nodes().iter().map(|&x| f(x)).collect();
        WaveField::new(grid, samples).expect("from_fn produced a non-finite sample")
    }

    pub fn from_real_fn(grid: Arc<Grid<T>>, f: impl Fn(T) -> T) -> Self {
        Self::from_fn(grid, |x| Complex::new(f(x), T::zero()))
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex<T>> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<Grid<T>>, samples: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(samples.len(), grid.num_points());
        WaveField { grid, samples }
    }

    pub fn spectrum(&self) -> Spectrum<T> {
        let mut coefficients = self.samples.clone();
        self.grid.fft_forward(&mut coefficients);
        let s = self.grid.unitary_scale();
        coefficients.iter_mut().for_each(|c| *c = c.scale(s));
        Spectrum {
            grid: Arc::clone(&self.grid),
            coefficients,
        }
    }

    /// Applies a Fourier multiplier `m(j, k_j)` and returns the result.
    pub fn apply_multiplier(&self, multiplier: impl Fn(usize, T) -> Complex<T>) -> Self {
        let mut buffer = self.samples.clone();
        self.grid.fft_forward(&mut buffer);
        let inv_n = T::one() / T::from(self.grid.num_points()).unwrap();
        for (j, c) in buffer.iter_mut().enumerate() {
            *c = *c * multiplier(j, self.grid.wavenumbers()[j]).scale(inv_n);
        }
        self.grid.fft_inverse(&mut buffer);
        WaveField {
            grid: Arc::clone(&self.grid),
            samples: buffer,
        }
    }

    /// Spectral derivative `u'`; the Nyquist mode is zeroed.
    pub fn derivative(&self) -> Self {
        let grid = Arc::clone(&self.grid);
        self.apply_multiplier(|j, _| Complex::new(T::zero(), grid.derivative_wavenumber(j)))
    }

    /// Periodic translation `u(x - y)` via the phase `exp(-i k y)`.
    pub fn translate(&self, y: T) -> Result<Self> {
        let two_l = self.grid.half_width() + self.grid.half_width();
        if !y.is_finite() || y.abs() >= two_l {
            return Err(Error::InvalidParameter {
                name: "y",
                value: to_f64(y),
                reason: "translation must satisfy |y| < 2L",
            });
        }
        if y == T::zero() {
            return Ok(self.clone());
        }
        Ok(self.apply_multiplier(|_, k| cis(-k * y)))
    }

    /// Rectangle-rule `L^a` norm; pass `T::infinity()` for the sup norm.
    pub fn lp_norm(&self, a: T) -> Result<T> {
        if a.is_nan() || a < T::one() {
            return Err(Error::InvalidParameter {
                name: "a",
                value: to_f64(a),
                reason: "Lebesgue exponent must be >= 1",
            });
        }
        if a.is_infinite() {
            return Ok(self.sup_norm());
        }
        let dx = self.grid.dx();
        let sum: T = if a == lit(2.0) {
            self.samples.iter().map(|z| z.norm_sqr()).sum()
        } else {
            self.samples.iter().map(|z| z.norm().powf(a)).sum()
        };
        Ok((dx * sum).powf(T::one() / a))
    }

    pub fn sup_norm(&self) -> T {
        self.samples
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), T::max)
    }

    /// `(int |u|^2 + |u'|^2)^{1/2}` evaluated on the spectrum:
    /// `dx * sum (1 + k^2) |u_hat|^2`, Nyquist mode weighted as `k = 0`.
    pub fn h1_norm(&self) -> T {
        let spec = self.spectrum();
        let sum: T = spec
            .coefficients
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let k = self.grid.derivative_wavenumber(j);
                (T::one() + k * k) * c.norm_sqr()
            })
            .sum();
        (self.grid.dx() * sum).sqrt()
    }

    /// Smallest `k_max` such that the spectral mass with `|k| > k_max` is at
    /// most `tolerance` times the total. Zero for the zero field.
    pub fn effective_bandwidth(&self, tolerance: T) -> T {
        let spec = self.spectrum();
        let mut weighted: Vec<(T, T)> = spec
            .coefficients
            .iter()
            .zip(self.grid.wavenumbers())
            .map(|(c, k)| (k.abs(), c.norm_sqr()))
            .collect();
        let total: T = weighted.iter().map(|w| w.1).sum();
        if total == T::zero() {
            return T::zero();
        }
        weighted.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let budget = tolerance * total;
        let mut tail = T::zero();
        for (k, w) in weighted {
            tail += w;
            if tail > budget {
                return k;
            }
        }
        T::zero()
    }

    /// Wraparound horizon `L / (2 k_max)` with `k_max` the effective
    /// bandwidth at [`BANDWIDTH_TOLERANCE`].
    pub fn wrap_horizon(&self) -> T {
        self.grid
            .wrap_horizon(self.effective_bandwidth(lit(BANDWIDTH_TOLERANCE)))
    }

    /// Pointwise difference `self - other`.
    pub fn difference(&self, other: &WaveField<T>) -> Result<Self> {
        check_same_grid(&self.grid, &other.grid)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a - b)
            .collect();
        Ok(WaveField::from_parts_unchecked(Arc::clone(&self.grid), samples))
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        let samples = self.samples.iter().map(|z| z * factor).collect();
        WaveField::from_parts_unchecked(Arc::clone(&self.grid), samples)
    }

    /// Fraction of the mass located in `|x| > (1 - band) L`.
    pub fn edge_mass_fraction(&self, band: T) -> T {
        let cut = (T::one() - band) * self.grid.half_width();
        let mut edge = T::zero();
        let mut total = T::zero();
        for (x, z) in self.grid.nodes().iter().zip(&self.samples) {
            let w = z.norm_sqr();
            total += w;
            if x.abs() > cut {
                edge += w;
            }
        }
        if total == T::zero() {
            T::zero()
        } else {
            edge / total
        }
    }
}

/// Time-stamped sequence of snapshots with aligned real-valued series.
#[derive(Clone, Debug)]
pub struct EvolutionTrace<T: Real> {
    times: Vec<T>,
    snapshots: Vec<WaveField<T>>,
    series: BTreeMap<String, Vec<T>>,
    step: Option<T>,
    horizon: T,
}

impl<T: Real> EvolutionTrace<T> {
    /// Builds a trace; the horizon defaults to the first snapshot's
    /// wraparound horizon.
    pub fn new(times: Vec<T>, snapshots: Vec<WaveField<T>>) -> Result<Self> {
        if times.len() != snapshots.len() {
            return Err(Error::InvalidInput(format!(
                "{} times but {} snapshots",
                times.len(),
                snapshots.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("times must be strictly increasing".into()));
        }
        if let Some(first) = snapshots.first() {
            for s in &snapshots[1..] {
                check_same_grid(first.grid(), s.grid())?;
            }
        }
        let horizon = snapshots
            .first()
            .map(|s| s.wrap_horizon())
            .unwrap_or_else(T::infinity);
        Ok(EvolutionTrace {
            times,
            snapshots,
            series: BTreeMap::new(),
            step: None,
            horizon,
        })
    }

    pub fn with_series(mut self, name: impl Into<String>, values: Vec<T>) -> Result<Self> {
        let name = name.into();
        if values.len() != self.times.len() {
            return Err(Error::InvalidInput(format!(
                "series `{name}` has {} values for {} times",
                values.len(),
                self.times.len()
            )));
        }
        self.series.insert(name, values);
        Ok(self)
    }

    pub fn with_step(mut self, dt: T) -> Self {
        self.step = Some(dt);
        self
    }

    pub fn with_horizon(mut self, horizon: T) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn snapshots(&self) -> &[WaveField<T>] {
        &self.snapshots
    }

    pub fn series(&self, name: &str) -> Option<&[T]> {
        self.series.get(name).map(Vec::as_slice)
    }

    pub fn series_names(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    /// Step size of the integrator that produced the trace, if any.
    pub fn step(&self) -> Option<T> {
        self.step
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    /// True when every recorded time lies inside the wraparound horizon.
    pub fn trusted(&self) -> bool {
        self.times.last().is_none_or(|&t| t.abs() <= self.horizon)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&WaveField<T>> {
        self.snapshots.last()
    }
}

/// Trapezoid rule in time over `||u(t)||_{L^r}^p`, then the `p`-th root.
/// `p = infinity` takes the maximum over snapshots.
pub fn spacetime_norm<T: Real>(trace: &EvolutionTrace<T>, p: T, r: T) -> Result<T> {
    if trace.len() < 2 {
        return Err(Error::InvalidInput(
            "space-time norm needs at least two snapshots".into(),
        ));
    }
    if p.is_nan() || p < T::one() {
        return Err(Error::InvalidParameter {
            name: "p",
            value: to_f64(p),
            reason: "time exponent must be >= 1",
        });
    }
    let spatial = trace
        .snapshots()
        .iter()
        .map(|s| s.lp_norm(r))
        .collect::<Result<Vec<T>>>()?;
    Ok(time_norm(trace.times(), &spatial, p))
}

/// `L^p` norm in time of a sampled nonnegative function (trapezoid rule).
pub fn time_norm<T: Real>(times: &[T], values: &[T], p: T) -> T {
    if p.is_infinite() {
        return values.iter().copied().fold(T::zero(), T::max);
    }
    let half: T = lit(0.5);
    let integral: T = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| half * (t[1] - t[0]) * (v[0].powf(p) + v[1].powf(p)))
        .sum();
    integral.powf(T::one() / p)
}

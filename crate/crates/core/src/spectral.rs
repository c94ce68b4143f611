//! Periodic grid, Fourier transforms, spectral differentiation and Sobolev norms.
//!
//! The periodic cell is `[-πL, πL)` sampled at `N` equispaced nodes. A field is
//! represented by its samples and, lazily, by coefficients `c_k` with
//!
//! ```text
//! f(x) = Σ_k c_k exp(i ξ_k x),   ξ_k = k / L,   k = -N/2 .. N/2-1
//! ```
//!
//! so that `c_k = f̂(ξ_k) / (2πL)` for a function with continuum transform
//! `f̂(ξ) = ∫ f(x) exp(-i x ξ) dx`. Coefficients are stored in FFT order
//! (index `j` holds wavenumber `k = j` for `j < N/2` and `k = j - N` otherwise).
//! The discrete Sobolev norm is the quadrature of the continuum integral under
//! this convention:
//!
//! ```text
//! ‖f‖²_{H^s} = 2πL Σ_k (1 + ξ_k²)^s |c_k|²
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[-πL, πL)` together with its FFT plans.
pub struct Grid {
    num_points: usize,
    half_period: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("num_points", &self.num_points)
            .field("half_period", &self.half_period)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.num_points == other.num_points && self.half_period == other.half_period
    }
}

impl Grid {
    /// Builds a grid with `num_points` nodes (a power of two, at least 8) on a
    /// cell of length `2π·half_period`.
    pub fn new(num_points: usize, half_period: f64) -> Result<Arc<Grid>> {
        if num_points < 8 || !num_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "number of points must be a power of two >= 8, got {num_points}"
            )));
        }
        if !(half_period.is_finite() && half_period > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half period L must be positive and finite, got {half_period}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Grid {
            num_points,
            half_period,
            forward: planner.plan_fft_forward(num_points),
            inverse: planner.plan_fft_inverse(num_points),
        }))
    }

    pub fn len(&self) -> usize {
        self.num_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    /// Length of the periodic cell, `2πL`.
    pub fn period(&self) -> f64 {
        2.0 * PI * self.half_period
    }

    /// Node spacing `Δx = 2πL/N`.
    pub fn spacing(&self) -> f64 {
        self.period() / self.num_points as f64
    }

    /// Frequency resolution `Δξ = 1/L`.
    pub fn frequency_resolution(&self) -> f64 {
        1.0 / self.half_period
    }

    pub fn node(&self, j: usize) -> f64 {
        -PI * self.half_period + j as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.num_points).map(|j| self.node(j)).collect()
    }

    /// Signed wavenumber stored at FFT index `idx`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        let n = self.num_points;
        if idx < n / 2 {
            idx as i64
        } else {
            idx as i64 - n as i64
        }
    }

    /// Frequency `ξ_k = k/L` stored at FFT index `idx`.
    pub fn frequency(&self, idx: usize) -> f64 {
        self.wavenumber(idx) as f64 / self.half_period
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.num_points).map(|j| self.frequency(j)).collect()
    }

    /// FFT index of the (unpaired) Nyquist mode `k = -N/2`.
    pub fn nyquist_index(&self) -> usize {
        self.num_points / 2
    }

    /// Nyquist frequency `N/(2L)`.
    pub fn nyquist_frequency(&self) -> f64 {
        self.num_points as f64 / (2.0 * self.half_period)
    }

    /// Largest retained wavenumber under the 2/3 rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.num_points / 3
    }

    /// Usable band `N/(3L)` after dealiasing; all resolution checks use it.
    pub fn dealiased_band(&self) -> f64 {
        self.num_points as f64 / (3.0 * self.half_period)
    }

    pub fn in_dealias_band(&self, idx: usize) -> bool {
        (self.wavenumber(idx).unsigned_abs() as usize) <= self.dealias_cutoff()
    }

    /// Coefficients `c_k` of the given samples (FFT order).
    pub(crate) fn forward(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.num_points];
        self.forward_into(samples, &mut out, &mut self.scratch());
        out
    }

    /// Real samples of `Σ c_k exp(i ξ_k x)`; the imaginary residue is dropped.
    pub(crate) fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_points];
        self.inverse_into(coeffs, &mut out, &mut self.scratch());
        out
    }

    /// Reusable buffers for [`Grid::forward_into`] and [`Grid::inverse_into`].
    pub(crate) fn scratch(&self) -> FftScratch {
        let len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        FftScratch {
            buf: vec![Complex64::default(); self.num_points],
            scratch: vec![Complex64::default(); len],
        }
    }

    pub(crate) fn forward_into(&self, samples: &[f64], out: &mut [Complex64], s: &mut FftScratch) {
        debug_assert_eq!(samples.len(), self.num_points);
        let scale = 1.0 / self.num_points as f64;
        for (o, &v) in out.iter_mut().zip(samples) {
            *o = Complex64::new(v, 0.0);
        }
        self.forward.process_with_scratch(out, &mut s.scratch);
        // x_j = -πL + jΔx contributes the phase (-1)^k.
        for (j, c) in out.iter_mut().enumerate() {
            let s = if j % 2 == 0 { scale } else { -scale };
            *c *= s;
        }
    }

    pub(crate) fn inverse_into(&self, coeffs: &[Complex64], out: &mut [f64], s: &mut FftScratch) {
        debug_assert_eq!(coeffs.len(), self.num_points);
        for (j, (b, &c)) in s.buf.iter_mut().zip(coeffs).enumerate() {
            *b = if j % 2 == 0 { c } else { -c };
        }
        self.inverse
            .process_with_scratch(&mut s.buf, &mut s.scratch);
        for (o, c) in out.iter_mut().zip(&s.buf) {
            *o = c.re;
        }
    }
}

pub(crate) struct FftScratch {
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

/// A real function sampled on a [`Grid`], with a lazily cached spectrum.
#[derive(Clone)]
pub struct Field {
    grid: Arc<Grid>,
    samples: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("has_spectrum", &self.spectrum.get().is_some())
            .finish()
    }
}

impl Field {
    pub fn new(grid: Arc<Grid>, samples: Vec<f64>) -> Result<Field> {
        if samples.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        Ok(Field {
            grid,
            samples,
            spectrum: OnceLock::new(),
        })
    }

    pub fn zeros(grid: Arc<Grid>) -> Field {
        Field::constant(grid, 0.0)
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> Field {
        let n = grid.len();
        Field {
            grid,
            samples: vec![value; n],
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64) -> f64) -> Field {
        let samples = (0..grid.len()).map(|j| f(grid.node(j))).collect();
        Field {
            grid,
            samples,
            spectrum: OnceLock::new(),
        }
    }

    /// Builds a field from coefficients in FFT order. The coefficients are
    /// cached as given; callers are responsible for conjugate symmetry.
    pub fn from_spectrum(grid: Arc<Grid>, spectrum: Vec<Complex64>) -> Result<Field> {
        if spectrum.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                spectrum.len()
            )));
        }
        let samples = grid.inverse(&spectrum);
        let cache = OnceLock::new();
        let _ = cache.set(spectrum);
        Ok(Field {
            grid,
            samples,
            spectrum: cache,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn is_finite(&self) -> bool {
        self.samples.iter().all(|v| v.is_finite())
    }

    pub fn has_spectrum(&self) -> bool {
        self.spectrum.get().is_some()
    }

    /// Fourier coefficients in FFT order, computed on first access.
    pub fn spectrum(&self) -> Result<&[Complex64]> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        self.check_finite()?;
        Ok(self
            .spectrum
            .get_or_init(|| self.grid.forward(&self.samples)))
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::BreakdownDetected {
                time: f64::NAN,
                reason: "non-finite samples".into(),
            })
        }
    }

    fn same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn zip_with(&self, other: &Field, op: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.same_grid(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Field::new(self.grid.clone(), samples)
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, factor: f64) -> Field {
        let samples = self.samples.iter().map(|&v| factor * v).collect();
        let cache = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = cache.set(s.iter().map(|&c| c * factor).collect());
        }
        Field {
            grid: self.grid.clone(),
            samples,
            spectrum: cache,
        }
    }

    /// Cyclic shift by `offset` nodes: `g(x_j) = f(x_{j - offset})`.
    pub fn shift_nodes(&self, offset: isize) -> Field {
        let n = self.samples.len() as isize;
        let samples = (0..n)
            .map(|j| self.samples[(j - offset).rem_euclid(n) as usize])
            .collect();
        Field {
            grid: self.grid.clone(),
            samples,
            spectrum: OnceLock::new(),
        }
    }
}

/// Sobolev index selecting an `H^s` norm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NormSpec(f64);

impl NormSpec {
    pub fn new(sobolev_index: f64) -> Result<NormSpec> {
        if sobolev_index.is_finite() {
            Ok(NormSpec(sobolev_index))
        } else {
            Err(Error::InvalidParameter(format!(
                "Sobolev index must be finite, got {sobolev_index}"
            )))
        }
    }

    pub fn index(self) -> f64 {
        self.0
    }

    pub fn shifted(self, by: f64) -> NormSpec {
        NormSpec(self.0 + by)
    }
}

/// Returns the field with its spectrum attached. Idempotent.
pub fn transform(f: &Field) -> Result<Field> {
    f.spectrum()?;
    Ok(f.clone())
}

/// Spectral multiplier of `∂x^order` at FFT index `idx`.
pub(crate) fn derivative_symbol(grid: &Grid, idx: usize, order: u32) -> Complex64 {
    if order % 2 == 1 && idx == grid.nyquist_index() {
        return Complex64::new(0.0, 0.0);
    }
    let xi = grid.frequency(idx);
    match order % 4 {
        0 => Complex64::new(xi.powi(order as i32), 0.0),
        1 => Complex64::new(0.0, xi.powi(order as i32)),
        2 => Complex64::new(-xi.powi(order as i32), 0.0),
        _ => Complex64::new(0.0, -xi.powi(order as i32)),
    }
}

/// `∂x^order f` for `order` in `{1, 2, 3}`; the Nyquist mode is dropped for
/// odd orders so that real fields stay real.
pub fn derivative(f: &Field, order: u32) -> Result<Field> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidOrder(order));
    }
    let grid = f.grid();
    let spec = f
        .spectrum()?
        .iter()
        .enumerate()
        .map(|(j, &c)| c * derivative_symbol(grid, j, order))
        .collect();
    Field::from_spectrum(grid.clone(), spec)
}

/// Squared `H^s` norm from coefficients.
pub(crate) fn sobolev_norm_sq(grid: &Grid, spectrum: &[Complex64], s: f64) -> f64 {
    let sum: f64 = spectrum
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let xi = grid.frequency(j);
            (1.0 + xi * xi).powf(s) * c.norm_sqr()
        })
        .sum();
    grid.period() * sum
}

pub fn sobolev_norm(f: &Field, spec: NormSpec) -> Result<f64> {
    Ok(sobolev_norm_sq(f.grid(), f.spectrum()?, spec.index()).sqrt())
}

/// Grid maximum of `|f|`; a lower bound for the continuum sup norm.
pub fn sup_norm(f: &Field) -> f64 {
    f.samples().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Zeroes every mode with `|k| > N/3`.
pub fn dealias(f: &Field) -> Result<Field> {
    let grid = f.grid();
    let mut spec = f.spectrum()?.to_vec();
    dealias_in_place(grid, &mut spec);
    Field::from_spectrum(grid.clone(), spec)
}

pub(crate) fn dealias_in_place(grid: &Grid, spectrum: &mut [Complex64]) {
    for (j, c) in spectrum.iter_mut().enumerate() {
        if !grid.in_dealias_band(j) {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Fraction of the squared spectral mass carried by frequencies that do not
/// satisfy `keep`. Returns 0 for the zero field.
pub fn spectral_mass_outside(f: &Field, keep: impl Fn(f64) -> bool) -> Result<f64> {
    let grid = f.grid();
    let mut total = 0.0;
    let mut outside = 0.0;
    for (j, c) in f.spectrum()?.iter().enumerate() {
        let m = c.norm_sqr();
        total += m;
        if !keep(grid.frequency(j)) {
            outside += m;
        }
    }
    Ok(if total > 0.0 { outside / total } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Arc<Grid> {
        Grid::new(n, 16.0).unwrap()
    }

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(100, 16.0).is_err());
        assert!(Grid::new(4, 16.0).is_err());
        assert!(Grid::new(64, 0.0).is_err());
        assert!(Grid::new(64, f64::NAN).is_err());
    }

    #[test]
    fn cosine_has_two_half_coefficients() {
        let g = grid(1024);
        let f = transform(&Field::from_fn(g.clone(), f64::cos)).unwrap();
        let spec = f.spectrum().unwrap();
        for (j, c) in spec.iter().enumerate() {
            let k = g.wavenumber(j);
            let expected = if k.abs() == 16 { 0.5 } else { 0.0 };
            assert!((c.re - expected).abs() < 1e-14, "k={k} c={c}");
            assert!(c.im.abs() < 1e-14);
        }
    }

    #[test]
    fn zero_field_has_zero_spectrum() {
        let f = Field::zeros(grid(64));
        assert!(f.spectrum().unwrap().iter().all(|c| c.norm() == 0.0));
        assert_eq!(sobolev_norm(&f, NormSpec(3.0)).unwrap(), 0.0);
        assert_eq!(sup_norm(&f), 0.0);
    }

    #[test]
    fn transform_is_idempotent() {
        let f = Field::from_fn(grid(256), |x| (0.5 * x).sin());
        let a = transform(&f).unwrap();
        let b = transform(&a).unwrap();
        assert_eq!(a.spectrum().unwrap(), b.spectrum().unwrap());
        assert_eq!(a.samples(), f.samples());
    }

    #[test]
    fn non_finite_samples_signal_breakdown() {
        let mut s = vec![0.0; 64];
        s[3] = f64::NAN;
        let f = Field::new(grid(64), s).unwrap();
        assert!(matches!(
            transform(&f),
            Err(Error::BreakdownDetected { .. })
        ));
    }

    #[test]
    fn derivatives_of_trig_modes() {
        let g = grid(1024);
        let d = derivative(&Field::from_fn(g.clone(), f64::cos), 1).unwrap();
        let expected: Vec<f64> = g.nodes().iter().map(|x| -x.sin()).collect();
        assert!(max_diff(d.samples(), &expected) <= 1e-10);

        let d3 = derivative(&Field::from_fn(g.clone(), |x| (2.0 * x).sin()), 3).unwrap();
        let expected: Vec<f64> = g.nodes().iter().map(|x| -8.0 * (2.0 * x).cos()).collect();
        assert!(max_diff(d3.samples(), &expected) <= 1e-9);

        let dc = derivative(&Field::constant(g, 2.5), 1).unwrap();
        assert!(sup_norm(&dc) == 0.0);
    }

    #[test]
    fn invalid_derivative_order() {
        let f = Field::zeros(grid(64));
        assert_eq!(derivative(&f, 0).unwrap_err(), Error::InvalidOrder(0));
        assert_eq!(derivative(&f, 4).unwrap_err(), Error::InvalidOrder(4));
    }

    #[test]
    fn sobolev_norm_of_single_modes() {
        let g = grid(1024);
        let c1 = Field::from_fn(g.clone(), f64::cos);
        let n0 = sobolev_norm(&c1, NormSpec(0.0)).unwrap();
        assert!((n0 - (16.0 * PI).sqrt()).abs() < 1e-12);
        assert!((n0 - 7.0898154036220635).abs() < 1e-12);

        // two modes at ξ = ±2: 2πL·2·(1/4)·(1+4)
        let c2 = Field::from_fn(g, |x| (2.0 * x).cos());
        let n1 = sobolev_norm(&c2, NormSpec(1.0)).unwrap();
        let by_hand = (2.0 * PI * 16.0 * 2.0 * 0.25 * 5.0_f64).sqrt();
        assert!((n1 - by_hand).abs() < 1e-12);
        assert!((n1 - 15.853309190424044).abs() < 1e-10);
    }

    #[test]
    fn sup_norm_attained_at_node() {
        assert_eq!(sup_norm(&Field::from_fn(grid(1024), f64::cos)), 1.0);
    }

    #[test]
    fn dealias_projection() {
        let g = grid(128);
        let n = g.len();
        // inside the band: unchanged
        let inside = Field::from_fn(g.clone(), |x| (3.0 * x / 16.0).cos() + (x / 16.0).sin());
        let d = dealias(&inside).unwrap();
        assert!(max_diff(d.samples(), inside.samples()) < 1e-14);
        // top mode: removed
        let k = (n / 2 - 1) as f64;
        let top = Field::from_fn(g.clone(), |x| (k * x / 16.0).cos());
        let removed = sup_norm(&dealias(&top).unwrap());
        // the samples themselves carry ~1e-14 argument rounding at |x| ~ 50
        assert!(removed < 1e-13, "{removed}");
        // projection
        let mixed = Field::from_fn(g, |x| (x / 16.0).sin() + (k * x / 16.0).cos());
        let once = dealias(&mixed).unwrap();
        let twice = dealias(&once).unwrap();
        assert_eq!(once.spectrum().unwrap(), twice.spectrum().unwrap());
    }

    #[test]
    fn derivative_commutes_with_dealias_in_band() {
        let g = grid(128);
        let f = Field::from_fn(g, |x| (5.0 * x / 16.0).sin() * (2.0 * x / 16.0).cos());
        let a = derivative(&dealias(&f).unwrap(), 2).unwrap();
        let b = dealias(&derivative(&f, 2).unwrap()).unwrap();
        let sa = a.spectrum().unwrap();
        let sb = b.spectrum().unwrap();
        for j in 0..sa.len() {
            assert_eq!(sa[j], sb[j]);
        }
    }

    #[test]
    fn node_shift_preserves_norms() {
        let g = grid(256);
        let f = Field::from_fn(g, |x| (-(x * x) / 20.0).exp());
        let shifted = f.shift_nodes(37);
        let a = sobolev_norm(&f, NormSpec(2.0)).unwrap();
        let b = sobolev_norm(&shifted, NormSpec(2.0)).unwrap();
        assert!((a - b).abs() <= 1e-13 * a);
        assert_eq!(shifted.samples()[37], f.samples()[0]);
    }
}

//! The filtered Helmholtz inverse `(1 - α²∂x²)^{-1}` and the nonlocal terms
//! built from it.
//!
//! The inverse has two independent realizations: a Fourier multiplier
//! `(1 + α²ξ²)^{-1}` ([`helmholtz_inverse`]) and a circular convolution with
//! the periodized Green kernel ([`green_convolve`]). On the cell of length
//! `P = 2πL` the image sum of `g(x) = e^{-|x|/α} / (2α)` has the closed form
//!
//! ```text
//! g_P(z) = (e^{-z/α} + e^{-(P-z)/α}) / (2α (1 - e^{-P/α})),   0 <= z < P
//! ```
//!
//! `g_P` has a corner at `z = 0`, so sampling it on the nodes and applying the
//! trapezoidal rule is only accurate to `O(Δx²/α²)`. The convolution path
//! instead uses product integration: `f` is replaced on each cell by its
//! centered degree-7 Lagrange interpolant and the kernel moments are
//! integrated with Gauss-Legendre rules on sub-cells of width at most `α/2`.
//! The resulting weights form a circulant table, so the convolution is still
//! a direct `O(N²)` sum that never touches an FFT.

use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{dealias_in_place, derivative_symbol, FftScratch, Field, Grid};

/// Filter length `α ∈ [0, 1)`; `α = 0` is the Burgers limit.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FilterParam(f64);

impl FilterParam {
    pub fn new(alpha: f64) -> Result<FilterParam> {
        if (0.0..1.0).contains(&alpha) {
            Ok(FilterParam(alpha))
        } else {
            Err(Error::InvalidParameter(format!(
                "filter parameter alpha must lie in [0, 1), got {alpha}"
            )))
        }
    }

    pub const fn zero() -> FilterParam {
        FilterParam(0.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0.0
    }

    /// `(1 + α²ξ²)^{-1}`
    pub fn helmholtz_symbol(self, xi: f64) -> f64 {
        1.0 / (1.0 + self.0 * self.0 * xi * xi)
    }
}

/// Points in the local interpolation stencil of the product-integration rule.
const STENCIL: usize = 8;
/// Gauss-Legendre points per sub-cell.
const GAUSS_POINTS: usize = 10;

/// Periodized Green kernel of `1 - α²∂x²` tabulated on a grid.
#[derive(Debug, Clone)]
pub struct PeriodizedKernel {
    alpha: FilterParam,
    grid: Arc<Grid>,
    samples: Vec<f64>,
    weights: Vec<f64>,
}

impl PeriodizedKernel {
    pub fn new(alpha: FilterParam, grid: Arc<Grid>) -> Result<PeriodizedKernel> {
        if alpha.is_zero() {
            return Err(Error::KernelUndefined);
        }
        let n = grid.len();
        let dx = grid.spacing();
        let samples = (0..n)
            .map(|d| periodized_green(d as f64 * dx, alpha.value(), grid.period()))
            .collect();
        let weights = product_integration_weights(&grid, alpha.value());
        Ok(PeriodizedKernel {
            alpha,
            grid,
            samples,
            weights,
        })
    }

    pub fn alpha(&self) -> FilterParam {
        self.alpha
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// `g_P` at the node displacements `dΔx`, `d = 0..N`.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Quadrature weights: `(g_P * f)(x_i) ≈ Δx Σ_d w_d f(x_{i-d})`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `Δx Σ_d w_d`, which approximates `ĝ(0) = 1`.
    pub fn mass(&self) -> f64 {
        self.grid.spacing() * self.weights.iter().sum::<f64>()
    }
}

/// Periodized kernel `Σ_m g(z + mP)` in closed form.
pub fn periodized_green(z: f64, alpha: f64, period: f64) -> f64 {
    let z = z.rem_euclid(period);
    let num = (-z / alpha).exp() + (-(period - z) / alpha).exp();
    num / (2.0 * alpha * -(-period / alpha).exp_m1())
}

fn lagrange_denominators(nodes: &[f64]) -> Vec<f64> {
    nodes
        .iter()
        .enumerate()
        .map(|(j, &tj)| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != j)
                .map(|(_, &tm)| tj - tm)
                .product()
        })
        .collect()
}

fn product_integration_weights(grid: &Grid, alpha: f64) -> Vec<f64> {
    let n = grid.len();
    let dx = grid.spacing();
    let period = grid.period();
    let lo = (STENCIL / 2 - 1) as isize;
    let nodes: Vec<f64> = (0..STENCIL).map(|j| j as f64 - lo as f64).collect();
    let denoms = lagrange_denominators(&nodes);
    let rule = GaussLegendre::new(GAUSS_POINTS).expect("degree >= 2");
    let pieces = ((2.0 * dx / alpha).ceil() as usize).max(1);
    let h = 1.0 / pieces as f64;

    // Quadrature points in local cell coordinates t ∈ [0, 1] and the basis
    // values there; identical for every cell.
    let mut points = Vec::with_capacity(pieces * GAUSS_POINTS);
    for p in 0..pieces {
        let a = p as f64 * h;
        for &(x, w) in rule.as_node_weight_pairs() {
            let t = a + 0.5 * h * (x + 1.0);
            let basis: Vec<f64> = (0..STENCIL)
                .map(|j| {
                    nodes
                        .iter()
                        .enumerate()
                        .filter(|&(m, _)| m != j)
                        .map(|(_, &tm)| t - tm)
                        .product::<f64>()
                        / denoms[j]
                })
                .collect();
            points.push((t, 0.5 * h * w, basis));
        }
    }

    let mut weights = vec![0.0; n];
    for cell in 0..n {
        let z0 = cell as f64 * dx;
        for (t, w, basis) in &points {
            let g = w * periodized_green(z0 + t * dx, alpha, period);
            for (j, b) in basis.iter().enumerate() {
                let d = (cell as isize + j as isize - lo).rem_euclid(n as isize) as usize;
                weights[d] += g * b;
            }
        }
    }
    // Mirror-symmetric in exact arithmetic; remove rounding asymmetry.
    let mut sym = weights.clone();
    for d in 1..n {
        sym[d] = 0.5 * (weights[d] + weights[n - d]);
    }
    sym
}

/// Applies `(1 - α²∂x²)^{-1}` as the Fourier multiplier `(1 + α²ξ²)^{-1}`.
pub fn helmholtz_inverse(f: &Field, alpha: FilterParam) -> Result<Field> {
    if alpha.is_zero() {
        f.check_finite()?;
        return Ok(f.clone());
    }
    let grid = f.grid();
    let spec = f
        .spectrum()?
        .iter()
        .enumerate()
        .map(|(j, &c)| c * alpha.helmholtz_symbol(grid.frequency(j)))
        .collect();
    Field::from_spectrum(grid.clone(), spec)
}

/// Applies `(1 - α²∂x²)^{-1}` as a direct circular convolution with the
/// periodized kernel.
pub fn green_convolve(f: &Field, kernel: &PeriodizedKernel) -> Result<Field> {
    if f.grid().as_ref() != kernel.grid.as_ref() {
        return Err(Error::GridMismatch);
    }
    f.check_finite()?;
    let n = f.grid().len();
    let dx = f.grid().spacing();
    let s = f.samples();
    // doubled[m] = f[m mod N] so that f[(i - d) mod N] = doubled[i - d + N].
    let doubled: Vec<f64> = s.iter().chain(s.iter()).copied().collect();
    let w = &kernel.weights;
    let out = (0..n)
        .map(|i| {
            let window = &doubled[i + 1..i + n + 1];
            dx * w
                .iter()
                .zip(window.iter().rev())
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .collect();
    Field::new(f.grid().clone(), out)
}

/// Symbol of `α²∂x²(1 - α²∂x²)^{-1}`: `-α²ξ²/(1 + α²ξ²)`.
pub fn filtered_second_derivative_symbol(alpha: FilterParam, xi: f64) -> f64 {
    let a2x2 = alpha.value() * alpha.value() * xi * xi;
    -a2x2 / (1.0 + a2x2)
}

/// `α²∂x²(1 - α²∂x²)^{-1} f`.
pub fn filtered_second_derivative(f: &Field, alpha: FilterParam) -> Result<Field> {
    let grid = f.grid();
    let spec = f
        .spectrum()?
        .iter()
        .enumerate()
        .map(|(j, &c)| c * filtered_second_derivative_symbol(alpha, grid.frequency(j)))
        .collect();
    Field::from_spectrum(grid.clone(), spec)
}

/// Coefficients of `-α²∂x³(1-α²∂x²)^{-1} u² - (α²/2)∂x(1-α²∂x²)^{-1}(∂xu)²`
/// given samples of `u` and `∂xu`.
pub(crate) fn nonlocal_spectrum(
    grid: &Grid,
    u: &[f64],
    ux: &[f64],
    alpha: FilterParam,
    dealias: bool,
) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); grid.len()];
    let mut work = NonlocalWork::new(grid);
    add_nonlocal_spectrum(grid, u, ux, alpha, dealias, &mut out, &mut work);
    out
}

/// Buffers for [`add_nonlocal_spectrum`].
pub(crate) struct NonlocalWork {
    real: Vec<f64>,
    q: Vec<Complex64>,
    r: Vec<Complex64>,
    fft: FftScratch,
}

impl NonlocalWork {
    pub(crate) fn new(grid: &Grid) -> NonlocalWork {
        NonlocalWork {
            real: vec![0.0; grid.len()],
            q: vec![Complex64::default(); grid.len()],
            r: vec![Complex64::default(); grid.len()],
            fft: grid.scratch(),
        }
    }
}

/// Adds the nonlocal spectrum to `out`.
pub(crate) fn add_nonlocal_spectrum(
    grid: &Grid,
    u: &[f64],
    ux: &[f64],
    alpha: FilterParam,
    dealias: bool,
    out: &mut [Complex64],
    work: &mut NonlocalWork,
) {
    for (w, v) in work.real.iter_mut().zip(u) {
        *w = v * v;
    }
    grid.forward_into(&work.real, &mut work.q, &mut work.fft);
    for (w, v) in work.real.iter_mut().zip(ux) {
        *w = v * v;
    }
    grid.forward_into(&work.real, &mut work.r, &mut work.fft);
    if dealias {
        dealias_in_place(grid, &mut work.q);
        dealias_in_place(grid, &mut work.r);
    }
    let a2 = alpha.value() * alpha.value();
    for (j, (o, (&qj, &rj))) in out.iter_mut().zip(work.q.iter().zip(&work.r)).enumerate() {
        let h = alpha.helmholtz_symbol(grid.frequency(j));
        let d3 = derivative_symbol(grid, j, 3);
        let d1 = derivative_symbol(grid, j, 1);
        *o += -(d3 * qj * (a2 * h)) - d1 * rj * (0.5 * a2 * h);
    }
}

/// The two nonlocal terms of the filtered Camassa-Holm right-hand side.
/// Both quadratic inputs are dealiased before the multipliers are applied.
pub fn nonlocal_ch_terms(u: &Field, alpha: FilterParam) -> Result<Field> {
    u.check_finite()?;
    let grid = u.grid();
    if alpha.is_zero() {
        return Ok(Field::zeros(grid.clone()));
    }
    let ux = crate::spectral::derivative(u, 1)?;
    let spec = nonlocal_spectrum(grid, u.samples(), ux.samples(), alpha, true);
    Field::from_spectrum(grid.clone(), spec)
}

//! Right-hand sides, the first-order expansion functionals, RK4 time stepping
//! and the exact Burgers characteristics solution.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::{add_nonlocal_spectrum, FilterParam, NonlocalWork};
use crate::spectral::{
    dealias_in_place, derivative_symbol, sobolev_norm, sup_norm, FftScratch, Field, Grid, NormSpec,
};

/// When the trajectory is recorded.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleTimes {
    /// `count` equispaced instants on `[0, t_end]`, both ends included.
    Uniform(usize),
    /// Explicit instants in `(0, t_end]`; `t = 0` is always recorded.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub cfl: f64,
    pub dt_max: f64,
    pub t_end: f64,
    /// Abort once `max |∂x u|` exceeds this value.
    pub breakdown_threshold: f64,
    pub dealias: bool,
    pub samples: SampleTimes,
    /// Largest admissible fraction of spectral mass in the top 10% of the band.
    pub tail_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            cfl: 0.3,
            dt_max: 0.01,
            t_end: 1.0,
            breakdown_threshold: 1e4,
            dealias: true,
            samples: SampleTimes::Uniform(21),
            tail_tolerance: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn with_t_end(t_end: f64) -> SolverConfig {
        SolverConfig {
            t_end,
            ..SolverConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad(format!("cfl must lie in (0, 1], got {}", self.cfl));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if self.dt_max.is_nan() || self.dt_max <= 0.0 {
            return bad(format!("dt_max must be positive, got {}", self.dt_max));
        }
        if self.breakdown_threshold.is_nan() || self.breakdown_threshold <= 0.0 {
            return bad("breakdown threshold must be positive".into());
        }
        match &self.samples {
            SampleTimes::Uniform(n) if *n < 2 => bad("need at least two sample times".into()),
            SampleTimes::Explicit(ts) => {
                if ts
                    .iter()
                    .any(|&t| !(t > 0.0 && t <= self.t_end * (1.0 + 1e-12)))
                {
                    bad("explicit sample times must lie in (0, t_end]".into())
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Sorted, deduplicated recording instants starting at 0.
    pub fn sample_times(&self) -> Vec<f64> {
        let mut ts = match &self.samples {
            SampleTimes::Uniform(n) => (0..*n)
                .map(|i| self.t_end * i as f64 / (*n - 1) as f64)
                .collect(),
            SampleTimes::Explicit(ts) => {
                let mut v = vec![0.0];
                v.extend(ts.iter().map(|&t| t.min(self.t_end)));
                v
            }
        };
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts
    }
}

/// Conserved quantities and slope at a recorded instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    /// `∫ (u² + α² u_x²) dx`
    pub energy: f64,
    /// `∫ (u - α² u_xx) dx`
    pub momentum: f64,
    pub max_slope: f64,
}

/// A solution sampled at increasing times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    alpha: FilterParam,
    times: Vec<f64>,
    states: Vec<Field>,
    diagnostics: Vec<StepDiagnostics>,
    steps: usize,
    energy_drift: f64,
    momentum_drift: f64,
}

impl Trajectory {
    pub fn alpha(&self) -> FilterParam {
        self.alpha
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Field] {
        &self.states
    }

    pub fn diagnostics(&self) -> &[StepDiagnostics] {
        &self.diagnostics
    }

    pub fn final_state(&self) -> &Field {
        self.states
            .last()
            .expect("trajectory holds the initial state")
    }

    /// Number of RK4 steps taken.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Largest relative energy deviation from `t = 0` over every step.
    pub fn energy_drift(&self) -> f64 {
        self.energy_drift
    }

    /// Largest absolute momentum deviation from `t = 0` over every step.
    pub fn momentum_drift(&self) -> f64 {
        self.momentum_drift
    }

    /// `sup_t ‖u(t)‖_{H^s} / ‖u(0)‖_{H^s}` over the recorded instants.
    pub fn growth_ratio(&self, s: NormSpec) -> Result<f64> {
        let initial = sobolev_norm(&self.states[0], s)?;
        if initial == 0.0 {
            return Ok(1.0);
        }
        let mut sup: f64 = 0.0;
        for u in &self.states {
            sup = sup.max(sobolev_norm(u, s)?);
        }
        Ok(sup / initial)
    }
}

/// Buffers reused across right-hand-side evaluations.
struct RhsWork {
    ux_spec: Vec<Complex64>,
    ux: Vec<f64>,
    product: Vec<f64>,
    fft: FftScratch,
    nonlocal: NonlocalWork,
}

impl RhsWork {
    fn new(grid: &Grid) -> RhsWork {
        RhsWork {
            ux_spec: vec![Complex64::default(); grid.len()],
            ux: vec![0.0; grid.len()],
            product: vec![0.0; grid.len()],
            fft: grid.scratch(),
            nonlocal: NonlocalWork::new(grid),
        }
    }
}

/// `max |u|` and `max |u_x|` at an evaluation point; infinite when non-finite.
#[derive(Clone, Copy)]
struct RhsBounds {
    max_u: f64,
    max_ux: f64,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter()
        .try_fold(0.0_f64, |m, x| x.is_finite().then(|| m.max(x.abs())))
        .unwrap_or(f64::INFINITY)
}

/// Writes the coefficients of `-3 u u_x` plus, for `α > 0`, the nonlocal
/// terms into `out`.
fn evaluate_rhs(
    grid: &Grid,
    u: &[f64],
    spectrum: &[Complex64],
    alpha: FilterParam,
    dealias: bool,
    work: &mut RhsWork,
    out: &mut [Complex64],
) -> RhsBounds {
    for (j, (d, &c)) in work.ux_spec.iter_mut().zip(spectrum).enumerate() {
        *d = c * derivative_symbol(grid, j, 1);
    }
    grid.inverse_into(&work.ux_spec, &mut work.ux, &mut work.fft);
    for (p, (a, b)) in work.product.iter_mut().zip(u.iter().zip(&work.ux)) {
        *p = a * b;
    }
    grid.forward_into(&work.product, out, &mut work.fft);
    if dealias {
        dealias_in_place(grid, out);
    }
    for c in out.iter_mut() {
        *c *= -3.0;
    }
    if !alpha.is_zero() {
        add_nonlocal_spectrum(grid, u, &work.ux, alpha, dealias, out, &mut work.nonlocal);
    }
    RhsBounds {
        max_u: max_abs(u),
        max_ux: max_abs(&work.ux),
    }
}

fn rhs_field(u: &Field, alpha: FilterParam) -> Result<Field> {
    u.check_finite()?;
    let grid = u.grid();
    let mut out = vec![Complex64::default(); grid.len()];
    let mut work = RhsWork::new(grid);
    evaluate_rhs(
        grid,
        u.samples(),
        u.spectrum()?,
        alpha,
        true,
        &mut work,
        &mut out,
    );
    Field::from_spectrum(grid.clone(), out)
}

/// `-3 u ∂x u` with the product dealiased.
pub fn burgers_rhs(u: &Field) -> Result<Field> {
    rhs_field(u, FilterParam::zero())
}

/// Right-hand side of the filtered Camassa-Holm equation in `u`-form. At
/// `α = 0` this is the Burgers right-hand side, bit for bit.
pub fn ch_rhs(u: &Field, alpha: FilterParam) -> Result<Field> {
    rhs_field(u, alpha)
}

/// The first-order expansion field `E(α, u0)`: the right-hand side at `u0`.
pub fn e_functional(u0: &Field, alpha: FilterParam) -> Result<Field> {
    ch_rhs(u0, alpha)
}

/// The second-order error functional
///
/// ```text
/// F(α,u0) = α‖u0‖_{s+1} (α‖u0‖_{s+1} + ‖u0‖_{s-1}‖u0‖_{s+1})
///         + (α + ‖u0‖_{s-1}) (‖u0‖_{s+1} + ‖u0‖_{s-1}‖u0‖_{s+2})
/// ```
pub fn f_functional(u0: &Field, alpha: FilterParam, s: NormSpec) -> Result<f64> {
    let lower = sobolev_norm(u0, s.shifted(-1.0))?;
    let upper = sobolev_norm(u0, s.shifted(1.0))?;
    let top = sobolev_norm(u0, s.shifted(2.0))?;
    Ok(f_functional_from_norms(alpha.value(), lower, upper, top))
}

/// `F` from the norms `‖u0‖_{s-1}`, `‖u0‖_{s+1}`, `‖u0‖_{s+2}`.
pub fn f_functional_from_norms(alpha: f64, lower: f64, upper: f64, top: f64) -> f64 {
    alpha * upper * (alpha * upper + lower * upper) + (alpha + lower) * (upper + lower * top)
}

fn energy_and_momentum(grid: &Grid, spectrum: &[Complex64], alpha: FilterParam) -> (f64, f64) {
    let a2 = alpha.value() * alpha.value();
    let energy: f64 = spectrum
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let xi = grid.frequency(j);
            (1.0 + a2 * xi * xi) * c.norm_sqr()
        })
        .sum();
    (grid.period() * energy, grid.period() * spectrum[0].re)
}

/// Fraction of spectral mass in the top 10% of the resolved band.
fn tail_fraction(grid: &Grid, spectrum: &[Complex64], dealias: bool) -> f64 {
    let cut = if dealias {
        grid.dealias_cutoff()
    } else {
        grid.len() / 2
    } as f64;
    let mut total = 0.0;
    let mut tail = 0.0;
    for (j, c) in spectrum.iter().enumerate() {
        let m = c.norm_sqr();
        total += m;
        if grid.wavenumber(j).unsigned_abs() as f64 > 0.9 * cut {
            tail += m;
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

fn combine(base: &[Complex64], dir: &[Complex64], h: f64, out: &mut [Complex64]) {
    for (o, (&b, &d)) in out.iter_mut().zip(base.iter().zip(dir)) {
        *o = b + d * h;
    }
}

/// Classical RK4 for the filtered Camassa-Holm equation (`α = 0` gives
/// Burgers). The step is `min(dt_max, cfl·Δx / max(1, 3 max|u|))`, shortened
/// to land on every sample time.
pub fn rk4_integrate(u0: &Field, alpha: FilterParam, cfg: &SolverConfig) -> Result<Trajectory> {
    cfg.validate()?;
    u0.check_finite()?;
    let grid: Arc<Grid> = u0.grid().clone();
    let dx = grid.spacing();
    let mut spec = u0.spectrum()?.to_vec();

    let tail = tail_fraction(&grid, &spec, cfg.dealias);
    if tail > cfg.tail_tolerance {
        return Err(Error::ResolutionExceeded(format!(
            "initial data carries {tail:e} of its spectral mass in the top 10% of the band"
        )));
    }

    let sample_times = cfg.sample_times();
    let (energy0, momentum0) = energy_and_momentum(&grid, &spec, alpha);
    let mut times = vec![0.0];
    let mut states = vec![Field::from_spectrum(grid.clone(), spec.clone())?];
    let mut diagnostics = Vec::with_capacity(sample_times.len());
    let mut energy_drift: f64 = 0.0;
    let mut momentum_drift: f64 = 0.0;

    let mut t = 0.0;
    let mut steps = 0;
    let n = grid.len();
    let mut work = RhsWork::new(&grid);
    let mut stage = vec![Complex64::default(); n];
    let mut u = vec![0.0; n];
    let mut k = [(); 4].map(|_| vec![Complex64::default(); n]);
    grid.inverse_into(&spec, &mut u, &mut work.fft);
    let mut bounds = evaluate_rhs(&grid, &u, &spec, alpha, cfg.dealias, &mut work, &mut k[0]);
    diagnostics.push(StepDiagnostics {
        energy: energy0,
        momentum: momentum0,
        max_slope: bounds.max_ux,
    });

    for &target in sample_times.iter().skip(1) {
        while t < target {
            if !(bounds.max_ux.is_finite() && bounds.max_u.is_finite()) {
                return Err(Error::BreakdownDetected {
                    time: t,
                    reason: "non-finite solution".into(),
                });
            }
            if bounds.max_ux > cfg.breakdown_threshold {
                return Err(Error::BreakdownDetected {
                    time: t,
                    reason: format!(
                        "max |u_x| = {:e} exceeds {:e}",
                        bounds.max_ux, cfg.breakdown_threshold
                    ),
                });
            }
            let mut dt = cfg.dt_max.min(cfg.cfl * dx / (3.0 * bounds.max_u).max(1.0));
            let lands = t + dt >= target - 1e-12 * target.max(1.0);
            if lands {
                dt = target - t;
            }

            for (i, h) in [0.5 * dt, 0.5 * dt, dt].into_iter().enumerate() {
                combine(&spec, &k[i], h, &mut stage);
                grid.inverse_into(&stage, &mut u, &mut work.fft);
                evaluate_rhs(
                    &grid,
                    &u,
                    &stage,
                    alpha,
                    cfg.dealias,
                    &mut work,
                    &mut k[i + 1],
                );
            }
            for j in 0..n {
                spec[j] += (k[0][j] + (k[1][j] + k[2][j]) * 2.0 + k[3][j]) * (dt / 6.0);
            }
            t = if lands { target } else { t + dt };
            steps += 1;

            let (energy, momentum) = energy_and_momentum(&grid, &spec, alpha);
            if energy0 > 0.0 {
                energy_drift = energy_drift.max((energy - energy0).abs() / energy0);
            }
            momentum_drift = momentum_drift.max((momentum - momentum0).abs());
            let tail = tail_fraction(&grid, &spec, cfg.dealias);
            if !tail.is_finite() {
                return Err(Error::BreakdownDetected {
                    time: t,
                    reason: "non-finite solution".into(),
                });
            }
            if tail > cfg.tail_tolerance {
                return Err(Error::ResolutionExceeded(format!(
                    "at t = {t}: {tail:e} of the spectral mass sits in the top 10% of the band"
                )));
            }

            grid.inverse_into(&spec, &mut u, &mut work.fft);
            bounds = evaluate_rhs(&grid, &u, &spec, alpha, cfg.dealias, &mut work, &mut k[0]);
        }
        if !bounds.max_ux.is_finite() || bounds.max_ux > cfg.breakdown_threshold {
            return Err(Error::BreakdownDetected {
                time: t,
                reason: format!("max |u_x| = {:e}", bounds.max_ux),
            });
        }
        let (energy, momentum) = energy_and_momentum(&grid, &spec, alpha);
        times.push(t);
        states.push(Field::from_spectrum(grid.clone(), spec.clone())?);
        diagnostics.push(StepDiagnostics {
            energy,
            momentum,
            max_slope: bounds.max_ux,
        });
    }

    Ok(Trajectory {
        alpha,
        times,
        states,
        diagnostics,
        steps,
        energy_drift,
        momentum_drift,
    })
}

/// Trigonometric interpolant of a field, evaluable off the grid.
struct Interpolant {
    modes: Vec<(f64, Complex64)>,
    bound: f64,
}

impl Interpolant {
    fn new(f: &Field) -> Result<Interpolant> {
        let grid = f.grid();
        let spec = f.spectrum()?;
        let total: f64 = spec.iter().map(|c| c.norm()).sum();
        let modes: Vec<(f64, Complex64)> = spec
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 1e-18 * total)
            .map(|(j, &c)| (grid.frequency(j), c))
            .collect();
        Ok(Interpolant {
            modes,
            bound: total,
        })
    }

    /// Value and first derivative at `x`.
    fn eval(&self, x: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for &(xi, c) in &self.modes {
            let (s, co) = (xi * x).sin_cos();
            // Re(c e^{iξx}) and Re(iξ c e^{iξx})
            v += c.re * co - c.im * s;
            d -= xi * (c.re * s + c.im * co);
        }
        (v, d)
    }
}

/// Largest `t` for which the Burgers characteristics `x0 ↦ x0 + 3t u0(x0)`
/// stay monotone, from the grid slope of `u0`. Infinite for non-decreasing data.
pub fn breaking_time(u0: &Field) -> Result<f64> {
    let ux = crate::spectral::derivative(u0, 1)?;
    let steepest = ux.samples().iter().fold(0.0_f64, |m, &v| m.max(-v));
    Ok(if steepest > 0.0 {
        1.0 / (3.0 * steepest)
    } else {
        f64::INFINITY
    })
}

/// Exact Burgers solution `u(x,t) = u0(x0)` with `x0 + 3t u0(x0) = x`, solved
/// per node by safeguarded Newton iteration.
pub fn characteristics_oracle(u0: &Field, t: f64) -> Result<Field> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "time must be >= 0, got {t}"
        )));
    }
    if t == 0.0 {
        u0.check_finite()?;
        return Ok(u0.clone());
    }
    let horizon = breaking_time(u0)?;
    if t >= horizon {
        return Err(Error::PastBreakingTime { t, horizon });
    }
    let interp = Interpolant::new(u0)?;
    let grid = u0.grid().clone();
    let reach = 3.0 * t * interp.bound;

    let values: Result<Vec<f64>> = grid
        .nodes()
        .into_par_iter()
        .map(|x| {
            let residual = |x0: f64| {
                let (v, d) = interp.eval(x0);
                (x0 + 3.0 * t * v - x, 1.0 + 3.0 * t * d, v)
            };
            let (mut lo, mut hi) = (x - reach, x + reach);
            let mut x0 = x - 3.0 * t * interp.eval(x).0;
            let mut best = (f64::INFINITY, 0.0);
            for _ in 0..200 {
                let (g, dg, v) = residual(x0);
                if g.abs() < best.0 {
                    best = (g.abs(), v);
                }
                if g.abs() <= 1e-14 * x.abs().max(1.0) {
                    break;
                }
                if g < 0.0 {
                    lo = x0;
                } else {
                    hi = x0;
                }
                let newton = x0 - g / dg;
                x0 = if dg > 0.0 && newton > lo && newton < hi {
                    newton
                } else {
                    0.5 * (lo + hi)
                };
                if hi - lo <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
                    let (g, _, v) = residual(x0);
                    if g.abs() < best.0 {
                        best = (g.abs(), v);
                    }
                    break;
                }
            }
            if best.0 > 1e-12 {
                return Err(Error::NoConvergence {
                    x,
                    residual: best.0,
                });
            }
            Ok(best.1)
        })
        .collect();
    Field::new(grid, values?)
}

/// Sup of `|∂x u|` on the grid.
pub fn max_slope(u: &Field) -> Result<f64> {
    Ok(sup_norm(&crate::spectral::derivative(u, 1)?))
}

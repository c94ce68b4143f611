use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constructions::{SequenceIndex, CENTER_RATIO};
use crate::dynamics::{SampleTimes, SolverConfig};
use crate::error::{Error, Result};
use crate::operators::FilterParam;
use crate::spectral::{Grid, NormSpec};

/// Inclusive range of sequence indices, written `"4..8"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NRange {
    pub first: u32,
    pub last: u32,
}

impl NRange {
    pub fn iter(&self) -> impl Iterator<Item = u32> {
        self.first..=self.last
    }
}

impl fmt::Display for NRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

impl TryFrom<String> for NRange {
    type Error = String;

    fn try_from(text: String) -> std::result::Result<Self, Self::Error> {
        let bad = || format!("expected a range like \"4..8\", got {text:?}");
        let (a, b) = text.trim().split_once("..").ok_or_else(bad)?;
        let first = a.trim().parse().map_err(|_| bad())?;
        let last = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| bad())?;
        Ok(NRange { first, last })
    }
}

impl From<NRange> for String {
    fn from(r: NRange) -> String {
        r.to_string()
    }
}

/// Initial data for the expansion-order experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TaylorData {
    Phi,
    Sine,
    Zero,
    /// `u0ⁿ` for the given `n`.
    Sequence(u32),
}

impl fmt::Display for TaylorData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaylorData::Phi => write!(f, "phi"),
            TaylorData::Sine => write!(f, "sine"),
            TaylorData::Zero => write!(f, "zero"),
            TaylorData::Sequence(n) => write!(f, "u0n{n}"),
        }
    }
}

impl TryFrom<String> for TaylorData {
    type Error = String;

    fn try_from(text: String) -> std::result::Result<Self, Self::Error> {
        match text.as_str() {
            "phi" => Ok(TaylorData::Phi),
            "sine" => Ok(TaylorData::Sine),
            "zero" => Ok(TaylorData::Zero),
            other => other
                .strip_prefix("u0n")
                .and_then(|n| n.parse().ok())
                .map(TaylorData::Sequence)
                .ok_or_else(|| {
                    format!("unknown data {other:?}; expected phi, sine, zero or u0n<k>")
                }),
        }
    }
}

impl From<TaylorData> for String {
    fn from(d: TaylorData) -> String {
        d.to_string()
    }
}

/// Pass/fail thresholds of every criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `e(α_last) ≤ decay_factor · e(α_first)`.
    pub decay_factor: f64,
    /// Window for `r(t) / r(t/2)`.
    pub richardson_window: [f64; 2],
    /// Stability band for the `f_n` scalings and the product norms.
    pub scaling_band: f64,
    /// Window for the filtered-product ratio.
    pub filtered_ratio_window: [f64; 2],
    pub product_ratio_max: f64,
    pub support_mass: f64,
    /// Smallest admissible `d_{n+1} / d_n`.
    pub floor_ratio: f64,
    /// Smallest admissible control decay `d_first / d_last`.
    pub control_decay: f64,
    /// Largest admissible `sup_t ‖u(t)‖_s / ‖u0‖_s`.
    pub uniform_bound: f64,
    pub operator_delta: f64,
    pub convolution_time_window: [f64; 2],
    pub multiplier_time_window: [f64; 2],
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            decay_factor: 0.05,
            richardson_window: [3.2, 4.8],
            scaling_band: 1.25,
            filtered_ratio_window: [0.63, 0.70],
            product_ratio_max: 10.0,
            support_mass: 1e-12,
            floor_ratio: 0.8,
            control_decay: 2.0,
            uniform_bound: 3.0,
            operator_delta: 1e-8,
            convolution_time_window: [3.0, 5.0],
            multiplier_time_window: [1.8, 2.6],
        }
    }
}

/// Declarative description of every experiment. Unset keys take the
/// defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_points: usize,
    pub half_period: f64,
    /// Sobolev index of every reported norm.
    pub s: f64,
    pub cfl: f64,
    pub dt_max: f64,
    /// Recorded instants per trajectory, endpoints included.
    pub samples: usize,
    pub breakdown_threshold: f64,
    /// Rescale the zero-filter and counterexample data to unit `H^s` norm.
    pub normalize_u0: bool,
    /// Radius `R` of the data ball `U_R`.
    pub data_ball_radius: f64,

    pub alphas: Vec<f64>,
    pub t_end: f64,

    pub taylor_t0: f64,
    pub taylor_levels: usize,
    pub taylor_alphas: Vec<f64>,
    pub taylor_data: Vec<TaylorData>,

    pub t0: f64,
    pub n_range: NRange,
    /// `η₀ = eta_fraction · t0 · min_n ‖α_n²∂x²(1-α_n²∂x²)^{-1}(g_n ∂x f_n)‖_s`.
    pub eta_fraction: f64,

    pub product_cases: usize,

    pub bench_sizes: Vec<usize>,
    pub bench_alphas: Vec<f64>,
    pub bench_repetitions: usize,

    pub out_dir: Option<String>,
    pub tolerances: Tolerances,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n_points: 32768,
            half_period: 16.0,
            s: 2.0,
            cfl: 0.3,
            dt_max: 0.01,
            samples: 21,
            breakdown_threshold: 1e4,
            normalize_u0: false,
            data_ball_radius: 1.0,
            alphas: (1..=6).map(|k| 0.5_f64.powi(k)).collect(),
            t_end: 0.2,
            taylor_t0: 0.05,
            taylor_levels: 4,
            taylor_alphas: vec![0.0, 0.25, 0.03125],
            taylor_data: vec![TaylorData::Phi, TaylorData::Sequence(5), TaylorData::Sine],
            t0: 0.02,
            n_range: NRange { first: 4, last: 8 },
            eta_fraction: 0.25,
            product_cases: 100,
            bench_sizes: vec![64, 128, 256, 512, 1024, 2048],
            bench_alphas: vec![0.5, 0.1],
            bench_repetitions: 20,
            out_dir: None,
            tolerances: Tolerances::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl ExperimentConfig {
    /// Checks every invariant before any computation starts.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        if self.s.is_nan() || self.s <= 1.5 {
            return Err(invalid(format!("s must exceed 3/2 (got {})", self.s)));
        }
        for (name, list) in [
            ("alphas", &self.alphas),
            ("taylor_alphas", &self.taylor_alphas),
            ("bench_alphas", &self.bench_alphas),
        ] {
            for &a in list {
                FilterParam::new(a)
                    .map_err(|_| invalid(format!("{name}: alpha must lie in [0, 1), got {a}")))?;
            }
        }
        if self.bench_alphas.contains(&0.0) {
            return Err(invalid("bench_alphas: the kernel path needs alpha > 0"));
        }
        self.solver(1.0).validate()?;
        if self.samples < 2 {
            return Err(invalid("samples must be at least 2"));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if !(self.taylor_t0 > 0.0 && self.taylor_t0.is_finite()) {
            return Err(invalid("taylor_t0 must be positive"));
        }
        if self.taylor_levels < 2 {
            return Err(invalid("taylor_levels must be at least 2"));
        }
        if !(self.t0 >= 0.0 && self.t0.is_finite()) {
            return Err(invalid(format!("t0 must be nonnegative, got {}", self.t0)));
        }
        if self.eta_fraction.is_nan() || self.eta_fraction <= 0.0 {
            return Err(invalid("eta_fraction must be positive"));
        }
        if self.data_ball_radius.is_nan() || self.data_ball_radius <= 0.0 {
            return Err(invalid("data_ball_radius must be positive"));
        }
        if self.n_range.first > self.n_range.last || self.n_range.first == 0 {
            return Err(invalid(format!(
                "n_range must satisfy 1 <= first <= last, got {}",
                self.n_range
            )));
        }
        self.check_sequence_band(&grid, self.n_range.iter())?;
        let taylor_n = self.taylor_data.iter().filter_map(|d| match d {
            TaylorData::Sequence(n) => Some(*n),
            _ => None,
        });
        self.check_sequence_band(&grid, taylor_n)?;
        if self.bench_repetitions < 20 {
            return Err(invalid("bench_repetitions must be at least 20"));
        }
        for &n in &self.bench_sizes {
            Grid::new(n, self.half_period).map_err(|e| invalid(format!("bench_sizes: {e}")))?;
        }
        Ok(())
    }

    fn check_sequence_band(&self, grid: &Grid, ns: impl Iterator<Item = u32>) -> Result<()> {
        let offending: Vec<u32> = ns
            .filter(|&n| SequenceIndex::new(n, grid).is_err())
            .collect();
        let Some(&n) = offending.first() else {
            return Ok(());
        };
        let listed: Vec<String> = offending.iter().map(u32::to_string).collect();
        Err(invalid(format!(
            "n = {} violates the dealiased band: (17/12)*2^{n} + 1 = {} must stay below \
             (2/3)*N/(2L) = {} (N = {}, L = {})",
            listed.join(", "),
            CENTER_RATIO * 2f64.powi(n as i32) + 1.0,
            grid.dealiased_band(),
            self.n_points,
            self.half_period
        )))
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Grid::new(self.n_points, self.half_period)
    }

    pub fn norm(&self) -> NormSpec {
        NormSpec::new(self.s).expect("validated")
    }

    /// Solver settings with `samples` equispaced instants on `[0, t_end]`.
    pub fn solver(&self, t_end: f64) -> SolverConfig {
        SolverConfig {
            cfl: self.cfl,
            dt_max: self.dt_max,
            t_end,
            breakdown_threshold: self.breakdown_threshold,
            dealias: true,
            samples: SampleTimes::Uniform(self.samples),
            ..SolverConfig::default()
        }
    }
}

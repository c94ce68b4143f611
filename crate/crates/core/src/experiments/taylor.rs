use rayon::prelude::*;

use super::result::pass_label;
use super::{in_case, normalized, ExperimentConfig, ExperimentResult, Table, TaylorData, Value};
use crate::constructions::{build_phi, build_u0n_from_phi, BumpProfile, SequenceIndex};
use crate::dynamics::{e_functional, f_functional, rk4_integrate, SampleTimes};
use crate::error::Result;
use crate::operators::FilterParam;
use crate::spectral::{sobolev_norm, Field, Grid, NormSpec};

const COLUMNS: &[&str] = &[
    "case_id",
    "data",
    "alpha",
    "t",
    "r_t",
    "ratio",
    "F",
    "C_measured",
    "verdict",
];

struct Case {
    data: TaylorData,
    data_idx: usize,
    alpha_idx: usize,
    alpha: FilterParam,
}

struct Outcome {
    /// `(t, r(t))`, decreasing in `t`.
    residuals: Vec<(f64, f64)>,
    f: f64,
    growth: f64,
}

fn build_data(
    data: TaylorData,
    phi: &Field,
    grid: &std::sync::Arc<Grid>,
    s: NormSpec,
) -> Result<Field> {
    let raw = match data {
        TaylorData::Phi => phi.clone(),
        TaylorData::Sine => Field::from_fn(grid.clone(), |x| 0.1 * x.sin()),
        TaylorData::Zero => Field::zeros(grid.clone()),
        TaylorData::Sequence(n) => {
            let idx = SequenceIndex::new(n, grid)?;
            build_u0n_from_phi(phi, &BumpProfile::default(), idx, s)?.u0
        }
    };
    normalized(&raw, s)
}

fn run_case(u0: &Field, case: &Case, cfg: &ExperimentConfig) -> Result<Outcome> {
    let s = cfg.norm();
    let times: Vec<f64> = (0..cfg.taylor_levels)
        .map(|j| cfg.taylor_t0 / 2f64.powi(j as i32))
        .collect();
    let mut solver = cfg.solver(cfg.taylor_t0);
    solver.samples = SampleTimes::Explicit(times.clone());
    let label = format!("taylor {}", case.data);
    let traj =
        rk4_integrate(u0, case.alpha, &solver).map_err(|e| in_case(e, &label, case.alpha))?;
    let e = e_functional(u0, case.alpha)?;
    let mut residuals = Vec::with_capacity(times.len());
    for (t, u) in traj.times().iter().zip(traj.states()).skip(1).rev() {
        let r = u.sub(u0)?.sub(&e.scale(*t))?;
        residuals.push((*t, sobolev_norm(&r, s)?));
    }
    Ok(Outcome {
        residuals,
        f: f_functional(u0, case.alpha, s)?,
        growth: traj.growth_ratio(s)?,
    })
}

/// Richardson check of `‖S^α_t u0 - u0 - t E(α, u0)‖_s = O(t²)` on unit-norm data.
pub fn run_taylor_order(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let s = cfg.norm();
    let tol = &cfg.tolerances;
    let phi = build_phi(&grid, &BumpProfile::default())?;
    let data: Vec<Field> = cfg
        .taylor_data
        .iter()
        .map(|&d| build_data(d, &phi, &grid, s))
        .collect::<Result<_>>()?;

    let mut cases = Vec::new();
    for (data_idx, &d) in cfg.taylor_data.iter().enumerate() {
        for (alpha_idx, &a) in cfg.taylor_alphas.iter().enumerate() {
            cases.push(Case {
                data: d,
                data_idx,
                alpha_idx,
                alpha: FilterParam::new(a)?,
            });
        }
    }
    let outcomes: Vec<Outcome> = cases
        .par_iter()
        .map(|c| run_case(&data[c.data_idx], c, cfg))
        .collect::<Result<_>>()?;

    let [lo, hi] = tol.richardson_window;
    let mut table = Table::new(COLUMNS);
    let mut all_ratios_ok = true;
    let mut c_max: f64 = 0.0;
    let mut growth: f64 = 1.0;
    for (case, out) in cases.iter().zip(&outcomes) {
        growth = growth.max(out.growth);
        let degenerate = out.residuals.iter().all(|&(_, r)| r == 0.0);
        for (j, &(t, r)) in out.residuals.iter().enumerate() {
            let ratio = out
                .residuals
                .get(j + 1)
                .and_then(|&(_, r_half)| (r_half > 0.0).then(|| r / r_half));
            let c = (out.f > 0.0).then(|| r / (t * t * out.f));
            if let Some(c) = c {
                c_max = c_max.max(c);
            }
            let verdict = match ratio {
                Some(q) => {
                    let ok = (lo..=hi).contains(&q);
                    all_ratios_ok &= ok;
                    pass_label(ok)
                }
                None if j + 1 < out.residuals.len() && !degenerate => {
                    all_ratios_ok = false;
                    pass_label(false)
                }
                None => Value::from("n/a"),
            };
            table.push(
                format!("{}-a{:02}-t{j}", case.data, case.alpha_idx),
                vec![
                    case.data.to_string().into(),
                    case.alpha.value().into(),
                    t.into(),
                    r.into(),
                    ratio.into(),
                    out.f.into(),
                    c.into(),
                    verdict,
                ],
            );
        }
    }
    table.sort();

    let mut result = ExperimentResult::new("prop1", table, cfg);
    if cases.is_empty() {
        return Ok(result);
    }
    result.verdict(
        "prop1.richardson",
        all_ratios_ok,
        format!("every r(t)/r(t/2) within [{lo}, {hi}]"),
    );
    result.verdict(
        "uniform_bound",
        growth <= tol.uniform_bound,
        format!("C1 = {growth} (limit {})", tol.uniform_bound),
    );
    result.constant("C_taylor", c_max);
    result.constant("C1", growth);
    result
        .notes
        .push("initial data rescaled to unit H^s norm; C_taylor = max r(t) / (t^2 F)".into());
    Ok(result)
}

use rayon::prelude::*;

use super::result::pass_label;
use super::{in_case, normalized, trajectory_gap, ExperimentConfig, ExperimentResult, Table};
use crate::constructions::{build_phi, BumpProfile};
use crate::dynamics::{rk4_integrate, Trajectory};
use crate::error::Result;
use crate::operators::FilterParam;
use crate::spectral::Field;

const COLUMNS: &[&str] = &[
    "case_id", "alpha", "t_end", "e_alpha", "t_at_max", "order", "growth", "verdict",
];

/// Distance between filtered and Burgers solutions from `φ` as `α` shrinks.
pub fn run_zero_filter_limit(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let phi = build_phi(&grid, &BumpProfile::default())?;
    let u0 = if cfg.normalize_u0 {
        normalized(&phi, cfg.norm())?
    } else {
        phi
    };
    zero_filter_limit(&u0, cfg)
}

/// `e(α) = max_t ‖S^α_t u0 - S^0_t u0‖_s` for every `α` of `cfg.alphas`.
pub fn zero_filter_limit(u0: &Field, cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    if cfg.alphas.is_empty() {
        return Ok(ExperimentResult::new("thm1", Table::new(COLUMNS), cfg));
    }
    let s = cfg.norm();
    let tol = &cfg.tolerances;
    let solver = cfg.solver(cfg.t_end);
    let mut alphas = vec![FilterParam::zero()];
    for &a in &cfg.alphas {
        alphas.push(FilterParam::new(a)?);
    }
    let runs: Vec<Trajectory> = alphas
        .par_iter()
        .map(|&a| rk4_integrate(u0, a, &solver).map_err(|e| in_case(e, "zero-filter", a)))
        .collect::<Result<_>>()?;
    let burgers = &runs[0];

    let mut growth: f64 = burgers.growth_ratio(s)?;
    let mut gaps = Vec::with_capacity(cfg.alphas.len());
    for traj in &runs[1..] {
        gaps.push(trajectory_gap(traj, burgers, s)?);
        growth = growth.max(traj.growth_ratio(s)?);
    }

    let mut table = Table::new(COLUMNS);
    let mut orders = Vec::new();
    for (i, (&a, &(e, t_max))) in cfg.alphas.iter().zip(&gaps).enumerate() {
        let order = gaps.get(i + 1).and_then(|&(e_next, _)| {
            let a_next = cfg.alphas[i + 1];
            (e > 0.0 && e_next > 0.0 && a_next > 0.0 && a != a_next)
                .then(|| (e / e_next).ln() / (a / a_next).ln())
        });
        if let Some(p) = order {
            orders.push(p);
        }
        let monotone = i == 0 || e < gaps[i - 1].0;
        table.push(
            format!("a{i:02}"),
            vec![
                a.into(),
                cfg.t_end.into(),
                e.into(),
                t_max.into(),
                order.into(),
                runs[i + 1].growth_ratio(s)?.into(),
                pass_label(monotone),
            ],
        );
    }

    let mut result = ExperimentResult::new("thm1", table, cfg);
    if gaps.is_empty() {
        return Ok(result);
    }
    let e: Vec<f64> = gaps.iter().map(|g| g.0).collect();
    let strictly = e.windows(2).all(|w| w[1] < w[0]);
    result.verdict(
        "thm1.decay_monotone",
        strictly,
        "e(alpha) strictly decreasing along the alpha list",
    );
    let (first, last) = (e[0], e[e.len() - 1]);
    result.verdict(
        "thm1.decay_factor",
        last <= tol.decay_factor * first,
        format!(
            "e(last) / e(first) = {:e} (limit {})",
            last / first,
            tol.decay_factor
        ),
    );
    result.verdict(
        "uniform_bound",
        growth <= tol.uniform_bound,
        format!("C1 = {growth} (limit {})", tol.uniform_bound),
    );
    result.constant("C1", growth);
    result.constant("e_first", first);
    result.constant("e_last", last);
    if let Some(p) = orders.iter().rev().take(3).copied().reduce(f64::min) {
        result.constant("order_min_smallest_alphas", p);
    }
    result
        .notes
        .push("the convergence order is reported only; no rate is asserted".into());
    Ok(result)
}

use rayon::prelude::*;

use super::result::pass_label;
use super::{in_case, trajectory_gap, ExperimentConfig, ExperimentResult, Table, Value};
use crate::constructions::{build_phi, build_u0n_from_phi, BumpProfile, SequenceIndex};
use crate::dynamics::{breaking_time, e_functional, rk4_integrate};
use crate::error::Result;
use crate::operators::{filtered_second_derivative, FilterParam};
use crate::spectral::{derivative, sobolev_norm, Field};

/// Column layout of the counterexample table.
pub const THM2_COLUMNS: &[&str] = &[
    "case_id",
    "n",
    "alpha",
    "t0",
    "d_n",
    "E_gap_norm",
    "taylor_residual",
    "Hs_u0",
    "breakdown_margin",
    "verdict",
];

struct Case {
    index: SequenceIndex,
    control: bool,
}

struct Outcome {
    d: f64,
    e_gap: f64,
    taylor_residual: f64,
    hs_u0: f64,
    margin: f64,
    growth: f64,
    /// `‖α²∂x²(1-α²∂x²)^{-1}(g ∂x f)‖_s` of the data actually used.
    filtered_product: f64,
}

fn run_case(phi: &Field, case: &Case, cfg: &ExperimentConfig) -> Result<Outcome> {
    let s = cfg.norm();
    let alpha = case.index.alpha();
    let data = build_u0n_from_phi(phi, &BumpProfile::default(), case.index, s)?;
    let scale = if cfg.normalize_u0 {
        1.0 / sobolev_norm(&data.u0, s)?
    } else {
        1.0
    };
    let (f, g) = (data.f.scale(scale), data.g.scale(scale));
    let u0 = if case.control {
        f.clone()
    } else {
        data.u0.scale(scale)
    };

    let e_gap_field = e_functional(&u0, alpha)?.sub(&e_functional(&u0, FilterParam::zero())?)?;
    let e_gap = sobolev_norm(&e_gap_field, s)?;
    let hs_u0 = sobolev_norm(&u0, s)?;
    let horizon = breaking_time(&u0)?;
    let filtered_product = sobolev_norm(
        &filtered_second_derivative(&g.mul(&derivative(&f, 1)?)?, alpha)?,
        s,
    )?;

    if cfg.t0 == 0.0 {
        return Ok(Outcome {
            d: 0.0,
            e_gap,
            taylor_residual: 0.0,
            hs_u0,
            margin: f64::INFINITY,
            growth: 1.0,
            filtered_product,
        });
    }

    let solver = cfg.solver(cfg.t0);
    let label = format!(
        "n = {}{}",
        case.index.n(),
        if case.control { " control" } else { "" }
    );
    let ch = rk4_integrate(&u0, alpha, &solver).map_err(|e| in_case(e, &label, alpha))?;
    let burgers = rk4_integrate(&u0, FilterParam::zero(), &solver)
        .map_err(|e| in_case(e, &label, FilterParam::zero()))?;
    let (d, _) = trajectory_gap(&ch, &burgers, s)?;
    let end_gap = ch.final_state().sub(burgers.final_state())?;
    let taylor_residual = sobolev_norm(&end_gap.sub(&e_gap_field.scale(cfg.t0))?, s)?;
    Ok(Outcome {
        d,
        e_gap,
        taylor_residual,
        hs_u0,
        margin: horizon / cfg.t0,
        growth: ch.growth_ratio(s)?.max(burgers.growth_ratio(s)?),
        filtered_product,
    })
}

/// The frequency-localized counterexample: `d_n` stays above a floor `η₀`
/// while `α_n = 2^{-n} → 0`, and collapses once `g_n` is removed.
pub fn run_nonuniform(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let tol = &cfg.tolerances;
    let phi = build_phi(&grid, &BumpProfile::default())?;
    let mut cases = Vec::new();
    for n in cfg.n_range.iter() {
        let index = SequenceIndex::new(n, &grid)?;
        cases.push(Case {
            index,
            control: false,
        });
        cases.push(Case {
            index,
            control: true,
        });
    }
    let outcomes: Vec<Outcome> = cases
        .par_iter()
        .map(|c| run_case(&phi, c, cfg))
        .collect::<Result<_>>()?;

    let full: Vec<(&Case, &Outcome)> = cases
        .iter()
        .zip(&outcomes)
        .filter(|(c, _)| !c.control)
        .collect();
    let control: Vec<f64> = cases
        .iter()
        .zip(&outcomes)
        .filter(|(c, _)| c.control)
        .map(|(_, o)| o.d)
        .collect();
    let lemma_min = full
        .iter()
        .map(|(_, o)| o.filtered_product)
        .fold(f64::INFINITY, f64::min);
    let eta0 = cfg.eta_fraction * cfg.t0 * lemma_min;

    let mut table = Table::new(THM2_COLUMNS);
    let mut floor_ok = eta0 > 0.0;
    let mut no_decay = true;
    let mut previous: Option<f64> = None;
    for (case, out) in cases.iter().zip(&outcomes) {
        let verdict = if case.control {
            Value::from("control")
        } else {
            let above = out.d >= eta0 && eta0 > 0.0;
            let steady = previous.is_none_or(|p| out.d >= tol.floor_ratio * p);
            floor_ok &= above;
            no_decay &= steady;
            previous = Some(out.d);
            pass_label(above && steady)
        };
        let n = case.index.n();
        let id = if case.control {
            format!("n{n:02}-control")
        } else {
            format!("n{n:02}")
        };
        table.push(
            id,
            vec![
                n.into(),
                case.index.alpha().value().into(),
                cfg.t0.into(),
                out.d.into(),
                out.e_gap.into(),
                out.taylor_residual.into(),
                out.hs_u0.into(),
                out.margin.into(),
                verdict,
            ],
        );
    }
    table.sort();

    let mut result = ExperimentResult::new("thm2", table, cfg);
    if full.is_empty() {
        return Ok(result);
    }
    let d_min = full.iter().map(|(_, o)| o.d).fold(f64::INFINITY, f64::min);
    result.verdict(
        "thm2.floor",
        floor_ok,
        format!("min d_n = {d_min:e}, eta0 = {eta0:e}"),
    );
    result.verdict(
        "thm2.no_decay",
        no_decay,
        format!("every d_(n+1) / d_n >= {}", tol.floor_ratio),
    );
    let control_factor = control[0] / control[control.len() - 1];
    result.verdict(
        "thm2.control_decay",
        control.len() >= 2 && control_factor >= tol.control_decay,
        format!(
            "control d_first / d_last = {control_factor:e} (needs >= {})",
            tol.control_decay
        ),
    );
    let margin_min = outcomes
        .iter()
        .map(|o| o.margin)
        .fold(f64::INFINITY, f64::min);
    result.verdict(
        "thm2.pre_breaking",
        margin_min > 1.0,
        format!("smallest breaking-time margin t_break / t0 = {margin_min:e}"),
    );
    let radius = full.iter().map(|(_, o)| o.hs_u0).fold(0.0, f64::max);
    result.verdict(
        "thm2.data_ball",
        radius <= cfg.data_ball_radius,
        format!("max ||u0n||_s = {radius} (R = {})", cfg.data_ball_radius),
    );
    let growth = outcomes.iter().map(|o| o.growth).fold(1.0, f64::max);
    result.verdict(
        "uniform_bound",
        growth <= tol.uniform_bound,
        format!("C1 = {growth} (limit {})", tol.uniform_bound),
    );
    result.constant("eta0", eta0);
    result.constant("lemma23_min", lemma_min);
    result.constant("d_min", d_min);
    if cfg.t0 > 0.0 {
        result.constant("d_over_t0_min", d_min / cfg.t0);
    }
    result.constant("control_decay", control_factor);
    result.constant("breakdown_margin_min", margin_min);
    result.constant("C1", growth);
    result.notes.push(format!(
        "eta0 = {} * t0 * min_n ||alpha_n^2 dxx (1 - alpha_n^2 dxx)^-1 (g_n dx f_n)||_s",
        cfg.eta_fraction
    ));
    result
        .notes
        .push("breakdown_margin = Burgers breaking time of u0 divided by t0".into());
    Ok(result)
}

//! Orchestrated experiments. Each runner validates its configuration, fans
//! independent cases out over the rayon pool and assembles a table whose rows
//! are sorted by case id, so the thread count never changes the output.

mod bench;
mod config;
mod lemmas;
mod nonuniform;
mod result;
mod taylor;
mod zero_filter;

pub use bench::run_operator_bench;
pub use config::{ExperimentConfig, NRange, TaylorData, Tolerances};
pub use lemmas::run_lemma_suite;
pub use nonuniform::{run_nonuniform, THM2_COLUMNS};
pub use result::{ExperimentResult, Fingerprint, Row, Table, Value, Verdict};
pub use taylor::run_taylor_order;
pub use zero_filter::{run_zero_filter_limit, zero_filter_limit};

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::operators::FilterParam;
use crate::spectral::{sobolev_norm, Field, NormSpec};

/// `u / ‖u‖_s`, or `u` itself when it vanishes.
pub(crate) fn normalized(u: &Field, s: NormSpec) -> Result<Field> {
    let norm = sobolev_norm(u, s)?;
    Ok(if norm > 0.0 {
        u.scale(1.0 / norm)
    } else {
        u.clone()
    })
}

/// `max_i ‖a(t_i) - b(t_i)‖_s` and the instant where it is attained.
pub(crate) fn trajectory_gap(a: &Trajectory, b: &Trajectory, s: NormSpec) -> Result<(f64, f64)> {
    debug_assert_eq!(a.times(), b.times());
    let mut best = (0.0, 0.0);
    for ((t, ua), ub) in a.times().iter().zip(a.states()).zip(b.states()) {
        let gap = sobolev_norm(&ua.sub(ub)?, s)?;
        if gap > best.0 {
            best = (gap, *t);
        }
    }
    Ok(best)
}

/// Tags solver failures with the case that produced them.
pub(crate) fn in_case(err: Error, case: &str, alpha: FilterParam) -> Error {
    let context = format!("{case}, alpha = {}", alpha.value());
    match err {
        Error::BreakdownDetected { time, reason } => Error::BreakdownDetected {
            time,
            reason: format!("{context}: {reason}"),
        },
        Error::ResolutionExceeded(msg) => Error::ResolutionExceeded(format!("{context}: {msg}")),
        other => other,
    }
}

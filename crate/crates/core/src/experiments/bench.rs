use std::time::Instant;

use super::result::pass_label;
use super::{ExperimentConfig, ExperimentResult, Table};
use crate::error::Result;
use crate::operators::{green_convolve, helmholtz_inverse, FilterParam, PeriodizedKernel};
use crate::spectral::{Field, Grid};

const BATCH_SECONDS: f64 = 2e-3;

const COLUMNS: &[&str] = &[
    "case_id",
    "N",
    "alpha",
    "multiplier_s",
    "convolution_s",
    "delta",
    "multiplier_ratio",
    "convolution_ratio",
    "verdict",
];

/// Median seconds per call; each repetition times a batch lasting at least
/// `BATCH_SECONDS`.
fn median_seconds(reps: usize, mut f: impl FnMut()) -> f64 {
    let mut batch = 1usize;
    loop {
        let start = Instant::now();
        for _ in 0..batch {
            f();
        }
        if start.elapsed().as_secs_f64() >= BATCH_SECONDS || batch >= 1 << 20 {
            break;
        }
        batch *= 2;
    }
    let mut times: Vec<f64> = (0..reps)
        .map(|_| {
            let start = Instant::now();
            for _ in 0..batch {
                f();
            }
            start.elapsed().as_secs_f64() / batch as f64
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[reps / 2]
}

/// Deterministic field with modes `1 ≤ k ≤ max(1, N/64)`.
fn bench_field(grid: &std::sync::Arc<Grid>) -> Field {
    let l = grid.half_period();
    let top = (grid.len() / 64).max(1);
    Field::from_fn(grid.clone(), move |x| {
        (1..=top)
            .map(|k| {
                let k = k as f64;
                ((k / l) * x + k).cos() / k
            })
            .sum()
    })
}

fn relative_l2(a: &Field, b: &Field) -> f64 {
    let num: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let den: f64 = b.samples().iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Least-squares slope of `log t` against `log N`.
fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let m = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln(), b + y.ln()));
    let (mx, my) = (sx / m, sy / m);
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in points {
        num += (x.ln() - mx) * (y.ln() - my);
        den += (x.ln() - mx).powi(2);
    }
    (den > 0.0).then(|| num / den)
}

/// Median timings of the multiplier and kernel realizations of the Helmholtz
/// inverse. Runs sequentially; timings vary between runs.
pub fn run_operator_bench(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let tol = &cfg.tolerances;
    let reps = cfg.bench_repetitions;
    let mut sizes = cfg.bench_sizes.clone();
    sizes.sort_unstable();
    sizes.dedup();

    let mut table = Table::new(COLUMNS);
    let mut delta_ok = true;
    let mut tiny_ok = true;
    let mut conv_ok = true;
    let mut mult_ok = true;
    let mut slopes = Vec::new();
    for (ai, &a) in cfg.bench_alphas.iter().enumerate() {
        let alpha = FilterParam::new(a)?;
        let mut previous: Option<(usize, f64, f64)> = None;
        let mut mult_points = Vec::new();
        let mut conv_points = Vec::new();
        for &n in &sizes {
            let grid = Grid::new(n, cfg.half_period)?;
            let f = bench_field(&grid);
            let kernel = PeriodizedKernel::new(alpha, grid.clone())?;
            let m = helmholtz_inverse(&f, alpha)?;
            let c = green_convolve(&f, &kernel)?;
            let delta = relative_l2(&c, &m);
            let t_mult = median_seconds(reps, || {
                let g = Field::new(grid.clone(), f.samples().to_vec()).expect("finite");
                std::hint::black_box(helmholtz_inverse(&g, alpha).expect("finite"));
            });
            let t_conv = median_seconds(reps, || {
                std::hint::black_box(green_convolve(&f, &kernel).expect("same grid"));
            });
            mult_points.push((n as f64, t_mult));
            conv_points.push((n as f64, t_conv));

            let (r_mult, r_conv) = match previous {
                Some((pn, pm, pc)) if 2 * pn == n => (Some(t_mult / pm), Some(t_conv / pc)),
                _ => (None, None),
            };
            // Small sizes are dominated by fixed overheads.
            if n >= 512 {
                if let Some(r) = r_conv {
                    let [lo, hi] = tol.convolution_time_window;
                    conv_ok &= (lo..=hi).contains(&r);
                }
                if let Some(r) = r_mult {
                    let [lo, hi] = tol.multiplier_time_window;
                    mult_ok &= (lo..=hi).contains(&r);
                }
            }
            let ok = delta <= tol.operator_delta;
            delta_ok &= ok;
            if n == 64 {
                tiny_ok &= delta <= 1e-10;
            }
            table.push(
                format!("a{ai:02}-N{n:07}"),
                vec![
                    n.into(),
                    a.into(),
                    t_mult.into(),
                    t_conv.into(),
                    delta.into(),
                    r_mult.into(),
                    r_conv.into(),
                    pass_label(ok),
                ],
            );
            previous = Some((n, t_mult, t_conv));
        }
        slopes.push((a, loglog_slope(&mult_points), loglog_slope(&conv_points)));
    }
    table.sort();

    let mut result = ExperimentResult::new("bench", table, cfg);
    if sizes.is_empty() || cfg.bench_alphas.is_empty() {
        return Ok(result);
    }
    result.verdict(
        "bench.delta",
        delta_ok,
        format!(
            "relative L2 gap between the two paths <= {:e}",
            tol.operator_delta
        ),
    );
    if sizes.contains(&64) {
        result.verdict("bench.tiny", tiny_ok, "N = 64 paths agree to 1e-10");
    }
    result.advisory(
        "bench.convolution_scaling",
        conv_ok,
        format!(
            "convolution time ratio per doubling within {:?} for N >= 512",
            tol.convolution_time_window
        ),
    );
    result.advisory(
        "bench.multiplier_scaling",
        mult_ok,
        format!(
            "multiplier time ratio per doubling within {:?} for N >= 512",
            tol.multiplier_time_window
        ),
    );
    for (i, (_, mult, conv)) in slopes.iter().enumerate() {
        if let Some(p) = mult {
            result.constant(&format!("multiplier_slope_a{i:02}"), *p);
        }
        if let Some(p) = conv {
            result.constant(&format!("convolution_slope_a{i:02}"), *p);
        }
    }
    result
        .notes
        .push("timings are medians of wall-clock repetitions and differ between runs".into());
    Ok(result)
}

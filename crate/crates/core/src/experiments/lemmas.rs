use rayon::prelude::*;

use super::result::pass_label;
use super::{ExperimentConfig, ExperimentResult, Table, Value};
use crate::constructions::{
    boundary_tail_ratio, build_phi, build_u0n_from_phi, check_product_support,
    norm_scaling_constants, product_estimate_ratio, BumpProfile, SequenceData, SequenceIndex,
};
use crate::dynamics::f_functional;
use crate::error::Result;
use crate::operators::{filtered_second_derivative, filtered_second_derivative_symbol};
use crate::spectral::{sobolev_norm, spectral_mass_outside, sup_norm, Field, NormSpec};

const COLUMNS: &[&str] = &[
    "case_id", "check", "n", "sigma", "value", "lower", "upper", "verdict",
];

/// One tabulated check; `bounds == None` marks an informational row.
struct Check {
    name: &'static str,
    n: Option<u32>,
    sigma: Option<f64>,
    value: f64,
    bounds: Option<(Option<f64>, Option<f64>)>,
}

impl Check {
    fn info(name: &'static str, n: Option<u32>, sigma: Option<f64>, value: f64) -> Check {
        Check {
            name,
            n,
            sigma,
            value,
            bounds: None,
        }
    }

    fn within(
        name: &'static str,
        n: Option<u32>,
        sigma: Option<f64>,
        value: f64,
        lower: Option<f64>,
        upper: Option<f64>,
    ) -> Check {
        Check {
            name,
            n,
            sigma,
            value,
            bounds: Some((lower, upper)),
        }
    }

    fn passed(&self) -> Option<bool> {
        let (lo, hi) = self.bounds?;
        Some(
            self.value.is_finite()
                && lo.is_none_or(|l| self.value >= l)
                && hi.is_none_or(|h| self.value <= h),
        )
    }
}

/// Per-`n` measurements.
struct Sequence {
    index: SequenceIndex,
    data: SequenceData,
    fn_norms: [f64; 3],
    product_norm: f64,
    filtered_norm: f64,
    fn_support: f64,
    gn_support: f64,
    product_support: f64,
    u0_norm: f64,
    u0_constants: [f64; 4],
    f_value: f64,
}

fn measure(phi: &Field, n: SequenceIndex, s: NormSpec) -> Result<Sequence> {
    let profile = BumpProfile::default();
    let data = build_u0n_from_phi(phi, &profile, n, s)?;
    let center = n.center_frequency();
    let r = profile.support_radius();
    let mut fn_norms = [0.0; 3];
    for (slot, k) in fn_norms.iter_mut().zip(-1..=1) {
        let sigma = k as f64;
        *slot = sobolev_norm(&data.f, s.shifted(sigma))? * n.scale().powf(-sigma);
    }
    let report = check_product_support(n, &data.g, &data.f)?;
    let product_norm = sobolev_norm(&report.product, s)?;
    let filtered = filtered_second_derivative(&report.product, n.alpha())?;
    Ok(Sequence {
        index: n,
        fn_norms,
        product_norm,
        filtered_norm: sobolev_norm(&filtered, s)?,
        fn_support: spectral_mass_outside(&data.f, |xi| (xi.abs() - center).abs() <= r)?,
        gn_support: spectral_mass_outside(&data.g, |xi| xi.abs() <= r)?,
        product_support: report.outside_fraction,
        u0_norm: sobolev_norm(&data.u0, s)?,
        u0_constants: norm_scaling_constants(&data.u0, n, s)?,
        f_value: f_functional(&data.u0, n.alpha(), s)?,
        data,
    })
}

/// Deterministic family of `(u, v)` pairs drawn from `φ`, `f_n`, `g_n` and
/// shifted or rescaled copies.
fn product_family(phi: &Field, seqs: &[Sequence], cases: usize) -> Vec<(Field, Field)> {
    let mut bases = vec![phi.clone()];
    for q in seqs {
        bases.push(q.data.f.clone());
        bases.push(q.data.g.clone());
    }
    let m = bases.len();
    let shift_unit = (phi.samples().len() / 40) as isize;
    (0..cases)
        .map(|c| {
            let u = &bases[c % m];
            let v = &bases[(7 * c + 3) % m];
            let shift = (c / m) as isize * shift_unit;
            let scale = 1.0 + (c % 5) as f64 * 0.5;
            (u.shift_nodes(shift).scale(scale), v.clone())
        })
        .collect()
}

/// The support, scaling and multiplier checks of the explicit data.
pub fn run_lemma_suite(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let s = cfg.norm();
    let tol = &cfg.tolerances;
    let profile = BumpProfile::default();
    let phi = build_phi(&grid, &profile)?;
    let indices: Vec<SequenceIndex> = cfg
        .n_range
        .iter()
        .map(|n| SequenceIndex::new(n, &grid))
        .collect::<Result<_>>()?;
    let seqs: Vec<Sequence> = indices
        .par_iter()
        .map(|&n| measure(&phi, n, s))
        .collect::<Result<_>>()?;

    let mut checks = Vec::new();
    let support = Some(tol.support_mass);
    checks.push(Check::within(
        "phi_support",
        None,
        None,
        spectral_mass_outside(&phi, |xi| xi.abs() <= profile.support_radius())?,
        None,
        support,
    ));
    let phi_max = sup_norm(&phi);
    checks.push(Check::within(
        "phi_boundary",
        None,
        None,
        phi.samples()[0].abs() / phi_max,
        None,
        Some(crate::constructions::BOUNDARY_TOLERANCE),
    ));
    checks.push(Check::info(
        "phi_tail",
        None,
        None,
        boundary_tail_ratio(&phi),
    ));
    checks.push(Check::within(
        "phi_origin",
        None,
        None,
        phi.samples()[grid.len() / 2],
        Some(0.5 / (2.0 * std::f64::consts::PI)),
        Some(1.0 / (2.0 * std::f64::consts::PI)),
    ));

    let phi_norm = sobolev_norm(&phi, s)?;
    let band = tol.scaling_band;
    let [ratio_lo, ratio_hi] = tol.filtered_ratio_window;
    let center_value = 289.0 / 433.0;
    let u0_min = seqs.iter().map(|q| q.u0_norm).fold(f64::INFINITY, f64::min);
    for (i, q) in seqs.iter().enumerate() {
        let n = Some(q.index.n());
        checks.push(Check::within(
            "fn_support",
            n,
            None,
            q.fn_support,
            None,
            support,
        ));
        checks.push(Check::within(
            "gn_support",
            n,
            None,
            q.gn_support,
            None,
            support,
        ));
        checks.push(Check::within(
            "product_support",
            n,
            None,
            q.product_support,
            None,
            support,
        ));
        for (k, &value) in q.fn_norms.iter().enumerate() {
            let reference = seqs[0].fn_norms[k];
            checks.push(Check::within(
                "fn_scaling",
                n,
                Some(s.index() + k as f64 - 1.0),
                value,
                Some(reference / band),
                Some(reference * band),
            ));
        }
        let amplitude = q.index.scale().powf(-s.index()) * phi_max;
        checks.push(Check::within(
            "fn_sup",
            n,
            None,
            sup_norm(&q.data.f),
            None,
            Some(amplitude * (1.0 + 1e-6)),
        ));
        checks.push(Check::within(
            "gn_scaling",
            n,
            Some(s.index()),
            sobolev_norm(&q.data.g, s)? * q.index.scale() / phi_norm,
            Some(1.0 - 1e-12),
            Some(1.0 + 1e-12),
        ));
        let (lo, hi) = match i.checked_sub(1) {
            Some(p) => (seqs[p].product_norm / band, seqs[p].product_norm * band),
            None => (f64::MIN_POSITIVE, f64::INFINITY),
        };
        checks.push(Check::within(
            "product_norm",
            n,
            Some(s.index()),
            q.product_norm,
            Some(lo),
            (hi.is_finite()).then_some(hi),
        ));
        checks.push(Check::within(
            "filtered_ratio",
            n,
            Some(s.index()),
            q.filtered_norm / q.product_norm,
            Some(ratio_lo),
            Some(ratio_hi),
        ));
        checks.push(Check::within(
            "filtered_center",
            n,
            None,
            filtered_second_derivative_symbol(q.index.alpha(), q.index.center_frequency()).abs(),
            Some(center_value - 1e-14),
            Some(center_value + 1e-14),
        ));
        checks.push(Check::within(
            "u0n_norm",
            n,
            Some(s.index()),
            q.u0_norm,
            None,
            Some(2.0 * u0_min),
        ));
        for (k, &c) in q.u0_constants.iter().enumerate() {
            checks.push(Check::info(
                "u0n_constant",
                n,
                Some(s.index() + k as f64 - 1.0),
                c,
            ));
        }
        checks.push(Check::info("F_functional", n, Some(s.index()), q.f_value));
    }

    let pairs = product_family(&phi, &seqs, cfg.product_cases);
    let ratios: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|(u, v)| product_estimate_ratio(u, v, s))
        .collect::<Result<_>>()?;
    let product_max = ratios.iter().flatten().copied().fold(0.0, f64::max);
    if !pairs.is_empty() {
        checks.push(Check::within(
            "product_estimate",
            None,
            Some(s.index()),
            product_max,
            None,
            Some(tol.product_ratio_max),
        ));
    }
    let zero = Field::zeros(grid.clone());
    let zero_norm = [-1.0, 0.0, 1.0]
        .iter()
        .map(|&k| sobolev_norm(&zero, s.shifted(k)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(sup_norm(&zero), f64::max);
    checks.push(Check::within(
        "zero_field",
        None,
        None,
        zero_norm,
        Some(0.0),
        Some(0.0),
    ));

    let mut table = Table::new(COLUMNS);
    for c in &checks {
        let n_label = c.n.map_or("-".to_string(), |n| format!("n{n:02}"));
        let sigma_label = c.sigma.map_or("-".to_string(), |v| format!("s{v}"));
        let (lower, upper) = c.bounds.unwrap_or((None, None));
        table.push(
            format!("{}/{n_label}/{sigma_label}", c.name),
            vec![
                c.name.into(),
                c.n.map_or(Value::Empty, Value::from),
                c.sigma.into(),
                c.value.into(),
                lower.into(),
                upper.into(),
                c.passed().map_or(Value::from("info"), pass_label),
            ],
        );
    }
    table.sort();

    let mut result = ExperimentResult::new("lemmas", table, cfg);
    let group = |names: &[&str]| {
        checks
            .iter()
            .filter(|c| names.contains(&c.name))
            .all(|c| c.passed().unwrap_or(true))
    };
    result.verdict(
        "lemma22.scaling",
        group(&["fn_scaling", "gn_scaling", "fn_sup"]),
        format!("||f_n||_sigma 2^(-n(sigma-s)) within x{band} of its first value"),
    );
    result.verdict(
        "lemma22.product_floor",
        group(&["product_norm"]),
        format!("||g_n dx f_n||_s > 0 with n-to-n ratio within x{band}"),
    );
    result.verdict(
        "lemma23.ratio",
        group(&["filtered_ratio", "filtered_center"]),
        format!("filtered-product ratio within [{ratio_lo}, {ratio_hi}]"),
    );
    result.verdict(
        "support",
        group(&[
            "phi_support",
            "phi_boundary",
            "phi_origin",
            "fn_support",
            "gn_support",
            "product_support",
        ]),
        format!("external spectral mass <= {:e}", tol.support_mass),
    );
    result.verdict(
        "u0n.bounded",
        group(&["u0n_norm"]),
        "max_n ||u0n||_s <= 2 min_n ||u0n||_s",
    );
    result.verdict(
        "lemma21.product_estimate",
        group(&["product_estimate"]),
        format!(
            "max product ratio {product_max} over {} cases (limit {})",
            pairs.len(),
            tol.product_ratio_max
        ),
    );
    result.verdict(
        "zero_field",
        group(&["zero_field"]),
        "all norms of 0 vanish",
    );

    let ratios: Vec<f64> = seqs
        .iter()
        .map(|q| q.filtered_norm / q.product_norm)
        .collect();
    if let (Some(lo), Some(hi)) = (
        ratios.iter().copied().reduce(f64::min),
        ratios.iter().copied().reduce(f64::max),
    ) {
        result.constant("lemma23_ratio_min", lo);
        result.constant("lemma23_ratio_max", hi);
    }
    result.constant("lemma23_center", center_value);
    result.constant("product_estimate_max", product_max);
    result.constant("phi_tail_ratio", boundary_tail_ratio(&phi));
    if let Some(fmax) = seqs.iter().map(|q| q.f_value).reduce(f64::max) {
        result.constant("F_max", fmax);
    }
    for k in 0..4 {
        if let Some(c) = seqs.iter().map(|q| q.u0_constants[k]).reduce(f64::max) {
            result.constant(&format!("u0n_constant_k{}", k as i32 - 1), c);
        }
    }
    result.notes.push(
        "phi_tail is the largest |phi| over the outer eighth of the cell relative to max |phi|"
            .into(),
    );
    Ok(result)
}

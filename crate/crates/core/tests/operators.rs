use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zerofilter_core::constructions::{build_phi, BumpProfile};
use zerofilter_core::operators::{
    filtered_second_derivative_symbol, green_convolve, helmholtz_inverse, nonlocal_ch_terms,
    FilterParam, PeriodizedKernel,
};
use zerofilter_core::spectral::{sobolev_norm, Field, Grid, NormSpec};

/// `‖a - b‖ / ‖reference‖` in the discrete L² norm.
fn l2_rel(a: &Field, b: &Field, reference: &Field) -> f64 {
    let num: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    let den: f64 = reference.samples().iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Real field with random modes `1 ≤ |k| ≤ kmax`.
fn random_field(grid: &Arc<Grid>, kmax: usize, rng: &mut ChaCha8Rng) -> Field {
    let l = grid.half_period();
    let modes: Vec<(f64, f64, f64)> = (1..=kmax)
        .map(|k| {
            (
                k as f64 / l,
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    let mean = rng.random_range(-1.0..1.0);
    Field::from_fn(grid.clone(), move |x| {
        mean + modes
            .iter()
            .map(|(xi, a, b)| a * (xi * x).cos() + b * (xi * x).sin())
            .sum::<f64>()
    })
}

#[test]
fn multiplier_and_kernel_paths_agree() {
    let grid = Grid::new(1024, 16.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let fields: Vec<Field> = (0..50)
        .map(|_| random_field(&grid, grid.len() / 64, &mut rng))
        .collect();
    for a in [0.5, 0.25, 0.1, 0.01] {
        let alpha = FilterParam::new(a).unwrap();
        let kernel = PeriodizedKernel::new(alpha, grid.clone()).unwrap();
        let worst = fields
            .iter()
            .map(|f| {
                let m = helmholtz_inverse(f, alpha).unwrap();
                let c = green_convolve(f, &kernel).unwrap();
                l2_rel(&c, &m, f)
            })
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "alpha = {a}: {worst:e}");
    }
}

#[test]
fn bump_convolution_matches_multiplier() {
    let grid = Grid::new(1024, 16.0).unwrap();
    let phi = build_phi(&grid, &BumpProfile::default()).unwrap();
    let alpha = FilterParam::new(0.1).unwrap();
    let kernel = PeriodizedKernel::new(alpha, grid).unwrap();
    let c = green_convolve(&phi, &kernel).unwrap();
    let m = helmholtz_inverse(&phi, alpha).unwrap();
    assert!(l2_rel(&c, &m, &m) <= 1e-9);
}

#[test]
fn nonlocal_terms_scale_quadratically() {
    let grid = Grid::new(512, 16.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let u = random_field(&grid, 8, &mut rng);
        let lambda = rng.random_range(-3.0..3.0);
        for a in [0.1, 0.5] {
            let alpha = FilterParam::new(a).unwrap();
            let base = nonlocal_ch_terms(&u, alpha).unwrap();
            let scaled = nonlocal_ch_terms(&u.scale(lambda), alpha).unwrap();
            let scale = base.samples().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            for (x, y) in scaled.samples().iter().zip(base.samples()) {
                assert!((x - lambda * lambda * y).abs() <= 1e-10 * scale.max(1.0));
            }
        }
    }
}

proptest! {
    #[test]
    fn filtered_gain_is_at_most_one(a in 0.0f64..0.999, xi in -1e4f64..1e4) {
        let alpha = FilterParam::new(a).unwrap();
        let g = filtered_second_derivative_symbol(alpha, xi);
        prop_assert!(g.abs() <= 1.0);
    }

    #[test]
    fn helmholtz_smooths(seed in 0u64..1000, a in 0.05f64..0.95, s in 0.0f64..3.0) {
        let grid = Grid::new(256, 16.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_field(&grid, 40, &mut rng);
        let alpha = FilterParam::new(a).unwrap();
        let h = helmholtz_inverse(&f, alpha).unwrap();
        let spec = NormSpec::new(s).unwrap();
        let fs = sobolev_norm(&f, spec).unwrap();
        prop_assert!(sobolev_norm(&h, spec).unwrap() <= fs * (1.0 + 1e-12));
        prop_assert!(sobolev_norm(&h, spec.shifted(2.0)).unwrap() <= fs / (a * a) * (1.0 + 1e-12));
    }
}

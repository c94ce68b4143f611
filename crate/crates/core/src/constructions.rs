//! The explicit data of the counterexample: the cut-off bump `φ`, the
//! high-frequency family `f_n = 2^{-ns} φ sin(ξ_n x)` with `ξ_n = (17/12) 2^n`,
//! the low-frequency family `g_n = 2^{-n} φ`, and `u0ⁿ = f_n + g_n`.
//!
//! Every construction is built on the frequency lattice, so spectral supports
//! are exact up to rounding.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operators::FilterParam;
use crate::spectral::{
    derivative, sobolev_norm, spectral_mass_outside, sup_norm, Field, Grid, NormSpec,
};

/// Largest admissible lattice spacing `1/L`.
pub const MAX_FREQUENCY_STEP: f64 = 1.0 / 16.0;

/// External spectral mass tolerated by the support checks.
pub const SUPPORT_TOLERANCE: f64 = 1e-12;

/// Largest admissible `|φ(±πL)| / max|φ|`.
pub const BOUNDARY_TOLERANCE: f64 = 1e-8;

/// Ratio of the center frequency to `2^n`.
pub const CENTER_RATIO: f64 = 17.0 / 12.0;

/// The even cut-off `φ̂`: one on `|ξ| ≤ flat`, zero on `|ξ| ≥ support`, joined
/// by the smooth step `S(t) = h(1-t) / (h(t) + h(1-t))`, `h(t) = e^{-1/t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProfile {
    flat_radius: f64,
    support_radius: f64,
}

impl Default for BumpProfile {
    fn default() -> Self {
        BumpProfile {
            flat_radius: 0.25,
            support_radius: 0.5,
        }
    }
}

fn smooth_step_h(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

impl BumpProfile {
    pub fn new(flat_radius: f64, support_radius: f64) -> Result<BumpProfile> {
        if !(flat_radius > 0.0 && support_radius > flat_radius && support_radius.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bump radii must satisfy 0 < flat < support, got {flat_radius}, {support_radius}"
            )));
        }
        Ok(BumpProfile {
            flat_radius,
            support_radius,
        })
    }

    pub fn flat_radius(&self) -> f64 {
        self.flat_radius
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// `φ̂(ξ)`.
    pub fn value(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a <= self.flat_radius {
            1.0
        } else if a >= self.support_radius {
            0.0
        } else {
            let t = (a - self.flat_radius) / (self.support_radius - self.flat_radius);
            let (h0, h1) = (smooth_step_h(t), smooth_step_h(1.0 - t));
            h1 / (h0 + h1)
        }
    }
}

/// The index `n` of the sequence, with `α_n = 2^{-n}` and center frequency
/// `(17/12) 2^n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceIndex {
    n: u32,
}

impl SequenceIndex {
    /// Rejects `n` unless `(17/12) 2^n + 1` lies inside the dealiased band of `grid`.
    pub fn new(n: u32, grid: &Grid) -> Result<SequenceIndex> {
        if n == 0 || n > 52 {
            return Err(Error::InvalidParameter(format!(
                "sequence index must lie in 1..=52, got {n}"
            )));
        }
        let index = SequenceIndex { n };
        index.check_grid(grid)?;
        Ok(index)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn scale(&self) -> f64 {
        (2.0_f64).powi(self.n as i32)
    }

    pub fn alpha(&self) -> FilterParam {
        FilterParam::new(1.0 / self.scale()).expect("2^-n lies in (0, 1)")
    }

    pub fn center_frequency(&self) -> f64 {
        CENTER_RATIO * self.scale()
    }

    /// Largest `n` whose annulus fits the dealiased band of `grid`.
    pub fn max_for(grid: &Grid) -> u32 {
        (1..=52)
            .take_while(|&n| SequenceIndex { n }.check_grid(grid).is_ok())
            .last()
            .unwrap_or(0)
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        let band = grid.dealiased_band();
        let top = self.center_frequency() + 1.0;
        if top < band {
            Ok(())
        } else {
            Err(Error::ResolutionExceeded(format!(
                "n = {}: center frequency + 1 = {top} must stay below the dealiased band {band} \
                 (N = {}, L = {})",
                self.n,
                grid.len(),
                grid.half_period()
            )))
        }
    }
}

/// `φ`, built from `φ̂` on the frequency lattice: `c_k = φ̂(ξ_k) / (2πL)`.
pub fn build_phi(grid: &Arc<Grid>, profile: &BumpProfile) -> Result<Field> {
    check_lattice(grid, profile)?;
    let norm = 1.0 / grid.period();
    let spec: Vec<Complex64> = grid
        .frequencies()
        .into_iter()
        .map(|xi| Complex64::new(profile.value(xi) * norm, 0.0))
        .collect();
    let phi = Field::from_spectrum(grid.clone(), spec)?;
    let ratio = phi.samples()[0].abs() / sup_norm(&phi);
    if ratio.is_nan() || ratio > BOUNDARY_TOLERANCE {
        return Err(Error::PeriodizationError { ratio });
    }
    Ok(phi)
}

fn check_lattice(grid: &Grid, profile: &BumpProfile) -> Result<()> {
    let step = grid.frequency_resolution();
    if step > MAX_FREQUENCY_STEP {
        return Err(Error::ResolutionExceeded(format!(
            "frequency step 1/L = {step} exceeds {MAX_FREQUENCY_STEP}; increase L"
        )));
    }
    if profile.support_radius() >= grid.nyquist_frequency() {
        return Err(Error::ResolutionExceeded(
            "bump support reaches the Nyquist frequency".into(),
        ));
    }
    Ok(())
}

/// `max |φ|` over the outer eighth of the cell on each side, relative to
/// `max |φ|`: how much of the bump the periodic cell actually truncates.
pub fn boundary_tail_ratio(phi: &Field) -> f64 {
    let n = phi.samples().len();
    let edge = n / 16;
    let s = phi.samples();
    let tail = s[..edge]
        .iter()
        .chain(&s[n - edge..])
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    tail / sup_norm(phi)
}

/// `f_n = 2^{-ns} φ(x) sin(ξ_n x)`, built from the shifted cut-off:
/// `f̂_n(ξ) = 2^{-ns} (φ̂(ξ - ξ_n) - φ̂(ξ + ξ_n)) / (2i)`.
pub fn build_fn(
    grid: &Arc<Grid>,
    profile: &BumpProfile,
    n: SequenceIndex,
    s: NormSpec,
) -> Result<Field> {
    check_lattice(grid, profile)?;
    n.check_grid(grid)?;
    let center = n.center_frequency();
    let amplitude = n.scale().powf(-s.index()) / grid.period();
    let spec: Vec<Complex64> = grid
        .frequencies()
        .into_iter()
        .map(|xi| {
            let odd = profile.value(xi - center) - profile.value(xi + center);
            Complex64::new(0.0, -0.5 * amplitude * odd)
        })
        .collect();
    let f = Field::from_spectrum(grid.clone(), spec)?;
    let r = profile.support_radius();
    let outside = spectral_mass_outside(&f, |xi| (xi.abs() - center).abs() <= r)?;
    if outside > SUPPORT_TOLERANCE {
        return Err(Error::ResolutionExceeded(format!(
            "f_{} leaks {outside:e} of its spectral mass outside its annulus",
            n.n()
        )));
    }
    Ok(f)
}

/// `g_n = 2^{-n} φ`.
pub fn build_gn(phi: &Field, n: SequenceIndex) -> Field {
    phi.scale(1.0 / n.scale())
}

/// The pieces of the initial datum `u0ⁿ = f_n + g_n`.
#[derive(Debug, Clone)]
pub struct SequenceData {
    pub index: SequenceIndex,
    pub f: Field,
    pub g: Field,
    pub u0: Field,
}

/// `u0ⁿ = f_n + g_n` together with its components.
pub fn build_u0n(
    grid: &Arc<Grid>,
    profile: &BumpProfile,
    n: SequenceIndex,
    s: NormSpec,
) -> Result<SequenceData> {
    let phi = build_phi(grid, profile)?;
    build_u0n_from_phi(&phi, profile, n, s)
}

/// As [`build_u0n`], reusing an already built `φ`.
pub fn build_u0n_from_phi(
    phi: &Field,
    profile: &BumpProfile,
    n: SequenceIndex,
    s: NormSpec,
) -> Result<SequenceData> {
    let f = build_fn(phi.grid(), profile, n, s)?;
    let g = build_gn(phi, n);
    let u0 = f.add(&g)?;
    Ok(SequenceData { index: n, f, g, u0 })
}

/// `‖u0ⁿ‖_{H^{s+k}} / 2^{kn}` for `k = -1, 0, 1, 2`.
pub fn norm_scaling_constants(u0: &Field, n: SequenceIndex, s: NormSpec) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (slot, k) in out.iter_mut().zip(-1..=2) {
        let norm = sobolev_norm(u0, s.shifted(k as f64))?;
        *slot = norm / n.scale().powi(k);
    }
    Ok(out)
}

/// Outcome of [`check_product_support`].
#[derive(Debug, Clone)]
pub struct SupportReport {
    /// `g ∂x f`.
    pub product: Field,
    pub outside_fraction: f64,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

impl SupportReport {
    pub fn passes(&self) -> bool {
        self.outside_fraction <= SUPPORT_TOLERANCE
    }
}

/// Spectral mass of `g ∂x f` outside `ξ_n - 1 ≤ |ξ| ≤ ξ_n + 1`.
pub fn check_product_support(n: SequenceIndex, g: &Field, f: &Field) -> Result<SupportReport> {
    let product = g.mul(&derivative(f, 1)?)?;
    let center = n.center_frequency();
    let (inner_radius, outer_radius) = (center - 1.0, center + 1.0);
    let outside_fraction = spectral_mass_outside(&product, |xi| {
        (inner_radius..=outer_radius).contains(&xi.abs())
    })?;
    Ok(SupportReport {
        product,
        outside_fraction,
        inner_radius,
        outer_radius,
    })
}

/// `‖uv‖_s / (‖u‖_s ‖v‖_∞ + ‖v‖_s ‖u‖_∞)`, or `None` when the denominator vanishes.
pub fn product_estimate_ratio(u: &Field, v: &Field, s: NormSpec) -> Result<Option<f64>> {
    let denom = sobolev_norm(u, s)? * sup_norm(v) + sobolev_norm(v, s)? * sup_norm(u);
    if denom == 0.0 {
        return Ok(None);
    }
    Ok(Some(sobolev_norm(&u.mul(v)?, s)? / denom))
}

/// `φ(0)` in closed form: the smooth step integrates to half its width.
pub fn phi_at_origin(profile: &BumpProfile) -> f64 {
    (profile.flat_radius() + profile.support_radius()) / (2.0 * PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small_grid() -> Arc<Grid> {
        Grid::new(4096, 16.0).unwrap()
    }

    #[test]
    fn profile_values() {
        let p = BumpProfile::default();
        assert_eq!(p.value(0.2), 1.0);
        assert_eq!(p.value(-0.25), 1.0);
        assert_eq!(p.value(0.6), 0.0);
        assert_eq!(p.value(0.5), 0.0);
        assert!((p.value(0.375) - 0.5).abs() < 1e-15);
        assert!(BumpProfile::new(0.5, 0.25).is_err());
    }

    proptest! {
        #[test]
        fn profile_is_even_and_bounded(xi in -1.0f64..1.0) {
            let p = BumpProfile::default();
            let v = p.value(xi);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, p.value(-xi));
        }

        #[test]
        fn profile_is_monotone_in_modulus(a in 0.0f64..0.6, b in 0.0f64..0.6) {
            let p = BumpProfile::default();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(p.value(lo) >= p.value(hi));
        }

        #[test]
        fn step_halves_sum_to_one(t in 0.0f64..0.25) {
            let p = BumpProfile::default();
            let sum = p.value(0.25 + t) + p.value(0.5 - t);
            prop_assert!((sum - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn phi_origin_value() {
        let g = small_grid();
        let phi = build_phi(&g, &BumpProfile::default()).unwrap();
        let centre = phi.samples()[g.len() / 2];
        assert!((centre - 0.75 / (2.0 * PI)).abs() < 1e-15);
        assert_eq!(phi_at_origin(&BumpProfile::default()), 0.75 / (2.0 * PI));
        assert!((0.0796..=0.1592).contains(&centre));
    }

    #[test]
    fn phi_is_even() {
        let g = small_grid();
        let phi = build_phi(&g, &BumpProfile::default()).unwrap();
        let s = phi.samples();
        let n = s.len();
        let scale = sup_norm(&phi);
        for j in 1..n / 2 {
            assert!((s[n / 2 + j] - s[n / 2 - j]).abs() <= 1e-12 * scale);
        }
        assert!(s[0].abs() <= BOUNDARY_TOLERANCE * scale);
        let tail = boundary_tail_ratio(&phi);
        assert!(tail > 0.0 && tail < 0.05);
    }

    #[test]
    fn phi_needs_fine_lattice() {
        let g = Grid::new(1024, 8.0).unwrap();
        assert!(matches!(
            build_phi(&g, &BumpProfile::default()),
            Err(Error::ResolutionExceeded(_))
        ));
    }

    #[test]
    fn sequence_index_band() {
        let g = Grid::new(32768, 16.0).unwrap();
        for n in 4..=8 {
            let idx = SequenceIndex::new(n, &g).unwrap();
            assert_eq!(idx.alpha().value(), (0.5f64).powi(n as i32));
            assert_eq!(idx.center_frequency(), 17.0 / 12.0 * f64::from(1u32 << n));
        }
        match SequenceIndex::new(9, &g) {
            Err(Error::ResolutionExceeded(msg)) => assert!(msg.contains("n = 9")),
            other => panic!("expected rejection, got {other:?}"),
        }
        assert_eq!(SequenceIndex::max_for(&g), 8);
        assert!(SequenceIndex::new(0, &g).is_err());
    }

    #[test]
    fn gn_is_an_exact_multiple() {
        let g = small_grid();
        let s = NormSpec::new(2.0).unwrap();
        let phi = build_phi(&g, &BumpProfile::default()).unwrap();
        let base = sobolev_norm(&phi, s).unwrap();
        for n in 1..=5 {
            let idx = SequenceIndex::new(n, &g).unwrap();
            let gn = build_gn(&phi, idx);
            let norm = sobolev_norm(&gn, s).unwrap();
            assert!((norm - base / idx.scale()).abs() <= 1e-14 * base);
            assert_eq!(
                gn.samples()[g.len() / 2],
                phi.samples()[g.len() / 2] / idx.scale()
            );
        }
    }

    #[test]
    fn fn_support_and_sup_bound() {
        let g = small_grid();
        let p = BumpProfile::default();
        let s = NormSpec::new(2.0).unwrap();
        let phi = build_phi(&g, &p).unwrap();
        for n in 1..=5 {
            let idx = SequenceIndex::new(n, &g).unwrap();
            let f = build_fn(&g, &p, idx, s).unwrap();
            let c = idx.center_frequency();
            let out = spectral_mass_outside(&f, |xi| (xi.abs() - c).abs() <= 0.5).unwrap();
            assert!(out <= SUPPORT_TOLERANCE);
            let bound = idx.scale().powf(-2.0) * sup_norm(&phi);
            assert!(sup_norm(&f) <= bound * (1.0 + 1e-6));
        }
    }

    #[test]
    fn fn_matches_modulated_bump_near_origin() {
        // Near the origin the lattice construction agrees with the pointwise
        // product φ sin(ξ_n x) up to the images of the slowly decaying tail.
        let g = small_grid();
        let p = BumpProfile::default();
        let s = NormSpec::new(2.0).unwrap();
        let phi = build_phi(&g, &p).unwrap();
        let idx = SequenceIndex::new(4, &g).unwrap();
        let f = build_fn(&g, &p, idx, s).unwrap();
        let amp = idx.scale().powi(-2);
        let nodes = g.nodes();
        let scale = sup_norm(&f);
        let central = (3 * g.len() / 8)..(5 * g.len() / 8);
        for (j, x) in nodes
            .iter()
            .enumerate()
            .take(central.end)
            .skip(central.start)
        {
            let pointwise = amp * phi.samples()[j] * (idx.center_frequency() * x).sin();
            assert!((f.samples()[j] - pointwise).abs() <= 2e-3 * scale);
        }
    }

    #[test]
    fn product_support_is_annular() {
        let g = small_grid();
        let p = BumpProfile::default();
        let s = NormSpec::new(2.0).unwrap();
        let phi = build_phi(&g, &p).unwrap();
        for n in [4, 5] {
            let data = build_u0n_from_phi(&phi, &p, SequenceIndex::new(n, &g).unwrap(), s).unwrap();
            let report = check_product_support(data.index, &data.g, &data.f).unwrap();
            assert!(report.passes(), "n = {n}: {}", report.outside_fraction);
            let unscaled = check_product_support(data.index, &phi, &data.f).unwrap();
            assert!(unscaled.passes());
        }
    }

    #[test]
    fn u0n_components() {
        let g = small_grid();
        let p = BumpProfile::default();
        let s = NormSpec::new(2.0).unwrap();
        let data = build_u0n(&g, &p, SequenceIndex::new(3, &g).unwrap(), s).unwrap();
        let diff = data.u0.sub(&data.f).unwrap();
        for (a, b) in diff.samples().iter().zip(data.g.samples()) {
            assert!((a - b).abs() <= f64::EPSILON * 0.25);
        }
        let c = norm_scaling_constants(&data.u0, data.index, s).unwrap();
        assert!(c.iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn product_ratio_degenerate() {
        let g = small_grid();
        let s = NormSpec::new(2.0).unwrap();
        let z = Field::zeros(g.clone());
        assert_eq!(product_estimate_ratio(&z, &z, s).unwrap(), None);
        let one = Field::constant(g, 1.0);
        let r = product_estimate_ratio(&one, &one, s).unwrap().unwrap();
        assert!((r - 0.5).abs() < 1e-12);
    }
}

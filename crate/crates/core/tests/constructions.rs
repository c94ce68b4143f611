use std::sync::Arc;

use zerofilter_core::constructions::{
    build_phi, build_u0n_from_phi, check_product_support, phi_at_origin, BumpProfile, SequenceIndex,
};
use zerofilter_core::operators::filtered_second_derivative;
use zerofilter_core::spectral::{sobolev_norm, sup_norm, Grid, NormSpec};

/// NumPy evaluation at N = 32768, L = 16: `(n, ‖g_n ∂x f_n‖_{H^2}, filtered ratio)`.
const FROZEN: [(u32, f64, f64); 5] = [
    (4, 0.06730560801610014, 0.6676523062687673),
    (5, 0.06718340682575591, 0.6674956463298555),
    (6, 0.06714938162031309, 0.6674487379839431),
    (7, 0.0671426093284244, 0.6674408261483912),
    (8, 0.06714004911363147, 0.6674369367402917),
];

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs()
}

#[test]
fn bump_matches_independent_evaluation() {
    let grid = Grid::new(32768, 16.0).unwrap();
    let profile = BumpProfile::default();
    let phi = build_phi(&grid, &profile).unwrap();
    let s = NormSpec::new(2.0).unwrap();
    assert!(close(sup_norm(&phi), 0.1193662073189215, 1e-12));
    assert!(close(sup_norm(&phi), phi_at_origin(&profile), 1e-12));
    assert!(close(
        sobolev_norm(&phi, s).unwrap(),
        0.34905748966237277,
        1e-12
    ));
}

#[test]
fn product_norms_and_filtered_ratios() {
    let grid: Arc<Grid> = Grid::new(32768, 16.0).unwrap();
    let profile = BumpProfile::default();
    let phi = build_phi(&grid, &profile).unwrap();
    let s = NormSpec::new(2.0).unwrap();
    for (n, norm, ratio) in FROZEN {
        let idx = SequenceIndex::new(n, &grid).unwrap();
        let data = build_u0n_from_phi(&phi, &profile, idx, s).unwrap();
        let report = check_product_support(idx, &data.g, &data.f).unwrap();
        assert!(report.passes(), "n = {n}: {:e}", report.outside_fraction);
        let p = sobolev_norm(&report.product, s).unwrap();
        let filtered = filtered_second_derivative(&report.product, idx.alpha()).unwrap();
        let q = sobolev_norm(&filtered, s).unwrap() / p;
        assert!(close(p, norm, 1e-10), "n = {n}: {p}");
        assert!(close(q, ratio, 1e-10), "n = {n}: {q}");
    }
}

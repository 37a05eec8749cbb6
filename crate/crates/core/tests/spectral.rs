use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rellich_core::spectral::{
    assemble_form, best_constant_estimate, min_generalized_rayleigh, BestConstTarget, SplineBasis, SymBand,
    DEFAULT_FORM_ORDER,
};

fn random_spd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &m * m.transpose() + DMatrix::identity(n, n) * floor
}

fn to_band(m: &DMatrix<f64>) -> SymBand {
    let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
    SymBand::from_dense(&rows)
}

fn dense_min(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let l = b.clone().cholesky().expect("B spd").l();
    let li = l.clone().try_inverse().expect("invertible");
    let c = &li * a * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    SymmetricEigen::new(c).eigenvalues.min()
}

#[test]
fn inverse_iteration_matches_dense_eigensolver() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..8 {
        let a = random_spd(&mut rng, 20, 0.5);
        let b = random_spd(&mut rng, 20, 1.0);
        let want = dense_min(&a, &b);
        let got = min_generalized_rayleigh(&to_band(&a), &to_band(&b), 0.0).unwrap();
        assert!((got.lambda - want).abs() <= 1e-10 * want.abs(), "{} vs {want}", got.lambda);
        // returned vector is an eigenvector of the original pencil
        let v = nalgebra::DVector::from_vec(got.vector.clone());
        let r = &a * &v - (&b * &v) * got.lambda;
        assert!(r.norm() <= 1e-8 * (&a * &v).norm());
    }
}

#[test]
fn banded_forms_match_dense_solve() {
    let basis = SplineBasis::geometric(1e-2, 1e2, 30).unwrap();
    let k = assemble_form(&basis, 1, 2.0, DEFAULT_FORM_ORDER).unwrap().matrix;
    let m = assemble_form(&basis, 0, 0.0, DEFAULT_FORM_ORDER).unwrap().matrix;
    let n = basis.len();
    let a = DMatrix::from_fn(n, n, |i, j| k.get(i, j));
    let b = DMatrix::from_fn(n, n, |i, j| m.get(i, j));
    let want = dense_min(&a, &b);
    let got = min_generalized_rayleigh(&k, &m, 0.9 * want).unwrap().lambda;
    assert!((got - want).abs() <= 1e-9 * want, "{got} vs {want}");
    // ∫|g′|² r² over ∫|g|²: Hardy with t = 0, infimum 1/4 + O((π / ln(R/a))²)
    assert!(got > 0.25 && got < 0.25 + 1.2 * (std::f64::consts::PI / 1e4f64.ln()).powi(2), "{got}");
}

#[test]
fn nested_sweeps_decrease_toward_the_constant() {
    let t = 2.0 * 3f64.sqrt() - 2.0;
    for target in [BestConstTarget::Rellich1d { t }, BestConstTarget::Laststep, BestConstTarget::InducedC3] {
        let tab = best_constant_estimate(target, 1e-4, 1e4, &[20, 40, 80]).unwrap();
        assert!(tab.monotone(), "{tab:?}");
        assert!(tab.strict(), "{tab:?}");
        assert_eq!(tab.from_above, !matches!(target, BestConstTarget::InducedC3));
    }
}

#[test]
fn wider_domains_approach_from_the_stated_side() {
    let narrow = best_constant_estimate(BestConstTarget::Hardy1d { t: 0.0 }, 1e-3, 1e3, &[100]).unwrap();
    let wide = best_constant_estimate(BestConstTarget::Hardy1d { t: 0.0 }, 1e-10, 1e10, &[200]).unwrap();
    assert!(wide.final_row().estimate < narrow.final_row().estimate);
    assert!(wide.final_row().gap > 0.0 && wide.final_row().gap < 0.03);
}

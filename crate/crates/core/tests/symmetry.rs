mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use symou::gramian::GramianSet;
use symou::symmetry::{self, check_reversibility, OperatorBundle, DEFAULT_TOL};
use symou::{Error, OUModel};

#[test]
fn jordan_block_is_not_symmetric() {
    let m = OUModel::dense(
        DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]),
        DMatrix::identity(2, 2),
    )
    .unwrap();
    let r = check_reversibility(&m, DEFAULT_TOL);
    assert!(!r.is_symmetric && !r.semigroup_symmetric);
    assert!((r.commutator_residual - 2f64.sqrt()).abs() < 1e-15);
    let g = GramianSet::new(&m).unwrap();
    assert!(matches!(OperatorBundle::new(&m, &g, DEFAULT_TOL), Err(Error::NotSymmetric { .. })));
}

#[test]
fn classifier_on_hand_picked_pairs() {
    assert!(symmetry::classify_2x2(-1.0, -2.0, 0.5, 1.0, 2.0));
    assert!(!symmetry::classify_2x2(-1.0, -2.0, 0.5, 0.5, 2.0));
    // symmetric but not stable
    assert!(!symmetry::classify_2x2(-1.0, 2.0, 0.5, 1.0, 2.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn constructed_symmetric_models_pass(seed in any::<u64>(), d in 1usize..7) {
        let mut rng = common::rng(seed);
        let m = common::random_symmetric(&mut rng, d);
        let r = check_reversibility(&m, DEFAULT_TOL);
        prop_assert!(r.is_symmetric && r.semigroup_symmetric);
        prop_assert!(r.contraction_margin.unwrap() >= -1e-12);
        let g = GramianSet::new(&m).unwrap();
        let b = OperatorBundle::new(&m, &g, DEFAULT_TOL).unwrap();
        let inv = b.invariants(&symmetry::default_grid(&m));
        prop_assert!(inv.max_residual() < 1e-9, "{:?}", inv);
        prop_assert!(b.gap() > 0.0);
    }

    #[test]
    fn perturbed_models_fail(seed in any::<u64>(), d in 2usize..7, eps in 1e-3f64..1e-1) {
        let mut rng = common::rng(seed);
        let m = common::random_symmetric(&mut rng, d);
        let mut a = m.a().clone();
        a[(0, d - 1)] += eps;
        let p = OUModel::dense(a, m.q().clone()).unwrap();
        prop_assert!(!check_reversibility(&p, DEFAULT_TOL).is_symmetric);
    }

    #[test]
    fn spectrum_of_a_q_matches_a(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = common::rng(seed);
        let m = common::random_symmetric(&mut rng, d);
        let gen = symmetry::ConjugatedGenerator::new(&m).unwrap();
        let mut ev: Vec<f64> = symou::linalg::eigenvalues(m.a()).iter().map(|e| -e.0).collect();
        ev.sort_by(f64::total_cmp);
        for (x, y) in ev.iter().zip(gen.eig.values.iter()) {
            prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
        }
    }
}

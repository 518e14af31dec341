mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use symou::gramian::{self, finite_time_gramian, GramianSet, GramianSummary};
use symou::linalg::{expm_scaled, spectral_norm};
use symou::OUModel;

#[test]
fn jordan_block_closed_form() {
    // A = [[-1, 1], [0, -1]], Q = I: Q_∞ = [[3/4, 1/4], [1/4, 1/2]]
    let m = OUModel::dense(
        DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]),
        DMatrix::identity(2, 2),
    )
    .unwrap();
    let x = gramian::solve_lyapunov(&m).unwrap();
    let expected = DMatrix::from_row_slice(2, 2, &[0.75, 0.25, 0.25, 0.5]);
    assert!((x - expected).amax() < 1e-14);
}

#[test]
fn small_times_keep_relative_accuracy() {
    // scalar: Q_t = q(1 − e^{-2t})/2 ≈ qt for small t
    let m = OUModel::dense(
        DMatrix::from_row_slice(2, 2, &[-1.0, 0.3, 0.0, -2.0]),
        DMatrix::identity(2, 2),
    )
    .unwrap();
    let x = gramian::solve_lyapunov(&m).unwrap();
    let t = 1e-7;
    let qt = finite_time_gramian(&m, Some(&x), t);
    assert!((qt / t - DMatrix::identity(2, 2)).amax() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lyapunov_residual_is_tiny(seed in any::<u64>(), d in 1usize..8) {
        let mut rng = common::rng(seed);
        let m = common::random_hurwitz(&mut rng, d);
        let g = GramianSet::new(&m).unwrap();
        prop_assert!(g.relative_residual() < 1e-10);
        prop_assert!(g.monotonicity_margin() >= -1e-12);
    }

    #[test]
    fn covariance_flow_composes(seed in any::<u64>(), d in 1usize..6, s in 0.05f64..2.0, t in 0.05f64..2.0) {
        // Q_{s+t} = Q_s + S(s) Q_t S(s)*
        let mut rng = common::rng(seed);
        let m = common::random_hurwitz(&mut rng, d);
        let x = gramian::solve_lyapunov(&m).unwrap();
        let qs = finite_time_gramian(&m, Some(&x), s);
        let qt = finite_time_gramian(&m, Some(&x), t);
        let qst = finite_time_gramian(&m, Some(&x), s + t);
        let e = expm_scaled(m.a(), s);
        let composed = &qs + &e * qt * e.transpose();
        prop_assert!((qst - composed).amax() <= 1e-10 * spectral_norm(&x).max(1.0));
    }

    #[test]
    fn summary_identities_hold(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = common::rng(seed);
        let m = common::random_hurwitz(&mut rng, d);
        let g = GramianSet::new(&m).unwrap();
        let s = GramianSummary::new(&m, &g);
        prop_assert!(s.identity_residual < 1e-9);
        prop_assert!(s.kernel_inclusion_defect < 1e-8);
    }
}

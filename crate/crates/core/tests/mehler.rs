mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use symou::gramian::GramianSet;
use symou::mehler::{self, Cylindrical, Method, TransitionKernel};
use symou::polynomial::{Polynomial, DEFAULT_DEGREE_CAP};
use symou::{Error, OUModel};

#[test]
fn scalar_second_moment_oracle() {
    // dZ = −Z dt + √2 dW: R_t x² = e^{−2t}x² + 1 − e^{−2t}
    let m = OUModel::dense(DMatrix::from_element(1, 1, -1.0), DMatrix::from_element(1, 1, 2.0)).unwrap();
    let f = common::fixture(m);
    let phi = Polynomial::from_terms(1, [(vec![2], 1.0)]).unwrap();
    for (t, x) in [(0.1, 0.7), (1.0, -2.0), (3.0, 0.0)] {
        let e = (-2.0f64 * t).exp();
        let exact = e * x * x + 1.0 - e;
        let spectral = mehler::rt_polynomial(&phi, &f.b, t, 6).unwrap().eval(&[x]);
        let k = TransitionKernel::new(&f.m, &f.g, t);
        let gh = mehler::evaluate_rt(&k, &phi, &[x], Method::default()).unwrap().value;
        assert!((spectral - exact).abs() < 1e-14);
        assert!((gh - exact).abs() < 1e-13);
    }
}

#[test]
fn clipped_observable_has_closed_form_mean() {
    // E clamp(σZ, −1, 1) = 0 by symmetry, E clamp(m + 0·Z) = clamp(m)
    let phi = Cylindrical::clipped(nalgebra::DVector::from_element(1, 1.0), 1.0);
    assert!(phi.gaussian_mean(0.0, 2.0).abs() < 1e-14);
    assert_eq!(phi.gaussian_mean(3.0, 0.0), 1.0);
    // E clamp(Z, −1, 1) with m = 1 shift: 1 − E (1 − Z)₊ ... checked against a fine Riemann sum
    let riemann: f64 = (0..400_000)
        .map(|i| {
            let z = -10.0 + (i as f64 + 0.5) * 20.0 / 400_000.0;
            (1.0 + z).clamp(-1.0, 1.0) * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt() * 20.0 / 400_000.0
        })
        .sum();
    assert!((phi.gaussian_mean(1.0, 1.0) - riemann).abs() < 1e-9);
}

#[test]
fn diagonal_gradient_norm_closed_form() {
    let m = OUModel::diagonal(&[-1.0, -3.0], &[1.0, 2.0]).unwrap();
    let g = GramianSet::new(&m).unwrap();
    let t = 0.4;
    let expected = (2.0f64 / (2.0f64 * t).exp_m1()).sqrt().max((6.0f64 / (6.0f64 * t).exp_m1()).sqrt());
    assert!((mehler::gradient_operator_norm(&m, &g, t).unwrap() - expected).abs() < 1e-15);
    assert!(matches!(mehler::gradient_operator_norm(&m, &g, 0.0), Err(Error::SingularQt(_))));
}

#[test]
fn constants_are_fixed_points_of_hypercontractivity() {
    let f = common::fixture(OUModel::diagonal(&[-1.0], &[2.0]).unwrap());
    let one = Polynomial::constant(1, 1.0);
    let r = mehler::check_hypercontractivity_at(&f.b, &one, 2.0, 4.0, 6, 1e-10).unwrap();
    assert!(r.margin.abs() < 1e-14);
    assert!((r.t - 3f64.ln() / 2.0).abs() < 1e-15);
}

#[test]
fn monte_carlo_is_reproducible() {
    let f = common::fixture(OUModel::diagonal(&[-1.0, -2.0], &[1.0, 1.0]).unwrap());
    let k = TransitionKernel::new(&f.m, &f.g, 0.5);
    let phi = Polynomial::from_terms(2, [(vec![1, 1], 1.0)]).unwrap();
    let run = |seed| mehler::evaluate_rt(&k, &phi, &[1.0, 1.0], Method::MonteCarlo { samples: 1000, seed }).unwrap();
    assert_eq!(run(5), run(5));
    assert_ne!(run(5).value, run(6).value);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectral_matches_quadrature(seed in any::<u64>(), d in 1usize..4, deg in 0usize..5, t in 0.01f64..3.0) {
        let mut rng = common::rng(seed);
        let f = common::fixture(common::random_symmetric(&mut rng, d));
        let phi = common::random_polynomial(&mut rng, d, deg);
        let x = common::gaussian_vector(&mut rng, d);
        let spectral = mehler::rt_polynomial(&phi, &f.b, t, DEFAULT_DEGREE_CAP).unwrap().eval(x.as_slice());
        let k = TransitionKernel::new(&f.m, &f.g, t);
        let gh = mehler::evaluate_rt(&k, &phi, x.as_slice(), Method::default()).unwrap().value;
        prop_assert!((spectral - gh).abs() <= 1e-9 * spectral.abs().max(1.0));
    }

    #[test]
    fn gradient_bound_holds(seed in any::<u64>(), d in 1usize..5, c in -3.0f64..2.0) {
        let mut rng = common::rng(seed);
        let m = common::random_symmetric(&mut rng, d);
        let g = GramianSet::new(&m).unwrap();
        let t = 10f64.powf(c) / m.norm_a();
        let n = mehler::gradient_operator_norm(&m, &g, t).unwrap();
        prop_assert!(n * t.sqrt() <= 1.0 + 1e-12);
    }

    #[test]
    fn kolmogorov_forms_agree(seed in any::<u64>(), d in 1usize..4, t in 0.01f64..2.0) {
        let mut rng = common::rng(seed);
        let f = common::fixture(common::random_symmetric(&mut rng, d));
        let phi = common::random_polynomial(&mut rng, d, 3);
        let pts = common::stationary_points(&mut rng, &f.g, 5);
        let r = mehler::kolmogorov_residual(&f.m, &f.b, &phi, t, &pts, DEFAULT_DEGREE_CAP).unwrap();
        prop_assert!(r.residual < 1e-9 && r.forms_disagreement < 1e-9);
    }
}

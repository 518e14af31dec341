mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use symou::polynomial::{MultiIndex, ObservableDocument, Polynomial};
use symou::Error;

#[test]
fn documents_validate_degree_and_dimension() {
    let ok: ObservableDocument = serde_json::from_str(r#"{"degree":2,"terms":[{"c":1.5,"p":[2,0]},{"c":-1,"p":[0,1]}]}"#).unwrap();
    let p = Polynomial::from_document(&ok, 2, 6).unwrap();
    assert_eq!(p.eval(&[2.0, 3.0]), 3.0);
    let big: ObservableDocument = serde_json::from_str(r#"{"degree":8,"terms":[{"c":1,"p":[8]}]}"#).unwrap();
    assert!(matches!(Polynomial::from_document(&big, 1, 6), Err(Error::DegreeOverflow { .. })));
    assert!(Polynomial::from_document(&ok, 3, 6).is_err());
}

#[test]
fn multi_index_display() {
    assert_eq!(MultiIndex(vec![1, 0, 2]).to_string(), "1:0:2");
    assert_eq!(MultiIndex::all_up_to(2, 2).len(), 6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn product_evaluates_pointwise(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = common::rng(seed);
        let p = common::random_polynomial(&mut rng, d, 3);
        let q = common::random_polynomial(&mut rng, d, 2);
        let x = common::gaussian_vector(&mut rng, d);
        let x = x.as_slice();
        let lhs = p.mul(&q).eval(x);
        let rhs = p.eval(x) * q.eval(x);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = common::rng(seed);
        let p = common::random_polynomial(&mut rng, d, 4);
        let x = common::gaussian_vector(&mut rng, d);
        let g = p.eval_gradient(x.as_slice());
        let h = 1e-5;
        for i in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (p.eval(xp.as_slice()) - p.eval(xm.as_slice())) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0));
        }
    }

    #[test]
    fn linear_change_of_variables(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = common::rng(seed);
        let p = common::random_polynomial(&mut rng, d, 3);
        let m: DMatrix<f64> = common::gaussian_matrix(&mut rng, d, d);
        let y = common::gaussian_vector(&mut rng, d);
        let lhs = p.compose_linear(&m).eval(y.as_slice());
        let rhs = p.eval((&m * &y).as_slice());
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0));
    }

    #[test]
    fn document_round_trip(seed in any::<u64>(), d in 1usize..4) {
        let mut rng = common::rng(seed);
        let p = common::random_polynomial(&mut rng, d, 4);
        let back = Polynomial::from_document(&p.to_document(), d, 6).unwrap();
        prop_assert_eq!(back, p);
    }
}

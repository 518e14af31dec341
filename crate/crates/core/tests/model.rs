mod common;

use proptest::prelude::*;
use symou::model::{self, validate_hypothesis, HypothesisMethod};
use symou::{Error, ModelKind};

#[test]
fn every_document_kind_parses() {
    let dense = model::parse_model(r#"{"kind":"dense","A":[[-1,0.5],[0,-2]],"Q":[[1,0],[0,1]]}"#).unwrap();
    assert_eq!(dense.kind(), ModelKind::Dense);
    let diag = model::parse_model(r#"{"kind":"diagonal","alpha":[-1,-2],"q":[1,0.5]}"#).unwrap();
    assert_eq!(diag.kind(), ModelKind::Diagonal);
    let ex2 = model::parse_model(r#"{"kind":"example2","kappa":1,"m":0.1,"n":64}"#).unwrap();
    assert_eq!(ex2.kind(), ModelKind::Example2);
    assert_eq!(ex2.dim(), 64);
}

#[test]
fn malformed_documents_are_schema_errors() {
    for text in [
        "{",
        r#"{"kind":"dense","A":[[-1]]}"#,
        r#"{"kind":"dense","A":[[-1,0]],"Q":[[1]]}"#,
        r#"{"kind":"dense","A":[[-1]],"Q":[[1]],"extra":1}"#,
        r#"{"kind":"cubic"}"#,
        r#"{"kind":"diagonal","alpha":[-1],"q":[1,2]}"#,
    ] {
        assert!(matches!(model::parse_model(text), Err(Error::Schema(_))), "{text}");
    }
}

#[test]
fn noise_must_be_symmetric_psd() {
    let asym = model::parse_model(r#"{"kind":"dense","A":[[-1,0],[0,-1]],"Q":[[1,0.5],[0,1]]}"#);
    assert!(matches!(asym, Err(Error::AsymmetricNoise(_))));
    let neg = model::parse_model(r#"{"kind":"dense","A":[[-1,0],[0,-1]],"Q":[[1,0],[0,-1]]}"#);
    assert!(matches!(neg, Err(Error::NotPsd { .. })));
}

#[test]
fn unstable_drift_fails_the_hypothesis() {
    let m = model::parse_model(r#"{"kind":"dense","A":[[0.1,0],[0,-1]],"Q":[[1,0],[0,1]]}"#).unwrap();
    let v = validate_hypothesis(&m);
    assert!(!v.holds);
    assert_eq!(v.method, HypothesisMethod::Divergence);
    assert!(v.trace_integral.is_infinite());
}

#[test]
fn degenerate_noise_leaves_q_inf_singular() {
    // Q = e₁e₁ᵀ with diagonal A never reaches the second coordinate
    let m = model::parse_model(r#"{"kind":"dense","A":[[-1,0],[0,-1]],"Q":[[1,0],[0,0]]}"#).unwrap();
    let v = validate_hypothesis(&m);
    assert!(!v.holds);
    assert_eq!(v.qinf_min_eig, 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn document_round_trip_keeps_hash(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = common::rng(seed);
        let m = common::random_hurwitz(&mut rng, d);
        let text = serde_json::to_string(&m.to_document()).unwrap();
        let back = model::parse_model(&text).unwrap();
        prop_assert_eq!(back.hash(), m.hash());
        prop_assert_eq!(back, m);
    }

    #[test]
    fn stable_models_satisfy_hypothesis(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = common::rng(seed);
        let m = common::random_symmetric(&mut rng, d);
        let v = validate_hypothesis(&m);
        prop_assert!(v.holds);
        prop_assert!(v.trace_integral.is_finite() && v.trace_integral > 0.0);
    }
}

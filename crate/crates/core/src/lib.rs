//! Symmetric Ornstein-Uhlenbeck semigroups in finite dimensions: covariance
//! operators, reversibility checks, Wiener chaos, the Mehler formula,
//! exact simulation and Sobolev-type diagnostics.

// `!(x > y)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chaos;
pub mod error;
pub mod gramian;
pub mod linalg;
pub mod mehler;
pub mod model;
pub mod polynomial;
pub mod presets;
pub mod quadrature;
pub mod simulate;
pub mod spaces;
pub mod symmetry;

pub use chaos::{ChaosCoefficients, ChaosFrame, ChaosRow};
pub use error::{Error, Result};
pub use gramian::{GramianSet, GramianSummary};
pub use mehler::{Cylindrical, Estimate, Method, Observable, TransitionKernel};
pub use model::{
    DiagonalLaws, Example2Params, HypothesisVerdict, ModelDocument, ModelKind, OUModel, PowerLaw,
};
pub use polynomial::{MultiIndex, ObservableDocument, Polynomial};
pub use simulate::{PathEnsemble, StartLaw};
pub use spaces::{DiagnosticsReport, SobolevReport};
pub use symmetry::{ConjugatedGenerator, OperatorBundle, SymmetryReport};

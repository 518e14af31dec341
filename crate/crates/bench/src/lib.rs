//! Fixtures shared by the benchmarks.

use nalgebra::DMatrix;
use symou::{OUModel, Polynomial};

/// Symmetric tridiagonal drift with identity noise, `A = −(2I − ½ shift)`.
pub fn tridiagonal(d: usize) -> OUModel {
    let mut a = DMatrix::from_diagonal_element(d, d, -2.0);
    for i in 1..d {
        a[(i, i - 1)] = 0.5;
        a[(i - 1, i)] = 0.5;
    }
    OUModel::dense(a, DMatrix::identity(d, d)).expect("valid model")
}

/// Upper bidiagonal drift (not reversible) with identity noise.
pub fn bidiagonal(d: usize) -> OUModel {
    let mut a = DMatrix::from_diagonal_element(d, d, -1.0);
    for i in 1..d {
        a[(i - 1, i)] = 0.7;
    }
    OUModel::dense(a, DMatrix::identity(d, d)).expect("valid model")
}

/// `Σ_i x_i² x_{i+1} + x_0⁴`.
pub fn observable(d: usize) -> Polynomial {
    let mut terms = Vec::new();
    for i in 0..d.saturating_sub(1) {
        let mut p = vec![0u32; d];
        p[i] = 2;
        p[i + 1] = 1;
        terms.push((p, 1.0));
    }
    let mut p = vec![0u32; d];
    p[0] = 4;
    terms.push((p, 1.0));
    Polynomial::from_terms(d, terms).expect("valid observable")
}

//! Hermite (Wick) chaos expansion of polynomial observables with respect
//! to the invariant law `μ = N(0, Q_∞)`, and the diagonal actions of
//! `R_t`, `L` and `√(I − L)` on it.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polynomial::{MultiIndex, Polynomial};
use crate::quadrature::hermite_normalized;
use crate::symmetry::OperatorBundle;

/// Whitened coordinates `y = Gᵀ Q_∞^{-1/2} x` in which `μ` is standard and
/// `A_0` is diagonal, with the eigenvalues `β_i` of `−A_0`.
#[derive(Debug, Clone)]
pub struct ChaosFrame {
    pub whitening: DMatrix<f64>,
    pub coloring: DMatrix<f64>,
    pub betas: Vec<f64>,
}

impl ChaosFrame {
    pub fn new(b: &OperatorBundle) -> Self {
        Self {
            whitening: b.whitening(),
            coloring: b.coloring(),
            betas: b.betas(),
        }
    }

    pub fn dim(&self) -> usize {
        self.betas.len()
    }

    /// `Σ nᵢ βᵢ`, the eigenvalue of `−L` on the Hermite function of index `n`.
    pub fn eigenvalue(&self, n: &MultiIndex) -> f64 {
        n.weighted(&self.betas)
    }

    pub fn to_frame(&self, x: &[f64]) -> DVector<f64> {
        &self.whitening * DVector::from_column_slice(x)
    }
}

#[derive(Debug, Clone)]
pub struct ChaosCoefficients {
    pub frame: ChaosFrame,
    pub coeffs: BTreeMap<MultiIndex, f64>,
    pub degree: usize,
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `y^k = Σ_j c_j h_j(y)` with unit-normalised Hermite `h_j`.
fn monomial_in_hermite(k: u32) -> Vec<(u32, f64)> {
    let kf = factorial(k);
    (0..=k / 2)
        .map(|m| {
            let j = k - 2 * m;
            let c = kf / (factorial(m) * 2f64.powi(m as i32) * factorial(j)) * factorial(j).sqrt();
            (j, c)
        })
        .collect()
}

/// `h_j(y) = Σ_k c_k y^k`.
fn hermite_in_monomials(j: u32) -> Vec<(u32, f64)> {
    let jf = factorial(j);
    let norm = jf.sqrt();
    (0..=j / 2)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let c = sign * jf / (factorial(m) * 2f64.powi(m as i32) * factorial(j - 2 * m)) / norm;
            (j - 2 * m, c)
        })
        .collect()
}

/// Multiplies out per-axis expansions of a single multi-index.
fn tensor_expand(
    powers: &MultiIndex,
    scale: f64,
    one_d: impl Fn(u32) -> Vec<(u32, f64)>,
    out: &mut BTreeMap<MultiIndex, f64>,
) {
    let mut acc: Vec<(Vec<u32>, f64)> = vec![(Vec::with_capacity(powers.dim()), scale)];
    for &k in &powers.0 {
        let terms = one_d(k);
        let mut next = Vec::with_capacity(acc.len() * terms.len());
        for (idx, c) in &acc {
            for &(j, cj) in &terms {
                let mut v = idx.clone();
                v.push(j);
                next.push((v, c * cj));
            }
        }
        acc = next;
    }
    for (idx, c) in acc {
        *out.entry(MultiIndex(idx)).or_insert(0.0) += c;
    }
}

/// Expands `φ` over the chaos frame of `b`; exact for polynomials of
/// degree at most `cap`.
pub fn expand(phi: &Polynomial, b: &OperatorBundle, cap: usize) -> Result<ChaosCoefficients> {
    expand_in(phi, &ChaosFrame::new(b), cap)
}

pub fn expand_in(phi: &Polynomial, frame: &ChaosFrame, cap: usize) -> Result<ChaosCoefficients> {
    if phi.degree() > cap {
        return Err(Error::DegreeOverflow {
            degree: phi.degree(),
            cap,
        });
    }
    if phi.dim() != frame.dim() {
        return Err(Error::Dimension(format!(
            "observable has dimension {}, model {}",
            phi.dim(),
            frame.dim()
        )));
    }
    let in_y = phi.compose_linear(&frame.coloring);
    let mut coeffs = BTreeMap::new();
    for (powers, c) in in_y.terms() {
        tensor_expand(powers, c, monomial_in_hermite, &mut coeffs);
    }
    coeffs.retain(|_, c| *c != 0.0);
    Ok(ChaosCoefficients {
        frame: frame.clone(),
        coeffs,
        degree: phi.degree(),
    })
}

impl ChaosCoefficients {
    pub fn get(&self, n: &MultiIndex) -> f64 {
        self.coeffs.get(n).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.get(&MultiIndex::zero(self.frame.dim()))
    }

    /// `‖φ‖²_{L²(μ)}` by Parseval.
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum()
    }

    pub fn inner(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| c * other.get(k))
            .sum()
    }

    /// Multiplies each coefficient by `f(Σ nᵢβᵢ)`.
    pub fn apply_multiplier(&self, f: impl Fn(f64) -> f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, &c)| (k.clone(), c * f(self.frame.eigenvalue(k))))
            .filter(|(_, c)| *c != 0.0)
            .collect();
        Self {
            frame: self.frame.clone(),
            coeffs,
            degree: self.degree,
        }
    }

    /// `R_t φ`: coefficient `n` decays by `exp(−t Σ nᵢβᵢ)`.
    pub fn apply_rt(&self, t: f64) -> Self {
        self.apply_multiplier(|lam| (-t * lam).exp())
    }

    /// `L φ`.
    pub fn apply_generator(&self) -> Self {
        self.apply_multiplier(|lam| -lam)
    }

    /// `√(I − L) φ`.
    pub fn apply_sqrt_shifted(&self) -> Self {
        self.apply_multiplier(|lam| (1.0 + lam).sqrt())
    }

    /// `φ − Π₀φ`.
    pub fn centered(&self) -> Self {
        let mut out = self.clone();
        out.coeffs.remove(&MultiIndex::zero(self.frame.dim()));
        out
    }

    /// Smallest eigenvalue of `−L` carried by a nonzero non-constant
    /// coefficient.
    pub fn lowest_loaded_eigenvalue(&self) -> Option<f64> {
        self.coeffs
            .keys()
            .filter(|k| !k.is_zero())
            .map(|k| self.frame.eigenvalue(k))
            .min_by(f64::total_cmp)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let y = self.frame.to_frame(x);
        self.eval_frame(y.as_slice())
    }

    /// Evaluation in whitened coordinates.
    pub fn eval_frame(&self, y: &[f64]) -> f64 {
        let deg = self.coeffs.keys().map(MultiIndex::order).max().unwrap_or(0);
        let h: Vec<Vec<f64>> = y.iter().map(|&v| hermite_normalized(deg, v)).collect();
        self.coeffs
            .iter()
            .map(|(k, &c)| {
                k.0.iter()
                    .enumerate()
                    .fold(c, |acc, (i, &n)| acc * h[i][n as usize])
            })
            .sum()
    }

    /// The same function as a polynomial in the original coordinates `x`.
    pub fn to_polynomial(&self) -> Polynomial {
        let d = self.frame.dim();
        let mut in_y = BTreeMap::new();
        for (k, &c) in &self.coeffs {
            tensor_expand(k, c, hermite_in_monomials, &mut in_y);
        }
        let p = Polynomial::from_terms(d, in_y.into_iter().map(|(k, c)| (k.0, c)))
            .expect("frame dimension is consistent");
        p.compose_linear(&self.frame.whitening)
    }

    /// Rows `(multi-index, coefficient)` for CSV output.
    pub fn table(&self) -> Vec<ChaosRow> {
        self.coeffs
            .iter()
            .map(|(k, &c)| ChaosRow {
                index: k.to_string(),
                order: k.order(),
                eigenvalue: self.frame.eigenvalue(k),
                coefficient: c,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChaosRow {
    pub index: String,
    pub order: usize,
    pub eigenvalue: f64,
    pub coefficient: f64,
}

/// Spectral gap `β_1` of `−A_Q`, which is the gap of `−L`.
pub fn spectral_gap(b: &OperatorBundle) -> f64 {
    b.gap()
}

/// Eigenvalues of `−L` on chaos of order at most `degree`, ascending and
/// with multiplicity.
pub fn generator_spectrum(b: &OperatorBundle, degree: usize) -> Vec<f64> {
    let betas = b.betas();
    let mut v: Vec<f64> = MultiIndex::all_up_to(betas.len(), degree)
        .iter()
        .map(|n| n.weighted(&betas))
        .collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `Lφ = ½ tr(Q D²φ) + ⟨x, A* Dφ⟩` applied symbolically.
pub fn generator_symbolic(phi: &Polynomial, a: &DMatrix<f64>, q: &DMatrix<f64>) -> Polynomial {
    let d = phi.dim();
    let grad = phi.gradient();
    let mut out = Polynomial::zero(d);
    for i in 0..d {
        for j in 0..d {
            if q[(i, j)] != 0.0 {
                out = out.add(&grad[i].derivative(j).scale(0.5 * q[(i, j)]));
            }
        }
    }
    // ⟨x, A* Dφ⟩ = Σ_{i,j} a_ij x_j ∂_i φ
    for i in 0..d {
        for j in 0..d {
            if a[(i, j)] != 0.0 {
                out = out.add(&grad[i].mul(&Polynomial::coordinate(d, j)).scale(a[(i, j)]));
            }
        }
    }
    out
}

//! Sparse multivariate polynomials: the observable class on which every
//! exact computation (chaos expansion, symbolic generator, Kolmogorov
//! residual) operates.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the total degree of observables.
pub const DEFAULT_DEGREE_CAP: usize = 6;

/// Exponent vector of a monomial (or of a product Hermite polynomial).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = vec![0; dim];
        v[i] = 1;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total order `|n| = Σ nᵢ`.
    pub fn order(&self) -> usize {
        self.0.iter().map(|&k| k as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&k| k == 0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `Σ nᵢ wᵢ`.
    pub fn weighted(&self, w: &[f64]) -> f64 {
        self.0.iter().zip(w).map(|(&k, &b)| k as f64 * b).sum()
    }

    /// Every multi-index of dimension `dim` with order at most `degree`,
    /// in graded lexicographic order.
    pub fn all_up_to(dim: usize, degree: usize) -> Vec<MultiIndex> {
        fn rec(dim: usize, left: usize, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
            if prefix.len() == dim {
                out.push(MultiIndex(prefix.clone()));
                return;
            }
            for k in 0..=left {
                prefix.push(k as u32);
                rec(dim, left - k, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        rec(dim, degree, &mut Vec::with_capacity(dim), &mut out);
        out.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| b.cmp(a)));
        out
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "{}", parts.join(":"))
    }
}

/// Polynomial `Σ c_p x^p` on ℝ^dim stored sparsely by exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    dim: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

/// JSON form of an observable: `{"degree":D,"terms":[{"c":..,"p":[..]}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableDocument {
    pub degree: usize,
    pub terms: Vec<TermDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDocument {
    pub c: f64,
    pub p: Vec<u32>,
}

impl Polynomial {
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(MultiIndex::zero(dim), c);
        p
    }

    /// The coordinate function `x ↦ xᵢ`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut p = Self::zero(dim);
        p.add_term(MultiIndex::unit(dim, i), 1.0);
        p
    }

    /// `x ↦ ⟨w, x⟩`.
    pub fn linear(w: &[f64]) -> Self {
        let dim = w.len();
        let mut p = Self::zero(dim);
        for (i, &c) in w.iter().enumerate() {
            p.add_term(MultiIndex::unit(dim, i), c);
        }
        p
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (Vec<u32>, f64)>) -> Result<Self> {
        let mut p = Self::zero(dim);
        for (powers, c) in terms {
            if powers.len() != dim {
                return Err(Error::Dimension(format!(
                    "term exponent has length {}, expected {dim}",
                    powers.len()
                )));
            }
            p.add_term(MultiIndex(powers), c);
        }
        Ok(p)
    }

    /// Parses an observable document, enforcing its declared degree and
    /// the global `cap`.
    pub fn from_document(doc: &ObservableDocument, dim: usize, cap: usize) -> Result<Self> {
        if !doc.terms.iter().all(|t| t.c.is_finite()) {
            return Err(Error::Schema("observable coefficient is not finite".into()));
        }
        let p = Self::from_terms(dim, doc.terms.iter().map(|t| (t.p.clone(), t.c)))
            .map_err(|e| Error::Schema(e.to_string()))?;
        if p.degree() > doc.degree {
            return Err(Error::Schema(format!(
                "observable has degree {} but declares {}",
                p.degree(),
                doc.degree
            )));
        }
        if doc.degree > cap {
            return Err(Error::DegreeOverflow {
                degree: doc.degree,
                cap,
            });
        }
        Ok(p)
    }

    pub fn to_document(&self) -> ObservableDocument {
        ObservableDocument {
            degree: self.degree(),
            terms: self
                .terms
                .iter()
                .map(|(k, &c)| TermDocument { c, p: k.0.clone() })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(k, &c)| (k, c))
    }

    pub fn coefficient(&self, powers: &MultiIndex) -> f64 {
        self.terms.get(powers).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(MultiIndex::order).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, powers: MultiIndex, c: f64) {
        debug_assert_eq!(powers.dim(), self.dim);
        if c == 0.0 {
            return;
        }
        match self.terms.entry(powers) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = Self::zero(self.dim);
        for (k, &c) in &self.terms {
            out.add_term(k.clone(), c * s);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, &c) in &other.terms {
            out.add_term(k.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.dim);
        for (ka, &ca) in &self.terms {
            for (kb, &cb) in &other.terms {
                out.add_term(ka.add(kb), ca * cb);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let deg = self.degree();
        // powers[i][k] = x_i^k
        let powers: Vec<Vec<f64>> = x
            .iter()
            .map(|&xi| {
                let mut v = Vec::with_capacity(deg + 1);
                let mut acc = 1.0;
                for _ in 0..=deg {
                    v.push(acc);
                    acc *= xi;
                }
                v
            })
            .collect();
        self.terms
            .iter()
            .map(|(k, &c)| {
                k.0.iter()
                    .enumerate()
                    .fold(c, |acc, (i, &e)| acc * powers[i][e as usize])
            })
            .sum()
    }

    /// `∂φ/∂xᵢ`.
    pub fn derivative(&self, i: usize) -> Self {
        let mut out = Self::zero(self.dim);
        for (k, &c) in &self.terms {
            let e = k.0[i];
            if e > 0 {
                let mut nk = k.clone();
                nk.0[i] -= 1;
                out.add_term(nk, c * e as f64);
            }
        }
        out
    }

    pub fn gradient(&self) -> Vec<Polynomial> {
        (0..self.dim).map(|i| self.derivative(i)).collect()
    }

    /// Hessian as a row-major `dim × dim` table of polynomials.
    pub fn hessian(&self) -> Vec<Vec<Polynomial>> {
        let grad = self.gradient();
        grad.iter()
            .map(|g| (0..self.dim).map(|j| g.derivative(j)).collect())
            .collect()
    }

    /// Composition with the linear map `x = M y`; the result is a polynomial
    /// in `y ∈ ℝ^{M.ncols()}`.
    pub fn compose_linear(&self, m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), self.dim, "compose_linear: row count must match dim");
        let new_dim = m.ncols();
        let deg = self.degree();
        // cache of (row i of M as linear form)^k
        let forms: Vec<Polynomial> = (0..self.dim)
            .map(|i| {
                let row: Vec<f64> = m.row(i).iter().copied().collect();
                Polynomial::linear(&row)
            })
            .collect();
        let mut cache: Vec<Vec<Polynomial>> = forms
            .iter()
            .map(|_| vec![Polynomial::constant(new_dim, 1.0)])
            .collect();
        for (i, form) in forms.iter().enumerate() {
            for k in 1..=deg {
                let next = cache[i][k - 1].mul(form);
                cache[i].push(next);
            }
        }
        let mut out = Self::zero(new_dim);
        for (k, &c) in &self.terms {
            let mut prod = Polynomial::constant(new_dim, c);
            for (i, &e) in k.0.iter().enumerate() {
                if e > 0 {
                    prod = prod.mul(&cache[i][e as usize]);
                }
            }
            out = out.add(&prod);
        }
        out
    }

    pub fn eval_gradient(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.dim, (0..self.dim).map(|i| self.derivative(i).eval(x)))
    }

    /// Drops coefficients with magnitude below `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let mut out = Self::zero(self.dim);
        for (k, &c) in &self.terms {
            if c.abs() > tol {
                out.add_term(k.clone(), c);
            }
        }
        out
    }
}

/// Gradient and Hessian of a polynomial, differentiated once and then
/// evaluated at many points.
#[derive(Debug, Clone)]
pub struct PolynomialJet {
    pub value: Polynomial,
    pub gradient: Vec<Polynomial>,
    pub hessian: Vec<Vec<Polynomial>>,
}

impl PolynomialJet {
    pub fn new(p: &Polynomial) -> Self {
        Self {
            value: p.clone(),
            gradient: p.gradient(),
            hessian: p.hessian(),
        }
    }

    pub fn gradient_at(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.gradient.len(), self.gradient.iter().map(|g| g.eval(x)))
    }

    pub fn hessian_at(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.gradient.len();
        DMatrix::from_fn(d, d, |i, j| self.hessian[i][j].eval(x))
    }
}

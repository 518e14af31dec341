//! OU model instances `dZ = AZ dt + √Q dW`, their JSON documents, and the
//! standing hypothesis that the invariant covariance exists and is
//! nonsingular.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{self, asymmetry, spectral_norm, SortedEigen};

/// Default truncation for diagonal models given by sequence laws.
pub const DEFAULT_TRUNCATION: usize = 32;
/// Relative tolerance for symmetry and positivity of Q.
pub const PSD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dense,
    Diagonal,
    Example2,
}

/// Power law `k ↦ coef · k^exp`, `k = 1, 2, …`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLaw {
    pub coef: f64,
    pub exp: f64,
}

impl PowerLaw {
    pub fn at(&self, k: usize) -> f64 {
        self.coef * (k as f64).powf(self.exp)
    }
}

/// Defining sequences of an infinite diagonal model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalLaws {
    pub alpha: PowerLaw,
    pub q: PowerLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Example2Params {
    pub kappa: f64,
    pub m: f64,
    pub halfwidth: f64,
    pub n: usize,
}

impl Example2Params {
    pub fn new(kappa: f64, m: f64, n: usize) -> Self {
        Self {
            kappa,
            m,
            halfwidth: 40.0 / kappa,
            n,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DenseDocument {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
}

/// Either explicit `alpha`/`q` lists or power laws with a truncation.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagonalDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, alias = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_law: Option<PowerLaw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_law: Option<PowerLaw>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Example2Document {
    pub kappa: f64,
    pub m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub halfwidth: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelDocument {
    Dense(DenseDocument),
    Diagonal(DiagonalDocument),
    Example2(Example2Document),
}

/// A validated pair `(A, Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OUModel {
    kind: ModelKind,
    a: DMatrix<f64>,
    q: DMatrix<f64>,
    laws: Option<DiagonalLaws>,
    example2: Option<Example2Params>,
}

fn rows_to_matrix(rows: &[Vec<f64>], name: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Schema(format!("{name} is empty")));
    }
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Schema(format!("{name} must be square")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Schema(format!("{name} has non-finite entries")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

impl OUModel {
    /// Builds a dense model, checking shapes and that `Q` is symmetric PSD.
    pub fn dense(a: DMatrix<f64>, q: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || !q.is_square() || a.nrows() != q.nrows() || a.nrows() == 0 {
            return Err(Error::Schema(format!(
                "A is {}x{}, Q is {}x{}; need equal square shapes",
                a.nrows(),
                a.ncols(),
                q.nrows(),
                q.ncols()
            )));
        }
        if a.iter().chain(q.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Schema("non-finite matrix entry".into()));
        }
        let q = check_covariance(q)?;
        Ok(Self {
            kind: ModelKind::Dense,
            a,
            q,
            laws: None,
            example2: None,
        })
    }

    pub fn diagonal(alpha: &[f64], q: &[f64]) -> Result<Self> {
        if alpha.len() != q.len() || alpha.is_empty() {
            return Err(Error::Schema(format!(
                "alpha has {} entries, q has {}",
                alpha.len(),
                q.len()
            )));
        }
        if let Some(k) = alpha.iter().position(|&x| !(x < 0.0 && x.is_finite())) {
            return Err(Error::Schema(format!("alpha[{k}] = {} must be negative", alpha[k])));
        }
        if let Some(k) = q.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::Schema(format!("q[{k}] = {} must be positive", q[k])));
        }
        Ok(Self {
            kind: ModelKind::Diagonal,
            a: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(alpha)),
            q: DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(q)),
            laws: None,
            example2: None,
        })
    }

    /// Truncation `k = 1..=n` of the laws `α_k`, `q_k`.
    pub fn from_laws(laws: DiagonalLaws, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Schema("truncation must be at least 1".into()));
        }
        let alpha: Vec<f64> = (1..=n).map(|k| laws.alpha.at(k)).collect();
        let q: Vec<f64> = (1..=n).map(|k| laws.q.at(k)).collect();
        let mut m = Self::diagonal(&alpha, &q)?;
        m.laws = Some(laws);
        Ok(m)
    }

    /// Wraps already materialised Example 2 matrices.
    pub(crate) fn example2_raw(a: DMatrix<f64>, q: DMatrix<f64>, params: Example2Params) -> Self {
        Self {
            kind: ModelKind::Example2,
            a,
            q,
            laws: None,
            example2: Some(params),
        }
    }

    pub fn from_document(doc: &ModelDocument) -> Result<Self> {
        match doc {
            ModelDocument::Dense(d) => {
                Self::dense(rows_to_matrix(&d.a, "A")?, rows_to_matrix(&d.q, "Q")?)
            }
            ModelDocument::Diagonal(d) => match (&d.alpha, &d.q, &d.alpha_law, &d.q_law) {
                (Some(alpha), Some(q), None, None) => {
                    if d.n.is_some_and(|n| n != alpha.len()) {
                        return Err(Error::Schema("n disagrees with the length of alpha".into()));
                    }
                    Self::diagonal(alpha, q)
                }
                (None, None, Some(alpha), Some(q)) => Self::from_laws(
                    DiagonalLaws {
                        alpha: *alpha,
                        q: *q,
                    },
                    d.n.unwrap_or(DEFAULT_TRUNCATION),
                ),
                _ => Err(Error::Schema(
                    "diagonal model needs either alpha and q, or alpha_law and q_law".into(),
                )),
            },
            ModelDocument::Example2(e) => {
                let mut params = Example2Params::new(e.kappa, e.m, e.n);
                if let Some(h) = e.halfwidth {
                    params.halfwidth = h;
                }
                crate::presets::example2(params)
            }
        }
    }

    pub fn to_document(&self) -> ModelDocument {
        match (self.kind, self.laws, self.example2) {
            (ModelKind::Diagonal, Some(laws), _) => ModelDocument::Diagonal(DiagonalDocument {
                n: Some(self.dim()),
                alpha_law: Some(laws.alpha),
                q_law: Some(laws.q),
                ..Default::default()
            }),
            (ModelKind::Diagonal, None, _) => ModelDocument::Diagonal(DiagonalDocument {
                alpha: Some(self.a.diagonal().iter().copied().collect()),
                q: Some(self.q.diagonal().iter().copied().collect()),
                ..Default::default()
            }),
            (ModelKind::Example2, _, Some(p)) => ModelDocument::Example2(Example2Document {
                kappa: p.kappa,
                m: p.m,
                halfwidth: Some(p.halfwidth),
                n: p.n,
            }),
            _ => ModelDocument::Dense(DenseDocument {
                a: matrix_to_rows(&self.a),
                q: matrix_to_rows(&self.q),
            }),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn laws(&self) -> Option<DiagonalLaws> {
        self.laws
    }

    pub fn example2_params(&self) -> Option<Example2Params> {
        self.example2
    }

    /// True when both A and Q are exactly diagonal.
    pub fn is_diagonal(&self) -> bool {
        linalg::is_diagonal(&self.a) && linalg::is_diagonal(&self.q)
    }

    pub fn norm_a(&self) -> f64 {
        spectral_norm(&self.a)
    }

    pub fn norm_q(&self) -> f64 {
        spectral_norm(&self.q)
    }

    /// SHA-256 of the kind tag and the IEEE bit patterns of A and Q.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("{:?}:{}", self.kind, self.dim()).as_bytes());
        for x in self.a.iter().chain(self.q.iter()) {
            h.update(x.to_bits().to_le_bytes());
        }
        hex::encode(h.finalize())
    }
}

fn check_covariance(q: DMatrix<f64>) -> Result<DMatrix<f64>> {
    let norm = spectral_norm(&q);
    let asym = asymmetry(&q);
    if asym > PSD_TOL * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::AsymmetricNoise(asym));
    }
    let q = linalg::symmetrize(&q);
    let min = if linalg::is_diagonal(&q) {
        q.diagonal().min()
    } else {
        SortedEigen::new(&q).min()
    };
    let tol = PSD_TOL * norm;
    if min < -tol {
        return Err(Error::NotPsd {
            eigenvalue: min,
            tolerance: tol,
        });
    }
    Ok(q)
}

pub fn parse_model(text: &str) -> Result<OUModel> {
    let doc: ModelDocument =
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    OUModel::from_document(&doc)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<OUModel> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypothesisMethod {
    Lyapunov,
    TraceOnly,
    Divergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisVerdict {
    pub holds: bool,
    pub trace_integral: f64,
    pub qinf_min_eig: f64,
    pub method: HypothesisMethod,
}

/// Relative floor on the smallest eigenvalue of Q_∞.
pub const QINF_FLOOR: f64 = 1e-12;

/// Decides whether `∫₀^∞ tr(S(s) Q S*(s)) ds` is finite with nonsingular
/// Q_∞. Never fails: a violated hypothesis is a verdict.
pub fn validate_hypothesis(m: &OUModel) -> HypothesisVerdict {
    let hurwitz = if m.is_diagonal() {
        m.a.diagonal().iter().all(|&x| x < 0.0)
    } else {
        linalg::spectral_abscissa(&m.a) < 0.0
    };
    if hurwitz {
        if let Ok(qinf) = crate::gramian::solve_lyapunov(m) {
            let trace = qinf.trace();
            let eig = if linalg::is_diagonal(&qinf) {
                let d = qinf.diagonal();
                (d.min(), d.max())
            } else {
                let e = SortedEigen::new(&qinf);
                (e.min(), e.max())
            };
            let nonsingular = match m.kind {
                ModelKind::Example2 => eig.0 > 0.0,
                _ => eig.0 > QINF_FLOOR * eig.1,
            };
            return HypothesisVerdict {
                holds: trace.is_finite() && nonsingular,
                trace_integral: trace,
                qinf_min_eig: eig.0,
                method: if m.kind == ModelKind::Example2 {
                    HypothesisMethod::TraceOnly
                } else {
                    HypothesisMethod::Lyapunov
                },
            };
        }
    }
    // Not stable: watch tr(Q_t) on t = 1, 2, 4, ...
    let mut prev = 0.0;
    let mut prev_inc = f64::INFINITY;
    let mut trace = f64::INFINITY;
    let mut qmin = 0.0;
    for k in 0..12 {
        let t = (1u64 << k) as f64;
        let qt = linalg::van_loan_gramian(&m.a, &m.q, t);
        let tr = qt.trace();
        if !tr.is_finite() {
            break;
        }
        let inc = tr - prev;
        if k > 2 && inc <= 1e-12 * tr.abs().max(1.0) && inc <= prev_inc {
            trace = tr;
            qmin = SortedEigen::new(&qt).min();
            break;
        }
        prev = tr;
        prev_inc = inc;
    }
    HypothesisVerdict {
        holds: false,
        trace_integral: trace,
        qinf_min_eig: qmin,
        method: HypothesisMethod::Divergence,
    }
}

//! Reversibility test `AQ = QA*` and the derived operators of a symmetric
//! model: `S_Q`, `A_Q`, `S_0`, `A_0`, `V` and the polar factor `U`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gramian::GramianSet;
use crate::linalg::{self, asymmetry, expm_scaled, spectral_norm, symmetrize, SortedEigen};
use crate::model::OUModel;

/// Default relative tolerance of the symmetry tests.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Relative eigenvalue floor below which Q (or Q_∞) counts as singular.
pub const SINGULAR_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub is_symmetric: bool,
    /// `‖AQ − QA*‖` (Frobenius).
    pub commutator_residual: f64,
    /// Absolute tolerance `tol · ‖A‖‖Q‖` applied to the commutator.
    pub tolerance: f64,
    /// `(t, ‖S(t)Q − QS*(t)‖)` (Frobenius).
    pub semigroup_residuals: Vec<(f64, f64)>,
    pub semigroup_tolerances: Vec<f64>,
    pub semigroup_symmetric: bool,
    /// `min_t (1 − ‖S_Q(t)‖)`; absent when Q is singular.
    pub contraction_margin: Option<f64>,
}

/// Default semigroup grid `{0.01, 0.1, 1, 10} / ‖A‖`.
pub fn default_grid(m: &OUModel) -> Vec<f64> {
    crate::gramian::default_times(m)
}

pub fn check_reversibility(m: &OUModel, tol: f64) -> SymmetryReport {
    check_reversibility_on(m, tol, &default_grid(m))
}

pub fn check_reversibility_on(m: &OUModel, tol: f64, grid: &[f64]) -> SymmetryReport {
    let a = m.a();
    let q = m.q();
    let norm_q = m.norm_q();
    let commutator_residual = (a * q - q * a.transpose()).norm();
    let tolerance = tol * m.norm_a() * norm_q;
    let q_pair = linalg::sym_sqrt_pair(q, SINGULAR_FLOOR, "Q").ok();
    let mut semigroup_residuals = Vec::with_capacity(grid.len());
    let mut semigroup_tolerances = Vec::with_capacity(grid.len());
    let mut margin = f64::INFINITY;
    for &t in grid {
        let s = expm_scaled(a, t);
        let r = (&s * q - q * s.transpose()).norm();
        semigroup_residuals.push((t, r));
        semigroup_tolerances.push(tol * norm_q * spectral_norm(&s).max(1.0));
        if let Some((sq, isq)) = &q_pair {
            margin = margin.min(1.0 - spectral_norm(&(isq * &s * sq)));
        }
    }
    let semigroup_symmetric = semigroup_residuals
        .iter()
        .zip(&semigroup_tolerances)
        .all(|((_, r), tol)| r <= tol);
    SymmetryReport {
        is_symmetric: commutator_residual <= tolerance,
        commutator_residual,
        tolerance,
        semigroup_residuals,
        semigroup_tolerances,
        semigroup_symmetric,
        contraction_margin: q_pair.map(|_| margin),
    }
}

/// Closed-form reversibility criterion for `A = [[a, c], [d, b]]`,
/// `Q = diag(1, q)` with `0 < q ≠ 1`.
pub fn classify_2x2(a: f64, b: f64, c: f64, d: f64, q: f64) -> bool {
    let det = a * b - c * d;
    a < 0.0 && det > 0.0 && d == c * q && (a - b).powi(2) + 4.0 * c * c * q > 0.0
}

/// The pair `(A, Q)` of the 2×2 family.
pub fn model_2x2(a: f64, b: f64, c: f64, d: f64, q: f64) -> Result<OUModel> {
    OUModel::dense(
        DMatrix::from_row_slice(2, 2, &[a, c, d, b]),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, q]),
    )
}

/// `A_Q = Q^{-1/2} A Q^{1/2}` with the eigenpairs of `−A_Q`.
#[derive(Debug, Clone)]
pub struct ConjugatedGenerator {
    pub a_q: DMatrix<f64>,
    /// `max |A_Q − A_Qᵀ|` before symmetrisation.
    pub asymmetry: f64,
    pub q_sqrt: DMatrix<f64>,
    pub q_inv_sqrt: DMatrix<f64>,
    /// Eigenvalues `β_i` of `−A_Q` ascending, eigenvectors `f_i`.
    pub eig: SortedEigen,
}

impl ConjugatedGenerator {
    pub fn new(m: &OUModel) -> Result<Self> {
        let (q_sqrt, q_inv_sqrt) = linalg::sym_sqrt_pair(m.q(), SINGULAR_FLOOR, "Q")?;
        let raw = &q_inv_sqrt * m.a() * &q_sqrt;
        let asym = asymmetry(&raw);
        let a_q = symmetrize(&raw);
        let eig = SortedEigen::new(&(-&a_q));
        Ok(Self {
            a_q,
            asymmetry: asym,
            q_sqrt,
            q_inv_sqrt,
            eig,
        })
    }

    pub fn gap(&self) -> f64 {
        self.eig.values[0]
    }

    /// `S_Q(t) = exp(t A_Q)` through the eigendecomposition.
    pub fn s_q(&self, t: f64) -> DMatrix<f64> {
        self.eig.map(|b| (-b * t).exp())
    }
}

/// Every operator derived from a symmetric model.
#[derive(Debug, Clone)]
pub struct OperatorBundle {
    pub gen: ConjugatedGenerator,
    pub a_0: DMatrix<f64>,
    pub a_0_asymmetry: f64,
    pub q_inf_sqrt: DMatrix<f64>,
    pub q_inf_inv_sqrt: DMatrix<f64>,
    /// `V = Q^{1/2} Q_∞^{-1/2}`.
    pub v: DMatrix<f64>,
    /// Orthogonal factor of `V = U √(−2 A_0)`.
    pub u: DMatrix<f64>,
    /// Eigenpairs of `−A_0`: `β_i` ascending with eigenvectors `g_i`
    /// (the chaos frame).
    pub eig_a0: SortedEigen,
}

impl OperatorBundle {
    pub fn new(m: &OUModel, g: &GramianSet, tol: f64) -> Result<Self> {
        let rep = commutator_only(m, tol);
        if !rep.0 {
            return Err(Error::NotSymmetric {
                residual: rep.1,
                tolerance: rep.2,
            });
        }
        let gen = ConjugatedGenerator::new(m)?;
        let (q_inf_sqrt, q_inf_inv_sqrt) =
            linalg::sym_sqrt_pair(&g.q_inf, SINGULAR_FLOOR, "Q_inf")?;
        let raw = &q_inf_inv_sqrt * m.a() * &q_inf_sqrt;
        let a_0_asymmetry = asymmetry(&raw);
        let a_0 = symmetrize(&raw);
        let v = &gen.q_sqrt * &q_inf_inv_sqrt;
        let (u, _) = linalg::polar(&v);
        let eig_a0 = SortedEigen::new(&(-&a_0));
        Ok(Self {
            gen,
            a_0,
            a_0_asymmetry,
            q_inf_sqrt,
            q_inf_inv_sqrt,
            v,
            u,
            eig_a0,
        })
    }

    pub fn dim(&self) -> usize {
        self.a_0.nrows()
    }

    pub fn a_q(&self) -> &DMatrix<f64> {
        &self.gen.a_q
    }

    /// Spectral gap `β_1` of `−A_Q`.
    pub fn gap(&self) -> f64 {
        self.gen.gap()
    }

    /// `β_i` of `−A_0` ascending; these weight the chaos grades.
    pub fn betas(&self) -> Vec<f64> {
        self.eig_a0.values.iter().copied().collect()
    }

    pub fn s_q(&self, t: f64) -> DMatrix<f64> {
        self.gen.s_q(t)
    }

    pub fn s_0(&self, t: f64) -> DMatrix<f64> {
        self.eig_a0.map(|b| (-b * t).exp())
    }

    /// Map from state `x` to whitened chaos coordinates
    /// `y = Gᵀ Q_∞^{-1/2} x`.
    pub fn whitening(&self) -> DMatrix<f64> {
        self.eig_a0.vectors.transpose() * &self.q_inf_inv_sqrt
    }

    /// Inverse map `x = Q_∞^{1/2} G y`.
    pub fn coloring(&self) -> DMatrix<f64> {
        &self.q_inf_sqrt * &self.eig_a0.vectors
    }

    pub fn invariants(&self, grid: &[f64]) -> BundleInvariants {
        let d = self.dim();
        let id = DMatrix::<f64>::identity(d, d);
        let vtv = self.v.transpose() * &self.v;
        let v_inv = self.q_inf_sqrt.clone() * &self.gen.q_inv_sqrt;
        let mut conj_v: f64 = 0.0;
        let mut conj_u: f64 = 0.0;
        let mut sharp: f64 = 0.0;
        let mut max_s0: f64 = 0.0;
        for &t in grid {
            let sq = self.s_q(t);
            let s0 = self.s_0(t);
            conj_v = conj_v.max((&self.v * &s0 * &v_inv - &sq).amax());
            conj_u = conj_u.max((&self.u * &s0 * self.u.transpose() - &sq).amax());
            sharp = sharp.max((spectral_norm(&sq) - (-self.gap() * t).exp()).abs());
            max_s0 = max_s0.max(spectral_norm(&s0));
        }
        BundleInvariants {
            a_q_asymmetry: self.gen.asymmetry,
            a_0_asymmetry: self.a_0_asymmetry,
            a_q_max_eig: -self.gen.eig.values[0],
            a_0_max_eig: -self.eig_a0.values[0],
            a_0_vs_vtv: (&self.a_0 + vtv * 0.5).amax(),
            u_orthogonality: (self.u.transpose() * &self.u - id).amax(),
            conjugation_v: conj_v,
            conjugation_u: conj_u,
            gap_transfer: (self.gap() - self.eig_a0.values[0]).abs(),
            contraction_sharpness: sharp,
            max_norm_s0: max_s0,
        }
    }
}

fn commutator_only(m: &OUModel, tol: f64) -> (bool, f64, f64) {
    let r = (m.a() * m.q() - m.q() * m.a().transpose()).norm();
    let t = tol * m.norm_a() * m.norm_q();
    (r <= t, r, t)
}

/// Residuals of the structural identities of an [`OperatorBundle`].
#[derive(Debug, Clone, Serialize)]
pub struct BundleInvariants {
    pub a_q_asymmetry: f64,
    pub a_0_asymmetry: f64,
    pub a_q_max_eig: f64,
    pub a_0_max_eig: f64,
    /// `max |A_0 + ½ VᵀV|`.
    pub a_0_vs_vtv: f64,
    pub u_orthogonality: f64,
    /// `max |V S_0 V^{-1} − S_Q|` over the grid.
    pub conjugation_v: f64,
    /// `max |U S_0 Uᵀ − S_Q|` over the grid.
    pub conjugation_u: f64,
    pub gap_transfer: f64,
    /// `max |‖S_Q(t)‖ − e^{−β_1 t}|` over the grid.
    pub contraction_sharpness: f64,
    pub max_norm_s0: f64,
}

impl BundleInvariants {
    pub fn max_residual(&self) -> f64 {
        [
            self.a_0_vs_vtv,
            self.u_orthogonality,
            self.conjugation_v,
            self.conjugation_u,
            self.gap_transfer,
            self.contraction_sharpness,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

//! Finite-time and invariant covariances `Q_t = ∫₀ᵗ S(s) Q S*(s) ds`,
//! `Q_∞ = lim Q_t`, and the Lyapunov identities they satisfy.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::linalg::{self, expm_scaled, spectral_norm, symmetrize, SortedEigen};
use crate::model::OUModel;
use crate::quadrature::integrate_adaptive;

/// Absolute tolerance per entry for the quadrature fallback.
pub const QUADRATURE_TOL: f64 = 1e-11;

/// Solves `A X + X A* = −Q`.
pub fn solve_lyapunov(m: &OUModel) -> Result<DMatrix<f64>> {
    if let Some(p) = m.example2_params() {
        return crate::presets::example2_covariance(p, None);
    }
    if m.is_diagonal() {
        let a = m.a().diagonal();
        let q = m.q().diagonal();
        return Ok(DMatrix::from_diagonal(&DVector::from_iterator(
            m.dim(),
            a.iter().zip(q.iter()).map(|(&a, &q)| -q / (2.0 * a)),
        )));
    }
    let x = linalg::solve_lyapunov(m.a(), &(-m.q()))?;
    Ok(symmetrize(&x))
}

/// `‖A X + X A* + Q‖` in the spectral norm.
pub fn lyapunov_residual(m: &OUModel, x: &DMatrix<f64>) -> f64 {
    let r = m.a() * x + x * m.a().transpose() + m.q();
    spectral_norm(&r)
}

/// Normalisation `‖A‖‖X‖ + ‖Q‖` for the residual.
pub fn lyapunov_scale(m: &OUModel, x: &DMatrix<f64>) -> f64 {
    m.norm_a() * spectral_norm(x) + m.norm_q()
}

/// `Q_t` by adaptive Gauss-Kronrod quadrature of `S(s) Q S*(s)`.
pub fn quadrature_gramian(a: &DMatrix<f64>, q: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let d = a.nrows();
    if t == 0.0 {
        return DMatrix::zeros(d, d);
    }
    let f = |s: f64| {
        let e = expm_scaled(a, s);
        let v = &e * q * e.transpose();
        DVector::from_column_slice(v.as_slice())
    };
    let r = integrate_adaptive(f, 0.0, t, QUADRATURE_TOL);
    symmetrize(&DMatrix::from_column_slice(d, d, r.value.as_slice()))
}

/// `Q_t`; uses `Q_∞ − S(t) Q_∞ S*(t)` when `Q_∞` is supplied.
///
/// Diagonal models use the closed form with `expm1`. For `‖A‖t < 1` the
/// subtraction cancels most digits, so the block exponential is used
/// there instead.
pub fn finite_time_gramian(m: &OUModel, q_inf: Option<&DMatrix<f64>>, t: f64) -> DMatrix<f64> {
    let d = m.dim();
    if t == 0.0 {
        return DMatrix::zeros(d, d);
    }
    if let Some(p) = m.example2_params() {
        if let Ok(x) = crate::presets::example2_covariance(p, Some(t)) {
            return x;
        }
    }
    if m.is_diagonal() {
        let a = m.a().diagonal();
        let q = m.q().diagonal();
        return DMatrix::from_diagonal(&DVector::from_iterator(
            d,
            a.iter()
                .zip(q.iter())
                .map(|(&a, &q)| -q / (2.0 * a) * -(2.0 * a * t).exp_m1()),
        ));
    }
    match q_inf {
        Some(x) if m.norm_a() * t >= 1.0 => {
            let s = expm_scaled(m.a(), t);
            symmetrize(&(x - &s * x * s.transpose()))
        }
        Some(_) => symmetrize(&linalg::van_loan_gramian(m.a(), m.q(), t)),
        None => quadrature_gramian(m.a(), m.q(), t),
    }
}

/// `Q_∞` together with `Q_t` on a grid of times.
#[derive(Debug, Clone)]
pub struct GramianSet {
    pub q_inf: DMatrix<f64>,
    pub times: Vec<f64>,
    pub q_t: Vec<DMatrix<f64>>,
    pub lyapunov_residual: f64,
    pub lyapunov_scale: f64,
}

/// Default grid `{0.01, 0.1, 1, 10} / ‖A‖`.
pub fn default_times(m: &OUModel) -> Vec<f64> {
    let s = 1.0 / m.norm_a().max(f64::MIN_POSITIVE);
    [0.01, 0.1, 1.0, 10.0].iter().map(|c| c * s).collect()
}

impl GramianSet {
    pub fn new(m: &OUModel) -> Result<Self> {
        Self::with_times(m, &default_times(m))
    }

    pub fn with_times(m: &OUModel, times: &[f64]) -> Result<Self> {
        let q_inf = solve_lyapunov(m)?;
        let q_t: Vec<DMatrix<f64>> = times
            .par_iter()
            .map(|&t| finite_time_gramian(m, Some(&q_inf), t))
            .collect();
        Ok(Self {
            lyapunov_residual: lyapunov_residual(m, &q_inf),
            lyapunov_scale: lyapunov_scale(m, &q_inf),
            q_inf,
            times: times.to_vec(),
            q_t,
        })
    }

    pub fn dim(&self) -> usize {
        self.q_inf.nrows()
    }

    /// `Q_t` for an arbitrary `t` (not necessarily on the stored grid).
    pub fn at(&self, m: &OUModel, t: f64) -> DMatrix<f64> {
        match self.times.iter().position(|&s| s == t) {
            Some(i) => self.q_t[i].clone(),
            None => finite_time_gramian(m, Some(&self.q_inf), t),
        }
    }

    pub fn relative_residual(&self) -> f64 {
        self.lyapunov_residual / self.lyapunov_scale.max(f64::MIN_POSITIVE)
    }

    /// Most negative eigenvalue of `Q_{t_{k+1}} − Q_{t_k}` over the grid,
    /// relative to `‖Q_∞‖` (nonnegative means monotone).
    pub fn monotonicity_margin(&self) -> f64 {
        let mut order: Vec<usize> = (0..self.times.len()).collect();
        order.sort_by(|&i, &j| self.times[i].total_cmp(&self.times[j]));
        let scale = spectral_norm(&self.q_inf).max(f64::MIN_POSITIVE);
        order
            .windows(2)
            .map(|w| SortedEigen::new(&(&self.q_t[w[1]] - &self.q_t[w[0]])).min() / scale)
            .fold(f64::INFINITY, f64::min)
    }

    /// Rows `(t, λ_1(Q_t), …, λ_d(Q_t))` with eigenvalues ascending.
    pub fn eigenvalue_table(&self) -> Vec<(f64, Vec<f64>)> {
        self.times
            .iter()
            .zip(&self.q_t)
            .map(|(&t, q)| (t, SortedEigen::new(q).values.iter().copied().collect()))
            .collect()
    }
}

/// `max |Q v|` over unit eigenvectors `v` of `Q_∞` whose eigenvalue lies
/// below `rel_tol · λ_max(Q_∞)`; zero when `Q_∞` has no near-kernel.
pub fn kernel_inclusion_defect(m: &OUModel, q_inf: &DMatrix<f64>, rel_tol: f64) -> f64 {
    let eig = SortedEigen::new(q_inf);
    let cut = rel_tol * eig.max();
    (0..eig.values.len())
        .filter(|&k| eig.values[k] <= cut)
        .map(|k| (m.q() * eig.vectors.column(k)).norm())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize)]
pub struct GramianSummary {
    pub lyapunov_residual: f64,
    pub lyapunov_scale: f64,
    pub relative_residual: f64,
    pub identity_residual: f64,
    pub monotonicity_margin: f64,
    pub kernel_inclusion_defect: f64,
    pub q_inf_trace: f64,
}

impl GramianSummary {
    pub fn new(m: &OUModel, g: &GramianSet) -> Self {
        // Q_t against Q_∞ − S Q_∞ S* on the stored grid
        let identity_residual = g
            .times
            .iter()
            .zip(&g.q_t)
            .map(|(&t, qt)| {
                let s = expm_scaled(m.a(), t);
                let other = &g.q_inf - &s * &g.q_inf * s.transpose();
                spectral_norm(&(qt - other)) / spectral_norm(&g.q_inf).max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max);
        Self {
            lyapunov_residual: g.lyapunov_residual,
            lyapunov_scale: g.lyapunov_scale,
            relative_residual: g.relative_residual(),
            identity_residual,
            monotonicity_margin: g.monotonicity_margin(),
            kernel_inclusion_defect: kernel_inclusion_defect(m, &g.q_inf, 1e-10),
            q_inf_trace: g.q_inf.trace(),
        }
    }
}

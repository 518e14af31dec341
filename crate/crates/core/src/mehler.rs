//! `R_t φ(x) = E φ(Z(t,x))` through the Gaussian transition kernel, and
//! the checks built on it: gradient bound, hypercontractivity with the
//! log-Sobolev inequality, and the backward Kolmogorov residual.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::Serialize;

use crate::chaos::{self, ChaosCoefficients, ChaosFrame};
use crate::error::{Error, Result};
use crate::gramian::GramianSet;
use crate::linalg::{expm_scaled, spectral_norm, sym_sqrt};
use crate::model::OUModel;
use crate::polynomial::{Polynomial, PolynomialJet};
use crate::quadrature::{integrate_adaptive, GaussHermite, GaussianMeasure, DEFAULT_NODES};
use crate::simulate;
use crate::symmetry::OperatorBundle;

/// A real function on the state space.
pub trait Observable: Sync {
    fn eval(&self, x: &[f64]) -> f64;

    /// Total degree when the observable is a polynomial.
    fn degree(&self) -> Option<usize> {
        None
    }
}

impl Observable for Polynomial {
    fn eval(&self, x: &[f64]) -> f64 {
        Polynomial::eval(self, x)
    }

    fn degree(&self) -> Option<usize> {
        Some(Polynomial::degree(self))
    }
}

/// Any closure `&[f64] -> f64`.
pub struct FnObservable<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> Observable for FnObservable<F> {
    fn eval(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

/// `φ(x) = f(⟨ℓ, x⟩)` for a profile `f` with known kinks.
#[derive(Clone)]
pub struct Cylindrical {
    pub direction: DVector<f64>,
    pub profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub kinks: Vec<f64>,
    /// `sup |f|` when bounded.
    pub sup: Option<f64>,
}

impl std::fmt::Debug for Cylindrical {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cylindrical")
            .field("direction", &self.direction)
            .field("kinks", &self.kinks)
            .field("sup", &self.sup)
            .finish()
    }
}

impl Cylindrical {
    pub fn new(
        direction: DVector<f64>,
        profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
        kinks: Vec<f64>,
        sup: Option<f64>,
    ) -> Self {
        Self {
            direction,
            profile: Arc::new(profile),
            kinks,
            sup,
        }
    }

    /// `x ↦ clamp(⟨ℓ, x⟩, −c, c)`.
    pub fn clipped(direction: DVector<f64>, level: f64) -> Self {
        Self::new(
            direction,
            move |s| s.clamp(-level, level),
            vec![-level, level],
            Some(level),
        )
    }

    /// `E f(m + σ Z)` by adaptive quadrature split at the kinks.
    pub fn gaussian_mean(&self, m: f64, sigma: f64) -> f64 {
        if sigma == 0.0 {
            return (self.profile)(m);
        }
        const TAIL: f64 = 12.0;
        let mut cuts: Vec<f64> = self
            .kinks
            .iter()
            .map(|k| (k - m) / sigma)
            .filter(|z| z.abs() < TAIL)
            .collect();
        cuts.push(-TAIL);
        cuts.push(TAIL);
        cuts.sort_by(f64::total_cmp);
        let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        let f = |z: f64| DVector::from_element(1, (self.profile)(m + sigma * z) * norm * (-0.5 * z * z).exp());
        cuts.windows(2)
            .map(|w| integrate_adaptive(f, w[0], w[1], 1e-15).value[0])
            .sum()
    }

    /// `R_t φ(x)` for this observable.
    pub fn rt(&self, k: &TransitionKernel, x: &[f64]) -> f64 {
        let mean = k.mean(x);
        let m = self.direction.dot(&mean);
        let var = (self.direction.transpose() * &k.covariance * &self.direction)[(0, 0)];
        self.gaussian_mean(m, var.max(0.0).sqrt())
    }
}

impl Observable for Cylindrical {
    fn eval(&self, x: &[f64]) -> f64 {
        (self.profile)(self.direction.dot(&DVector::from_column_slice(x)))
    }
}

/// Law `N(S(t)x, Q_t)` of `Z(t, x)`.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    pub time: f64,
    pub mean_map: DMatrix<f64>,
    pub covariance: DMatrix<f64>,
    /// Symmetric PSD square root of `Q_t`.
    pub factor: DMatrix<f64>,
}

impl TransitionKernel {
    pub fn new(m: &OUModel, g: &GramianSet, t: f64) -> Self {
        let covariance = g.at(m, t);
        Self {
            time: t,
            mean_map: expm_scaled(m.a(), t),
            factor: sym_sqrt(&covariance),
            covariance,
        }
    }

    pub fn dim(&self) -> usize {
        self.mean_map.nrows()
    }

    pub fn mean(&self, x: &[f64]) -> DVector<f64> {
        &self.mean_map * DVector::from_column_slice(x)
    }

    pub fn law(&self, x: &[f64]) -> GaussianMeasure {
        GaussianMeasure {
            mean: self.mean(x),
            factor: self.factor.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "method")]
pub enum Method {
    GaussHermite { nodes: usize },
    MonteCarlo { samples: usize, seed: u64 },
}

impl Default for Method {
    fn default() -> Self {
        Method::GaussHermite {
            nodes: DEFAULT_NODES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    /// Standard error for Monte Carlo, `None` for quadrature.
    pub stderr: Option<f64>,
}

/// `R_t φ(x)` by tensor Gauss-Hermite or Monte Carlo.
pub fn evaluate_rt(
    k: &TransitionKernel,
    phi: &dyn Observable,
    x: &[f64],
    method: Method,
) -> Result<Estimate> {
    if x.len() != k.dim() {
        return Err(Error::Dimension(format!("point has length {}, model {}", x.len(), k.dim())));
    }
    match method {
        Method::GaussHermite { nodes } => {
            let rule = GaussHermite::new(nodes);
            let law = k.law(x);
            let value = match phi.degree() {
                Some(deg) => law.expect_polynomial(&rule, deg, |y| phi.eval(y))?,
                None => law.expect(&rule, |y| phi.eval(y))?,
            };
            Ok(Estimate {
                value,
                stderr: None,
            })
        }
        Method::MonteCarlo { samples, seed } => {
            if samples < 2 {
                return Err(Error::InvalidArgument("Monte Carlo needs at least 2 samples".into()));
            }
            let pts = simulate::sample_transition(k, x, samples, seed);
            let vals: Vec<f64> = pts.iter().map(|p| phi.eval(p.as_slice())).collect();
            let (mean, se) = mean_stderr(&vals);
            Ok(Estimate {
                value: mean,
                stderr: Some(se),
            })
        }
    }
}

/// Sample mean and its standard error.
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `R_t φ` as an exact polynomial via the chaos expansion.
pub fn rt_polynomial(phi: &Polynomial, b: &OperatorBundle, t: f64, cap: usize) -> Result<Polynomial> {
    Ok(chaos::expand(phi, b, cap)?.apply_rt(t).to_polynomial())
}

/// `∫ f dμ` for the invariant law `μ = N(0, Q_∞)`.
pub fn invariant_expectation(
    g: &GramianSet,
    nodes: usize,
    f: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<f64> {
    GaussianMeasure::centered(&g.q_inf).expect(&GaussHermite::new(nodes), f)
}

// ---------------------------------------------------------------------------
// Gradient bound

/// `‖Q_t^{-1/2} S(t) Q^{1/2}‖`, computed with a Cholesky factor of `Q_t`.
pub fn gradient_operator_norm(m: &OUModel, g: &GramianSet, t: f64) -> Result<f64> {
    let floor = 1e-8 / m.norm_a().max(f64::MIN_POSITIVE);
    if !(t >= floor) {
        return Err(Error::SingularQt(t));
    }
    if m.is_diagonal() {
        // per mode √(2|α| / (e^{2|α|t} − 1)), free of cancellation
        return Ok(m
            .a()
            .diagonal()
            .iter()
            .map(|&a| (2.0 * a.abs() / (2.0 * a.abs() * t).exp_m1()).sqrt())
            .fold(0.0, f64::max));
    }
    let qt = g.at(m, t);
    let chol = Cholesky::new(qt).ok_or(Error::SingularQt(t))?;
    let s = expm_scaled(m.a(), t);
    let rhs = s * sym_sqrt(m.q());
    let x = chol
        .l()
        .solve_lower_triangular(&rhs)
        .ok_or(Error::SingularQt(t))?;
    Ok(spectral_norm(&x))
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientRow {
    pub t: f64,
    pub operator_norm: f64,
    pub inv_sqrt_t: f64,
    /// `max_x |Q^{1/2} ∇ R_t φ(x)|` over the point cloud.
    pub sampled_sup: Option<f64>,
    /// `√(2/π) t^{-1/2} ‖φ‖_∞ (1 + slack)`.
    pub sampled_limit: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradientReport {
    pub rows: Vec<GradientRow>,
    pub slack: f64,
    pub step: f64,
    pub pass: bool,
}

/// Relative slack of the sampled gradient check.
pub const GRADIENT_SLACK: f64 = 0.05;

/// Matrix bound on every `t`, and the sampled sup-gradient bound for a
/// bounded cylindrical `φ` (central differences of step
/// `1e-4 · √λ_max(Q_∞)`).
pub fn check_gradient_bound(
    m: &OUModel,
    g: &GramianSet,
    phi: Option<&Cylindrical>,
    times: &[f64],
    points: &[DVector<f64>],
) -> Result<GradientReport> {
    let d = m.dim();
    let scale = spectral_norm(&g.q_inf).sqrt();
    let step = 1e-4 * scale;
    let q_half = sym_sqrt(m.q());
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let norm = gradient_operator_norm(m, g, t)?;
        let inv = 1.0 / t.sqrt();
        let mut row = GradientRow {
            t,
            operator_norm: norm,
            inv_sqrt_t: inv,
            sampled_sup: None,
            sampled_limit: None,
            pass: norm <= inv * (1.0 + 1e-12),
        };
        if let Some(phi) = phi {
            let sup = phi
                .sup
                .ok_or_else(|| Error::InvalidArgument("gradient check needs a bounded observable".into()))?;
            let k = TransitionKernel::new(m, g, t);
            let mut best: f64 = 0.0;
            for x in points {
                let mut grad = DVector::zeros(d);
                for i in 0..d {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += step;
                    xm[i] -= step;
                    grad[i] = (phi.rt(&k, xp.as_slice()) - phi.rt(&k, xm.as_slice())) / (2.0 * step);
                }
                best = best.max((&q_half * grad).norm());
            }
            let limit = (2.0 / std::f64::consts::PI).sqrt() * inv * sup * (1.0 + GRADIENT_SLACK);
            row.sampled_sup = Some(best);
            row.sampled_limit = Some(limit);
            row.pass &= best <= limit;
        }
        rows.push(row);
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(GradientReport {
        rows,
        slack: GRADIENT_SLACK,
        step,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Hypercontractivity and log-Sobolev

/// `∫ |ψ|^p dμ` in whitened coordinates; exact when `p` is an even
/// integer, otherwise node doubling from `DEFAULT_NODES`.
fn lp_power(c: &ChaosCoefficients, p: f64, tol: f64) -> Result<(f64, bool, f64)> {
    let d = c.frame.dim();
    let mu = GaussianMeasure::standard(d);
    let deg = c.coeffs.keys().map(|k| k.order()).max().unwrap_or(0);
    if p.fract() == 0.0 && (p as i64) % 2 == 0 {
        let total = deg * p as usize;
        let nodes = (total / 2 + 1).max(2);
        let v = mu.expect_polynomial(&GaussHermite::new(nodes), total, |y| c.eval_frame(y).powi(p as i32))?;
        return Ok((v, true, 0.0));
    }
    let r = mu.expect_refined(DEFAULT_NODES, tol, |y| c.eval_frame(y).abs().powf(p))?;
    Ok((r.value, r.converged, r.change))
}

#[derive(Debug, Clone, Serialize)]
pub struct HypercontractivityReport {
    pub p: f64,
    pub q: f64,
    pub t: f64,
    pub beta: f64,
    /// `‖R_t φ‖_q`.
    pub lhs: f64,
    /// `‖φ‖_p`.
    pub rhs: f64,
    pub margin: f64,
    pub converged: bool,
    pub quadrature_change: f64,
    pub lsi: LsiReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct LsiReport {
    /// `∫ φ² log|φ| dμ`.
    pub entropy: f64,
    /// `⟨−Lφ, φ⟩`.
    pub dirichlet: f64,
    pub norm: f64,
    /// `(2/β)⟨−Lφ,φ⟩ + ‖φ‖² log ‖φ‖`.
    pub bound: f64,
    pub margin: f64,
    pub converged: bool,
    /// Change of the entropy under the last node doubling; the integrand
    /// has logarithmic singularities at zeros of `φ`, so convergence is
    /// only algebraic and this is the error bar on `margin`.
    pub quadrature_change: f64,
}

/// Critical exponent `1 + (p − 1) e^{2βt}`.
pub fn critical_exponent(p: f64, beta: f64, t: f64) -> f64 {
    1.0 + (p - 1.0) * (2.0 * beta * t).exp()
}

/// Time at which the critical exponent reaches `q`.
pub fn time_for_exponent(p: f64, q: f64, beta: f64) -> f64 {
    ((q - 1.0) / (p - 1.0)).ln() / (2.0 * beta)
}

pub fn check_hypercontractivity_lsi(
    b: &OperatorBundle,
    phi: &Polynomial,
    p: f64,
    t: f64,
    cap: usize,
    tol: f64,
) -> Result<HypercontractivityReport> {
    hypercontractivity(b, phi, p, critical_exponent(p, b.gap(), t), t, cap, tol)
}

/// Same check at the time where the critical exponent equals `q`, so an
/// even integer `q` keeps the exact quadrature path.
pub fn check_hypercontractivity_at(
    b: &OperatorBundle,
    phi: &Polynomial,
    p: f64,
    q: f64,
    cap: usize,
    tol: f64,
) -> Result<HypercontractivityReport> {
    if !(q > p) {
        return Err(Error::InvalidArgument(format!("q = {q} must exceed p = {p}")));
    }
    hypercontractivity(b, phi, p, q, time_for_exponent(p, q, b.gap()), cap, tol)
}

fn hypercontractivity(
    b: &OperatorBundle,
    phi: &Polynomial,
    p: f64,
    q: f64,
    t: f64,
    cap: usize,
    tol: f64,
) -> Result<HypercontractivityReport> {
    if !(p > 1.0) {
        return Err(Error::InvalidArgument(format!("p = {p} must exceed 1")));
    }
    let beta = b.gap();
    let c = chaos::expand(phi, b, cap)?;
    let rt = c.apply_rt(t);
    let (lq, conv_q, ch_q) = lp_power(&rt, q, tol)?;
    let (lp, conv_p, ch_p) = lp_power(&c, p, tol)?;
    let lhs = lq.powf(1.0 / q);
    let rhs = lp.powf(1.0 / p);
    Ok(HypercontractivityReport {
        p,
        q,
        t,
        beta,
        lhs,
        rhs,
        margin: rhs - lhs,
        converged: conv_q && conv_p,
        quadrature_change: ch_q.max(ch_p),
        lsi: check_lsi(&c, beta, tol)?,
    })
}

/// Log-Sobolev inequality with constant `2/β`; `φ² log|φ|` is taken as 0
/// at zeros of `φ`.
pub fn check_lsi(c: &ChaosCoefficients, beta: f64, tol: f64) -> Result<LsiReport> {
    let mu = GaussianMeasure::standard(c.frame.dim());
    let r = mu.expect_refined(DEFAULT_NODES, tol, |y| {
        let v = c.eval_frame(y);
        if v == 0.0 {
            0.0
        } else {
            v * v * v.abs().ln()
        }
    })?;
    let dirichlet = -c.inner(&c.apply_generator());
    let norm_sq = c.norm_sq();
    let norm = norm_sq.sqrt();
    let bound = 2.0 / beta * dirichlet + if norm > 0.0 { norm_sq * norm.ln() } else { 0.0 };
    Ok(LsiReport {
        entropy: r.value,
        dirichlet,
        norm,
        bound,
        margin: bound - r.value,
        converged: r.converged,
        quadrature_change: r.change,
    })
}

// ---------------------------------------------------------------------------
// Kolmogorov equation

#[derive(Debug, Clone, Serialize)]
pub struct KolmogorovReport {
    pub t: f64,
    /// `max |∂_t u − ½tr(QD²u) − ⟨x, A*Du⟩|`.
    pub residual: f64,
    /// Same residual in the conjugated form with `D^Q = Q^{1/2}D`.
    pub residual_conjugated: f64,
    pub forms_disagreement: f64,
}

/// Residual of `∂_t u = Lu` for `u = R_t φ` at the given points.
pub fn kolmogorov_residual(
    m: &OUModel,
    b: &OperatorBundle,
    phi: &Polynomial,
    t: f64,
    points: &[DVector<f64>],
    cap: usize,
) -> Result<KolmogorovReport> {
    let c = chaos::expand(phi, b, cap)?.apply_rt(t);
    let u = c.to_polynomial();
    let du_dt = c.apply_generator().to_polynomial();
    let lu = chaos::generator_symbolic(&u, m.a(), m.q());
    let jet = PolynomialJet::new(&u);
    let q_half = &b.gen.q_sqrt;
    let q_inv_half = &b.gen.q_inv_sqrt;
    let a_q = b.a_q();
    let mut residual: f64 = 0.0;
    let mut residual_c: f64 = 0.0;
    let mut disagree: f64 = 0.0;
    for x in points {
        let xs = x.as_slice();
        let dt = du_dt.eval(xs);
        let r1 = dt - lu.eval(xs);
        let grad = jet.gradient_at(xs);
        let hess = jet.hessian_at(xs);
        let dq = q_half * &grad;
        let second = 0.5 * (q_half * &hess * q_half).trace();
        let drift = (q_inv_half * x).dot(&(a_q * &dq));
        let r2 = dt - second - drift;
        residual = residual.max(r1.abs());
        residual_c = residual_c.max(r2.abs());
        disagree = disagree.max((r1 - r2).abs());
    }
    Ok(KolmogorovReport {
        t,
        residual,
        residual_conjugated: residual_c,
        forms_disagreement: disagree,
    })
}

/// The chaos frame of a bundle, re-exported for callers that only need
/// coordinates.
pub fn frame(b: &OperatorBundle) -> ChaosFrame {
    ChaosFrame::new(b)
}

//! Gauss-Sobolev norms, Meyer-type ratios, the pointwise gradient
//! identities, and the Hilbert-Schmidt / strong Feller / compactness
//! diagnostics of the conjugated semigroup.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::chaos::{self, ChaosCoefficients};
use crate::error::{Error, Result};
use crate::gramian::{finite_time_gramian, GramianSet};
use crate::linalg::{sym_sqrt, symmetrize, SortedEigen};
use crate::model::{DiagonalLaws, OUModel};
use crate::polynomial::{Polynomial, PolynomialJet};
use crate::quadrature::{integrate_semi_infinite, GaussHermite, GaussianMeasure, DEFAULT_NODES};
use crate::symmetry::OperatorBundle;

/// Agreement required between successive node doublings.
pub const REFINE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LpValue {
    pub value: f64,
    pub exact: bool,
    pub converged: bool,
}

/// `(∫ f^p dμ)^{1/p}` for a nonnegative integrand `f` whose `p`-th power
/// is a polynomial of degree `degree · p` when `p` is an even integer.
fn lp_norm(
    mu: &GaussianMeasure,
    p: f64,
    degree: usize,
    f: impl Fn(&[f64]) -> f64 + Sync,
) -> Result<LpValue> {
    if p.fract() == 0.0 && (p as i64) % 2 == 0 {
        let total = degree * p as usize;
        let nodes = (total / 2 + 1).max(2);
        let v = mu.expect_polynomial(&GaussHermite::new(nodes), total, |x| f(x).powi(p as i32))?;
        return Ok(LpValue {
            value: v.max(0.0).powf(1.0 / p),
            exact: true,
            converged: true,
        });
    }
    let r = mu.expect_refined(DEFAULT_NODES, REFINE_TOL, |x| f(x).powf(p))?;
    Ok(LpValue {
        value: r.value.max(0.0).powf(1.0 / p),
        exact: false,
        converged: r.converged,
    })
}

/// Matrices shared by the first- and second-order gradients.
struct Gradients {
    q_half: DMatrix<f64>,
    /// `(−AQ)^{1/2}`.
    aq_half: DMatrix<f64>,
    /// `√(−A_0) Q_∞^{1/2}`, so that `D_{A_0}φ = K Dφ`.
    k: DMatrix<f64>,
    /// `√(I − A_0) K`.
    k_shift: DMatrix<f64>,
}

impl Gradients {
    fn new(m: &OUModel, b: &OperatorBundle) -> Self {
        let neg_a0 = SortedEigen::new(&(-&b.a_0));
        let k = neg_a0.map(|x| x.max(0.0).sqrt()) * &b.q_inf_sqrt;
        let k_shift = neg_a0.map(|x| (1.0 + x.max(0.0)).sqrt()) * &k;
        Self {
            q_half: b.gen.q_sqrt.clone(),
            aq_half: sym_sqrt(&symmetrize(&(-(m.a() * m.q())))),
            k,
            k_shift,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SobolevReport {
    pub p: f64,
    pub lp: f64,
    /// `‖Q^{1/2}Dφ‖_p`.
    pub grad_q: f64,
    /// `‖ ‖Q^{1/2}D²φ Q^{1/2}‖_HS ‖_p`.
    pub hess_q: f64,
    /// `‖(−AQ)^{1/2}Dφ‖_p`.
    pub grad_aq: f64,
    pub w1p_q: f64,
    pub w2p_q: f64,
    pub w1p_aq: f64,
    /// `‖√(I−L)φ‖_p / (‖φ‖_p + ‖D_{A_0}φ‖_p)`.
    pub meyer_ratio_first: f64,
    /// `‖(I−L)φ‖_p / (‖φ‖_p + ‖√(I−A_0)D_{A_0}φ‖_p + ‖D²_{A_0}φ‖_p)`.
    pub meyer_ratio_second: f64,
    pub exact: bool,
    pub converged: bool,
}

pub fn sobolev_norms(
    phi: &Polynomial,
    m: &OUModel,
    g: &GramianSet,
    b: &OperatorBundle,
    p: f64,
    cap: usize,
) -> Result<SobolevReport> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p = {p} must lie in (1, ∞)")));
    }
    let mu = GaussianMeasure::centered(&g.q_inf);
    let grads = Gradients::new(m, b);
    let jet = PolynomialJet::new(phi);
    let deg = phi.degree();
    let d1 = deg.saturating_sub(1);
    let d2 = deg.saturating_sub(2);
    let c = chaos::expand(phi, b, cap)?;
    let sqrt_shift = c.apply_sqrt_shifted();
    let shift = c.apply_multiplier(|l| 1.0 + l);

    let vals = [
        lp_norm(&mu, p, deg, |x| phi.eval(x).abs())?,
        lp_norm(&mu, p, d1, |x| (&grads.q_half * jet.gradient_at(x)).norm())?,
        lp_norm(&mu, p, d2, |x| {
            let h = jet.hessian_at(x);
            (&grads.q_half * h * &grads.q_half).norm()
        })?,
        lp_norm(&mu, p, d1, |x| (&grads.aq_half * jet.gradient_at(x)).norm())?,
        lp_norm(&mu, p, deg, |x| sqrt_shift.eval(x).abs())?,
        lp_norm(&mu, p, d1, |x| (&grads.k * jet.gradient_at(x)).norm())?,
        lp_norm(&mu, p, deg, |x| shift.eval(x).abs())?,
        lp_norm(&mu, p, d1, |x| (&grads.k_shift * jet.gradient_at(x)).norm())?,
        lp_norm(&mu, p, d2, |x| {
            let h = jet.hessian_at(x);
            (&grads.k * h * grads.k.transpose()).norm()
        })?,
    ];
    let [lp, gq, hq, gaq, sq, da0, sh, sda0, d2a0] = vals.map(|v| v.value);
    let pw = |a: f64, b: f64| (a.powf(p) + b.powf(p)).powf(1.0 / p);
    let w1p_q = pw(lp, gq);
    Ok(SobolevReport {
        p,
        lp,
        grad_q: gq,
        hess_q: hq,
        grad_aq: gaq,
        w1p_q,
        w2p_q: pw(w1p_q, hq),
        w1p_aq: pw(lp, gaq),
        meyer_ratio_first: sq / (lp + da0),
        meyer_ratio_second: sh / (lp + sda0 + d2a0),
        exact: vals.iter().all(|v| v.exact),
        converged: vals.iter().all(|v| v.converged),
    })
}

/// `‖√(I−L)φ‖₂² − ‖φ‖₂² − ‖D_{A_0}φ‖₂²`, chaos against quadrature,
/// relative to `‖√(I−L)φ‖₂²`.
pub fn meyer_p2_defect(
    phi: &Polynomial,
    m: &OUModel,
    g: &GramianSet,
    b: &OperatorBundle,
    cap: usize,
) -> Result<f64> {
    let c = chaos::expand(phi, b, cap)?;
    let lhs = c.apply_sqrt_shifted().norm_sq();
    let mu = GaussianMeasure::centered(&g.q_inf);
    let grads = Gradients::new(m, b);
    let jet = PolynomialJet::new(phi);
    let deg = phi.degree();
    let rule = GaussHermite::new(deg + 1);
    let phi_sq = mu.expect_polynomial(&rule, 2 * deg, |x| phi.eval(x).powi(2))?;
    let grad_sq = mu.expect_polynomial(&rule, 2 * deg.saturating_sub(1), |x| {
        (&grads.k * jet.gradient_at(x)).norm_squared()
    })?;
    Ok((lhs - phi_sq - grad_sq).abs() / lhs.max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone, Serialize)]
pub struct MeyerEnvelope {
    pub p: f64,
    pub count: usize,
    pub first_min: f64,
    pub first_max: f64,
    pub second_min: f64,
    pub second_max: f64,
    /// Largest relative defect of the exact `p = 2` identity.
    pub p2_identity_defect: Option<f64>,
    pub converged: bool,
}

pub fn meyer_ratio(
    corpus: &[Polynomial],
    m: &OUModel,
    g: &GramianSet,
    b: &OperatorBundle,
    p: f64,
    cap: usize,
) -> Result<MeyerEnvelope> {
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("empty observable corpus".into()));
    }
    let reports: Vec<SobolevReport> = corpus
        .par_iter()
        .map(|phi| sobolev_norms(phi, m, g, b, p, cap))
        .collect::<Result<_>>()?;
    let p2 = if p == 2.0 {
        let d: Vec<f64> = corpus
            .par_iter()
            .map(|phi| meyer_p2_defect(phi, m, g, b, cap))
            .collect::<Result<_>>()?;
        Some(d.into_iter().fold(0.0, f64::max))
    } else {
        None
    };
    let fold = |f: fn(&SobolevReport) -> f64| {
        reports.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
    };
    let first = fold(|r| r.meyer_ratio_first);
    let second = fold(|r| r.meyer_ratio_second);
    Ok(MeyerEnvelope {
        p,
        count: corpus.len(),
        first_min: first.0,
        first_max: first.1,
        second_min: second.0,
        second_max: second.1,
        p2_identity_defect: p2,
        converged: reports.iter().all(|r| r.converged),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PointwiseReport {
    /// `max | |D_{A_0}φ|² − ½|Q^{1/2}Dφ|² |` (relative).
    pub first_order: f64,
    /// `max | ‖D²_{A_0}φ‖_HS − ½‖Q^{1/2}D²φQ^{1/2}‖_HS |` (relative).
    pub second_order: f64,
    /// `max | |A_0Q_∞^{1/2}Dφ|² − ½|(−QA*)^{1/2}Dφ|² |` (relative).
    pub mixed: f64,
    /// Same comparison against the variant `¼‖QD²φ‖²_HS`; recorded, not
    /// asserted: it differs whenever Q and D²φ do not commute.
    pub second_order_variant: f64,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

pub fn pointwise_identities(
    m: &OUModel,
    b: &OperatorBundle,
    phi: &Polynomial,
    points: &[DVector<f64>],
) -> PointwiseReport {
    let grads = Gradients::new(m, b);
    let jet = PolynomialJet::new(phi);
    let qa = sym_sqrt(&symmetrize(&(-(m.q() * m.a().transpose()))));
    let a0q = &b.a_0 * &b.q_inf_sqrt;
    let mut out = PointwiseReport {
        first_order: 0.0,
        second_order: 0.0,
        mixed: 0.0,
        second_order_variant: 0.0,
    };
    for x in points {
        let grad = jet.gradient_at(x.as_slice());
        let hess = jet.hessian_at(x.as_slice());
        let da0 = (&grads.k * &grad).norm_squared();
        let dq = 0.5 * (&grads.q_half * &grad).norm_squared();
        out.first_order = out.first_order.max(rel(da0, dq));
        let d2a0 = (&grads.k * &hess * grads.k.transpose()).norm();
        let d2q = 0.5 * (&grads.q_half * &hess * &grads.q_half).norm();
        out.second_order = out.second_order.max(rel(d2a0, d2q));
        let variant = 0.25 * (m.q() * &hess).norm_squared();
        out.second_order_variant = out.second_order_variant.max(rel(d2a0 * d2a0, variant));
        let lhs = (&a0q * &grad).norm_squared();
        let rhs = 0.5 * (&qa * &grad).norm_squared();
        out.mixed = out.mixed.max(rel(lhs, rhs));
    }
    out
}

// ---------------------------------------------------------------------------
// Semigroup diagnostics

/// Growth classification of a sequence along the truncation.
#[derive(Debug, Clone, Serialize)]
pub struct Trend {
    pub first: f64,
    pub last: f64,
    /// Log-log slope over the upper half of the indices.
    pub growth_exponent: f64,
}

fn trend(values: &[f64]) -> Trend {
    let n = values.len();
    let lo = n / 2;
    let pts: Vec<(f64, f64)> = (lo..n)
        .filter(|&k| values[k] > 0.0)
        .map(|k| (((k + 1) as f64).ln(), values[k].ln()))
        .collect();
    let slope = if pts.len() >= 2 {
        let c = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / c;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / c;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        0.0
    };
    Trend {
        first: values.first().copied().unwrap_or(f64::NAN),
        last: values.last().copied().unwrap_or(f64::NAN),
        growth_exponent: slope,
    }
}

/// Verdicts that follow from the defining power laws
/// `β_k = |a| k^r`, `q_k = c k^s`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnalyticPredicates {
    /// `Σ 1/(2β_k) < ∞`, i.e. the invariant measure charges `H_Q`.
    pub mu_hq_full: bool,
    /// `β_k → ∞`.
    pub compact: bool,
    /// `sup_k e^{α_k t} (1 + √β_k) / √q_k < ∞` for every `t > 0`, i.e.
    /// `im S(t) ⊆ Q^{1/2}(dom √(−A_Q))` in the graph norm. The `1` matters
    /// when `β_k → 0`: then only `q_k` bounded below helps.
    pub strong_feller: bool,
}

pub fn analytic_predicates(laws: &DiagonalLaws) -> AnalyticPredicates {
    let r = laws.alpha.exp;
    let s = laws.q.exp;
    AnalyticPredicates {
        mu_hq_full: r > 1.0,
        compact: r > 0.0,
        strong_feller: r > 0.0 || s >= 0.0,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StrongFellerRow {
    pub t: f64,
    pub sup: f64,
    pub argmax: usize,
    pub trend: Trend,
}

#[derive(Debug, Clone, Serialize)]
pub struct RangeRow {
    pub t: f64,
    /// Bounds of `(Q_t)_k / (q_k / (1 + β_k))` over `k`.
    pub graph_ratio_min: f64,
    pub graph_ratio_max: f64,
    /// Bounds of `(Q_t)_k / (Q_∞)_k = 1 − e^{−2β_k t}` over `k`.
    pub invariant_ratio_min: f64,
    pub invariant_ratio_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagonalDiagnostics {
    pub mu_hq_partial_sums: Trend,
    pub beta_trend: Trend,
    pub strong_feller: Vec<StrongFellerRow>,
    pub range: Vec<RangeRow>,
    pub analytic: Option<AnalyticPredicates>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub gap: f64,
    pub hs_integral: f64,
    pub hs_quadrature_error: f64,
    pub half_trace: f64,
    pub trace_identity_residual: f64,
    /// `max |Q^{-1/2} Q_∞ Q^{-1/2} + ½ A_Q^{-1}|`, relative.
    pub covariance_identity_residual: f64,
    pub diagonal: Option<DiagonalDiagnostics>,
}

/// Default times for the strong Feller and range diagnostics.
pub const DIAGNOSTIC_TIMES: [f64; 3] = [0.1, 1.0, 10.0];

pub fn semigroup_diagnostics(m: &OUModel, g: &GramianSet, b: &OperatorBundle) -> DiagnosticsReport {
    let betas: Vec<f64> = b.gen.eig.values.iter().copied().collect();
    let half_trace: f64 = betas.iter().map(|b| 0.5 / b).sum();
    let hs = integrate_semi_infinite(
        |t| DVector::from_element(1, betas.iter().map(|b| (-2.0 * b * t).exp()).sum()),
        0.0,
        1e-12 * half_trace,
    );
    let hs_integral = hs.value[0];
    let lhs = &b.gen.q_inv_sqrt * &g.q_inf * &b.gen.q_inv_sqrt;
    let rhs = b.gen.eig.map(|x| 0.5 / x);
    let cov_res = (&lhs - &rhs).amax() / rhs.amax().max(f64::MIN_POSITIVE);
    DiagnosticsReport {
        gap: b.gap(),
        hs_integral,
        hs_quadrature_error: hs.error,
        half_trace,
        trace_identity_residual: (hs_integral - half_trace).abs() / half_trace,
        covariance_identity_residual: cov_res,
        diagonal: m.is_diagonal().then(|| diagonal_diagnostics(m, &DIAGNOSTIC_TIMES)),
    }
}

/// Truncation trends of the sequence predicates for a diagonal model,
/// with analytic verdicts when the defining laws are known.
pub fn diagonal_diagnostics(m: &OUModel, times: &[f64]) -> DiagonalDiagnostics {
    let alpha: Vec<f64> = m.a().diagonal().iter().copied().collect();
    let q: Vec<f64> = m.q().diagonal().iter().copied().collect();
    let beta: Vec<f64> = alpha.iter().map(|a| -a).collect();
    let mut acc = 0.0;
    let partial: Vec<f64> = beta
        .iter()
        .map(|b| {
            acc += 0.5 / b;
            acc
        })
        .collect();
    let strong_feller = times
        .iter()
        .map(|&t| {
            let vals: Vec<f64> = (0..alpha.len())
                .map(|k| (alpha[k] * t).exp() * (1.0 + beta[k].sqrt()) / q[k].sqrt())
                .collect();
            let (argmax, sup) = vals
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
            let running: Vec<f64> = vals
                .iter()
                .scan(f64::NEG_INFINITY, |s, &v| {
                    *s = s.max(v);
                    Some(*s)
                })
                .collect();
            StrongFellerRow {
                t,
                sup,
                argmax: argmax + 1,
                trend: trend(&running),
            }
        })
        .collect();
    let range = times
        .iter()
        .map(|&t| {
            let qt = finite_time_gramian(m, None, t);
            let mut row = RangeRow {
                t,
                graph_ratio_min: f64::INFINITY,
                graph_ratio_max: 0.0,
                invariant_ratio_min: f64::INFINITY,
                invariant_ratio_max: 0.0,
            };
            for k in 0..beta.len() {
                let graph = qt[(k, k)] / (q[k] / (1.0 + beta[k]));
                let inv = qt[(k, k)] / (q[k] / (2.0 * beta[k]));
                row.graph_ratio_min = row.graph_ratio_min.min(graph);
                row.graph_ratio_max = row.graph_ratio_max.max(graph);
                row.invariant_ratio_min = row.invariant_ratio_min.min(inv);
                row.invariant_ratio_max = row.invariant_ratio_max.max(inv);
            }
            row
        })
        .collect();
    DiagonalDiagnostics {
        mu_hq_partial_sums: trend(&partial),
        beta_trend: trend(&beta),
        strong_feller,
        range,
        analytic: m.laws().map(|l| analytic_predicates(&l)),
    }
}

/// `‖S_Q(t)‖²_HS = Σ e^{−2β_i t}`.
pub fn hs_norm_sq(b: &OperatorBundle, t: f64) -> f64 {
    b.gen.eig.values.iter().map(|x| (-2.0 * x * t).exp()).sum()
}

/// Chaos coefficients of `φ` (convenience for reports).
pub fn chaos_of(phi: &Polynomial, b: &OperatorBundle, cap: usize) -> Result<ChaosCoefficients> {
    chaos::expand(phi, b, cap)
}

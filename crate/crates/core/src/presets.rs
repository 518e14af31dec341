//! The two worked models: a diagonal chain with vanishing spectral gap and
//! a finite-difference weighted heat equation.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gramian::GramianSet;
use crate::linalg::{self, spectral_norm, SortedEigen};
use crate::mehler::{mean_stderr, Cylindrical, TransitionKernel};
use crate::model::{DiagonalLaws, Example2Params, OUModel, PowerLaw};
use crate::simulate::{self, StartLaw};
use crate::symmetry::{ConjugatedGenerator, OperatorBundle, DEFAULT_TOL};

/// `α_k = −1/k`, `q_k = k^{-3}`.
pub const EXAMPLE1_LAWS: DiagonalLaws = DiagonalLaws {
    alpha: PowerLaw {
        coef: -1.0,
        exp: -1.0,
    },
    q: PowerLaw {
        coef: 1.0,
        exp: -3.0,
    },
};

pub fn example1(n: usize) -> Result<OUModel> {
    OUModel::from_laws(EXAMPLE1_LAWS, n)
}

/// Uniform grid on `(−L, L)` with `n` interior points and Dirichlet ends.
#[derive(Debug, Clone)]
pub struct Example2Grid {
    pub params: Example2Params,
    pub h: f64,
    pub zeta: Vec<f64>,
    /// `ρ(ζ_j) = e^{−κ|ζ_j|}`.
    pub rho: Vec<f64>,
    /// Frame weights `√(h ρ_j)`: nodal values `u_j` have coordinates `W u`.
    pub w: Vec<f64>,
}

impl Example2Grid {
    pub fn new(params: Example2Params) -> Result<Self> {
        let Example2Params {
            kappa,
            m,
            halfwidth,
            n,
        } = params;
        if !(kappa > 0.0 && kappa.is_finite()) || !(m > 0.0 && m.is_finite()) {
            return Err(Error::Schema("example2 needs kappa > 0 and m > 0".into()));
        }
        if !(halfwidth > 0.0 && halfwidth.is_finite()) {
            return Err(Error::Schema("example2 needs halfwidth > 0".into()));
        }
        if n < 16 {
            return Err(Error::GridTooCoarse(format!("n = {n} < 16 grid points")));
        }
        let h = 2.0 * halfwidth / (n as f64 + 1.0);
        if m.sqrt() * h > 1.0 {
            return Err(Error::GridTooCoarse(format!(
                "√m·h = {:.3} > 1; the harmonic direction is not resolved",
                m.sqrt() * h
            )));
        }
        let zeta: Vec<f64> = (0..n).map(|j| -halfwidth + (j as f64 + 1.0) * h).collect();
        let rho: Vec<f64> = zeta.iter().map(|z| (-kappa * z.abs()).exp()).collect();
        let w = rho.iter().map(|r| (h * r).sqrt()).collect();
        Ok(Self {
            params,
            h,
            zeta,
            rho,
            w,
        })
    }

    pub fn n(&self) -> usize {
        self.zeta.len()
    }

    /// `Δ_h − m` on nodal values (symmetric tridiagonal).
    pub fn nodal_operator(&self) -> DMatrix<f64> {
        let n = self.n();
        let h2 = self.h * self.h;
        let mut b = DMatrix::zeros(n, n);
        for j in 0..n {
            b[(j, j)] = -2.0 / h2 - self.params.m;
            if j + 1 < n {
                b[(j, j + 1)] = 1.0 / h2;
                b[(j + 1, j)] = 1.0 / h2;
            }
        }
        b
    }

    /// Harmonic direction `g(ζ) = e^{√m ζ}` at the nodes.
    pub fn harmonic_nodal(&self) -> DVector<f64> {
        let s = self.params.m.sqrt();
        DVector::from_iterator(self.n(), self.zeta.iter().map(|z| (s * z).exp()))
    }

    /// Frame coordinates of a nodal vector.
    pub fn to_frame(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.n(), u.iter().zip(&self.w).map(|(a, w)| a * w))
    }
}

/// Drift `W(Δ_h − m)W^{-1}` and noise `diag(ρ)` in the weighted frame.
pub fn example2(params: Example2Params) -> Result<OUModel> {
    let grid = Example2Grid::new(params)?;
    let b = grid.nodal_operator();
    let n = grid.n();
    let a = DMatrix::from_fn(n, n, |i, j| {
        if b[(i, j)] == 0.0 {
            0.0
        } else {
            grid.w[i] * b[(i, j)] / grid.w[j]
        }
    });
    let q = DMatrix::from_diagonal(&DVector::from_column_slice(&grid.rho));
    Ok(OUModel::example2_raw(a, q, params))
}

/// `Q_t` (or `Q_∞` for `t = None`) of the Example 2 discretisation in
/// closed form: `W V diag((1 − e^{−2μt}) / (2hμ)) Vᵀ W` with `(μ, V)` the
/// eigenpairs of `m − Δ_h`.
pub fn example2_covariance(params: Example2Params, t: Option<f64>) -> Result<DMatrix<f64>> {
    let grid = Example2Grid::new(params)?;
    let eig = SortedEigen::new(&(-grid.nodal_operator()));
    let h = grid.h;
    let c = eig.map(|mu| match t {
        Some(t) => -(-2.0 * mu * t).exp_m1() / (2.0 * h * mu),
        None => 1.0 / (2.0 * h * mu),
    });
    let n = grid.n();
    Ok(DMatrix::from_fn(n, n, |i, j| grid.w[i] * c[(i, j)] * grid.w[j]))
}

/// Facts the diagonal example must reproduce.
#[derive(Debug, Clone, Serialize)]
pub struct Example1Facts {
    pub n: usize,
    /// `max |Q_∞ − ½A²|`.
    pub q_inf_vs_half_a_squared: f64,
    /// `max |A_Q − A|`.
    pub a_q_vs_a: f64,
    pub gap: f64,
    pub expected_gap: f64,
}

pub fn example1_facts(n: usize) -> Result<Example1Facts> {
    let m = example1(n)?;
    let g = GramianSet::new(&m)?;
    let b = OperatorBundle::new(&m, &g, DEFAULT_TOL)?;
    Ok(Example1Facts {
        n,
        q_inf_vs_half_a_squared: (&g.q_inf - m.a() * m.a() * 0.5).amax(),
        a_q_vs_a: (b.a_q() - m.a()).amax(),
        gap: b.gap(),
        expected_gap: 1.0 / n as f64,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NormRow {
    pub t: f64,
    pub norm: f64,
    pub target: f64,
    pub relative_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementRow {
    pub n: usize,
    pub h: f64,
    /// Interior stencil residual with exact ghost values, relative.
    pub harmonic_residual: f64,
    /// `|Ã g_h|_κ / |g_h|_κ` including the Dirichlet boundary rows.
    pub dirichlet_residual: f64,
    /// Largest eigenvalue of the discrete drift.
    pub max_eigenvalue: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftedMeasure {
    pub lambda: f64,
    pub dt: f64,
    pub samples: usize,
    /// Empirical `⟨e, X_Δ − λg⟩`, `e = g/|g|`.
    pub deviation: f64,
    pub stderr: f64,
    /// `λ Δ e^{ωΔ} |Ã g|` with `ω` the numerical abscissa.
    pub drift_bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftConjugation {
    pub t: f64,
    pub points: usize,
    pub max_discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Example2Report {
    pub params: Example2Params,
    pub below_threshold: bool,
    /// `‖ÃQ − QÃᵀ‖ / (‖Ã‖‖Q‖)`.
    pub symmetry_residual: f64,
    pub beta1: f64,
    pub norm_rows: Vec<NormRow>,
    pub max_norm_gap: f64,
    pub refinements: Vec<RefinementRow>,
    pub observed_order: Option<f64>,
    pub uniformly_negative: bool,
    pub shifted_measure: Option<ShiftedMeasure>,
    pub shift_conjugation: Option<ShiftConjugation>,
}

#[derive(Debug, Clone, Copy)]
pub struct Example2Options {
    pub lambda: f64,
    pub dt: f64,
    pub samples: usize,
    pub seed: u64,
    /// Coarsest grid of the refinement study.
    pub refinement_base: usize,
    /// Number of grid doublings in the refinement study.
    pub doublings: usize,
}

impl Default for Example2Options {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            dt: 0.1,
            samples: 4000,
            seed: 0,
            refinement_base: 128,
            doublings: 2,
        }
    }
}

fn refinement_row(params: Example2Params) -> Result<RefinementRow> {
    let grid = Example2Grid::new(params)?;
    let s = params.m.sqrt();
    let h = grid.h;
    // exact ghost values turn every interior row into the same multiple of g
    let harmonic_residual = (2.0 * ((s * h).cosh() - 1.0) / (h * h) - params.m).abs() / params.m;
    let g = grid.harmonic_nodal();
    let model = example2(params)?;
    let gf = grid.to_frame(&g);
    let dirichlet_residual = (model.a() * &gf).norm() / gf.norm();
    let gen = ConjugatedGenerator::new(&model)?;
    Ok(RefinementRow {
        n: params.n,
        h,
        harmonic_residual,
        dirichlet_residual,
        max_eigenvalue: -gen.gap(),
    })
}

/// Discrete checks of the weighted heat equation.
pub fn example2_checks(params: Example2Params, opts: Example2Options) -> Result<Example2Report> {
    let model = example2(params)?;
    let grid = Example2Grid::new(params)?;
    let a = model.a();
    let q = model.q();
    let symmetry_residual =
        (a * q - q * a.transpose()).norm() / (spectral_norm(a) * spectral_norm(q));
    let gen = ConjugatedGenerator::new(&model)?;
    let beta1 = gen.gap();
    let norm_rows: Vec<NormRow> = (0..20)
        .map(|k| {
            let t = 0.1 + 1.9 * k as f64 / 19.0;
            let norm = spectral_norm(&gen.s_q(t));
            let target = (-params.m * t).exp();
            NormRow {
                t,
                norm,
                target,
                relative_gap: (norm - target).abs() / target,
            }
        })
        .collect();
    let max_norm_gap = norm_rows.iter().map(|r| r.relative_gap).fold(0.0, f64::max);

    let below = params.m < params.kappa * params.kappa / 4.0;
    let mut refinements = Vec::new();
    for k in 0..=opts.doublings {
        let n = (opts.refinement_base + 1) * (1 << k) - 1;
        refinements.push(refinement_row(Example2Params { n, ..params })?);
    }
    let observed_order = (below && refinements.len() >= 2).then(|| {
        let r = &refinements;
        let last = r.len() - 1;
        (r[last - 1].harmonic_residual / r[last].harmonic_residual).ln()
            / (r[last - 1].h / r[last].h).ln()
    });
    let uniformly_negative = refinements
        .iter()
        .all(|r| r.max_eigenvalue <= -params.m * (1.0 - 1e-9));

    let (shifted_measure, shift_conjugation) = if below {
        let g = GramianSet {
            q_inf: example2_covariance(params, None)?,
            times: vec![opts.dt],
            q_t: vec![example2_covariance(params, Some(opts.dt))?],
            lyapunov_residual: f64::NAN,
            lyapunov_scale: f64::NAN,
        };
        let gf = grid.to_frame(&grid.harmonic_nodal());
        let ag = (a * &gf).norm();
        let omega = SortedEigen::new(&linalg::symmetrize(a)).max();
        let drift = |t: f64| opts.lambda * t * (omega.max(0.0) * t).exp() * ag;

        let shift = &gf * opts.lambda;
        let ens = simulate::simulate_paths(
            &model,
            &g,
            &StartLaw::Shifted(shift.clone()),
            opts.dt,
            1,
            opts.samples,
            opts.seed,
        )?;
        let e = &gf / gf.norm();
        let proj: Vec<f64> = (0..ens.samples)
            .map(|s| e.dot(&(DVector::from_column_slice(ens.state(s, 1)) - &shift)))
            .collect();
        let (dev, se) = mean_stderr(&proj);
        let bound = drift(opts.dt);
        let shifted = ShiftedMeasure {
            lambda: opts.lambda,
            dt: opts.dt,
            samples: opts.samples,
            deviation: dev,
            stderr: se,
            drift_bound: bound,
            pass: dev.abs() <= 4.0 * se + bound,
        };

        // R_t φ(x + a) against R_t(φ(· + a))(x) for φ = tanh⟨ℓ, ·⟩
        let t = opts.dt;
        let ell_nodal = DVector::from_iterator(grid.n(), grid.zeta.iter().map(|z| (-z * z).exp()));
        let ell = grid.to_frame(&ell_nodal);
        let ell = &ell / ell.norm();
        let phi = Cylindrical::new(ell.clone(), f64::tanh, vec![], Some(1.0));
        let kernel = TransitionKernel {
            time: t,
            mean_map: linalg::expm_scaled(a, t),
            factor: DMatrix::zeros(0, 0),
            covariance: g.q_t[0].clone(),
        };
        let sigma = (ell.transpose() * &kernel.covariance * &ell)[(0, 0)].max(0.0).sqrt();
        let mut worst: f64 = 0.0;
        let pts = simulate::simulate_paths(&model, &g, &StartLaw::Stationary, t, 0, 8, opts.seed ^ 0x5eed)?;
        for s in 0..pts.samples {
            let x = DVector::from_column_slice(pts.state(s, 0));
            let lhs = phi.gaussian_mean(ell.dot(&(&kernel.mean_map * (&x + &shift))), sigma);
            let rhs = phi.gaussian_mean(ell.dot(&(&kernel.mean_map * &x + &shift)), sigma);
            worst = worst.max((lhs - rhs).abs());
        }
        let tolerance = drift(t) + 1e-12;
        (
            Some(shifted),
            Some(ShiftConjugation {
                t,
                points: pts.samples,
                max_discrepancy: worst,
                tolerance,
                pass: worst <= tolerance,
            }),
        )
    } else {
        (None, None)
    };

    Ok(Example2Report {
        params,
        below_threshold: below,
        symmetry_residual,
        beta1,
        norm_rows,
        max_norm_gap,
        refinements,
        observed_order,
        uniformly_negative,
        shifted_measure,
        shift_conjugation,
    })
}

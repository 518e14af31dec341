//! Exact-in-law sampling `Z_{k+1} = S(Δ) Z_k + ξ_k`, `ξ_k ~ N(0, Q_Δ)`,
//! with one reproducible random stream per sample.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::chaos;
use crate::error::{Error, Result};
use crate::gramian::GramianSet;
use crate::linalg::{expm_scaled, spectral_norm, sym_sqrt, sym_sqrt_pair};
use crate::mehler::{mean_stderr, Observable, TransitionKernel};
use crate::model::OUModel;
use crate::polynomial::Polynomial;
use crate::symmetry::{ConjugatedGenerator, OperatorBundle, SINGULAR_FLOOR};

/// Random stream for sample `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normals(rng: &mut impl Rng, d: usize) -> DVector<f64> {
    DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// `n` independent draws from `N(S(t)x, Q_t)`.
pub fn sample_transition(k: &TransitionKernel, x: &[f64], n: usize, seed: u64) -> Vec<DVector<f64>> {
    let mean = k.mean(x);
    let d = k.dim();
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            &mean + &k.factor * normals(&mut rng, d)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum StartLaw {
    Point(DVector<f64>),
    Stationary,
    /// `N(shift, Q_∞)`.
    Shifted(DVector<f64>),
}

/// Sampled paths stored as `samples × (steps + 1) × d`.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub dt: f64,
    pub steps: usize,
    pub samples: usize,
    pub dim: usize,
    pub seed: u64,
    pub model_hash: String,
    pub stationary_start: bool,
    states: Vec<f64>,
}

impl PathEnsemble {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| k as f64 * self.dt).collect()
    }

    pub fn state(&self, sample: usize, step: usize) -> &[f64] {
        let off = (sample * (self.steps + 1) + step) * self.dim;
        &self.states[off..off + self.dim]
    }

    /// Empirical covariance `E[Z_k Z_kᵀ]` (zero-mean estimator).
    pub fn second_moment(&self, step: usize) -> DMatrix<f64> {
        self.cross_moment(step, step)
    }

    /// `E[Z_j Z_iᵀ]`.
    pub fn cross_moment(&self, j: usize, i: usize) -> DMatrix<f64> {
        let d = self.dim;
        let mut c = DMatrix::zeros(d, d);
        for s in 0..self.samples {
            let zj = self.state(s, j);
            let zi = self.state(s, i);
            for r in 0..d {
                for col in 0..d {
                    c[(r, col)] += zj[r] * zi[col];
                }
            }
        }
        c / self.samples as f64
    }

    pub fn mean(&self, step: usize) -> DVector<f64> {
        let mut m = DVector::zeros(self.dim);
        for s in 0..self.samples {
            m += DVector::from_column_slice(self.state(s, step));
        }
        m / self.samples as f64
    }
}

/// Exact discretisation with the symmetric square root of `Q_Δ`.
pub fn simulate_paths(
    m: &OUModel,
    g: &GramianSet,
    start: &StartLaw,
    dt: f64,
    steps: usize,
    samples: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("step {dt} must be positive")));
    }
    let d = m.dim();
    if let StartLaw::Point(x) | StartLaw::Shifted(x) = start {
        if x.len() != d {
            return Err(Error::Dimension(format!("start point has length {}, model {d}", x.len())));
        }
    }
    let s = expm_scaled(m.a(), dt);
    let noise = sym_sqrt(&g.at(m, dt));
    let init = sym_sqrt(&g.q_inf);
    let stride = (steps + 1) * d;
    let mut states = vec![0.0; samples * stride];
    states.par_chunks_mut(stride).enumerate().for_each(|(i, out)| {
        let mut rng = stream(seed, i as u64);
        let mut z = match start {
            StartLaw::Point(x) => x.clone(),
            StartLaw::Stationary => &init * normals(&mut rng, d),
            StartLaw::Shifted(x) => x + &init * normals(&mut rng, d),
        };
        out[..d].copy_from_slice(z.as_slice());
        for k in 1..=steps {
            z = &s * &z + &noise * normals(&mut rng, d);
            out[k * d..(k + 1) * d].copy_from_slice(z.as_slice());
        }
    });
    Ok(PathEnsemble {
        dt,
        steps,
        samples,
        dim: d,
        seed,
        model_hash: m.hash(),
        stationary_start: matches!(start, StartLaw::Stationary),
        states,
    })
}

/// Composes one-step moments `k` times and compares with `S(kΔ)` and
/// `Q_{kΔ}`; returns the larger relative discrepancy.
pub fn composition_defect(m: &OUModel, g: &GramianSet, dt: f64, k: usize) -> f64 {
    let s = expm_scaled(m.a(), dt);
    let qd = g.at(m, dt);
    let d = m.dim();
    let mut mean_map = DMatrix::identity(d, d);
    let mut cov = DMatrix::zeros(d, d);
    for _ in 0..k {
        mean_map = &s * mean_map;
        cov = &s * cov * s.transpose() + &qd;
    }
    let t = k as f64 * dt;
    let sk = expm_scaled(m.a(), t);
    let qk = g.at(m, t);
    let e1 = (&mean_map - &sk).amax() / sk.amax().max(1e-300);
    let e2 = (&cov - &qk).amax() / spectral_norm(&qk).max(1e-300);
    e1.max(e2)
}

/// Runs `Z` and the conjugated process `Z̃` (drift `A_Q`, identity noise)
/// on shared noise and returns `max |Q^{-1/2} Z_k − Z̃_k|`.
pub fn coupling_discrepancy(
    m: &OUModel,
    g: &GramianSet,
    x: &DVector<f64>,
    dt: f64,
    steps: usize,
    seed: u64,
) -> Result<f64> {
    let gen = ConjugatedGenerator::new(m)?;
    let (_, q_inv_half) = sym_sqrt_pair(m.q(), SINGULAR_FLOOR, "Q")?;
    let s = expm_scaled(m.a(), dt);
    let noise = sym_sqrt(&g.at(m, dt));
    let s_q = gen.s_q(dt);
    let noise_q = &q_inv_half * &noise;
    let mut rng = stream(seed, 0);
    let mut z = x.clone();
    let mut zt = &q_inv_half * x;
    let mut worst: f64 = 0.0;
    for _ in 0..steps {
        let xi = normals(&mut rng, m.dim());
        z = &s * &z + &noise * &xi;
        zt = &s_q * &zt + &noise_q * &xi;
        worst = worst.max((&q_inv_half * &z - &zt).amax());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct DetailedBalance {
    /// `E[ψ(Z_0)φ(Z_Δ)] − E[φ(Z_0)ψ(Z_Δ)]`.
    pub difference: f64,
    pub stderr: f64,
    pub z: f64,
    pub samples: usize,
}

/// Studentised detailed-balance statistic on the first transition of a
/// stationary ensemble.
pub fn test_detailed_balance(
    ens: &PathEnsemble,
    phi: &dyn Observable,
    psi: &dyn Observable,
) -> Result<DetailedBalance> {
    if !ens.stationary_start {
        return Err(Error::NotStationaryStart);
    }
    if ens.steps < 1 {
        return Err(Error::InvalidArgument("ensemble has no transition".into()));
    }
    let diffs: Vec<f64> = (0..ens.samples)
        .map(|s| {
            let z0 = ens.state(s, 0);
            let z1 = ens.state(s, 1);
            psi.eval(z0) * phi.eval(z1) - phi.eval(z0) * psi.eval(z1)
        })
        .collect();
    let (mean, se) = mean_stderr(&diffs);
    let z = if se == 0.0 {
        if mean == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(mean)
        }
    } else {
        mean / se
    };
    Ok(DetailedBalance {
        difference: mean,
        stderr: se,
        z,
        samples: ens.samples,
    })
}

/// Lag-Δ cross-covariance `S(Δ) Q_∞ = E[Z_Δ Z_0ᵀ]` under the stationary law.
pub fn analytic_cross_covariance(m: &OUModel, g: &GramianSet, dt: f64) -> DMatrix<f64> {
    expm_scaled(m.a(), dt) * &g.q_inf
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    /// `(t, log ‖R_t φ − Π₀φ‖₂)` or the Monte Carlo analogue.
    pub points: Vec<(f64, f64)>,
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mt)
}

/// Fitted decay rate of `‖R_t φ − Π₀φ‖₂` from the chaos expansion.
pub fn estimate_decay_rate(
    b: &OperatorBundle,
    phi: &Polynomial,
    times: &[f64],
    cap: usize,
) -> Result<DecayFit> {
    if times.len() < 2 {
        return Err(Error::InvalidArgument("decay fit needs at least two times".into()));
    }
    let c = chaos::expand(phi, b, cap)?.centered();
    if c.coeffs.is_empty() {
        return Err(Error::InvalidArgument("observable is constant".into()));
    }
    let points: Vec<(f64, f64)> = times
        .iter()
        .map(|&t| (t, 0.5 * c.apply_rt(t).norm_sq().ln()))
        .collect();
    let (slope, intercept) = least_squares(&points);
    Ok(DecayFit {
        rate: -slope,
        intercept,
        points,
    })
}

/// Monte Carlo decay rate from the stationary autocorrelation
/// `E[φ̄(Z_0) φ̄(Z_s)] = ‖R_{s/2} φ̄‖²`, `φ̄ = φ − Π₀φ`.
pub fn estimate_decay_rate_mc(
    ens: &PathEnsemble,
    phi: &dyn Observable,
    mean: f64,
    lags: &[usize],
) -> Result<DecayFit> {
    if !ens.stationary_start {
        return Err(Error::NotStationaryStart);
    }
    let mut points = Vec::with_capacity(lags.len());
    for &k in lags {
        if k > ens.steps {
            return Err(Error::InvalidArgument(format!("lag {k} exceeds {} steps", ens.steps)));
        }
        let acf = (0..ens.samples)
            .map(|s| (phi.eval(ens.state(s, 0)) - mean) * (phi.eval(ens.state(s, k)) - mean))
            .sum::<f64>()
            / ens.samples as f64;
        if acf > 0.0 {
            points.push((k as f64 * ens.dt, acf.ln()));
        }
    }
    if points.len() < 2 {
        return Err(Error::InvalidArgument("autocorrelation vanished at the chosen lags".into()));
    }
    let (slope, intercept) = least_squares(&points);
    Ok(DecayFit {
        rate: -slope,
        intercept,
        points,
    })
}

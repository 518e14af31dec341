//! Gauss-Hermite rules for Gaussian expectations and adaptive
//! Gauss-Kronrod integration on intervals.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::sym_sqrt;

pub const DEFAULT_NODES: usize = 40;
/// Largest dimension handled by tensor-product quadrature.
pub const MAX_TENSOR_DIM: usize = 4;
/// Beyond this many nodes the Christoffel weights underflow to zero.
pub const MAX_NODES: usize = 256;

const PAR_THRESHOLD: usize = 4096;

/// Gauss-Hermite rule for the standard normal law (weights sum to one).
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Normalised probabilists' Hermite values `h_0(x) .. h_n(x)`.
pub fn hermite_normalized(n: usize, x: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(n + 1);
    h.push(1.0);
    if n == 0 {
        return h;
    }
    h.push(x);
    for k in 1..n {
        let next = (x * h[k] - (k as f64).sqrt() * h[k - 1]) / ((k + 1) as f64).sqrt();
        h.push(next);
    }
    h
}

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Hermite rule needs at least one node");
        if n == 1 {
            return Self {
                nodes: vec![0.0],
                weights: vec![1.0],
            };
        }
        // Golub-Welsch for the starting nodes.
        let mut jacobi = DMatrix::zeros(n, n);
        for k in 1..n {
            jacobi[(k - 1, k)] = (k as f64).sqrt();
            jacobi[(k, k - 1)] = (k as f64).sqrt();
        }
        let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
        nodes.sort_by(f64::total_cmp);

        // Newton polish on h_n, then Christoffel weights 1 / Σ h_k².
        let mut weights = Vec::with_capacity(n);
        for x in nodes.iter_mut() {
            for _ in 0..3 {
                let h = hermite_normalized(n, *x);
                let dh = (n as f64).sqrt() * h[n - 1];
                if dh == 0.0 {
                    break;
                }
                *x -= h[n] / dh;
            }
            let h = hermite_normalized(n - 1, *x);
            weights.push(1.0 / h.iter().map(|v| v * v).sum::<f64>());
        }
        // Enforce exact symmetry of the rule.
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            let w = 0.5 * (weights[i] + weights[j]);
            nodes[i] = -x;
            nodes[j] = x;
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.nodes.len() - 1
    }

    pub fn integrate_1d(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Gaussian law `N(mean, L Lᵀ)` seen through its symmetric factor `L`.
#[derive(Debug, Clone)]
pub struct GaussianMeasure {
    pub mean: DVector<f64>,
    pub factor: DMatrix<f64>,
}

/// Outcome of node doubling for integrands that are not polynomials.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Refined {
    pub value: f64,
    pub nodes: usize,
    pub change: f64,
    pub converged: bool,
}

impl GaussianMeasure {
    pub fn new(mean: DVector<f64>, cov: &DMatrix<f64>) -> Self {
        Self {
            mean,
            factor: sym_sqrt(cov),
        }
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            mean: DVector::zeros(dim),
            factor: DMatrix::identity(dim, dim),
        }
    }

    pub fn centered(cov: &DMatrix<f64>) -> Self {
        Self::new(DVector::zeros(cov.nrows()), cov)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    fn check_dim(&self) -> Result<()> {
        let d = self.factor.ncols();
        if d > MAX_TENSOR_DIM {
            return Err(Error::DimensionTooLarge {
                dim: d,
                max: MAX_TENSOR_DIM,
            });
        }
        Ok(())
    }

    /// Tensor-product estimate of `E f(X)`.
    pub fn expect<F>(&self, rule: &GaussHermite, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let v = self.expect_vector(rule, 1, |x, out| out[0] = f(x))?;
        Ok(v[0])
    }

    /// Tensor-product estimate of a vector of expectations sharing nodes.
    pub fn expect_vector<F>(&self, rule: &GaussHermite, len: usize, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64], &mut [f64]) + Sync,
    {
        self.check_dim()?;
        let d = self.factor.ncols();
        let n = rule.len();
        if d == 0 {
            let mut out = vec![0.0; len];
            f(self.mean.as_slice(), &mut out);
            return Ok(out);
        }
        let slice = n.pow(d as u32 - 1);
        let total = slice * n;
        let run = |first: usize| -> Vec<f64> {
            let mut acc = vec![0.0; len];
            let mut buf = vec![0.0; len];
            let mut xi = vec![0.0; d];
            let mut x = vec![0.0; self.dim()];
            for rest in 0..slice {
                let mut w = rule.weights[first];
                xi[0] = rule.nodes[first];
                let mut r = rest;
                for ax in xi.iter_mut().skip(1) {
                    let k = r % n;
                    r /= n;
                    *ax = rule.nodes[k];
                    w *= rule.weights[k];
                }
                for (i, xv) in x.iter_mut().enumerate() {
                    let mut s = self.mean[i];
                    for (j, &z) in xi.iter().enumerate() {
                        s += self.factor[(i, j)] * z;
                    }
                    *xv = s;
                }
                f(&x, &mut buf);
                for (a, b) in acc.iter_mut().zip(&buf) {
                    *a += w * b;
                }
            }
            acc
        };
        let partial: Vec<Vec<f64>> = if total >= PAR_THRESHOLD {
            (0..n).into_par_iter().map(run).collect()
        } else {
            (0..n).map(run).collect()
        };
        let mut out = vec![0.0; len];
        for p in partial {
            for (a, b) in out.iter_mut().zip(p) {
                *a += b;
            }
        }
        Ok(out)
    }

    /// Exact expectation of a polynomial integrand of the given degree.
    pub fn expect_polynomial<F>(&self, rule: &GaussHermite, degree: usize, f: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        if degree > rule.exact_degree() {
            return Err(Error::QuadratureOrderTooLow {
                nodes: rule.len(),
                exact: rule.exact_degree(),
                degree,
            });
        }
        self.expect(rule, f)
    }

    /// Doubles the node count from `start` until successive estimates agree
    /// to `tol` (relative to the magnitude, absolute below one).
    pub fn expect_refined<F>(&self, start: usize, tol: f64, f: F) -> Result<Refined>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        self.check_dim()?;
        let d = self.factor.ncols().max(1);
        // keep the tensor grid below ~2^22 points
        let cap = ((1usize << 22) as f64).powf(1.0 / d as f64).floor() as usize;
        let cap = cap.clamp(start, MAX_NODES);
        let mut n = start;
        let mut prev = self.expect(&GaussHermite::new(n), &f)?;
        // last observed change; unknown until a second rule is evaluated
        let mut last = f64::INFINITY;
        loop {
            let next_n = (2 * n).min(cap);
            if next_n == n {
                return Ok(Refined {
                    value: prev,
                    nodes: n,
                    change: last,
                    converged: false,
                });
            }
            let next = self.expect(&GaussHermite::new(next_n), &f)?;
            let change = (next - prev).abs();
            if change <= tol * next.abs().max(1.0) {
                return Ok(Refined {
                    value: next,
                    nodes: next_n,
                    change,
                    converged: true,
                });
            }
            last = change;
            prev = next;
            n = next_n;
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone)]
pub struct Integral {
    pub value: DVector<f64>,
    pub error: f64,
    pub intervals: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: DVector<f64>,
    error: f64,
}

fn gk15<F: Fn(f64) -> DVector<f64>>(f: &F, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = &fc * WGK[7];
    let mut g = &fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += &s * WGK[j];
        if j % 2 == 1 {
            g += &s * WG[j / 2];
        }
    }
    k *= h;
    g *= h;
    let error = (&k - &g).amax();
    Piece {
        a,
        b,
        value: k,
        error,
    }
}

/// Globally adaptive G7/K15 integration of a vector-valued integrand on
/// `[a, b]`; bisects the worst interval until the summed error estimate
/// (max-norm over components) drops below `abs_tol`.
pub fn integrate_adaptive<F>(f: F, a: f64, b: f64, abs_tol: f64) -> Integral
where
    F: Fn(f64) -> DVector<f64>,
{
    const MAX_INTERVALS: usize = 4000;
    let mut pieces = vec![gk15(&f, a, b)];
    loop {
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if error <= abs_tol || pieces.len() >= MAX_INTERVALS {
            let mut value = DVector::zeros(pieces[0].value.len());
            pieces.sort_by(|p, q| p.a.total_cmp(&q.a));
            for p in &pieces {
                value += &p.value;
            }
            return Integral {
                value,
                error,
                intervals: pieces.len(),
            };
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        pieces.push(gk15(&f, p.a, mid));
        pieces.push(gk15(&f, mid, p.b));
    }
}

/// Adaptive integration on `[a, ∞)` through `s ↦ a + s / (1 - s)`.
pub fn integrate_semi_infinite<F>(f: F, a: f64, abs_tol: f64) -> Integral
where
    F: Fn(f64) -> DVector<f64>,
{
    let g = |s: f64| {
        let one_minus = 1.0 - s;
        let t = a + s / one_minus;
        f(t) / (one_minus * one_minus)
    };
    integrate_adaptive(g, 0.0, 1.0, abs_tol)
}

pub fn integrate_scalar(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> (f64, f64) {
    let r = integrate_adaptive(|t| DVector::from_element(1, f(t)), a, b, abs_tol);
    (r.value[0], r.error)
}

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use symou::gramian::GramianSet;
use symou::linalg::{spectral_abscissa, spectral_norm, sym_sqrt};
use symou::polynomial::{MultiIndex, Polynomial};
use symou::symmetry::{OperatorBundle, DEFAULT_TOL};
use symou::OUModel;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut impl Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector(rng: &mut impl Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// Random SPD matrix with eigenvalues in roughly `[0.2, 2]`, unit norm.
pub fn random_spd(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let b = gaussian_matrix(rng, d, d);
    let m = &b * b.transpose() / d as f64 + DMatrix::identity(d, d) * 0.2;
    &m / spectral_norm(&m)
}

/// Random Hurwitz drift and PSD noise (sometimes rank-deficient).
pub fn random_hurwitz(rng: &mut impl Rng, d: usize) -> OUModel {
    let m = gaussian_matrix(rng, d, d);
    let shift = spectral_abscissa(&m) + rng.random_range(0.1..1.0);
    let a = m - DMatrix::identity(d, d) * shift;
    let rank = if d > 1 && rng.random_bool(0.3) { d - 1 } else { d };
    let b = gaussian_matrix(rng, d, rank);
    let q = &b * b.transpose();
    let q = &q / spectral_norm(&q);
    OUModel::dense(a, q).unwrap()
}

/// `A = Q S` with `S` symmetric negative definite, so `AQ = QSQ` is
/// symmetric.
pub fn random_symmetric(rng: &mut impl Rng, d: usize) -> OUModel {
    let q = random_spd(rng, d);
    let s = -random_spd(rng, d) * rng.random_range(0.5..3.0);
    OUModel::dense(&q * s, q).unwrap()
}

pub struct Fixture {
    pub m: OUModel,
    pub g: GramianSet,
    pub b: OperatorBundle,
}

pub fn fixture(m: OUModel) -> Fixture {
    let g = GramianSet::new(&m).unwrap();
    let b = OperatorBundle::new(&m, &g, DEFAULT_TOL).unwrap();
    Fixture { m, g, b }
}

pub fn random_polynomial(rng: &mut impl Rng, d: usize, degree: usize) -> Polynomial {
    let mut p = Polynomial::zero(d);
    for idx in MultiIndex::all_up_to(d, degree) {
        if idx.order() == degree || rng.random_bool(0.6) {
            let c: f64 = rng.sample(StandardNormal);
            let w = (1 + idx.order()) as f64;
            p.add_term(idx, c / w);
        }
    }
    p
}

/// Points drawn from the invariant law.
pub fn stationary_points(rng: &mut impl Rng, g: &GramianSet, n: usize) -> Vec<DVector<f64>> {
    let f = sym_sqrt(&g.q_inf);
    (0..n).map(|_| &f * gaussian_vector(rng, g.dim())).collect()
}

//! Dense linear-algebra helpers shared by every module.
//!
//! Symmetric functions of matrices go through a sorted symmetric
//! eigendecomposition; general matrices use nalgebra's Padé matrix
//! exponential and real Schur form.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, LU, SVD};

use crate::error::{Error, Result};

/// Symmetric eigendecomposition with eigenvalues in ascending order.
///
/// Each eigenvector is normalised so that its first entry of significant
/// magnitude is positive, which makes the frame reproducible.
#[derive(Debug, Clone)]
pub struct SortedEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl SortedEigen {
    pub fn new(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let eig = SymmetricEigen::new(symmetrize(m));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = DMatrix::zeros(n, n);
        for (k, &i) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(i).into_owned();
            fix_sign(&mut col);
            vectors.set_column(k, &col);
        }
        Self { values, vectors }
    }

    /// `V f(Λ) Vᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for k in 0..n {
            let s = f(self.values[k]);
            scaled.column_mut(k).scale_mut(s);
        }
        let out = &scaled * self.vectors.transpose();
        symmetrize(&out)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Flip `v` so that its first entry above `1e-8 * max|v|` is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let amax = v.amax();
    if amax == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * amax) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry of `M - Mᵀ`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

/// True when every off-diagonal entry is exactly zero.
pub fn is_diagonal(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    for j in 0..m.ncols() {
        for i in 0..n {
            if i != j && m[(i, j)] != 0.0 {
                return false;
            }
        }
    }
    true
}

/// Spectral (operator 2-) norm.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.nrows() == 1 && m.ncols() == 1 {
        return m[(0, 0)].abs();
    }
    SVD::new(m.clone(), false, false).singular_values.max()
}

/// Symmetric PSD square root; negative eigenvalues from roundoff are clipped.
pub fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    if is_diagonal(m) {
        return DMatrix::from_diagonal(&m.diagonal().map(|x| x.max(0.0).sqrt()));
    }
    SortedEigen::new(m).map(|x| x.max(0.0).sqrt())
}

/// Square root and inverse square root of an SPD matrix.
///
/// Dense matrices are rejected when their smallest eigenvalue falls below
/// `rel_floor * λ_max`. Exactly diagonal matrices carry no eigensolver
/// noise, so for them only strictly positive normal entries are required.
pub fn sym_sqrt_pair(
    m: &DMatrix<f64>,
    rel_floor: f64,
    name: &'static str,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if is_diagonal(m) {
        let d = m.diagonal();
        let min = d.min();
        if !(min >= f64::MIN_POSITIVE) {
            return Err(Error::SingularMatrix {
                name,
                min_eigenvalue: min,
                floor: f64::MIN_POSITIVE,
            });
        }
        return Ok((
            DMatrix::from_diagonal(&d.map(f64::sqrt)),
            DMatrix::from_diagonal(&d.map(|x| 1.0 / x.sqrt())),
        ));
    }
    let eig = SortedEigen::new(m);
    let floor = rel_floor * eig.max().max(0.0);
    let min = eig.min();
    if !(min > floor) || !(min > 0.0) {
        return Err(Error::SingularMatrix {
            name,
            min_eigenvalue: min,
            floor,
        });
    }
    Ok((eig.map(f64::sqrt), eig.map(|x| 1.0 / x.sqrt())))
}

/// Matrix exponential (Padé scaling and squaring).
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 1 {
        return DMatrix::from_element(1, 1, m[(0, 0)].exp());
    }
    m.clone().exp()
}

/// `exp(t A)`.
pub fn expm_scaled(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    if t == 0.0 {
        return DMatrix::identity(a.nrows(), a.ncols());
    }
    expm(&(a * t))
}

/// Eigenvalues of a general real matrix as `(re, im)` pairs.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<(f64, f64)> {
    let n = m.nrows();
    if n == 1 {
        return vec![(m[(0, 0)], 0.0)];
    }
    let schur = Schur::new(m.clone());
    schur
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect()
}

/// Largest real part of the spectrum.
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m)
        .into_iter()
        .map(|(re, _)| re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Polar decomposition `M = U P` with `U` orthogonal and `P` symmetric PSD.
///
/// Computed from the SVD `M = W Σ Yᵀ`; each left singular vector is signed
/// so that its first significant entry is positive (the matching right
/// singular vector is flipped with it).
pub fn polar(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let svd = SVD::new(m.clone(), true, true);
    let mut w = svd.u.expect("requested U");
    let mut yt = svd.v_t.expect("requested Vᵀ");
    let sigma = svd.singular_values;
    for k in 0..n {
        let mut col = w.column(k).into_owned();
        let before = col.clone();
        fix_sign(&mut col);
        if col != before {
            w.column_mut(k).neg_mut();
            yt.row_mut(k).neg_mut();
        }
    }
    let u = &w * &yt;
    let mut ys = yt.transpose();
    for k in 0..n {
        ys.column_mut(k).scale_mut(sigma[k]);
    }
    let p = symmetrize(&(ys * &yt));
    (u, p)
}

/// Solves the continuous Lyapunov equation `A X + X Aᵀ = C`.
///
/// Bartels-Stewart on the real Schur form `A = Z T Zᵀ`: the transformed
/// equation `T Y + Y Tᵀ = Zᵀ C Z` is swept block by block from the
/// bottom-right corner, each 1×1 or 2×2 diagonal block pair solving a small
/// Kronecker system.
pub fn solve_lyapunov(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || c.nrows() != n || c.ncols() != n {
        return Err(Error::Dimension(format!(
            "lyapunov: A is {}x{}, C is {}x{}",
            a.nrows(),
            a.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    if n == 1 {
        let s = 2.0 * a[(0, 0)];
        if s == 0.0 {
            return Err(Error::NoUniqueSolution);
        }
        return Ok(DMatrix::from_element(1, 1, c[(0, 0)] / s));
    }
    let (z, t) = Schur::new(a.clone()).unpack();
    let rhs = z.transpose() * c * &z;

    // diagonal blocks of the quasi-triangular factor
    let mut blocks: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }

    let scale = t.amax().max(f64::MIN_POSITIVE);
    let mut y = DMatrix::<f64>::zeros(n, n);
    for kb in (0..blocks.len()).rev() {
        let (k0, kp) = blocks[kb];
        for lb in (0..blocks.len()).rev() {
            let (l0, lq) = blocks[lb];
            let mut r = rhs.view((k0, l0), (kp, lq)).into_owned();
            // Σ_{j>k} T_kj Y_jl
            let after_k = k0 + kp;
            if after_k < n {
                let tk = t.view((k0, after_k), (kp, n - after_k));
                let yl = y.view((after_k, l0), (n - after_k, lq));
                r -= tk * yl;
            }
            // Σ_{j>l} Y_kj T_lj^T
            let after_l = l0 + lq;
            if after_l < n {
                let yk = y.view((k0, after_l), (kp, n - after_l));
                let tl = t.view((l0, after_l), (lq, n - after_l));
                r -= yk * tl.transpose();
            }
            let tkk = t.view((k0, k0), (kp, kp)).into_owned();
            let tll = t.view((l0, l0), (lq, lq)).into_owned();
            let block = solve_small_sylvester(&tkk, &tll, &r, scale)?;
            y.view_mut((k0, l0), (kp, lq)).copy_from(&block);
        }
    }
    Ok(&z * y * z.transpose())
}

/// Solves `T_k Y + Y T_lᵀ = R` for blocks of size at most 2.
fn solve_small_sylvester(
    tk: &DMatrix<f64>,
    tl: &DMatrix<f64>,
    r: &DMatrix<f64>,
    scale: f64,
) -> Result<DMatrix<f64>> {
    let p = tk.nrows();
    let q = tl.nrows();
    if p == 1 && q == 1 {
        let s = tk[(0, 0)] + tl[(0, 0)];
        if s.abs() <= 1e-14 * scale {
            return Err(Error::NoUniqueSolution);
        }
        return Ok(DMatrix::from_element(1, 1, r[(0, 0)] / s));
    }
    // vec(T_k Y) = (I_q ⊗ T_k) vec Y,  vec(Y T_lᵀ) = (T_l ⊗ I_p) vec Y
    let m = p * q;
    let mut k = DMatrix::<f64>::zeros(m, m);
    for col in 0..q {
        for i in 0..p {
            for j in 0..p {
                k[(col * p + i, col * p + j)] += tk[(i, j)];
            }
        }
    }
    for a in 0..q {
        for b in 0..q {
            for i in 0..p {
                k[(a * p + i, b * p + i)] += tl[(a, b)];
            }
        }
    }
    let lu = LU::new(k.clone());
    let det_scale = scale.powi(m as i32);
    if lu.determinant().abs() <= 1e-14 * det_scale {
        return Err(Error::NoUniqueSolution);
    }
    let vec_r = DVector::from_column_slice(r.as_slice());
    let sol = lu.solve(&vec_r).ok_or(Error::NoUniqueSolution)?;
    Ok(DMatrix::from_column_slice(p, q, sol.as_slice()))
}

/// Van Loan block-exponential evaluation of `∫₀ᵗ e^{sA} Q e^{sAᵀ} ds`.
pub fn van_loan_gramian(a: &DMatrix<f64>, q: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(&(-a));
    m.view_mut((0, n), (n, n)).copy_from(q);
    m.view_mut((n, n), (n, n)).copy_from(&a.transpose());
    let e = expm(&(m * t));
    let f12 = e.view((0, n), (n, n));
    let f22 = e.view((n, n), (n, n));
    symmetrize(&(f22.transpose() * f12))
}

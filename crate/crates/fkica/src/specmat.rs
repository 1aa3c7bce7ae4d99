//! Deterministic symmetric-matrix kernels.
//!
//! Every eigendecomposition in the crate goes through [`sym_eigen`], which
//! pins an ordering (descending eigenvalues) and a sign convention (the
//! largest-magnitude entry of each eigenvector is positive, ties broken
//! toward the lowest index). Generalized problems are reduced to standard
//! symmetric form by Cholesky congruence elsewhere; this module only ever
//! sees symmetric input.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative tolerance for the symmetry precondition of [`sym_eigen`].
const SYM_TOL: f64 = 1e-10;

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
///
/// `vectors` holds orthonormal eigenvectors as columns, aligned with
/// `values`. The sign of each column is fixed so that its entry of largest
/// magnitude is positive.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenSystem {
    /// Reconstructs `V diag(values) V^T`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let lambda = DMatrix::from_diagonal(&self.values);
        &self.vectors * lambda * self.vectors.transpose()
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Fixes the sign of each column so its largest-magnitude entry is positive.
fn fix_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut idx = 0;
        let mut best = -1.0_f64;
        for (i, v) in col.iter().enumerate() {
            if v.abs() > best {
                best = v.abs();
                idx = i;
            }
        }
        if col[idx] < 0.0 {
            col.neg_mut();
        }
    }
}

/// Eigendecomposition of a symmetric matrix with pinned order and signs.
///
/// The input must be square and symmetric to a relative tolerance of 1e-10;
/// it is symmetrized exactly before decomposition so the result depends only
/// on the symmetric part. Identical input bits produce identical output bits.
pub fn sym_eigen(m: &DMatrix<f64>) -> Result<EigenSystem> {
    if !m.is_square() {
        return Err(Error::NotSymmetric);
    }
    let scale = max_abs(m).max(1.0);
    let asym = (m - m.transpose()).iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    if asym > SYM_TOL * scale {
        return Err(Error::NotSymmetric);
    }
    let sym = (m + m.transpose()).scale(0.5);
    let eig = sym.symmetric_eigen();

    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    fix_signs(&mut vectors);
    Ok(EigenSystem { values, vectors })
}

/// Symmetric square root `M^{1/2}` of a positive definite matrix.
pub fn sqrt_pd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(m)?;
    let min = eig.values[eig.values.len() - 1];
    if min <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    let half = DMatrix::from_diagonal(&eig.values.map(f64::sqrt));
    Ok(&eig.vectors * half * eig.vectors.transpose())
}

/// Symmetric inverse square root `M^{-1/2}`.
///
/// Fails with [`Error::NearSingular`] carrying the offending eigenvalue when
/// the smallest eigenvalue does not exceed `tol`.
pub fn inv_sqrt(m: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let eig = sym_eigen(m)?;
    let min = eig.values[eig.values.len() - 1];
    if min <= tol {
        return Err(Error::NearSingular(min));
    }
    let half = DMatrix::from_diagonal(&eig.values.map(|v| 1.0 / v.sqrt()));
    Ok(&eig.vectors * half * eig.vectors.transpose())
}

/// Lower Cholesky factor `L` with `M = L L^T`.
pub fn cholesky_lower(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite)
}

/// Frobenius (Hilbert-Schmidt) distance of a square matrix to the identity.
pub fn hs_distance_to_identity(m: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let d = m[(i, j)] - if i == j { 1.0 } else { 0.0 };
            acc += d * d;
        }
    }
    acc.sqrt()
}

/// Solves `L x = b` for lower-triangular `L`, column by column.
pub fn solve_lower(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut x = b.clone();
    l.solve_lower_triangular_mut(&mut x);
    x
}

/// Solves `L^T x = b` for lower-triangular `L`.
pub fn solve_lower_transpose(l: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut x = b.clone();
    l.tr_solve_lower_triangular_mut(&mut x);
    x
}

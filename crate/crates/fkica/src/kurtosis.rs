//! Eigenanalysis of the sample kurtosis operator of a whitened dataset.
//!
//! For whitened coefficients `A` (n x q) over a basis with Gram matrix `G`,
//! the kurtosis matrix in `G^{1/2}` coordinates is
//! `n^{-1} G^{1/2} A^T D A G^{1/2}` with `D_ii = a_i^T G a_i`, the squared
//! norm of curve i. Its eigenvectors are the kurtosis components; extreme
//! eigenvalues flag non-Gaussian directions, and for a whitened q-space the
//! eigenvalues of Gaussian data concentrate at `q + 2`, so `kappa - (q - 1)`
//! is reported as normalized kurtosis with Gaussian reference value 3.
//!
//! Smoothing replaces the Gram matrix on the constraint side by
//! `G_theta = G + theta * P` (P the derivative penalty). With
//! `G_theta = L L^T`, the generalized problem
//! `G^{1/2} S G^{1/2} b = kappa G_theta b` is reduced by Cholesky congruence
//! to a standard symmetric problem in `v = L^T b`, where the weighting `D`
//! now uses the smoothed norms `a_i^T Gt a_i` with
//! `Gt = (L^{-1} G)^T (L^{-1} G)`. At `theta = 0` both reductions coincide
//! and the plain solve is exactly the penalized solve with `theta = 0`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::basis::{FDataSet, FunctionalBasis};
use crate::error::{Error, Result};
use crate::specmat;
use crate::whitening::whitened_covariance;

/// Hilbert-Schmidt tolerance for the whiteness precondition.
const WHITE_TOL: f64 = 1e-6;

/// Eigenpairs of the (optionally smoothed) kurtosis operator.
///
/// Columns of `b` are weight-function coefficients over the basis, ordered
/// by descending eigenvalue and orthonormal in the `G_theta` inner product;
/// `v` holds the corresponding orthonormal eigenvectors of the reduced
/// symmetric problem, with `b = L^{-T} v`.
#[derive(Debug, Clone)]
pub struct KurtosisModel {
    pub theta: f64,
    /// Eigenvalues, descending.
    pub kappa: DVector<f64>,
    /// `kappa - (q - 1)`: normalized kurtosis, 3 at the Gaussian.
    pub normalized: DVector<f64>,
    /// Orthonormal eigenvectors of the reduced problem (columns).
    pub v: DMatrix<f64>,
    /// Weight-function coefficients (columns), `B^T G_theta B = I`.
    pub b: DMatrix<f64>,
    /// Lower Cholesky factor of `G_theta`.
    pub l: DMatrix<f64>,
    /// `G + theta * P`.
    pub g_theta: DMatrix<f64>,
    pub basis: Arc<FunctionalBasis>,
}

/// Component scores against the kurtosis eigenfunctions.
#[derive(Debug, Clone)]
pub struct ICScores {
    /// n x q matrix; column j holds the scores on component j.
    pub xi: DMatrix<f64>,
    /// Normalized kurtosis per component, copied from the model.
    pub normalized_kurtosis: DVector<f64>,
}

fn whiteness_gate(ds: &FDataSet) -> Result<()> {
    let dev = specmat::hs_distance_to_identity(&whitened_covariance(ds));
    if dev > WHITE_TOL {
        return Err(Error::NotWhitened(dev));
    }
    Ok(())
}

/// Crossproduct `n^{-1} Y^T diag(d) Y` with exactly symmetric output.
fn weighted_crossprod(y: &DMatrix<f64>, d: &DVector<f64>, n: f64) -> DMatrix<f64> {
    let q = y.ncols();
    let mut m = DMatrix::zeros(q, q);
    for k in 0..y.nrows() {
        let row = y.row(k);
        for i in 0..q {
            let di = d[k] * row[i];
            for j in i..q {
                m[(i, j)] += di * row[j];
            }
        }
    }
    for i in 0..q {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    m / n
}

/// Sample kurtosis matrix of a whitened dataset in `G^{1/2}` coordinates.
///
/// Fails with [`Error::NotWhitened`] when the covariance of the input
/// deviates from the identity by more than 1e-6 in Hilbert-Schmidt norm.
pub fn kurtosis_matrix(ds: &FDataSet) -> Result<DMatrix<f64>> {
    whiteness_gate(ds)?;
    let y = &ds.coefficients * ds.basis.gram_sqrt();
    let d = DVector::from_iterator(y.nrows(), y.row_iter().map(|r| r.norm_squared()));
    Ok(weighted_crossprod(&y, &d, y.nrows() as f64))
}

/// Eigenanalysis of the plain (unsmoothed) kurtosis operator.
///
/// Identical to [`solve_penalized`] with `theta = 0`, including output bits.
pub fn solve_plain(ds: &FDataSet) -> Result<KurtosisModel> {
    solve_penalized(ds, 0.0)
}

/// Eigenanalysis of the smoothed kurtosis operator with roughness weight
/// `theta >= 0`.
///
/// Reduction path: `G_theta = L L^T`, `K = L^{-1} G`, smoothed data
/// `Yt = A K^T`, weights `d_i = |Yt_i|^2`, reduced matrix
/// `M = n^{-1} Yt^T diag(d) Yt`; eigenvectors `v` of `M` give
/// `b = L^{-T} v`.
pub fn solve_penalized(ds: &FDataSet, theta: f64) -> Result<KurtosisModel> {
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "smoothing weight theta must be finite and nonnegative, got {theta}"
        )));
    }
    whiteness_gate(ds)?;
    let basis = &ds.basis;
    let q = basis.dimension();
    let n = ds.n_samples();
    let g_theta = basis.gram() + basis.penalty().scale(theta);
    let l = specmat::cholesky_lower(&g_theta).map_err(|_| Error::PenaltyNotPd)?;
    let k = specmat::solve_lower(&l, basis.gram());
    let yt = &ds.coefficients * k.transpose();
    let d = DVector::from_iterator(n, yt.row_iter().map(|r| r.norm_squared()));
    let m = weighted_crossprod(&yt, &d, n as f64);
    let eig = specmat::sym_eigen(&m)?;
    let b = specmat::solve_lower_transpose(&l, &eig.vectors);
    let normalized = eig.values.map(|v| v - (q as f64 - 1.0));
    Ok(KurtosisModel {
        theta,
        kappa: eig.values,
        normalized,
        v: eig.vectors,
        b,
        l,
        g_theta,
        basis: Arc::clone(basis),
    })
}

/// Scores of each curve on every kurtosis component: `Xi = A G B`.
pub fn scores(model: &KurtosisModel, ds: &FDataSet) -> Result<ICScores> {
    if ds.basis.as_ref() != model.basis.as_ref() {
        return Err(Error::BasisMismatch);
    }
    let xi = &ds.coefficients * model.basis.gram() * &model.b;
    Ok(ICScores {
        xi,
        normalized_kurtosis: model.normalized.clone(),
    })
}

impl ICScores {
    /// Copy with every column rescaled to unit sample variance (divisor n).
    pub fn standardized(&self) -> ICScores {
        let n = self.xi.nrows() as f64;
        let mut xi = self.xi.clone();
        for mut col in xi.column_iter_mut() {
            let mean = col.mean();
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            if var > 0.0 {
                col /= var.sqrt();
            }
        }
        ICScores {
            xi,
            normalized_kurtosis: self.normalized_kurtosis.clone(),
        }
    }
}

/// The half-smoother `S` (with `S^2 = G_theta^{-1} G`) and its inverse, as
/// matrices acting on basis coefficients.
///
/// `S` is the square root of the two-sided smoothing map that is
/// self-adjoint in the `G_theta` inner product; it is computed by symmetric
/// reduction: `S = Gt^{-1/2} (Gt^{-1/2} G Gt^{-1/2})^{1/2} Gt^{1/2}`.
pub fn half_smoother(model: &KurtosisModel) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let q = model.basis.dimension();
    if model.theta == 0.0 {
        let eye = DMatrix::identity(q, q);
        return Ok((eye.clone(), eye));
    }
    let gt_sqrt = specmat::sqrt_pd(&model.g_theta)?;
    let gt_inv_sqrt = specmat::inv_sqrt(&model.g_theta, 0.0)?;
    let t_hat = &gt_inv_sqrt * model.basis.gram() * &gt_inv_sqrt;
    let t_half = specmat::sqrt_pd(&t_hat)?;
    let t_half_inv = specmat::inv_sqrt(&t_hat, 0.0)?;
    let s = &gt_inv_sqrt * &t_half * &gt_sqrt;
    let s_inv = &gt_inv_sqrt * &t_half_inv * &gt_sqrt;
    Ok((s, s_inv))
}

/// Weight function and smoothed-back eigenfunction of component `j`
/// (1-based): returns `(b_j, e_j)` with `e_j = S^{-1} b_j`; at `theta = 0`
/// the two coincide exactly.
pub fn eigenfunction(model: &KurtosisModel, j: usize) -> Result<(DVector<f64>, DVector<f64>)> {
    let q = model.basis.dimension();
    if j == 0 || j > q {
        return Err(Error::IndexOutOfRange { index: j, max: q });
    }
    let b = model.b.column(j - 1).into_owned();
    if model.theta == 0.0 {
        return Ok((b.clone(), b));
    }
    let (_, s_inv) = half_smoother(model)?;
    let e = &s_inv * &b;
    Ok((b, e))
}

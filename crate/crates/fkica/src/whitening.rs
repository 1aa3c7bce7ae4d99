//! Functional whitening in the Gram metric.
//!
//! For a pooled-centered coefficient matrix `A` over a basis with Gram
//! matrix `G`, the whitening target is the covariance of the transformed
//! coordinates `B = A G^{1/2}`, i.e. `C = B^T B / n`. A whitening matrix
//! `W` satisfies `W C W^T = I`; the five constructions below differ only by
//! an orthogonal rotation. Whitened coefficients are mapped back to the
//! basis by `(A - center) G^{1/2} W^T G^{-1/2}`, so the whitened dataset
//! lives over the same basis with identity covariance in the Gram metric.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::basis::{CenterRecord, FDataSet, FunctionalBasis};
use crate::error::{Error, Result};
use crate::specmat;
use crate::EIG_TOL;

/// Whitening construction. The declaration order is the tie-break order
/// used by cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WhiteningMethod {
    Pca,
    PcaCor,
    Zca,
    ZcaCor,
    Cholesky,
}

impl WhiteningMethod {
    pub const ALL: [WhiteningMethod; 5] = [
        WhiteningMethod::Pca,
        WhiteningMethod::PcaCor,
        WhiteningMethod::Zca,
        WhiteningMethod::ZcaCor,
        WhiteningMethod::Cholesky,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            WhiteningMethod::Pca => "pca",
            WhiteningMethod::PcaCor => "pca-cor",
            WhiteningMethod::Zca => "zca",
            WhiteningMethod::ZcaCor => "zca-cor",
            WhiteningMethod::Cholesky => "cholesky",
        }
    }
}

impl fmt::Display for WhiteningMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WhiteningMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(WhiteningMethod::Pca),
            "pca-cor" => Ok(WhiteningMethod::PcaCor),
            "zca" => Ok(WhiteningMethod::Zca),
            "zca-cor" => Ok(WhiteningMethod::ZcaCor),
            "cholesky" => Ok(WhiteningMethod::Cholesky),
            other => Err(Error::InvalidConfig(format!(
                "unknown whitening method '{other}' (expected pca, pca-cor, zca, zca-cor or cholesky)"
            ))),
        }
    }
}

/// Fitted whitening transform, tied to the training basis and center.
#[derive(Debug, Clone)]
pub struct WhiteningModel {
    pub method: WhiteningMethod,
    /// q x q whitening matrix acting on `G^{1/2}` coordinates.
    pub w: DMatrix<f64>,
    /// Training pooled mean in original coefficient coordinates.
    pub center: DVector<f64>,
    pub basis: Arc<FunctionalBasis>,
    /// Eigenvalue tolerance used when the transform was fitted.
    pub tol: f64,
}

/// Fits a whitening transform on a pooled-centered dataset.
///
/// Requires at least `q + 1` curves and a covariance whose smallest
/// eigenvalue exceeds `tol` (default [`EIG_TOL`] when `None`); otherwise the
/// basis dimension must be reduced.
pub fn fit_whitening(
    ds: &FDataSet,
    method: WhiteningMethod,
    tol: Option<f64>,
) -> Result<WhiteningModel> {
    let tol = tol.unwrap_or(EIG_TOL);
    let q = ds.basis.dimension();
    let n = ds.n_samples();
    if n < q + 1 {
        return Err(Error::InsufficientSamples { need: q + 1, got: n });
    }
    let center = match &ds.center {
        Some(CenterRecord::Pooled(c)) => c.clone(),
        Some(CenterRecord::PerGroup(..)) => {
            return Err(Error::CenteringMismatch(
                "whitening expects pooled centering, got per-group".into(),
            ))
        }
        None => {
            return Err(Error::CenteringMismatch(
                "whitening expects a pooled-centered dataset".into(),
            ))
        }
    };
    let b = &ds.coefficients * ds.basis.gram_sqrt();
    let c = b.transpose() * &b / n as f64;
    let eig = specmat::sym_eigen(&c)?;
    let min = eig.values[q - 1];
    if min <= tol {
        return Err(Error::NearSingular(min));
    }
    let w = match method {
        WhiteningMethod::Pca => {
            let lam = DMatrix::from_diagonal(&eig.values.map(|v| 1.0 / v.sqrt()));
            lam * eig.vectors.transpose()
        }
        WhiteningMethod::Zca => specmat::inv_sqrt(&c, tol)?,
        WhiteningMethod::Cholesky => {
            let l = specmat::cholesky_lower(&c)?;
            specmat::solve_lower(&l, &DMatrix::identity(q, q))
        }
        WhiteningMethod::PcaCor | WhiteningMethod::ZcaCor => {
            let diag = c.diagonal();
            if diag.iter().any(|&v| v <= tol) {
                return Err(Error::NearSingular(diag.min()));
            }
            let v_inv_sqrt = DMatrix::from_diagonal(&diag.map(|v| 1.0 / v.sqrt()));
            let p = &v_inv_sqrt * &c * &v_inv_sqrt;
            match method {
                WhiteningMethod::PcaCor => {
                    let peig = specmat::sym_eigen(&p)?;
                    let pmin = peig.values[q - 1];
                    if pmin <= tol {
                        return Err(Error::NearSingular(pmin));
                    }
                    let lam = DMatrix::from_diagonal(&peig.values.map(|v| 1.0 / v.sqrt()));
                    lam * peig.vectors.transpose() * v_inv_sqrt
                }
                _ => specmat::inv_sqrt(&p, tol)? * v_inv_sqrt,
            }
        }
    };
    Ok(WhiteningModel {
        method,
        w,
        center,
        basis: Arc::clone(&ds.basis),
        tol,
    })
}

/// Coefficients with the model center subtracted, honoring an existing
/// centering record: raw data is shifted by the training mean, data already
/// centered with the identical pooled mean passes through unchanged.
pub(crate) fn shift_by_center(
    center: &DVector<f64>,
    ds: &FDataSet,
) -> Result<DMatrix<f64>> {
    match &ds.center {
        None => {
            let mut coeff = ds.coefficients.clone();
            for mut row in coeff.row_iter_mut() {
                row -= center.transpose();
            }
            Ok(coeff)
        }
        Some(CenterRecord::Pooled(c)) if c == center => Ok(ds.coefficients.clone()),
        Some(_) => Err(Error::CenteringMismatch(
            "dataset was centered with a different shift than the model".into(),
        )),
    }
}

/// Applies a fitted whitening transform to a dataset over the same basis.
///
/// The input is taken as raw (uncentered) unless it carries exactly the
/// model's pooled center. Labels are carried through; the result has no
/// centering record of its own.
pub fn apply_whitening(model: &WhiteningModel, ds: &FDataSet) -> Result<FDataSet> {
    if ds.basis.as_ref() != model.basis.as_ref() {
        return Err(Error::BasisMismatch);
    }
    let coeff = shift_by_center(&model.center, ds)?;
    let tilde =
        coeff * model.basis.gram_sqrt() * model.w.transpose() * model.basis.gram_inv_sqrt();
    Ok(FDataSet {
        basis: Arc::clone(&model.basis),
        coefficients: tilde,
        labels: ds.labels.clone(),
        center: None,
    })
}

/// Covariance of a whitened dataset in the Gram metric, `n^{-1} G^{1/2}
/// A^T A G^{1/2}`; identity up to tolerance when whitening succeeded.
pub fn whitened_covariance(ds: &FDataSet) -> DMatrix<f64> {
    let b = &ds.coefficients * ds.basis.gram_sqrt();
    b.transpose() * &b / ds.n_samples() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_basis, center, CenterMode};
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn identity_basis(q: usize) -> Arc<FunctionalBasis> {
        FunctionalBasis::from_matrices(
            DMatrix::identity(q, q),
            DMatrix::zeros(q, q),
            1,
        )
        .unwrap()
    }

    fn dataset(basis: &Arc<FunctionalBasis>, rows: &[f64], n: usize) -> FDataSet {
        let q = basis.dimension();
        FDataSet {
            basis: Arc::clone(basis),
            coefficients: DMatrix::from_row_slice(n, q, rows),
            labels: None,
            center: None,
        }
    }

    #[test]
    fn all_methods_agree_on_diagonal_covariance() {
        // Sample covariance diag(4, 1) in an identity-Gram space: every
        // method's whitening matrix is diag(0.5, 1).
        let basis = identity_basis(2);
        let a = 8.0_f64.sqrt();
        let b = 2.0_f64.sqrt();
        let ds = dataset(&basis, &[a, 0.0, -a, 0.0, 0.0, b, 0.0, -b], 4);
        let centered = center(&ds, CenterMode::Pooled).unwrap();
        for method in WhiteningMethod::ALL {
            let m = fit_whitening(&centered, method, None).unwrap();
            assert_abs_diff_eq!(m.w[(0, 0)], 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(m.w[(1, 1)], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m.w[(0, 1)], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(m.w[(1, 0)], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cholesky_whitening_of_hand_worked_covariance() {
        // C = [[4,2],[2,5]] has L = [[2,0],[1,2]], so W = L^{-1}
        // = [[0.5,0],[-0.25,0.5]].
        let basis = identity_basis(2);
        let s = 2.0_f64.sqrt();
        let rows = [
            2.0 * s, s, //
            -2.0 * s, -s, //
            0.0, 2.0 * s, //
            0.0, -2.0 * s,
        ];
        let ds = dataset(&basis, &rows, 4);
        let centered = center(&ds, CenterMode::Pooled).unwrap();
        let m = fit_whitening(&centered, WhiteningMethod::Cholesky, None).unwrap();
        assert_abs_diff_eq!(m.w[(0, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(m.w[(0, 1)], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(m.w[(1, 0)], -0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(m.w[(1, 1)], 0.5, epsilon = 1e-12);
    }

    fn random_spline_dataset(n: usize, q: usize, seed: u64) -> FDataSet {
        let basis = build_basis((0.0, 10.0), 4, q, 2).unwrap();
        let mut rng = StdRng::seed_from_u64(seed);
        let coeff = DMatrix::from_fn(n, q, |i, j| {
            let v: f64 = rng.sample(StandardNormal);
            v * (1.0 + 0.3 * j as f64) + if i % 2 == 0 { 0.2 } else { -0.2 }
        });
        FDataSet {
            basis,
            coefficients: coeff,
            labels: None,
            center: None,
        }
    }

    #[test]
    fn whitened_covariance_is_identity_for_every_method() {
        let ds = random_spline_dataset(80, 6, 7);
        let centered = center(&ds, CenterMode::Pooled).unwrap();
        for method in WhiteningMethod::ALL {
            let m = fit_whitening(&centered, method, None).unwrap();
            let white = apply_whitening(&m, &ds).unwrap();
            let cov = whitened_covariance(&white);
            let dev = specmat::hs_distance_to_identity(&cov);
            assert!(dev <= 1e-10, "{method}: deviation {dev}");
        }
    }

    #[test]
    fn methods_differ_by_an_orthogonal_rotation() {
        let ds = random_spline_dataset(60, 5, 11);
        let centered = center(&ds, CenterMode::Pooled).unwrap();
        let models: Vec<_> = WhiteningMethod::ALL
            .iter()
            .map(|&m| fit_whitening(&centered, m, None).unwrap())
            .collect();
        for a in &models {
            for b in &models {
                let wb_inv = b.w.clone().try_inverse().unwrap();
                let rot = &a.w * wb_inv;
                let prod = rot.transpose() * &rot;
                assert!(specmat::hs_distance_to_identity(&prod) <= 1e-8);
            }
        }
    }

    #[test]
    fn apply_uses_training_center_on_new_data() {
        let ds = random_spline_dataset(50, 5, 3);
        let centered = center(&ds, CenterMode::Pooled).unwrap();
        let m = fit_whitening(&centered, WhiteningMethod::Zca, None).unwrap();
        // raw training data and pre-centered training data whiten identically
        let w_raw = apply_whitening(&m, &ds).unwrap();
        let w_centered = apply_whitening(&m, &centered).unwrap();
        assert_eq!(w_raw.coefficients, w_centered.coefficients);
        // fresh data: explicit algebra replication
        let test = random_spline_dataset(8, 5, 4);
        let w_test = apply_whitening(&m, &test).unwrap();
        let mut shifted = test.coefficients.clone();
        for mut row in shifted.row_iter_mut() {
            row -= m.center.transpose();
        }
        let expect =
            shifted * ds.basis.gram_sqrt() * m.w.transpose() * ds.basis.gram_inv_sqrt();
        assert_eq!(w_test.coefficients, expect);
    }

    #[test]
    fn fit_rejects_uncentered_and_small_samples() {
        let ds = random_spline_dataset(30, 5, 9);
        assert!(matches!(
            fit_whitening(&ds, WhiteningMethod::Pca, None),
            Err(Error::CenteringMismatch(_))
        ));
        let small = FDataSet {
            coefficients: ds.coefficients.rows(0, 5).into_owned(),
            ..ds.clone()
        };
        let small_centered = center(&small, CenterMode::Pooled).unwrap();
        assert!(matches!(
            fit_whitening(&small_centered, WhiteningMethod::Pca, None),
            Err(Error::InsufficientSamples { need: 6, got: 5 })
        ));
    }

    #[test]
    fn singular_covariance_reports_near_singular() {
        let basis = identity_basis(3);
        // third coordinate is a copy of the first: rank 2
        let rows: Vec<f64> = (0..10)
            .flat_map(|i| {
                let x = i as f64 - 4.5;
                let y = (i as f64 * 0.7).sin();
                vec![x, y, x]
            })
            .collect();
        let ds = dataset(&basis, &rows, 10);
        let centered = center(&ds, CenterMode::Pooled).unwrap();
        match fit_whitening(&centered, WhiteningMethod::Zca, None) {
            Err(Error::NearSingular(v)) => assert!(v.abs() <= EIG_TOL),
            other => panic!("expected NearSingular, got {other:?}"),
        }
    }

    #[test]
    fn basis_mismatch_is_rejected() {
        let ds = random_spline_dataset(40, 5, 2);
        let centered = center(&ds, CenterMode::Pooled).unwrap();
        let m = fit_whitening(&centered, WhiteningMethod::Pca, None).unwrap();
        let other = random_spline_dataset(10, 6, 2);
        assert!(matches!(
            apply_whitening(&m, &other),
            Err(Error::BasisMismatch)
        ));
    }

    #[test]
    fn permuting_rows_leaves_the_fit_unchanged() {
        let ds = random_spline_dataset(40, 4, 21);
        let centered = center(&ds, CenterMode::Pooled).unwrap();
        let m1 = fit_whitening(&centered, WhiteningMethod::Zca, None).unwrap();
        let n = ds.n_samples();
        let mut permuted = centered.clone();
        for i in 0..n / 2 {
            permuted.coefficients.swap_rows(i, n - 1 - i);
        }
        let m2 = fit_whitening(&permuted, WhiteningMethod::Zca, None).unwrap();
        assert!((&m1.w - &m2.w).amax() <= 1e-10);
    }
}

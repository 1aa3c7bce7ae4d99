//! Spectral decay diagnostics: projection-to-eigenvalue log ratios,
//! truncation-point selection, partial RKHS-norm sums of the class mean
//! difference, and held-out whitening-consistency curves.
//!
//! The log-ratio series compares mean squared component scores with the
//! covariance eigenvalues. In sample the two coincide by construction, so
//! the series hovers at zero; its value lies in reading tail behavior of
//! scores computed against an external or resampled spectrum, and in the
//! companion partial sums, which diverge exactly when the mean difference
//! falls outside the RKHS of the covariance and near-perfect
//! classification becomes possible.

use nalgebra::{DMatrix, DVector};

use crate::basis::{build_basis, center, fit_curves, CenterMode, CenterRecord, FDataSet, RawCurves};
use crate::error::{Error, Result};
use crate::specmat;
use crate::whitening::{apply_whitening, fit_whitening, whitened_covariance, WhiteningMethod};

/// Default zero-band half-width for [`select_q`].
pub const RHO_BAND: f64 = 0.5;
/// Default stability margin (window length) for [`select_q`].
pub const RHO_MARGIN: usize = 2;

/// Per-component decay diagnostics of a centered dataset.
#[derive(Debug, Clone)]
pub struct PicardReport {
    /// Gram-metric covariance eigenvalues, descending.
    pub eigenvalues: DVector<f64>,
    /// Mean absolute component score per component.
    pub mean_abs: DVector<f64>,
    /// Mean squared component score per component.
    pub mean_sq: DVector<f64>,
    /// log(mean squared score / eigenvalue); +inf where the eigenvalue
    /// vanishes.
    pub log_ratio: DVector<f64>,
    /// Partial sums sum_{j<=k} v_j^2 / lambda_j of the class mean
    /// difference projections; present only for labeled data.
    pub partial_rkhs: Option<DVector<f64>>,
    /// Sample size the report was computed from.
    pub n: usize,
}

/// Computes the decay diagnostics of a pooled-centered dataset.
pub fn picard_series(ds: &FDataSet) -> Result<PicardReport> {
    let n = ds.n_samples();
    if n < 3 {
        return Err(Error::InsufficientSamples { need: 3, got: n });
    }
    if !matches!(&ds.center, Some(CenterRecord::Pooled(_))) {
        return Err(Error::CenteringMismatch(
            "decay diagnostics expect a pooled-centered dataset".into(),
        ));
    }
    let q = ds.basis.dimension();
    let b = &ds.coefficients * ds.basis.gram_sqrt();
    let cov = b.transpose() * &b / n as f64;
    let eig = specmat::sym_eigen(&cov)?;
    // component scores in the Gram metric
    let s = &b * &eig.vectors;
    let mut mean_abs = DVector::zeros(q);
    let mut mean_sq = DVector::zeros(q);
    for j in 0..q {
        let col = s.column(j);
        mean_abs[j] = col.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
        mean_sq[j] = col.iter().map(|v| v * v).sum::<f64>() / n as f64;
    }
    let log_ratio = DVector::from_fn(q, |j, _| {
        if eig.values[j] > 0.0 {
            (mean_sq[j] / eig.values[j]).ln()
        } else {
            f64::INFINITY
        }
    });
    let partial_rkhs = match &ds.labels {
        None => None,
        Some(_) => {
            let (idx0, idx1) = ds.class_indices()?;
            let mut mu_delta = DVector::zeros(q);
            for &i in &idx0 {
                mu_delta += ds.coefficients.row(i).transpose() / idx0.len() as f64;
            }
            for &i in &idx1 {
                mu_delta -= ds.coefficients.row(i).transpose() / idx1.len() as f64;
            }
            // v_j = <mu_delta, gamma_j>_G with gamma_j = G^{-1/2} u_j
            let v = eig.vectors.transpose() * ds.basis.gram_sqrt() * mu_delta;
            let mut partial = DVector::zeros(q);
            let mut acc = 0.0;
            for j in 0..q {
                if eig.values[j] > 0.0 {
                    acc += v[j] * v[j] / eig.values[j];
                }
                partial[j] = acc;
            }
            Some(partial)
        }
    };
    Ok(PicardReport {
        eigenvalues: eig.values,
        mean_abs,
        mean_sq,
        log_ratio,
        partial_rkhs,
        n,
    })
}

/// Truncation point from a log-ratio series: the smallest q in [2, n-1]
/// whose following `delta` ratios all sit inside the zero band
/// |rho| <= epsilon. Returns `(q, stable)`; when no window qualifies the
/// fallback is `(n - 1, false)`.
pub fn select_q(report: &PicardReport, epsilon: Option<f64>, delta: Option<usize>) -> (usize, bool) {
    let epsilon = epsilon.unwrap_or(RHO_BAND);
    let delta = delta.unwrap_or(RHO_MARGIN);
    let rho = &report.log_ratio;
    let len = rho.len();
    let hi = (report.n - 1).min(len.saturating_sub(delta));
    for q in 2..=hi {
        // window of 1-based components (q, q + delta]
        let ok = (q..q + delta).all(|j| rho[j].abs() <= epsilon);
        if ok {
            return (q, true);
        }
    }
    (report.n - 1, false)
}

/// Held-out whitening error across basis dimensions: for each q the curves
/// are refit, the even-index half whitens the odd-index half, and the
/// Frobenius distance of the held-out whitened covariance from the
/// identity is reported.
pub fn whitening_consistency_curve(
    curves: &RawCurves,
    method: WhiteningMethod,
    qs: &[usize],
    order: usize,
    penalty_order: usize,
) -> Result<Vec<(usize, f64)>> {
    let n = curves.values.nrows();
    if let Some(&qmax) = qs.iter().max() {
        if qmax >= n {
            return Err(Error::InvalidConfig(format!(
                "largest dimension {qmax} must stay below the sample size {n}"
            )));
        }
    }
    let interval = (
        curves.grid[0],
        *curves.grid.last().expect("nonempty grid"),
    );
    let train_rows: Vec<usize> = (0..n).step_by(2).collect();
    let test_rows: Vec<usize> = (1..n).step_by(2).collect();
    let split = |rows: &[usize]| RawCurves {
        grid: curves.grid.clone(),
        values: DMatrix::from_fn(rows.len(), curves.grid.len(), |r, c| {
            curves.values[(rows[r], c)]
        }),
    };
    let train = split(&train_rows);
    let test = split(&test_rows);
    let mut out = Vec::with_capacity(qs.len());
    for &q in qs {
        let basis = build_basis(interval, order, q, penalty_order)?;
        let train_ds = center(&fit_curves(&basis, &train, None)?, CenterMode::Pooled)?;
        let test_ds = fit_curves(&basis, &test, None)?;
        let model = fit_whitening(&train_ds, method, None)?;
        let white = apply_whitening(&model, &test_ds)?;
        let dev = specmat::hs_distance_to_identity(&whitened_covariance(&white));
        out.push((q, dev));
    }
    Ok(out)
}

/// Distance-to-singularity reading of the last normalized kurtosis:
/// `min(|k - 3| / 2, 1 - 1e-12)`. Zero at the Gaussian reference value 3,
/// saturating just below 1 (the mutual-singularity regime).
pub fn singularity_distance(normalized_kurtosis_last: f64) -> f64 {
    ((normalized_kurtosis_last - 3.0).abs() / 2.0).min(1.0 - 1e-12)
}

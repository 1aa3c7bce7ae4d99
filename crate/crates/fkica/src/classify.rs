//! Nearest-centroid classification along a single functional direction.
//!
//! A direction selector picks one weight function from the training sample:
//! the leading principal component (PC1), the principal component whose
//! scores have minimal univariate kurtosis (PCm), or the minimum-eigenvalue
//! eigenfunction of the whitened kurtosis operator, plain (ICq) or smoothed
//! (SICq). Training records the per-class mean scores along that direction;
//! prediction assigns a curve to the class with the nearest mean score,
//! breaking ties toward class 0.
//!
//! Directions found in whitened or reduced coordinates are mapped back to
//! the original basis so a trained model only needs the basis, a center and
//! one coefficient vector to score new curves.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::basis::{center, CenterMode, CenterRecord, FDataSet, FunctionalBasis, RawCurves};
use crate::error::{Error, Result};
use crate::kurtosis::solve_penalized;
use crate::specmat;
use crate::whitening::{
    apply_whitening, fit_whitening, shift_by_center, whitened_covariance, WhiteningMethod,
};
use crate::EIG_TOL;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Direction selectors, named after the component they extract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selector {
    /// Leading principal component of the covariance.
    Pc1,
    /// Principal component with minimal score kurtosis.
    Pcm,
    /// Minimum-eigenvalue kurtosis component, unsmoothed.
    Icq,
    /// Minimum-eigenvalue kurtosis component of the smoothed operator.
    Sicq,
}

impl Selector {
    /// Lowercase CLI name.
    pub fn name(&self) -> &'static str {
        match self {
            Selector::Pc1 => "pc1",
            Selector::Pcm => "pcm",
            Selector::Icq => "icq",
            Selector::Sicq => "sicq",
        }
    }

    /// Row label used in error tables.
    pub fn label(&self) -> &'static str {
        match self {
            Selector::Pc1 => "PC1",
            Selector::Pcm => "PCm",
            Selector::Icq => "ICq",
            Selector::Sicq => "SICq",
        }
    }

    /// Whether the selector runs the whitening + kurtosis pipeline.
    pub fn uses_whitening(&self) -> bool {
        matches!(self, Selector::Icq | Selector::Sicq)
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pc1" => Ok(Selector::Pc1),
            "pcm" => Ok(Selector::Pcm),
            "icq" => Ok(Selector::Icq),
            "sicq" => Ok(Selector::Sicq),
            other => Err(Error::InvalidConfig(format!(
                "unknown selector '{other}' (expected pc1, pcm, icq or sicq)"
            ))),
        }
    }
}

/// A centroid classifier along one functional direction.
///
/// `beta` and `center` live in the coefficient space of `basis`; the score
/// of a curve with coefficients `a` is `(a - center)^T G beta`. The model
/// is untrained until `class_means` is set.
#[derive(Debug, Clone)]
pub struct CentroidModel {
    pub selector: Selector,
    pub method: Option<WhiteningMethod>,
    pub theta: f64,
    pub reduce_p: Option<usize>,
    pub beta: DVector<f64>,
    pub center: DVector<f64>,
    pub class_means: Option<(f64, f64)>,
    /// Set when training found identical class means; predictions then
    /// default to class 0.
    pub degenerate: bool,
    pub basis: Arc<FunctionalBasis>,
}

/// Covariance eigenpairs of a centered dataset in the Gram metric.
fn gram_covariance_eigen(ds: &FDataSet) -> Result<specmat::EigenSystem> {
    let b = &ds.coefficients * ds.basis.gram_sqrt();
    let c = b.transpose() * &b / ds.n_samples() as f64;
    specmat::sym_eigen(&c)
}

fn require_pooled_center(ds: &FDataSet) -> Result<DVector<f64>> {
    match &ds.center {
        Some(CenterRecord::Pooled(c)) => Ok(c.clone()),
        _ => Err(Error::CenteringMismatch(
            "direction selection expects a pooled-centered dataset".into(),
        )),
    }
}

/// Univariate kurtosis m4 / m2^2 of a column, centered by its sample mean.
fn column_kurtosis(col: &DVector<f64>) -> f64 {
    let n = col.len() as f64;
    let mean = col.mean();
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for v in col.iter() {
        let d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    m4 / (m2 * m2)
}

/// Picks a discriminant direction on a labeled, pooled-centered dataset.
///
/// The returned model is untrained (no class means yet) and lives over the
/// dataset's own basis; `theta` is ignored by PC1/PCm and forced to 0 by
/// ICq. Also returns the normalized kurtosis spectrum and the whitening
/// covariance deviation when the kurtosis pipeline ran.
pub fn select_direction(
    ds: &FDataSet,
    selector: Selector,
    method: WhiteningMethod,
    theta: f64,
) -> Result<(CentroidModel, SelectionDiagnostics)> {
    if ds.labels.is_none() {
        return Err(Error::MissingLabels);
    }
    let centre = require_pooled_center(ds)?;
    let q = ds.basis.dimension();
    let mut diags = SelectionDiagnostics {
        normalized_kurtosis: None,
        whitening_deviation: None,
        component: 0,
    };
    let (beta, component, used_method, used_theta) = match selector {
        Selector::Pc1 | Selector::Pcm => {
            let eig = gram_covariance_eigen(ds)?;
            let idx = if selector == Selector::Pc1 {
                0
            } else {
                // scores on all principal components: A G^{1/2} U
                let s = &ds.coefficients * ds.basis.gram_sqrt() * &eig.vectors;
                let mut best = 0;
                let mut best_k = f64::INFINITY;
                for j in 0..q {
                    let k = column_kurtosis(&s.column(j).into_owned());
                    if k < best_k {
                        best_k = k;
                        best = j;
                    }
                }
                best
            };
            let beta = ds.basis.gram_inv_sqrt() * eig.vectors.column(idx);
            (beta, idx + 1, None, 0.0)
        }
        Selector::Icq | Selector::Sicq => {
            let theta = if selector == Selector::Icq { 0.0 } else { theta };
            let wm = fit_whitening(ds, method, None)?;
            let white = apply_whitening(&wm, ds)?;
            diags.whitening_deviation = Some(specmat::hs_distance_to_identity(
                &whitened_covariance(&white),
            ));
            let km = solve_penalized(&white, theta)?;
            diags.normalized_kurtosis = Some(km.normalized.clone());
            // smallest eigenvalue is last in the descending order
            let b_psi = km.b.column(q - 1).into_owned();
            let beta =
                ds.basis.gram_inv_sqrt() * wm.w.transpose() * ds.basis.gram_sqrt() * b_psi;
            (beta, q, Some(method), theta)
        }
    };
    diags.component = component;
    Ok((
        CentroidModel {
            selector,
            method: used_method,
            theta: used_theta,
            reduce_p: None,
            beta,
            center: centre,
            class_means: None,
            degenerate: false,
            basis: Arc::clone(&ds.basis),
        },
        diags,
    ))
}

/// Extra outputs of [`select_direction`] for reporting.
#[derive(Debug, Clone)]
pub struct SelectionDiagnostics {
    pub normalized_kurtosis: Option<DVector<f64>>,
    pub whitening_deviation: Option<f64>,
    /// 1-based index of the chosen component.
    pub component: usize,
}

/// Scores of every curve in a dataset under a model: `(a - center)^T G b`.
pub fn projection_scores(model: &CentroidModel, ds: &FDataSet) -> Result<DVector<f64>> {
    if ds.basis.as_ref() != model.basis.as_ref() {
        return Err(Error::BasisMismatch);
    }
    let coeff = shift_by_center(&model.center, ds)?;
    Ok(coeff * model.basis.gram() * &model.beta)
}

/// Records per-class mean scores of the training data on the model.
pub fn train(model: &CentroidModel, ds: &FDataSet) -> Result<CentroidModel> {
    let (idx0, idx1) = ds.class_indices()?;
    let xi = projection_scores(model, ds)?;
    let m0 = idx0.iter().map(|&i| xi[i]).sum::<f64>() / idx0.len() as f64;
    let m1 = idx1.iter().map(|&i| xi[i]).sum::<f64>() / idx1.len() as f64;
    Ok(CentroidModel {
        class_means: Some((m0, m1)),
        degenerate: m0 == m1,
        ..model.clone()
    })
}

/// Assigns each curve to the class with the nearest mean score.
///
/// Ties and degenerate models resolve to class 0.
pub fn predict(model: &CentroidModel, ds: &FDataSet) -> Result<Vec<u8>> {
    let (m0, m1) = model
        .class_means
        .ok_or_else(|| Error::InvalidConfig("model has no trained class means".into()))?;
    let xi = projection_scores(model, ds)?;
    Ok(xi
        .iter()
        .map(|&x| {
            if model.degenerate {
                return 0;
            }
            let d0 = (x - m0).abs();
            let d1 = (x - m1).abs();
            if d1 < d0 {
                1
            } else {
                0
            }
        })
        .collect())
}

/// Misclassification rate of a trained model on labeled data, in [0, 1].
pub fn error_rate(model: &CentroidModel, ds: &FDataSet) -> Result<f64> {
    let labels = ds.labels.as_ref().ok_or(Error::MissingLabels)?;
    let pred = predict(model, ds)?;
    let wrong = pred
        .iter()
        .zip(labels.iter())
        .filter(|(p, l)| p != l)
        .count();
    Ok(wrong as f64 / labels.len() as f64)
}

/// Gaussian theoretical misclassification error of a linear rule with known
/// class means and common covariance, all in grid coordinates.
///
/// With mean difference `mu_delta`, direction `beta` and covariance
/// `sigma`: `nu = <mu_delta, beta>`, `sigma_Q^2 = <beta, sigma beta>`, and
/// the error of the midpoint rule with prior `pi` on class 0 is
/// `pi Phi(-nu / 2 sigma_Q) + (1 - pi) Phi(-nu / 2 sigma_Q)`.
pub fn theoretical_error(
    beta: &DVector<f64>,
    mu_delta: &DVector<f64>,
    sigma: &DMatrix<f64>,
    pi: f64,
) -> Result<f64> {
    if !(pi > 0.0 && pi < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "class prior must lie strictly between 0 and 1, got {pi}"
        )));
    }
    let m = beta.len();
    if mu_delta.len() != m || sigma.nrows() != m || sigma.ncols() != m {
        return Err(Error::InvalidConfig(
            "direction, mean difference and covariance dimensions disagree".into(),
        ));
    }
    let asym = (sigma - sigma.transpose()).amax();
    if asym > 1e-8 * sigma.amax().max(1.0) {
        return Err(Error::NonPdCovariance);
    }
    let nu = mu_delta.dot(beta);
    let var = (beta.transpose() * sigma * beta)[(0, 0)];
    if !(var > 0.0) {
        return Err(Error::NonPdCovariance);
    }
    let sigma_q = var.sqrt();
    let gauss = Normal::new(0.0, 1.0).expect("unit normal");
    let tail = gauss.cdf(-nu / (2.0 * sigma_q));
    Ok(pi * tail + (1.0 - pi) * tail)
}

/// Replaces each curve by its projection onto the leading `p` principal
/// components of its own class (class-centered eigenanalysis), keeping the
/// basis and row order.
///
/// Eigenvalues at or below `tol` (default [`EIG_TOL`]) within the leading
/// `p` make the requested rank unusable.
pub fn groupwise_fpca_reduce(ds: &FDataSet, p: usize, tol: Option<f64>) -> Result<FDataSet> {
    let tol = tol.unwrap_or(EIG_TOL);
    let q = ds.basis.dimension();
    if p == 0 || p > q {
        return Err(Error::InvalidConfig(format!(
            "reduction rank {p} must lie in 1..={q}"
        )));
    }
    let (idx0, idx1) = ds.class_indices()?;
    let mut reduced = ds.coefficients.clone();
    for idx in [&idx0, &idx1] {
        let nk = idx.len();
        let mut class = DMatrix::zeros(nk, q);
        for (r, &i) in idx.iter().enumerate() {
            class.row_mut(r).copy_from(&ds.coefficients.row(i));
        }
        let mean = class.row_mean();
        let mut centered = class.clone();
        for mut row in centered.row_iter_mut() {
            row -= &mean;
        }
        let b = &centered * ds.basis.gram_sqrt();
        let cov = b.transpose() * &b / nk as f64;
        let eig = specmat::sym_eigen(&cov)?;
        if eig.values[p - 1] <= tol {
            return Err(Error::RankTooHigh { p, tol });
        }
        // rows of bk are the class eigenfunction coefficients
        let uk = eig.vectors.columns(0, p).transpose();
        let bk = uk * ds.basis.gram_inv_sqrt();
        let proj = (&class * ds.basis.gram() * bk.transpose()) * &bk;
        for (r, &i) in idx.iter().enumerate() {
            reduced.row_mut(i).copy_from(&proj.row(r));
        }
    }
    Ok(FDataSet {
        basis: Arc::clone(&ds.basis),
        coefficients: reduced,
        labels: ds.labels.clone(),
        center: ds.center.clone(),
    })
}

/// Pooled principal-coordinate truncation of a centered dataset: returns
/// the dataset expressed in the leading `p` eigenfunction coordinates and
/// the p x q coefficient matrix `E` of those eigenfunctions.
fn pooled_truncation(ds: &FDataSet, p: usize, tol: f64) -> Result<(FDataSet, DMatrix<f64>)> {
    let eig = gram_covariance_eigen(ds)?;
    if eig.values[p - 1] <= tol {
        return Err(Error::RankTooHigh { p, tol });
    }
    let e = eig.vectors.columns(0, p).transpose() * ds.basis.gram_inv_sqrt();
    let gram_p = &e * ds.basis.gram() * e.transpose();
    let penalty_p = &e * ds.basis.penalty() * e.transpose();
    let basis_p = FunctionalBasis::from_matrices(
        gram_p,
        penalty_p,
        ds.basis.penalty_order(),
    )?;
    let z = &ds.coefficients * ds.basis.gram() * e.transpose();
    Ok((
        FDataSet {
            basis: basis_p,
            coefficients: z,
            labels: ds.labels.clone(),
            center: Some(CenterRecord::Pooled(DVector::zeros(p))),
        },
        e,
    ))
}

/// Everything needed to fit a classifier in one call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub selector: Selector,
    pub method: WhiteningMethod,
    pub theta: f64,
    /// Group-wise FPCA reduction rank; `None` disables reduction.
    pub reduce_p: Option<usize>,
    pub tol: Option<f64>,
}

/// A fitted pipeline: the trained model plus selection diagnostics.
#[derive(Debug, Clone)]
pub struct PipelineFit {
    pub model: CentroidModel,
    pub diagnostics: SelectionDiagnostics,
}

/// Centers, optionally reduces, selects a direction and trains the
/// centroid model, mapping everything back to the dataset's basis.
pub fn fit_pipeline(ds: &FDataSet, cfg: &PipelineConfig) -> Result<PipelineFit> {
    let centered = center(ds, CenterMode::Pooled)?;
    match cfg.reduce_p {
        None => {
            let (model, diags) =
                select_direction(&centered, cfg.selector, cfg.method, cfg.theta)?;
            let trained = train(&model, &centered)?;
            Ok(PipelineFit {
                model: trained,
                diagnostics: diags,
            })
        }
        Some(p) => {
            let tol = cfg.tol.unwrap_or(EIG_TOL);
            let smoothed = groupwise_fpca_reduce(&centered, p, cfg.tol)?;
            // the class-wise projection shifts the pooled mean; re-center
            // and fold both shifts into the model center
            let smoothed = center(&smoothed, CenterMode::Pooled)?;
            let total_center = require_pooled_center(&smoothed)?;
            let (zds, e) = pooled_truncation(&smoothed, p, tol)?;
            let (model_p, diags) =
                select_direction(&zds, cfg.selector, cfg.method, cfg.theta)?;
            let trained_p = train(&model_p, &zds)?;
            // map the reduced-space direction back to the original basis so
            // that scores of raw curves reproduce reduced-space scores
            let beta = e.transpose() * zds.basis.gram() * &trained_p.beta;
            Ok(PipelineFit {
                model: CentroidModel {
                    selector: cfg.selector,
                    method: trained_p.method,
                    theta: trained_p.theta,
                    reduce_p: Some(p),
                    beta,
                    center: total_center,
                    class_means: trained_p.class_means,
                    degenerate: trained_p.degenerate,
                    basis: Arc::clone(&ds.basis),
                },
                diagnostics: diags,
            })
        }
    }
}

/// Leave-one-out misclassification rate of a pipeline configuration.
///
/// Every fold refits centering, reduction, whitening and the kurtosis
/// solve on the remaining curves.
pub fn loo_error(ds: &FDataSet, cfg: &PipelineConfig) -> Result<f64> {
    let labels = ds.labels.as_ref().ok_or(Error::MissingLabels)?.clone();
    let n = ds.n_samples();
    if n < 3 {
        return Err(Error::InsufficientSamples { need: 3, got: n });
    }
    let fold = |i: usize| -> Result<u8> {
        let keep: Vec<usize> = (0..n).filter(|&r| r != i).collect();
        let mut coeff = DMatrix::zeros(n - 1, ds.basis.dimension());
        let mut fold_labels = Vec::with_capacity(n - 1);
        for (r, &src) in keep.iter().enumerate() {
            coeff.row_mut(r).copy_from(&ds.coefficients.row(src));
            fold_labels.push(labels[src]);
        }
        let train_ds = FDataSet {
            basis: Arc::clone(&ds.basis),
            coefficients: coeff,
            labels: Some(fold_labels),
            center: None,
        };
        let fit = fit_pipeline(&train_ds, cfg)?;
        let test_ds = FDataSet {
            basis: Arc::clone(&ds.basis),
            coefficients: DMatrix::from_rows(&[ds.coefficients.row(i)]),
            labels: None,
            center: None,
        };
        Ok(predict(&fit.model, &test_ds)?[0])
    };
    #[cfg(feature = "parallel")]
    let preds: Result<Vec<u8>> = (0..n).into_par_iter().map(fold).collect();
    #[cfg(not(feature = "parallel"))]
    let preds: Result<Vec<u8>> = (0..n).map(fold).collect();
    let preds = preds?;
    let wrong = preds
        .iter()
        .zip(labels.iter())
        .filter(|(p, l)| p != l)
        .count();
    Ok(wrong as f64 / n as f64)
}

/// Input for cross-validation: coefficients at a fixed dimension, or raw
/// curves that are refitted per candidate dimension.
pub enum CvData<'a> {
    Fitted(&'a FDataSet),
    Raw {
        curves: &'a RawCurves,
        labels: &'a [u8],
        order: usize,
        penalty_order: usize,
        interval: (f64, f64),
    },
}

/// Cartesian grid of candidate configurations.
#[derive(Debug, Clone)]
pub struct CvGrid {
    pub methods: Vec<WhiteningMethod>,
    pub thetas: Vec<f64>,
    pub qs: Vec<usize>,
}

/// Model-selection criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvCriterion {
    /// Last normalized kurtosis closest to 1 from above.
    MinKurtosis,
    /// Lowest leave-one-out misclassification of the IC pipeline.
    CvError,
}

/// One evaluated grid point; `score` is `None` when the fit failed.
#[derive(Debug, Clone)]
pub struct CvEntry {
    pub method: WhiteningMethod,
    pub theta: f64,
    pub q: usize,
    pub score: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CvReport {
    pub best: CvEntry,
    pub entries: Vec<CvEntry>,
}

/// Ranking key: smaller is better. MinKurtosis prefers values at or above
/// 1, closest first; values below 1 only win when nothing reaches 1.
fn criterion_key(criterion: CvCriterion, score: f64) -> (u8, f64) {
    match criterion {
        CvCriterion::MinKurtosis => {
            if score >= 1.0 {
                (0, score - 1.0)
            } else {
                (1, 1.0 - score)
            }
        }
        CvCriterion::CvError => (0, score),
    }
}

/// Evaluates every grid configuration and picks the best under the
/// criterion; ties break toward smaller theta, then smaller q, then the
/// whitening method declaration order.
pub fn cross_validate(data: &CvData, grid: &CvGrid, criterion: CvCriterion) -> Result<CvReport> {
    if grid.methods.is_empty() || grid.thetas.is_empty() || grid.qs.is_empty() {
        return Err(Error::InvalidConfig("empty cross-validation grid".into()));
    }
    let mut configs = Vec::new();
    for &q in &grid.qs {
        for &theta in &grid.thetas {
            for &method in &grid.methods {
                configs.push((method, theta, q));
            }
        }
    }
    let eval = |&(method, theta, q): &(WhiteningMethod, f64, usize)| -> CvEntry {
        let score = evaluate_config(data, method, theta, q, criterion);
        CvEntry {
            method,
            theta,
            q,
            score: score.ok(),
        }
    };
    #[cfg(feature = "parallel")]
    let entries: Vec<CvEntry> = configs.par_iter().map(eval).collect();
    #[cfg(not(feature = "parallel"))]
    let entries: Vec<CvEntry> = configs.iter().map(eval).collect();

    let best = entries
        .iter()
        .filter(|e| e.score.is_some())
        .min_by(|a, b| {
            let ka = criterion_key(criterion, a.score.unwrap());
            let kb = criterion_key(criterion, b.score.unwrap());
            ka.partial_cmp(&kb)
                .unwrap()
                .then(a.theta.partial_cmp(&b.theta).unwrap())
                .then(a.q.cmp(&b.q))
                .then(a.method.cmp(&b.method))
        })
        .cloned()
        .ok_or_else(|| {
            Error::InvalidConfig("every cross-validation configuration failed".into())
        })?;
    Ok(CvReport { best, entries })
}

fn evaluate_config(
    data: &CvData,
    method: WhiteningMethod,
    theta: f64,
    q: usize,
    criterion: CvCriterion,
) -> Result<f64> {
    let owned;
    let ds: &FDataSet = match data {
        CvData::Fitted(ds) => {
            if ds.basis.dimension() != q {
                return Err(Error::InvalidConfig(format!(
                    "grid dimension {q} does not match the fitted basis ({})",
                    ds.basis.dimension()
                )));
            }
            ds
        }
        CvData::Raw {
            curves,
            labels,
            order,
            penalty_order,
            interval,
        } => {
            let basis = crate::basis::build_basis(*interval, *order, q, *penalty_order)?;
            owned = crate::basis::fit_curves(&basis, curves, Some(labels.to_vec()))?;
            &owned
        }
    };
    match criterion {
        CvCriterion::MinKurtosis => {
            let centered = center(ds, CenterMode::Pooled)?;
            let wm = fit_whitening(&centered, method, None)?;
            let white = apply_whitening(&wm, &centered)?;
            let km = solve_penalized(&white, theta)?;
            Ok(km.normalized[q - 1])
        }
        CvCriterion::CvError => {
            let selector = if theta == 0.0 {
                Selector::Icq
            } else {
                Selector::Sicq
            };
            loo_error(
                ds,
                &PipelineConfig {
                    selector,
                    method,
                    theta,
                    reduce_p: None,
                    tol: None,
                },
            )
        }
    }
}

/// Population Fisher discriminant data on the observation grid.
#[derive(Debug, Clone)]
pub struct FisherOracle {
    /// Positive covariance eigenvalues, descending.
    pub lambdas: Vec<f64>,
    /// Matching eigenvectors (columns, grid space).
    pub gammas: DMatrix<f64>,
    /// Projections of the mean difference on the eigenvectors.
    pub v: Vec<f64>,
    /// Truncated discriminant direction on the grid.
    pub phi_grid: DVector<f64>,
    /// The same direction projected into the working spline basis.
    pub phi_coeffs: DVector<f64>,
}

/// Cosine of the angle between two coefficient vectors in the Gram metric.
pub fn gram_cosine(basis: &FunctionalBasis, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let g = basis.gram();
    let ab = (a.transpose() * g * b)[(0, 0)];
    let aa = (a.transpose() * g * a)[(0, 0)];
    let bb = (b.transpose() * g * b)[(0, 0)];
    ab / (aa * bb).sqrt()
}

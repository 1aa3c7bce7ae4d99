//! B-spline basis expansion of discretely observed curves.
//!
//! A basis of `n_basis` splines of a given order is built on an interval
//! with equispaced interior knots, so `n_basis = interior knots + order`.
//! The Gram matrix of pairwise L2 inner products and the roughness penalty
//! matrix of derivative inner products are assembled by per-interval
//! Gauss-Legendre quadrature with `order + 1` nodes, which is exact for the
//! polynomial integrands involved. Curve samples are projected onto the
//! basis by unpenalized least squares, one row of coefficients per curve.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::specmat;

/// Relative rank tolerance for the least-squares design matrix.
const DESIGN_TOL: f64 = 1e-12;

/// How a basis was constructed; evaluation on a grid needs the spline form.
#[derive(Debug, Clone, PartialEq)]
enum BasisKind {
    /// Clamped B-spline basis: full knot vector of length `n_basis + order`.
    BSpline {
        interval: (f64, f64),
        order: usize,
        knots: Vec<f64>,
    },
    /// Derived coordinate space (e.g. principal-component coordinates); has
    /// Gram and penalty matrices but no pointwise evaluation.
    Coordinates,
}

/// A functional basis together with its Gram and penalty matrices.
///
/// `gram_sqrt` and `gram_inv_sqrt` are cached because every whitening and
/// kurtosis step works in the `G^{1/2}` coordinates.
#[derive(Debug, Clone)]
pub struct FunctionalBasis {
    kind: BasisKind,
    penalty_order: usize,
    gram: DMatrix<f64>,
    penalty: DMatrix<f64>,
    gram_sqrt: DMatrix<f64>,
    gram_inv_sqrt: DMatrix<f64>,
}

impl PartialEq for FunctionalBasis {
    fn eq(&self, other: &Self) -> bool {
        self.penalty_order == other.penalty_order
            && match (&self.kind, &other.kind) {
                (BasisKind::Coordinates, BasisKind::Coordinates) => {
                    self.gram == other.gram && self.penalty == other.penalty
                }
                (a, b) => a == b,
            }
    }
}

impl FunctionalBasis {
    /// Number of basis functions.
    pub fn dimension(&self) -> usize {
        self.gram.nrows()
    }

    /// Order used when building a spline basis (0 for coordinate spaces).
    pub fn order(&self) -> usize {
        match &self.kind {
            BasisKind::BSpline { order, .. } => *order,
            BasisKind::Coordinates => 0,
        }
    }

    /// Derivative order of the roughness penalty.
    pub fn penalty_order(&self) -> usize {
        self.penalty_order
    }

    /// Domain of a spline basis.
    pub fn interval(&self) -> Option<(f64, f64)> {
        match &self.kind {
            BasisKind::BSpline { interval, .. } => Some(*interval),
            BasisKind::Coordinates => None,
        }
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn penalty(&self) -> &DMatrix<f64> {
        &self.penalty
    }

    pub fn gram_sqrt(&self) -> &DMatrix<f64> {
        &self.gram_sqrt
    }

    pub fn gram_inv_sqrt(&self) -> &DMatrix<f64> {
        &self.gram_inv_sqrt
    }

    /// Evaluates the `d`-th derivative of every basis function at `x`.
    pub fn eval_all(&self, x: f64, d: usize) -> Result<DVector<f64>> {
        let (order, knots, interval) = match &self.kind {
            BasisKind::BSpline {
                order,
                knots,
                interval,
            } => (*order, knots, *interval),
            BasisKind::Coordinates => {
                return Err(Error::InvalidBasisSpec(
                    "coordinate basis has no pointwise evaluation".into(),
                ))
            }
        };
        let q = self.dimension();
        let mut out = DVector::zeros(q);
        for i in 0..q {
            out[i] = eval_bspline(knots, interval.1, i, order, x, d);
        }
        Ok(out)
    }

    /// Design matrix: rows are grid points, columns basis functions.
    pub fn design_matrix(&self, grid: &[f64]) -> Result<DMatrix<f64>> {
        let q = self.dimension();
        let mut phi = DMatrix::zeros(grid.len(), q);
        for (r, &x) in grid.iter().enumerate() {
            let row = self.eval_all(x, 0)?;
            phi.row_mut(r).copy_from(&row.transpose());
        }
        Ok(phi)
    }

    /// Builds a derived coordinate basis from explicit Gram and penalty
    /// matrices (used for reduced principal-coordinate spaces).
    pub fn from_matrices(
        gram: DMatrix<f64>,
        penalty: DMatrix<f64>,
        penalty_order: usize,
    ) -> Result<Arc<Self>> {
        if !gram.is_square() || gram.shape() != penalty.shape() {
            return Err(Error::InvalidBasisSpec(
                "gram and penalty must be square of equal size".into(),
            ));
        }
        let gram_sqrt = specmat::sqrt_pd(&gram)?;
        let gram_inv_sqrt = specmat::inv_sqrt(&gram, 0.0)?;
        Ok(Arc::new(FunctionalBasis {
            kind: BasisKind::Coordinates,
            penalty_order,
            gram,
            penalty,
            gram_sqrt,
            gram_inv_sqrt,
        }))
    }
}

/// Builds a clamped B-spline basis with equispaced interior knots.
///
/// `n_basis` must be at least `order`; the interior knot count is then
/// `n_basis - order`. The Gram and penalty matrices are assembled once here
/// and cached on the returned basis.
pub fn build_basis(
    interval: (f64, f64),
    order: usize,
    n_basis: usize,
    penalty_order: usize,
) -> Result<Arc<FunctionalBasis>> {
    let (a, b) = interval;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidBasisSpec(format!(
            "interval [{a}, {b}] is empty or not finite"
        )));
    }
    if order == 0 {
        return Err(Error::InvalidBasisSpec("order must be at least 1".into()));
    }
    if n_basis < order {
        return Err(Error::InvalidBasisSpec(format!(
            "n_basis ({n_basis}) must be at least the order ({order})"
        )));
    }
    if penalty_order == 0 {
        return Err(Error::InvalidBasisSpec(
            "penalty_order must be at least 1".into(),
        ));
    }
    let interior = n_basis - order;
    let mut knots = Vec::with_capacity(n_basis + order);
    knots.extend(std::iter::repeat(a).take(order));
    for i in 1..=interior {
        knots.push(a + (b - a) * i as f64 / (interior + 1) as f64);
    }
    knots.extend(std::iter::repeat(b).take(order));

    let (gram, penalty) = assemble_matrices(&knots, interval, order, n_basis, penalty_order);
    let gram_sqrt = specmat::sqrt_pd(&gram)?;
    let gram_inv_sqrt = specmat::inv_sqrt(&gram, 0.0)?;
    Ok(Arc::new(FunctionalBasis {
        kind: BasisKind::BSpline {
            interval,
            order,
            knots,
        },
        penalty_order,
        gram,
        penalty,
        gram_sqrt,
        gram_inv_sqrt,
    }))
}

/// Cox-de Boor evaluation of one B-spline (derivative `d`) on clamped knots.
///
/// Zero-width spans contribute nothing; the rightmost nonempty interval is
/// closed so the partition of unity holds at the right endpoint.
fn eval_bspline(knots: &[f64], t_max: f64, i: usize, m: usize, x: f64, d: usize) -> f64 {
    if d > 0 {
        if m <= 1 {
            return 0.0;
        }
        let left_den = knots[i + m - 1] - knots[i];
        let right_den = knots[i + m] - knots[i + 1];
        let mut v = 0.0;
        if left_den > 0.0 {
            v += eval_bspline(knots, t_max, i, m - 1, x, d - 1) / left_den;
        }
        if right_den > 0.0 {
            v -= eval_bspline(knots, t_max, i + 1, m - 1, x, d - 1) / right_den;
        }
        return (m - 1) as f64 * v;
    }
    if m == 1 {
        let in_span = knots[i] <= x && x < knots[i + 1];
        let closes_domain = x == t_max && knots[i] < knots[i + 1] && knots[i + 1] == t_max;
        return if in_span || closes_domain { 1.0 } else { 0.0 };
    }
    let mut v = 0.0;
    let left_den = knots[i + m - 1] - knots[i];
    if left_den > 0.0 {
        v += (x - knots[i]) / left_den * eval_bspline(knots, t_max, i, m - 1, x, 0);
    }
    let right_den = knots[i + m] - knots[i + 1];
    if right_den > 0.0 {
        v += (knots[i + m] - x) / right_den * eval_bspline(knots, t_max, i + 1, m - 1, x, 0);
    }
    v
}

/// Gauss-Legendre nodes and weights on [-1, 1] by the Golub-Welsch method.
///
/// Nodes are the eigenvalues of the symmetric Jacobi matrix, returned in
/// ascending order; weights are twice the squared first eigenvector entries.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut jac = DMatrix::zeros(n, n);
    for k in 1..n {
        let kf = k as f64;
        let off = kf / (4.0 * kf * kf - 1.0).sqrt();
        jac[(k - 1, k)] = off;
        jac[(k, k - 1)] = off;
    }
    let eig = specmat::sym_eigen(&jac).expect("jacobi matrix is symmetric");
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let node = eig.values[j];
            let w = 2.0 * eig.vectors[(0, j)] * eig.vectors[(0, j)];
            (node, w)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    (
        pairs.iter().map(|p| p.0).collect(),
        pairs.iter().map(|p| p.1).collect(),
    )
}

/// Assembles Gram and penalty matrices by exact per-interval quadrature.
fn assemble_matrices(
    knots: &[f64],
    interval: (f64, f64),
    order: usize,
    q: usize,
    r: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let (nodes, weights) = gauss_legendre(order + 1);
    let mut gram = DMatrix::zeros(q, q);
    let mut pen = DMatrix::zeros(q, q);
    for w in knots.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let half = (hi - lo) / 2.0;
        let mid = (hi + lo) / 2.0;
        for (xi, wi) in nodes.iter().zip(weights.iter()) {
            let x = mid + half * xi;
            let wx = wi * half;
            let mut phi = DVector::zeros(q);
            let mut dphi = DVector::zeros(q);
            for i in 0..q {
                phi[i] = eval_bspline(knots, interval.1, i, order, x, 0);
                dphi[i] = eval_bspline(knots, interval.1, i, order, x, r);
            }
            // Fill the upper triangle and mirror so symmetry is exact in bits.
            for i in 0..q {
                for j in i..q {
                    gram[(i, j)] += wx * phi[i] * phi[j];
                    pen[(i, j)] += wx * dphi[i] * dphi[j];
                }
            }
        }
    }
    for i in 0..q {
        for j in 0..i {
            gram[(i, j)] = gram[(j, i)];
            pen[(i, j)] = pen[(j, i)];
        }
    }
    (gram, pen)
}

/// Raw curve samples: one row per curve, observed on a shared grid.
#[derive(Debug, Clone)]
pub struct RawCurves {
    pub grid: Vec<f64>,
    pub values: DMatrix<f64>,
}

/// Record of what has been subtracted from a dataset's coefficient rows.
#[derive(Debug, Clone, PartialEq)]
pub enum CenterRecord {
    /// One pooled mean subtracted from every row.
    Pooled(DVector<f64>),
    /// Class means subtracted row-wise (class 0, class 1).
    PerGroup(DVector<f64>, DVector<f64>),
}

/// Centering mode for [`center`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenterMode {
    Pooled,
    PerGroup,
}

/// Curves expressed as basis coefficients, one row per curve.
#[derive(Debug, Clone)]
pub struct FDataSet {
    pub basis: Arc<FunctionalBasis>,
    /// n x q coefficient matrix.
    pub coefficients: DMatrix<f64>,
    /// Optional class labels in {0, 1}, one per row.
    pub labels: Option<Vec<u8>>,
    /// What has been subtracted from the rows, if anything.
    pub center: Option<CenterRecord>,
}

impl FDataSet {
    pub fn n_samples(&self) -> usize {
        self.coefficients.nrows()
    }

    /// Row indices of each class. Errors when labels are missing, a label is
    /// outside {0, 1}, or a class is empty.
    pub fn class_indices(&self) -> Result<(Vec<usize>, Vec<usize>)> {
        let labels = self.labels.as_ref().ok_or(Error::MissingLabels)?;
        let mut c0 = Vec::new();
        let mut c1 = Vec::new();
        for (i, &l) in labels.iter().enumerate() {
            match l {
                0 => c0.push(i),
                1 => c1.push(i),
                other => {
                    return Err(Error::Parse(format!(
                        "label {other} at row {i} is outside {{0, 1}}"
                    )))
                }
            }
        }
        if c0.is_empty() || c1.is_empty() {
            return Err(Error::EmptyClass);
        }
        Ok((c0, c1))
    }

    /// Evaluates every curve on a grid (spline bases only).
    pub fn eval_on_grid(&self, grid: &[f64]) -> Result<DMatrix<f64>> {
        let phi = self.basis.design_matrix(grid)?;
        Ok(&self.coefficients * phi.transpose())
    }
}

/// Least-squares projection of raw curves onto a spline basis.
///
/// The grid must be sorted ascending and lie inside the basis interval.
/// Fails with [`Error::RankDeficientDesign`] when the design Gram matrix is
/// singular at a relative tolerance of 1e-12 (e.g. fewer distinct grid
/// points than basis functions).
pub fn fit_curves(
    basis: &Arc<FunctionalBasis>,
    curves: &RawCurves,
    labels: Option<Vec<u8>>,
) -> Result<FDataSet> {
    let (a, b) = basis
        .interval()
        .ok_or_else(|| Error::InvalidBasisSpec("coordinate basis cannot fit raw curves".into()))?;
    let grid = &curves.grid;
    if grid.len() != curves.values.ncols() {
        return Err(Error::Parse(format!(
            "grid has {} points but curves have {} columns",
            grid.len(),
            curves.values.ncols()
        )));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidBasisSpec("grid must be sorted ascending".into()));
    }
    if grid.iter().any(|&x| x < a || x > b) {
        return Err(Error::InvalidBasisSpec(
            "grid point outside the basis interval".into(),
        ));
    }
    if let Some(ref l) = labels {
        if l.len() != curves.values.nrows() {
            return Err(Error::Parse(format!(
                "{} labels for {} curves",
                l.len(),
                curves.values.nrows()
            )));
        }
    }
    let phi = basis.design_matrix(grid)?;
    let xtx = phi.transpose() * &phi;
    let eig = specmat::sym_eigen(&xtx)?;
    let max = eig.values[0];
    let min = eig.values[eig.values.len() - 1];
    if !(max > 0.0) || min <= DESIGN_TOL * max {
        return Err(Error::RankDeficientDesign { tol: DESIGN_TOL });
    }
    let chol = xtx
        .clone()
        .cholesky()
        .ok_or(Error::RankDeficientDesign { tol: DESIGN_TOL })?;
    // A^T = (Phi^T Phi)^{-1} Phi^T Y^T, one solve for all curves.
    let rhs = phi.transpose() * curves.values.transpose();
    let at = chol.solve(&rhs);
    Ok(FDataSet {
        basis: Arc::clone(basis),
        coefficients: at.transpose(),
        labels,
        center: None,
    })
}

/// Subtracts pooled or per-class mean coefficients and records the shift.
///
/// Centering an already centered dataset subtracts the (near-zero) residual
/// means and composes the records, so the operation is idempotent up to
/// floating-point residuals.
pub fn center(ds: &FDataSet, mode: CenterMode) -> Result<FDataSet> {
    let n = ds.n_samples();
    if n == 0 {
        return Err(Error::InsufficientSamples { need: 1, got: 0 });
    }
    let q = ds.basis.dimension();
    let mut coeff = ds.coefficients.clone();
    let record = match mode {
        CenterMode::Pooled => {
            let mean = ds.coefficients.row_mean().transpose();
            for mut row in coeff.row_iter_mut() {
                row -= mean.transpose();
            }
            match &ds.center {
                None => CenterRecord::Pooled(mean),
                Some(CenterRecord::Pooled(c)) => CenterRecord::Pooled(c + &mean),
                Some(CenterRecord::PerGroup(c0, c1)) => {
                    CenterRecord::PerGroup(c0 + &mean, c1 + &mean)
                }
            }
        }
        CenterMode::PerGroup => {
            let (idx0, idx1) = ds.class_indices()?;
            let mut m0 = DVector::zeros(q);
            let mut m1 = DVector::zeros(q);
            for &i in &idx0 {
                m0 += ds.coefficients.row(i).transpose();
            }
            m0 /= idx0.len() as f64;
            for &i in &idx1 {
                m1 += ds.coefficients.row(i).transpose();
            }
            m1 /= idx1.len() as f64;
            for &i in &idx0 {
                let mut row = coeff.row_mut(i);
                row -= m0.transpose();
            }
            for &i in &idx1 {
                let mut row = coeff.row_mut(i);
                row -= m1.transpose();
            }
            match &ds.center {
                None => CenterRecord::PerGroup(m0.clone(), m1.clone()),
                Some(CenterRecord::Pooled(c)) => CenterRecord::PerGroup(c + &m0, c + &m1),
                Some(CenterRecord::PerGroup(c0, c1)) => {
                    CenterRecord::PerGroup(c0 + &m0, c1 + &m1)
                }
            }
        }
    };
    Ok(FDataSet {
        basis: Arc::clone(&ds.basis),
        coefficients: coeff,
        labels: ds.labels.clone(),
        center: Some(record),
    })
}

//! Deterministic simulation harness: squared-exponential Gaussian or
//! shifted-exponential sources on a grid, centroid-classifier replication
//! tables, noise sweeps, and the population Fisher discriminant oracle.
//!
//! Reproducibility contract: a replication's RNG seed depends only on the
//! master seed and the replication index, generation order is fixed, and
//! replication results are aggregated in index order, so tables are
//! bit-identical no matter how the work is scheduled.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::distributions::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::basis::{build_basis, fit_curves, FDataSet, FunctionalBasis, RawCurves};
use crate::classify::{
    cross_validate, error_rate, fit_pipeline, CvCriterion, CvData, CvGrid, FisherOracle,
    PipelineConfig, Selector,
};
use crate::error::{Error, Result};
use crate::specmat;
use crate::whitening::WhiteningMethod;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Eigenvalues of the source covariance below this are treated as zero;
/// the squared-exponential kernel is numerically rank-deficient on a
/// coarse grid.
pub const LAMBDA_CLAMP: f64 = 1e-12;

/// Source distribution of the component scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Standard normal scores.
    Gaussian,
    /// Centered unit-rate exponential scores (right-skewed).
    ExpShifted,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Gaussian => "gaussian",
            Scenario::ExpShifted => "exp_shifted",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "1" | "I" => Ok(Scenario::Gaussian),
            "exp_shifted" | "2" | "II" => Ok(Scenario::ExpShifted),
            other => Err(Error::InvalidConfig(format!(
                "unknown scenario '{other}' (expected gaussian or exp_shifted)"
            ))),
        }
    }
}

/// Full description of one simulation experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Mean-function pair: 1 (zero vs cosine), 2 (amplitude difference),
    /// 3 (phase difference).
    pub example: u8,
    pub scenario: Scenario,
    /// Training curves per class.
    pub n_k: usize,
    /// Held-out evaluation curves per class.
    pub test_n_k: usize,
    pub grid_points: usize,
    pub t_min: f64,
    pub t_max: f64,
    /// Length scale of the squared-exponential covariance.
    pub length_scale: f64,
    /// Observation noise standard deviation.
    pub sigma: f64,
    pub replications: usize,
    pub seed: u64,
    /// Spline dimension of the fitted expansion.
    pub q: usize,
    pub order: usize,
    pub penalty_order: usize,
    /// Smoothing candidates for the cross-validated SICq rows.
    pub theta_grid: Vec<f64>,
    pub methods: Vec<WhiteningMethod>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            example: 1,
            scenario: Scenario::Gaussian,
            n_k: 50,
            test_n_k: 500,
            grid_points: 20,
            t_min: 1.0,
            t_max: 20.0,
            length_scale: 15.0,
            sigma: 0.0,
            replications: 100,
            seed: 42,
            q: 5,
            order: 4,
            penalty_order: 2,
            theta_grid: vec![0.0, 1e2, 1e4],
            methods: WhiteningMethod::ALL.to_vec(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.example) {
            return Err(Error::InvalidConfig(format!(
                "example must be 1, 2 or 3, got {}",
                self.example
            )));
        }
        if self.n_k == 0 || self.test_n_k == 0 {
            return Err(Error::InvalidConfig("sample sizes must be positive".into()));
        }
        if 2 * self.n_k < self.q + 1 {
            return Err(Error::InvalidConfig(format!(
                "2 n_k = {} training curves cannot whiten a dimension-{} expansion",
                2 * self.n_k,
                self.q
            )));
        }
        if self.grid_points < 2 || !(self.t_min < self.t_max) {
            return Err(Error::InvalidConfig("degenerate observation grid".into()));
        }
        if !(self.length_scale > 0.0) {
            return Err(Error::InvalidConfig("length scale must be positive".into()));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidConfig("noise level must be finite and >= 0".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("need at least one replication".into()));
        }
        if self.q < self.order {
            return Err(Error::InvalidConfig(format!(
                "dimension {} below the spline order {}",
                self.q, self.order
            )));
        }
        if self.penalty_order >= self.order {
            return Err(Error::InvalidConfig(format!(
                "penalty order {} must stay below the spline order {}",
                self.penalty_order, self.order
            )));
        }
        if self.theta_grid.is_empty() || self.theta_grid.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidConfig(
                "smoothing grid must be nonempty and nonnegative".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("need at least one whitening method".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let m = self.grid_points;
        (0..m)
            .map(|i| self.t_min + (self.t_max - self.t_min) * i as f64 / (m - 1) as f64)
            .collect()
    }
}

/// Precomputed population quantities shared by every replication.
#[derive(Debug, Clone)]
pub struct SimTruth {
    pub grid: Vec<f64>,
    /// Square roots of the retained covariance eigenvalues, descending.
    pub sqrt_lambdas: Vec<f64>,
    /// Matching eigenvectors as columns (grid space).
    pub gammas: DMatrix<f64>,
    /// Class mean functions on the grid.
    pub mu: [DVector<f64>; 2],
    /// The source covariance matrix itself.
    pub sigma_matrix: DMatrix<f64>,
    pub basis: Arc<FunctionalBasis>,
}

/// Class mean functions of the three experiment families.
fn mean_functions(example: u8, t: f64, period: f64) -> (f64, f64) {
    let phase = 3.0 * std::f64::consts::PI * t / period;
    match example {
        1 => (0.0, 0.2 * phase.cos()),
        2 => (0.3 * phase.cos(), 0.2 * phase.cos()),
        3 => (0.2 * phase.sin(), 0.2 * phase.cos()),
        _ => unreachable!("validated example index"),
    }
}

/// Builds the population truth for a configuration: covariance eigensystem
/// (rank-clamped), mean functions and the spline basis.
pub fn sim_truth(config: &SimConfig) -> Result<SimTruth> {
    config.validate()?;
    let grid = config.grid();
    let m = grid.len();
    let ell2 = 2.0 * config.length_scale * config.length_scale;
    let sigma_matrix = DMatrix::from_fn(m, m, |i, j| {
        let d = grid[i] - grid[j];
        (-d * d / ell2).exp()
    });
    let eig = specmat::sym_eigen(&sigma_matrix)?;
    let kept: Vec<usize> = (0..m).filter(|&j| eig.values[j] > LAMBDA_CLAMP).collect();
    let sqrt_lambdas: Vec<f64> = kept.iter().map(|&j| eig.values[j].sqrt()).collect();
    let gammas = DMatrix::from_fn(m, kept.len(), |r, c| eig.vectors[(r, kept[c])]);
    let mut mu0 = DVector::zeros(m);
    let mut mu1 = DVector::zeros(m);
    for (j, &t) in grid.iter().enumerate() {
        let (a, b) = mean_functions(config.example, t, config.t_max);
        mu0[j] = a;
        mu1[j] = b;
    }
    let basis = build_basis(
        (config.t_min, config.t_max),
        config.order,
        config.q,
        config.penalty_order,
    )?;
    Ok(SimTruth {
        grid,
        sqrt_lambdas,
        gammas,
        mu: [mu0, mu1],
        sigma_matrix,
        basis,
    })
}

/// 64-bit finalizer used to derive per-replication seeds.
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58476D1CE4E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D049BB133111EB);
    z ^= z >> 31;
    z
}

/// Seed of replication `rep` under a master seed.
pub fn replication_seed(master: u64, rep: usize) -> u64 {
    mix64(master.wrapping_add((rep as u64 + 1).wrapping_mul(0x9E3779B97F4A7C15)))
}

fn draw_score(rng: &mut ChaCha8Rng, scenario: Scenario) -> f64 {
    match scenario {
        Scenario::Gaussian => StandardNormal.sample(rng),
        Scenario::ExpShifted => {
            let e: f64 = Exp1.sample(rng);
            e - 1.0
        }
    }
}

/// Draws one block of curves for a class. Noise deviates are always drawn
/// and then scaled, so different noise levels share the same score draws.
fn draw_block(
    rng: &mut ChaCha8Rng,
    truth: &SimTruth,
    scenario: Scenario,
    class: usize,
    count: usize,
    sigma: f64,
    values: &mut DMatrix<f64>,
    row_offset: usize,
) {
    let m = truth.grid.len();
    let k = truth.sqrt_lambdas.len();
    for i in 0..count {
        let row = row_offset + i;
        let mut z = Vec::with_capacity(k);
        for _ in 0..k {
            z.push(draw_score(rng, scenario));
        }
        for j in 0..m {
            let mut x = truth.mu[class][j];
            for (c, &zc) in z.iter().enumerate() {
                x += truth.sqrt_lambdas[c] * zc * truth.gammas[(j, c)];
            }
            values[(row, j)] = x;
        }
        for j in 0..m {
            let eps: f64 = StandardNormal.sample(rng);
            values[(row, j)] += sigma * eps;
        }
    }
}

/// Raw train/test draw of one replication with class-specific noise
/// levels. Row order is fixed: class-0 train, class-1 train, class-0
/// test, class-1 test.
pub fn generate_raw_heteroscedastic(
    config: &SimConfig,
    truth: &SimTruth,
    rep: usize,
    sigma: (f64, f64),
) -> (RawCurves, Vec<u8>, RawCurves, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(replication_seed(config.seed, rep));
    let m = truth.grid.len();
    let n_train = 2 * config.n_k;
    let n_test = 2 * config.test_n_k;
    let mut train = DMatrix::zeros(n_train, m);
    let mut test = DMatrix::zeros(n_test, m);
    draw_block(&mut rng, truth, config.scenario, 0, config.n_k, sigma.0, &mut train, 0);
    draw_block(&mut rng, truth, config.scenario, 1, config.n_k, sigma.1, &mut train, config.n_k);
    draw_block(&mut rng, truth, config.scenario, 0, config.test_n_k, sigma.0, &mut test, 0);
    draw_block(&mut rng, truth, config.scenario, 1, config.test_n_k, sigma.1, &mut test, config.test_n_k);
    let labels = |n_k: usize| -> Vec<u8> {
        (0..2 * n_k).map(|i| (i >= n_k) as u8).collect()
    };
    (
        RawCurves { grid: truth.grid.clone(), values: train },
        labels(config.n_k),
        RawCurves { grid: truth.grid.clone(), values: test },
        labels(config.test_n_k),
    )
}

/// Raw train/test draw with the configured common noise level.
pub fn generate_raw(
    config: &SimConfig,
    truth: &SimTruth,
    rep: usize,
) -> (RawCurves, Vec<u8>, RawCurves, Vec<u8>) {
    generate_raw_heteroscedastic(config, truth, rep, (config.sigma, config.sigma))
}

/// One replication's train and test sets, fitted to the spline basis.
pub fn generate(config: &SimConfig, truth: &SimTruth, rep: usize) -> Result<(FDataSet, FDataSet)> {
    let (train_raw, train_labels, test_raw, test_labels) = generate_raw(config, truth, rep);
    let train = fit_curves(&truth.basis, &train_raw, Some(train_labels))?;
    let test = fit_curves(&truth.basis, &test_raw, Some(test_labels))?;
    Ok((train, test))
}

/// One line of an error table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub selector: Selector,
    pub method: Option<WhiteningMethod>,
    /// "-" for covariance selectors, "0" for the plain kurtosis solve,
    /// "cv" when the smoothing level is cross-validated per replication.
    pub theta_policy: &'static str,
    /// Mean test error over successful replications, percent.
    pub mean_pct: f64,
    /// Sample standard deviation of the errors, percent.
    pub sd_pct: f64,
    /// Successful replications aggregated into the row.
    pub count: usize,
    pub failures: usize,
}

/// Replicated classification errors for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    pub example: u8,
    pub scenario: Scenario,
    pub n_k: usize,
    pub sigma: f64,
    pub rows: Vec<TableRow>,
}

/// Row layout of a table: the two covariance selectors, then ICq per
/// whitening method, then SICq per whitening method.
fn row_plan(methods: &[WhiteningMethod]) -> Vec<(Selector, Option<WhiteningMethod>, &'static str)> {
    let mut plan = vec![(Selector::Pc1, None, "-"), (Selector::Pcm, None, "-")];
    for &m in methods {
        plan.push((Selector::Icq, Some(m), "0"));
    }
    for &m in methods {
        plan.push((Selector::Sicq, Some(m), "cv"));
    }
    plan
}

/// Test errors of every planned row for one replication; individual rows
/// may fail (for example a near-singular whitening) independently.
fn replication_errors(
    config: &SimConfig,
    truth: &SimTruth,
    rep: usize,
    plan: &[(Selector, Option<WhiteningMethod>, &'static str)],
) -> Vec<Option<f64>> {
    let generated = generate(config, truth, rep);
    let (train, test) = match generated {
        Ok(pair) => pair,
        Err(_) => return vec![None; plan.len()],
    };
    plan.iter()
        .map(|&(selector, method, policy)| {
            let method = method.unwrap_or(WhiteningMethod::Zca);
            let theta = match policy {
                "cv" => {
                    let grid = CvGrid {
                        methods: vec![method],
                        thetas: config.theta_grid.clone(),
                        qs: vec![config.q],
                    };
                    match cross_validate(&CvData::Fitted(&train), &grid, CvCriterion::MinKurtosis)
                    {
                        Ok(report) => report.best.theta,
                        Err(_) => return None,
                    }
                }
                _ => 0.0,
            };
            let cfg = PipelineConfig {
                selector,
                method,
                theta,
                reduce_p: None,
                tol: None,
            };
            let fit = fit_pipeline(&train, &cfg).ok()?;
            error_rate(&fit.model, &test).ok().map(|e| 100.0 * e)
        })
        .collect()
}

fn aggregate(
    config: &SimConfig,
    plan: Vec<(Selector, Option<WhiteningMethod>, &'static str)>,
    per_rep: Vec<Vec<Option<f64>>>,
) -> ErrorTable {
    let rows = plan
        .into_iter()
        .enumerate()
        .map(|(r, (selector, method, theta_policy))| {
            let values: Vec<f64> = per_rep.iter().filter_map(|rep| rep[r]).collect();
            let count = values.len();
            let failures = per_rep.len() - count;
            let mean = if count > 0 {
                values.iter().sum::<f64>() / count as f64
            } else {
                f64::NAN
            };
            let sd = if count > 1 {
                let ss = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
                (ss / (count - 1) as f64).sqrt()
            } else {
                0.0
            };
            TableRow {
                selector,
                method,
                theta_policy,
                mean_pct: mean,
                sd_pct: sd,
                count,
                failures,
            }
        })
        .collect();
    ErrorTable {
        example: config.example,
        scenario: config.scenario,
        n_k: config.n_k,
        sigma: config.sigma,
        rows,
    }
}

/// Runs every replication sequentially and aggregates the error table.
pub fn run_table_sequential(config: &SimConfig) -> Result<ErrorTable> {
    let truth = sim_truth(config)?;
    let plan = row_plan(&config.methods);
    let per_rep: Vec<Vec<Option<f64>>> = (0..config.replications)
        .map(|rep| replication_errors(config, &truth, rep, &plan))
        .collect();
    Ok(aggregate(config, plan, per_rep))
}

/// Runs the replication table, spreading replications across threads when
/// the `parallel` feature is enabled. Results are identical to the
/// sequential runner bit for bit.
pub fn run_table(config: &SimConfig) -> Result<ErrorTable> {
    #[cfg(feature = "parallel")]
    {
        let truth = sim_truth(config)?;
        let plan = row_plan(&config.methods);
        let per_rep: Vec<Vec<Option<f64>>> = (0..config.replications)
            .into_par_iter()
            .map(|rep| replication_errors(config, &truth, rep, &plan))
            .collect();
        Ok(aggregate(config, plan, per_rep))
    }
    #[cfg(not(feature = "parallel"))]
    run_table_sequential(config)
}

/// Replication tables across noise levels, ZCA whitening only.
pub fn noise_sweep(config: &SimConfig, sigmas: &[f64]) -> Result<Vec<(f64, ErrorTable)>> {
    if sigmas.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::InvalidConfig("noise levels must be >= 0".into()));
    }
    let mut out = Vec::with_capacity(sigmas.len());
    for &sigma in sigmas {
        let cfg = SimConfig {
            sigma,
            methods: vec![WhiteningMethod::Zca],
            ..config.clone()
        };
        out.push((sigma, run_table(&cfg)?));
    }
    Ok(out)
}

/// Truncated Fisher discriminant on the grid: projections of the mean
/// difference on the leading eigenvectors and the direction
/// `sum_j v_j gamma_j / lambda_j` over the first `keep` components.
pub fn discriminant_on_grid(
    lambdas: &[f64],
    gammas: &DMatrix<f64>,
    mu_delta: &DVector<f64>,
    keep: usize,
) -> (Vec<f64>, DVector<f64>) {
    let mut v = Vec::with_capacity(keep);
    let mut phi = DVector::zeros(mu_delta.len());
    for j in 0..keep {
        let gamma = gammas.column(j);
        let vj = gamma.dot(mu_delta);
        phi += gamma * (vj / lambdas[j]);
        v.push(vj);
    }
    (v, phi)
}

/// Population Fisher discriminant of a configuration, truncated at the
/// configured dimension and projected into the spline basis.
pub fn fisher_oracle(config: &SimConfig) -> Result<FisherOracle> {
    let truth = sim_truth(config)?;
    let m = truth.grid.len();
    let mu_delta = &truth.mu[0] - &truth.mu[1];
    let keep = truth.sqrt_lambdas.len().min(config.q);
    let lambdas: Vec<f64> = truth.sqrt_lambdas[..keep]
        .iter()
        .map(|s| s * s)
        .collect();
    let (v, phi_grid) = discriminant_on_grid(&lambdas, &truth.gammas, &mu_delta, keep);
    // least-squares projection of the grid function into the basis
    let one_row = RawCurves {
        grid: truth.grid.clone(),
        values: DMatrix::from_row_iterator(1, m, phi_grid.iter().copied()),
    };
    let projected = fit_curves(&truth.basis, &one_row, None)?;
    Ok(FisherOracle {
        lambdas,
        gammas: truth.gammas.columns(0, keep).into_owned(),
        v,
        phi_grid,
        phi_coeffs: projected.coefficients.row(0).transpose(),
    })
}

//! The five subcommand implementations.
//!
//! Every command computes all of its outputs in memory first and only then
//! creates the output directory, so a failing run leaves no partial files.
//! Exit-code mapping is done per call site: errors while reading or
//! fitting input files are data errors (4), errors from flag-derived
//! configuration are config errors (2), and the remaining numerical
//! failures map through [`compute_err`] (rank and sample-size problems to
//! 4, everything else to 3).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use fkica::basis::{center, fit_curves, CenterMode, FunctionalBasis, RawCurves};
use fkica::classify::{
    error_rate, fit_pipeline, loo_error, predict, projection_scores, PipelineConfig, Selector,
};
use fkica::error::Error;
use fkica::io as fio;
use fkica::kurtosis::{scores, solve_penalized};
use fkica::picard::{picard_series, select_q};
use fkica::simlab::{noise_sweep, run_table, run_table_sequential, SimConfig};
use fkica::specmat::hs_distance_to_identity;
use fkica::whitening::{apply_whitening, fit_whitening, whitened_covariance, WhiteningMethod};

use crate::manifest::write_manifest;
use crate::CliError;

pub fn config_err(e: Error) -> CliError {
    CliError::new(2, e.to_string())
}

pub fn data_err(e: Error) -> CliError {
    CliError::new(4, e.to_string())
}

/// Maps numerical failures: rank and sample-size defects are data
/// problems, configuration defects keep exit 2, the rest is numerical.
pub fn compute_err(e: Error) -> CliError {
    let code = match &e {
        Error::InvalidConfig(_) => 2,
        Error::Io(_)
        | Error::Parse(_)
        | Error::NearSingular(_)
        | Error::RankDeficientDesign { .. }
        | Error::InsufficientSamples { .. }
        | Error::EmptyClass
        | Error::MissingLabels
        | Error::RankTooHigh { .. }
        | Error::BasisMismatch
        | Error::CenteringMismatch(_) => 4,
        _ => 3,
    };
    CliError::new(code, e.to_string())
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::write(dir.join(name), contents)
        .map_err(|e| CliError::new(3, format!("writing {name}: {e}")))
}

fn create_out_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::new(3, format!("creating {}: {e}", dir.display())))
}

/// Applies `--threads`: 1 forces the sequential path, larger values size
/// the global worker pool. Returns whether the parallel table runner
/// should be used.
pub fn init_threads(threads: Option<usize>) -> Result<bool, CliError> {
    match threads {
        None => Ok(cfg!(feature = "parallel")),
        Some(0) => Err(CliError::new(2, "--threads must be at least 1".into())),
        Some(1) => {
            #[cfg(feature = "parallel")]
            {
                // Internal helpers still go through rayon; one worker makes
                // their schedule sequential as well.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
            }
            Ok(false)
        }
        Some(n) => {
            #[cfg(feature = "parallel")]
            {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
                Ok(true)
            }
            #[cfg(not(feature = "parallel"))]
            {
                eprintln!(
                    "note: built without the parallel feature; --threads {n} runs sequentially"
                );
                Ok(false)
            }
        }
    }
}

/// Resolves the master seed: the FKICA_SEED environment variable wins
/// over the config file.
fn resolve_seed(cfg: &mut SimConfig) -> Result<(), CliError> {
    match std::env::var("FKICA_SEED") {
        Ok(v) => {
            let seed = v.trim().parse::<u64>().map_err(|_| {
                CliError::new(2, format!("FKICA_SEED '{v}' is not an unsigned integer"))
            })?;
            cfg.seed = seed;
            Ok(())
        }
        Err(std::env::VarError::NotPresent) => Ok(()),
        Err(e) => Err(CliError::new(2, format!("FKICA_SEED: {e}"))),
    }
}

fn print_table(table: &fkica::simlab::ErrorTable) {
    println!(
        "example {} / {} / n_k = {} / sigma = {}",
        table.example,
        table.scenario.name(),
        table.n_k,
        table.sigma
    );
    for r in &table.rows {
        println!(
            "  {:>4} {:>8} theta={:<2} {:7.3} ({:.3})  reps={} failed={}",
            r.selector.label(),
            r.method.map(|m| m.name()).unwrap_or("-"),
            r.theta_policy,
            r.mean_pct,
            r.sd_pct,
            r.count,
            r.failures
        );
    }
}

fn warn_failures(table: &fkica::simlab::ErrorTable) {
    for r in &table.rows {
        if r.failures > 0 {
            eprintln!(
                "warning: {} {} skipped {} failed replication(s)",
                r.selector.label(),
                r.method.map(|m| m.name()).unwrap_or("-"),
                r.failures
            );
        }
    }
}

pub fn cmd_simulate(
    config_path: &Path,
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<(), CliError> {
    let parallel = init_threads(threads)?;
    let mut cfg = fio::read_sim_config(config_path).map_err(config_err)?;
    resolve_seed(&mut cfg)?;
    let table = if parallel {
        run_table(&cfg)
    } else {
        run_table_sequential(&cfg)
    }
    .map_err(|e| CliError::new(3, e.to_string()))?;
    create_out_dir(out_dir)?;
    write_out(out_dir, "table.csv", &fio::table_csv_string(&table))?;
    write_manifest(
        out_dir,
        "simulate",
        Some(cfg.seed),
        &fio::sim_config_to_string(&cfg),
        &[("config", config_path)],
    )?;
    warn_failures(&table);
    print_table(&table);
    println!("wrote {}", out_dir.join("table.csv").display());
    Ok(())
}

pub fn cmd_noise_sweep(
    config_path: &Path,
    sigmas: &[f64],
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<(), CliError> {
    init_threads(threads)?;
    let mut cfg = fio::read_sim_config(config_path).map_err(config_err)?;
    resolve_seed(&mut cfg)?;
    let sweep = noise_sweep(&cfg, sigmas).map_err(|e| match e {
        Error::InvalidConfig(_) => config_err(e),
        other => CliError::new(3, other.to_string()),
    })?;
    create_out_dir(out_dir)?;
    write_out(out_dir, "sweep.csv", &fio::noise_sweep_csv_string(&sweep))?;
    let mut config_block = fio::sim_config_to_string(&cfg);
    let _ = writeln!(
        config_block,
        "sigmas = {}",
        sigmas.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
    );
    write_manifest(
        out_dir,
        "noise-sweep",
        Some(cfg.seed),
        &config_block,
        &[("config", config_path)],
    )?;
    for (_, table) in &sweep {
        warn_failures(table);
        print_table(table);
    }
    println!("wrote {}", out_dir.join("sweep.csv").display());
    Ok(())
}

/// Shared flag set for the single-dataset commands.
pub struct FitFlags {
    pub q: usize,
    pub order: usize,
    pub penalty_order: usize,
    pub theta: f64,
    pub whitening: WhiteningMethod,
    pub selector: Selector,
    pub reduce_p: Option<usize>,
}

fn load_curves(
    curves_path: &Path,
    labels_path: Option<&Path>,
) -> Result<(RawCurves, Vec<String>, Option<Vec<u8>>), CliError> {
    let (raw, ids) = fio::read_curves_csv(curves_path).map_err(data_err)?;
    let labels = labels_path
        .map(|p| -> Result<Vec<u8>, CliError> {
            let pairs = fio::read_labels_csv(p).map_err(data_err)?;
            fio::align_labels(&ids, &pairs).map_err(data_err)
        })
        .transpose()?;
    Ok((raw, ids, labels))
}

fn basis_for(raw: &RawCurves, flags: &FitFlags) -> Result<Arc<FunctionalBasis>, CliError> {
    let (lo, hi) = match (raw.grid.first(), raw.grid.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => return Err(CliError::new(4, "curves file has an empty grid".into())),
    };
    fkica::basis::build_basis((lo, hi), flags.order, flags.q, flags.penalty_order)
        .map_err(config_err)
}

fn flags_block(flags: &FitFlags, curves: &Path, labels: Option<&Path>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "curves = {}", curves.display());
    let _ = writeln!(
        out,
        "labels = {}",
        labels.map(|p| p.display().to_string()).unwrap_or_else(|| "-".into())
    );
    let _ = writeln!(out, "q = {}", flags.q);
    let _ = writeln!(out, "order = {}", flags.order);
    let _ = writeln!(out, "penalty_order = {}", flags.penalty_order);
    let _ = writeln!(out, "theta = {}", flags.theta);
    let _ = writeln!(out, "whitening = {}", flags.whitening.name());
    let _ = writeln!(out, "selector = {}", flags.selector.name());
    let _ = writeln!(
        out,
        "reduce_p = {}",
        flags.reduce_p.map(|p| p.to_string()).unwrap_or_else(|| "-".into())
    );
    out
}

pub fn cmd_fica(
    curves_path: &Path,
    labels_path: Option<&Path>,
    out_dir: &Path,
    flags: &FitFlags,
    threads: Option<usize>,
) -> Result<(), CliError> {
    init_threads(threads)?;
    let (raw, ids, labels) = load_curves(curves_path, labels_path)?;
    let basis = basis_for(&raw, flags)?;
    let ds = fit_curves(&basis, &raw, labels.clone()).map_err(data_err)?;
    let centered = center(&ds, CenterMode::Pooled).map_err(compute_err)?;

    let wm = fit_whitening(&centered, flags.whitening, None).map_err(compute_err)?;
    let white = apply_whitening(&wm, &centered).map_err(compute_err)?;
    let hs = hs_distance_to_identity(&whitened_covariance(&white));
    let km = solve_penalized(&white, flags.theta).map_err(compute_err)?;
    let ic = scores(&km, &white).map_err(compute_err)?;
    let scores_csv = fio::scores_csv_string(&ids, &ic.xi).map_err(compute_err)?;
    let diagnostics_csv = fio::diagnostics_csv_string(&km.kappa, &km.normalized);
    let report = picard_series(&centered).map_err(compute_err)?;
    let picard_csv = fio::picard_csv_string(&report);

    // A labeled corpus additionally yields a trained centroid direction.
    let model_and_loo = labels
        .is_some()
        .then(|| -> Result<(String, f64), CliError> {
            let pc = PipelineConfig {
                selector: flags.selector,
                method: flags.whitening,
                theta: flags.theta,
                reduce_p: flags.reduce_p,
                tol: None,
            };
            let fit = fit_pipeline(&ds, &pc).map_err(compute_err)?;
            let loo = loo_error(&ds, &pc).map_err(compute_err)?;
            let text = fio::model_to_string(&fit.model).map_err(compute_err)?;
            Ok((text, loo))
        })
        .transpose()?;

    create_out_dir(out_dir)?;
    write_out(out_dir, "scores.csv", &scores_csv)?;
    write_out(out_dir, "diagnostics.csv", &diagnostics_csv)?;
    write_out(out_dir, "picard.csv", &picard_csv)?;
    if let Some((model_text, _)) = &model_and_loo {
        write_out(out_dir, "model.txt", model_text)?;
    }
    let inputs: Vec<(&str, &Path)> = std::iter::once(("curves", curves_path))
        .chain(labels_path.map(|p| ("labels", p)))
        .collect();
    write_manifest(
        out_dir,
        "fica",
        None,
        &flags_block(flags, curves_path, labels_path),
        &inputs,
    )?;

    println!("whitening check: hs_distance = {hs:.3e} (tolerance 1e-8)");
    println!(
        "last component: kappa = {:.6}, normalized = {:.6}",
        km.kappa[km.kappa.len() - 1],
        km.normalized[km.normalized.len() - 1]
    );
    if let Some((_, loo)) = &model_and_loo {
        println!("loo error = {:.4}%", 100.0 * loo);
    }
    println!("wrote {}", out_dir.display());
    Ok(())
}

pub struct ClassifySources<'a> {
    pub train_curves: Option<&'a Path>,
    pub train_labels: Option<&'a Path>,
    pub model: Option<&'a Path>,
    pub test_curves: &'a Path,
    pub test_labels: Option<&'a Path>,
}

pub fn cmd_classify(
    src: &ClassifySources<'_>,
    out_dir: &Path,
    flags: &FitFlags,
    threads: Option<usize>,
) -> Result<(), CliError> {
    init_threads(threads)?;
    let model = match (src.model, src.train_curves) {
        (Some(model_path), None) => fio::read_model(model_path).map_err(data_err)?,
        (None, Some(train_path)) => {
            let labels_path = src.train_labels.ok_or_else(|| {
                CliError::new(2, "training requires --train-labels".into())
            })?;
            let (raw, _, labels) = load_curves(train_path, Some(labels_path))?;
            let basis = basis_for(&raw, flags)?;
            let ds = fit_curves(&basis, &raw, labels).map_err(data_err)?;
            let pc = PipelineConfig {
                selector: flags.selector,
                method: flags.whitening,
                theta: flags.theta,
                reduce_p: flags.reduce_p,
                tol: None,
            };
            fit_pipeline(&ds, &pc).map_err(compute_err)?.model
        }
        (Some(_), Some(_)) => {
            return Err(CliError::new(
                2,
                "--model and --train-curves are mutually exclusive".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::new(
                2,
                "either --model or --train-curves/--train-labels is required".into(),
            ))
        }
    };

    let (test_raw, test_ids, test_labels) = load_curves(src.test_curves, src.test_labels)?;
    let mut test_ds = fit_curves(&model.basis, &test_raw, None).map_err(data_err)?;
    let predictions = predict(&model, &test_ds).map_err(compute_err)?;
    let proj = projection_scores(&model, &test_ds).map_err(compute_err)?;
    let test_error = test_labels
        .map(|labels| -> Result<f64, CliError> {
            test_ds.labels = Some(labels);
            error_rate(&model, &test_ds).map_err(compute_err)
        })
        .transpose()?;

    let mut predictions_csv = String::from("id,predicted,score\n");
    for (i, id) in test_ids.iter().enumerate() {
        let _ = writeln!(predictions_csv, "{id},{},{}", predictions[i], proj[i]);
    }
    let model_text = fio::model_to_string(&model).map_err(compute_err)?;

    create_out_dir(out_dir)?;
    write_out(out_dir, "predictions.csv", &predictions_csv)?;
    write_out(out_dir, "model.txt", &model_text)?;
    let mut config_block = flags_block(flags, src.test_curves, src.test_labels);
    let _ = writeln!(
        config_block,
        "mode = {}",
        if src.model.is_some() { "model" } else { "train" }
    );
    let mut inputs: Vec<(&str, &Path)> = Vec::new();
    if let Some(p) = src.train_curves {
        inputs.push(("train_curves", p));
    }
    if let Some(p) = src.train_labels {
        inputs.push(("train_labels", p));
    }
    if let Some(p) = src.model {
        inputs.push(("model", p));
    }
    inputs.push(("test_curves", src.test_curves));
    if let Some(p) = src.test_labels {
        inputs.push(("test_labels", p));
    }
    write_manifest(out_dir, "classify", None, &config_block, &inputs)?;

    if let Some(err) = test_error {
        println!("test error = {:.4}%", 100.0 * err);
    }
    println!("wrote {}", out_dir.join("predictions.csv").display());
    Ok(())
}

pub fn cmd_picard(
    curves_path: &Path,
    labels_path: Option<&Path>,
    out_dir: &Path,
    q: usize,
    order: usize,
    penalty_order: usize,
    epsilon: f64,
    delta: usize,
) -> Result<(), CliError> {
    let (raw, _, labels) = load_curves(curves_path, labels_path)?;
    let flags = FitFlags {
        q,
        order,
        penalty_order,
        theta: 0.0,
        whitening: WhiteningMethod::Zca,
        selector: Selector::Icq,
        reduce_p: None,
    };
    let basis = basis_for(&raw, &flags)?;
    let ds = fit_curves(&basis, &raw, labels).map_err(data_err)?;
    let centered = center(&ds, CenterMode::Pooled).map_err(compute_err)?;
    let report = picard_series(&centered).map_err(compute_err)?;
    let (q_sel, band_found) = select_q(&report, Some(epsilon), Some(delta));

    create_out_dir(out_dir)?;
    write_out(out_dir, "picard.csv", &fio::picard_csv_string(&report))?;
    let mut config_block = String::new();
    let _ = writeln!(config_block, "curves = {}", curves_path.display());
    let _ = writeln!(config_block, "q = {q}");
    let _ = writeln!(config_block, "order = {order}");
    let _ = writeln!(config_block, "penalty_order = {penalty_order}");
    let _ = writeln!(config_block, "epsilon = {epsilon}");
    let _ = writeln!(config_block, "delta = {delta}");
    let inputs: Vec<(&str, &Path)> = std::iter::once(("curves", curves_path))
        .chain(labels_path.map(|p| ("labels", p)))
        .collect();
    write_manifest(out_dir, "picard", None, &config_block, &inputs)?;

    println!(
        "selected q = {q_sel}{}",
        if band_found { "" } else { " (no flat band; fallback n - 1)" }
    );
    println!("wrote {}", out_dir.join("picard.csv").display());
    Ok(())
}

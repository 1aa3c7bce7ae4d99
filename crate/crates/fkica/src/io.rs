//! Plain-text file formats: curve and label CSV, report CSV emitters, the
//! flat centroid-model format and key-value simulation configs.
//!
//! Everything is line-oriented UTF-8. Floats are written with Rust's `{}`
//! formatting, which round-trips `f64` exactly, so write -> read -> write
//! is byte-stable and golden files stay diffable.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::basis::{build_basis, FunctionalBasis, RawCurves};
use crate::classify::{CentroidModel, Selector};
use crate::error::{Error, Result};
use crate::picard::PicardReport;
use crate::simlab::{ErrorTable, Scenario, SimConfig};
use crate::whitening::WhiteningMethod;

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        Error::Parse(format!("line {line}: '{}' is not a number", field.trim()))
    })
}

/// Reads curves from CSV: first column is the grid point, one column per
/// curve. A header row (detected by a non-numeric first field) names the
/// curves; without one the curves are named `c1..cn`.
pub fn read_curves_csv(path: &Path) -> Result<(RawCurves, Vec<String>)> {
    let text = fs::read_to_string(path)?;
    parse_curves_csv(&text)
}

/// Parses the curve CSV format from a string. See [`read_curves_csv`].
pub fn parse_curves_csv(text: &str) -> Result<(RawCurves, Vec<String>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();
    let (_, first) = *lines.peek().ok_or_else(|| {
        Error::Parse("curves file is empty".into())
    })?;
    let first_field = first.split(',').next().unwrap_or("");
    let mut ids: Option<Vec<String>> = None;
    if first_field.trim().parse::<f64>().is_err() {
        let header: Vec<&str> = first.split(',').collect();
        if header.len() < 2 {
            return Err(Error::Parse("curves header has no curve columns".into()));
        }
        ids = Some(header[1..].iter().map(|s| s.trim().to_string()).collect());
        lines.next();
    }
    let mut grid = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = ids.as_ref().map(|v| v.len());
    for (idx, line) in lines {
        let n = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 {
            return Err(Error::Parse(format!("line {n}: expected at least 2 columns")));
        }
        let w = fields.len() - 1;
        match width {
            None => width = Some(w),
            Some(expect) if expect != w => {
                return Err(Error::Parse(format!(
                    "line {n}: {w} curve values, expected {expect}"
                )))
            }
            _ => {}
        }
        grid.push(parse_f64(fields[0], n)?);
        let mut row = Vec::with_capacity(w);
        for f in &fields[1..] {
            row.push(parse_f64(f, n)?);
        }
        rows.push(row);
    }
    let width = width.ok_or_else(|| Error::Parse("curves file has no data rows".into()))?;
    let ids = ids.unwrap_or_else(|| (1..=width).map(|i| format!("c{i}")).collect());
    // File layout is points x curves; RawCurves stores curves x points.
    let mut values = DMatrix::zeros(width, grid.len());
    for (j, row) in rows.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            values[(i, j)] = v;
        }
    }
    Ok((RawCurves { grid, values }, ids))
}

/// Writes curves in the format read by [`read_curves_csv`], with a header.
pub fn write_curves_csv(path: &Path, curves: &RawCurves, ids: &[String]) -> Result<()> {
    fs::write(path, curves_csv_string(curves, ids)?)?;
    Ok(())
}

/// Renders the curve CSV format to a string. See [`read_curves_csv`].
pub fn curves_csv_string(curves: &RawCurves, ids: &[String]) -> Result<String> {
    if ids.len() != curves.values.nrows() {
        return Err(Error::Parse(format!(
            "{} ids for {} curves",
            ids.len(),
            curves.values.nrows()
        )));
    }
    if curves.grid.len() != curves.values.ncols() {
        return Err(Error::Parse(format!(
            "grid has {} points but curves have {} columns",
            curves.grid.len(),
            curves.values.ncols()
        )));
    }
    let mut out = String::from("t");
    for id in ids {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (j, t) in curves.grid.iter().enumerate() {
        let _ = write!(out, "{t}");
        for i in 0..curves.values.nrows() {
            let _ = write!(out, ",{}", curves.values[(i, j)]);
        }
        out.push('\n');
    }
    Ok(out)
}

/// Reads `id,label` pairs with labels in {0, 1}. A header row is detected
/// by a non-numeric second field.
pub fn read_labels_csv(path: &Path) -> Result<Vec<(String, u8)>> {
    let text = fs::read_to_string(path)?;
    parse_labels_csv(&text)
}

/// Parses the label CSV format from a string. See [`read_labels_csv`].
pub fn parse_labels_csv(text: &str) -> Result<Vec<(String, u8)>> {
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let n = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(Error::Parse(format!("line {n}: expected 'id,label'")));
        }
        let label = fields[1].trim();
        if pairs.is_empty() && label.parse::<u8>().is_err() {
            continue; // header
        }
        let value = label
            .parse::<u8>()
            .map_err(|_| Error::Parse(format!("line {n}: label '{label}' is not 0 or 1")))?;
        if value > 1 {
            return Err(Error::Parse(format!("line {n}: label {value} is outside {{0, 1}}")));
        }
        pairs.push((fields[0].trim().to_string(), value));
    }
    if pairs.is_empty() {
        return Err(Error::Parse("labels file has no data rows".into()));
    }
    Ok(pairs)
}

/// Renders `id,label` pairs with a header row.
pub fn labels_csv_string(pairs: &[(String, u8)]) -> String {
    let mut out = String::from("id,label\n");
    for (id, l) in pairs {
        let _ = writeln!(out, "{id},{l}");
    }
    out
}

/// Orders labels to match `ids`. Every id must be labeled exactly once.
pub fn align_labels(ids: &[String], pairs: &[(String, u8)]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let mut matches = pairs.iter().filter(|(pid, _)| pid == id);
        let first = matches
            .next()
            .ok_or_else(|| Error::Parse(format!("curve '{id}' has no label")))?;
        if matches.next().is_some() {
            return Err(Error::Parse(format!("curve '{id}' is labeled more than once")));
        }
        out.push(first.1);
    }
    Ok(out)
}

/// Renders an error table as CSV, one row per (selector, whitening) cell.
pub fn table_csv_string(table: &ErrorTable) -> String {
    let mut out =
        String::from("example,scenario,n_k,sigma,selector,whitening,theta,mean_pct,sd_pct,count,failures\n");
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            table.example,
            table.scenario.name(),
            table.n_k,
            table.sigma,
            r.selector.label(),
            r.method.map(|m| m.name()).unwrap_or("-"),
            r.theta_policy,
            r.mean_pct,
            r.sd_pct,
            r.count,
            r.failures
        );
    }
    out
}

/// Renders a noise sweep as one CSV; the `sigma` column distinguishes runs.
pub fn noise_sweep_csv_string(sweep: &[(f64, ErrorTable)]) -> String {
    let mut out =
        String::from("example,scenario,n_k,sigma,selector,whitening,theta,mean_pct,sd_pct,count,failures\n");
    for (_, table) in sweep {
        let body = table_csv_string(table);
        out.push_str(body.split_once('\n').map(|(_, b)| b).unwrap_or(""));
    }
    out
}

/// Renders a Picard report as CSV, one row per component.
pub fn picard_csv_string(report: &PicardReport) -> String {
    let mut out = String::from("component,eigenvalue,mean_abs,mean_sq,log_ratio,partial_rkhs\n");
    for j in 0..report.eigenvalues.len() {
        let partial = report
            .partial_rkhs
            .as_ref()
            .map(|p| p[j].to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            j + 1,
            report.eigenvalues[j],
            report.mean_abs[j],
            report.mean_sq[j],
            report.log_ratio[j],
            partial
        );
    }
    out
}

/// Renders per-curve component scores: `id,ic1..icq`.
pub fn scores_csv_string(ids: &[String], xi: &DMatrix<f64>) -> Result<String> {
    if ids.len() != xi.nrows() {
        return Err(Error::Parse(format!(
            "{} ids for {} score rows",
            ids.len(),
            xi.nrows()
        )));
    }
    let mut out = String::from("id");
    for j in 1..=xi.ncols() {
        let _ = write!(out, ",ic{j}");
    }
    out.push('\n');
    for (i, id) in ids.iter().enumerate() {
        out.push_str(id);
        for j in 0..xi.ncols() {
            let _ = write!(out, ",{}", xi[(i, j)]);
        }
        out.push('\n');
    }
    Ok(out)
}

/// Renders per-component kurtosis diagnostics.
pub fn diagnostics_csv_string(kappa: &DVector<f64>, normalized: &DVector<f64>) -> String {
    let mut out = String::from("component,kappa,normalized\n");
    for j in 0..kappa.len() {
        let _ = writeln!(out, "{},{},{}", j + 1, kappa[j], normalized[j]);
    }
    out
}

const MODEL_FORMAT: &str = "fkica-centroid-v1";

fn vector_line(v: &DVector<f64>) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn parse_vector(value: &str, key: &str) -> Result<DVector<f64>> {
    let entries = value
        .split_whitespace()
        .map(|f| {
            f.parse::<f64>()
                .map_err(|_| Error::Parse(format!("{key}: '{f}' is not a number")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if entries.is_empty() {
        return Err(Error::Parse(format!("{key}: empty vector")));
    }
    Ok(DVector::from_vec(entries))
}

/// Serializes a trained centroid model to the flat `fkica-centroid-v1`
/// text format. The basis is stored as its construction parameters
/// (interval, order, dimension, penalty order) and rebuilt on load through
/// the same code path, so a reloaded model predicts bit-identically.
///
/// Only spline-basis models are serializable; models over derived
/// coordinate spaces have no external meaning.
pub fn model_to_string(model: &CentroidModel) -> Result<String> {
    let (a, b) = model.basis.interval().ok_or_else(|| {
        Error::InvalidConfig("only spline-basis models can be serialized".into())
    })?;
    let mut out = String::new();
    let _ = writeln!(out, "format = {MODEL_FORMAT}");
    let _ = writeln!(out, "selector = {}", model.selector.name());
    if let Some(m) = model.method {
        let _ = writeln!(out, "whitening = {}", m.name());
    }
    let _ = writeln!(out, "theta = {}", model.theta);
    if let Some(p) = model.reduce_p {
        let _ = writeln!(out, "reduce_p = {p}");
    }
    let _ = writeln!(out, "interval = {a} {b}");
    let _ = writeln!(out, "order = {}", model.basis.order());
    let _ = writeln!(out, "n_basis = {}", model.basis.dimension());
    let _ = writeln!(out, "penalty_order = {}", model.basis.penalty_order());
    let _ = writeln!(out, "degenerate = {}", model.degenerate);
    if let Some((m0, m1)) = model.class_means {
        let _ = writeln!(out, "class_means = {m0} {m1}");
    }
    let _ = writeln!(out, "beta = {}", vector_line(&model.beta));
    let _ = writeln!(out, "center = {}", vector_line(&model.center));
    Ok(out)
}

/// Writes a model file. See [`model_to_string`].
pub fn write_model(path: &Path, model: &CentroidModel) -> Result<()> {
    fs::write(path, model_to_string(model)?)?;
    Ok(())
}

/// Reads a model file. See [`model_to_string`].
pub fn read_model(path: &Path) -> Result<CentroidModel> {
    let text = fs::read_to_string(path)?;
    model_from_str(&text)
}

/// Splits `key = value` lines, skipping blanks and `#` comments.
fn key_value_lines(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("line {}: expected 'key = value'", idx + 1))
        })?;
        out.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Parses the flat model format. See [`model_to_string`].
pub fn model_from_str(text: &str) -> Result<CentroidModel> {
    let pairs = key_value_lines(text)?;
    let get = |key: &str| -> Option<&str> {
        pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    };
    let require = |key: &str| -> Result<&str> {
        get(key).ok_or_else(|| Error::Parse(format!("model file is missing '{key}'")))
    };
    let format = require("format")?;
    if format != MODEL_FORMAT {
        return Err(Error::Parse(format!(
            "unsupported model format '{format}' (expected {MODEL_FORMAT})"
        )));
    }
    let selector = Selector::from_str(require("selector")?)?;
    let method = get("whitening")
        .map(WhiteningMethod::from_str)
        .transpose()?;
    let theta = parse_f64(require("theta")?, 0)
        .map_err(|_| Error::Parse("theta is not a number".into()))?;
    let reduce_p = get("reduce_p")
        .map(|v| {
            v.parse::<usize>()
                .map_err(|_| Error::Parse(format!("reduce_p '{v}' is not an integer")))
        })
        .transpose()?;
    let interval = parse_vector(require("interval")?, "interval")?;
    if interval.len() != 2 {
        return Err(Error::Parse("interval must hold exactly two numbers".into()));
    }
    let parse_usize = |key: &str| -> Result<usize> {
        require(key)?
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("{key} is not an integer")))
    };
    let order = parse_usize("order")?;
    let n_basis = parse_usize("n_basis")?;
    let penalty_order = parse_usize("penalty_order")?;
    let degenerate = match require("degenerate")? {
        "true" => true,
        "false" => false,
        other => {
            return Err(Error::Parse(format!(
                "degenerate must be true or false, got '{other}'"
            )))
        }
    };
    let class_means = get("class_means")
        .map(|v| -> Result<(f64, f64)> {
            let pair = parse_vector(v, "class_means")?;
            if pair.len() != 2 {
                return Err(Error::Parse("class_means must hold exactly two numbers".into()));
            }
            Ok((pair[0], pair[1]))
        })
        .transpose()?;
    let beta = parse_vector(require("beta")?, "beta")?;
    let center = parse_vector(require("center")?, "center")?;
    let basis: Arc<FunctionalBasis> =
        build_basis((interval[0], interval[1]), order, n_basis, penalty_order)?;
    if beta.len() != n_basis || center.len() != n_basis {
        return Err(Error::Parse(format!(
            "beta/center length does not match n_basis = {n_basis}"
        )));
    }
    Ok(CentroidModel {
        selector,
        method,
        theta,
        reduce_p,
        beta,
        center,
        class_means,
        degenerate,
        basis,
    })
}

/// Renders a simulation config in the key-value format read by
/// [`sim_config_from_str`]; keys are exactly the config fields.
pub fn sim_config_to_string(cfg: &SimConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "example = {}", cfg.example);
    let _ = writeln!(out, "scenario = {}", cfg.scenario.name());
    let _ = writeln!(out, "n_k = {}", cfg.n_k);
    let _ = writeln!(out, "test_n_k = {}", cfg.test_n_k);
    let _ = writeln!(out, "grid_points = {}", cfg.grid_points);
    let _ = writeln!(out, "t_min = {}", cfg.t_min);
    let _ = writeln!(out, "t_max = {}", cfg.t_max);
    let _ = writeln!(out, "length_scale = {}", cfg.length_scale);
    let _ = writeln!(out, "sigma = {}", cfg.sigma);
    let _ = writeln!(out, "replications = {}", cfg.replications);
    let _ = writeln!(out, "seed = {}", cfg.seed);
    let _ = writeln!(out, "q = {}", cfg.q);
    let _ = writeln!(out, "order = {}", cfg.order);
    let _ = writeln!(out, "penalty_order = {}", cfg.penalty_order);
    let _ = writeln!(
        out,
        "theta_grid = {}",
        cfg.theta_grid
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    let _ = writeln!(
        out,
        "methods = {}",
        cfg.methods
            .iter()
            .map(|m| m.name())
            .collect::<Vec<_>>()
            .join(",")
    );
    out
}

/// Parses a simulation config from `key = value` lines. Unlisted keys keep
/// their defaults; unknown keys are errors. The result is validated.
pub fn sim_config_from_str(text: &str) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    for (key, value) in key_value_lines(text)? {
        let bad_int = || Error::Parse(format!("{key}: '{value}' is not an integer"));
        let bad_num = || Error::Parse(format!("{key}: '{value}' is not a number"));
        match key.as_str() {
            "example" => cfg.example = value.parse().map_err(|_| bad_int())?,
            "scenario" => cfg.scenario = Scenario::from_str(&value)?,
            "n_k" => cfg.n_k = value.parse().map_err(|_| bad_int())?,
            "test_n_k" => cfg.test_n_k = value.parse().map_err(|_| bad_int())?,
            "grid_points" => cfg.grid_points = value.parse().map_err(|_| bad_int())?,
            "t_min" => cfg.t_min = value.parse().map_err(|_| bad_num())?,
            "t_max" => cfg.t_max = value.parse().map_err(|_| bad_num())?,
            "length_scale" => cfg.length_scale = value.parse().map_err(|_| bad_num())?,
            "sigma" => cfg.sigma = value.parse().map_err(|_| bad_num())?,
            "replications" => cfg.replications = value.parse().map_err(|_| bad_int())?,
            "seed" => cfg.seed = value.parse().map_err(|_| bad_int())?,
            "q" => cfg.q = value.parse().map_err(|_| bad_int())?,
            "order" => cfg.order = value.parse().map_err(|_| bad_int())?,
            "penalty_order" => cfg.penalty_order = value.parse().map_err(|_| bad_int())?,
            "theta_grid" => {
                cfg.theta_grid = value
                    .split(',')
                    .map(|f| {
                        f.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::Parse(format!("theta_grid: '{f}' is not a number")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
            }
            "methods" => {
                cfg.methods = value
                    .split(',')
                    .map(|m| WhiteningMethod::from_str(m.trim()))
                    .collect::<Result<Vec<WhiteningMethod>>>()?;
            }
            other => {
                return Err(Error::Parse(format!("unknown config key '{other}'")));
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and validates a simulation config file. See [`sim_config_from_str`].
pub fn read_sim_config(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path)?;
    sim_config_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{fit_curves, RawCurves};
    use crate::classify::{fit_pipeline, predict, PipelineConfig};
    use crate::picard::picard_series;
    use crate::simlab::{generate, sim_truth};

    fn toy_curves() -> (RawCurves, Vec<String>) {
        let grid: Vec<f64> = (0..9).map(|i| f64::from(i) * 1.25).collect();
        let mut values = DMatrix::zeros(3, 9);
        for (i, t) in grid.iter().enumerate() {
            values[(0, i)] = (0.7 * t).sin();
            values[(1, i)] = 0.25 * t - 1.0;
            values[(2, i)] = (0.4 * t).cos() + 0.05 * t * t;
        }
        let ids = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        (RawCurves { grid, values }, ids)
    }

    #[test]
    fn curves_round_trip_is_bit_exact() {
        let (curves, ids) = toy_curves();
        let text = curves_csv_string(&curves, &ids).unwrap();
        let (back, back_ids) = parse_curves_csv(&text).unwrap();
        assert_eq!(back_ids, ids);
        assert_eq!(back.grid, curves.grid);
        assert_eq!(back.values, curves.values);
        // A second render is byte-identical.
        assert_eq!(curves_csv_string(&back, &back_ids).unwrap(), text);
    }

    #[test]
    fn headerless_curves_get_synthetic_ids() {
        let text = "0.0,1.0,2.0\n1.0,1.5,2.5\n";
        let (curves, ids) = parse_curves_csv(text).unwrap();
        assert_eq!(ids, vec!["c1".to_string(), "c2".to_string()]);
        assert_eq!(curves.grid, vec![0.0, 1.0]);
        assert_eq!(curves.values[(1, 1)], 2.5);
    }

    #[test]
    fn ragged_curve_rows_are_rejected() {
        let text = "t,a,b\n0.0,1.0,2.0\n1.0,1.5\n";
        assert!(matches!(parse_curves_csv(text), Err(Error::Parse(_))));
    }

    #[test]
    fn labels_round_trip_and_align_by_id() {
        let pairs = vec![("b".to_string(), 1u8), ("a".to_string(), 0u8)];
        let text = labels_csv_string(&pairs);
        let back = parse_labels_csv(&text).unwrap();
        assert_eq!(back, pairs);
        let ids = vec!["a".to_string(), "b".to_string()];
        assert_eq!(align_labels(&ids, &back).unwrap(), vec![0, 1]);
        let missing = vec!["a".to_string(), "z".to_string()];
        assert!(matches!(align_labels(&missing, &back), Err(Error::Parse(_))));
    }

    #[test]
    fn labels_outside_binary_are_rejected() {
        assert!(matches!(parse_labels_csv("id,label\nx,2\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn model_round_trip_predicts_bit_identically() {
        let cfg = SimConfig {
            n_k: 20,
            test_n_k: 40,
            ..SimConfig::default()
        };
        let truth = sim_truth(&cfg).unwrap();
        let (train, test) = generate(&cfg, &truth, 0).unwrap();
        let fit = fit_pipeline(
            &train,
            &PipelineConfig {
                selector: Selector::Icq,
                method: WhiteningMethod::Zca,
                theta: 0.0,
                reduce_p: None,
                tol: None,
            },
        )
        .unwrap();
        let text = model_to_string(&fit.model).unwrap();
        let back = model_from_str(&text).unwrap();
        assert_eq!(back.selector, fit.model.selector);
        assert_eq!(back.method, fit.model.method);
        assert_eq!(back.beta, fit.model.beta);
        assert_eq!(back.center, fit.model.center);
        assert_eq!(back.class_means, fit.model.class_means);
        assert_eq!(predict(&back, &test).unwrap(), predict(&fit.model, &test).unwrap());
        // The rebuilt basis carries the same Gram matrix in bits.
        assert_eq!(back.basis.gram(), fit.model.basis.gram());
    }

    #[test]
    fn model_files_reject_foreign_formats_and_missing_keys() {
        assert!(matches!(
            model_from_str("format = somebody-elses-v9\n"),
            Err(Error::Parse(_))
        ));
        let mut text = String::from("format = fkica-centroid-v1\nselector = icq\n");
        text.push_str("theta = 0\n");
        assert!(matches!(model_from_str(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn sim_config_round_trips_and_rejects_unknown_keys() {
        let cfg = SimConfig {
            example: 3,
            scenario: Scenario::ExpShifted,
            n_k: 12,
            theta_grid: vec![0.0, 0.5],
            ..SimConfig::default()
        };
        let text = sim_config_to_string(&cfg);
        let back = sim_config_from_str(&text).unwrap();
        assert_eq!(back.example, 3);
        assert_eq!(back.scenario, Scenario::ExpShifted);
        assert_eq!(back.n_k, 12);
        assert_eq!(back.theta_grid, vec![0.0, 0.5]);
        assert_eq!(back.methods, cfg.methods);
        assert!(matches!(
            sim_config_from_str("bogus_key = 1\n"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn partial_config_keeps_defaults_and_is_validated() {
        let cfg = sim_config_from_str("example = 2\nn_k = 30\n# comment\n").unwrap();
        assert_eq!(cfg.example, 2);
        assert_eq!(cfg.n_k, 30);
        assert_eq!(cfg.q, SimConfig::default().q);
        // q below the spline order is rejected by validation.
        assert!(sim_config_from_str("q = 2\n").is_err());
    }

    #[test]
    fn report_csv_emitters_have_one_row_per_entry() {
        let (curves, _) = toy_curves();
        let grid = curves.grid.clone();
        let mut values = DMatrix::zeros(8, grid.len());
        for i in 0..8 {
            for (j, t) in grid.iter().enumerate() {
                let z = f64::from(i as u32 + 1);
                values[(i, j)] = (0.3 * z * t).sin() + 0.1 * z;
            }
        }
        let basis = build_basis((0.0, 10.0), 4, 4, 2).unwrap();
        let ds = fit_curves(&basis, &RawCurves { grid, values }, None).unwrap();
        let centered = crate::basis::center(&ds, crate::basis::CenterMode::Pooled).unwrap();
        let report = picard_series(&centered).unwrap();
        let csv = picard_csv_string(&report);
        assert_eq!(csv.lines().count(), report.eigenvalues.len() + 1);
        assert!(csv.lines().nth(1).unwrap().ends_with(',')); // no labels: empty partial column

        let xi = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let ids = vec!["u".to_string(), "v".to_string()];
        let scores = scores_csv_string(&ids, &xi).unwrap();
        assert_eq!(scores, "id,ic1,ic2\nu,1,2\nv,3,4\n");

        let kappa = DVector::from_vec(vec![7.0, 5.0]);
        let normalized = DVector::from_vec(vec![3.0, 1.0]);
        assert_eq!(
            diagnostics_csv_string(&kappa, &normalized),
            "component,kappa,normalized\n1,7,3\n2,5,1\n"
        );
    }

    #[test]
    fn table_csv_has_header_and_all_rows() {
        let cfg = SimConfig {
            n_k: 15,
            test_n_k: 20,
            replications: 2,
            methods: vec![WhiteningMethod::Zca],
            ..SimConfig::default()
        };
        let table = crate::simlab::run_table_sequential(&cfg).unwrap();
        let csv = table_csv_string(&table);
        assert_eq!(csv.lines().count(), table.rows.len() + 1);
        assert!(csv.starts_with("example,scenario,n_k,sigma,"));
        let sweep = vec![(0.0, table.clone()), (0.5, table)];
        let merged = noise_sweep_csv_string(&sweep);
        assert_eq!(merged.lines().count(), 2 * csv.lines().count() - 1);
    }
}

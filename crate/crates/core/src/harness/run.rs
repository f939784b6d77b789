//! Single training runs and their artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::decomposition::FbkanModel;
use crate::diff::ModelTape;
use crate::error::{FbkanError, Result};
use crate::problems::ProblemSpec;
use crate::training::{draw_samples, predict, test_error, train, ExtensionEvent, HistoryRow, TrainSetup};

pub const CONFIG_FILE: &str = "config.toml";
pub const METRICS_FILE: &str = "metrics.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const SNAPSHOT_FILE: &str = "snapshot.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalLoss {
    pub total: f64,
    pub ic: f64,
    pub bc: f64,
    pub r: f64,
    pub data: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    /// Configured target mean relative noise.
    pub level: f64,
    pub sigma: f64,
    /// Measured `mean|eps| / mean|f|` on the training targets.
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactPaths {
    pub config: PathBuf,
    pub metrics: PathBuf,
    pub predictions: PathBuf,
    pub checkpoint: PathBuf,
    pub summary: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub problem: String,
    pub seed: u64,
    pub iterations: usize,
    /// Test-grid error of the final model (the initial model's with no iterations).
    pub rel_l2: f64,
    pub initial_rel_l2: f64,
    /// `None` when no iterations were run.
    pub final_loss: Option<FinalLoss>,
    pub param_count: usize,
    pub final_intervals: usize,
    pub extensions: Vec<ExtensionEvent>,
    pub noise: Option<NoiseReport>,
    pub wall_time_s: f64,
    pub config: RunConfig,
    pub paths: ArtifactPaths,
    /// Hash of the crate version and the canonical configuration.
    pub config_hash: String,
    /// Hash of the metric, prediction and checkpoint files.
    pub result_hash: String,
}

impl RunSummary {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Print progress lines to stderr.
    pub verbose: bool,
}

fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let mut canonical = cfg.clone();
    canonical.output.dir = None;
    sha256_hex(&[env!("CARGO_PKG_VERSION").as_bytes(), canonical.to_toml().as_bytes()])
}

pub fn save_model(model: &FbkanModel, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string(model)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<FbkanModel> {
    let text = fs::read_to_string(path)
        .map_err(|e| FbkanError::Config(format!("cannot read checkpoint {}: {e}", path.display())))?;
    serde_json::from_str::<FbkanModel>(&text)?.validated()
}

/// Fresh model for a configuration, or the configured checkpoint.
pub fn build_model(cfg: &RunConfig, problem: &ProblemSpec) -> Result<FbkanModel> {
    if let Some(path) = &cfg.model.checkpoint {
        let model = load_model(path)?;
        if model.input_dim() != problem.dim() {
            return Err(FbkanError::Config(format!(
                "model.checkpoint: {} has {} inputs but problem '{}' has {}",
                path.display(),
                model.input_dim(),
                problem.name,
                problem.dim()
            )));
        }
        return Ok(model);
    }
    let dec = cfg.decomposition(problem)?;
    FbkanModel::new(dec, &cfg.architecture(), cfg.seed)
}

pub fn write_metrics(path: &Path, rows: &[HistoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if rows.is_empty() {
        w.write_record(["iteration", "lr", "g", "loss_total", "loss_ic", "loss_bc", "loss_r", "loss_data", "rel_l2"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<HistoryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(FbkanError::from)).collect()
}

/// One test-grid point of `predictions.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub x: Vec<f64>,
    pub prediction: f64,
    pub exact: f64,
    pub error: f64,
}

pub fn write_predictions(path: &Path, points: &[Vec<f64>], pred: &[f64], exact: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let d = points.first().map_or(0, Vec::len);
    let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    header.extend(["prediction", "exact", "error"].map(String::from));
    w.write_record(&header)?;
    for ((x, p), e) in points.iter().zip(pred).zip(exact) {
        let mut rec: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        rec.extend([p.to_string(), e.to_string(), (p - e).to_string()]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<Vec<PredictionRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let d = r.headers()?.len().saturating_sub(3);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| FbkanError::Config(format!("{}: {e}", path.display()))))
            .collect::<Result<_>>()?;
        out.push(PredictionRow {
            x: v[..d].to_vec(),
            prediction: v[d],
            exact: v[d + 1],
            error: v[d + 2],
        });
    }
    Ok(out)
}

/// Absolute noise level giving mean relative noise `level` on `targets`.
pub fn noise_sigma(level: f64, targets: &[f64]) -> f64 {
    if level == 0.0 || targets.is_empty() {
        return 0.0;
    }
    let mean_abs = targets.iter().map(|v| v.abs()).sum::<f64>() / targets.len() as f64;
    level * mean_abs * (std::f64::consts::PI / 2.0).sqrt()
}

/// Train according to `cfg` and write every artifact into `out`.
pub fn run(cfg: &RunConfig, out: &Path, opts: RunOptions) -> Result<RunSummary> {
    let started = Instant::now();
    cfg.validate()?;
    let problem = cfg.problem_spec()?;
    fs::create_dir_all(out)?;
    let paths = ArtifactPaths {
        config: out.join(CONFIG_FILE),
        metrics: out.join(METRICS_FILE),
        predictions: out.join(PREDICTIONS_FILE),
        checkpoint: out.join(CHECKPOINT_FILE),
        summary: out.join(SUMMARY_FILE),
    };
    fs::write(&paths.config, cfg.to_toml())?;

    let model = build_model(cfg, &problem)?;
    let initial_rel_l2 = test_error(&model, &problem)?;

    let counts = cfg.training.counts;
    let (clean, _) = draw_samples(&problem, &counts, cfg.seed, 0.0)?;
    let sigma = noise_sigma(cfg.training.noise, &clean.data.targets);
    let (samples, measured) = if sigma > 0.0 {
        draw_samples(&problem, &counts, cfg.seed, sigma)?
    } else {
        (clean, 0.0)
    };
    let noise = (cfg.training.noise > 0.0).then_some(NoiseReport {
        level: cfg.training.noise,
        sigma,
        measured,
    });

    let schedule = cfg.training.schedule();
    let setup = TrainSetup {
        problem: &problem,
        schedule: &schedule,
        weights: &cfg.training.weights,
        samples,
        seed: cfg.seed,
    };
    let verbose = opts.verbose;
    let mut observer = |row: &HistoryRow, _: &FbkanModel| {
        if verbose && !row.rel_l2.is_nan() {
            eprintln!(
                "[{}] it {:>6}  g {:>2}  loss {:.4e}  rel_l2 {:.4e}",
                problem.name, row.iteration, row.g, row.loss_total, row.rel_l2
            );
        }
    };
    let outcome = match train(model, setup, &mut observer) {
        Ok(o) => o,
        Err(f) => {
            write_metrics(&paths.metrics, &f.history)?;
            let snap = out.join(SNAPSHOT_FILE);
            save_model(&f.snapshot, &snap)?;
            let detail = format!("{} (snapshot written to {})", f, snap.display());
            return Err(match f.error {
                FbkanError::NumericalFailure { term, .. } => FbkanError::NumericalFailure { term, detail },
                _ => FbkanError::NumericalFailure {
                    term: "training".into(),
                    detail,
                },
            });
        }
    };

    let grid = problem.test_grid();
    let exact: Vec<f64> = grid.iter().map(|x| problem.exact(x)).collect();
    let pred = predict(&outcome.model, &grid, &mut ModelTape::new())?;
    write_metrics(&paths.metrics, &outcome.history)?;
    write_predictions(&paths.predictions, &grid, &pred, &exact)?;
    save_model(&outcome.model, &paths.checkpoint)?;

    let last = outcome.history.last();
    let rel_l2 = last.map_or(initial_rel_l2, |r| r.rel_l2);
    let final_loss = last.map(|r| FinalLoss {
        total: r.loss_total,
        ic: r.loss_ic,
        bc: r.loss_bc,
        r: r.loss_r,
        data: r.loss_data,
    });
    let result_hash = sha256_hex(&[
        &fs::read(&paths.metrics)?,
        &fs::read(&paths.predictions)?,
        &fs::read(&paths.checkpoint)?,
    ]);
    let summary = RunSummary {
        problem: problem.name.clone(),
        seed: cfg.seed,
        iterations: outcome.history.len(),
        rel_l2,
        initial_rel_l2,
        final_loss,
        param_count: outcome.model.param_count(),
        final_intervals: outcome.model.intervals(),
        extensions: outcome.extensions,
        noise,
        wall_time_s: started.elapsed().as_secs_f64(),
        config: cfg.clone(),
        paths: paths.clone(),
        config_hash: config_hash(cfg),
        result_hash,
    };
    fs::write(&paths.summary, serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// Closed-form parameter count of a configuration at grid size `g`.
pub fn expected_param_count(cfg: &RunConfig, g: usize) -> Result<usize> {
    let problem = cfg.problem_spec()?;
    let mut arch = cfg.architecture();
    arch.intervals = g;
    Ok(arch.network_param_count() * cfg.decomposition(&problem)?.total_subdomains())
}

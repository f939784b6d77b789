//! Run configuration: TOML documents with strict keys and dotted overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decomposition::{Architecture, MultilevelDecomposition, DEFAULT_BOUNDS_SAMPLES, DEFAULT_OVERLAP};
use crate::error::{FbkanError, Result};
use crate::problems::{problem_by_name, ProblemSpec};
use crate::training::{LossWeights, SampleCounts, TrainSchedule};

pub const DEFAULT_FAST_FACTOR: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Iteration multiplier used by `--fast`.
    #[serde(default = "default_fast_factor")]
    pub fast_factor: f64,
    pub problem: ProblemSection,
    pub model: ModelSection,
    pub training: TrainingSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_fast_factor() -> f64 {
    DEFAULT_FAST_FACTOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub widths: Vec<usize>,
    pub degree: usize,
    /// Subdomain count of each level; `[1]` is a plain KAN.
    pub levels: Vec<usize>,
    #[serde(default = "default_overlap")]
    pub overlap: f64,
    #[serde(default = "default_hidden_range")]
    pub hidden_range: (f64, f64),
    #[serde(default = "default_bounds_samples")]
    pub bounds_samples: usize,
    /// Start from this checkpoint instead of a fresh initialization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

fn default_overlap() -> f64 {
    DEFAULT_OVERLAP
}

fn default_hidden_range() -> (f64, f64) {
    (-2.0, 2.0)
}

fn default_bounds_samples() -> usize {
    DEFAULT_BOUNDS_SAMPLES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub iterations: usize,
    pub grid_values: Vec<usize>,
    #[serde(default = "zero_vec")]
    pub grid_iterations: Vec<usize>,
    pub lr: f64,
    #[serde(default = "one")]
    pub lr_scale: f64,
    #[serde(default)]
    pub resample_residual: bool,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    /// Target mean relative noise on data targets (0 = clean).
    #[serde(default)]
    pub noise: f64,
    pub weights: LossWeights,
    pub counts: SampleCounts,
}

fn zero_vec() -> Vec<usize> {
    vec![0]
}

fn one() -> f64 {
    1.0
}

fn default_eval_every() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
}

impl TrainingSection {
    pub fn schedule(&self) -> TrainSchedule {
        TrainSchedule {
            iterations: self.iterations,
            grid_values: self.grid_values.clone(),
            grid_iterations: self.grid_iterations.clone(),
            lr_initial: self.lr,
            lr_scale: self.lr_scale,
            resample_residual: self.resample_residual,
            eval_every: self.eval_every,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| FbkanError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FbkanError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Parse `text`, apply `key=value` overrides and validate.
    pub fn from_toml_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut doc: toml::Value = toml::from_str(text).map_err(|e| FbkanError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: RunConfig = doc.try_into().map_err(|e: toml::de::Error| FbkanError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply overrides to an existing configuration.
    pub fn with_overrides(&self, overrides: &[String]) -> Result<Self> {
        Self::from_toml_with_overrides(&self.to_toml(), overrides)
    }

    pub fn problem_spec(&self) -> Result<ProblemSpec> {
        problem_by_name(&self.problem.name, &self.problem.params)
    }

    pub fn architecture(&self) -> Architecture {
        Architecture {
            widths: self.model.widths.clone(),
            intervals: self.training.grid_values[0],
            degree: self.model.degree,
            hidden_range: self.model.hidden_range,
            bounds_samples: self.model.bounds_samples,
        }
    }

    pub fn decomposition(&self, problem: &ProblemSpec) -> Result<MultilevelDecomposition> {
        MultilevelDecomposition::from_totals(&problem.domain, &self.model.levels, self.model.overlap)
    }

    /// Configuration with iteration counts scaled by `fast_factor`.
    pub fn fast(&self) -> Self {
        let mut c = self.clone();
        let s = self.training.schedule().scaled(self.fast_factor);
        c.training.iterations = s.iterations;
        c.training.grid_values = s.grid_values;
        c.training.grid_iterations = s.grid_iterations;
        c
    }

    pub fn validate(&self) -> Result<()> {
        let problem = self.problem_spec()?;
        let m = &self.model;
        if m.widths.len() < 2 || m.widths.iter().any(|&w| w == 0) {
            return Err(FbkanError::Config(format!("model.widths must have at least two positive entries, got {:?}", m.widths)));
        }
        if m.widths[0] != problem.dim() {
            return Err(FbkanError::Config(format!(
                "model.widths starts with {} but problem '{}' has {} inputs",
                m.widths[0],
                problem.name,
                problem.dim()
            )));
        }
        if *m.widths.last().unwrap() != 1 {
            return Err(FbkanError::Config("model.widths must end with 1".into()));
        }
        if m.levels.is_empty() || m.levels.contains(&0) {
            return Err(FbkanError::Config("model.levels must list positive subdomain counts".into()));
        }
        if !(self.fast_factor > 0.0 && self.fast_factor <= 1.0) {
            return Err(FbkanError::Config(format!("fast_factor must lie in (0, 1], got {}", self.fast_factor)));
        }
        if !(self.training.noise >= 0.0) {
            return Err(FbkanError::Config("training.noise must be non-negative".into()));
        }
        self.training
            .schedule()
            .validate()
            .map_err(|e| FbkanError::Config(format!("training: {e}")))?;
        self.training
            .weights
            .validate()
            .map_err(|e| FbkanError::Config(format!("training.weights: {e}")))?;
        self.decomposition(&problem)
            .map_err(|e| FbkanError::Config(format!("model.levels: {e}")))?;
        let c = &self.training.counts;
        if c.bc > 0 && problem.boundary.is_empty() {
            return Err(FbkanError::Config(format!("training.counts.bc: problem '{}' has no boundary term", problem.name)));
        }
        if c.ic > 0 && problem.initial.is_empty() {
            return Err(FbkanError::Config(format!("training.counts.ic: problem '{}' has no initial term", problem.name)));
        }
        if c.residual > 0 && !problem.is_physics() {
            return Err(FbkanError::Config(format!("training.counts.residual: problem '{}' is data-driven", problem.name)));
        }
        Ok(())
    }

    /// Default configuration of a problem from its built-in hyperparameters.
    pub fn for_problem(name: &str, params: BTreeMap<String, f64>) -> Result<Self> {
        let p = problem_by_name(name, &params)?;
        let d = &p.defaults;
        Ok(RunConfig {
            seed: 0,
            fast_factor: DEFAULT_FAST_FACTOR,
            problem: ProblemSection {
                name: name.to_string(),
                params,
            },
            model: ModelSection {
                widths: d.widths.clone(),
                degree: d.degree,
                levels: d.levels.clone(),
                overlap: DEFAULT_OVERLAP,
                hidden_range: default_hidden_range(),
                bounds_samples: DEFAULT_BOUNDS_SAMPLES,
                checkpoint: None,
            },
            training: TrainingSection {
                iterations: d.schedule.iterations,
                grid_values: d.schedule.grid_values.clone(),
                grid_iterations: d.schedule.grid_iterations.clone(),
                lr: d.schedule.lr_initial,
                lr_scale: d.schedule.lr_scale,
                resample_residual: d.schedule.resample_residual,
                eval_every: d.schedule.eval_every,
                noise: 0.0,
                weights: d.weights,
                counts: d.counts,
            },
            output: OutputSection::default(),
        })
    }
}

/// Parse a scalar override value the way TOML would, falling back to a string.
fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&wrapped) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Set `a.b.c=value` inside a TOML document, creating tables as needed.
pub fn apply_override(doc: &mut toml::Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| FbkanError::Config(format!("override '{assignment}' is not key=value")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(FbkanError::Config(format!("override '{assignment}' has an empty key")));
    }
    let mut value = parse_value(raw.trim());
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = doc;
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| FbkanError::Config(format!("override key '{key}': '{}' is not a table", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            // integers given for float fields (and vice versa) are coerced on deserialization
            if let (Some(toml::Value::Float(_)), toml::Value::Integer(n)) = (table.get(*part), &value) {
                value = toml::Value::Float(*n as f64);
            }
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seed = 3

[problem]
name = "data1"

[model]
widths = [1, 5, 1]
degree = 3
levels = [4]

[training]
iterations = 10
grid_values = [5]
lr = 0.04

[training.weights]
ic = 0.0
bc = 0.0
r = 0.0
data = 1.0

[training.counts]
data = 100
"#;

    #[test]
    fn parses_and_round_trips() {
        let c = RunConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.model.overlap, 1.9);
        let again = RunConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_name() {
        let bad = SAMPLE.replace("degree = 3", "degree = 3\ndegre = 4");
        let err = RunConfig::from_toml(&bad).unwrap_err().to_string();
        assert!(err.contains("degre"), "{err}");
        let err = RunConfig::from_toml_with_overrides(SAMPLE, &["training.lrr=0.1".into()])
            .unwrap_err()
            .to_string();
        assert!(err.contains("lrr"), "{err}");
    }

    #[test]
    fn overrides_set_nested_values() {
        let c = RunConfig::from_toml_with_overrides(
            SAMPLE,
            &["training.lr=0.5".into(), "model.levels=[1, 4]".into(), "seed=9".into(), "training.noise=0".into()],
        )
        .unwrap();
        assert_eq!(c.training.lr, 0.5);
        assert_eq!(c.model.levels, vec![1, 4]);
        assert_eq!(c.seed, 9);
    }

    #[test]
    fn inconsistent_configs_are_rejected() {
        assert!(RunConfig::from_toml_with_overrides(SAMPLE, &["model.widths=[2, 5, 1]".into()]).is_err());
        assert!(RunConfig::from_toml_with_overrides(SAMPLE, &["training.counts.bc=4".into()]).is_err());
        assert!(RunConfig::from_toml_with_overrides(SAMPLE, &["problem.name=\"nope\"".into()]).is_err());
    }

    #[test]
    fn fast_scales_iterations() {
        let c = RunConfig::for_problem("physics1", BTreeMap::new()).unwrap().fast();
        assert_eq!(c.training.iterations, 1000);
        assert_eq!(c.training.grid_iterations, vec![0, 250, 500, 750]);
    }
}

//! Built-in presets, one per hyperparameter column, and the preset-name
//! grammar used by `run`, `sweep` and `reproduce`.
//!
//! A name is a preset (or alias) followed by `-`-separated modifiers:
//!
//! * `L4`, `L1+4+16`: subdomain totals per level
//! * `kan`, `fbkan`: plain KAN (`levels = [1]`) or the preset's decomposition
//! * `kan2`, `fbkan3`, ...: the same, with hyperparameter column N of the family
//! * `a1=4`: a problem parameter; keys containing `.` (and `seed`) set config keys
//!
//! e.g. `helmholtz-a1=4-a2=4-fbkan1-L16` or `data1-L32`.

use std::collections::BTreeMap;

use super::config::RunConfig;
use crate::error::{FbkanError, Result};

pub const PRESETS: &[(&str, &str)] = &[
    ("data1", include_str!("../../presets/data1.toml")),
    ("data1-noise", include_str!("../../presets/data1-noise.toml")),
    ("data2-fixed", include_str!("../../presets/data2-fixed.toml")),
    ("data2-ext", include_str!("../../presets/data2-ext.toml")),
    ("physics1", include_str!("../../presets/physics1.toml")),
    ("helmholtz-fixed", include_str!("../../presets/helmholtz-fixed.toml")),
    ("helmholtz-ext", include_str!("../../presets/helmholtz-ext.toml")),
    ("helmholtz-narrow", include_str!("../../presets/helmholtz-narrow.toml")),
    ("wave-sqrt2", include_str!("../../presets/wave-sqrt2.toml")),
    ("wave-c2", include_str!("../../presets/wave-c2.toml")),
    ("ml-helmholtz", include_str!("../../presets/ml-helmholtz.toml")),
    ("ml-laplacian", include_str!("../../presets/ml-laplacian.toml")),
];

const ALIASES: &[(&str, &str)] = &[
    ("helmholtz", "helmholtz-fixed"),
    ("data2", "data2-fixed"),
    ("wave", "wave-sqrt2"),
];

/// Presets whose iteration count follows the problem parameters.
const PARAM_DEPENDENT_ITERATIONS: &[&str] = &["helmholtz-fixed"];

/// Column N of a preset family (KAN-N / FBKAN-N in the tables).
const COLUMNS: &[(&str, &[&str])] = &[
    ("data2", &["data2-fixed", "data2-ext"]),
    ("helmholtz", &["helmholtz-fixed", "helmholtz-ext", "helmholtz-narrow"]),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

fn canonical(name: &str) -> Option<&'static str> {
    if let Some((n, _)) = PRESETS.iter().find(|(n, _)| *n == name) {
        return Some(n);
    }
    ALIASES.iter().find(|(a, _)| *a == name).map(|(_, n)| *n)
}

fn family(preset: &str) -> &str {
    COLUMNS
        .iter()
        .find(|(_, cols)| cols.contains(&preset))
        .map(|(f, _)| *f)
        .unwrap_or(preset)
}

fn column(preset: &str, n: usize) -> Result<&'static str> {
    let fam = family(preset);
    match COLUMNS.iter().find(|(f, _)| *f == fam) {
        Some((_, cols)) => cols
            .get(n.wrapping_sub(1))
            .copied()
            .ok_or_else(|| FbkanError::Config(format!("preset family '{fam}' has columns 1..={}, got {n}", cols.len()))),
        None if n == 1 => Ok(canonical(preset).expect("canonical preset")),
        None => Err(FbkanError::Config(format!("preset '{preset}' has a single column, got {n}"))),
    }
}

fn parse_levels(spec: &str) -> Option<Vec<usize>> {
    spec.split('+').map(|s| s.parse().ok().filter(|&v: &usize| v > 0)).collect()
}

enum Variant {
    Kan,
    Fbkan,
}

/// Resolve a preset name with modifiers into a validated configuration.
pub fn resolve(name: &str) -> Result<RunConfig> {
    let tokens: Vec<&str> = name.split('-').collect();
    let (mut base, rest) = (1..=tokens.len())
        .rev()
        .find_map(|n| canonical(&tokens[..n].join("-")).map(|p| (p, &tokens[n..])))
        .ok_or_else(|| {
            FbkanError::Config(format!("unknown preset '{name}' (known: {})", preset_names().join(", ")))
        })?;

    let mut variant = None;
    let mut levels = None;
    let mut params = Vec::new();
    let mut overrides = Vec::new();
    for tok in rest {
        if let Some((k, v)) = tok.split_once('=') {
            if k.contains('.') || k == "seed" || k == "fast_factor" {
                overrides.push(tok.to_string());
            } else {
                let v: f64 = v
                    .parse()
                    .map_err(|_| FbkanError::Config(format!("preset modifier '{tok}': '{v}' is not a number")))?;
                params.push((k.to_string(), v));
            }
        } else if let Some(spec) = tok.strip_prefix('L') {
            levels = Some(parse_levels(spec).ok_or_else(|| {
                FbkanError::Config(format!("preset modifier '{tok}': expected L<n> or L<n>+<m>+..."))
            })?);
        } else if let Some(col) = tok.strip_prefix("fbkan").or_else(|| tok.strip_prefix("kan")) {
            variant = Some(if tok.starts_with("fbkan") { Variant::Fbkan } else { Variant::Kan });
            if !col.is_empty() {
                let n: usize = col
                    .parse()
                    .map_err(|_| FbkanError::Config(format!("preset modifier '{tok}': bad column number")))?;
                base = column(base, n)?;
            }
        } else {
            return Err(FbkanError::Config(format!(
                "preset '{name}': unrecognized modifier '{tok}' (expected L<n>, kan[N], fbkan[N] or key=value)"
            )));
        }
    }

    let text = preset_text(base).expect("registered preset");
    let mut cfg = RunConfig::from_toml(text)?;
    if !params.is_empty() {
        let old_default = cfg.problem_spec()?.defaults.schedule.iterations;
        for (k, v) in params {
            cfg.problem.params.insert(k, v);
        }
        let new_default = cfg
            .problem_spec()
            .map_err(|e| FbkanError::Config(format!("preset '{name}': {e}")))?
            .defaults
            .schedule
            .iterations;
        if PARAM_DEPENDENT_ITERATIONS.contains(&base) && cfg.training.iterations == old_default {
            cfg.training.iterations = new_default;
        }
    }
    if let Some(Variant::Kan) = variant {
        cfg.model.levels = vec![1];
    }
    if let Some(l) = levels {
        if let Some(Variant::Kan) = variant {
            return Err(FbkanError::Config(format!("preset '{name}': a plain KAN cannot take L modifiers")));
        }
        cfg.model.levels = l;
    }
    if overrides.is_empty() {
        cfg.validate()?;
        Ok(cfg)
    } else {
        cfg.with_overrides(&overrides)
    }
}

/// Iteration-independent description of the preset problems, for listings.
pub fn describe() -> BTreeMap<&'static str, String> {
    PRESETS
        .iter()
        .map(|(n, t)| {
            let first = t.lines().next().unwrap_or("").trim_start_matches('#').trim().to_string();
            (*n, first)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_and_validates() {
        for (name, text) in PRESETS {
            let c = RunConfig::from_toml(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(resolve(name).unwrap(), c);
        }
    }

    #[test]
    fn presets_match_problem_defaults() {
        for name in ["data1", "data2-fixed", "helmholtz-fixed", "wave-sqrt2", "wave-c2", "ml-laplacian"] {
            let c = resolve(name).unwrap();
            let p = c.problem_spec().unwrap();
            let d = &p.defaults;
            assert_eq!(c.model.widths, d.widths, "{name}");
            assert_eq!(c.model.degree, d.degree, "{name}");
            assert_eq!(c.training.iterations, d.schedule.iterations, "{name}");
            assert_eq!(c.training.lr, d.schedule.lr_initial, "{name}");
            assert_eq!(c.training.weights, d.weights, "{name}");
            assert_eq!(c.training.counts, d.counts, "{name}");
        }
    }

    #[test]
    fn grammar() {
        let c = resolve("data1-L32").unwrap();
        assert_eq!(c.model.levels, vec![32]);
        let c = resolve("helmholtz-a1=4-a2=4-kan1").unwrap();
        assert_eq!(c.model.levels, vec![1]);
        assert_eq!(c.problem.params["a1"], 4.0);
        let c = resolve("helmholtz-a1=6-a2=6-fbkan1-L16").unwrap();
        assert_eq!(c.model.levels, vec![16]);
        assert_eq!(c.training.iterations, 30000);
        let c = resolve("helmholtz-a1=6-a2=6-fbkan3").unwrap();
        assert_eq!(c.training.iterations, 10000);
        let c = resolve("helmholtz-fbkan2").unwrap();
        assert_eq!(c.model.degree, 3);
        assert_eq!(c.training.grid_values, vec![5, 10, 15]);
        let c = resolve("data2-kan2").unwrap();
        assert_eq!(c.model.widths, vec![2, 5, 1]);
        assert_eq!(c.model.levels, vec![1]);
        let c = resolve("ml-laplacian-L1+4").unwrap();
        assert_eq!(c.model.levels, vec![1, 4]);
        let c = resolve("data1-noise-training.noise=0.05-seed=2").unwrap();
        assert_eq!(c.training.noise, 0.05);
        assert_eq!(c.seed, 2);
    }

    #[test]
    fn grammar_errors_are_descriptive() {
        for bad in ["nope", "data1-X3", "data1-L0", "data2-fbkan5", "helmholtz-zz=1", "data1-kan-L4", "data1-training.lrr=1"] {
            assert!(resolve(bad).is_err(), "{bad}");
        }
        let err = resolve("helmholtz-zz=1").unwrap_err().to_string();
        assert!(err.contains("zz"), "{err}");
    }
}

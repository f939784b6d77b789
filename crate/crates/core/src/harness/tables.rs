//! Table reproduction and parameter sweeps over presets.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use super::presets::resolve;
use super::run::{run, RunOptions, RunSummary};
use crate::error::{FbkanError, Result};

/// How a batch of runs is executed.
#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub seeds: Vec<u64>,
    pub fast: bool,
    pub out: PathBuf,
    pub verbose: bool,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            seeds: vec![0],
            fast: false,
            out: PathBuf::from("runs"),
            verbose: false,
        }
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs `cfg` once per seed, each in `out/seed<N>`.
pub fn run_seeds(cfg: &RunConfig, out: &Path, opts: &BatchOptions) -> Result<Vec<RunSummary>> {
    let base = if opts.fast { cfg.fast() } else { cfg.clone() };
    opts.seeds
        .iter()
        .map(|&s| {
            let mut c = base.clone();
            c.seed = s;
            run(&c, &out.join(format!("seed{s}")), RunOptions { verbose: opts.verbose })
        })
        .collect()
}

/// One table entry: a preset and the published error.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub preset: String,
    pub published: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Check {
    /// Obtained error within a factor of the published value.
    WithinFactor { label: String, factor: f64 },
    AtMost { label: String, bound: f64 },
    AtLeast { label: String, bound: f64 },
    /// `error(lower) < error(upper)`.
    Less { lower: String, upper: String },
    /// `error(lower) <= ratio * error(upper)`.
    Below { lower: String, upper: String, ratio: f64 },
}

impl Check {
    fn labels(&self) -> Vec<&str> {
        match self {
            Check::WithinFactor { label, .. } | Check::AtMost { label, .. } | Check::AtLeast { label, .. } => {
                vec![label]
            }
            Check::Less { lower, upper } | Check::Below { lower, upper, .. } => vec![lower, upper],
        }
    }

    /// Relax absolute bounds for shortened runs; orderings stay as they are.
    fn relaxed(&self, slack: f64) -> Check {
        match self.clone() {
            Check::WithinFactor { label, factor } => Check::WithinFactor {
                label,
                factor: factor * slack,
            },
            Check::AtMost { label, bound } => Check::AtMost {
                label,
                bound: bound * slack,
            },
            c => c,
        }
    }

    fn describe(&self) -> String {
        match self {
            Check::WithinFactor { label, factor } => format!("{label} within x{factor} of published"),
            Check::AtMost { label, bound } => format!("{label} <= {bound}"),
            Check::AtLeast { label, bound } => format!("{label} >= {bound}"),
            Check::Less { lower, upper } => format!("{lower} < {upper}"),
            Check::Below { lower, upper, ratio } => format!("{lower} <= {ratio} * {upper}"),
        }
    }

    fn evaluate(&self, rows: &[TableRow], got: &BTreeMap<String, f64>) -> Option<bool> {
        let v = |l: &str| got.get(l).copied();
        Some(match self {
            Check::WithinFactor { label, factor } => {
                let published = rows.iter().find(|r| &r.label == label)?.published;
                let r = v(label)? / published;
                r <= *factor && r >= 1.0 / factor
            }
            Check::AtMost { label, bound } => v(label)? <= *bound,
            Check::AtLeast { label, bound } => v(label)? >= *bound,
            Check::Less { lower, upper } => v(lower)? < v(upper)?,
            Check::Below { lower, upper, ratio } => v(lower)? <= ratio * v(upper)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub id: &'static str,
    pub title: &'static str,
    pub rows: Vec<TableRow>,
    pub checks: Vec<Check>,
}

/// Absolute-bound slack applied under `--fast`.
pub const FAST_SLACK: f64 = 2.0;

pub const TABLE_IDS: &[&str] = &["data2", "pi2", "ml-pi"];

fn row(label: &str, preset: String, published: f64) -> TableRow {
    TableRow {
        label: label.to_string(),
        preset,
        published,
    }
}

fn within(label: &str) -> Check {
    Check::WithinFactor {
        label: label.into(),
        factor: 2.0,
    }
}

fn less(lower: &str, upper: &str) -> Check {
    Check::Less {
        lower: lower.into(),
        upper: upper.into(),
    }
}

fn below(lower: &str, upper: &str, ratio: f64) -> Check {
    Check::Below {
        lower: lower.into(),
        upper: upper.into(),
        ratio,
    }
}

fn at_most(label: &str, bound: f64) -> Check {
    Check::AtMost {
        label: label.into(),
        bound,
    }
}

pub fn table(id: &str) -> Result<Table> {
    match id {
        "data2" => Ok(Table {
            id: "data2",
            title: "data-driven test 2",
            rows: vec![
                row("KAN-1", "data2-kan1".into(), 2.36e-1),
                row("FBKAN-1", "data2-fbkan1".into(), 7.43e-2),
                row("KAN-2", "data2-kan2".into(), 8.10e-2),
                row("FBKAN-2", "data2-fbkan2".into(), 2.27e-2),
            ],
            checks: vec![
                within("KAN-1"),
                within("FBKAN-1"),
                within("KAN-2"),
                within("FBKAN-2"),
                less("FBKAN-1", "KAN-1"),
                less("FBKAN-2", "KAN-2"),
            ],
        }),
        "pi2" => {
            let published: [(&str, &str, [f64; 3]); 8] = [
                ("KAN-1", "kan1", [0.0259, 0.5465, 1.1254]),
                ("FBKAN-1 L=4", "fbkan1-L4", [0.0102, 0.0267, 0.1151]),
                ("FBKAN-1 L=9", "fbkan1-L9", [0.0213, 0.0239, 0.0399]),
                ("FBKAN-1 L=16", "fbkan1-L16", [0.0037, 0.0128, 0.0321]),
                ("KAN-2", "kan2", [0.0180, 0.2045, 0.5854]),
                ("FBKAN-2", "fbkan2", [0.0112, 0.0427, 0.2272]),
                ("KAN-3", "kan3", [0.3771, 0.5488, 1.2825]),
                ("FBKAN-3", "fbkan3", [0.0214, 0.2760, 0.9797]),
            ];
            let columns = [(1, 4), (4, 4), (6, 6)];
            let mut rows = Vec::new();
            for (c, (a1, a2)) in columns.iter().enumerate() {
                for (label, suffix, reference) in &published {
                    rows.push(row(
                        &format!("{label} a=({a1},{a2})"),
                        format!("helmholtz-a1={a1}-a2={a2}-{suffix}"),
                        reference[c],
                    ));
                }
            }
            Ok(Table {
                id: "pi2",
                title: "physics-informed test 2 (Helmholtz)",
                rows,
                checks: vec![
                    at_most("FBKAN-1 L=4 a=(4,4)", 0.06),
                    Check::AtLeast {
                        label: "KAN-1 a=(4,4)".into(),
                        bound: 0.30,
                    },
                    at_most("FBKAN-1 L=16 a=(1,4)", 0.02),
                ],
            })
        }
        "ml-pi" => {
            let published: [(&str, &str, [f64; 3]); 7] = [
                ("KAN", "kan", [0.89089, 0.92729, 1.08556]),
                ("FBKAN L=4", "L4", [0.91962, 0.87100, 0.33474]),
                ("FBKAN L=16", "L16", [0.28707, 0.72251, 0.04175]),
                ("FBKAN L=36", "L36", [0.33562, 0.51766, 0.09343]),
                ("MLFBKAN N=2", "L1+4", [0.24593, 0.87294, 0.10461]),
                ("MLFBKAN N=3", "L1+4+16", [0.06353, 0.27380, 0.02926]),
                ("MLFBKAN N=4", "L1+4+16+36", [0.04231, 0.12012, 0.03066]),
            ];
            let columns = [("a=8", "ml-helmholtz-a=8"), ("a=10", "ml-helmholtz-a=10"), ("M=5", "ml-laplacian-m=5")];
            let mut rows = Vec::new();
            for (c, (col, base)) in columns.iter().enumerate() {
                for (label, suffix, reference) in &published {
                    rows.push(row(&format!("{label} {col}"), format!("{base}-{suffix}"), reference[c]));
                }
            }
            Ok(Table {
                id: "ml-pi",
                title: "multilevel physics-informed tests",
                rows,
                checks: vec![
                    at_most("MLFBKAN N=3 a=8", 0.15),
                    below("MLFBKAN N=3 a=8", "FBKAN L=16 a=8", 0.5),
                    at_most("FBKAN L=16 M=5", 0.10),
                    below("MLFBKAN N=3 M=5", "FBKAN L=4 M=5", 1.0),
                ],
            })
        }
        other => Err(FbkanError::Config(format!(
            "unknown table '{other}' (known: {})",
            TABLE_IDS.join(", ")
        ))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RowResult {
    pub label: String,
    pub preset: String,
    pub published: f64,
    /// Median over seeds.
    pub obtained: f64,
    pub per_seed: Vec<f64>,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: String,
    /// `None` when a row it needs failed to run.
    pub passed: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableReport {
    pub id: String,
    pub fast: bool,
    pub rows: Vec<RowResult>,
    pub failed_rows: Vec<(String, String)>,
    pub checks: Vec<CheckResult>,
}

impl TableReport {
    pub fn success(&self) -> bool {
        self.checks.iter().all(|c| c.passed == Some(true))
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<24} {:>10} {:>10} {:>7}", "row", "published", "obtained", "ratio");
        for r in &self.rows {
            let _ = writeln!(s, "{:<24} {:>10.4e} {:>10.4e} {:>7.2}", r.label, r.published, r.obtained, r.ratio);
        }
        for (label, err) in &self.failed_rows {
            let _ = writeln!(s, "{label:<24} FAILED: {err}");
        }
        for c in &self.checks {
            let status = match c.passed {
                Some(true) => "PASS",
                Some(false) => "FAIL",
                None => "MISSING",
            };
            let _ = writeln!(s, "[{status}] {}", c.check);
        }
        s
    }
}

/// Run every row of a table (or only those its checks need) and compare.
pub fn reproduce(id: &str, only_required: bool, opts: &BatchOptions) -> Result<TableReport> {
    let t = table(id)?;
    let checks: Vec<Check> = if opts.fast {
        t.checks.iter().map(|c| c.relaxed(FAST_SLACK)).collect()
    } else {
        t.checks.clone()
    };
    let needed: Vec<&str> = checks.iter().flat_map(Check::labels).collect();
    let mut got = BTreeMap::new();
    let mut rows = Vec::new();
    let mut failed_rows = Vec::new();
    for r in &t.rows {
        if only_required && !needed.contains(&r.label.as_str()) {
            continue;
        }
        let cfg = resolve(&r.preset)?;
        let dir = opts.out.join(id).join(&r.preset);
        match run_seeds(&cfg, &dir, opts) {
            Ok(runs) => {
                let per_seed: Vec<f64> = runs.iter().map(|s| s.rel_l2).collect();
                let obtained = median(&per_seed);
                got.insert(r.label.clone(), obtained);
                rows.push(RowResult {
                    label: r.label.clone(),
                    preset: r.preset.clone(),
                    published: r.published,
                    obtained,
                    per_seed,
                    ratio: obtained / r.published,
                });
            }
            Err(e) => failed_rows.push((r.label.clone(), e.to_string())),
        }
    }
    let checks = checks
        .iter()
        .map(|c| CheckResult {
            check: c.describe(),
            passed: c.evaluate(&t.rows, &got),
        })
        .collect();
    let report = TableReport {
        id: id.to_string(),
        fast: opts.fast,
        rows,
        failed_rows,
        checks,
    };
    fs::create_dir_all(opts.out.join(id))?;
    fs::write(opts.out.join(id).join("report.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Values are subdomain totals (1 = plain KAN).
    Subdomains,
    /// Values are target mean relative noise levels.
    Noise,
}

impl std::str::FromStr for SweepAxis {
    type Err = FbkanError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "subdomains" => Ok(SweepAxis::Subdomains),
            "noise" => Ok(SweepAxis::Noise),
            other => Err(FbkanError::Config(format!("unknown sweep axis '{other}' (known: subdomains, noise)"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub rel_l2: f64,
    pub per_seed: Vec<f64>,
    /// Measured mean relative noise (noise sweeps).
    pub measured_noise: Option<f64>,
    pub param_count: usize,
}

pub fn sweep_config(axis: SweepAxis, preset: &str, value: f64) -> Result<RunConfig> {
    let cfg = resolve(preset)?;
    match axis {
        SweepAxis::Subdomains => {
            if value.fract() != 0.0 || value < 1.0 {
                return Err(FbkanError::Config(format!("subdomain counts must be positive integers, got {value}")));
            }
            cfg.with_overrides(&[format!("model.levels=[{}]", value as usize)])
        }
        SweepAxis::Noise => {
            if cfg.training.counts.data == 0 {
                return Err(FbkanError::Config(format!("preset '{preset}' has no data term to add noise to")));
            }
            cfg.with_overrides(&[format!("training.noise={value:?}")])
        }
    }
}

/// One run set per value; writes `sweep.csv` into the output directory.
pub fn sweep(axis: SweepAxis, preset: &str, values: &[f64], opts: &BatchOptions) -> Result<Vec<SweepRow>> {
    let name = match axis {
        SweepAxis::Subdomains => "subdomains",
        SweepAxis::Noise => "noise",
    };
    let root = opts.out.join(format!("sweep-{name}-{preset}"));
    let mut out = Vec::new();
    for &v in values {
        let cfg = sweep_config(axis, preset, v)?;
        let runs = run_seeds(&cfg, &root.join(format!("{v}")), opts)?;
        let per_seed: Vec<f64> = runs.iter().map(|s| s.rel_l2).collect();
        let measured: Vec<f64> = runs.iter().filter_map(|s| s.noise.map(|n| n.measured)).collect();
        out.push(SweepRow {
            value: v,
            rel_l2: median(&per_seed),
            per_seed,
            measured_noise: match axis {
                SweepAxis::Noise => Some(if measured.is_empty() { 0.0 } else { median(&measured) }),
                SweepAxis::Subdomains => None,
            },
            param_count: runs[0].param_count,
        });
    }
    fs::create_dir_all(&root)?;
    let mut w = csv::Writer::from_path(root.join("sweep.csv"))?;
    w.write_record(["value", "rel_l2", "measured_noise", "param_count"])?;
    for r in &out {
        w.write_record([
            r.value.to_string(),
            r.rel_l2.to_string(),
            r.measured_noise.map_or(String::new(), |m| m.to_string()),
            r.param_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_presets_resolve() {
        for id in TABLE_IDS {
            let t = table(id).unwrap();
            for r in &t.rows {
                resolve(&r.preset).unwrap_or_else(|e| panic!("{}: {e}", r.preset));
            }
            for c in &t.checks {
                for l in c.labels() {
                    assert!(t.rows.iter().any(|r| r.label == l), "{id}: {l}");
                }
            }
        }
        assert_eq!(table("data2").unwrap().rows.len(), 4);
        assert!(table("nope").is_err());
    }

    #[test]
    fn published_values() {
        let t = table("pi2").unwrap();
        let get = |l: &str| t.rows.iter().find(|r| r.label == l).unwrap().published;
        assert_eq!(get("KAN-1 a=(4,4)"), 0.5465);
        assert_eq!(get("FBKAN-1 L=4 a=(4,4)"), 0.0267);
        let t = table("ml-pi").unwrap();
        let get = |l: &str| t.rows.iter().find(|r| r.label == l).unwrap().published;
        assert_eq!(get("MLFBKAN N=4 a=8"), 0.04231);
        assert_eq!(get("FBKAN L=16 a=8"), 0.28707);
    }

    #[test]
    fn checks_evaluate() {
        let t = table("data2").unwrap();
        let mut got = BTreeMap::new();
        for (l, v) in [("KAN-1", 0.3), ("FBKAN-1", 0.05), ("KAN-2", 0.1), ("FBKAN-2", 0.03)] {
            got.insert(l.to_string(), v);
        }
        assert!(t.checks.iter().all(|c| c.evaluate(&t.rows, &got) == Some(true)));
        got.insert("FBKAN-2".into(), 0.2);
        assert_eq!(less("FBKAN-2", "KAN-2").evaluate(&t.rows, &got), Some(false));
        assert_eq!(within("FBKAN-2").evaluate(&t.rows, &got), Some(false));
        got.remove("KAN-1");
        assert_eq!(within("KAN-1").evaluate(&t.rows, &got), None);
        got.insert("KAN-1".into(), 0.2);
        assert_eq!(below("FBKAN-2", "KAN-1", 1.0).evaluate(&t.rows, &got), Some(true));
        assert_eq!(less("FBKAN-2", "KAN-1").evaluate(&t.rows, &got), Some(false));
    }

    #[test]
    fn median_of_seeds() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0]), 2.5);
    }
}

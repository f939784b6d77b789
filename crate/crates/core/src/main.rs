use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fbkan::harness::presets::{describe, resolve};
use fbkan::harness::run::{run, RunOptions};
use fbkan::harness::tables::{reproduce, sweep, BatchOptions, SweepAxis};
use fbkan::harness::RunConfig;
use fbkan::Result;

#[derive(Parser)]
#[command(name = "fbkan", version, about = "Train and evaluate finite-basis KANs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration and write its artifacts.
    Run {
        /// Config file; `preset:<name>` selects a built-in preset.
        #[arg(long)]
        config: String,
        /// Override a config key, e.g. `training.lr=0.01`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scale iteration counts by `fast_factor`.
        #[arg(long)]
        fast: bool,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Rerun a published error table and compare.
    Reproduce {
        /// One of data2, pi2, ml-pi.
        table: String,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long)]
        fast: bool,
        /// Only run the rows the pass/fail checks need.
        #[arg(long)]
        required_only: bool,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long, short)]
        verbose: bool,
    },
    /// Vary subdomain count or noise level over a preset.
    Sweep {
        /// `subdomains` or `noise`.
        axis: String,
        #[arg(long)]
        preset: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long)]
        fast: bool,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long, short)]
        verbose: bool,
    },
    /// Print a preset (after modifiers) as TOML, or list presets.
    Preset { name: Option<String> },
}

fn load_config(spec: &str, set: &[String]) -> Result<RunConfig> {
    match spec.strip_prefix("preset:") {
        Some(name) => resolve(name)?.with_overrides(set),
        None => {
            let text = std::fs::read_to_string(spec)
                .map_err(|e| fbkan::FbkanError::Config(format!("cannot read {spec}: {e}")))?;
            RunConfig::from_toml_with_overrides(&text, set)
        }
    }
}

fn default_out(cfg: &RunConfig, spec: &str) -> PathBuf {
    let stem = spec
        .strip_prefix("preset:")
        .map(str::to_string)
        .unwrap_or_else(|| {
            PathBuf::from(spec)
                .file_stem()
                .map_or("run".into(), |s| s.to_string_lossy().into_owned())
        });
    PathBuf::from("runs").join(format!("{stem}-seed{}", cfg.seed))
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Run {
            config,
            set,
            seed,
            out,
            fast,
            quiet,
        } => {
            let mut cfg = load_config(&config, &set)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if fast {
                cfg = cfg.fast();
            }
            let out = out
                .or_else(|| cfg.output.dir.clone())
                .unwrap_or_else(|| default_out(&cfg, &config));
            let s = run(&cfg, &out, RunOptions { verbose: !quiet })?;
            println!(
                "{}: rel_l2 {:.4e} (initial {:.4e}), {} params, {} iterations, {:.1} s -> {}",
                s.problem,
                s.rel_l2,
                s.initial_rel_l2,
                s.param_count,
                s.iterations,
                s.wall_time_s,
                s.paths.summary.display()
            );
            Ok(true)
        }
        Command::Reproduce {
            table,
            seeds,
            fast,
            required_only,
            out,
            verbose,
        } => {
            let opts = BatchOptions {
                seeds,
                fast,
                out,
                verbose,
            };
            let report = reproduce(&table, required_only, &opts)?;
            print!("{}", report.render());
            Ok(report.success())
        }
        Command::Sweep {
            axis,
            preset,
            values,
            seeds,
            fast,
            out,
            verbose,
        } => {
            let axis: SweepAxis = axis.parse()?;
            let opts = BatchOptions {
                seeds,
                fast,
                out,
                verbose,
            };
            let rows = sweep(axis, &preset, &values, &opts)?;
            println!("{:>8} {:>12} {:>10} {:>8}", "value", "rel_l2", "noise", "params");
            for r in rows {
                let noise = r.measured_noise.map_or("-".into(), |m| format!("{m:.4}"));
                println!("{:>8} {:>12.4e} {:>10} {:>8}", r.value, r.rel_l2, noise, r.param_count);
            }
            Ok(true)
        }
        Command::Preset { name } => {
            match name {
                Some(n) => print!("{}", resolve(&n)?.to_toml()),
                None => {
                    for (n, d) in describe() {
                        println!("{n:<18} {d}");
                    }
                }
            }
            Ok(true)
        }
    }
}

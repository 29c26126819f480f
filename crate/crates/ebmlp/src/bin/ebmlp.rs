use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ebmlp::config::parse_overrides;
use ebmlp::experiments::{self, Splits};
use ebmlp::{bench, AppError, Result, RunConfig, Track};
use serde_json::json;

/// Train and compare MLPs and sampled energy-based models on MNIST 0-vs-1.
#[derive(Parser)]
#[command(name = "ebmlp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a training track and write traces and summary.json.
    Train {
        /// classical1, classical2 or quantum-sim.
        #[arg(long)]
        track: Track,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Any config key as `--key value`, e.g. `--steps 40 --out-dir runs/c2`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
        overrides: Vec<String>,
    },
    /// Train an MLP and an EBM in lockstep from the same initialization.
    Equivalence {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
        overrides: Vec<String>,
    },
    /// Time one MLP output product and one Gibbs sweep per size; CSV on stdout.
    Bench {
        /// Comma-separated output-layer sizes.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Recompute the summary row from the trace files of a finished run.
    Summarize { dir: PathBuf },
}

fn load_config(path: Option<&Path>, overrides: &[String], track: Option<Track>) -> Result<RunConfig> {
    let mut pairs = parse_overrides(overrides)?;
    if let Some(t) = track {
        pairs.push(("track".into(), t.as_str().into()));
    }
    match path {
        Some(p) => RunConfig::from_file(p, &pairs),
        None => RunConfig::from_toml_str("", &pairs),
    }
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("json values serialize")
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            track,
            config,
            overrides,
        } => {
            let config = load_config(config.as_deref(), &overrides, Some(track))?;
            let splits = Splits::load(&config)?;
            let outcome = experiments::run_track(&config, &splits)?;
            experiments::write_track_outputs(&config, &splits, &outcome)?;
            print_json(&json!({
                "track": config.track.as_str(),
                "out_dir": config.out_dir,
                "trials": outcome.trials,
                "summary": outcome.summary,
            }));
        }
        Command::Equivalence { config, overrides } => {
            let config = load_config(config.as_deref(), &overrides, Some(Track::Equivalence))?;
            let splits = Splits::load(&config)?;
            let report = experiments::run_equivalence(&config, &splits)?;
            experiments::write_equivalence_outputs(&config, &report)?;
            let kl = report.kl_series();
            print_json(&json!({
                "track": "equivalence",
                "out_dir": config.out_dir,
                "steps": report.records.len().saturating_sub(1),
                "kl_nats_max": kl.iter().copied().fold(0.0, f64::max),
                "kl_nats_final": kl.last(),
            }));
        }
        Command::Bench { sizes, repeats } => {
            let defaults = RunConfig::default();
            let sizes = sizes.unwrap_or(defaults.sizes);
            if sizes.is_empty() || sizes.contains(&0) {
                return Err(AppError::Config("bench sizes must be at least 1".into()));
            }
            let rows = bench::bench_runtime(&sizes, repeats.unwrap_or(defaults.repeats))?;
            print!("{}", bench::to_csv(&rows)?);
        }
        Command::Summarize { dir } => {
            let (trials, summary) = experiments::summarize_dir(&dir)?;
            print_json(&json!({ "trials": trials, "summary": summary }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let message = e.kind().to_string();
            let detail = e.render().to_string();
            let detail = detail.lines().next().unwrap_or(&message).trim_start_matches("error: ");
            eprintln!("{}", json!({ "error": { "kind": "usage", "message": detail } }));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            ExitCode::FAILURE
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use household_sid::config::{config_hash, RunConfig};
use household_sid::dataset::{load_dataset, save_dataset};
use household_sid::evaluation::{evaluate_many, sweep, EvalOptions, EvalReport, Grid, Method};
use household_sid::report::{render, sweep_csv, to_json, Format};
use household_sid::simulation::simulate;
use household_sid::{Error, Result};

#[derive(Parser)]
#[command(name = "household-sid", version, about = "Household speaker identification with graph label propagation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic dev/val household datasets.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Score one or more methods (plus the cosine baselines) on a dataset.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// CS, CSEA, 2CS, 2CSEA, LP, 2LP or 2LPEA; repeatable.
        #[arg(long)]
        method: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        allow_skip: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Grid search on dev households.
    Sweep {
        #[arg(long)]
        dev: PathBuf,
        /// JSON object mapping parameter names to value lists.
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Render a report file as a table.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "md")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig> {
    let cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    Ok(cfg.with_seed(seed))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, contents)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let data = simulate(&cfg.simulation)?;
            std::fs::create_dir_all(&out)?;
            save_dataset(out.join("dev.jsonl"), &data.dev)?;
            save_dataset(out.join("val.jsonl"), &data.val)?;
            let manifest = json!({
                "schema_version": 1,
                "seed": cfg.effective_seed(),
                "config_hash": cfg.hash(),
                "dev_households": data.dev.len(),
                "val_households": data.val.len(),
                "files": ["dev.jsonl", "val.jsonl"],
            });
            write(&out.join("manifest.json"), &format!("{}\n", serde_json::to_string_pretty(&manifest)?))?;
            eprintln!("wrote {} dev and {} val households to {}", data.dev.len(), data.val.len(), out.display());
        }
        Command::Evaluate { data, config, method, out, allow_skip, seed } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let households = load_dataset(&data)?;
            let methods = if method.is_empty() {
                vec![None]
            } else {
                method.iter().map(|m| m.parse::<Method>().map(Some)).collect::<Result<Vec<_>>>()?
            };
            let specs = methods.into_iter().map(|m| cfg.method_spec(m)).collect::<Result<Vec<_>>>()?;
            let mut report = evaluate_many(&households, &specs, EvalOptions { include_baselines: true, allow_skip })?;
            report.config_hash = Some(cfg.hash());
            report.seed = Some(cfg.effective_seed());
            write(&out, &to_json(&report)?)?;
            for row in &report.rows {
                let secs: f64 = row.households.iter().map(|h| h.elapsed.as_secs_f64()).sum();
                eprintln!("{:<60} SIER {:6.2}%  ({secs:.2}s)", row.label, row.overall.sier * 100.0);
            }
        }
        Command::Sweep { dev, grid, config, method, out, seed } => {
            let cfg = load_config(config.as_deref(), seed)?;
            let households = load_dataset(&dev)?;
            let grid: Grid = serde_json::from_str(&std::fs::read_to_string(&grid)?)
                .map_err(|e| Error::Config(format!("sweep grid: {e}")))?;
            let method = method.map(|m| m.parse::<Method>()).transpose()?;
            let template = cfg.method_spec(method)?;
            let result = sweep(&households, &grid, &template)?;
            let hash = config_hash(&(&cfg, &grid));
            write(&out, &sweep_csv(&result, Some(&hash), Some(cfg.effective_seed())))?;
            let best = json!({
                "config_hash": hash,
                "seed": cfg.effective_seed(),
                "sier": result.rows[result.best].sier,
                "spec": result.best_spec,
            });
            let best = format!("{}\n", serde_json::to_string_pretty(&best)?);
            write(&out.with_extension("best.json"), &best)?;
            print!("{best}");
        }
        Command::Report { input, format, out, seed: _ } => {
            let format: Format = format.parse()?;
            let report: EvalReport = serde_json::from_str(&std::fs::read_to_string(&input)?)
                .map_err(|e| Error::Validation(format!("{}: {e}", input.display())))?;
            let text = render(&report, format)?;
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

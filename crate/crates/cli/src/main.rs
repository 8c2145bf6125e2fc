//! `lrv`: run Monte Carlo grids, estimate long-run variances from CSV data
//! and render result tables.
//!
//! Exit codes: 0 on success, 2 on configuration or input errors, 3 on
//! numerical failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dkhac::dgp::{dump_csv, generate, DgpSpec, Model};
use dkhac::har_tests::{clear_cv_cache, load_cv_cache, save_cv_cache};
use dkhac::harness::{
    emit_table, estimate_lrv, read_results, run_experiment_resume, write_table, BandwidthRule, EstimatorName,
    EstimatorSpec, ExperimentConfig, RunOptions, TableFormat,
};
use dkhac::{LrvError, Result, ScoreMatrix};
use log::{info, warn};
use serde_json::json;

#[derive(Parser)]
#[command(name = "lrv", version, about = "Double-kernel HAC long-run variance estimation and HAR test simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo grid; an existing output file is resumed.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Result file; the format follows the extension (.csv, .json, .md).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        reps: Option<usize>,
        /// Fixed-b critical-value cache file.
        #[arg(long)]
        cv_cache: Option<PathBuf>,
        /// Ignore the cached critical values and simulate them again.
        #[arg(long)]
        regen_cv: bool,
        /// Recompute every cell even if the output file holds it.
        #[arg(long)]
        fresh: bool,
    },
    /// Estimate the LRV of the score columns of a CSV file and print JSON.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        /// dk-hac, hac-qs, nw or ewc.
        #[arg(long, default_value = "dk-hac")]
        estimator: String,
        /// joint-plugin, andrews, nw94, fixed:<b1>,<b2>, fixed-b:<b>, auto or terms:<n>.
        #[arg(long)]
        bandwidth: Option<String>,
        /// Skip the `T / (T - p)` small-sample factor.
        #[arg(long)]
        no_dof_adjust: bool,
    },
    /// Render a result file as csv, json or markdown.
    Table {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "markdown")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one simulated data set as `y,x` columns.
    Simulate {
        #[arg(long)]
        model: Model,
        #[arg(long, default_value_t = 200)]
        t: usize,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            out,
            threads,
            seed,
            reps,
            cv_cache,
            regen_cv,
            fresh,
        } => run(&config, out, threads, seed, reps, cv_cache.as_deref(), regen_cv, fresh),
        Command::Estimate {
            input,
            estimator,
            bandwidth,
            no_dof_adjust,
        } => estimate(&input, &estimator, bandwidth.as_deref(), !no_dof_adjust),
        Command::Table { input, format, out } => table(&input, &format, out.as_deref()),
        Command::Simulate {
            model,
            t,
            delta,
            seed,
            out,
        } => simulate(model, t, delta, seed, &out),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run(
    config: &Path,
    out: Option<PathBuf>,
    threads: Option<usize>,
    seed: Option<u64>,
    reps: Option<usize>,
    cv_cache: Option<&Path>,
    regen_cv: bool,
    fresh: bool,
) -> Result<()> {
    let mut cfg = ExperimentConfig::from_file(config)?;
    if let Some(out) = out {
        cfg.out_path = Some(out);
    }
    if let Some(n) = threads {
        cfg.threads = n;
    }
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(n) = reps {
        cfg.n_reps = n;
    }
    cfg.validate()?;

    if regen_cv {
        clear_cv_cache();
    } else if let Some(path) = cv_cache {
        let n = load_cv_cache(path)?;
        info!("loaded {n} cached critical values from {}", path.display());
    }

    let done = match &cfg.out_path {
        Some(path) if path.exists() && !fresh => {
            let prior = read_results(path)?;
            info!("resuming: {} finished cells in {}", prior.len(), path.display());
            prior
        }
        _ => Vec::new(),
    };
    let results = run_experiment_resume(&cfg, &done)?;

    if let Some(path) = cv_cache {
        save_cv_cache(path)?;
    }
    match &cfg.out_path {
        Some(path) => {
            let format = TableFormat::from_path(path);
            if format == TableFormat::Markdown {
                warn!("markdown output cannot be resumed; prefer .csv or .json");
            }
            write_table(&results, path, format)?;
        }
        None => print!("{}", emit_table(&results, TableFormat::Csv)?),
    }
    Ok(())
}

fn read_scores(path: &Path) -> Result<(Vec<String>, ScoreMatrix)> {
    let bad = |e: csv::Error| LrvError::InvalidInput(format!("{}: {e}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(bad)?;
    let header: Vec<String> = reader.headers().map_err(bad)?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(bad)?;
        let row = record
            .iter()
            .map(|f| {
                f.trim().parse::<f64>().map_err(|_| {
                    LrvError::InvalidInput(format!("{}: row {}: '{f}' is not a number", path.display(), i + 2))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, ScoreMatrix::from_rows(&rows)?))
}

fn estimate(input: &Path, estimator: &str, bandwidth: Option<&str>, dof_adjust: bool) -> Result<()> {
    let name: EstimatorName = estimator.parse()?;
    let spec: EstimatorSpec = match bandwidth {
        Some(b) => format!("{}/{}", name.name(), b.parse::<BandwidthRule>()?).parse()?,
        None => name.name().parse()?,
    };
    let (columns, v) = read_scores(input)?;
    let opts = RunOptions {
        dof_adjust,
        ..RunOptions::default()
    };
    let choice = estimate_lrv(&v, &spec, &opts)?;
    let est = &choice.estimate;
    let p = est.p();
    let matrix: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| est.j[(i, j)]).collect()).collect();
    let report = json!({
        "estimator": spec.label(),
        "t": v.t(),
        "columns": columns,
        "b1": choice.b1,
        "b2": choice.b2,
        "bandwidth_fallback": choice.fallback,
        "df": est.df(),
        "psd_repaired": est.psd_repaired,
        "min_eig": est.min_eig,
        "lrv": matrix,
    });
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| LrvError::Io(e.to_string()))?);
    Ok(())
}

fn table(input: &Path, format: &str, out: Option<&Path>) -> Result<()> {
    let results = read_results(input)?;
    let format: TableFormat = format.parse()?;
    match out {
        Some(path) => write_table(&results, path, format),
        None => {
            print!("{}", emit_table(&results, format)?);
            Ok(())
        }
    }
}

fn simulate(model: Model, t: usize, delta: f64, seed: u64, out: &Path) -> Result<()> {
    let sim = generate(&DgpSpec { model, t, delta, seed })?;
    dump_csv(&sim, out)
}

//! Command-line laboratory for Szegő state asymptotics on odd spheres.
//!
//! `run` executes a TOML-described experiment and grades the computed
//! values against the leading-term predictions, `validate` resolves a
//! configuration without computing anything, `emit-plots` derives
//! plot-ready tables from a finished run, and `list-builtins` documents
//! the built-in immersion families.
//!
//! Exit codes: 0 when every graded check passes, 1 when the run finished
//! but a check failed, 2 for hard errors (bad configuration, I/O, module
//! failures that prevent a verdict).

mod config;
mod experiment;
mod plots;
mod report;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use config::ExperimentConfig;
use plots::PlotKind;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Environment variable consulted for the worker-thread count when
/// `--threads` is absent.
const THREADS_VAR: &str = "SZEGOLAB_THREADS";

#[derive(Parser)]
#[command(
    name = "szegolab",
    version,
    about = "Quadrature laboratory for Legendrian state asymptotics on odd spheres"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and grade it against its tolerances.
    Run(RunArgs),
    /// Check a configuration and print the resolved experiment.
    Validate {
        /// Path to the experiment configuration (TOML).
        #[arg(long)]
        config: PathBuf,
    },
    /// Derive plot-ready tables from a finished run.
    EmitPlots {
        /// Path to the experiment configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Which table to derive.
        #[arg(long, value_enum)]
        kind: PlotKind,
        /// Directory holding the results file; tables are written here.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Describe the built-in immersion families.
    ListBuiltins,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for results, logs, report and the value cache.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads; defaults to SZEGOLAB_THREADS, then to one per core.
    #[arg(long)]
    threads: Option<usize>,
    /// Raise the lower end of the level range without editing the file.
    #[arg(long)]
    k_min: Option<usize>,
    /// Lower the upper end of the level range without editing the file.
    #[arg(long)]
    k_max: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Validate { config } => validate(&config).map(|_| true),
        Command::EmitPlots {
            config,
            kind,
            out_dir,
        } => emit_plots(&config, kind, &out_dir).map(|_| true),
        Command::ListBuiltins => {
            print!("{}", builtins_text());
            Ok(true)
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let config = ExperimentConfig::load(path)?;
    Ok(config)
}

/// Resolves the worker-thread count: the flag wins, then the environment
/// variable, then rayon's default.  A malformed variable is a hard error,
/// not a silent fallback.
fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_VAR) {
        Ok(text) => {
            let parsed: usize = text
                .trim()
                .parse()
                .with_context(|| format!("{THREADS_VAR} must be a positive integer, got {text:?}"))?;
            if parsed == 0 {
                anyhow::bail!("{THREADS_VAR} must be a positive integer, got 0");
            }
            Ok(Some(parsed))
        }
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(e).context(format!("reading {THREADS_VAR}")),
    }
}

/// Runs the experiment; Ok(false) is a finished run with a failed check.
fn run(args: RunArgs) -> Result<bool> {
    if let Some(threads) = thread_count(args.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("sizing the worker pool")?;
    }

    let mut config = load(&args.config)?;
    if let Some(k_min) = args.k_min {
        config.k_range.min = k_min;
    }
    if let Some(k_max) = args.k_max {
        config.k_range.max = k_max;
    }
    config.validate()?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating output directory {}", args.out_dir.display()))?;

    let data = experiment::run(&config, &args.out_dir)?;
    let items = report::grade(&config, &data);
    let text = report::render(&items);

    report::write_results_csv(&args.out_dir.join(&config.output.results), &data)?;
    report::write_json_log(&args.out_dir.join(&config.output.log), &config, &data, &items)?;
    let report_path = args.out_dir.join(&config.output.report);
    std::fs::write(&report_path, &text)
        .with_context(|| format!("writing report {}", report_path.display()))?;

    print!("{text}");
    Ok(report::verdict(&items))
}

fn validate(path: &Path) -> Result<()> {
    let config = load(path)?;
    config.validate()?;
    let experiment = experiment::resolve(&config)?;
    println!("{}", experiment.summary());
    println!("configuration is valid");
    Ok(())
}

fn emit_plots(path: &Path, kind: PlotKind, out_dir: &Path) -> Result<()> {
    let config = load(path)?;
    config.validate()?;
    let written = plots::emit(&config, out_dir, kind)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn builtins_text() -> String {
    [
        "knot",
        "    parameters = [a]: the circle t |-> (cos t, e^{ia} sin t) in S^3.",
        "    Legendrian for every phase a; model dimension n = 1.",
        "torus-product",
        "    parameters = [a_1, ..., a_m] with m >= 2: the product of m",
        "    phase-shifted planar circles, scaled to the unit sphere of C^{2m};",
        "    an isotropic m-torus, model dimension n = 2m - 1.",
        "",
        "Both families accept an f_lambda amplitude: kind = \"unit\" (default)",
        "or kind = \"cosine\" with amplitude and frequency, which weights the",
        "immersion by 1 + amplitude * cos(frequency * t_1).",
        "",
    ]
    .join("\n")
}

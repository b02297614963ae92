use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sfde_core::error::Error;
use sfde_core::experiments::tasks::{
    fit_curve_report, read_curve_csv, run_converge, run_lyapunov_scan, run_reconstruct,
    run_simulate, run_verify, ConvergeConfig, LyapunovScanConfig, ReconstructConfig,
    SimulateConfig, TaskConfig, TaskOutput, VerifyConfig,
};
use sfde_core::experiments::{
    config_hash, run_and_write, ExperimentConfig, ExperimentReport, ExperimentSpec,
    REGISTERED_EXPERIMENTS,
};
use sfde_core::models::REGISTERED_MODELS;

#[derive(Parser)]
#[command(
    name = "sfde",
    version,
    about = "Simulate and check stochastic delay equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an ensemble and write its snapshots.
    Simulate(Common),
    /// Check structural conditions on sampled segments.
    Verify(Common),
    /// Estimate Lyapunov drift margins and diameter moments.
    LyapunovScan(Common),
    /// Compute a Wasserstein convergence curve and fit its rate.
    Converge(Common),
    /// Fit exponential and subexponential rates to a stored curve.
    FitRate {
        /// CSV with columns t, W and optionally CI.
        #[arg(long)]
        curve: PathBuf,
        /// α of the competing subexponential shape.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Run a registered reproduction experiment.
    Repro {
        /// Experiment name, e.g. ou-boundary.
        name: String,
        /// TOML config; the defaults are used when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recover a path's history from the quadratic variation of a later window.
    Reconstruct {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the model and experiment names accepted in configs.
    ListModels,
}

/// Config and usage problems exit with 2, everything else with 1.
fn exit_for(err: &Error) -> ExitCode {
    match err {
        Error::Config(_) | Error::Io(_) | Error::InvalidArgument(_) | Error::Csv(_) => {
            ExitCode::from(2)
        }
        _ => ExitCode::from(1),
    }
}

fn print_report(report: &ExperimentReport, dir: &Path) -> ExitCode {
    for v in &report.verdicts {
        println!(
            "{} {}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            v.criterion,
            v.detail
        );
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    println!("wrote {}", dir.display());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run_task<T: TaskConfig>(
    common: &Common,
    run: fn(&T) -> sfde_core::error::Result<TaskOutput>,
) -> sfde_core::error::Result<ExitCode> {
    let mut cfg = T::from_file(&common.config)
        .map_err(|e| Error::Config(format!("{}: {e}", common.config.display())))?;
    if let Some(s) = common.seed {
        *cfg.seed_mut() = s;
    }
    if let Some(o) = &common.out {
        *cfg.out_dir_mut() = o.clone();
    }
    let out = run(&cfg)?;
    let dir = cfg.run_dir()?;
    out.write(&dir)?;
    Ok(print_report(&out.report, &dir))
}

fn load_or_default<T: TaskConfig + Default>(path: Option<&Path>) -> sfde_core::error::Result<T> {
    match path {
        Some(p) => T::from_file(p).map_err(|e| Error::Config(format!("{}: {e}", p.display()))),
        None => Ok(T::default()),
    }
}

fn dispatch(cmd: Command) -> sfde_core::error::Result<ExitCode> {
    match cmd {
        Command::Simulate(c) => run_task::<SimulateConfig>(&c, run_simulate),
        Command::Verify(c) => run_task::<VerifyConfig>(&c, run_verify),
        Command::LyapunovScan(c) => run_task::<LyapunovScanConfig>(&c, run_lyapunov_scan),
        Command::Converge(c) => run_task::<ConvergeConfig>(&c, run_converge),
        Command::FitRate { curve, alpha, out } => {
            let points = read_curve_csv(std::fs::File::open(&curve)?)?;
            let report = fit_curve_report(&points, alpha)?;
            let dir = out.join(format!("fit_rate-{}", config_hash(&(&points, alpha))?));
            report.write(&dir)?;
            Ok(print_report(&report, &dir))
        }
        Command::Repro {
            name,
            config,
            seed,
            out,
        } => {
            let wanted = ExperimentSpec::default_for(&name)?;
            let mut cfg = match &config {
                Some(p) => ExperimentConfig::from_file(p)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
                None => ExperimentConfig::new(0, wanted.clone()),
            };
            if cfg.experiment.name() != wanted.name() {
                return Err(Error::Config(format!(
                    "config describes `{}`, not `{}`",
                    cfg.experiment.name(),
                    wanted.name()
                )));
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            let (report, dir) = run_and_write(&cfg)?;
            Ok(print_report(&report, &dir))
        }
        Command::Reconstruct { config, seed, out } => {
            let mut cfg: ReconstructConfig = load_or_default(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            let res = run_reconstruct(&cfg)?;
            let dir = cfg.run_dir()?;
            res.write(&dir)?;
            Ok(print_report(&res.report, &dir))
        }
        Command::ListModels => {
            println!("models:");
            for m in REGISTERED_MODELS {
                println!("  {m}");
            }
            println!("experiments:");
            for e in REGISTERED_EXPERIMENTS {
                println!("  {}", e.replace('_', "-"));
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}

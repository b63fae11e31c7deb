use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hdcox::harness::{
    cmd_fit, cmd_infer, cmd_lifespan, cmd_simulate, exit_code, FitArgs, InferArgs, LambdaChoice, LifespanArgs,
    PipelineConfig, SimulateArgs,
};
use hdcox::precision::{CvCriterion, ThetaVariant};
use hdcox::simulate::SimSetting;
use hdcox::{CoxError, Result};

/// Debiased lasso inference for high-dimensional Cox models.
#[derive(Parser, Debug)]
#[command(name = "hdcox", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run replicated simulation studies and write summary tables.
    Simulate(SimulateCli),
    /// Fit the lasso at a single penalty, by cross-validation, or along a path.
    Fit(FitCli),
    /// Debiased estimates, confidence intervals and p-values for a CSV dataset.
    Infer(InferCli),
    /// Solution-path life-spans grouped by debiased significance.
    Lifespan(LifespanCli),
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for fold assignment and data generation.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of cross-validation folds.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Number of points on the lasso penalty grid.
    #[arg(long, default_value_t = 100)]
    nlambda: usize,
    /// Confidence level of the reported intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Criterion for cross-validating the precision estimate.
    #[arg(long, value_enum, default_value_t = Criterion::Frobenius)]
    cv_criterion: Criterion,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum Criterion {
    Frobenius,
    TraceSquare,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum Variant {
    Hat,
    Tilde,
}

impl From<Variant> for ThetaVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Hat => ThetaVariant::Hat,
            Variant::Tilde => ThetaVariant::Tilde,
        }
    }
}

impl Common {
    fn config(&self) -> Result<PipelineConfig> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(CoxError::InvalidInput(format!("--level must lie in (0, 1), got {}", self.level)));
        }
        if self.nlambda == 0 {
            return Err(CoxError::InvalidInput("--nlambda must be positive".into()));
        }
        Ok(PipelineConfig {
            folds: self.folds,
            n_lambda: self.nlambda,
            q: 1.0 - self.level,
            criterion: match self.cv_criterion {
                Criterion::Frobenius => CvCriterion::Frobenius,
                Criterion::TraceSquare => CvCriterion::TraceSquare,
            },
            ..PipelineConfig::default()
        })
    }
}

#[derive(Args, Debug)]
struct SimulateCli {
    /// Setting ids (1-16, or 101/103 for the low-dimensional warm-up examples).
    #[arg(long, value_delimiter = ',')]
    setting: Vec<u32>,
    /// Settings read from TOML files, in addition to --setting.
    #[arg(long)]
    setting_file: Vec<PathBuf>,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, value_enum, default_value_t = Variant::Hat)]
    theta_variant: Variant,
    /// Also report the unpenalized maximum partial likelihood intervals.
    #[arg(long)]
    mple: bool,
    /// Worker threads; results do not depend on this.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct FitCli {
    /// Input CSV with header time,status,z1,...,zp.
    csv: PathBuf,
    /// Penalty: `cv` or a nonnegative number.
    #[arg(long, default_value = "cv")]
    lambda: String,
    /// Report every point of the penalty grid.
    #[arg(long)]
    path: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct InferCli {
    /// Input CSV with header time,status,z1,...,zp.
    csv: PathBuf,
    #[arg(long, value_enum, default_value_t = Variant::Hat)]
    theta_variant: Variant,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct LifespanCli {
    /// Input CSV with header time,status,z1,...,zp.
    csv: PathBuf,
    #[command(flatten)]
    common: Common,
}

fn with_workers<T>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CoxError::InvalidInput(e.to_string()))?
        .install(f)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => {
            let mut settings = a.setting.iter().map(|&id| SimSetting::lookup(id)).collect::<Result<Vec<_>>>()?;
            for path in &a.setting_file {
                let text = std::fs::read_to_string(path).map_err(|e| CoxError::Io(format!("{}: {e}", path.display())))?;
                settings.push(SimSetting::from_toml(&text)?);
            }
            if settings.is_empty() {
                return Err(CoxError::InvalidInput("give at least one --setting or --setting-file".into()));
            }
            let args = SimulateArgs {
                settings,
                reps: a.reps,
                seed: a.common.seed,
                variant: a.theta_variant.into(),
                with_mple: a.mple,
                out: a.common.out.clone(),
                workers: a.workers,
                config: a.common.config()?,
            };
            for run in cmd_simulate(&args)? {
                println!(
                    "setting {}: {} replications ok, {} failed",
                    run.setting.id,
                    run.records.len(),
                    run.failures.len()
                );
            }
        }
        Command::Fit(a) => {
            let args = FitArgs {
                csv: a.csv,
                lambda: a.lambda.parse::<LambdaChoice>()?,
                path: a.path,
                out: a.common.out.clone(),
                seed: a.common.seed,
                config: a.common.config()?,
            };
            let fits = cmd_fit(&args)?;
            println!("{} fit(s) written to {}", fits.len(), args.out.display());
        }
        Command::Infer(a) => {
            let args = InferArgs {
                csv: a.csv,
                variant: a.theta_variant.into(),
                out: a.common.out.clone(),
                seed: a.common.seed,
                config: a.common.config()?,
            };
            with_workers(a.workers, || cmd_infer(&args))?;
            println!("report written to {}", args.out.join("infer.tsv").display());
        }
        Command::Lifespan(a) => {
            let args = LifespanArgs {
                csv: a.csv,
                n_lambda: a.common.nlambda,
                out: a.common.out.clone(),
                seed: a.common.seed,
                config: a.common.config()?,
            };
            let report = cmd_lifespan(&args)?;
            let show = |m: Option<f64>| m.map_or_else(|| "NA".to_string(), |v| format!("{v:.3}"));
            println!(
                "median life-span: significant {}, insignificant {}",
                show(report.median_significant),
                show(report.median_insignificant)
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use super::aggregate::{log_tuning, summarize, Method, MethodResult, ReplicationRecord, TuningRecord};
use super::io::{read_csv, NamedDataset};
use super::{check_constant_columns, median, run_pipeline, to_vec, PipelineConfig, PipelineOutput};
use crate::error::{CoxError, Result};
use crate::inference::fit_mple;
use crate::lasso::{cv_lasso_with, fit_lasso_with, fit_path_with, kkt_residual, lambda_grid, CoxFit};
use crate::precision::{CvCriterion, ThetaVariant};
use crate::simulate::{generate, replication_rng, SimSetting};
use crate::surv::score;

/// Replications may fail individually; more than this fraction fails the run.
const MAX_FAILURE_FRACTION: f64 = 0.05;
const CV_STREAM: u64 = 2;
const SIGNIFICANCE: f64 = 0.05;
const EARLY_PATH_POSITIONS: usize = 25;

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), fmt)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CoxError::Io(format!("{}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CoxError::Io(format!("{}: {e}", dir.display())))
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CoxError::InvalidInput(format!("cannot start {workers} workers: {e}")))
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    replications: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_variant: Option<ThetaVariant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<String>,
    level: f64,
    folds: usize,
    n_lambda: usize,
    cv_criterion: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    settings: Vec<SimSetting>,
}

impl Manifest {
    fn new(command: &'static str, seed: u64, cfg: &PipelineConfig) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            input: None,
            replications: None,
            theta_variant: None,
            lambda: None,
            level: 1.0 - cfg.q,
            folds: cfg.folds,
            n_lambda: cfg.n_lambda,
            cv_criterion: match cfg.criterion {
                CvCriterion::Frobenius => "frobenius",
                CvCriterion::TraceSquare => "trace-square",
            },
            settings: Vec::new(),
        }
    }

    fn write(&self, dir: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| CoxError::Io(e.to_string()))?;
        write_file(&dir.join("manifest.toml"), &text)
    }
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub settings: Vec<SimSetting>,
    pub reps: usize,
    pub seed: u64,
    pub variant: ThetaVariant,
    /// Also fit the unpenalized estimator and report its Wald intervals.
    pub with_mple: bool,
    pub out: PathBuf,
    pub workers: usize,
    pub config: PipelineConfig,
}

/// All successful replications of one setting, in replication order.
#[derive(Debug, Clone)]
pub struct SimulationRun {
    pub setting: SimSetting,
    pub records: Vec<ReplicationRecord>,
    pub failures: Vec<(usize, String)>,
}

impl SimulationRun {
    pub fn tuning(&self) -> TuningRecord {
        log_tuning(self.setting.id, &self.records)
    }
}

fn replicate(setting: &SimSetting, rep: usize, seed: u64, cfg: &PipelineConfig, with_mple: bool) -> Result<ReplicationRecord> {
    let data = generate(setting, rep, seed)?;
    let cv_seed = replication_rng(seed, setting.id, rep, CV_STREAM).next_u64();
    let out = run_pipeline(&data, cfg, cv_seed)?;
    let mple = if with_mple {
        let fit = fit_mple(&data)?;
        if !fit.converged {
            return Err(CoxError::Numerical("MPLE did not converge".into()));
        }
        Some(MethodResult::from(&fit.intervals(cfg.q)?))
    } else {
        None
    };
    Ok(ReplicationRecord {
        replication: rep,
        beta_hat: to_vec(&out.lasso.beta),
        lambda: out.lasso.lambda,
        lambda_n: out.cv_clime.lambda_n_cv,
        censoring_rate: data.censoring_rate(),
        hat: MethodResult::from(&out.hat),
        tilde: MethodResult::from(&out.tilde),
        mple,
    })
}

/// Runs `reps` replications of one setting on the current thread pool.
/// Replications are independent and keyed by index, so the result does not
/// depend on scheduling.
pub fn simulate_setting(
    setting: &SimSetting,
    reps: usize,
    seed: u64,
    cfg: &PipelineConfig,
    with_mple: bool,
) -> Result<SimulationRun> {
    if reps == 0 {
        return Err(CoxError::InvalidInput("replications must be at least 1".into()));
    }
    setting.validate()?;
    let results: Vec<Result<ReplicationRecord>> = (0..reps)
        .into_par_iter()
        .map(|rep| replicate(setting, rep, seed, cfg, with_mple))
        .collect();
    let mut records = Vec::with_capacity(reps);
    let mut failures = Vec::new();
    for (rep, r) in results.into_iter().enumerate() {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => {
                log::warn!("setting {} replication {rep} (seed {seed}) failed: {e}", setting.id);
                failures.push((rep, e.to_string()));
            }
        }
    }
    if failures.len() as f64 > MAX_FAILURE_FRACTION * reps as f64 {
        return Err(CoxError::Numerical(format!(
            "setting {}: {} of {reps} replications failed",
            setting.id,
            failures.len()
        )));
    }
    Ok(SimulationRun { setting: setting.clone(), records, failures })
}

/// Runs every requested setting and writes `summary.tsv`, `coords.tsv`,
/// `tuning.tsv`, `replications.tsv` and `manifest.toml` into `args.out`.
pub fn cmd_simulate(args: &SimulateArgs) -> Result<Vec<SimulationRun>> {
    ensure_dir(&args.out)?;
    let pool = thread_pool(args.workers)?;
    let runs = pool.install(|| {
        args.settings
            .iter()
            .map(|s| simulate_setting(s, args.reps, args.seed, &args.config, args.with_mple))
            .collect::<Result<Vec<_>>>()
    })?;

    let methods: Vec<Method> = std::iter::once(match args.variant {
        ThetaVariant::Hat => Method::Hat,
        ThetaVariant::Tilde => Method::Tilde,
    })
    .chain(args.with_mple.then_some(Method::Mple))
    .collect();

    let mut summary = String::from(
        "setting\tmethod\tgroup\treplications\tbias_lasso\tbias_lasso_se\tbias_debiased\tbias_debiased_se\t\
         coverage\tcoverage_se\twidth\twidth_se\tp_value\tp_value_se\n",
    );
    let mut coords = String::from(
        "setting\tmethod\tcoordinate\tbeta0\tcovered\treplications\tcoverage\tbias_lasso\tbias_debiased\twidth\tp_value\n",
    );
    let mut tuning =
        String::from("setting\treplications\tlambda_n_mean\tlambda_n_median\tlambda_mean\tlambda_median\n");
    let mut reps = String::from("setting\treplication\tstatus\tcensoring_rate\tlambda\tlambda_n\n");
    for run in &runs {
        let id = run.setting.id;
        for &m in &methods {
            let (rows, cs) = summarize(id, &run.setting.beta0, &run.records, m);
            for r in rows {
                let _ = writeln!(
                    summary,
                    "{id}\t{m}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    r.group,
                    r.replication_count,
                    fmt_opt(r.mean_bias_lasso),
                    fmt_opt(r.se_bias_lasso),
                    fmt(r.mean_bias_debiased),
                    fmt(r.se_bias_debiased),
                    fmt(r.empirical_coverage),
                    fmt(r.se_coverage),
                    fmt(r.mean_width),
                    fmt(r.se_width),
                    fmt(r.mean_p_value),
                    fmt(r.se_p_value),
                );
            }
            for c in cs {
                let _ = writeln!(
                    coords,
                    "{id}\t{m}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    c.coordinate + 1,
                    c.beta0,
                    c.covered,
                    c.replication_count,
                    fmt(c.coverage()),
                    fmt_opt(c.mean_bias_lasso),
                    fmt(c.mean_bias_debiased),
                    fmt(c.mean_width),
                    fmt(c.mean_p_value),
                );
            }
        }
        let t = run.tuning();
        let _ = writeln!(
            tuning,
            "{id}\t{}\t{:.6e}\t{:.6e}\t{:.6e}\t{:.6e}",
            t.replication_count, t.lambda_n_mean, t.lambda_n_median, t.lambda_mean, t.lambda_median
        );
        let mut ok = run.records.iter().peekable();
        let mut failed = run.failures.iter().peekable();
        for rep in 0..args.reps {
            if let Some(r) = ok.next_if(|r| r.replication == rep) {
                let _ = writeln!(
                    reps,
                    "{id}\t{rep}\tok\t{}\t{:.6e}\t{:.6e}",
                    fmt(r.censoring_rate),
                    r.lambda,
                    r.lambda_n
                );
            } else if failed.next_if(|f| f.0 == rep).is_some() {
                let _ = writeln!(reps, "{id}\t{rep}\tfailed\tNA\tNA\tNA");
            }
        }
    }
    write_file(&args.out.join("summary.tsv"), &summary)?;
    write_file(&args.out.join("coords.tsv"), &coords)?;
    write_file(&args.out.join("tuning.tsv"), &tuning)?;
    write_file(&args.out.join("replications.tsv"), &reps)?;

    let mut manifest = Manifest::new("simulate", args.seed, &args.config);
    manifest.replications = Some(args.reps);
    manifest.theta_variant = Some(args.variant);
    manifest.settings = args.settings.clone();
    manifest.write(&args.out)?;
    Ok(runs)
}

fn load(csv: &Path) -> Result<NamedDataset> {
    let nd = read_csv(csv)?;
    nd.data.require_events()?;
    check_constant_columns(&nd.data, &nd.names)?;
    Ok(nd)
}

#[derive(Debug, Clone)]
pub struct InferArgs {
    pub csv: PathBuf,
    pub variant: ThetaVariant,
    pub out: PathBuf,
    pub seed: u64,
    pub config: PipelineConfig,
}

/// Debiased inference on a CSV dataset, written to `infer.tsv` with one row
/// per covariate.
pub fn cmd_infer(args: &InferArgs) -> Result<PipelineOutput> {
    let nd = load(&args.csv)?;
    let out = run_pipeline(&nd.data, &args.config, args.seed)?;
    let inf = match args.variant {
        ThetaVariant::Hat => &out.hat,
        ThetaVariant::Tilde => &out.tilde,
    };
    let mut text = String::from("variable\tbeta_hat\tb_hat\tse\tci_lo\tci_hi\tp_value\twarnings\n");
    for (j, name) in nd.names.iter().enumerate() {
        let warning = match inf.warnings[j] {
            None => "-".to_string(),
            Some(w) => format!("{w:?}"),
        };
        let _ = writeln!(
            text,
            "{name}\t{}\t{}\t{}\t{}\t{}\t{}\t{warning}",
            out.lasso.beta[j], inf.b_hat[j], inf.se[j], inf.ci_lower[j], inf.ci_upper[j], inf.p_values[j]
        );
    }
    ensure_dir(&args.out)?;
    write_file(&args.out.join("infer.tsv"), &text)?;
    let mut manifest = Manifest::new("infer", args.seed, &args.config);
    manifest.input = Some(args.csv.display().to_string());
    manifest.theta_variant = Some(args.variant);
    manifest.write(&args.out)?;
    Ok(out)
}

/// How often each covariate is active along the path, and how that relates
/// to its debiased significance.
#[derive(Debug, Clone, PartialEq)]
pub struct LifespanReport {
    pub names: Vec<String>,
    /// Fraction of path positions at which the covariate is nonzero.
    pub lifespan: Vec<f64>,
    pub p_values: Vec<f64>,
    pub significant: Vec<bool>,
    /// Active somewhere in the first 25 path positions.
    pub early: Vec<bool>,
    pub median_significant: Option<f64>,
    pub median_insignificant: Option<f64>,
}

pub fn lifespan_report(
    nd: &NamedDataset,
    n_lambda: usize,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<LifespanReport> {
    let data = &nd.data;
    let grid = lambda_grid(data, n_lambda)?;
    let path = fit_path_with(data, &grid, &cfg.lasso)?;
    let p = data.p();
    let lifespan = path.active_fractions(p);
    let mut early = vec![false; p];
    for fit in path.fits.iter().take(EARLY_PATH_POSITIONS) {
        for &j in &fit.active_set {
            early[j] = true;
        }
    }
    let cfg = PipelineConfig { n_lambda, ..cfg.clone() };
    let out = run_pipeline(data, &cfg, seed)?;
    let p_values = to_vec(&out.hat.p_values);
    let significant: Vec<bool> = p_values.iter().map(|&pv| pv < SIGNIFICANCE).collect();
    let group_median = |flag: bool| {
        let xs: Vec<f64> = (0..p).filter(|&j| significant[j] == flag).map(|j| lifespan[j]).collect();
        (!xs.is_empty()).then(|| median(&xs))
    };
    Ok(LifespanReport {
        names: nd.names.clone(),
        median_significant: group_median(true),
        median_insignificant: group_median(false),
        lifespan,
        p_values,
        significant,
        early,
    })
}

#[derive(Debug, Clone)]
pub struct LifespanArgs {
    pub csv: PathBuf,
    pub n_lambda: usize,
    pub out: PathBuf,
    pub seed: u64,
    pub config: PipelineConfig,
}

/// Writes `lifespan.tsv` (one row per covariate) and `lifespan_summary.tsv`
/// (median life-span per significance group).
pub fn cmd_lifespan(args: &LifespanArgs) -> Result<LifespanReport> {
    let nd = load(&args.csv)?;
    let report = lifespan_report(&nd, args.n_lambda, &args.config, args.seed)?;
    let mut text = String::from("variable\tlifespan\tp_value\tsignificant\tactive_in_first_25\n");
    for j in 0..report.names.len() {
        let _ = writeln!(
            text,
            "{}\t{}\t{}\t{}\t{}",
            report.names[j], report.lifespan[j], report.p_values[j], report.significant[j], report.early[j]
        );
    }
    let mut summary = String::from("group\tcount\tmedian_lifespan\n");
    for (label, flag, med) in [
        ("significant", true, report.median_significant),
        ("insignificant", false, report.median_insignificant),
    ] {
        let count = report.significant.iter().filter(|&&s| s == flag).count();
        let _ = writeln!(summary, "{label}\t{count}\t{}", med.map_or_else(|| "NA".to_string(), |m| m.to_string()));
    }
    ensure_dir(&args.out)?;
    write_file(&args.out.join("lifespan.tsv"), &text)?;
    write_file(&args.out.join("lifespan_summary.tsv"), &summary)?;
    let mut manifest = Manifest::new("lifespan", args.seed, &PipelineConfig { n_lambda: args.n_lambda, ..args.config.clone() });
    manifest.input = Some(args.csv.display().to_string());
    manifest.write(&args.out)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaChoice {
    Cv,
    Value(f64),
}

impl std::str::FromStr for LambdaChoice {
    type Err = CoxError;
    fn from_str(s: &str) -> Result<Self> {
        if s == "cv" {
            return Ok(LambdaChoice::Cv);
        }
        match s.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(LambdaChoice::Value(v)),
            _ => Err(CoxError::InvalidInput(format!("lambda must be 'cv' or a nonnegative number, got '{s}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitArgs {
    pub csv: PathBuf,
    pub lambda: LambdaChoice,
    /// Report the whole grid instead of a single fit.
    pub path: bool,
    pub out: PathBuf,
    pub seed: u64,
    pub config: PipelineConfig,
}

/// Lasso fits written to `fit.tsv` (one row per fit) and `coefficients.tsv`.
pub fn cmd_fit(args: &FitArgs) -> Result<Vec<CoxFit>> {
    let nd = load(&args.csv)?;
    let data = &nd.data;
    let cfg = &args.config;
    let fits = if args.path {
        let grid = lambda_grid(data, cfg.n_lambda)?;
        fit_path_with(data, &grid, &cfg.lasso)?.fits
    } else {
        let lambda = match args.lambda {
            LambdaChoice::Value(v) => v,
            LambdaChoice::Cv => {
                let grid = lambda_grid(data, cfg.n_lambda)?;
                cv_lasso_with(data, &grid, cfg.folds, args.seed, &cfg.lasso)?.lambda_cv
            }
        };
        vec![fit_lasso_with(data, lambda, None, &cfg.lasso)?]
    };

    let mut table = String::from("lambda\tobjective\tkkt_residual\tconverged\titerations\tn_active\tactive\n");
    let mut coefs = String::from("lambda");
    for name in &nd.names {
        let _ = write!(coefs, "\t{name}");
    }
    coefs.push('\n');
    for fit in &fits {
        let s = score(data, fit.beta.view())?;
        let kkt = kkt_residual(s.view(), fit.beta.view(), fit.lambda);
        let active: Vec<&str> = fit.active_set.iter().map(|&j| nd.names[j].as_str()).collect();
        let _ = writeln!(
            table,
            "{}\t{}\t{kkt:e}\t{}\t{}\t{}\t{}",
            fit.lambda,
            fit.objective,
            fit.converged,
            fit.iterations,
            active.len(),
            if active.is_empty() { "-".to_string() } else { active.join(",") }
        );
        let _ = write!(coefs, "{}", fit.lambda);
        for b in fit.beta.iter() {
            let _ = write!(coefs, "\t{b}");
        }
        coefs.push('\n');
    }
    ensure_dir(&args.out)?;
    write_file(&args.out.join("fit.tsv"), &table)?;
    write_file(&args.out.join("coefficients.tsv"), &coefs)?;
    let mut manifest = Manifest::new("fit", args.seed, cfg);
    manifest.input = Some(args.csv.display().to_string());
    manifest.lambda = Some(match args.lambda {
        _ if args.path => "path".to_string(),
        LambdaChoice::Cv => "cv".to_string(),
        LambdaChoice::Value(v) => v.to_string(),
    });
    manifest.write(&args.out)?;
    Ok(fits)
}

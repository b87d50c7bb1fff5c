//! Command-line front end: `fit`, `test`, `simulate`, `generate`, `replay`.
//!
//! Every run writes `manifest.json` into its output directory with the fully
//! resolved command (explicit seed included), so `replay` reproduces the
//! numeric artifacts byte for byte. Wall time lives only in the manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use changeplane::admm::{cross_validate_lambda, lambda_grid};
use changeplane::simulate::{
    generate_dataset, power_design_gamma, write_estimation_table, write_power_table, write_replicate_table,
    ErrorFamily, ExperimentConfig, ExperimentKind, LambdaRule, SimScenario,
};
use changeplane::{
    bootstrap_pvalue, fit_changeplane, load_dataset, save_dataset, AdmmConfig, Dataset, ErrorKind, GammaInit,
    KernelSpec, Schema,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Quantile levels used by `simulate --quantiles`.
pub const DEFAULT_TAU_GRID: [f64; 3] = [0.25, 0.5, 0.75];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{module}: {source}")]
    Core {
        module: &'static str,
        #[source]
        source: changeplane::Error,
    },
    #[error("usage: {0}")]
    Usage(String),
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core { source, .. } => match source.kind() {
                ErrorKind::Config => EXIT_USAGE,
                ErrorKind::Numeric => EXIT_NUMERIC,
                ErrorKind::Data | ErrorKind::Io => EXIT_DATA,
            },
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_DATA,
        }
    }
}

fn tag(module: &'static str) -> impl Fn(changeplane::Error) -> CliError {
    move |source| CliError::Core { module, source }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "changeplane", version, about = "Change-plane quantile regression for functional responses")]
pub struct Cli {
    /// Worker threads for replicate pools (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Fit the change-plane model.
    Fit(FitArgs),
    /// Test for the existence of a subgroup (WAST with wild bootstrap).
    Test(TestArgs),
    /// Run a simulation campaign.
    Simulate(SimulateArgs),
    /// Write one simulated dataset as response and covariate tables.
    Generate(GenerateArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DataArgs {
    /// Response table: header row holds the grid, one curve per row.
    #[arg(long)]
    pub data: PathBuf,
    /// Covariate table with named columns, one row per subject.
    #[arg(long)]
    pub covariates: PathBuf,
    #[arg(long, default_value = "z1")]
    pub z1: String,
    /// Grouping columns after z1; `1` is a constant column.
    #[arg(long, value_delimiter = ',', default_value = "1,z2_1")]
    pub z2: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "1,x1,x2")]
    pub x: Vec<String>,
    /// Columns of x that interact with the subgroup indicator.
    #[arg(long, value_delimiter = ',', default_value = "x1,x2")]
    pub xtilde: Vec<String>,
}

impl DataArgs {
    fn schema(&self) -> Schema {
        Schema {
            z1: self.z1.clone(),
            z2: self.z2.clone(),
            x: self.x.clone(),
            xtilde: self.xtilde.clone(),
        }
    }

    fn load(&self) -> CliResult<Dataset> {
        for p in [&self.data, &self.covariates] {
            if !p.is_file() {
                return Err(CliError::Usage(format!("input file {} does not exist", p.display())));
            }
        }
        load_dataset(&self.data, &self.covariates, &self.schema()).map_err(tag("data"))
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SolverArgs {
    /// Reproducing kernel as family:sigma[,degree].
    #[arg(long, default_value = "gaussian:0.2")]
    pub kernel: String,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    /// Fixed bandwidth of the smoothed indicator.
    #[arg(long = "h")]
    pub h: Option<f64>,
    /// Constant of the bandwidth rate rule.
    #[arg(long = "h-const", default_value_t = 1.0)]
    pub h_const: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1)]
    pub multistart: usize,
    /// Starting γ (comma separated); zero when absent.
    #[arg(long = "gamma-init", value_delimiter = ',', allow_hyphen_values = true)]
    pub gamma_init: Option<Vec<f64>>,
}

impl SolverArgs {
    fn config(&self, tau: f64, lambda: f64, seed: u64) -> CliResult<AdmmConfig<f64>> {
        let kernel: KernelSpec<f64> = self.kernel.parse().map_err(tag("kernels"))?;
        let cfg = AdmmConfig {
            kernel,
            kappa: self.kappa,
            h: self.h,
            h_const: self.h_const,
            tol: self.tol,
            max_iter: self.max_iter,
            multistart: self.multistart,
            gamma_init: self.gamma_init.clone().map_or(GammaInit::Zero, GammaInit::Values),
            seed,
            ..AdmmConfig::new(tau, lambda)
        };
        cfg.validate().map_err(tag("admm"))?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PenaltyArgs {
    /// Penalty λ on the averaged loss scale.
    #[arg(long, conflicts_with = "lambda_tilde")]
    pub lambda: Option<f64>,
    /// Penalty as λ̃ with λ = λ̃/(nm).
    #[arg(long = "lambda-tilde")]
    pub lambda_tilde: Option<f64>,
    /// Folds for cross-validation when no penalty is given.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
}

/// How the penalty of a fit was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaChoice {
    pub rule: String,
    pub lambda: f64,
    pub lambda_tilde: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub cv_scores: Vec<f64>,
}

impl PenaltyArgs {
    fn resolve(&self, ds: &Dataset, cfg: &AdmmConfig<f64>, null_model: bool) -> CliResult<LambdaChoice> {
        let nm = (ds.n() * ds.m()) as f64;
        let (rule, lambda, cv_scores) = match (self.lambda, self.lambda_tilde) {
            (Some(l), _) => ("given", l, Vec::new()),
            (None, Some(lt)) => ("fixed", lt / nm, Vec::new()),
            (None, None) => {
                let grid = lambda_grid::<f64>(ds.n(), ds.m());
                let (l, scores) =
                    cross_validate_lambda(ds, cfg, &grid, self.folds, null_model).map_err(tag("admm"))?;
                ("cv", l, scores)
            }
        };
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(CliError::Usage(format!("lambda must be positive, got {lambda}")));
        }
        Ok(LambdaChoice {
            rule: rule.into(),
            lambda,
            lambda_tilde: lambda * nm,
            cv_scores,
        })
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long = "B", default_value_t = 500)]
    pub b: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub penalty: PenaltyArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Estimation,
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    Oracle,
    Fixed,
    Cv,
}

fn parse_family(s: &str) -> Result<ErrorFamily, String> {
    s.parse().map_err(|e: changeplane::Error| e.to_string())
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "estimation")]
    pub scenario: ScenarioKind,
    /// Error distribution: gaussian, t3, laplace or none.
    #[arg(long, default_value = "t3", value_parser = parse_family)]
    pub dist: ErrorFamily,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 30)]
    pub m: usize,
    /// Quantile levels, one cell each.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub tau: Vec<f64>,
    /// Use the levels 0.25, 0.5 and 0.75 instead of --tau.
    #[arg(long)]
    pub quantiles: bool,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[arg(long = "B", default_value_t = 200)]
    pub b: usize,
    /// Effect sizes ξ (default 1 for estimation, 0,0.25,0.5 for power).
    #[arg(long, value_delimiter = ',')]
    pub xi: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// λ rule (default oracle for estimation, fixed for power).
    #[arg(long = "lambda-rule", value_enum)]
    pub lambda_rule: Option<RuleKind>,
    #[arg(long = "lambda-tilde", default_value_t = 5.0)]
    pub lambda_tilde: f64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Campaign description in JSON; replaces the scenario flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Inlined campaign, filled from --config or the flags before running.
    #[arg(skip)]
    #[serde(default)]
    pub experiment: Option<ExperimentConfig>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[arg(long, default_value = "t3", value_parser = parse_family)]
    pub dist: ErrorFamily,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 30)]
    pub m: usize,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    pub xi: f64,
    /// Use the testing design hyperplane (35% subgroup).
    #[arg(long = "power-design")]
    pub power_design: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory (default: the one recorded in the manifest).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub started_unix: u64,
    pub wall_seconds: f64,
    pub outputs: Vec<String>,
}

fn resolve_seed(seed: &mut Option<u64>) -> u64 {
    *seed.get_or_insert_with(rand::random::<u64>)
}

/// Fills in every implicit input (seed, campaign config) so the command can
/// be replayed exactly.
fn resolve(command: &mut Command) -> CliResult<u64> {
    match command {
        Command::Fit(a) => Ok(resolve_seed(&mut a.seed)),
        Command::Test(a) => Ok(resolve_seed(&mut a.seed)),
        Command::Generate(a) => Ok(resolve_seed(&mut a.seed)),
        Command::Simulate(a) => {
            let seed = resolve_seed(&mut a.seed);
            if a.experiment.is_none() {
                a.experiment = Some(match &a.config {
                    Some(path) => {
                        let text = fs::read_to_string(path).map_err(io_err(path))?;
                        let mut exp = ExperimentConfig::from_json(&text).map_err(tag("simulate"))?;
                        if exp.cells.iter().all(|c| c.seed == 0) {
                            exp.cells.iter_mut().for_each(|c| c.seed = seed);
                        }
                        exp
                    }
                    None => experiment_from_flags(a, seed)?,
                });
            }
            Ok(seed)
        }
        Command::Replay(_) => Err(CliError::Usage("replay cannot be nested".into())),
    }
}

fn experiment_from_flags(a: &SimulateArgs, seed: u64) -> CliResult<ExperimentConfig> {
    let taus: Vec<f64> = if a.quantiles { DEFAULT_TAU_GRID.to_vec() } else { a.tau.clone() };
    let (kind, default_xi, default_rule) = match a.scenario {
        ScenarioKind::Estimation => (ExperimentKind::Estimation, vec![1.0], RuleKind::Oracle),
        ScenarioKind::Power => (ExperimentKind::Power, vec![0.0, 0.25, 0.5], RuleKind::Fixed),
    };
    let xis = a.xi.clone().unwrap_or(default_xi);
    let lambda_rule = match a.lambda_rule.unwrap_or(default_rule) {
        RuleKind::Oracle => LambdaRule::Oracle,
        RuleKind::Fixed => LambdaRule::Fixed {
            lambda_tilde: a.lambda_tilde,
        },
        RuleKind::Cv => LambdaRule::Cv { folds: a.folds },
    };
    if kind == ExperimentKind::Power && lambda_rule == LambdaRule::Oracle {
        return Err(CliError::Usage("the oracle lambda rule needs --scenario estimation".into()));
    }
    let mut cells = Vec::new();
    for &tau in &taus {
        for &xi in &xis {
            let mut sc = SimScenario::new(a.n, a.m, tau, a.dist, xi, seed);
            if kind == ExperimentKind::Power {
                sc.gamma0 = power_design_gamma(1.0, 0.65);
            }
            sc.validate().map_err(tag("simulate"))?;
            cells.push(sc);
        }
    }
    Ok(ExperimentConfig {
        kind,
        cells,
        reps: a.reps,
        b: (kind == ExperimentKind::Power).then_some(a.b),
        alpha: (kind == ExperimentKind::Power).then_some(a.alpha),
        lambda_rule,
    })
}

fn out_dir(command: &Command) -> &Path {
    match command {
        Command::Fit(a) => &a.out,
        Command::Test(a) => &a.out,
        Command::Simulate(a) => &a.out,
        Command::Generate(a) => &a.out,
        Command::Replay(_) => unreachable!("replay is resolved before execution"),
    }
}

fn set_out_dir(command: &mut Command, out: PathBuf) {
    match command {
        Command::Fit(a) => a.out = out,
        Command::Test(a) => a.out = out,
        Command::Simulate(a) => a.out = out,
        Command::Generate(a) => a.out = out,
        Command::Replay(_) => {}
    }
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable output");
    fs::write(path, text + "\n").map_err(io_err(path))
}

#[derive(Serialize)]
struct FitOutput<'a> {
    n: usize,
    m: usize,
    kernel: &'a str,
    lambda: &'a LambdaChoice,
    fit: &'a changeplane::Fit,
}

fn run_fit(a: &FitArgs, dir: &Path) -> CliResult<Vec<String>> {
    let seed = a.seed.expect("resolved seed");
    let ds = a.data.load()?;
    let base = a.solver.config(a.tau, 1.0, seed)?;
    let choice = a.penalty.resolve(&ds, &base, false)?;
    let cfg = base.with_lambda(choice.lambda);
    let fit = fit_changeplane(&ds, &cfg).map_err(tag("admm"))?;
    if !fit.converged {
        log::warn!("ADMM stopped at max_iter = {} without meeting tol", cfg.max_iter);
    }
    write_json(
        &dir.join("fit.json"),
        &FitOutput {
            n: ds.n(),
            m: ds.m(),
            kernel: &a.solver.kernel,
            lambda: &choice,
            fit: &fit,
        },
    )?;
    write_curves(&dir.join("curves.csv"), &ds, &cfg.kernel, &fit.coef)?;
    write_groups(&dir.join("groups.csv"), &ds, &fit.gamma, &fit.labels)?;
    Ok(vec!["fit.json".into(), "curves.csv".into(), "groups.csv".into()])
}

fn write_curves(
    path: &Path,
    ds: &Dataset,
    kernel: &KernelSpec<f64>,
    coef: &changeplane::RepresenterCoefficients<f64>,
) -> CliResult<()> {
    let names = ds.names();
    let mut header = vec!["s".to_string()];
    let map = ds.grid_map();
    if map.is_some() {
        header.push("s_original".into());
    }
    header.extend(names.x.iter().map(|c| format!("beta_{c}")));
    header.extend(ds.xtilde_cols().iter().map(|&k| format!("theta_{}", names.x[k])));
    let mut text = header.join(",") + "\n";
    for &s in ds.grid() {
        let mut row = vec![s.to_string()];
        if let Some(g) = map {
            row.push((g.offset + g.scale * s).to_string());
        }
        row.extend(coef.evaluate(kernel, s).iter().map(f64::to_string));
        text += &(row.join(",") + "\n");
    }
    fs::write(path, text).map_err(io_err(path))
}

fn write_groups(path: &Path, ds: &Dataset, gamma: &[f64], labels: &[bool]) -> CliResult<()> {
    let mut text = String::from("subject,index,subgroup\n");
    for (i, (v, l)) in ds.grouping_index(gamma).iter().zip(labels).enumerate() {
        text += &format!("{},{},{}\n", i + 1, v, u8::from(*l));
    }
    fs::write(path, text).map_err(io_err(path))
}

#[derive(Serialize)]
struct TestOutput<'a> {
    n: usize,
    m: usize,
    alpha: f64,
    reject: bool,
    lambda: &'a LambdaChoice,
    result: &'a changeplane::TestResult,
    sorted_boot: Vec<f64>,
}

fn run_test(a: &TestArgs, dir: &Path) -> CliResult<Vec<String>> {
    let seed = a.seed.expect("resolved seed");
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(CliError::Usage(format!("alpha must lie in (0, 1), got {}", a.alpha)));
    }
    let ds = a.data.load()?;
    let base = a.solver.config(a.tau, 1.0, seed)?;
    let choice = a.penalty.resolve(&ds, &base, true)?;
    let cfg = base.with_lambda(choice.lambda);
    let res = bootstrap_pvalue(&ds, &cfg, a.b, seed).map_err(tag("inference"))?;
    write_json(
        &dir.join("test.json"),
        &TestOutput {
            n: ds.n(),
            m: ds.m(),
            alpha: a.alpha,
            reject: res.rejects(a.alpha),
            lambda: &choice,
            sorted_boot: res.sorted_boot(),
            result: &res,
        },
    )?;
    Ok(vec!["test.json".into()])
}

fn run_simulate(a: &SimulateArgs, dir: &Path) -> CliResult<Vec<String>> {
    let seed = a.seed.expect("resolved seed");
    let exp = a.experiment.as_ref().expect("resolved campaign");
    let tau0 = exp.cells.first().map_or(0.5, |c| c.tau);
    let cfg = a.solver.config(tau0, 1.0, seed)?;
    let summary = exp.run(&cfg).map_err(tag("simulate"))?;
    let mut value = serde_json::to_value(&summary).expect("serializable summary");
    if let Some(obj) = value.as_object_mut() {
        obj.remove("wall_seconds");
    }
    write_json(&dir.join("summary.json"), &value)?;
    let table = match exp.kind {
        ExperimentKind::Estimation => {
            write_estimation_table(&summary, &dir.join("estimation.csv")).map_err(tag("simulate"))?;
            "estimation.csv"
        }
        ExperimentKind::Power => {
            write_power_table(&summary, &dir.join("power.csv")).map_err(tag("simulate"))?;
            "power.csv"
        }
    };
    write_replicate_table(&summary, &dir.join("replicates.csv")).map_err(tag("simulate"))?;
    for cell in summary.cells.iter().filter(|c| c.partial) {
        log::warn!(
            "cell n={} tau={} xi={} completed {} of {} replicates",
            cell.scenario.n,
            cell.scenario.tau,
            cell.scenario.xi_effect,
            cell.completed,
            cell.requested
        );
    }
    Ok(vec!["summary.json".into(), table.into(), "replicates.csv".into()])
}

fn run_generate(a: &GenerateArgs, dir: &Path) -> CliResult<Vec<String>> {
    let seed = a.seed.expect("resolved seed");
    let mut sc = SimScenario::new(a.n, a.m, a.tau, a.dist, a.xi, seed);
    if a.power_design {
        sc.gamma0 = power_design_gamma(1.0, 0.65);
    }
    let (ds, truth) = generate_dataset::<f64>(&sc).map_err(tag("simulate"))?;
    save_dataset(&ds, dir.join("y.csv"), dir.join("x.csv")).map_err(tag("data"))?;
    write_json(&dir.join("truth.json"), &serde_json::json!({ "scenario": sc, "truth": truth }))?;
    Ok(vec!["y.csv".into(), "x.csv".into(), "truth.json".into()])
}

fn execute(command: &Command, jobs: Option<usize>) -> CliResult<Vec<String>> {
    let dir = out_dir(command);
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let work = || match command {
        Command::Fit(a) => run_fit(a, dir),
        Command::Test(a) => run_test(a, dir),
        Command::Simulate(a) => run_simulate(a, dir),
        Command::Generate(a) => run_generate(a, dir),
        Command::Replay(_) => unreachable!("replay is resolved before execution"),
    };
    match jobs {
        Some(0) => Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// Runs a parsed command line and returns the manifest that was written.
pub fn dispatch(cli: Cli) -> CliResult<Manifest> {
    let (mut command, jobs) = match cli.command {
        Command::Replay(r) => {
            let text = fs::read_to_string(&r.manifest).map_err(io_err(&r.manifest))?;
            let old: Manifest = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("bad manifest {}: {e}", r.manifest.display())))?;
            let mut command = old.command;
            if let Some(out) = r.out {
                set_out_dir(&mut command, out);
            }
            (command, cli.jobs.or(old.jobs))
        }
        c => (c, cli.jobs),
    };
    let seed = resolve(&mut command)?;
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let start = Instant::now();
    let mut outputs = execute(&command, jobs)?;
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        seed,
        jobs,
        started_unix,
        wall_seconds: start.elapsed().as_secs_f64(),
        outputs,
    };
    write_json(&out_dir(&manifest.command).join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Parses `argv` (program name first), runs it, and returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli) {
        Ok(m) => {
            log::info!("wrote {} to {}", m.outputs.join(", "), out_dir(&m.command).display());
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! Command-line front end. [`run`] maps every outcome to an exit code:
//! 0 on success, 1 on usage errors, 2 on numeric failures.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::Error;
use crate::fading::{FadingParams, ModulationSpec};
use crate::fox_h::{eval_bivariate, BivariateHDescriptor};
use crate::identities::{apply, oracle_corpus, ArgAxis, Identity, KernelKind, OracleReport, ShiftForm};
use crate::montecarlo::SamplerConfig;
use crate::selftest::{erratum_report, run_identity_suite};
use crate::sweep::{db_to_linear, sweep, to_csv, Method, Metric, SnrGrid};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "FOXH_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "foxh-kit", version, about = "Bivariate Fox H-functions and composite fading metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a bivariate descriptor at (x, y).
    EvalH {
        #[arg(long)]
        desc: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, allow_hyphen_values = true)]
        y: f64,
    },
    /// Apply an identity to x -> prefactor * H[ax, bx] and check it against its oracle.
    Identity(IdentityArgs),
    /// Composite density at a fixed instantaneous SNR, swept over the average SNR.
    Pdf {
        #[command(flatten)]
        common: MetricArgs,
        /// Instantaneous SNR in dB.
        #[arg(long, allow_hyphen_values = true)]
        gamma_db: f64,
    },
    /// Outage probability at a fixed threshold.
    Outage {
        #[command(flatten)]
        common: MetricArgs,
        #[arg(long, allow_hyphen_values = true)]
        gamma_th_db: f64,
    },
    /// Average symbol error probability.
    Sep {
        #[command(flatten)]
        common: MetricArgs,
        /// Modulation preset; overrides the one in the params file.
        #[arg(long)]
        modulation: Option<String>,
    },
    /// Generalized MGF E[g^n exp(-s g)].
    Mgf {
        #[command(flatten)]
        common: MetricArgs,
        #[arg(long, default_value_t = 0)]
        n: u32,
        #[arg(long)]
        s: f64,
    },
    /// Monte-Carlo estimates with confidence intervals.
    Mc {
        #[command(flatten)]
        select: MetricSelect,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Exact, asymptotic and Monte-Carlo rows side by side.
    Sweep {
        #[command(flatten)]
        select: MetricSelect,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Run the identity corpus and the erratum adjudication report.
    Selftest {
        /// Only run the erratum report.
        #[arg(long)]
        skip_corpus: bool,
    },
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Params JSON: FadingParams fields plus optional ModulationSpec fields.
    #[arg(long)]
    params: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    from_db: f64,
    #[arg(long, default_value_t = 40.0, allow_hyphen_values = true)]
    to_db: f64,
    #[arg(long, default_value_t = 2.0)]
    step_db: f64,
    #[arg(long, default_value_t = SamplerConfig::default().n_samples)]
    samples: usize,
    #[arg(long, default_value_t = SamplerConfig::default().seed)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetricArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// Methods to evaluate.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "exact")]
    method: Vec<MethodArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    Asymptotic,
    Montecarlo,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Exact => Method::Exact,
            MethodArg::Asymptotic => Method::Asymptotic,
            MethodArg::Montecarlo => Method::MonteCarlo,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricName {
    Pdf,
    Outage,
    Sep,
    Mgf,
}

#[derive(Debug, Args)]
struct MetricSelect {
    #[arg(long, value_enum)]
    metric: MetricName,
    #[arg(long, allow_hyphen_values = true)]
    gamma_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    gamma_th_db: Option<f64>,
    #[arg(long)]
    modulation: Option<String>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    s: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IdentityName {
    DefiniteIntegral,
    LaplaceTransform,
    KernelExpSqrt,
    KernelSqrtExpSqrt,
    KernelErfcSqrt,
    DerivativeXTShift,
    DerivativeXSShift,
    DerivativeArgA,
    DerivativeArgB,
}

#[derive(Debug, Args)]
struct IdentityArgs {
    #[arg(long)]
    desc: PathBuf,
    #[arg(long, value_enum)]
    identity: IdentityName,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    b: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    prefactor: f64,
    /// Upper limit of the definite integral.
    #[arg(long)]
    upper: Option<f64>,
    /// Laplace variable.
    #[arg(long)]
    s_hat: Option<f64>,
    /// Kernel constant K.
    #[arg(long)]
    k: Option<f64>,
    /// Evaluation point of the derivative identities.
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parsed params file: the channel and an optional modulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamsFile {
    pub params: FadingParams,
    pub modulation: Option<ModulationSpec>,
}

impl ParamsFile {
    /// Reads the channel fields and, when a `scheme` key is present, the
    /// modulation fields of one JSON object. `eta = 1` maps to the limit offset.
    pub fn from_json(text: &str) -> crate::Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let params: FadingParams = serde_json::from_value(value.clone())?;
        let params = params.with_eta_limit();
        params.validate()?;
        let modulation = match value.get("scheme") {
            Some(_) => {
                let m: ModulationSpec = serde_json::from_value(value)?;
                m.validate()?;
                Some(m)
            }
            None => None,
        };
        Ok(ParamsFile { params, modulation })
    }
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = configure_workers().and_then(|()| dispatch(cli.command));
    match outcome {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try 'foxh-kit --help'.");
            EXIT_USAGE
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            EXIT_NUMERIC
        }
    }
}

fn configure_workers() -> CliResult<()> {
    let Ok(raw) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("{WORKERS_ENV} must be a positive integer, got '{raw}'")))?;
    // Fails only when the pool already exists, e.g. on a second call in-process.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(Error::from)?;
    s.push('\n');
    Ok(s)
}

fn dispatch(command: Command) -> CliResult<i32> {
    match command {
        Command::EvalH { desc, x, y } => {
            let d = BivariateHDescriptor::from_json(&read(&desc)?)?;
            println!("{}", eval_bivariate(&d, x, y)?);
            Ok(EXIT_OK)
        }
        Command::Identity(args) => identity(args),
        Command::Pdf { common, gamma_db } => {
            metric_sweep(&common.grid, Metric::Pdf { gamma: db_to_linear(gamma_db) }, &methods(&common.method))
        }
        Command::Outage { common, gamma_th_db } => metric_sweep(
            &common.grid,
            Metric::Outage { gamma_th: db_to_linear(gamma_th_db) },
            &methods(&common.method),
        ),
        Command::Sep { common, modulation } => {
            let file = load_params(&common.grid.params)?;
            let modulation = pick_modulation(modulation.as_deref(), &file)?;
            run_sweep(&common.grid, &file, Metric::Sep { modulation }, &methods(&common.method))
        }
        Command::Mgf { common, n, s } => metric_sweep(&common.grid, Metric::Mgf { n, s }, &methods(&common.method)),
        Command::Mc { select, grid } => {
            let file = load_params(&grid.params)?;
            let metric = select_metric(&select, &file)?;
            if !metric.supports(Method::MonteCarlo) {
                return Err(Failure::Usage(format!("{} has no Monte-Carlo estimator", metric.name())));
            }
            run_sweep(&grid, &file, metric, &[Method::MonteCarlo])
        }
        Command::Sweep { select, grid } => {
            let file = load_params(&grid.params)?;
            let metric = select_metric(&select, &file)?;
            run_sweep(&grid, &file, metric, &[Method::Exact, Method::Asymptotic, Method::MonteCarlo])
        }
        Command::Selftest { skip_corpus } => selftest(skip_corpus),
    }
}

fn methods(args: &[MethodArg]) -> Vec<Method> {
    let mut v: Vec<Method> = args.iter().map(|&m| m.into()).collect();
    v.sort();
    v.dedup();
    v
}

fn load_params(path: &Path) -> CliResult<ParamsFile> {
    Ok(ParamsFile::from_json(&read(path)?)?)
}

fn pick_modulation(flag: Option<&str>, file: &ParamsFile) -> CliResult<ModulationSpec> {
    let m = match flag {
        Some(name) => ModulationSpec::preset(name)?,
        None => file
            .modulation
            .ok_or_else(|| Failure::Usage("sep needs --modulation or a 'scheme' in the params file".into()))?,
    };
    m.validate()?;
    Ok(m)
}

fn select_metric(sel: &MetricSelect, file: &ParamsFile) -> CliResult<Metric> {
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| Failure::Usage(format!("this metric needs --{flag}")));
    Ok(match sel.metric {
        MetricName::Pdf => Metric::Pdf { gamma: db_to_linear(need(sel.gamma_db, "gamma-db")?) },
        MetricName::Outage => Metric::Outage { gamma_th: db_to_linear(need(sel.gamma_th_db, "gamma-th-db")?) },
        MetricName::Sep => Metric::Sep { modulation: pick_modulation(sel.modulation.as_deref(), file)? },
        MetricName::Mgf => Metric::Mgf { n: sel.n.unwrap_or(0), s: need(sel.s, "s")? },
    })
}

fn metric_sweep(grid: &GridArgs, metric: Metric, methods: &[Method]) -> CliResult<i32> {
    let file = load_params(&grid.params)?;
    run_sweep(grid, &file, metric, methods)
}

fn run_sweep(grid: &GridArgs, file: &ParamsFile, metric: Metric, methods: &[Method]) -> CliResult<i32> {
    if let Some(&m) = methods.iter().find(|&&m| !metric.supports(m)) {
        if methods.len() == 1 {
            return Err(Failure::Usage(format!("{} is not available for {}", m.as_str(), metric.name())));
        }
    }
    if methods.contains(&Method::MonteCarlo) && grid.samples < crate::montecarlo::MIN_SAMPLES {
        return Err(Failure::Usage(format!(
            "--samples must be at least {}",
            crate::montecarlo::MIN_SAMPLES
        )));
    }
    let snr = SnrGrid { from_db: grid.from_db, to_db: grid.to_db, step_db: grid.step_db };
    let sampler = SamplerConfig::new(grid.samples, grid.seed);
    let result = sweep(&file.params, &metric, &snr, methods, &sampler)?;
    emit(&to_csv(&[result])?, grid.out.as_deref())?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct IdentityOutput {
    identity: Identity,
    transformed: crate::fox_h::ScaledBivariateH,
    report: OracleReport,
}

fn identity(args: IdentityArgs) -> CliResult<i32> {
    let d = BivariateHDescriptor::from_json(&read(&args.desc)?)?;
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| Failure::Usage(format!("this identity needs --{flag}")));
    let id = match args.identity {
        IdentityName::DefiniteIntegral => Identity::DefiniteIntegral { upper: need(args.upper, "upper")? },
        IdentityName::LaplaceTransform => Identity::LaplaceTransform { s_hat: need(args.s_hat, "s-hat")? },
        IdentityName::KernelExpSqrt => Identity::KernelIntegral { kernel: KernelKind::ExpSqrt(need(args.k, "k")?) },
        IdentityName::KernelSqrtExpSqrt => {
            Identity::KernelIntegral { kernel: KernelKind::SqrtExpSqrt(need(args.k, "k")?) }
        }
        IdentityName::KernelErfcSqrt => Identity::KernelIntegral { kernel: KernelKind::ErfcSqrt(need(args.k, "k")?) },
        IdentityName::DerivativeXTShift => Identity::DerivativeX { x: need(args.x, "x")?, form: ShiftForm::TShift },
        IdentityName::DerivativeXSShift => Identity::DerivativeX { x: need(args.x, "x")?, form: ShiftForm::SShift },
        IdentityName::DerivativeArgA => Identity::DerivativeArg { x: need(args.x, "x")?, axis: ArgAxis::A },
        IdentityName::DerivativeArgB => Identity::DerivativeArg { x: need(args.x, "x")?, axis: ArgAxis::B },
    };
    let app = apply(&d, args.prefactor, args.a, args.b, id)?;
    let report = app.oracle_check(args.tolerance)?;
    let passed = report.passed;
    let out = IdentityOutput { identity: id, transformed: app.result, report };
    emit(&to_json(&out)?, args.out.as_deref())?;
    Ok(if passed { EXIT_OK } else { EXIT_NUMERIC })
}

fn selftest(skip_corpus: bool) -> CliResult<i32> {
    let mut ok = true;
    if !skip_corpus {
        let suite = run_identity_suite(&oracle_corpus());
        let total = suite.checks.len();
        let failed = suite.failures().count();
        for c in &suite.checks {
            match &c.report {
                Ok(r) => println!(
                    "{} {} {}: closed form {:.10e}, oracle {:.10e}, error {:.2e} (tol {:.0e})",
                    if r.passed { "PASS" } else { "FAIL" },
                    c.descriptor,
                    r.identity,
                    r.closed_form,
                    r.oracle,
                    r.relative_error,
                    r.tolerance
                ),
                Err(e) => println!("FAIL {} {e}", c.descriptor),
            }
        }
        println!("corpus: {}/{total} checks passed in {:.1} s", total - failed, suite.elapsed.as_secs_f64());
        ok &= failed == 0;
    }
    let verdicts = erratum_report()?;
    for v in &verdicts {
        println!("{}", v.line());
    }
    ok &= verdicts.iter().all(|v| v.definitive());
    Ok(if ok { EXIT_OK } else { EXIT_NUMERIC })
}

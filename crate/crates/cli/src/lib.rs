//! The `acceptance` command line: fit, diagnose, simulate, compare, rank,
//! compress, report and serve.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 diagnostics failure (the fit finished but R-hat or ESS thresholds are
//! violated; the posterior is still written).

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use acceptance_core::inference::{fit, FitOptions, Measurement, Posterior, PriorSpec, SamplerConfig};
use acceptance_core::model::{default_instrument, InstrumentSpec};
use acceptance_core::survey::ScoredDataset;
use acceptance_core::whatif::{compare, parse_scenarios, rank, Scenario, SimulationOptions, Simulator};
use acceptance_core::workflow::{diagnostics_table, load_dataset, posterior_summary, report, DatasetInput};
use acceptance_core::Error as CoreError;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub const DATA_DIR_ENV: &str = "ACCEPTANCE_DATA_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DIAGNOSTICS: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "acceptance", version, about = "Bayesian technology-acceptance workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the structural model and write the posterior.
    Fit(FitArgs),
    /// Print the R-hat / ESS table of a posterior.
    Diagnose(DiagnoseArgs),
    /// Posterior predictive BI and USE under one scenario.
    Simulate(SimulateArgs),
    /// Simulate several scenarios side by side.
    Compare(MultiArgs),
    /// Rank scenarios by expected gain in USE over the baseline.
    Rank(MultiArgs),
    /// Turn a posterior into a prior for the next wave.
    Compress(CompressArgs),
    /// Coefficients, construct means and intervention candidates.
    Report(ReportArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// Instrument definition (JSON); the built-in instrument if omitted.
    #[arg(long)]
    instrument: Option<PathBuf>,
    /// Print machine-readable JSON instead of tables.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Survey responses (long CSV or JSON) or a scored dataset.
    #[arg(long)]
    data: PathBuf,
    /// Prior from `compress`; default priors if omitted.
    #[arg(long)]
    prior: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    warmup: Option<usize>,
    /// Kept draws per chain.
    #[arg(long)]
    draws: Option<usize>,
    /// Use the latent measurement model instead of parcel scores.
    #[arg(long)]
    latent: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[arg(long)]
    posterior: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SimOptions {
    /// Simulated outcomes per respondent per posterior draw.
    #[arg(long, default_value_t = SimulationOptions::default().draws_per_sample)]
    draws: usize,
    #[arg(long, default_value_t = SimulationOptions::default().seed)]
    seed: u64,
}

impl SimOptions {
    fn options(&self) -> SimulationOptions {
        SimulationOptions {
            draws_per_sample: self.draws,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    posterior: PathBuf,
    /// Dataset the posterior was fit to.
    #[arg(long)]
    data: PathBuf,
    /// Scenario file holding one scenario.
    #[arg(long)]
    scenario: PathBuf,
    #[command(flatten)]
    sim: SimOptions,
}

#[derive(Debug, Args)]
struct MultiArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    posterior: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Scenario files; each holds one scenario or an array of them.
    #[arg(long = "scenarios", required = true, num_args = 1..)]
    scenarios: Vec<PathBuf>,
    #[command(flatten)]
    sim: SimOptions,
}

#[derive(Debug, Args)]
struct CompressArgs {
    #[arg(long)]
    posterior: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    posterior: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = acceptance_service::DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// Artifact store; `$ACCEPTANCE_DATA_DIR/store` or `./acceptance-store` if omitted.
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long)]
    instrument: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Diagnostics(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Data(_) => EXIT_DATA,
            Self::Diagnostics(_) => EXIT_DIAGNOSTICS,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Data(m) | Self::Diagnostics(m) => m,
        }
    }
}

impl From<CoreError> for Failure {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::Unconverged(_) => Self::Diagnostics(err.to_string()),
            _ => Self::Data(err.to_string()),
        }
    }
}

type Outcome = Result<i32, Failure>;

/// Parse `argv` and run the command, writing results to `out` and
/// messages to `err`. Returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Fit(a) => cmd_fit(a, out, err),
        Command::Diagnose(a) => cmd_diagnose(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Rank(a) => cmd_rank(a, out),
        Command::Compress(a) => cmd_compress(a, out),
        Command::Report(a) => cmd_report(a, out),
        Command::Serve(a) => cmd_serve(a),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

/// Relative input paths that do not exist in the working directory are
/// looked up in `$ACCEPTANCE_DATA_DIR`.
fn resolve(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    let resolved = resolve(path);
    std::fs::read(&resolved).map_err(|e| Failure::Data(format!("cannot read {}: {e}", resolved.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

fn instrument(path: Option<&Path>) -> Result<InstrumentSpec, Failure> {
    match path {
        Some(p) => Ok(InstrumentSpec::from_json(&read(p)?)?),
        None => Ok(default_instrument()),
    }
}

fn dataset(path: &Path, instrument: &InstrumentSpec) -> Result<ScoredDataset, Failure> {
    let bytes = read(path)?;
    let kind = DatasetInput::detect(path.to_str(), &bytes);
    Ok(load_dataset(&bytes, kind, instrument)?)
}

fn posterior(path: &Path) -> Result<Posterior, Failure> {
    Ok(Posterior::from_json(&read(path)?)?)
}

fn scenarios(paths: &[PathBuf]) -> Result<Vec<Scenario>, Failure> {
    let mut all = Vec::new();
    for p in paths {
        all.extend(parse_scenarios(&read(p)?)?);
    }
    Ok(all)
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    v: u32,
    #[serde(flatten)]
    body: &'a T,
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), Failure> {
    let bytes = serde_json::to_vec(&Versioned { v: 1, body: value }).expect("output serializes");
    out.write_all(&bytes)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| Failure::Data(e.to_string()))
}

fn print_text(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(|e| Failure::Data(e.to_string()))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FitOutput<'a> {
    posterior_id: String,
    out: String,
    converged: bool,
    diagnostics: &'a acceptance_core::inference::DiagnosticsReport,
}

fn cmd_fit(a: FitArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let inst = instrument(a.common.instrument.as_deref())?;
    let data = dataset(&a.data, &inst)?;
    let prior = match &a.prior {
        Some(p) => Some(PriorSpec::from_json(&read(p)?)?),
        None => None,
    };
    let mut sampler = SamplerConfig::default();
    if let Some(s) = a.seed {
        sampler.seed = s;
    }
    if let Some(c) = a.chains {
        sampler.chains = c;
    }
    if let Some(w) = a.warmup {
        sampler.warmup_draws = w;
    }
    if let Some(d) = a.draws {
        sampler.kept_draws = d;
    }
    let options = FitOptions {
        sampler,
        measurement: if a.latent { Measurement::Latent } else { Measurement::Parcel },
    };
    let post = fit(&inst, &data, prior.as_ref(), &options)?;
    write_file(&a.out, &post.to_json())?;
    let converged = post.converged();
    if a.common.json {
        print_json(
            out,
            &FitOutput {
                posterior_id: post.id(),
                out: a.out.display().to_string(),
                converged,
                diagnostics: &post.diagnostics_summary,
            },
        )?;
    } else {
        print_text(out, &diagnostics_table(&post))?;
        print_text(out, &format!("posterior {} written to {}\n", post.id(), a.out.display()))?;
    }
    if converged {
        Ok(EXIT_OK)
    } else {
        let _ = writeln!(err, "warning: diagnostics thresholds violated; posterior written anyway");
        Ok(EXIT_DIAGNOSTICS)
    }
}

fn cmd_diagnose(a: DiagnoseArgs, out: &mut dyn Write) -> Outcome {
    let post = posterior(&a.posterior)?;
    if a.json {
        print_json(out, &post.diagnostics_summary)?;
    } else {
        print_text(out, &diagnostics_table(&post))?;
    }
    Ok(if post.converged() { EXIT_OK } else { EXIT_DIAGNOSTICS })
}

fn cmd_simulate(a: SimulateArgs, out: &mut dyn Write) -> Outcome {
    let inst = instrument(a.common.instrument.as_deref())?;
    let post = posterior(&a.posterior)?;
    let data = dataset(&a.data, &inst)?;
    let mut list = scenarios(std::slice::from_ref(&a.scenario))?;
    if list.len() != 1 {
        return Err(Failure::Usage(format!(
            "{} holds {} scenarios; simulate takes one (use compare or rank)",
            a.scenario.display(),
            list.len()
        )));
    }
    let scenario = list.remove(0);
    scenario.validate(inst.graph())?;
    let summary = Simulator::new(&post, &data, &inst)?.simulate(&scenario, &a.sim.options())?;
    if a.common.json {
        print_json(out, &summary)?;
    } else {
        let table = acceptance_core::whatif::Comparison {
            rows: vec![summary.bi, summary.usage],
        };
        print_text(out, &table.to_table())?;
    }
    Ok(EXIT_OK)
}

fn cmd_compare(a: MultiArgs, out: &mut dyn Write) -> Outcome {
    let inst = instrument(a.common.instrument.as_deref())?;
    let post = posterior(&a.posterior)?;
    let data = dataset(&a.data, &inst)?;
    let result = compare(&post, &data, &inst, &scenarios(&a.scenarios)?, &a.sim.options())?;
    if a.common.json {
        print_json(out, &result)?;
    } else {
        print_text(out, &result.to_table())?;
    }
    Ok(EXIT_OK)
}

fn cmd_rank(a: MultiArgs, out: &mut dyn Write) -> Outcome {
    let inst = instrument(a.common.instrument.as_deref())?;
    let post = posterior(&a.posterior)?;
    let data = dataset(&a.data, &inst)?;
    let result = rank(&post, &data, &inst, &scenarios(&a.scenarios)?, &a.sim.options())?;
    if a.common.json {
        print_json(out, &result)?;
    } else {
        print_text(out, &result.to_table())?;
    }
    Ok(EXIT_OK)
}

fn cmd_compress(a: CompressArgs, out: &mut dyn Write) -> Outcome {
    let post = posterior(&a.posterior)?;
    let prior = post.compress()?;
    write_file(&a.out, &prior.to_json())?;
    if a.json {
        print_json(out, &serde_json::json!({ "priorId": prior.hash(), "out": a.out.display().to_string() }))?;
    } else {
        print_text(out, &format!("prior {} written to {}\n", prior.hash(), a.out.display()))?;
    }
    Ok(EXIT_OK)
}

fn cmd_report(a: ReportArgs, out: &mut dyn Write) -> Outcome {
    let inst = instrument(a.common.instrument.as_deref())?;
    let post = posterior(&a.posterior)?;
    let data = dataset(&a.data, &inst)?;
    let summary = posterior_summary(&post, &data)?;
    if a.common.json {
        out.write_all(&serde_json::to_vec(&summary).expect("summary serializes"))
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| Failure::Data(e.to_string()))?;
    } else {
        print_text(out, &report(&summary, inst.scale().midpoint()))?;
    }
    Ok(EXIT_OK)
}

fn cmd_serve(a: ServeArgs) -> Outcome {
    let store = a.store.unwrap_or_else(|| match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => Path::new(&dir).join("store"),
        None => PathBuf::from("acceptance-store"),
    });
    let mut config = acceptance_service::ServiceConfig::new(store);
    config.instrument = instrument(a.instrument.as_deref())?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Data(e.to_string()))?;
    runtime
        .block_on(acceptance_service::serve(config, SocketAddr::new(a.host, a.port)))
        .map_err(|e| Failure::Data(format!("server stopped: {e}")))?;
    Ok(EXIT_OK)
}

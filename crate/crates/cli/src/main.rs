//! `qcrsim` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration or I/O error, 3 numerical failure,
//! 4 fit did not converge.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qcrsim::params::{DeviceParams, TABLE1_CFG};

use output::{manifest_path, sha256_hex, write_file, Outputs, RunManifest};

const DEFAULT_CONFIG: &str = "params/table1.cfg";

#[derive(Debug, Parser)]
#[command(name = "qcrsim", version, about = "Qubit reset through a quantum-circuit refrigerator")]
struct Cli {
    /// Device configuration file. Falls back to params/table1.cfg, then to
    /// a built-in copy of it.
    #[arg(long, global = true, env = "QCRSIM_CONFIG")]
    config: Option<PathBuf>,

    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Theory and ringdown-extracted κ_eff against bias.
    KappaSweep(KappaSweepArgs),
    /// One reset pulse with a sampled population trace.
    Reset(ResetArgs),
    /// Residual excited population over a bias × pulse-length grid.
    ResetSweep(ResetSweepArgs),
    /// Synthesise or fit a SINIS I–V curve.
    Iv(IvArgs),
    /// Simulated ringdown and the linear fit of ln(A_after/A_before).
    Ringdown(RingdownArgs),
    /// Excited population from Rabi population measurement amplitudes.
    Rpm(RpmArgs),
    /// Free decay from |e,0⟩ and its T1 fit.
    T1(T1Args),
    /// Dressed levels and transition frequencies of the static Hamiltonian.
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Args)]
struct KappaSweepArgs {
    #[arg(long, default_value_t = 0.0)]
    bias_min: f64,
    #[arg(long, default_value_t = 2.2)]
    bias_max: f64,
    #[arg(long, default_value_t = 45)]
    steps: usize,
    #[arg(long, default_value = "out/kappa_sweep.csv")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FrameArg {
    Rotating,
    Literal,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum InitialState {
    /// Thermal qubit at the configured excited population.
    Thermal,
    Ground,
    Excited,
}

#[derive(Debug, Clone, Args)]
struct DriveArgs {
    /// f0–g1 drive amplitude g/2π.
    #[arg(long, default_value_t = 28.4)]
    g_rabi_mhz: f64,
    /// `eq2` (or `optimal`) for the equal-decay rule, `eq2*K` to scale it, or Ω/2π in MHz.
    #[arg(long, default_value = "eq2")]
    omega: String,
    /// Leave the QCR unbiased during the pulse.
    #[arg(long)]
    qcr_off: bool,
    #[arg(long, value_enum, default_value = "rotating")]
    frame: FrameArg,
    #[arg(long, value_enum, default_value = "thermal")]
    initial: InitialState,
}

#[derive(Debug, Args)]
struct ResetArgs {
    /// eV_b/2Δ during the pulse.
    #[arg(long, default_value_t = 1.03)]
    bias: f64,
    #[arg(long, default_value_t = 180.0)]
    tau_ns: f64,
    /// Trace samples over the window.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[command(flatten)]
    drive: DriveArgs,
    #[arg(long, default_value = "out/reset.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ResetSweepArgs {
    #[arg(long, default_value_t = 0.8)]
    bias_min: f64,
    #[arg(long, default_value_t = 1.2)]
    bias_max: f64,
    #[arg(long, default_value_t = 9)]
    bias_steps: usize,
    #[arg(long, default_value_t = 0.0)]
    tau_min_ns: f64,
    #[arg(long, default_value_t = 400.0)]
    tau_max_ns: f64,
    #[arg(long, default_value_t = 81)]
    tau_steps: usize,
    #[command(flatten)]
    drive: DriveArgs,
    #[arg(long, default_value = "out/reset_sweep.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct IvMode {
    /// Synthesise `STEPS` points up to `VMAX_MV` from the configuration.
    #[arg(long, num_args = 2, value_names = ["VMAX_MV", "STEPS"])]
    synth: Option<Vec<f64>>,
    /// Fit a CSV with columns voltage_V,current_A.
    #[arg(long, value_name = "FILE")]
    fit: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct IvArgs {
    #[command(flatten)]
    mode: IvMode,
    #[arg(long, default_value = "out/iv.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RingdownArgs {
    #[arg(long, default_value_t = 1.03)]
    bias: f64,
    /// Comma-separated bias pulse lengths (default 10, 20, …, 150).
    #[arg(long, value_delimiter = ',')]
    taus_ns: Vec<f64>,
    #[arg(long, default_value_t = 200.0)]
    delta_t_ab_ns: f64,
    #[arg(long, default_value = "out/ringdown.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RpmArgs {
    #[arg(long, requires_all = ["a2", "b1", "b2"], conflicts_with = "after_reset_ns")]
    a1: Option<f64>,
    #[arg(long)]
    a2: Option<f64>,
    #[arg(long)]
    b1: Option<f64>,
    #[arg(long)]
    b2: Option<f64>,
    /// Synthesise the amplitudes from the state after a reset pulse of this
    /// length at the operating point.
    #[arg(long)]
    after_reset_ns: Option<f64>,
    #[arg(long, default_value = "out/rpm.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct T1Args {
    #[arg(long, default_value_t = 30.0)]
    duration_us: f64,
    #[arg(long, default_value_t = 61)]
    samples: usize,
    #[arg(long, default_value = "out/t1.csv")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[arg(long, default_value = "out/spectrum.csv")]
    out: PathBuf,
}

#[derive(Debug, Clone)]
pub enum CliError {
    Config(String),
    Io(String),
    Numeric(String),
    Fit(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Fit(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numeric(m) => write!(f, "numerical failure: {m}"),
            CliError::Fit(m) => write!(f, "fit did not converge: {m}"),
        }
    }
}

impl From<qcrsim::Error> for CliError {
    fn from(e: qcrsim::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else if matches!(e, qcrsim::Error::Fit { .. }) {
            CliError::Fit(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

/// Result of a command: a JSON summary, or an error after partial output.
pub struct Report {
    pub summary: serde_json::Value,
    /// Set when the command wrote its outputs but some cells failed.
    pub partial: Option<CliError>,
}

impl Report {
    pub fn ok(summary: serde_json::Value) -> Self {
        Self { summary, partial: None }
    }
}

struct LoadedConfig {
    source: String,
    text: String,
    params: DeviceParams,
}

fn load_config(path: Option<&PathBuf>) -> Result<LoadedConfig, CliError> {
    let (source, text) = match path {
        Some(p) => (
            p.display().to_string(),
            std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        ),
        None => match std::fs::read_to_string(DEFAULT_CONFIG) {
            Ok(t) => (DEFAULT_CONFIG.to_string(), t),
            Err(_) => ("builtin:table1".to_string(), TABLE1_CFG.to_string()),
        },
    };
    let params = DeviceParams::from_config_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    Ok(LoadedConfig { source, text, params })
}

fn command_name(c: &Command) -> (&'static str, &PathBuf) {
    match c {
        Command::KappaSweep(a) => ("kappa-sweep", &a.out),
        Command::Reset(a) => ("reset", &a.out),
        Command::ResetSweep(a) => ("reset-sweep", &a.out),
        Command::Iv(a) => ("iv", &a.out),
        Command::Ringdown(a) => ("ringdown", &a.out),
        Command::Rpm(a) => ("rpm", &a.out),
        Command::T1(a) => ("t1", &a.out),
        Command::Spectrum(a) => ("spectrum", &a.out),
    }
}

fn dispatch(cmd: &Command, p: &DeviceParams, out: &mut Outputs) -> Result<Report, CliError> {
    match cmd {
        Command::KappaSweep(a) => commands::kappa_sweep(a, p, out),
        Command::Reset(a) => commands::reset(a, p, out),
        Command::ResetSweep(a) => commands::reset_sweep(a, p, out),
        Command::Iv(a) => commands::iv(a, p, out),
        Command::Ringdown(a) => commands::ringdown(a, p, out),
        Command::Rpm(a) => commands::rpm(a, p, out),
        Command::T1(a) => commands::t1(a, p, out),
        Command::Spectrum(a) => commands::spectrum(a, p, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let arguments: Vec<String> = std::env::args().skip(1).collect();
    let (name, out_path) = command_name(&cli.command);
    let start = Instant::now();
    let config = load_config(cli.config.as_ref());

    let mut outputs = Outputs::default();
    let result = config.as_ref().map_err(CliError::clone).and_then(|cfg| {
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(j) = cli.jobs {
            if j == 0 {
                return Err(CliError::Config("--jobs must be at least 1".into()));
            }
            pool = pool.num_threads(j);
        }
        let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;
        pool.install(|| dispatch(&cli.command, &cfg.params, &mut outputs))
    });

    let (summary, error) = match result {
        Ok(r) => (r.summary, r.partial),
        Err(e) => (serde_json::Value::Null, Some(e)),
    };
    let (source, text, parameters) = match &config {
        Ok(c) => (c.source.clone(), c.text.clone(), serde_json::to_value(&c.params).unwrap_or_default()),
        Err(_) => (cli.config.as_ref().map(|p| p.display().to_string()).unwrap_or_default(), String::new(), serde_json::Value::Null),
    };
    let manifest = RunManifest {
        command: name.to_string(),
        input_digest: sha256_hex(format!("{text}\n{}", arguments.join("\u{1f}")).as_bytes()),
        arguments,
        config_source: source,
        config_digest: sha256_hex(text.as_bytes()),
        parameters,
        tool_version: qcrsim::VERSION.to_string(),
        status: match (&error, outputs.files.is_empty()) {
            (None, _) => "ok",
            (Some(_), false) => "partial",
            (Some(_), true) => "failed",
        }
        .to_string(),
        error: error.as_ref().map(ToString::to_string),
        wall_time_s: start.elapsed().as_secs_f64(),
        summary,
        outputs: outputs.files,
    };
    let mpath = manifest_path(out_path);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
    if let Err(e) = write_file(&mpath, json.as_bytes()) {
        eprintln!("qcrsim: cannot write manifest: {e}");
        if error.is_none() {
            return ExitCode::from(2);
        }
    }
    match error {
        None => ExitCode::SUCCESS,
        Some(e) => {
            eprintln!("qcrsim {name}: {e}");
            ExitCode::from(e.code())
        }
    }
}

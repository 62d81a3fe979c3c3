//! Argument parsing, configuration files and command dispatch for the
//! `spectral-sdp` binary.
//!
//! Settings are layered: built-in defaults, then `--config FILE`, then
//! `SPECTRAL_SDP_*` environment variables, then flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use spectral_sdp::admm::{self, trace_csv};
use spectral_sdp::experiment::{self, bench_csv, cells_csv, BENCH_SIZES};
use spectral_sdp::io::{self, Manifest};
use spectral_sdp::{
    emit_phase_plot, relative_error, sample_observations, synth_random, Error, ObservationSet,
    PhaseGridSpec, SolverConfig, SpectralSignal, Variant,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Synth,
    #[default]
    Solve,
    Phase,
    Bench,
    DemoLarge,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Solve => "solve",
            Command::Phase => "phase",
            Command::Bench => "bench",
            Command::DemoLarge => "demo-large",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub n: usize,
    pub s: usize,
    pub m: usize,
}

impl Default for Problem {
    fn default() -> Self {
        Self { n: 50, s: 5, m: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub out: PathBuf,
    /// Signal JSON to solve instead of synthesizing.
    pub signal: Option<PathBuf>,
    /// Observation JSON to solve instead of sampling.
    pub observations: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self { out: PathBuf::from("out"), signal: None, observations: None }
    }
}

/// Everything a run depends on. Serialized verbatim into the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Command,
    pub solver: SolverConfig,
    pub problem: Problem,
    pub experiment: Option<PhaseGridSpec>,
    pub paths: Paths,
    pub seed: u64,
    /// Worker threads for `phase`; `None` uses every core.
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Solve,
            solver: SolverConfig::default(),
            problem: Problem::default(),
            experiment: None,
            paths: Paths::default(),
            seed: 0,
            jobs: None,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "spectral-sdp", version, about = "Recover 2D spectrally sparse signals from partial samples")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Synthesize a random signal and observation set
    Synth(Flags),
    /// Recover one signal
    Solve(Flags),
    /// Success counts over an (m, s) grid
    Phase(Flags),
    /// Timed solves at the (n, m) sizes of the runtime table
    Bench(Flags),
    /// n=500, s=10, m=5000 recovery with acceleration
    DemoLarge(Flags),
}

#[derive(Debug, Args)]
struct Flags {
    /// JSON config (a RunConfig or a run manifest); flags take precedence
    #[arg(long, value_name = "PATH", env = "SPECTRAL_SDP_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, value_name = "DIR", env = "SPECTRAL_SDP_OUT")]
    out: Option<PathBuf>,
    /// Signal side length
    #[arg(long, env = "SPECTRAL_SDP_N")]
    n: Option<usize>,
    /// Number of sinusoids
    #[arg(long, env = "SPECTRAL_SDP_S")]
    s: Option<usize>,
    /// Number of observed entries
    #[arg(long, env = "SPECTRAL_SDP_M")]
    m: Option<usize>,
    #[arg(long, env = "SPECTRAL_SDP_SEED")]
    seed: Option<u64>,
    /// ADMM penalty
    #[arg(long, env = "SPECTRAL_SDP_RHO")]
    rho: Option<f64>,
    #[arg(long, env = "SPECTRAL_SDP_EPS_ABS")]
    eps_abs: Option<f64>,
    #[arg(long, env = "SPECTRAL_SDP_EPS_REL")]
    eps_rel: Option<f64>,
    #[arg(long, env = "SPECTRAL_SDP_MAX_ITERS")]
    max_iters: Option<usize>,
    /// toeplitz | nuclear
    #[arg(long, env = "SPECTRAL_SDP_VARIANT")]
    variant: Option<String>,
    /// Restarted Nesterov acceleration
    #[arg(long, env = "SPECTRAL_SDP_ACCELERATE")]
    accelerate: bool,
    /// Trials per grid cell
    #[arg(long, env = "SPECTRAL_SDP_TRIALS")]
    trials: Option<usize>,
    /// m values: "50,100,150" or "start:stop:step"
    #[arg(long, env = "SPECTRAL_SDP_M_GRID")]
    m_grid: Option<String>,
    /// s values: "1,2,3" or "start:stop:step"
    #[arg(long, env = "SPECTRAL_SDP_S_GRID")]
    s_grid: Option<String>,
    /// Worker threads for the phase grid
    #[arg(long, env = "SPECTRAL_SDP_JOBS")]
    jobs: Option<usize>,
    /// Signal JSON to recover (solve)
    #[arg(long, value_name = "PATH")]
    signal: Option<PathBuf>,
    /// Observation JSON to recover from (solve)
    #[arg(long, value_name = "PATH")]
    observations: Option<PathBuf>,
}

/// A configuration problem, reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Parses `"a,b,c"` or `"start:stop:step"` (inclusive).
pub fn parse_grid(text: &str) -> Result<Vec<usize>, UsageError> {
    let bad = || UsageError(format!("invalid grid '{text}'"));
    let values: Vec<usize> = if text.contains(':') {
        let parts: Vec<usize> = text
            .split(':')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else { return Err(bad()) };
        if step == 0 || stop < start {
            return Err(bad());
        }
        (start..=stop).step_by(step).collect()
    } else {
        text.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

fn load_config(path: &Path) -> Result<RunConfig, UsageError> {
    let text = fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| UsageError(format!("config {}: {e}", path.display())))?;
    // A run manifest carries the config under "payload".
    let value = match value.get("payload") {
        Some(p) if value.get("content_hash").is_some() => p.clone(),
        _ => value,
    };
    serde_json::from_value(value).map_err(|e| UsageError(format!("config {}: {e}", path.display())))
}

/// Builds a [`RunConfig`] from `argv` (including the program name).
pub fn parse_cli<I, T>(argv: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let (command, flags) = match cli.command {
        CliCommand::Synth(f) => (Command::Synth, f),
        CliCommand::Solve(f) => (Command::Solve, f),
        CliCommand::Phase(f) => (Command::Phase, f),
        CliCommand::Bench(f) => (Command::Bench, f),
        CliCommand::DemoLarge(f) => (Command::DemoLarge, f),
    };
    resolve(command, flags).map_err(|e| clap::Error::raw(clap::error::ErrorKind::ValueValidation, format!("{e}\n")))
}

fn resolve(command: Command, f: Flags) -> Result<RunConfig, UsageError> {
    let mut cfg = match &f.config {
        Some(path) => load_config(path)?,
        None => {
            let mut base = RunConfig::default();
            match command {
                Command::DemoLarge => {
                    base.problem = Problem { n: 500, s: 10, m: 5000 };
                    base.solver.accelerate = true;
                }
                Command::Bench => base.problem.s = 5,
                _ => {}
            }
            base
        }
    };
    cfg.command = command;

    if let Some(v) = f.n {
        cfg.problem.n = v;
    }
    if let Some(v) = f.s {
        cfg.problem.s = v;
    }
    if let Some(v) = f.m {
        cfg.problem.m = v;
    }
    if let Some(v) = f.seed {
        cfg.seed = v;
    }
    if let Some(v) = f.rho {
        cfg.solver.rho = v;
    }
    if let Some(v) = f.eps_abs {
        cfg.solver.eps_abs = v;
    }
    if let Some(v) = f.eps_rel {
        cfg.solver.eps_rel = v;
    }
    if let Some(v) = f.max_iters {
        cfg.solver.max_iters = v;
    }
    if let Some(v) = &f.variant {
        cfg.solver.variant = v.parse::<Variant>().map_err(|e| UsageError(e.to_string()))?;
    }
    if f.accelerate {
        cfg.solver.accelerate = true;
    }
    if let Some(v) = f.jobs {
        if v == 0 {
            return Err(UsageError("--jobs must be at least 1".into()));
        }
        cfg.jobs = Some(v);
    }
    if let Some(v) = f.out {
        cfg.paths.out = v;
    }
    if let Some(v) = f.signal {
        cfg.paths.signal = Some(v);
    }
    if let Some(v) = f.observations {
        cfg.paths.observations = Some(v);
    }

    if command == Command::Phase {
        let mut spec = cfg.experiment.take().unwrap_or_else(|| PhaseGridSpec {
            n: cfg.problem.n,
            base_seed: cfg.seed,
            ..PhaseGridSpec::default()
        });
        if let Some(n) = f.n {
            spec.n = n;
        }
        if let Some(seed) = f.seed {
            spec.base_seed = seed;
        }
        if let Some(t) = f.trials {
            spec.trials = t;
        }
        if let Some(g) = &f.m_grid {
            spec.m_values = parse_grid(g)?;
        }
        if let Some(g) = &f.s_grid {
            spec.s_values = parse_grid(g)?;
        }
        spec.variant = cfg.solver.variant;
        spec.validate().map_err(|e| UsageError(e.to_string()))?;
        cfg.experiment = Some(spec);
    } else if f.trials.is_some() || f.m_grid.is_some() || f.s_grid.is_some() {
        return Err(UsageError("--trials, --m-grid and --s-grid apply to the phase command".into()));
    }

    cfg.solver.validate().map_err(|e| UsageError(e.to_string()))?;
    if cfg.problem.n == 0 || cfg.problem.s == 0 {
        return Err(UsageError("n and s must be at least 1".into()));
    }
    Ok(cfg)
}

/// Failure modes of [`run`], mapped onto exit codes.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Solver(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_)
            | Error::ShapeMismatch { .. }
            | Error::InfeasibleSeparation { .. }
            | Error::Parse(_)
            | Error::Json(_) => RunError::Config(e.to_string()),
            Error::SamplingBudgetExceeded { .. } | Error::Eigen(_) | Error::Diverged { .. } | Error::Io(_) => {
                RunError::Solver(e.to_string())
            }
        }
    }
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    n: usize,
    m: usize,
    rel_error: Option<f64>,
    iters: usize,
    wall_time: f64,
    converged: bool,
    final_r: f64,
    final_s: f64,
    objective: f64,
    restarts: usize,
    signal_seed: u64,
    observation_seed: u64,
}

fn write_manifest(cfg: &RunConfig) -> Result<(), RunError> {
    let manifest = Manifest::new(cfg.command.name(), cfg)?;
    io::write_json(&cfg.paths.out.join("manifest.json"), &manifest)?;
    Ok(())
}

fn instance(cfg: &RunConfig) -> Result<(Option<SpectralSignal>, ObservationSet, u64, u64), RunError> {
    let (sig_seed, obs_seed) = experiment::derive_seeds(cfg.seed);
    let signal = match &cfg.paths.signal {
        Some(p) => Some(io::signal_from_json(&fs::read_to_string(p).map_err(|e| {
            RunError::Config(format!("cannot read {}: {e}", p.display()))
        })?)?),
        None if cfg.paths.observations.is_some() => None,
        None => Some(synth_random(cfg.problem.n, cfg.problem.s, sig_seed)?),
    };
    let obs = match (&cfg.paths.observations, &signal) {
        (Some(p), _) => io::observations_from_json(&fs::read_to_string(p).map_err(|e| {
            RunError::Config(format!("cannot read {}: {e}", p.display()))
        })?)?,
        (None, Some(sig)) => sample_observations(sig, cfg.problem.m, obs_seed)?,
        (None, None) => unreachable!(),
    };
    if let Some(sig) = &signal {
        if sig.n() != obs.n() {
            return Err(RunError::Config(format!(
                "signal has n={} but observations have n={}",
                sig.n(),
                obs.n()
            )));
        }
    }
    Ok((signal, obs, sig_seed, obs_seed))
}

fn run_synth(cfg: &RunConfig) -> Result<(), RunError> {
    let (signal, obs, _, _) = instance(cfg)?;
    let out = &cfg.paths.out;
    let signal = signal.expect("synth always has a signal");
    fs::write(out.join("signal.json"), io::signal_to_json(&signal)?).map_err(Error::from)?;
    fs::write(out.join("observations.json"), io::observations_to_json(&obs)?).map_err(Error::from)?;
    fs::write(out.join("signal.csv"), io::dense_to_csv(signal.dense().as_ref())).map_err(Error::from)?;
    println!(
        "synthesized n={} s={} (min separation {:.4}) with m={} observations -> {}",
        signal.n(),
        signal.s(),
        signal.min_separation(),
        obs.m(),
        out.display()
    );
    Ok(())
}

fn run_solve(cfg: &RunConfig) -> Result<(), RunError> {
    let (signal, obs, sig_seed, obs_seed) = instance(cfg)?;
    let result = admm::solve(&obs, &cfg.solver, signal.as_ref())?;
    let out = &cfg.paths.out;
    let summary = SolveSummary {
        n: obs.n(),
        m: obs.m(),
        rel_error: result.rel_error,
        iters: result.iters,
        wall_time: result.wall_time,
        converged: result.converged,
        final_r: result.final_r,
        final_s: result.final_s,
        objective: result.objective,
        restarts: result.restarts,
        signal_seed: sig_seed,
        observation_seed: obs_seed,
    };
    io::write_json(&out.join("result.json"), &summary)?;
    fs::write(out.join("trace.csv"), trace_csv(&result.history)).map_err(Error::from)?;
    fs::write(out.join("recovered.csv"), io::dense_to_csv(result.x_rec.as_ref())).map_err(Error::from)?;
    if let Some(sig) = &signal {
        fs::write(out.join("signal.json"), io::signal_to_json(sig)?).map_err(Error::from)?;
        let err = relative_error(result.x_rec.as_ref(), sig.dense().as_ref())?;
        println!(
            "n={} m={} {}: rel_error={err:.4e} iters={} converged={} time={:.2}s",
            obs.n(),
            obs.m(),
            cfg.solver.variant,
            result.iters,
            result.converged,
            result.wall_time
        );
    } else {
        println!(
            "n={} m={} {}: iters={} converged={} time={:.2}s",
            obs.n(),
            obs.m(),
            cfg.solver.variant,
            result.iters,
            result.converged,
            result.wall_time
        );
    }
    if !result.converged {
        return Err(RunError::Solver(format!(
            "no convergence within {} iterations (r={:.3e}, s={:.3e})",
            cfg.solver.max_iters, result.final_r, result.final_s
        )));
    }
    Ok(())
}

fn run_phase(cfg: &RunConfig) -> Result<(), RunError> {
    let spec = cfg.experiment.as_ref().expect("phase config carries a grid");
    let result = experiment::run_phase_grid_with_jobs(spec, &cfg.solver, cfg.jobs)?;
    let out = &cfg.paths.out;
    let (csv, pgm) = emit_phase_plot(&result, &out.join("phase"))?;
    fs::write(out.join("cells.csv"), cells_csv(&result)).map_err(Error::from)?;
    io::write_json(&out.join("phase.json"), &result)?;
    println!(
        "{}x{} grid, {} trials per cell ({}): {} and {}",
        spec.m_values.len(),
        spec.s_values.len(),
        spec.trials,
        spec.variant,
        csv.display(),
        pgm.display()
    );
    Ok(())
}

fn run_bench(cfg: &RunConfig) -> Result<(), RunError> {
    let sizes: Vec<(usize, usize)> = BENCH_SIZES.to_vec();
    let rows = experiment::run_bench(&sizes, cfg.problem.s, &cfg.solver, cfg.seed)?;
    fs::write(cfg.paths.out.join("bench.csv"), bench_csv(&rows)).map_err(Error::from)?;
    for r in &rows {
        println!(
            "n={:>3} m={:>4}  {:.3}s  rel_error={:.3e}  iters={}  success={}",
            r.n, r.m, r.wall_time, r.rel_error, r.iters, r.success
        );
    }
    Ok(())
}

/// Executes a parsed configuration, writing outputs under `cfg.paths.out`.
pub fn run(cfg: &RunConfig) -> Result<(), RunError> {
    fs::create_dir_all(&cfg.paths.out)
        .map_err(|e| RunError::Config(format!("cannot create {}: {e}", cfg.paths.out.display())))?;
    write_manifest(cfg)?;
    match cfg.command {
        Command::Synth => run_synth(cfg),
        Command::Solve | Command::DemoLarge => run_solve(cfg),
        Command::Phase => run_phase(cfg),
        Command::Bench => run_bench(cfg),
    }
}

/// Parses, runs, and maps the outcome to an exit code (0 ok, 1 solver failure, 2 config error).
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match parse_cli(argv) {
        Ok(cfg) => cfg,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cfg) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

//! `hdfactor` command line.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 when the
//! solver ran but did not produce a correct factorization.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::experiments::{
    accuracy_sweep, default_kernel_grid, kernel_sweep, linear_grid, min_dim_search, SweepConfig,
};
use crate::io::{self, Envelope, Format, RunManifest};
use crate::primes::{candidate_set, prime_window};
use crate::resonator::{solve, ConvergenceSim, FactorizationResult, ResonatorConfig, UpdateMode};
use crate::rng::Rng;

/// Environment variable supplying the default seed.
pub const SEED_ENV: &str = "HDFACTOR_SEED";
const FALLBACK_SEED: u64 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNSOLVED: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "hdfactor",
    version,
    about = "Factor integers with a resonator network over log-FPE phasor hypervectors",
    after_help = "The default seed is read from $HDFACTOR_SEED when set (else 1); --seed takes precedence."
)]
struct Cli {
    /// Worker threads [default: available parallelism]. Never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Factor one composite.
    Factor(FactorArgs),
    /// Accuracy / iteration sweep over codebook cardinality and dimension.
    Sweep(SweepArgs),
    /// Similarity profile of a superposed set of encoded scalars.
    Kernel(KernelArgs),
    /// Minimal dimensionality reaching a target accuracy, per cardinality.
    Mindim(MindimArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum CodebookMode {
    /// All primes up to s/2.
    Full,
    /// `--count` consecutive primes starting at `--start-prime`.
    Window,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => Format::Json,
            FormatArg::Csv => Format::Csv,
        }
    }
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Iteration cap.
    #[arg(long, default_value_t = crate::resonator::DEFAULT_MAX_ITERS)]
    max_iters: usize,
    /// Steps over which top-1 indices must be unchanged to stop.
    #[arg(long, default_value_t = crate::resonator::DEFAULT_CONVERGENCE_WINDOW)]
    convergence_window: usize,
    /// Minimum cleanup similarity to stop: a number in (0, 1], or `auto` = min(0.95, 4/sqrt(n)).
    #[arg(long, default_value = "auto")]
    convergence_sim: String,
    /// Update order within a step.
    #[arg(long, default_value = "asynchronous", value_parser = ["asynchronous", "synchronous", "async", "sync"])]
    update_mode: String,
}

impl SolverArgs {
    fn resonator(&self, k: usize, record_trace: bool) -> Result<ResonatorConfig> {
        let cfg = ResonatorConfig {
            max_iters: self.max_iters,
            convergence_window: self.convergence_window,
            convergence_sim: ConvergenceSim::from_str(&self.convergence_sim)?,
            update_mode: UpdateMode::from_str(&self.update_mode)?,
            k,
            record_trace,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct FactorArgs {
    /// Composite to factor (at least 4).
    s: Option<String>,
    /// Hypervector dimensionality n.
    #[arg(long, default_value_t = 1024)]
    dim: usize,
    /// Codebook construction.
    #[arg(long, value_enum, default_value_t = CodebookMode::Full)]
    codebook: CodebookMode,
    /// First prime of a window codebook.
    #[arg(long, default_value_t = 2)]
    start_prime: u64,
    /// Primes in a window codebook.
    #[arg(long, default_value_t = 512)]
    count: usize,
    /// Number of factors k.
    #[arg(long, default_value_t = 2)]
    factors: usize,
    /// Bandwidth multiplier: beta = scale / min adjacent log-prime gap.
    #[arg(long, default_value = "1e4")]
    beta_scale: f64,
    #[command(flatten)]
    solver: SolverArgs,
    /// Seed of the base vector [default: $HDFACTOR_SEED or 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Retries with a fresh base vector after a failed attempt.
    #[arg(long, default_value_t = 0)]
    restarts: usize,
    /// Add the all-ones (label 1) row to the codebook.
    #[arg(long)]
    identity: bool,
    /// Record per-iteration cleanup indices and similarities.
    #[arg(long)]
    trace: bool,
    /// Warn when the codebook is estimated to exceed this many MiB.
    #[arg(long, default_value_t = 1024)]
    memory_budget_mb: usize,
    /// Read the codebook from a file instead of generating it.
    #[arg(long)]
    load_codebook: Option<PathBuf>,
    /// Write the codebook used by the final attempt.
    #[arg(long)]
    save_codebook: Option<PathBuf>,
    /// Result file; a manifest is written beside it. Prints to stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Re-run a previous factor manifest; other options except --out/--format are ignored.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridOverrides {
    /// Comma-separated codebook cardinalities.
    #[arg(long)]
    cardinalities: Option<String>,
    /// Comma-separated dimensionalities.
    #[arg(long)]
    dims: Option<String>,
    /// Trials per cell.
    #[arg(long)]
    trials: Option<usize>,
    /// Number of factors k.
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated window start primes.
    #[arg(long)]
    start_primes: Option<String>,
    /// Seed [default: config file, else $HDFACTOR_SEED, else 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration cap [default: 100].
    #[arg(long)]
    max_iters: Option<usize>,
    /// Convergence threshold, number or `auto` [default: auto].
    #[arg(long)]
    convergence_sim: Option<String>,
    /// Bandwidth multiplier [default: 1e4].
    #[arg(long)]
    beta_scale: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// TOML config file, or a manifest JSON from a previous sweep.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    grid: GridOverrides,
    /// Output file; a manifest is written beside it. Prints to stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Args, Debug)]
struct MindimArgs {
    /// TOML config file, or a manifest JSON from a previous mindim run.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    grid: GridOverrides,
    /// Independent scans per cardinality [default: 3].
    #[arg(long)]
    repeats: Option<usize>,
    /// Target accuracy in (0, 1] [default: 0.95].
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Args, Debug)]
struct KernelArgs {
    /// Comma-separated set elements; `log:N` means ln(N).
    #[arg(long, default_value = "log:2,log:3,log:5,log:11", allow_hyphen_values = true)]
    elements: String,
    /// Comma-separated bandwidths.
    #[arg(long, default_value = "2.1,3.1,5.0")]
    betas: String,
    /// Hypervector dimensionality n.
    #[arg(long, default_value_t = crate::experiments::DEFAULT_KERNEL_DIM)]
    dim: usize,
    /// Base vectors drawn per bandwidth.
    #[arg(long, default_value_t = crate::experiments::DEFAULT_KERNEL_RUNS)]
    runs: usize,
    /// Grid points.
    #[arg(long, default_value_t = crate::experiments::DEFAULT_KERNEL_GRID)]
    grid: usize,
    /// Grid start [default: min(0, smallest element)].
    #[arg(long, allow_hyphen_values = true)]
    grid_min: Option<String>,
    /// Grid end [default: max(log 12, largest element)].
    #[arg(long, allow_hyphen_values = true)]
    grid_max: Option<String>,
    /// Seed [default: $HDFACTOR_SEED or 1].
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

/// Resolved `factor` settings, as stored in its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FactorRun {
    s: String,
    dim: usize,
    codebook: CodebookMode,
    start_prime: u64,
    count: usize,
    beta_scale: f64,
    resonator: ResonatorConfig,
    seed: u64,
    restarts: usize,
    identity: bool,
    memory_budget_mb: usize,
    load_codebook: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CodebookInfo {
    mode: CodebookMode,
    rows: usize,
    n: usize,
    beta: f64,
    seed: u64,
    stream: u64,
    smallest_prime: u64,
    largest_prime: u64,
    identity: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FactorOutput {
    result: FactorizationResult,
    attempts: usize,
    codebook: CodebookInfo,
}

/// Resolved `kernel` settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct KernelRun {
    element_specs: Vec<String>,
    elements: Vec<f64>,
    betas: Vec<f64>,
    n: usize,
    runs: usize,
    grid_points: usize,
    grid_min: f64,
    grid_max: f64,
    seed: u64,
}

enum Outcome {
    Done,
    Unsolved,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be at least 1");
            return EXIT_USAGE;
        }
        // a pool may already exist when called repeatedly in-process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let res = match cli.command {
        Command::Factor(a) => cmd_factor(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Kernel(a) => cmd_kernel(a),
        Command::Mindim(a) => cmd_mindim(a),
    };
    match res {
        Ok(Outcome::Done) => EXIT_OK,
        Ok(Outcome::Unsolved) => EXIT_UNSOLVED,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={v} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn default_seed() -> Result<u64> {
    Ok(env_seed()?.unwrap_or(FALLBACK_SEED))
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
    if items.is_empty() {
        return Err(Error::Config(format!("{what} list is empty")));
    }
    items
        .iter()
        .map(|p| {
            p.parse()
                .map_err(|_| Error::Config(format!("cannot parse `{p}` in {what}")))
        })
        .collect()
}

/// A real number, or `log:N` for the natural log of a positive number.
fn parse_scalar(spec: &str) -> Result<f64> {
    let spec = spec.trim();
    let v = if let Some(arg) = spec.strip_prefix("log:") {
        let x: f64 = arg
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("cannot parse `{spec}`")))?;
        if x <= 0.0 {
            return Err(Error::Config(format!("`{spec}`: log of a non-positive number")));
        }
        x.ln()
    } else {
        spec.parse()
            .map_err(|_| Error::Config(format!("cannot parse `{spec}`")))?
    };
    if !v.is_finite() {
        return Err(Error::Config(format!("`{spec}` is not finite")));
    }
    Ok(v)
}

fn emit(out: Option<&Path>, bytes: &[u8], manifest: &RunManifest) -> Result<()> {
    match out {
        Some(p) => io::write_with_manifest(p, bytes, manifest),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn cmd_factor(a: FactorArgs) -> Result<Outcome> {
    let run = match &a.manifest {
        Some(path) => {
            let m = RunManifest::load(path)?;
            if m.subcommand != "factor" {
                return Err(Error::Config(format!("{} is a `{}` manifest", path.display(), m.subcommand)));
            }
            m.config_as::<FactorRun>()?
        }
        None => FactorRun {
            s: a.s.clone().ok_or_else(|| Error::Config("missing composite <S>".into()))?,
            dim: a.dim,
            codebook: a.codebook,
            start_prime: a.start_prime,
            count: a.count,
            beta_scale: a.beta_scale,
            resonator: a.solver.resonator(a.factors, a.trace)?,
            seed: match a.seed {
                Some(s) => s,
                None => default_seed()?,
            },
            restarts: a.restarts,
            identity: a.identity,
            memory_budget_mb: a.memory_budget_mb,
            load_codebook: a.load_codebook.as_ref().map(|p| p.display().to_string()),
        },
    };
    let s: u128 = run
        .s
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{}` is not a positive integer", run.s)))?;
    if s < 4 {
        return Err(Error::Config(format!("composite must be at least 4 (got {s})")));
    }
    if run.dim == 0 {
        return Err(Error::Config("--dim must be at least 1".into()));
    }
    run.resonator.validate()?;

    let primes = match (&run.load_codebook, run.codebook) {
        (Some(_), _) => None,
        (None, CodebookMode::Full) => Some(candidate_set(s)?),
        (None, CodebookMode::Window) => Some(prime_window(run.start_prime, run.count)?),
    };
    if let Some(ps) = &primes {
        let bytes = Codebook::estimated_bytes(ps.len() + run.identity as usize, run.dim);
        let budget = run.memory_budget_mb.saturating_mul(1 << 20);
        if bytes > budget {
            eprintln!(
                "warning: codebook of {} rows at n={} needs about {} MiB (budget {} MiB)",
                ps.len(),
                run.dim,
                bytes >> 20,
                run.memory_budget_mb
            );
        }
    }

    let attempts_allowed = if run.load_codebook.is_some() { 1 } else { run.restarts + 1 };
    let mut last = None;
    for attempt in 0..attempts_allowed {
        let book = match (&run.load_codebook, &primes) {
            (Some(path), _) => Codebook::load(Path::new(path))?,
            (None, Some(ps)) => Codebook::build(
                ps.primes(),
                run.dim,
                &mut Rng::with_stream(run.seed, attempt as u64),
                run.beta_scale,
                run.identity,
            )?,
            (None, None) => unreachable!("primes are resolved whenever no codebook file is given"),
        };
        let result = match solve(s, &book, &run.resonator) {
            Ok(r) => r,
            Err(e @ Error::Divergence { .. }) => {
                eprintln!("error: {e}");
                return Ok(Outcome::Unsolved);
            }
            Err(e) => return Err(e),
        };
        let correct = result.correct;
        last = Some((book, result, attempt + 1));
        if correct {
            break;
        }
    }
    let (book, result, attempts) = last.expect("at least one attempt");
    if let Some(p) = &a.save_codebook {
        book.save(p)?;
    }
    let (seed, stream) = book.provenance();
    let primes_only = book.primes();
    let info = CodebookInfo {
        mode: run.codebook,
        rows: book.len(),
        n: book.dim(),
        beta: book.beta(),
        seed,
        stream,
        smallest_prime: primes_only.first().copied().unwrap_or(0),
        largest_prime: primes_only.last().copied().unwrap_or(0),
        identity: book.includes_identity(),
    };
    eprintln!(
        "{}: predicted {:?}, {} after {} iterations ({} attempt{})",
        s,
        result.predicted_factors,
        if result.correct { "correct" } else { "incorrect" },
        result.iterations_used,
        attempts,
        if attempts == 1 { "" } else { "s" }
    );
    let format: Format = a.format.into();
    let bytes = match format {
        Format::Json => io::to_json_bytes(&Envelope::new(
            "factor",
            &FactorOutput {
                result: result.clone(),
                attempts,
                codebook: info,
            },
        ))?,
        Format::Csv => io::serialize_result(&result, Format::Csv)?,
    };
    let manifest = RunManifest::new("factor", &run, run.seed, a.out.as_deref(), Some(format))?;
    emit(a.out.as_deref(), &bytes, &manifest)?;
    Ok(if result.correct {
        Outcome::Done
    } else {
        Outcome::Unsolved
    })
}

/// Reads a sweep config from TOML, or the config of a JSON manifest. The
/// seed falls back to the environment only when the file does not set one.
fn load_sweep_config(path: Option<&Path>, subcommand: &str) -> Result<SweepConfig> {
    let Some(path) = path else {
        return Ok(SweepConfig {
            seed: default_seed()?,
            ..Default::default()
        });
    };
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        let m: RunManifest = io::from_json_envelope(text.as_bytes(), "manifest")?;
        if m.subcommand != subcommand {
            return Err(Error::Config(format!("{} is a `{}` manifest", path.display(), m.subcommand)));
        }
        return m.config_as();
    }
    let mut table: toml::Table =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if !table.contains_key("seed") {
        if let Some(s) = env_seed()? {
            let s = i64::try_from(s).map_err(|_| Error::Config(format!("{SEED_ENV} too large for a config file")))?;
            table.insert("seed".into(), toml::Value::Integer(s));
        }
    }
    table
        .try_into()
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn apply_overrides(cfg: &mut SweepConfig, g: &GridOverrides) -> Result<()> {
    if let Some(v) = &g.cardinalities {
        cfg.cardinalities = parse_list(v, "cardinalities")?;
    }
    if let Some(v) = &g.dims {
        cfg.dims = parse_list(v, "dims")?;
    }
    if let Some(v) = g.trials {
        cfg.trials_per_cell = v;
    }
    if let Some(v) = g.k {
        cfg.k = v;
    }
    if let Some(v) = &g.start_primes {
        cfg.start_primes = Some(parse_list(v, "start primes")?);
    }
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    if let Some(v) = g.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = &g.convergence_sim {
        cfg.convergence_sim = v.parse()?;
    }
    if let Some(v) = g.beta_scale {
        cfg.beta_scale = v;
    }
    cfg.validate()
}

fn cmd_sweep(a: SweepArgs) -> Result<Outcome> {
    let mut cfg = load_sweep_config(a.config.as_deref(), "sweep")?;
    apply_overrides(&mut cfg, &a.grid)?;
    let summary = accuracy_sweep(&cfg)?;
    for c in &summary.cells {
        match &c.error {
            Some(e) => eprintln!("M={} n={}: error: {e}", c.cardinality, c.n),
            None => eprintln!(
                "M={} n={} k={}: accuracy {:.3}, mean iterations {:.1}, converged {:.3}",
                c.cardinality, c.n, c.k, c.accuracy, c.mean_iterations, c.convergence_rate
            ),
        }
    }
    let format: Format = a.format.into();
    let bytes = io::serialize_sweep(&summary, format)?;
    let manifest = RunManifest::new("sweep", &cfg, cfg.seed, a.out.as_deref(), Some(format))?;
    emit(a.out.as_deref(), &bytes, &manifest)?;
    Ok(Outcome::Done)
}

const MINDIM_DEFAULT_CARDINALITIES: [usize; 4] = [32, 64, 128, 256];
const MINDIM_DEFAULT_DIMS: [usize; 15] = [
    16, 24, 32, 48, 64, 96, 128, 192, 256, 384, 512, 768, 1024, 1536, 2048,
];

fn cmd_mindim(a: MindimArgs) -> Result<Outcome> {
    let mut cfg = match &a.config {
        Some(p) => load_sweep_config(Some(p), "mindim")?,
        None => SweepConfig {
            cardinalities: MINDIM_DEFAULT_CARDINALITIES.to_vec(),
            dims: MINDIM_DEFAULT_DIMS.to_vec(),
            repeats: 3,
            seed: default_seed()?,
            ..Default::default()
        },
    };
    if let Some(t) = a.threshold {
        if !(t > 0.0 && t <= 1.0) {
            return Err(Error::Config(format!("--threshold must be in (0, 1] (got {t})")));
        }
        cfg.success_threshold = t;
    }
    if let Some(r) = a.repeats {
        cfg.repeats = r;
    }
    apply_overrides(&mut cfg, &a.grid)?;
    let summary = min_dim_search(&cfg)?;
    for r in &summary.rows {
        eprintln!(
            "M={}: minimal n per run [{}], mean {}",
            r.cardinality,
            r.run_minima
                .iter()
                .map(|m| m.map_or("unbounded".into(), |v| v.to_string()))
                .collect::<Vec<_>>()
                .join(", "),
            r.mean_min_dim.map_or("unbounded".into(), |v| format!("{v:.1}"))
        );
    }
    for f in &summary.slopes {
        eprintln!(
            "start {}: log-log slope {}",
            f.start_prime,
            f.slope.map_or("n/a".into(), |v| format!("{v:.3}"))
        );
    }
    let format: Format = a.format.into();
    let bytes = io::serialize_mindim(&summary, format)?;
    let manifest = RunManifest::new("mindim", &cfg, cfg.seed, a.out.as_deref(), Some(format))?;
    emit(a.out.as_deref(), &bytes, &manifest)?;
    Ok(Outcome::Done)
}

fn cmd_kernel(a: KernelArgs) -> Result<Outcome> {
    let specs: Vec<String> = a
        .elements
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    if specs.is_empty() {
        return Err(Error::Config("--elements is empty".into()));
    }
    let elements = specs.iter().map(|s| parse_scalar(s)).collect::<Result<Vec<_>>>()?;
    let betas: Vec<f64> = parse_list(&a.betas, "betas")?;
    let lo = elements.iter().copied().fold(0.0, f64::min);
    let hi = elements.iter().copied().fold(12f64.ln(), f64::max);
    let grid_min = a.grid_min.as_deref().map(parse_scalar).transpose()?.unwrap_or(lo);
    let grid_max = a.grid_max.as_deref().map(parse_scalar).transpose()?.unwrap_or(hi);
    let run = KernelRun {
        element_specs: specs,
        elements,
        betas,
        n: a.dim,
        runs: a.runs,
        grid_points: a.grid,
        grid_min,
        grid_max,
        seed: match a.seed {
            Some(s) => s,
            None => default_seed()?,
        },
    };
    if run.n == 0 {
        return Err(Error::Config("--dim must be at least 1".into()));
    }
    let grid = if run.grid_min == 0.0 && run.grid_max == 12f64.ln() {
        default_kernel_grid(run.grid_points)?
    } else {
        linear_grid(run.grid_min, run.grid_max, run.grid_points)?
    };
    let profiles = kernel_sweep(&run.elements, &run.betas, run.n, run.runs, &grid, run.seed)?;
    let format: Format = a.format.into();
    let bytes = io::serialize_kernel(&profiles, format)?;
    let manifest = RunManifest::new("kernel", &run, run.seed, a.out.as_deref(), Some(format))?;
    emit(a.out.as_deref(), &bytes, &manifest)?;
    Ok(Outcome::Done)
}

//! Drivers for the kernel, accuracy, minimal-dimension and iteration studies.
//!
//! Every random draw is derived from the configured seed and the cell
//! coordinates through [`mix_seed`], so a cell's results do not depend on
//! which other cells run, in what order, or on how many threads.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::fpe::{FpeEncoder, DEFAULT_BETA_SCALE};
use crate::hrr::{cosine_similarity, superpose, SuperposedVector};
use crate::primes::{prime_window, sample_composite};
use crate::resonator::{
    solve_batch, ConvergenceSim, ResonatorConfig, UpdateMode, DEFAULT_CONVERGENCE_WINDOW,
    DEFAULT_MAX_ITERS,
};
use crate::rng::{mix_seed, Rng};

pub const DEFAULT_KERNEL_DIM: usize = 512;
pub const DEFAULT_KERNEL_RUNS: usize = 30;
pub const DEFAULT_KERNEL_GRID: usize = 400;
pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 0.95;
pub const DEFAULT_SEED: u64 = 1;

/// Mean and spread of `cos(s, z(x))` over a grid, for one bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelProfile {
    pub beta: f64,
    pub grid: Vec<f64>,
    pub mean_similarity: Vec<f64>,
    /// Population standard deviation across runs; zero for a single run.
    pub std_similarity: Vec<f64>,
    pub runs: usize,
    pub n: usize,
    pub set_elements: Vec<f64>,
}

impl KernelProfile {
    /// Grid indices of local maxima whose mean exceeds `floor`. A plateau
    /// counts once, at its first index; endpoints qualify against their
    /// single neighbour.
    pub fn local_maxima(&self, floor: f64) -> Vec<usize> {
        local_maxima(&self.mean_similarity, floor)
    }
}

pub(crate) fn local_maxima(v: &[f64], floor: f64) -> Vec<usize> {
    let len = v.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < len {
        let mut j = i;
        while j + 1 < len && v[j + 1] == v[i] {
            j += 1;
        }
        let left_ok = i == 0 || v[i - 1] < v[i];
        let right_ok = j + 1 == len || v[j + 1] < v[i];
        if left_ok && right_ok && v[i] > floor && len > 1 {
            out.push(i);
        }
        i = j + 1;
    }
    out
}

/// `points` evenly spaced values over `[lo, hi]`, endpoints included.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least 2 points over a nonempty range (got {points} over [{lo}, {hi}])"
        )));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i + 1 == points { hi } else { lo + step * i as f64 })
        .collect())
}

/// The default kernel grid: `points` values over `[0, log 12]`.
pub fn default_kernel_grid(points: usize) -> Result<Vec<f64>> {
    linear_grid(0.0, 12f64.ln(), points)
}

/// For each bandwidth and run, draws a fresh base vector, superposes the
/// encodings of `elements`, and records its cosine similarity to `z(x)` at
/// every grid point. Run `r` of bandwidth `b` uses stream `b·runs + r`.
pub fn kernel_sweep(
    elements: &[f64],
    betas: &[f64],
    n: usize,
    runs: usize,
    grid: &[f64],
    seed: u64,
) -> Result<Vec<KernelProfile>> {
    if elements.is_empty() {
        return Err(Error::Empty("kernel set elements"));
    }
    if betas.is_empty() {
        return Err(Error::Empty("kernel bandwidths"));
    }
    if runs == 0 {
        return Err(Error::InvalidArgument("runs must be at least 1".into()));
    }
    if grid.is_empty() {
        return Err(Error::Empty("kernel grid"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("grid must be finite and strictly ascending".into()));
    }
    let (lo, hi) = elements.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| {
        (a.min(e), b.max(e))
    });
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::NonFinite("kernel set elements"));
    }
    if grid[0] > lo || grid[grid.len() - 1] < hi {
        return Err(Error::InvalidArgument(format!(
            "grid [{}, {}] does not cover the elements [{lo}, {hi}]",
            grid[0],
            grid[grid.len() - 1]
        )));
    }

    let mut profiles = Vec::with_capacity(betas.len());
    for (bi, &beta) in betas.iter().enumerate() {
        let mut sum = vec![0.0; grid.len()];
        let mut sum_sq = vec![0.0; grid.len()];
        for run in 0..runs {
            let mut rng = Rng::with_stream(seed, (bi * runs + run) as u64);
            let enc = FpeEncoder::random(n, beta, &mut rng)?;
            let encoded = elements
                .iter()
                .map(|&e| enc.encode(e))
                .collect::<Result<Vec<_>>>()?;
            let set: SuperposedVector = superpose(encoded.iter())?;
            for (g, &x) in grid.iter().enumerate() {
                let c = cosine_similarity(&set, &enc.encode(x)?)?;
                sum[g] += c;
                sum_sq[g] += c * c;
            }
        }
        let r = runs as f64;
        let mean: Vec<f64> = sum.iter().map(|s| s / r).collect();
        let std = sum_sq
            .iter()
            .zip(&mean)
            .map(|(sq, m)| (sq / r - m * m).max(0.0).sqrt())
            .map(|s| if runs == 1 { 0.0 } else { s })
            .collect();
        profiles.push(KernelProfile {
            beta,
            grid: grid.to_vec(),
            mean_similarity: mean,
            std_similarity: std,
            runs,
            n,
            set_elements: elements.to_vec(),
        });
    }
    Ok(profiles)
}

fn default_cardinalities() -> Vec<usize> {
    vec![64, 128, 256, 512, 1024, 2048, 4096]
}
fn default_dims() -> Vec<usize> {
    vec![512]
}
fn default_trials() -> usize {
    200
}
fn default_k() -> usize {
    2
}
fn default_start_prime() -> u64 {
    2
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_success() -> f64 {
    DEFAULT_SUCCESS_THRESHOLD
}
fn default_beta_scale() -> f64 {
    DEFAULT_BETA_SCALE
}
fn default_true() -> bool {
    true
}
fn default_repeats() -> usize {
    1
}
fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}
fn default_window() -> usize {
    DEFAULT_CONVERGENCE_WINDOW
}
fn default_mode() -> UpdateMode {
    UpdateMode::Asynchronous
}

/// Grid of (cardinality, dimensionality) cells and the solver settings
/// shared by every cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_cardinalities")]
    pub cardinalities: Vec<usize>,
    #[serde(default = "default_dims")]
    pub dims: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials_per_cell: usize,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_start_prime")]
    pub start_prime: u64,
    /// Overrides `start_prime` with several window starts when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_primes: Option<Vec<u64>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_success")]
    pub success_threshold: f64,
    /// Independent scans per cardinality in the minimal-dimension search.
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_beta_scale")]
    pub beta_scale: f64,
    /// Draw factors without replacement.
    #[serde(default = "default_true")]
    pub distinct: bool,
    #[serde(default)]
    pub identity: bool,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_window")]
    pub convergence_window: usize,
    #[serde(default)]
    pub convergence_sim: ConvergenceSim,
    #[serde(default = "default_mode")]
    pub update_mode: UpdateMode,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            cardinalities: default_cardinalities(),
            dims: default_dims(),
            trials_per_cell: default_trials(),
            k: default_k(),
            start_prime: default_start_prime(),
            start_primes: None,
            seed: DEFAULT_SEED,
            success_threshold: DEFAULT_SUCCESS_THRESHOLD,
            repeats: 1,
            beta_scale: DEFAULT_BETA_SCALE,
            distinct: true,
            identity: false,
            max_iters: DEFAULT_MAX_ITERS,
            convergence_window: DEFAULT_CONVERGENCE_WINDOW,
            convergence_sim: ConvergenceSim::Auto,
            update_mode: UpdateMode::Asynchronous,
        }
    }
}

impl SweepConfig {
    /// Parses a TOML document; missing keys take their defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resonator(&self) -> ResonatorConfig {
        ResonatorConfig {
            max_iters: self.max_iters,
            convergence_window: self.convergence_window,
            convergence_sim: self.convergence_sim,
            update_mode: self.update_mode,
            k: self.k,
            record_trace: false,
        }
    }

    pub fn start_points(&self) -> Vec<u64> {
        self.start_primes.clone().unwrap_or_else(|| vec![self.start_prime])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.cardinalities.is_empty() || self.cardinalities.contains(&0) {
            return bad("cardinalities must be a nonempty list of positive integers");
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad("dims must be a nonempty list of positive integers");
        }
        if self.trials_per_cell == 0 {
            return bad("trials_per_cell must be at least 1");
        }
        if self.repeats == 0 {
            return bad("repeats must be at least 1");
        }
        if !(self.success_threshold > 0.0 && self.success_threshold <= 1.0) {
            return bad("success_threshold must be in (0, 1]");
        }
        if matches!(&self.start_primes, Some(v) if v.is_empty()) {
            return bad("start_primes must not be empty when given");
        }
        if self.start_points().contains(&0) {
            return bad("start primes must be positive");
        }
        if !(self.beta_scale.is_finite() && self.beta_scale > 0.0) {
            return bad("beta_scale must be positive");
        }
        self.resonator()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }
}

/// Outcome of one (start, cardinality, dimensionality) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub cardinality: usize,
    pub n: usize,
    pub k: usize,
    pub start_prime: u64,
    pub trials: usize,
    pub accuracy: f64,
    pub mean_iterations: f64,
    pub convergence_rate: f64,
    pub wall_time_s: f64,
    pub max_iters: usize,
    pub beta: f64,
    /// Per-trial iterations used, in sample order.
    pub iterations: Vec<usize>,
    /// Per-trial correctness, in sample order.
    pub correct: Vec<bool>,
    pub converged: Vec<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CellRecord {
    fn failed(
        cardinality: usize,
        n: usize,
        k: usize,
        start_prime: u64,
        max_iters: usize,
        err: &Error,
    ) -> Self {
        CellRecord {
            cardinality,
            n,
            k,
            start_prime,
            trials: 0,
            accuracy: 0.0,
            mean_iterations: 0.0,
            convergence_rate: 0.0,
            wall_time_s: 0.0,
            max_iters,
            beta: 0.0,
            iterations: Vec::new(),
            correct: Vec::new(),
            converged: Vec::new(),
            error: Some(err.to_string()),
        }
    }

    pub fn hit_cap(&self) -> usize {
        self.iterations.iter().filter(|&&i| i >= self.max_iters).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub cells: Vec<CellRecord>,
}

/// Seed for a cell; `repeat` separates independent scans of the same cell.
fn cell_seed(seed: u64, start: u64, m: usize, n: usize, repeat: usize) -> u64 {
    [start, m as u64, n as u64, repeat as u64]
        .iter()
        .fold(seed, |acc, &x| mix_seed(acc, x))
}

fn run_cell(cfg: &SweepConfig, start: u64, m: usize, n: usize, repeat: usize) -> CellRecord {
    let res = cfg.resonator();
    let t0 = Instant::now();
    let outcome = (|| -> Result<CellRecord> {
        let seed = cell_seed(cfg.seed, start, m, n, repeat);
        let primes = prime_window(start, m)?;
        let book = Codebook::build(
            primes.primes(),
            n,
            &mut Rng::with_stream(seed, 0),
            cfg.beta_scale,
            cfg.identity,
        )?;
        let mut rng = Rng::with_stream(seed, 1);
        let samples = (0..cfg.trials_per_cell)
            .map(|_| sample_composite(&primes, cfg.k, &mut rng, cfg.distinct))
            .collect::<Result<Vec<_>>>()?;
        let results = solve_batch(&samples, &book, &res)?;
        let trials = results.len();
        let correct: Vec<bool> = results.iter().map(|r| r.correct).collect();
        let converged: Vec<bool> = results.iter().map(|r| r.converged).collect();
        let iterations: Vec<usize> = results.iter().map(|r| r.iterations_used).collect();
        let count = |v: &[bool]| v.iter().filter(|&&b| b).count() as f64;
        Ok(CellRecord {
            cardinality: m,
            n,
            k: cfg.k,
            start_prime: start,
            trials,
            accuracy: count(&correct) / trials as f64,
            mean_iterations: iterations.iter().sum::<usize>() as f64 / trials as f64,
            convergence_rate: count(&converged) / trials as f64,
            wall_time_s: 0.0,
            max_iters: cfg.max_iters,
            beta: book.beta(),
            iterations,
            correct,
            converged,
            error: None,
        })
    })();
    let mut rec = outcome.unwrap_or_else(|e| CellRecord::failed(m, n, cfg.k, start, cfg.max_iters, &e));
    rec.wall_time_s = t0.elapsed().as_secs_f64();
    rec
}

/// Accuracy, iterations and convergence for every (start, M, n) cell.
pub fn accuracy_sweep(cfg: &SweepConfig) -> Result<SweepSummary> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for start in cfg.start_points() {
        for &m in &cfg.cardinalities {
            for &n in &cfg.dims {
                cells.push(run_cell(cfg, start, m, n, 0));
            }
        }
    }
    Ok(SweepSummary { cells })
}

/// Minimal qualifying dimensionality for one cardinality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinDimRow {
    pub start_prime: u64,
    pub cardinality: usize,
    pub k: usize,
    /// Smallest qualifying `n` per repeat; `None` when no grid value qualified.
    pub run_minima: Vec<Option<usize>>,
    /// Mean of `run_minima`; `None` (unbounded) if any repeat failed to qualify.
    pub mean_min_dim: Option<f64>,
    /// Every cell evaluated during the scans.
    pub cells: Vec<CellRecord>,
}

/// Least-squares slope of `log(min n)` on `log(M)` for one start prime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub start_prime: u64,
    /// `None` when fewer than two cardinalities have a bounded minimum.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinDimSummary {
    pub success_threshold: f64,
    pub rows: Vec<MinDimRow>,
    pub slopes: Vec<SlopeFit>,
}

/// Scans `cfg.dims` upward per cardinality and repeat, stopping at the
/// first `n` whose accuracy reaches `cfg.success_threshold`.
pub fn min_dim_search(cfg: &SweepConfig) -> Result<MinDimSummary> {
    cfg.validate()?;
    if cfg.dims.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("dims must be strictly ascending".into()));
    }
    let mut rows = Vec::new();
    let mut slopes = Vec::new();
    for start in cfg.start_points() {
        let mut points = Vec::new();
        for &m in &cfg.cardinalities {
            let mut run_minima = Vec::with_capacity(cfg.repeats);
            let mut cells = Vec::new();
            for repeat in 0..cfg.repeats {
                let mut found = None;
                for &n in &cfg.dims {
                    let cell = run_cell(cfg, start, m, n, repeat);
                    let ok = cell.error.is_none() && cell.accuracy >= cfg.success_threshold;
                    cells.push(cell);
                    if ok {
                        found = Some(n);
                        break;
                    }
                }
                run_minima.push(found);
            }
            let mean_min_dim = run_minima
                .iter()
                .try_fold(0.0, |acc, v| v.map(|n| acc + n as f64))
                .map(|s| s / cfg.repeats as f64);
            if let Some(mean) = mean_min_dim {
                points.push((m as f64, mean));
            }
            rows.push(MinDimRow {
                start_prime: start,
                cardinality: m,
                k: cfg.k,
                run_minima,
                mean_min_dim,
                cells,
            });
        }
        let fit = loglog_fit(&points);
        slopes.push(SlopeFit {
            start_prime: start,
            slope: fit.map(|f| f.0),
            intercept: fit.map(|f| f.1),
            points: points.len(),
        });
    }
    Ok(MinDimSummary {
        success_threshold: cfg.success_threshold,
        rows,
        slopes,
    })
}

/// Ordinary least squares of `ln y` on `ln x`; `(slope, intercept)`.
pub fn loglog_fit(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    xs.dedup();
    if xs.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Distribution of iterations used within one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub cardinality: usize,
    pub n: usize,
    pub k: usize,
    pub start_prime: u64,
    pub trials: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub fraction_at_cap: Option<f64>,
    /// Mean iterations over correct trials and over incorrect trials.
    pub mean_correct: Option<f64>,
    pub mean_incorrect: Option<f64>,
}

pub fn iteration_stats(summary: &SweepSummary) -> Vec<IterationStats> {
    summary.cells.iter().map(cell_iteration_stats).collect()
}

fn mean_of(v: impl Iterator<Item = usize>) -> Option<f64> {
    let (s, c) = v.fold((0usize, 0usize), |(s, c), x| (s + x, c + 1));
    (c > 0).then(|| s as f64 / c as f64)
}

pub fn cell_iteration_stats(cell: &CellRecord) -> IterationStats {
    let it = &cell.iterations;
    let median = if it.is_empty() {
        None
    } else {
        let mut v = it.clone();
        v.sort_unstable();
        let h = v.len() / 2;
        Some(if v.len() % 2 == 1 {
            v[h] as f64
        } else {
            (v[h - 1] + v[h]) as f64 / 2.0
        })
    };
    let pick = |want: bool| {
        mean_of(
            it.iter()
                .zip(&cell.correct)
                .filter(move |(_, &c)| c == want)
                .map(|(&i, _)| i),
        )
    };
    IterationStats {
        cardinality: cell.cardinality,
        n: cell.n,
        k: cell.k,
        start_prime: cell.start_prime,
        trials: it.len(),
        mean: mean_of(it.iter().copied()),
        median,
        fraction_at_cap: (!it.is_empty()).then(|| cell.hit_cap() as f64 / it.len() as f64),
        mean_correct: pick(true),
        mean_incorrect: pick(false),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> SweepConfig {
        SweepConfig {
            cardinalities: vec![4],
            dims: vec![256],
            trials_per_cell: 100,
            ..Default::default()
        }
    }

    #[test]
    fn local_maxima_rules() {
        assert_eq!(local_maxima(&[0.0, 1.0, 0.0, 2.0, 2.0, 1.0], 0.5), vec![1, 3]);
        assert_eq!(local_maxima(&[3.0, 1.0, 2.0], 0.0), vec![0, 2]);
        assert_eq!(local_maxima(&[1.0, 1.0, 1.0], 0.0), vec![0]);
        assert!(local_maxima(&[0.1, 0.2, 0.1], 0.3).is_empty());
        assert!(local_maxima(&[], 0.0).is_empty());
    }

    #[test]
    fn grids() {
        let g = default_kernel_grid(400).unwrap();
        assert_eq!(g.len(), 400);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[399], 12f64.ln());
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(linear_grid(0.0, 1.0, 1).is_err());
        assert!(linear_grid(1.0, 0.0, 5).is_err());
    }

    #[test]
    fn kernel_single_element_peaks_at_one() {
        let e = 3f64.ln();
        let grid = linear_grid(0.0, 2.0, 201).unwrap();
        for beta in [0.5, 5.0] {
            let p = &kernel_sweep(&[e], &[beta], 256, 3, &grid, 1).unwrap()[0];
            let (arg, &best) = p
                .mean_similarity
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            assert!((p.grid[arg] - e).abs() <= 0.01 + 1e-12);
            assert!(best > 0.99);
        }
    }

    #[test]
    fn kernel_single_run_has_zero_std() {
        let grid = default_kernel_grid(50).unwrap();
        let p = kernel_sweep(&[2f64.ln(), 5f64.ln()], &[3.1], 128, 1, &grid, 4).unwrap();
        assert!(p[0].std_similarity.iter().all(|&s| s == 0.0));
        assert_eq!(p[0].grid.len(), p[0].mean_similarity.len());
    }

    #[test]
    fn kernel_mean_matches_sinc() {
        // E[cos(s, z(x))] for one element e is sin(πβd)/(πβd), d = x - e,
        // for principal arguments uniform over (-π, π].
        let grid = linear_grid(0.0, 1.0, 21).unwrap();
        let beta = 4.0;
        let p = &kernel_sweep(&[0.5], &[beta], 2048, 20, &grid, 9).unwrap()[0];
        for (x, m) in p.grid.iter().zip(&p.mean_similarity) {
            let d = std::f64::consts::PI * beta * (x - 0.5);
            let oracle = if d == 0.0 { 1.0 } else { d.sin() / d };
            assert!((m - oracle).abs() < 0.02, "x={x} m={m} oracle={oracle}");
        }
    }

    #[test]
    fn kernel_input_checks() {
        let grid = default_kernel_grid(10).unwrap();
        assert!(kernel_sweep(&[], &[1.0], 8, 1, &grid, 0).is_err());
        assert!(kernel_sweep(&[1.0], &[], 8, 1, &grid, 0).is_err());
        assert!(kernel_sweep(&[1.0], &[1.0], 8, 0, &grid, 0).is_err());
        assert!(kernel_sweep(&[5.0], &[1.0], 8, 1, &grid, 0).is_err());
        assert!(kernel_sweep(&[1.0], &[1.0], 8, 1, &[1.0, 0.5], 0).is_err());
    }

    #[test]
    fn kernel_is_deterministic() {
        let grid = default_kernel_grid(40).unwrap();
        let a = kernel_sweep(&[1.0, 2.0], &[2.1, 5.0], 64, 4, &grid, 3).unwrap();
        let b = kernel_sweep(&[1.0, 2.0], &[2.1, 5.0], 64, 4, &grid, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tiny_sweep_is_perfect_and_exact() {
        let s = accuracy_sweep(&tiny_cfg()).unwrap();
        assert_eq!(s.cells.len(), 1);
        let c = &s.cells[0];
        assert!(c.error.is_none());
        assert_eq!(c.accuracy, 1.0);
        let correct = c.correct.iter().filter(|&&b| b).count();
        assert_eq!(c.accuracy, correct as f64 / c.trials as f64);
        assert!(c.mean_iterations <= c.max_iters as f64);
        assert!(c.accuracy <= c.convergence_rate + 0.02);
    }

    #[test]
    fn sweep_is_deterministic_and_cell_independent() {
        let mut cfg = tiny_cfg();
        cfg.cardinalities = vec![4, 8];
        cfg.trials_per_cell = 20;
        let strip = |mut s: SweepSummary| {
            s.cells.iter_mut().for_each(|c| c.wall_time_s = 0.0);
            s
        };
        let a = strip(accuracy_sweep(&cfg).unwrap());
        let b = strip(accuracy_sweep(&cfg).unwrap());
        assert_eq!(a, b);
        cfg.cardinalities = vec![8];
        let c = strip(accuracy_sweep(&cfg).unwrap());
        assert_eq!(c.cells[0], a.cells[1]);
    }

    #[test]
    fn cell_errors_do_not_abort_the_sweep() {
        let mut cfg = tiny_cfg();
        cfg.k = 3;
        cfg.cardinalities = vec![2, 4];
        cfg.trials_per_cell = 5;
        let s = accuracy_sweep(&cfg).unwrap();
        assert!(s.cells[0].error.is_some());
        assert!(s.cells[1].error.is_none());
    }

    #[test]
    fn config_checks() {
        assert!(SweepConfig::default().validate().is_ok());
        let mut c = SweepConfig::default();
        c.dims.clear();
        assert!(c.validate().is_err());
        let c = SweepConfig {
            success_threshold: 1.01,
            ..SweepConfig::default()
        };
        assert!(c.validate().is_err());
        let c = SweepConfig {
            trials_per_cell: 0,
            ..SweepConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let c: SweepConfig = toml::from_str("cardinalities = [8]\ndims = [64, 128]\nconvergence_sim = 0.9").unwrap();
        assert_eq!(c.convergence_sim, ConvergenceSim::Fixed(0.9));
        assert_eq!(c.trials_per_cell, 200);
        assert!(toml::from_str::<SweepConfig>("bogus = 1").is_err());
    }

    #[test]
    fn mindim_smallest_grid_value_for_two_primes() {
        let cfg = SweepConfig {
            cardinalities: vec![2],
            dims: vec![64, 128, 256],
            trials_per_cell: 20,
            repeats: 2,
            ..Default::default()
        };
        let s = min_dim_search(&cfg).unwrap();
        assert_eq!(s.rows[0].run_minima, vec![Some(64), Some(64)]);
        assert_eq!(s.rows[0].mean_min_dim, Some(64.0));
        assert_eq!(s.slopes[0].slope, None);
        let unsorted = SweepConfig {
            dims: vec![128, 64],
            ..cfg.clone()
        };
        assert!(min_dim_search(&unsorted).is_err());
    }

    #[test]
    fn mindim_reports_unbounded() {
        let cfg = SweepConfig {
            cardinalities: vec![256],
            dims: vec![16],
            trials_per_cell: 10,
            ..Default::default()
        };
        let s = min_dim_search(&cfg).unwrap();
        assert_eq!(s.rows[0].run_minima, vec![None]);
        assert_eq!(s.rows[0].mean_min_dim, None);
    }

    #[test]
    fn loglog_fit_recovers_power_law() {
        let pts: Vec<(f64, f64)> = [32.0, 64.0, 128.0, 256.0]
            .iter()
            .map(|&m: &f64| (m, 3.0 * m.powf(1.1)))
            .collect();
        let (slope, icept) = loglog_fit(&pts).unwrap();
        assert!((slope - 1.1).abs() < 1e-12);
        assert!((icept - 3f64.ln()).abs() < 1e-12);
        assert!(loglog_fit(&pts[..1]).is_none());
    }

    #[test]
    fn iteration_stats_cases() {
        let mut cell = accuracy_sweep(&tiny_cfg()).unwrap().cells.remove(0);
        let st = cell_iteration_stats(&cell);
        assert_eq!(st.fraction_at_cap, Some(0.0));
        assert!(st.mean.unwrap() < 10.0);
        cell.iterations = vec![1, 100, 3, 100];
        cell.correct = vec![true, false, true, false];
        let st = cell_iteration_stats(&cell);
        assert_eq!(st.median, Some(51.5));
        assert_eq!(st.fraction_at_cap, Some(0.5));
        assert_eq!(st.mean_correct, Some(2.0));
        assert_eq!(st.mean_incorrect, Some(100.0));
        cell.iterations.clear();
        cell.correct.clear();
        let st = cell_iteration_stats(&cell);
        assert_eq!((st.mean, st.median, st.fraction_at_cap), (None, None, None));
        assert!(iteration_stats(&SweepSummary { cells: vec![] }).is_empty());
    }
}

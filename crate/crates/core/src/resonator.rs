//! Resonator network over a shared log-FPE codebook.
//!
//! Each of the `k` factor estimates is updated as
//! `x̂_f ← f_n(Φ·Re(Φ†(s ⊙ ∏_{g≠f} conj(x̂_g))))`, in ascending factor order.
//! In asynchronous mode later factors see the estimates already updated in
//! the same step; in synchronous mode every factor reads the previous step.
//!
//! Estimates are held as phases. One step for a batch of `b` trials costs
//! two GEMM passes per factor over the codebook planes, plus one cleanup
//! pass for all factors; [`solve_batch`] drops finished trials from the
//! batch after every step. Because the kernel blocking does not depend on
//! batch width, a trial's trajectory is bit-identical whether it runs alone
//! ([`solve`], [`step`]) or inside a batch.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::error::{check_dims, Error, Result};
use crate::hrr::{normalized_phase, wrap_phase, Hypervector, PhasorVector};
use crate::kernel::{self, Planes};
use crate::primes::{verify_factorization, CompositeSample};

/// Trials solved together in one GEMM batch.
const BATCH_WIDTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateMode {
    Asynchronous,
    Synchronous,
}

impl std::str::FromStr for UpdateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asynchronous" | "async" => Ok(UpdateMode::Asynchronous),
            "synchronous" | "sync" => Ok(UpdateMode::Synchronous),
            other => Err(Error::InvalidArgument(format!("unknown update mode `{other}`"))),
        }
    }
}

pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_CONVERGENCE_WINDOW: usize = 3;
/// Upper bound of the automatic convergence threshold.
pub const MAX_AUTO_CONVERGENCE_SIM: f64 = 0.95;
/// Automatic threshold is this many multiples of `1/√n` above zero.
pub const AUTO_CONVERGENCE_SCALE: f64 = 4.0;

/// Minimum cleanup similarity required at convergence.
///
/// `Auto` resolves to `min(0.95, 4/√n)`. A decoded row's similarity at a
/// correct fixed point falls roughly as `1 - M/(8n)` and well below 0.95
/// once `M` approaches `n`, while chance similarity of a cleanup against
/// `M` rows grows like `√(ln M / n)`; the automatic value tracks the latter.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ConvergenceSim {
    #[default]
    Auto,
    Fixed(f64),
}

impl ConvergenceSim {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            ConvergenceSim::Auto => {
                (AUTO_CONVERGENCE_SCALE / (n as f64).sqrt()).min(MAX_AUTO_CONVERGENCE_SIM)
            }
            ConvergenceSim::Fixed(v) => v,
        }
    }
}

impl std::fmt::Display for ConvergenceSim {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConvergenceSim::Auto => f.write_str("auto"),
            ConvergenceSim::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl std::str::FromStr for ConvergenceSim {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(ConvergenceSim::Auto);
        }
        s.parse::<f64>()
            .map(ConvergenceSim::Fixed)
            .map_err(|_| Error::InvalidArgument(format!("convergence threshold `{s}` is not a number or `auto`")))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ConvergenceSimRepr {
    Fixed(f64),
    Named(String),
}

impl Serialize for ConvergenceSim {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            ConvergenceSim::Auto => ConvergenceSimRepr::Named("auto".into()),
            ConvergenceSim::Fixed(v) => ConvergenceSimRepr::Fixed(v),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ConvergenceSim {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        match ConvergenceSimRepr::deserialize(de)? {
            ConvergenceSimRepr::Fixed(v) => Ok(ConvergenceSim::Fixed(v)),
            ConvergenceSimRepr::Named(s) if s == "auto" => Ok(ConvergenceSim::Auto),
            ConvergenceSimRepr::Named(s) => Err(serde::de::Error::custom(format!(
                "convergence_sim must be a number or \"auto\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonatorConfig {
    pub max_iters: usize,
    /// Consecutive steps over which every top-1 index must be unchanged.
    pub convergence_window: usize,
    /// Minimum cleanup similarity of every factor at convergence.
    pub convergence_sim: ConvergenceSim,
    pub update_mode: UpdateMode,
    pub k: usize,
    pub record_trace: bool,
}

impl Default for ResonatorConfig {
    fn default() -> Self {
        ResonatorConfig {
            max_iters: DEFAULT_MAX_ITERS,
            convergence_window: DEFAULT_CONVERGENCE_WINDOW,
            convergence_sim: ConvergenceSim::Auto,
            update_mode: UpdateMode::Asynchronous,
            k: 2,
            record_trace: false,
        }
    }
}

impl ResonatorConfig {
    pub fn with_k(k: usize) -> Self {
        ResonatorConfig {
            k,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.k < 2 {
            return bad(format!("k must be at least 2 (got {})", self.k));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if self.convergence_window == 0 || self.convergence_window > self.max_iters {
            return bad(format!(
                "convergence_window must be in 1..={} (got {})",
                self.max_iters, self.convergence_window
            ));
        }
        if let ConvergenceSim::Fixed(v) = self.convergence_sim {
            if !(v > 0.0 && v <= 1.0) {
                return bad(format!("convergence_sim must be in (0, 1] (got {v})"));
            }
        }
        Ok(())
    }
}

/// Cleanup outcome of one step: top-1 row index and similarity per factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub indices: Vec<usize>,
    pub similarities: Vec<f64>,
    /// Similarity of each estimate to its value before the step.
    pub step_similarities: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResonatorState {
    pub estimates: Vec<PhasorVector>,
    pub iteration: usize,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationResult {
    pub s: u128,
    /// Known factors, when the composite was sampled.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub true_factors: Option<Vec<u64>>,
    /// Decoded prime labels, ascending; identity rows are dropped.
    pub predicted_factors: Vec<u64>,
    /// Decoded codebook row per factor, in resonator order.
    pub predicted_indices: Vec<usize>,
    pub converged: bool,
    pub iterations_used: usize,
    pub correct: bool,
    pub final_similarities: Vec<f64>,
    /// Resolved convergence threshold the run was held to.
    pub convergence_sim: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trace: Option<Vec<TraceEntry>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl FactorizationResult {
    fn failed(s: u128, true_factors: Option<Vec<u64>>, err: &Error, convergence_sim: f64) -> Self {
        FactorizationResult {
            s,
            true_factors,
            predicted_factors: Vec::new(),
            predicted_indices: Vec::new(),
            converged: false,
            iterations_used: 0,
            correct: false,
            final_similarities: Vec::new(),
            convergence_sim,
            trace: None,
            error: Some(err.to_string()),
        }
    }
}

/// Normalized superposition of every codebook row, as phases.
fn initial_phases(book: &Codebook) -> Result<Vec<f64>> {
    let n = book.dim();
    let planes = book.planes();
    let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
    for i in 0..planes.rows {
        let row = i * n..(i + 1) * n;
        for ((r, c), (pr, pc)) in re
            .iter_mut()
            .zip(im.iter_mut())
            .zip(planes.re[row.clone()].iter().zip(&planes.im[row]))
        {
            *r += pr;
            *c += pc;
        }
    }
    re.iter()
        .zip(&im)
        .map(|(&r, &i)| normalized_phase(r, i).ok_or(Error::NonFinite("initial estimate")))
        .collect()
}

/// Estimates for `b` trials that all start from the same superposition.
pub fn init_state(book: &Codebook, k: usize) -> Result<ResonatorState> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2 (got {k})")));
    }
    if book.is_empty() {
        return Err(Error::Empty("codebook"));
    }
    let init = PhasorVector::from_canonical(initial_phases(book)?);
    Ok(ResonatorState {
        estimates: vec![init; k],
        iteration: 0,
        trace: Vec::new(),
    })
}

/// Scratch buffers for a batch of up to `cap` trials.
struct Workspace {
    q_re: Vec<f64>,
    q_im: Vec<f64>,
    coeffs: Vec<f64>,
    o_re: Vec<f64>,
    o_im: Vec<f64>,
}

impl Workspace {
    fn new(m: usize, n: usize, cap: usize) -> Self {
        Workspace {
            q_re: vec![0.0; cap * n],
            q_im: vec![0.0; cap * n],
            coeffs: vec![0.0; m * cap],
            o_re: vec![0.0; cap * n],
            o_im: vec![0.0; cap * n],
        }
    }
}

/// Stateless step/cleanup kernels over phase buffers laid out `b × n`.
struct Engine<'a> {
    book: Planes<'a>,
    n: usize,
    m: usize,
    k: usize,
    mode: UpdateMode,
}

impl<'a> Engine<'a> {
    fn new(book: &'a Codebook, k: usize, mode: UpdateMode) -> Self {
        Engine {
            book: book.planes(),
            n: book.dim(),
            m: book.len(),
            k,
            mode,
        }
    }

    /// One resonator step for `b` trials. Sets `diverged[t]` for any trial
    /// whose dynamics produced a non-finite value. Returns, per factor and
    /// trial, the similarity between the new estimate and the previous one.
    fn update(
        &self,
        target: &[f64],
        est: &mut [Vec<f64>],
        b: usize,
        ws: &mut Workspace,
        diverged: &mut [bool],
    ) -> Vec<Vec<f64>> {
        let (n, m) = (self.n, self.m);
        let mut moved = vec![vec![0.0; b]; self.k];
        let snapshot: Option<Vec<Vec<f64>>> = match self.mode {
            UpdateMode::Synchronous => Some(est.to_vec()),
            UpdateMode::Asynchronous => None,
        };
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(self.k);
        for f in 0..self.k {
            let read: &[Vec<f64>] = snapshot.as_deref().unwrap_or(est);
            for j in 0..b * n {
                let mut theta = target[j];
                for (g, e) in read.iter().enumerate() {
                    if g != f {
                        theta -= e[j];
                    }
                }
                let (s, c) = theta.sin_cos();
                ws.q_re[j] = c;
                ws.q_im[j] = s;
            }
            let queries = Planes::new(&ws.q_re[..b * n], &ws.q_im[..b * n], b, n);
            kernel::coefficients(self.book, queries, &mut ws.coeffs[..m * b]);
            kernel::combine(
                self.book,
                &ws.coeffs[..m * b],
                b,
                &mut ws.o_re[..b * n],
                &mut ws.o_im[..b * n],
            );
            let mut phases = vec![0.0; b * n];
            for (t, chunk) in phases.chunks_mut(n).enumerate() {
                let row = t * n..(t + 1) * n;
                for ((p, &r), &i) in chunk.iter_mut().zip(&ws.o_re[row.clone()]).zip(&ws.o_im[row]) {
                    match normalized_phase(r, i) {
                        Some(v) => *p = v,
                        None => {
                            diverged[t] = true;
                            *p = 0.0;
                        }
                    }
                }
            }
            for (t, d) in moved[f].iter_mut().enumerate() {
                let row = t * n..(t + 1) * n;
                let acc: f64 = phases[row.clone()]
                    .iter()
                    .zip(&est[f][row])
                    .map(|(a, b)| (a - b).cos())
                    .sum();
                *d = acc / n as f64;
            }
            match self.mode {
                UpdateMode::Asynchronous => est[f] = phases,
                UpdateMode::Synchronous => next.push(phases),
            }
        }
        if self.mode == UpdateMode::Synchronous {
            for (e, p) in est.iter_mut().zip(next) {
                *e = p;
            }
        }
        moved
    }

    /// Top-1 row and similarity for every factor estimate of `b` trials,
    /// returned as `[factor][trial]`.
    fn cleanup(&self, est: &[Vec<f64>], b: usize, ws: &mut Workspace) -> (Vec<Vec<usize>>, Vec<Vec<f64>>) {
        let (n, m) = (self.n, self.m);
        let mut idx = vec![vec![0; b]; self.k];
        let mut sims = vec![vec![0.0; b]; self.k];
        for f in 0..self.k {
            for (j, &p) in est[f][..b * n].iter().enumerate() {
                let (s, c) = p.sin_cos();
                ws.q_re[j] = c;
                ws.q_im[j] = s;
            }
            let queries = Planes::new(&ws.q_re[..b * n], &ws.q_im[..b * n], b, n);
            kernel::coefficients(self.book, queries, &mut ws.coeffs[..m * b]);
            for t in 0..b {
                let mut best = (0usize, f64::NEG_INFINITY);
                for i in 0..m {
                    let v = ws.coeffs[i * b + t];
                    if v > best.1 {
                        best = (i, v);
                    }
                }
                idx[f][t] = best.0;
                sims[f][t] = best.1 / n as f64;
            }
        }
        (idx, sims)
    }
}

/// One resonator step on an explicit state.
pub fn step(
    state: &ResonatorState,
    s_vec: &PhasorVector,
    book: &Codebook,
    cfg: &ResonatorConfig,
) -> Result<ResonatorState> {
    let n = book.dim();
    check_dims(n, s_vec.dim())?;
    if state.estimates.is_empty() {
        return Err(Error::Empty("resonator estimates"));
    }
    for e in &state.estimates {
        check_dims(n, e.dim())?;
    }
    let k = state.estimates.len();
    let engine = Engine::new(book, k, cfg.update_mode);
    let mut ws = Workspace::new(book.len(), n, 1);
    let mut est: Vec<Vec<f64>> = state.estimates.iter().map(|e| e.phases().to_vec()).collect();
    let mut diverged = [false];
    let moved = engine.update(s_vec.phases(), &mut est, 1, &mut ws, &mut diverged);
    let iteration = state.iteration + 1;
    if diverged[0] {
        return Err(Error::Divergence { iteration });
    }
    let (idx, sims) = engine.cleanup(&est, 1, &mut ws);
    let mut trace = state.trace.clone();
    trace.push(TraceEntry {
        indices: idx.iter().map(|v| v[0]).collect(),
        similarities: sims.iter().map(|v| v[0]).collect(),
        step_similarities: moved.iter().map(|v| v[0]).collect(),
    });
    Ok(ResonatorState {
        estimates: est.into_iter().map(PhasorVector::from_canonical).collect(),
        iteration,
        trace,
    })
}

/// Factors `s` over `book`. The decoded multiset is checked against `s`
/// directly, so the true factors need not be known.
pub fn solve(s: u128, book: &Codebook, cfg: &ResonatorConfig) -> Result<FactorizationResult> {
    cfg.validate()?;
    if s < 4 {
        return Err(Error::InvalidArgument(format!("composite must be at least 4 (got {s})")));
    }
    let mut out = run_chunk(book, cfg, &[s])?;
    let res = out.pop().expect("one result per target");
    match res.error {
        Some(_) => Err(Error::Divergence {
            iteration: res.iterations_used,
        }),
        None => Ok(res),
    }
}

/// Solves every sample independently; output order follows input order.
/// Samples whose factors are not all codebook labels, and trials that
/// diverge, produce results carrying an `error` instead of failing the batch.
pub fn solve_batch(
    samples: &[CompositeSample],
    book: &Codebook,
    cfg: &ResonatorConfig,
) -> Result<Vec<FactorizationResult>> {
    cfg.validate()?;
    let mut results: Vec<Option<FactorizationResult>> = vec![None; samples.len()];
    let mut runnable = Vec::with_capacity(samples.len());
    for (i, smp) in samples.iter().enumerate() {
        let check = if smp.k() != cfg.k {
            Err(Error::InvalidArgument(format!(
                "sample has {} factors but the resonator has {}",
                smp.k(),
                cfg.k
            )))
        } else if let Some(&p) = smp.factors.iter().find(|&&p| book.index_of(p).is_none()) {
            Err(Error::InvalidArgument(format!("factor {p} is not in the codebook")))
        } else {
            Ok(())
        };
        match check {
            Ok(()) => runnable.push(i),
            Err(e) => {
                results[i] = Some(FactorizationResult::failed(
                    smp.value,
                    Some(smp.factors.clone()),
                    &e,
                    cfg.convergence_sim.resolve(book.dim()),
                ))
            }
        }
    }
    let solved: Vec<(usize, FactorizationResult)> = runnable
        .par_chunks(BATCH_WIDTH)
        .map(|chunk| {
            let targets: Vec<u128> = chunk.iter().map(|&i| samples[i].value).collect();
            run_chunk(book, cfg, &targets).map(|rs| chunk.iter().copied().zip(rs).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    for (i, mut r) in solved {
        r.true_factors = Some(samples[i].factors.clone());
        results[i] = Some(r);
    }
    Ok(results.into_iter().map(|r| r.expect("every sample resolved")).collect())
}

struct Active {
    slot: usize,
    last: Vec<usize>,
    stable: usize,
    trace: Vec<TraceEntry>,
}

/// Runs `targets` as one shrinking batch.
fn run_chunk(book: &Codebook, cfg: &ResonatorConfig, targets: &[u128]) -> Result<Vec<FactorizationResult>> {
    let (n, k) = (book.dim(), cfg.k);
    let init = initial_phases(book)?;
    let engine = Engine::new(book, k, cfg.update_mode);
    let mut ws = Workspace::new(book.len(), n, targets.len());
    let threshold = cfg.convergence_sim.resolve(n);

    let mut target = Vec::with_capacity(targets.len() * n);
    for &s in targets {
        target.extend(book.encoder().encode_log(s)?.into_phases());
    }
    let mut est: Vec<Vec<f64>> = (0..k).map(|_| init.repeat(targets.len())).collect();
    let mut active: Vec<Active> = (0..targets.len())
        .map(|slot| Active {
            slot,
            last: Vec::new(),
            stable: 0,
            trace: Vec::new(),
        })
        .collect();
    let mut done: Vec<Option<FactorizationResult>> = vec![None; targets.len()];

    for iteration in 1..=cfg.max_iters {
        let b = active.len();
        if b == 0 {
            break;
        }
        let mut diverged = vec![false; b];
        let moved = engine.update(&target, &mut est, b, &mut ws, &mut diverged);
        let (idx, sims) = engine.cleanup(&est, b, &mut ws);

        let mut keep = Vec::with_capacity(b);
        for (t, a) in active.iter_mut().enumerate() {
            let s = targets[a.slot];
            if diverged[t] {
                let mut r = FactorizationResult::failed(s, None, &Error::Divergence { iteration }, threshold);
                r.iterations_used = iteration;
                done[a.slot] = Some(r);
                continue;
            }
            let cur: Vec<usize> = (0..k).map(|f| idx[f][t]).collect();
            let cur_sims: Vec<f64> = (0..k).map(|f| sims[f][t]).collect();
            a.stable = if cur == a.last { a.stable + 1 } else { 1 };
            if cfg.record_trace {
                a.trace.push(TraceEntry {
                    indices: cur.clone(),
                    similarities: cur_sims.clone(),
                    step_similarities: (0..k).map(|f| moved[f][t]).collect(),
                });
            }
            let converged = a.stable >= cfg.convergence_window
                && cur_sims.iter().all(|&v| v >= threshold);
            if converged || iteration == cfg.max_iters {
                let trace = cfg.record_trace.then(|| std::mem::take(&mut a.trace));
                let mut r = decode(book, s, cur, cur_sims, converged, iteration, trace);
                r.convergence_sim = threshold;
                done[a.slot] = Some(r);
            } else {
                a.last = cur;
                keep.push(t);
            }
        }
        if keep.len() < b {
            target = gather(&target, &keep, n);
            for e in est.iter_mut() {
                *e = gather(e, &keep, n);
            }
            let mut alive = vec![false; b];
            for &t in &keep {
                alive[t] = true;
            }
            let mut flags = alive.into_iter();
            active.retain(|_| flags.next().unwrap_or(false));
        }
    }
    Ok(done.into_iter().map(|r| r.expect("every trial finishes")).collect())
}

fn gather(buf: &[f64], keep: &[usize], n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(keep.len() * n);
    for &t in keep {
        out.extend_from_slice(&buf[t * n..(t + 1) * n]);
    }
    out
}

fn decode(
    book: &Codebook,
    s: u128,
    indices: Vec<usize>,
    sims: Vec<f64>,
    converged: bool,
    iterations_used: usize,
    trace: Option<Vec<TraceEntry>>,
) -> FactorizationResult {
    let labels = book.labels();
    let mut predicted: Vec<u64> = indices
        .iter()
        .map(|&i| labels[i])
        .filter(|&l| l != 1)
        .collect();
    predicted.sort_unstable();
    FactorizationResult {
        s,
        true_factors: None,
        correct: verify_factorization(s, &predicted),
        predicted_factors: predicted,
        predicted_indices: indices,
        converged,
        iterations_used,
        final_similarities: sims,
        convergence_sim: 0.0,
        trace,
        error: None,
    }
}

/// Phase-domain target `encode_log(s)`, exposed for callers driving [`step`].
pub fn target_vector(book: &Codebook, s: u128) -> Result<PhasorVector> {
    let v = book.encoder().encode_log(s)?;
    debug_assert!(v.phases().iter().all(|&p| wrap_phase(p) == p));
    Ok(v)
}

//! Prime generation, candidate sets and composite sampling.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

const SEGMENT_LEN: u64 = 1 << 15;

/// How a [`PrimeSet`] was formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PrimeOrigin {
    /// All primes `<= limit`.
    UpTo { limit: u64 },
    /// All primes `<= floor(s/2)`, the candidate factors of `s`.
    Candidates { s: u128 },
    /// The first `count` primes `>= start`.
    Window { start: u64, count: usize },
    /// Caller-supplied list.
    Explicit,
}

/// Strictly ascending list of primes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeSet {
    primes: Vec<u64>,
    origin: PrimeOrigin,
}

impl PrimeSet {
    /// Validates an explicit list: nonempty, strictly ascending, all prime.
    pub fn from_primes(primes: Vec<u64>) -> Result<Self> {
        if primes.is_empty() {
            return Err(Error::Empty("prime set"));
        }
        validate_ascending_primes(&primes)?;
        Ok(PrimeSet {
            primes,
            origin: PrimeOrigin::Explicit,
        })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn origin(&self) -> PrimeOrigin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn contains(&self, p: u64) -> bool {
        self.primes.binary_search(&p).is_ok()
    }

    pub fn max(&self) -> u64 {
        *self.primes.last().expect("prime sets are nonempty")
    }

    /// Newline-delimited decimal listing.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for p in &self.primes {
            writeln!(w, "{p}")?;
        }
        Ok(())
    }
}

pub(crate) fn validate_ascending_primes(primes: &[u64]) -> Result<()> {
    for w in primes.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidArgument(format!(
                "primes must be strictly ascending ({} then {})",
                w[0], w[1]
            )));
        }
    }
    if let Some(&p) = primes.iter().find(|&&p| !is_prime(p)) {
        return Err(Error::InvalidArgument(format!("{p} is not prime")));
    }
    Ok(())
}

fn small_primes(limit: u64) -> Vec<u64> {
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for i in 2..=limit {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Segmented sieve over `[lo, hi]`, calling `emit` for each prime in order.
/// Stops early when `emit` returns false.
fn sieve_range(lo: u64, hi: u64, mut emit: impl FnMut(u64) -> bool) {
    if hi < 2 || lo > hi {
        return;
    }
    let lo = lo.max(2);
    let base = small_primes(hi.isqrt());
    let mut seg = vec![false; SEGMENT_LEN as usize];
    let mut start = lo;
    while start <= hi {
        let end = start.saturating_add(SEGMENT_LEN - 1).min(hi);
        let len = (end - start + 1) as usize;
        seg[..len].fill(true);
        for &p in &base {
            if p * p > end {
                break;
            }
            let first = (p * p).max(start.div_ceil(p) * p);
            let mut m = first;
            while m <= end {
                seg[(m - start) as usize] = false;
                m += p;
            }
        }
        for (i, &is_p) in seg[..len].iter().enumerate() {
            if is_p && !emit(start + i as u64) {
                return;
            }
        }
        if end == u64::MAX {
            break;
        }
        start = end + 1;
    }
}

/// All primes `<= limit`.
pub fn primes_up_to(limit: u64) -> Result<PrimeSet> {
    if limit < 2 {
        return Err(Error::Empty("no primes below 2"));
    }
    let mut primes = Vec::new();
    sieve_range(2, limit, |p| {
        primes.push(p);
        true
    });
    Ok(PrimeSet {
        primes,
        origin: PrimeOrigin::UpTo { limit },
    })
}

/// Candidate factors of `s`: all primes `<= floor(s/2)`.
pub fn candidate_set(s: u128) -> Result<PrimeSet> {
    if s < 4 {
        return Err(Error::InvalidArgument(format!(
            "no composite below 4 (got {s})"
        )));
    }
    let half = u64::try_from(s / 2)
        .map_err(|_| Error::InvalidArgument(format!("{s} is too large to sieve")))?;
    let mut set = primes_up_to(half)?;
    set.origin = PrimeOrigin::Candidates { s };
    Ok(set)
}

/// The first `count` primes `>= start`.
pub fn prime_window(start: u64, count: usize) -> Result<PrimeSet> {
    if count < 2 {
        return Err(Error::InvalidArgument(format!(
            "a prime window needs at least two primes (got {count})"
        )));
    }
    let mut primes = Vec::with_capacity(count);
    let mut lo = start.max(2);
    // grow the sieved range until enough primes are found
    let mut span = (count as u64).saturating_mul(16).max(1024);
    while primes.len() < count {
        let hi = lo.saturating_add(span);
        sieve_range(lo, hi, |p| {
            primes.push(p);
            primes.len() < count
        });
        if hi == u64::MAX {
            break;
        }
        lo = hi + 1;
        span = span.saturating_mul(2);
    }
    if primes.len() < count {
        return Err(Error::InvalidArgument("prime window exceeds u64 range".into()));
    }
    Ok(PrimeSet {
        primes,
        origin: PrimeOrigin::Window { start, count },
    })
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for the full `u64` range.
pub fn is_prime(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &WITNESSES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for &a in &WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A product of `k` primes drawn from a [`PrimeSet`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompositeSample {
    pub value: u128,
    /// Ascending multiset of prime factors.
    pub factors: Vec<u64>,
}

impl CompositeSample {
    pub fn new(mut factors: Vec<u64>) -> Result<Self> {
        if factors.len() < 2 {
            return Err(Error::InvalidArgument(
                "a composite needs at least two factors".into(),
            ));
        }
        factors.sort_unstable();
        let value = product(&factors)?;
        Ok(CompositeSample { value, factors })
    }

    pub fn k(&self) -> usize {
        self.factors.len()
    }
}

impl fmt::Display for CompositeSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factors.iter().map(u64::to_string).collect();
        write!(f, "{} = {}", self.value, parts.join(" x "))
    }
}

/// Exact product in 128-bit arithmetic.
pub fn product(factors: &[u64]) -> Result<u128> {
    factors.iter().try_fold(1u128, |acc, &f| {
        acc.checked_mul(f as u128).ok_or(Error::Overflow("factor product"))
    })
}

/// Draws `k` factors uniformly from `ps`, with or without replacement.
pub fn sample_composite(
    ps: &PrimeSet,
    k: usize,
    rng: &mut Rng,
    distinct: bool,
) -> Result<CompositeSample> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2 (got {k})")));
    }
    let m = ps.len();
    let factors: Vec<u64> = if distinct {
        if m < k {
            return Err(Error::InvalidArgument(format!(
                "cannot draw {k} distinct primes from a set of {m}"
            )));
        }
        rand::seq::index::sample(rng.inner_mut(), m, k)
            .into_iter()
            .map(|i| ps.primes[i])
            .collect()
    } else {
        (0..k).map(|_| ps.primes[rng.next_index(m)]).collect()
    };
    CompositeSample::new(factors)
}

/// True iff every factor is prime and their product equals `s`.
pub fn verify_factorization(s: u128, factors: &[u64]) -> bool {
    if factors.is_empty() || !factors.iter().all(|&f| is_prime(f)) {
        return false;
    }
    matches!(product(factors), Ok(p) if p == s)
}

//! Fractional power encoding of scalars.
//!
//! `z(x) = z^(βx)`: component `j` of the encoding is `exp(i·Arg(z_j)·β·x)`,
//! using the principal argument `Arg(z_j) ∈ (-π, π]` of the base component.
//! Integer powers agree with repeated self-binding on any branch; the
//! principal branch fixes the value for fractional exponents, which is what
//! shapes the similarity kernel, `E[sim] = sin(πβΔx)/(πβΔx)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hrr::{principal_phase, random_phasor, wrap_phase, Hypervector, PhasorVector};
use crate::rng::Rng;

/// Default multiplier in the bandwidth rule.
pub const DEFAULT_BETA_SCALE: f64 = 1e4;

/// Base vector `z` and bandwidth `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct FpeEncoder {
    base: PhasorVector,
    beta: f64,
    principal: Vec<f64>,
}

impl FpeEncoder {
    pub fn new(base: PhasorVector, beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be positive and finite, got {beta}"
            )));
        }
        let principal = base.phases().iter().copied().map(principal_phase).collect();
        Ok(FpeEncoder {
            base,
            beta,
            principal,
        })
    }

    /// Draws a fresh base vector from `rng`.
    pub fn random(n: usize, beta: f64, rng: &mut Rng) -> Result<Self> {
        FpeEncoder::new(random_phasor(n, rng)?, beta)
    }

    pub fn base(&self) -> &PhasorVector {
        &self.base
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// `z(x)`.
    pub fn encode(&self, x: f64) -> Result<PhasorVector> {
        if !x.is_finite() {
            return Err(Error::NonFinite("encode"));
        }
        let mut out = vec![0.0; self.dim()];
        self.encode_into(x, &mut out);
        Ok(PhasorVector::from_canonical(out))
    }

    /// `z(log m)`; binding these realizes integer multiplication.
    pub fn encode_log(&self, m: u128) -> Result<PhasorVector> {
        if m == 0 {
            return Err(Error::InvalidArgument("cannot encode log(0)".into()));
        }
        self.encode(ln_u128(m))
    }

    pub(crate) fn encode_into(&self, x: f64, out: &mut [f64]) {
        let scale = self.beta * x;
        for (o, theta) in out.iter_mut().zip(&self.principal) {
            *o = wrap_phase(theta * scale);
        }
    }
}

/// Natural log of an integer in 64-bit precision.
pub fn ln_u128(m: u128) -> f64 {
    (m as f64).ln()
}

/// `scale / min_i (log p_{i+1} - log p_i)` over adjacent pairs of an
/// ascending prime list.
pub fn select_beta(primes: &[u64], scale: f64) -> Result<f64> {
    if primes.len() < 2 {
        return Err(Error::InvalidArgument(
            "bandwidth selection needs at least two primes".into(),
        ));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bandwidth scale must be positive, got {scale}"
        )));
    }
    let mut min_gap = f64::INFINITY;
    for w in primes.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidArgument(format!(
                "primes must be strictly ascending ({} then {})",
                w[0], w[1]
            )));
        }
        // log(b) - log(a) without cancellation
        let gap = ((w[1] - w[0]) as f64 / w[0] as f64).ln_1p();
        min_gap = min_gap.min(gap);
    }
    Ok(scale / min_gap)
}

/// Fields needed to regenerate an encoder exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub n: usize,
    pub beta: f64,
    pub seed: u64,
    pub stream: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hrr::similarity;

    fn encoder(n: usize, beta: f64, seed: u64) -> FpeEncoder {
        FpeEncoder::random(n, beta, &mut Rng::new(seed)).unwrap()
    }

    #[test]
    fn encode_zero_is_ones() {
        let enc = encoder(64, 3.7, 1);
        let z0 = enc.encode(0.0).unwrap();
        assert!(z0.phases().iter().all(|&p| p == 0.0));
        assert_eq!(enc.encode_log(1).unwrap(), z0);
    }

    #[test]
    fn binding_adds_exponents() {
        let enc = encoder(512, 1.3, 2);
        let lhs = enc
            .encode(1.5)
            .unwrap()
            .bind(&enc.encode(2.5).unwrap())
            .unwrap();
        let rhs = enc.encode(4.0).unwrap();
        assert!(similarity(&lhs, &rhs).unwrap() >= 1.0 - 1e-9);
    }

    #[test]
    fn integer_encoding_is_self_binding() {
        let enc = encoder(256, 1.0, 3);
        let one = enc.encode(1.0).unwrap();
        let mut acc = PhasorVector::ones(256).unwrap();
        for i in 1..=10 {
            acc = acc.bind(&one).unwrap();
            let direct = enc.encode(i as f64).unwrap();
            let (a, b) = (acc.to_complex(), direct.to_complex());
            let dev = a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(dev <= 1e-10, "i={i} dev={dev}");
        }
    }

    #[test]
    fn log_encoding_multiplies() {
        let enc = encoder(1024, select_beta(&[2, 3, 5], DEFAULT_BETA_SCALE).unwrap(), 4);
        let bound = [2u128, 3, 5]
            .iter()
            .map(|&p| enc.encode_log(p).unwrap())
            .reduce(|a, b| a.bind(&b).unwrap())
            .unwrap();
        assert!(similarity(&bound, &enc.encode_log(30).unwrap()).unwrap() >= 1.0 - 1e-6);
    }

    #[test]
    fn encode_rejects_bad_input() {
        let enc = encoder(8, 1.0, 5);
        assert!(enc.encode(f64::NAN).is_err());
        assert!(enc.encode(f64::INFINITY).is_err());
        assert!(enc.encode_log(0).is_err());
        assert!(FpeEncoder::new(PhasorVector::ones(4).unwrap(), 0.0).is_err());
        assert!(FpeEncoder::new(PhasorVector::ones(4).unwrap(), f64::NAN).is_err());
    }

    #[test]
    fn select_beta_small_sets() {
        // brute-force oracle over adjacent gaps
        let oracle = |ps: &[u64], scale: f64| {
            let mut best = f64::INFINITY;
            for i in 0..ps.len() - 1 {
                best = best.min((ps[i + 1] as f64).ln() - (ps[i] as f64).ln());
            }
            scale / best
        };
        let b23 = select_beta(&[2, 3], 1e4).unwrap();
        assert!((b23 - oracle(&[2, 3], 1e4)).abs() / b23 < 1e-12);
        assert!((b23 - 24_663.0).abs() < 1.0, "{b23}");
        let b = select_beta(&[2, 3, 5], 1.0).unwrap();
        assert!((b - 1.0 / (1.5f64).ln()).abs() < 1e-12);
        assert!((b - 2.466).abs() < 1e-3);
        // min gap not at the top of the range
        let ps = [2u64, 3, 5, 7, 11, 13, 17];
        assert!((select_beta(&ps, 1.0).unwrap() - oracle(&ps, 1.0)).abs() < 1e-9);
    }

    #[test]
    fn select_beta_errors() {
        assert!(select_beta(&[2], 1e4).is_err());
        assert!(select_beta(&[], 1e4).is_err());
        assert!(select_beta(&[3, 3], 1e4).is_err());
        assert!(select_beta(&[5, 3], 1e4).is_err());
        assert!(select_beta(&[2, 3], -1.0).is_err());
    }

    #[test]
    fn kernel_is_shift_invariant() {
        let enc = encoder(512, 2.1, 6);
        for &(x, y, d) in &[(0.3, 0.9, 1.7), (2.0, 2.05, -0.4), (0.0, 1.0, 10.0)] {
            let s1 = similarity(&enc.encode(x).unwrap(), &enc.encode(y).unwrap()).unwrap();
            let s2 = similarity(&enc.encode(x + d).unwrap(), &enc.encode(y + d).unwrap()).unwrap();
            assert!((s1 - s2).abs() <= 1e-9, "{s1} {s2}");
        }
    }
}

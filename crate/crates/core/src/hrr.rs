//! Complex phasor (FHRR) hypervector algebra.
//!
//! A [`PhasorVector`] stores one phase per component, canonically reduced to
//! `[0, 2π)`; complex values `exp(iφ)` are materialized on demand, so unit
//! magnitude holds by construction. A [`SuperposedVector`] holds arbitrary
//! complex components and is what superposition and codebook projection
//! produce before [`normalize_phasor`] maps them back onto the unit circle.

use std::borrow::Cow;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{check_dims, Error, Result};
use crate::rng::Rng;

/// Componentwise tolerance for exact algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-12;

/// Similarity tolerance for identities evaluated at large bandwidths, where
/// products `β·log m` reach ~1e10 and phase rounding is ~1e-6 rad.
pub const BETA_SCALED_TOL: f64 = 1e-4;

/// Components at or below this magnitude normalize to `1 + 0i`.
pub const ZERO_MAGNITUDE: f64 = 1e-300;

/// Tolerance set used by checks that accept overrides from configuration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub algebraic: f64,
    pub beta_scaled: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            algebraic: ALGEBRAIC_TOL,
            beta_scaled: BETA_SCALED_TOL,
        }
    }
}

/// Reduce an angle to `[0, 2π)`.
#[inline]
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid rounds tiny negatives up to exactly TAU
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Principal argument in `(-π, π]` of a canonical phase.
#[inline]
pub fn principal_phase(phase: f64) -> f64 {
    if phase > PI {
        phase - TAU
    } else {
        phase
    }
}

/// Read access to a hypervector's complex components.
pub trait Hypervector {
    fn dim(&self) -> usize;
    fn to_complex(&self) -> Cow<'_, [Complex64]>;
}

/// Unit-magnitude complex hypervector, stored as phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasorVector {
    phases: Vec<f64>,
}

impl PhasorVector {
    /// Builds a vector from raw angles, reducing each to `[0, 2π)`.
    pub fn from_phases(phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("phase vector"));
        }
        Ok(PhasorVector {
            phases: phases.into_iter().map(wrap_phase).collect(),
        })
    }

    /// Wraps phases already known to lie in `[0, 2π)`.
    pub(crate) fn from_canonical(phases: Vec<f64>) -> Self {
        debug_assert!(phases.iter().all(|p| (0.0..TAU).contains(p)));
        PhasorVector { phases }
    }

    /// The identity element of binding: every component is `1 + 0i`.
    pub fn ones(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimension(0));
        }
        Ok(PhasorVector {
            phases: vec![0.0; n],
        })
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn into_phases(self) -> Vec<f64> {
        self.phases
    }

    pub fn component(&self, j: usize) -> Complex64 {
        let (s, c) = self.phases[j].sin_cos();
        Complex64::new(c, s)
    }

    /// Hadamard product `a ⊙ b`.
    pub fn bind(&self, other: &PhasorVector) -> Result<PhasorVector> {
        check_dims(self.dim(), other.dim())?;
        Ok(PhasorVector {
            phases: self
                .phases
                .iter()
                .zip(&other.phases)
                .map(|(a, b)| wrap_phase(a + b))
                .collect(),
        })
    }

    /// `self ⊙ conj(other)`; exact inverse of [`bind`](Self::bind).
    pub fn unbind(&self, other: &PhasorVector) -> Result<PhasorVector> {
        check_dims(self.dim(), other.dim())?;
        Ok(PhasorVector {
            phases: self
                .phases
                .iter()
                .zip(&other.phases)
                .map(|(a, b)| wrap_phase(a - b))
                .collect(),
        })
    }

    /// Complex conjugate, the binding inverse.
    pub fn inverse(&self) -> PhasorVector {
        PhasorVector {
            phases: self.phases.iter().map(|p| wrap_phase(-p)).collect(),
        }
    }

    /// Componentwise negation (`-a`), a half-turn of every phase.
    pub fn negate(&self) -> PhasorVector {
        PhasorVector {
            phases: self.phases.iter().map(|p| wrap_phase(p + PI)).collect(),
        }
    }
}

impl Hypervector for PhasorVector {
    fn dim(&self) -> usize {
        self.phases.len()
    }

    fn to_complex(&self) -> Cow<'_, [Complex64]> {
        Cow::Owned(
            self.phases
                .iter()
                .map(|p| {
                    let (s, c) = p.sin_cos();
                    Complex64::new(c, s)
                })
                .collect(),
        )
    }
}

/// Complex hypervector with unconstrained magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperposedVector {
    components: Vec<Complex64>,
}

impl SuperposedVector {
    pub fn new(components: Vec<Complex64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidDimension(0));
        }
        if components.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("superposed vector"));
        }
        Ok(SuperposedVector { components })
    }

    #[cfg(test)]
    pub(crate) fn from_unchecked(components: Vec<Complex64>) -> Self {
        SuperposedVector { components }
    }

    pub fn components(&self) -> &[Complex64] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Complex64> {
        self.components
    }

    pub fn norm(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, factor: f64) -> SuperposedVector {
        SuperposedVector {
            components: self.components.iter().map(|c| c * factor).collect(),
        }
    }
}

impl Hypervector for SuperposedVector {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn to_complex(&self) -> Cow<'_, [Complex64]> {
        Cow::Borrowed(&self.components)
    }
}

impl From<&PhasorVector> for SuperposedVector {
    fn from(v: &PhasorVector) -> Self {
        SuperposedVector {
            components: v.to_complex().into_owned(),
        }
    }
}

/// Draws `n` phases i.i.d. uniform over `(0, 2π]`.
pub fn random_phasor(n: usize, rng: &mut Rng) -> Result<PhasorVector> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let phases = (0..n)
        .map(|_| wrap_phase(TAU * (1.0 - rng.next_unit())))
        .collect();
    Ok(PhasorVector::from_canonical(phases))
}

/// Componentwise complex sum; no normalization.
pub fn superpose<'a, V, I>(vs: I) -> Result<SuperposedVector>
where
    V: Hypervector + ?Sized + 'a,
    I: IntoIterator<Item = &'a V>,
{
    let mut iter = vs.into_iter();
    let first = iter.next().ok_or(Error::Empty("superpose"))?;
    let mut acc = first.to_complex().into_owned();
    for v in iter {
        check_dims(acc.len(), v.dim())?;
        for (a, b) in acc.iter_mut().zip(v.to_complex().iter()) {
            *a += b;
        }
    }
    SuperposedVector::new(acc)
}

/// `f_n`: divides each component by its magnitude.
pub fn normalize_phasor(v: &SuperposedVector) -> Result<PhasorVector> {
    normalize_components(v.components())
}

pub(crate) fn normalize_components(components: &[Complex64]) -> Result<PhasorVector> {
    let mut phases = Vec::with_capacity(components.len());
    for c in components {
        phases.push(normalized_phase(c.re, c.im).ok_or(Error::NonFinite("normalize_phasor"))?);
    }
    Ok(PhasorVector::from_canonical(phases))
}

/// Phase of `re + i·im` in `[0, 2π)`, with the zero-magnitude rule applied.
#[inline]
pub(crate) fn normalized_phase(re: f64, im: f64) -> Option<f64> {
    if !re.is_finite() || !im.is_finite() {
        return None;
    }
    if re.hypot(im) <= ZERO_MAGNITUDE {
        return Some(0.0);
    }
    Some(wrap_phase(im.atan2(re)))
}

#[inline]
fn real_inner(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// `(1/n)·Re(a†b)`.
pub fn similarity<A, B>(a: &A, b: &B) -> Result<f64>
where
    A: Hypervector + ?Sized,
    B: Hypervector + ?Sized,
{
    check_dims(a.dim(), b.dim())?;
    let (ca, cb) = (a.to_complex(), b.to_complex());
    Ok(real_inner(&ca, &cb) / a.dim() as f64)
}

/// `Re(a†b) / (‖a‖·‖b‖)`.
pub fn cosine_similarity<A, B>(a: &A, b: &B) -> Result<f64>
where
    A: Hypervector + ?Sized,
    B: Hypervector + ?Sized,
{
    check_dims(a.dim(), b.dim())?;
    let (ca, cb) = (a.to_complex(), b.to_complex());
    let na = ca.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let nb = cb.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::InvalidArgument(
            "cosine similarity of a zero-norm vector".into(),
        ));
    }
    Ok(real_inner(&ca, &cb) / (na * nb))
}

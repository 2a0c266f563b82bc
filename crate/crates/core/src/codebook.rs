//! Item memory of log-FPE prime hypervectors.
//!
//! Row `i` of the codebook is `z(log p_i)` for the `i`th label. Rows are
//! stored as phases (the canonical form, and what the binary file holds) and
//! additionally materialized once into split re/im planes, which the
//! projection and cleanup kernels stream over.
//!
//! # File layout
//!
//! All integers and floats are little-endian.
//!
//! | offset | size        | field                                   |
//! |--------|-------------|-----------------------------------------|
//! | 0      | 8           | magic `b"HDFPECB\0"`                    |
//! | 8      | 4           | format version (`u32`, currently 1)     |
//! | 12     | 4           | flags (`u32`, bit 0 = identity row)     |
//! | 16     | 8           | dimensionality `n` (`u64`)              |
//! | 24     | 8           | row count including identity (`u64`)    |
//! | 32     | 8           | bandwidth `β` (`f64`)                   |
//! | 40     | 8           | seed of the base-vector stream (`u64`)  |
//! | 48     | 8           | stream id of the base-vector stream     |
//! | 56     | 8·count     | row labels (`u64`, identity = 1)        |
//! | …      | 8·n         | base vector phases (`f64`)              |
//! | …      | 8·count·n   | row phases, row-major (`f64`)           |
//!
//! Readers reject files whose stored rows differ from the rows regenerated
//! from the base vector and labels.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{check_dims, Error, Result};
use crate::fpe::{ln_u128, select_beta, FpeEncoder};
use crate::hrr::{Hypervector, PhasorVector, SuperposedVector};
use crate::kernel::{self, Planes};
use crate::primes::validate_ascending_primes;
use crate::rng::Rng;

pub const CODEBOOK_MAGIC: &[u8; 8] = b"HDFPECB\0";
pub const CODEBOOK_VERSION: u32 = 1;
const HEADER_LEN: usize = 56;
const ROW_CHUNK: usize = 256;

/// Log-FPE item memory `Φ`.
#[derive(Debug, Clone)]
pub struct Codebook {
    labels: Vec<u64>,
    phases: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
    encoder: FpeEncoder,
    includes_identity: bool,
    seed: u64,
    stream: u64,
}

impl Codebook {
    /// Codebook over `primes` with a fresh base vector drawn from `rng` and
    /// `β = select_beta(primes, scale)`.
    pub fn build(
        primes: &[u64],
        n: usize,
        rng: &mut Rng,
        scale: f64,
        include_identity: bool,
    ) -> Result<Self> {
        if primes.is_empty() {
            return Err(Error::Empty("codebook primes"));
        }
        let beta = select_beta(primes, scale)?;
        let (seed, stream) = (rng.seed(), rng.stream());
        let encoder = FpeEncoder::random(n, beta, rng)?;
        let mut book = Codebook::from_encoder(encoder, primes, include_identity)?;
        book.seed = seed;
        book.stream = stream;
        Ok(book)
    }

    /// Codebook for an existing encoder; skips bandwidth selection.
    pub fn from_encoder(encoder: FpeEncoder, primes: &[u64], include_identity: bool) -> Result<Self> {
        if primes.is_empty() {
            return Err(Error::Empty("codebook primes"));
        }
        validate_ascending_primes(primes)?;
        let mut labels = Vec::with_capacity(primes.len() + include_identity as usize);
        if include_identity {
            labels.push(1);
        }
        labels.extend_from_slice(primes);
        let n = encoder.dim();
        let mut phases = vec![0.0; labels.len() * n];
        phases
            .par_chunks_mut(ROW_CHUNK * n)
            .zip(labels.par_chunks(ROW_CHUNK))
            .for_each(|(block, labs)| {
                for (row, &label) in block.chunks_mut(n).zip(labs) {
                    encoder.encode_into(ln_u128(label as u128), row);
                }
            });
        let (re, im) = materialize(&phases);
        Ok(Codebook {
            labels,
            phases,
            re,
            im,
            encoder,
            includes_identity: include_identity,
            seed: 0,
            stream: 0,
        })
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    /// Labels excluding the identity row.
    pub fn primes(&self) -> &[u64] {
        &self.labels[self.includes_identity as usize..]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.encoder.dim()
    }

    pub fn encoder(&self) -> &FpeEncoder {
        &self.encoder
    }

    pub fn beta(&self) -> f64 {
        self.encoder.beta()
    }

    pub fn includes_identity(&self) -> bool {
        self.includes_identity
    }

    /// Seed and stream id of the base-vector draw.
    pub fn provenance(&self) -> (u64, u64) {
        (self.seed, self.stream)
    }

    pub fn index_of(&self, label: u64) -> Option<usize> {
        if self.includes_identity && label == 1 {
            return Some(0);
        }
        self.primes()
            .binary_search(&label)
            .ok()
            .map(|i| i + self.includes_identity as usize)
    }

    pub fn row_phases(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.phases[i * n..(i + 1) * n]
    }

    pub fn row(&self, i: usize) -> PhasorVector {
        PhasorVector::from_canonical(self.row_phases(i).to_vec())
    }

    /// Approximate resident bytes for a codebook of this shape.
    pub fn estimated_bytes(rows: usize, n: usize) -> usize {
        rows.saturating_mul(n).saturating_mul(3 * std::mem::size_of::<f64>())
    }

    pub(crate) fn planes(&self) -> Planes<'_> {
        Planes::new(&self.re, &self.im, self.len(), self.dim())
    }

    /// `Re(Φ† v)`, one real coefficient per row.
    pub fn coefficients<V: Hypervector + ?Sized>(&self, v: &V) -> Result<Vec<f64>> {
        check_dims(self.dim(), v.dim())?;
        let (re, im) = split(&v.to_complex());
        let mut out = vec![0.0; self.len()];
        kernel::coefficients(self.planes(), Planes::new(&re, &im, 1, self.dim()), &mut out);
        Ok(out)
    }

    /// Best-matching row and its similarity; ties go to the lowest index.
    pub fn cleanup<V: Hypervector + ?Sized>(&self, v: &V) -> Result<(usize, f64)> {
        let coeffs = self.coefficients(v)?;
        let (idx, best) = argmax(&coeffs);
        Ok((idx, best / self.dim() as f64))
    }

    /// `Φ·Re(Φ† v)` with raw (unrectified) coefficients.
    pub fn project<V: Hypervector + ?Sized>(&self, v: &V) -> Result<SuperposedVector> {
        let n = self.dim();
        let coeffs = self.coefficients(v)?;
        let (mut re, mut im) = (vec![0.0; n], vec![0.0; n]);
        kernel::combine(self.planes(), &coeffs, 1, &mut re, &mut im);
        SuperposedVector::new(
            re.into_iter()
                .zip(im)
                .map(|(r, i)| num_complex::Complex64::new(r, i))
                .collect(),
        )
        .map_err(|_| Error::NonFinite("codebook projection"))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.dim();
        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(CODEBOOK_MAGIC);
        header.extend_from_slice(&CODEBOOK_VERSION.to_le_bytes());
        header.extend_from_slice(&(self.includes_identity as u32).to_le_bytes());
        header.extend_from_slice(&(n as u64).to_le_bytes());
        header.extend_from_slice(&(self.len() as u64).to_le_bytes());
        header.extend_from_slice(&self.beta().to_le_bytes());
        header.extend_from_slice(&self.seed.to_le_bytes());
        header.extend_from_slice(&self.stream.to_le_bytes());
        w.write_all(&header)?;
        let mut buf = Vec::with_capacity(8 * (self.len() + n));
        for l in &self.labels {
            buf.extend_from_slice(&l.to_le_bytes());
        }
        for p in self.encoder.base().phases() {
            buf.extend_from_slice(&p.to_le_bytes());
        }
        w.write_all(&buf)?;
        for chunk in self.phases.chunks(ROW_CHUNK * n) {
            let bytes: Vec<u8> = chunk.iter().flat_map(|p| p.to_le_bytes()).collect();
            w.write_all(&bytes)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)
            .map_err(|_| Error::CodebookFormat("truncated header".into()))?;
        if &header[..8] != CODEBOOK_MAGIC {
            return Err(Error::CodebookFormat("bad magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(header[o..o + 8].try_into().unwrap());
        let version = u32_at(8);
        if version != CODEBOOK_VERSION {
            return Err(Error::CodebookFormat(format!("unsupported version {version}")));
        }
        let includes_identity = u32_at(12) & 1 == 1;
        let n = usize::try_from(u64_at(16)).map_err(|_| Error::CodebookFormat("n too large".into()))?;
        let count =
            usize::try_from(u64_at(24)).map_err(|_| Error::CodebookFormat("count too large".into()))?;
        let beta = f64::from_le_bytes(header[32..40].try_into().unwrap());
        let (seed, stream) = (u64_at(40), u64_at(48));
        if n == 0 || count == 0 {
            return Err(Error::CodebookFormat("empty codebook".into()));
        }

        let mut read_words = |len: usize| -> Result<Vec<[u8; 8]>> {
            let mut bytes = vec![0u8; len * 8];
            r.read_exact(&mut bytes)
                .map_err(|_| Error::CodebookFormat("truncated body".into()))?;
            Ok(bytes.chunks_exact(8).map(|c| c.try_into().unwrap()).collect())
        };
        let labels: Vec<u64> = read_words(count)?.into_iter().map(u64::from_le_bytes).collect();
        let base: Vec<f64> = read_words(n)?.into_iter().map(f64::from_le_bytes).collect();
        let rows: Vec<f64> = read_words(count * n)?.into_iter().map(f64::from_le_bytes).collect();

        if includes_identity && labels.first() != Some(&1) {
            return Err(Error::CodebookFormat("identity flag set but row 0 is not label 1".into()));
        }
        let primes = &labels[includes_identity as usize..];
        let encoder = FpeEncoder::new(PhasorVector::from_phases(base)?, beta)
            .map_err(|e| Error::CodebookFormat(e.to_string()))?;
        let mut book = Codebook::from_encoder(encoder, primes, includes_identity)
            .map_err(|e| Error::CodebookFormat(e.to_string()))?;
        if book
            .phases
            .iter()
            .zip(&rows)
            .any(|(a, b)| a.to_bits() != b.to_bits())
        {
            return Err(Error::CodebookFormat(
                "stored rows do not match the regenerated encoding".into(),
            ));
        }
        book.seed = seed;
        book.stream = stream;
        Ok(book)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Codebook::read_from(std::io::BufReader::new(f))
    }
}

pub(crate) fn materialize(phases: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut re = vec![0.0; phases.len()];
    let mut im = vec![0.0; phases.len()];
    re.par_chunks_mut(4096)
        .zip(im.par_chunks_mut(4096))
        .zip(phases.par_chunks(4096))
        .for_each(|((r, i), p)| {
            for ((r, i), p) in r.iter_mut().zip(i.iter_mut()).zip(p) {
                let (s, c) = p.sin_cos();
                *r = c;
                *i = s;
            }
        });
    (re, im)
}

fn split(v: &[num_complex::Complex64]) -> (Vec<f64>, Vec<f64>) {
    v.iter().map(|c| (c.re, c.im)).unzip()
}

/// Index of the largest value; ties resolve to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &v) in values.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hrr::{random_phasor, similarity};

    fn small_book(seed: u64, identity: bool) -> Codebook {
        Codebook::build(&[2, 3, 5, 7], 256, &mut Rng::new(seed), 1e4, identity).unwrap()
    }

    #[test]
    fn build_shape_and_rows() {
        let book = small_book(1, false);
        assert_eq!(book.len(), 4);
        assert_eq!(book.labels(), &[2, 3, 5, 7]);
        let bound = 4.0 / 16.0;
        for i in 0..4 {
            let row = book.row(i);
            let enc = book.encoder().encode_log(book.labels()[i] as u128).unwrap();
            assert_eq!(row, enc);
            for c in row.to_complex().iter() {
                assert!((c.norm() - 1.0).abs() < 1e-12);
            }
            for j in (i + 1)..4 {
                assert!(similarity(&row, &book.row(j)).unwrap().abs() <= bound);
            }
        }
    }

    #[test]
    fn identity_row() {
        let book = small_book(2, true);
        assert_eq!(book.labels(), &[1, 2, 3, 5, 7]);
        assert_eq!(book.primes(), &[2, 3, 5, 7]);
        assert!(book.row_phases(0).iter().all(|&p| p == 0.0));
        assert_eq!(book.index_of(1), Some(0));
        assert_eq!(book.index_of(5), Some(3));
        assert_eq!(book.index_of(11), None);
    }

    #[test]
    fn build_is_deterministic() {
        let a = small_book(3, false);
        let b = small_book(3, false);
        assert_eq!(a.phases, b.phases);
        assert_ne!(a.phases, small_book(4, false).phases);
    }

    #[test]
    fn build_rejects_bad_primes() {
        let mut rng = Rng::new(1);
        assert!(Codebook::build(&[], 16, &mut rng, 1e4, false).is_err());
        assert!(Codebook::build(&[2], 16, &mut rng, 1e4, false).is_err());
        assert!(Codebook::build(&[2, 4], 16, &mut rng, 1e4, false).is_err());
        assert!(Codebook::build(&[2, 3], 0, &mut rng, 1e4, false).is_err());
    }

    #[test]
    fn cleanup_finds_exact_row() {
        let book = small_book(5, false);
        for k in 0..4 {
            let (idx, sim) = book.cleanup(&book.row(k)).unwrap();
            assert_eq!(idx, k);
            assert!((sim - 1.0).abs() < 1e-12);
        }
        let wrong = random_phasor(10, &mut Rng::new(1)).unwrap();
        assert!(book.cleanup(&wrong).is_err());
    }

    #[test]
    fn cleanup_of_bound_noise_is_not_confident() {
        let n = 512;
        let primes = crate::primes::prime_window(2, 32).unwrap();
        let book = Codebook::build(primes.primes(), n, &mut Rng::new(6), 1e4, false).unwrap();
        let mut rng = Rng::with_stream(6, 9);
        let mut confident = 0;
        for t in 0..50 {
            let noise = random_phasor(n, &mut rng).unwrap();
            let v = book.row(t % 32).bind(&noise).unwrap();
            let (_, sim) = book.cleanup(&v).unwrap();
            if sim > 4.0 / (n as f64).sqrt() {
                confident += 1;
            }
        }
        assert!(confident <= 1, "{confident}");
    }

    #[test]
    fn ties_prefer_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), (1, 3.0));
        assert_eq!(argmax(&[0.5]), (0, 0.5));
    }

    #[test]
    fn projection_is_dominated_by_query_row() {
        let book = small_book(7, false);
        for k in 0..4 {
            let p = book.project(&book.row(k)).unwrap();
            assert_eq!(book.cleanup(&p).unwrap().0, k);
        }
    }

    #[test]
    fn projection_is_linear() {
        let book = small_book(8, false);
        let mut rng = Rng::new(80);
        let u = SuperposedVector::from(&random_phasor(256, &mut rng).unwrap());
        let v = SuperposedVector::from(&random_phasor(256, &mut rng).unwrap());
        let sum = crate::hrr::superpose([&u, &v]).unwrap();
        let lhs = book.project(&sum).unwrap();
        let rhs = crate::hrr::superpose([&book.project(&u).unwrap(), &book.project(&v).unwrap()]).unwrap();
        for (a, b) in lhs.components().iter().zip(rhs.components()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn random_query_has_no_dominant_coefficient() {
        let n = 1024;
        let primes = crate::primes::prime_window(2, 64).unwrap();
        let book = Codebook::build(primes.primes(), n, &mut Rng::new(9), 1e4, false).unwrap();
        let q = random_phasor(n, &mut Rng::with_stream(9, 1)).unwrap();
        let c = book.coefficients(&q).unwrap();
        // Re(Φ_i† q) ~ N(0, n/2); 5σ bound
        let bound = 5.0 * (n as f64 / 2.0).sqrt();
        assert!(c.iter().all(|x| x.abs() < bound));
    }

    #[test]
    fn file_round_trip() {
        let book = small_book(10, true);
        let mut buf = Vec::new();
        book.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..8], CODEBOOK_MAGIC);
        assert_eq!(buf.len(), HEADER_LEN + 8 * (5 + 256 + 5 * 256));
        let back = Codebook::read_from(&buf[..]).unwrap();
        assert_eq!(back.labels(), book.labels());
        assert_eq!(back.phases, book.phases);
        assert_eq!(back.beta().to_bits(), book.beta().to_bits());
        assert_eq!(back.provenance(), book.provenance());
        assert!(back.includes_identity());
    }

    #[test]
    fn corrupted_file_rejected() {
        let book = small_book(11, false);
        let mut buf = Vec::new();
        book.write_to(&mut buf).unwrap();
        let mut bad = buf.clone();
        let last = bad.len() - 1;
        bad[last] ^= 0x40;
        assert!(matches!(Codebook::read_from(&bad[..]), Err(Error::CodebookFormat(_))));
        let mut bad_magic = buf.clone();
        bad_magic[0] = b'X';
        assert!(Codebook::read_from(&bad_magic[..]).is_err());
        assert!(Codebook::read_from(&buf[..40]).is_err());
    }
}

//! Result serialization and run manifests.
//!
//! JSON documents are wrapped in an envelope carrying `schema_version` and a
//! `kind` tag. CSV files start with one `#` comment line carrying the same
//! schema version. Floats are written with 17 significant digits in the
//! shortest of fixed or exponent notation (C's `%.17g`), which round-trips
//! every `f64` exactly.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{KernelProfile, MinDimSummary, SweepSummary};
use crate::resonator::FactorizationResult;

pub const SCHEMA_VERSION: u32 = 1;

pub const SWEEP_CSV_HEADER: &str =
    "cardinality,n,k,trials,accuracy,mean_iterations,convergence_rate,wall_time_s";
pub const KERNEL_CSV_HEADER: &str = "beta,x,mean_sim,std_sim";
pub const MINDIM_CSV_HEADER: &str = "start_prime,cardinality,k,mean_min_dim,run_minima";
pub const RESULT_CSV_HEADER: &str =
    "s,predicted_factors,converged,iterations_used,correct,final_similarities";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

/// `%.17g` rendering; non-finite values become `nan`, `inf`, `-inf`.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_fraction(format!("{v:.decimals$}"))
    } else {
        let m = trim_fraction(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_fraction(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}

/// serde_json formatter applying [`format_f64`] to every float.
#[derive(Default)]
struct G17Formatter {
    inner: serde_json::ser::PrettyFormatter<'static>,
}

impl serde_json::ser::Formatter for G17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        w.write_all(format_f64(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> std::io::Result<()> {
        self.write_f64(w, v as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Pretty JSON with 17-significant-digit floats. Non-finite floats are
/// written as `null`.
pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, G17Formatter::default());
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// Versioned wrapper around every JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub kind: String,
    pub data: T,
}

impl<T> Envelope<T> {
    pub fn new(kind: &str, data: T) -> Self {
        Envelope {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            data,
        }
    }
}

/// Reads an envelope, checking the schema version and kind.
pub fn from_json_envelope<T: DeserializeOwned>(bytes: &[u8], kind: &str) -> Result<T> {
    let env: Envelope<T> = serde_json::from_slice(bytes)?;
    if env.schema_version != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            env.schema_version
        )));
    }
    if env.kind != kind {
        return Err(Error::Config(format!("expected a `{kind}` document, found `{}`", env.kind)));
    }
    Ok(env.data)
}

fn csv_preamble(kind: &str, header: &str) -> String {
    format!("# hdfactor {kind} schema_version={SCHEMA_VERSION}\n{header}\n")
}

fn join<T, F: Fn(&T) -> String>(v: &[T], f: F) -> String {
    v.iter().map(f).collect::<Vec<_>>().join(";")
}

/// Serializes one factorization result. CSV joins list fields with `;`.
pub fn serialize_result(result: &FactorizationResult, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => to_json_bytes(&Envelope::new("factorization", result)),
        Format::Csv => {
            let mut s = csv_preamble("factorization", RESULT_CSV_HEADER);
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                result.s,
                join(&result.predicted_factors, |p| p.to_string()),
                result.converged,
                result.iterations_used,
                result.correct,
                join(&result.final_similarities, |v| format_f64(*v)),
            ));
            Ok(s.into_bytes())
        }
    }
}

/// Format given by name; unknown names are an error.
pub fn serialize_result_named(result: &FactorizationResult, format: &str) -> Result<Vec<u8>> {
    serialize_result(result, format.parse()?)
}

pub fn serialize_sweep(summary: &SweepSummary, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => to_json_bytes(&Envelope::new("sweep", summary)),
        Format::Csv => {
            let mut s = csv_preamble("sweep", SWEEP_CSV_HEADER);
            for c in &summary.cells {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    c.cardinality,
                    c.n,
                    c.k,
                    c.trials,
                    format_f64(c.accuracy),
                    format_f64(c.mean_iterations),
                    format_f64(c.convergence_rate),
                    format_f64(c.wall_time_s),
                ));
            }
            Ok(s.into_bytes())
        }
    }
}

pub fn serialize_kernel(profiles: &[KernelProfile], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => to_json_bytes(&Envelope::new("kernel", profiles)),
        Format::Csv => {
            let mut s = csv_preamble("kernel", KERNEL_CSV_HEADER);
            for p in profiles {
                for ((x, m), sd) in p.grid.iter().zip(&p.mean_similarity).zip(&p.std_similarity) {
                    s.push_str(&format!(
                        "{},{},{},{}\n",
                        format_f64(p.beta),
                        format_f64(*x),
                        format_f64(*m),
                        format_f64(*sd)
                    ));
                }
            }
            Ok(s.into_bytes())
        }
    }
}

/// The CSV form lists unbounded minima as `unbounded` and appends one
/// `# slope` comment per start prime.
pub fn serialize_mindim(summary: &MinDimSummary, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => to_json_bytes(&Envelope::new("mindim", summary)),
        Format::Csv => {
            let mut s = csv_preamble("mindim", MINDIM_CSV_HEADER);
            for r in &summary.rows {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.start_prime,
                    r.cardinality,
                    r.k,
                    r.mean_min_dim.map_or("unbounded".into(), format_f64),
                    join(&r.run_minima, |m| m.map_or("unbounded".into(), |n| n.to_string())),
                ));
            }
            for f in &summary.slopes {
                s.push_str(&format!(
                    "# slope start_prime={} value={} points={}\n",
                    f.start_prime,
                    f.slope.map_or("n/a".into(), format_f64),
                    f.points
                ));
            }
            Ok(s.into_bytes())
        }
    }
}

/// Everything needed to re-run a subcommand exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Fully resolved configuration, defaults included.
    pub config: serde_json::Value,
    pub seed: u64,
    pub library_version: String,
    pub timestamp: String,
    pub output: Option<String>,
    pub format: Option<Format>,
}

impl RunManifest {
    pub fn new<C: Serialize>(
        subcommand: &str,
        config: &C,
        seed: u64,
        output: Option<&Path>,
        format: Option<Format>,
    ) -> Result<Self> {
        Ok(RunManifest {
            subcommand: subcommand.to_string(),
            config: serde_json::to_value(config)?,
            seed,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            output: output.map(|p| p.display().to_string()),
            format,
        })
    }

    pub fn config_as<C: DeserializeOwned>(&self) -> Result<C> {
        serde_json::from_value(self.config.clone())
            .map_err(|e| Error::Config(format!("manifest config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        from_json_envelope(&std::fs::read(path)?, "manifest")
    }
}

/// `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `bytes` to `out` and the manifest beside it.
pub fn write_with_manifest(out: &Path, bytes: &[u8], manifest: &RunManifest) -> Result<()> {
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(out, bytes)?;
    std::fs::write(manifest_path(out), to_json_bytes(&Envelope::new("manifest", manifest))?)?;
    Ok(())
}

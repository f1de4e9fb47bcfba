//! Output files: CSV tables, snapshots, the run manifest and the error log.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Result, SnseError};
use crate::noise::NoiseDescription;
use crate::spectral::snapshot::write_snapshot;
use crate::spectral::VectorField;

pub const MANIFEST: &str = "manifest.json";
pub const ERROR_LOG: &str = "errors.jsonl";

/// Shortest round-trip text for a float; `inf` marks absent hitting times.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "inf".to_string(), num)
}

fn csv_error(e: csv::Error) -> SnseError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => SnseError::Io(io),
        other => SnseError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Writes a CSV with a mandatory header row.
pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        let row: Vec<String> = row.into_iter().collect();
        if row.len() != header.len() {
            return Err(SnseError::Length {
                context: "csv row",
                expected: header.len(),
                found: row.len(),
            });
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_field(path: &Path, u: &VectorField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_snapshot(&mut w, u.components())?;
    w.flush()?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

#[derive(Clone, Debug, Serialize)]
pub struct GridDescription {
    pub n: usize,
    pub domain: &'static str,
    pub dealias: &'static str,
    pub fft_normalization: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchemeDescription {
    pub time_stepping: &'static str,
    pub nonlinearity: &'static str,
    pub noise_evaluation: &'static str,
    pub rng: &'static str,
    pub threads: usize,
    pub partitioning: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub seed: u64,
    /// Realization ids drawn from the seed.
    pub realizations: Vec<u64>,
    pub grid: GridDescription,
    pub scheme: SchemeDescription,
    pub noise: NoiseDescription,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<OutputEntry>,
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(command: &str, cfg: &RunConfig, realizations: Vec<u64>, noise: NoiseDescription) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config: serde_json::from_str(&cfg.canonical_json()).expect("canonical json parses"),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            realizations,
            grid: GridDescription {
                n: cfg.grid_n,
                domain: "[0, 2pi)^3",
                dealias: "keep 3|k_j| < n",
                fft_normalization: "forward 1/n^3",
            },
            scheme: SchemeDescription {
                time_stepping: "integrating-factor Euler-Maruyama, exp(-|k|^2 dt) applied after the explicit update",
                nonlinearity: "pseudo-spectral divergence of dealiased products, Leray projected",
                noise_evaluation: "Ito, left endpoint",
                rng: "ChaCha8 keyed by (seed, realization, domain), stream = step",
                threads: rayon::current_num_threads(),
                partitioning: "one realization per task; spatial loops serial",
            },
            noise,
            started: timestamp(),
            finished: String::new(),
            outputs: Vec::new(),
        }
    }

    /// Checksums every listed file (relative to `dir`), stamps the end
    /// time and writes `manifest.json`.
    pub fn finish(mut self, dir: &Path, files: &[PathBuf]) -> Result<()> {
        let mut names: Vec<String> = files
            .iter()
            .map(|f| f.strip_prefix(dir).unwrap_or(f).to_string_lossy().into_owned())
            .collect();
        names.sort();
        names.dedup();
        self.outputs = names
            .into_iter()
            .map(|file| {
                let sha256 = sha256_file(&dir.join(&file))?;
                Ok(OutputEntry { file, sha256 })
            })
            .collect::<Result<_>>()?;
        self.finished = timestamp();
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        fs::write(dir.join(MANIFEST), text + "\n")?;
        Ok(())
    }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    time: String,
    command: &'a str,
    kind: &'a str,
    message: String,
}

fn error_kind(e: &SnseError) -> &'static str {
    match e {
        SnseError::InvalidGrid(_) | SnseError::GridMismatch { .. } => "grid",
        SnseError::NonFinite { .. } | SnseError::BlowUp { .. } => "numerical",
        SnseError::Length { .. } | SnseError::Empty(_) => "shape",
        SnseError::UnsupportedExponent(_) | SnseError::NonZeroMean { .. } | SnseError::InvalidParameter { .. } => {
            "parameter"
        }
        SnseError::Config(_) => "config",
        SnseError::Format(_) => "format",
        SnseError::AllInvalid(_) => "ensemble",
        SnseError::Io(_) => "io",
    }
}

/// Appends one JSON line describing `e` to `errors.jsonl` in `dir`.
pub fn log_error(dir: &Path, command: &str, e: &SnseError) -> Result<()> {
    fs::create_dir_all(dir)?;
    let rec = ErrorRecord {
        time: timestamp(),
        command,
        kind: error_kind(e),
        message: e.to_string(),
    };
    let mut f = OpenOptions::new().create(true).append(true).open(dir.join(ERROR_LOG))?;
    writeln!(f, "{}", serde_json::to_string(&rec).expect("record serializes"))?;
    Ok(())
}

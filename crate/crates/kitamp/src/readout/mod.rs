//! Single-shot dispersive readout scoring.
//!
//! Heterodyne records from repeated |0⟩/|1⟩ preparations are integrated with
//! a matched filter whose weights follow the inter-class mean trajectory
//! inverse-weighted by the per-sample variance, rotated so state information
//! lands in the real quadrature. Thresholding the projected outcomes at the
//! point of maximum empirical-CDF separation gives the assignment
//! probabilities and the fidelity F = 1 − (P(1|0) + P(0|1))/2.
//!
//! A seeded generator with a phenomenological T₁ jump process provides the
//! synthetic shots used as test oracles.

mod fidelity;
mod filter;
mod generate;

pub use fidelity::{fidelity_from_outcomes, FidelityReport, Histogram, DEFAULT_BINS};
pub use filter::{build_matched_filter, project, MatchedFilter};
pub use generate::{generate_shots, ShotGenerator};

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use thiserror::Error;

use crate::config::KeyValueConfig;

#[derive(Debug, Error)]
pub enum ReadoutError {
    #[error("invalid shot set: {0}")]
    InvalidShotSet(String),
    #[error("record length {record} does not match filter length {filter}")]
    LengthMismatch { record: usize, filter: usize },
    #[error("mean traces are identical within the variance floor; no filter exists")]
    DegenerateFilter,
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}:{line}: {reason}")]
    Parse {
        file: String,
        line: usize,
        reason: String,
    },
}

/// Labeled heterodyne records: N shots × M complex samples (M = 1 for
/// pre-integrated IQ points).
#[derive(Debug, Clone, PartialEq)]
pub struct ShotSet {
    /// Prepared state, 0 or 1.
    pub label: u8,
    pub records: Vec<Vec<Complex64>>,
    /// Sample spacing (s).
    pub sample_period: f64,
    pub qubit_id: String,
}

impl ShotSet {
    pub fn new(
        label: u8,
        records: Vec<Vec<Complex64>>,
        sample_period: f64,
        qubit_id: String,
    ) -> Result<Self, ReadoutError> {
        if label > 1 {
            return Err(ReadoutError::InvalidShotSet("label must be 0 or 1".into()));
        }
        if records.len() < 2 {
            return Err(ReadoutError::InvalidShotSet(
                "need at least 2 shots".into(),
            ));
        }
        let m = records[0].len();
        if m == 0 || records.iter().any(|r| r.len() != m) {
            return Err(ReadoutError::InvalidShotSet(
                "records must share one non-zero length".into(),
            ));
        }
        if records
            .iter()
            .flatten()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(ReadoutError::InvalidShotSet("non-finite sample".into()));
        }
        if !(sample_period > 0.0 && sample_period.is_finite()) {
            return Err(ReadoutError::InvalidShotSet(
                "sample_period must be > 0".into(),
            ));
        }
        Ok(Self {
            label,
            records,
            sample_period,
            qubit_id,
        })
    }

    pub fn n_shots(&self) -> usize {
        self.records.len()
    }

    pub fn record_len(&self) -> usize {
        self.records[0].len()
    }

    /// Long-format CSV: `shot,idx,i,q`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("shot,idx,i,q\n");
        for (n, rec) in self.records.iter().enumerate() {
            for (m, c) in rec.iter().enumerate() {
                out.push_str(&format!("{},{},{},{}\n", n, m, c.re, c.im));
            }
        }
        out
    }

    /// Sidecar metadata in `key = value` form.
    pub fn metadata_text(&self) -> String {
        format!(
            "label = {}\nsample_period = {}\nqubit_id = {}\n",
            self.label, self.sample_period, self.qubit_id
        )
    }

    /// Write `<path>` (CSV) and `<path>.meta` (metadata sidecar).
    pub fn write(&self, path: &Path) -> Result<(), ReadoutError> {
        let io_err = |path: &Path, source| ReadoutError::Io {
            path: path.to_path_buf(),
            source,
        };
        std::fs::write(path, self.to_csv()).map_err(|e| io_err(path, e))?;
        let meta = sidecar_path(path);
        std::fs::write(&meta, self.metadata_text()).map_err(|e| io_err(&meta, e))
    }

    /// Read a shot set written by [`ShotSet::write`].
    pub fn read(path: &Path) -> Result<Self, ReadoutError> {
        let io_err = |path: &Path, source| ReadoutError::Io {
            path: path.to_path_buf(),
            source,
        };
        let csv = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let meta_path = sidecar_path(path);
        let meta_text = std::fs::read_to_string(&meta_path).map_err(|e| io_err(&meta_path, e))?;
        let file = path.display().to_string();
        let meta = KeyValueConfig::from_str_named(&meta_text, &meta_path.display().to_string())
            .map_err(|e| ReadoutError::InvalidShotSet(e.to_string()))?;
        let label = meta
            .get_u64("label")
            .map_err(|e| ReadoutError::InvalidShotSet(e.to_string()))?
            .ok_or_else(|| ReadoutError::InvalidShotSet("metadata missing label".into()))?
            as u8;
        let sample_period = meta
            .get_f64("sample_period")
            .map_err(|e| ReadoutError::InvalidShotSet(e.to_string()))?
            .ok_or_else(|| ReadoutError::InvalidShotSet("metadata missing sample_period".into()))?;
        let qubit_id = meta.get_str("qubit_id").unwrap_or_else(|| "q".to_string());
        meta.finish()
            .map_err(|e| ReadoutError::InvalidShotSet(e.to_string()))?;

        let mut records: Vec<Vec<Complex64>> = Vec::new();
        for (idx, line) in csv.lines().enumerate() {
            if idx == 0 {
                if line.trim() != "shot,idx,i,q" {
                    return Err(ReadoutError::Parse {
                        file,
                        line: 1,
                        reason: format!("expected header shot,idx,i,q, got `{}`", line.trim()),
                    });
                }
                continue;
            }
            let line_txt = line.trim();
            if line_txt.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line_txt.split(',').collect();
            if fields.len() != 4 {
                return Err(ReadoutError::Parse {
                    file,
                    line: idx + 1,
                    reason: format!("expected 4 columns, got {}", fields.len()),
                });
            }
            let parse_field = |what: usize| -> Result<f64, ReadoutError> {
                fields[what].trim().parse().map_err(|_| ReadoutError::Parse {
                    file: path.display().to_string(),
                    line: idx + 1,
                    reason: format!("bad number `{}`", fields[what]),
                })
            };
            let shot = parse_field(0)? as usize;
            let sample = parse_field(1)? as usize;
            let re = parse_field(2)?;
            let im = parse_field(3)?;
            if shot == records.len() {
                records.push(Vec::new());
            }
            if shot >= records.len() || records[shot].len() != sample {
                return Err(ReadoutError::Parse {
                    file: path.display().to_string(),
                    line: idx + 1,
                    reason: "rows must be ordered by (shot, idx) without holes".to_string(),
                });
            }
            records[shot].push(Complex64::new(re, im));
        }
        Self::new(label, records, sample_period, qubit_id)
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".meta");
    PathBuf::from(os)
}

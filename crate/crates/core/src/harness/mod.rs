//! Seeded Monte-Carlo experiments: BER sweeps, multi-attempt studies,
//! local-minima statistics and operation-count reports.
//!
//! Every random quantity is drawn from a generator keyed by
//! `(master seed, stream, frame, transmission, ...)`, so frames can run on
//! any number of workers and still produce identical results.

mod landscape;
mod opcount;
mod output;
mod sweep;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::qubo::MAX_ENUMERATION_BITS;
use crate::snn::LifParams;

pub use landscape::{run_local_minima_study, LandscapeRow};
pub use opcount::{report_op_counts, OpCountReport, OpCountRow};
pub use output::{
    ber_csv_string, sidecar_path, write_ber_results, write_landscape_csv, write_opcount_csv,
    SNR_CONVENTION,
};
pub use sweep::{run_attempts_study, run_ber_sweep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    Zf,
    Mmse,
    Snn,
    Ml,
}

impl Detector {
    pub fn name(self) -> &'static str {
        match self {
            Detector::Zf => "zf",
            Detector::Mmse => "mmse",
            Detector::Snn => "snn",
            Detector::Ml => "ml",
        }
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zf" => Ok(Detector::Zf),
            "mmse" => Ok(Detector::Mmse),
            "snn" => Ok(Detector::Snn),
            "ml" => Ok(Detector::Ml),
            other => Err(Error::InvalidConfig(format!("unknown detector `{other}`"))),
        }
    }
}

/// Parse a comma-separated detector list such as `zf,mmse,snn`.
pub fn parse_detectors(s: &str) -> Result<Vec<Detector>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect()
}

/// Parse `start:stop:step` (inclusive stop) or a single value.
pub fn parse_snr_range(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("bad SNR range `{s}`, expected start:stop:step"));
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match parts.as_slice() {
        [v] => Ok(vec![*v]),
        [start, stop, step] if *step > 0.0 && stop >= start => {
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}

/// Parse a comma-separated list of positive integers.
pub fn parse_usize_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad integer `{t}`")))
        })
        .collect()
}

/// Description of a BER experiment. The JSON form mirrors the CLI flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Base-station antennas `M`.
    pub antennas: usize,
    /// Concurrent streams / users `K`.
    pub streams: usize,
    pub snr_db: Vec<f64>,
    /// Independent channel draws; the channel is fixed within a frame.
    pub frames: usize,
    pub tx_per_frame: usize,
    pub detectors: Vec<Detector>,
    pub lif: LifParams,
    /// SNN attempts per transmission in a BER sweep.
    pub attempts: usize,
    /// Attempt budgets compared by the attempts study.
    pub attempts_list: Vec<usize>,
    pub seed: u64,
    /// BER the sweep should be able to resolve; only used for a warning.
    pub target_ber: f64,
    /// Result CSV path; a JSON sidecar is written next to it.
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            antennas: 16,
            streams: 4,
            snr_db: vec![0.0, 3.0, 6.0, 9.0, 12.0, 15.0],
            frames: 80,
            tx_per_frame: 100,
            detectors: vec![Detector::Zf, Detector::Mmse, Detector::Snn],
            lif: LifParams::default(),
            attempts: 1,
            attempts_list: vec![1, 20, 40],
            seed: 1,
            target_ber: 1e-4,
            output: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Bits per transmission (`2K`).
    pub fn bits_per_tx(&self) -> usize {
        2 * self.streams
    }

    /// Bits accumulated per (SNR, detector) point.
    pub fn bits_per_point(&self) -> u64 {
        (self.frames * self.tx_per_frame * self.bits_per_tx()) as u64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.streams == 0 || self.antennas < self.streams {
            return bad(format!(
                "need antennas >= streams >= 1, got {}x{}",
                self.antennas, self.streams
            ));
        }
        if self.frames == 0 || self.tx_per_frame == 0 {
            return bad("frames and tx_per_frame must be positive".into());
        }
        // +inf dB is the noiseless channel
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return bad("snr_db must be a non-empty list of SNR values".into());
        }
        if self.detectors.is_empty() {
            return bad("no detectors selected".into());
        }
        if self.detectors.contains(&Detector::Ml) && self.bits_per_tx() > MAX_ENUMERATION_BITS {
            return bad(format!(
                "ml detector needs 2K <= {MAX_ENUMERATION_BITS}, got {}",
                self.bits_per_tx()
            ));
        }
        if self.attempts == 0 || self.attempts_list.contains(&0) {
            return bad("attempt counts must be positive".into());
        }
        self.lif.validate()?;
        if self.target_ber > 0.0 {
            // ten expected errors at the target rate
            let needed = (10.0 / self.target_ber).ceil() as u64;
            if self.bits_per_point() < needed {
                log::warn!(
                    "{} bits per point cannot resolve BER {:e} (want >= {needed})",
                    self.bits_per_point(),
                    self.target_ber
                );
            }
        }
        Ok(())
    }

    /// Short hex digest of the configuration, excluding the output path.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output = None;
        let json = serde_json::to_string(&c).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// One (SNR, detector, attempt budget) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub config_hash: String,
    pub antennas: usize,
    pub streams: usize,
    pub snr_db: f64,
    pub detector: Detector,
    /// SNN attempts (1 for the other detectors).
    pub attempts: usize,
    pub bit_errors: u64,
    pub bits_total: u64,
    pub ber: f64,
    /// Accumulated detector time over all workers.
    pub wall_time_s: f64,
}

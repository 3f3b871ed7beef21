//! Result files: one CSV per experiment plus a JSON sidecar holding the
//! full configuration (every LIF parameter included).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use super::{BerRecord, ExperimentConfig, LandscapeRow, OpCountReport};
use crate::error::Result;

pub const SNR_CONVENTION: &str =
    "per-user transmit SNR: unit-energy symbols, CN(0,1) channel taps, sigma_z^2 = 10^(-snr_db/10)";

/// `results.csv` -> `results.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// CSV text for BER records. The last column is timing and is the only
/// field that varies between identical runs.
pub fn ber_csv_string(records: &[BerRecord], config_hash: &str) -> String {
    let mut s = String::new();
    writeln!(s, "# config_hash={config_hash}").unwrap();
    writeln!(s, "snr_db,detector,attempts,bit_errors,bits_total,ber,wall_time_s").unwrap();
    for r in records {
        writeln!(
            s,
            "{},{},{},{},{},{:e},{:.6}",
            r.snr_db, r.detector, r.attempts, r.bit_errors, r.bits_total, r.ber, r.wall_time_s
        )
        .unwrap();
    }
    s
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

/// Write `records` to `path` and the configuration to its sidecar.
pub fn write_ber_results(
    path: &Path,
    kind: &str,
    config: &ExperimentConfig,
    records: &[BerRecord],
) -> Result<()> {
    ensure_parent(path)?;
    let hash = config.hash();
    fs::write(path, ber_csv_string(records, &hash))?;
    let sidecar = json!({
        "kind": kind,
        "config_hash": hash,
        "snr_convention": SNR_CONVENTION,
        "bits_per_point": config.bits_per_point(),
        "config": config,
    });
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&sidecar)? + "\n")?;
    Ok(())
}

pub fn write_landscape_csv(path: &Path, rows: &[LandscapeRow], snr_db: Option<f64>) -> Result<()> {
    ensure_parent(path)?;
    let mut s = String::new();
    match snr_db {
        Some(v) => writeln!(s, "# snr_db={v}").unwrap(),
        None => writeln!(s, "# snr_db=noiseless").unwrap(),
    }
    writeln!(s, "antennas,streams,spatial_ratio,instances,mean_local_minima").unwrap();
    for r in rows {
        writeln!(
            s,
            "{},{},{},{},{}",
            r.antennas, r.streams, r.spatial_ratio, r.instances, r.mean_local_minima
        )
        .unwrap();
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn write_opcount_csv(path: &Path, report: &OpCountReport) -> Result<()> {
    ensure_parent(path)?;
    let mut s = String::new();
    writeln!(
        s,
        "antennas,streams,mmse_mul,mmse_add,mmse_sqrt,mmse_div,mmse_total,qubo_mul,qubo_add,qubo_total,reduction"
    )
    .unwrap();
    for r in &report.rows {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.antennas,
            r.streams,
            r.mmse.multiplications,
            r.mmse.additions,
            r.mmse.square_roots,
            r.mmse.divisions,
            r.mmse.total(),
            r.qubo.multiplications,
            r.qubo.additions,
            r.qubo.total(),
            r.reduction
        )
        .unwrap();
    }
    fs::write(path, s)?;
    Ok(())
}

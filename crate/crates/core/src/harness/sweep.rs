use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use super::{BerRecord, Detector, ExperimentConfig};
use crate::error::Result;
use crate::linear::{mmse_detect, zf_detect};
use crate::model::{
    bits_to_qpsk, complex_to_real, generate_rayleigh_channel, hard_demap, transmit, SnrSpec,
};
use crate::qubo::{build_qubo, ml_brute_force, update_observation, QuboInstance, QPSK_ALPHA};
use crate::seed::{derive_rng, derive_seed, stream};
use crate::snn::{attempt_seed, best_attempt, run_attempts, AttemptOutcome};

/// One result column: a detector, and for the SNN an attempt budget.
#[derive(Debug, Clone, Copy)]
struct Column {
    detector: Detector,
    attempts: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    errors: u64,
    nanos: u128,
}

fn columns(config: &ExperimentConfig, budgets: &[usize]) -> Vec<Column> {
    let mut cols = Vec::new();
    for &detector in &config.detectors {
        if detector == Detector::Snn {
            cols.extend(budgets.iter().map(|&attempts| Column { detector, attempts }));
        } else {
            cols.push(Column { detector, attempts: 1 });
        }
    }
    cols
}

fn bit_errors(a: &[u8], b: &[u8]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u64
}

/// Simulate one frame; returns tallies indexed `[snr][column]`.
fn run_frame(
    config: &ExperimentConfig,
    cols: &[Column],
    frame: u64,
) -> Result<Vec<Vec<Tally>>> {
    let seed = config.seed;
    let n_bits = config.bits_per_tx();
    let max_budget = cols
        .iter()
        .filter(|c| c.detector == Detector::Snn)
        .map(|c| c.attempts)
        .max()
        .unwrap_or(0);

    let channel = generate_rayleigh_channel(
        config.antennas,
        config.streams,
        &mut derive_rng(seed, &[stream::CHANNEL, frame]),
    )?;
    let mut tallies = vec![vec![Tally::default(); cols.len()]; config.snr_db.len()];
    // off-diagonal QUBO terms depend on the channel only
    let mut frame_qubo: Option<QuboInstance> = None;

    for tx in 0..config.tx_per_frame as u64 {
        let mut bit_rng = derive_rng(seed, &[stream::BITS, frame, tx]);
        let bits: Vec<u8> = (0..n_bits).map(|_| u8::from(bit_rng.random::<bool>())).collect();
        let symbols = bits_to_qpsk(&bits)?;

        for (si, &snr_db) in config.snr_db.iter().enumerate() {
            let snr = SnrSpec::from_db(snr_db);
            // same unit noise at every SNR point, scaled by sigma_z
            let y = transmit(
                &channel,
                &symbols,
                snr,
                &mut derive_rng(seed, &[stream::NOISE, frame, tx]),
            )?;
            let system = complex_to_real(&channel, &y)?;
            let mut snn_outcomes: Option<(Vec<AttemptOutcome>, Vec<u128>)> = None;

            for (ci, col) in cols.iter().enumerate() {
                let start = Instant::now();
                let (decided, nanos) = match col.detector {
                    Detector::Zf => (hard_demap(zf_detect(&system)?.as_slice()), None),
                    Detector::Mmse => (
                        hard_demap(mmse_detect(&system, snr.sigma_z_sq)?.as_slice()),
                        None,
                    ),
                    Detector::Ml => (ml_brute_force(&system, QPSK_ALPHA)?.bits, None),
                    Detector::Snn => {
                        if snn_outcomes.is_none() {
                            let inst = match &frame_qubo {
                                Some(base) => update_observation(base, &system)?,
                                None => {
                                    let q = build_qubo(&system, QPSK_ALPHA)?;
                                    frame_qubo = Some(q.clone());
                                    q
                                }
                            };
                            let base_seed =
                                derive_seed(seed, &[stream::SNN, frame, tx, si as u64]);
                            let mut outcomes: Vec<AttemptOutcome> = Vec::with_capacity(max_budget);
                            let mut elapsed = Vec::with_capacity(max_budget);
                            let mut acc = start.elapsed().as_nanos();
                            // without noise every attempt repeats the first one
                            let distinct = if config.lif.sigma_v_sq > 0.0 { max_budget } else { 1 };
                            for a in 0..max_budget {
                                if a >= distinct {
                                    outcomes.push(outcomes[0].clone());
                                    elapsed.push(acc);
                                    continue;
                                }
                                let t = Instant::now();
                                let mut one = run_attempts(
                                    &inst,
                                    &config.lif,
                                    1,
                                    attempt_seed(base_seed, a),
                                )?;
                                outcomes.push(one.pop().expect("one attempt"));
                                acc += t.elapsed().as_nanos();
                                elapsed.push(acc);
                            }
                            snn_outcomes = Some((outcomes, elapsed));
                        }
                        let (outcomes, elapsed) = snn_outcomes.as_ref().expect("filled above");
                        let best = best_attempt(&outcomes[..col.attempts]).expect("budget >= 1");
                        (best.bits, Some(elapsed[col.attempts - 1]))
                    }
                };
                let slot = &mut tallies[si][ci];
                slot.errors += bit_errors(&decided, &bits);
                slot.nanos += nanos.unwrap_or_else(|| start.elapsed().as_nanos());
            }
        }
    }
    Ok(tallies)
}

fn simulate(config: &ExperimentConfig, budgets: &[usize]) -> Result<Vec<BerRecord>> {
    config.validate()?;
    let cols = columns(config, budgets);
    let per_frame: Vec<Vec<Vec<Tally>>> = (0..config.frames as u64)
        .into_par_iter()
        .map(|f| run_frame(config, &cols, f))
        .collect::<Result<_>>()?;

    let mut total = vec![vec![Tally::default(); cols.len()]; config.snr_db.len()];
    for frame in &per_frame {
        for (acc_row, row) in total.iter_mut().zip(frame) {
            for (acc, t) in acc_row.iter_mut().zip(row) {
                acc.errors += t.errors;
                acc.nanos += t.nanos;
            }
        }
    }

    let hash = config.hash();
    let bits_total = config.bits_per_point();
    let mut records = Vec::with_capacity(config.snr_db.len() * cols.len());
    for (si, &snr_db) in config.snr_db.iter().enumerate() {
        for (ci, col) in cols.iter().enumerate() {
            let t = total[si][ci];
            records.push(BerRecord {
                config_hash: hash.clone(),
                antennas: config.antennas,
                streams: config.streams,
                snr_db,
                detector: col.detector,
                attempts: col.attempts,
                bit_errors: t.errors,
                bits_total,
                ber: t.errors as f64 / bits_total as f64,
                wall_time_s: t.nanos as f64 * 1e-9,
            });
        }
    }
    Ok(records)
}

/// BER of every configured detector at every SNR point. The SNN uses
/// `config.attempts` attempts per transmission.
pub fn run_ber_sweep(config: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    simulate(config, &[config.attempts])
}

/// Like [`run_ber_sweep`], but evaluates the SNN under every budget in
/// `config.attempts_list` on the same transmissions. Budgets share attempt
/// seeds, so a larger budget always contains the smaller ones.
/// Detectors other than the SNN are reported once as baselines.
pub fn run_attempts_study(config: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    let mut config = config.clone();
    if !config.detectors.contains(&Detector::Snn) {
        config.detectors.push(Detector::Snn);
    }
    let budgets = config.attempts_list.clone();
    if budgets.is_empty() {
        return Err(crate::Error::InvalidConfig("attempts_list is empty".into()));
    }
    simulate(&config, &budgets)
}

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{bits_to_qpsk, complex_to_real, generate_rayleigh_channel, transmit, SnrSpec};
use crate::qubo::{build_qubo, count_local_minima, MAX_ENUMERATION_BITS, QPSK_ALPHA};
use crate::seed::{derive_rng, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRow {
    pub antennas: usize,
    pub streams: usize,
    pub spatial_ratio: f64,
    pub instances: usize,
    pub mean_local_minima: f64,
}

/// Average number of 1-flip local minima of the QUBO landscape for each
/// antenna count in `antennas`. `snr_db = None` counts noiseless instances.
pub fn run_local_minima_study(
    antennas: &[usize],
    streams: usize,
    instances: usize,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<Vec<LandscapeRow>> {
    if 2 * streams > MAX_ENUMERATION_BITS {
        return Err(Error::EnumerationLimit {
            n: 2 * streams,
            limit: MAX_ENUMERATION_BITS,
        });
    }
    if instances == 0 {
        return Err(Error::InvalidConfig("instances must be positive".into()));
    }
    let snr = snr_db.map_or_else(SnrSpec::noiseless, SnrSpec::from_db);

    antennas
        .iter()
        .map(|&m| {
            let counts: Vec<u64> = (0..instances as u64)
                .into_par_iter()
                .map(|i| {
                    let mut rng = derive_rng(seed, &[stream::LANDSCAPE, m as u64, i]);
                    let channel = generate_rayleigh_channel(m, streams, &mut rng)?;
                    let bits: Vec<u8> =
                        (0..2 * streams).map(|_| u8::from(rng.random::<bool>())).collect();
                    let y = transmit(&channel, &bits_to_qpsk(&bits)?, snr, &mut rng)?;
                    let inst = build_qubo(&complex_to_real(&channel, &y)?, QPSK_ALPHA)?;
                    count_local_minima(&inst)
                })
                .collect::<Result<_>>()?;
            Ok(LandscapeRow {
                antennas: m,
                streams,
                spatial_ratio: m as f64 / streams as f64,
                instances,
                mean_local_minima: counts.iter().sum::<u64>() as f64 / instances as f64,
            })
        })
        .collect()
}

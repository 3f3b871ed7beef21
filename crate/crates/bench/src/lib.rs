//! Fixtures shared by the criterion benches.

use neuromimo::model::{bits_to_qpsk, complex_to_real, generate_rayleigh_channel, transmit};
use neuromimo::seed::rng_from_seed;
use neuromimo::{build_qubo, QuboInstance, RealSystem, SnrSpec, QPSK_ALPHA};
use rand::Rng;

/// A noisy `antennas x streams` real system and its QUBO instance.
pub fn fixture(antennas: usize, streams: usize, snr_db: f64, seed: u64) -> (RealSystem, QuboInstance) {
    let mut rng = rng_from_seed(seed);
    let channel = generate_rayleigh_channel(antennas, streams, &mut rng).expect("valid size");
    let bits: Vec<u8> = (0..2 * streams).map(|_| u8::from(rng.random::<bool>())).collect();
    let x = bits_to_qpsk(&bits).expect("even length");
    let y = transmit(&channel, &x, SnrSpec::from_db(snr_db), &mut rng).expect("matching size");
    let system = complex_to_real(&channel, &y).expect("matching size");
    let inst = build_qubo(&system, QPSK_ALPHA).expect("valid system");
    (system, inst)
}

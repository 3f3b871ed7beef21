//! Channel generation, QPSK mapping, AWGN transmission and the
//! complex-to-real system transform.
//!
//! Bit layout: bit `j` of a `2K`-bit word drives the `j`-th entry of the
//! real-stacked symbol vector `[Re x; Im x]`. Bits `0..K` carry the
//! in-phase parts of users `0..K`, bits `K..2K` the quadrature parts.
//! QUBO bit indices and real-system column indices therefore coincide.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Complex `M x K` propagation matrix (rows: BS antennas, columns: users).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: DMatrix<Complex64>,
}

impl ChannelMatrix {
    pub fn new(entries: DMatrix<Complex64>) -> Result<Self> {
        let (m, k) = entries.shape();
        if k == 0 || m < k {
            return Err(Error::InvalidDimensions(format!(
                "channel must satisfy M >= K >= 1, got {m}x{k}"
            )));
        }
        if entries.iter().any(|h| !h.re.is_finite() || !h.im.is_finite()) {
            return Err(Error::InvalidParameter(
                "channel entries must be finite".into(),
            ));
        }
        Ok(Self { entries })
    }

    /// Number of base-station antennas `M`.
    pub fn antennas(&self) -> usize {
        self.entries.nrows()
    }

    /// Number of users / streams `K`.
    pub fn streams(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }
}

/// Complex QPSK symbol vector, one unit-energy symbol per user.
#[derive(Debug, Clone, PartialEq)]
pub struct TxSymbolVector {
    symbols: DVector<Complex64>,
}

impl TxSymbolVector {
    pub fn symbols(&self) -> &DVector<Complex64> {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// `[Re x; Im x]`.
    pub fn real_stack(&self) -> DVector<f64> {
        real_stack(&self.symbols)
    }
}

/// Real-valued equivalent `y = H x + z` of the complex baseband model.
#[derive(Debug, Clone, PartialEq)]
pub struct RealSystem {
    pub h: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl RealSystem {
    pub fn new(h: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        if h.ncols() == 0 || h.nrows() == 0 {
            return Err(Error::InvalidDimensions("empty real system".into()));
        }
        if y.len() != h.nrows() {
            return Err(Error::DimensionMismatch {
                what: "observation length vs rows of H",
                expected: h.nrows(),
                actual: y.len(),
            });
        }
        Ok(Self { h, y })
    }

    /// Number of real unknowns (`2K` for a complex system).
    pub fn n(&self) -> usize {
        self.h.ncols()
    }

    /// Number of real observations (`2M` for a complex system).
    pub fn m(&self) -> usize {
        self.h.nrows()
    }

    /// Same channel, different observation.
    pub fn with_observation(&self, y: DVector<f64>) -> Result<Self> {
        Self::new(self.h.clone(), y)
    }
}

/// Noise level under the per-user transmit-SNR convention:
/// unit-energy symbols, unit-variance channel taps, `sigma_z^2 = 10^(-snr/10)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSpec {
    pub snr_db: f64,
    pub sigma_z_sq: f64,
}

impl SnrSpec {
    pub fn from_db(snr_db: f64) -> Self {
        Self {
            snr_db,
            sigma_z_sq: 10f64.powf(-snr_db / 10.0),
        }
    }

    pub fn noiseless() -> Self {
        Self {
            snr_db: f64::INFINITY,
            sigma_z_sq: 0.0,
        }
    }
}

/// Stack real parts over imaginary parts.
pub fn real_stack(v: &DVector<Complex64>) -> DVector<f64> {
    let k = v.len();
    DVector::from_fn(2 * k, |i, _| if i < k { v[i].re } else { v[i - k].im })
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// I.i.d. `CN(0, 1)` channel with `m` antennas and `k` users.
pub fn generate_rayleigh_channel<R: Rng + ?Sized>(
    m: usize,
    k: usize,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    if k == 0 || m < k {
        return Err(Error::InvalidDimensions(format!(
            "channel must satisfy M >= K >= 1, got {m}x{k}"
        )));
    }
    // column-major fill: draw order is fixed for a given seed
    let mut entries = DMatrix::zeros(m, k);
    for c in 0..k {
        for r in 0..m {
            entries[(r, c)] = complex_gaussian(rng, 1.0);
        }
    }
    ChannelMatrix::new(entries)
}

/// Map `2K` bits to `K` QPSK symbols `((2b_k - 1) + j (2b_{K+k} - 1)) / sqrt 2`.
pub fn bits_to_qpsk(bits: &[u8]) -> Result<TxSymbolVector> {
    if bits.is_empty() || !bits.len().is_multiple_of(2) {
        return Err(Error::InvalidDimensions(format!(
            "QPSK mapping needs an even, non-zero number of bits, got {}",
            bits.len()
        )));
    }
    if let Some(b) = bits.iter().find(|&&b| b > 1) {
        return Err(Error::InvalidParameter(format!("bit value {b} is not 0/1")));
    }
    let k = bits.len() / 2;
    let level = |b: u8| if b == 1 { 1.0 } else { -1.0 } * std::f64::consts::FRAC_1_SQRT_2;
    let symbols = DVector::from_fn(k, |i, _| Complex64::new(level(bits[i]), level(bits[k + i])));
    Ok(TxSymbolVector { symbols })
}

/// `y = H x + z`, `z ~ CN(0, sigma_z^2 I)`. Noise is drawn even when
/// `sigma_z^2 = 0` so the generator advances identically at every SNR.
pub fn transmit<R: Rng + ?Sized>(
    channel: &ChannelMatrix,
    x: &TxSymbolVector,
    snr: SnrSpec,
    rng: &mut R,
) -> Result<DVector<Complex64>> {
    if x.len() != channel.streams() {
        return Err(Error::DimensionMismatch {
            what: "symbol vector vs channel columns",
            expected: channel.streams(),
            actual: x.len(),
        });
    }
    let mut y = channel.entries() * x.symbols();
    for yi in y.iter_mut() {
        *yi += complex_gaussian(rng, snr.sigma_z_sq);
    }
    Ok(y)
}

/// Real-valued form `H = [[Re H, -Im H], [Im H, Re H]]`, `y = [Re y; Im y]`.
pub fn complex_to_real(channel: &ChannelMatrix, y: &DVector<Complex64>) -> Result<RealSystem> {
    let (m, k) = (channel.antennas(), channel.streams());
    if y.len() != m {
        return Err(Error::DimensionMismatch {
            what: "observation length vs channel rows",
            expected: m,
            actual: y.len(),
        });
    }
    let hc = channel.entries();
    let h = DMatrix::from_fn(2 * m, 2 * k, |r, c| {
        let h = hc[(r % m, c % k)];
        match (r < m, c < k) {
            (true, true) | (false, false) => h.re,
            (true, false) => -h.im,
            (false, true) => h.im,
        }
    });
    RealSystem::new(h, real_stack(y))
}

/// Sign detector on real-stacked symbol estimates; `0.0` maps to bit 0.
pub fn hard_demap(x_hat: &[f64]) -> Vec<u8> {
    x_hat.iter().map(|&v| u8::from(v > 0.0)).collect()
}

//! Uplink MU-MIMO detection through a QUBO reduction solved by a
//! discrete-time leaky integrate-and-fire spiking network.
//!
//! The crate is organised around the detection pipeline:
//!
//! * [`model`] draws Rayleigh channels, maps bits to QPSK, adds AWGN and
//!   converts the complex baseband system to its real-valued form.
//! * [`qubo`] turns a real system into a QUBO instance and provides the
//!   exhaustive ML oracle and the 1-flip local-minima counter.
//! * [`linear`] holds the ZF/MMSE baselines (Cholesky solves) and the
//!   analytic operation-count models.
//! * [`snn`] simulates the spiking network and decodes spike rates to bits.
//! * [`harness`] runs seeded Monte-Carlo experiments and writes results.

pub mod error;
pub mod harness;
pub mod linear;
pub mod model;
pub mod qubo;
pub mod seed;
pub mod snn;

pub use error::{Error, Result};
pub use harness::{BerRecord, Detector, ExperimentConfig};
pub use linear::{mmse_detect, zf_detect, OperationCounts};
pub use model::{ChannelMatrix, RealSystem, SnrSpec, TxSymbolVector};
pub use qubo::{build_qubo, QuboInstance, QPSK_ALPHA};
pub use snn::{LifParams, SpikeRaster, SpikingNetwork};

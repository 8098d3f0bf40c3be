//! Link-level simulator for an analog MIMO radio-over-copper fronthaul.
//!
//! Models the full downlink chain of an RF-over-LAN-cable relay: an LTE-like
//! 2x2 MIMO transmitter, an emulated wireless fading channel (static or EPA5
//! with configurable antenna correlation), analog RF-to-IF mapping of the two
//! MIMO ports onto twisted pairs of a Cat-5e cable, cable insertion loss and
//! far-end crosstalk, passive equalization, IF-to-RF recovery, and an MMSE
//! receiver with soft-decision decoding. Throughput and BLER are measured per
//! MCS by seeded Monte-Carlo simulation, either explicitly (full encode /
//! decode per subframe) or through a calibrated EESM link abstraction backed
//! by AWGN reference tables.
//!
//! Module map:
//! - [`cable`]: closed-form multi-pair cable model (insertion loss, FEXT/NEXT,
//!   per-frequency pair-to-pair transfer matrices).
//! - [`frontend`]: the two back-to-back LAN-to-coax converters — port-to-pair
//!   IF plans, passive equalizer design, composition of the copper section
//!   into per-subcarrier port-to-port matrices.
//! - [`phy`]: OFDM numerology, the MCS 0-17 table, Gray-mapped QPSK/16QAM,
//!   convolutional coding with rate matching and CRC-16 error detection.
//! - [`channel`]: emulated fader (static identity or EPA5 tapped delay line
//!   with sum-of-sinusoids Doppler and 3GPP-style spatial correlation).
//! - [`link`]: the end-to-end Monte-Carlo engine, post-MMSE SINR, EESM
//!   effective SNR, BLER reference tables and beta calibration.
//! - [`harness`]: config parsing, experiment presets, sweep execution, CSV
//!   emission and trend summaries.
//!
//! All simulation output is a pure function of (configuration, seed) and is
//! independent of the number of worker threads.

pub mod cable;
pub mod channel;
pub mod cmat;
pub mod frontend;
pub mod harness;
pub mod link;
pub(crate) mod par;
pub mod phy;
pub mod rng;

pub use cable::{CableChannelMatrix, CableError, CableSpec};
pub use channel::{ChannelModel, ChannelSampler, CorrelationLevel, TapProfile};
pub use frontend::{EqualizerProfile, FrontendSpec, PlanReport, Sf2sfPlan};
pub use link::{LinkConfig, LinkError, LinkMode, LinkResult};
pub use phy::{McsEntry, McsTable, Modulation, Numerology};

/// Speed of light in vacuum, m/s.
pub const C_VACUUM_M_S: f64 = 299_792_458.0;

/// Thermal noise density at 290 K, dBm/Hz.
pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;

/// Decibels to linear power ratio.
#[inline]
pub fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power ratio to decibels.
#[inline]
pub fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Decibels to linear amplitude ratio.
#[inline]
pub fn db_to_amp(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

//! Simplified LTE-like physical layer: OFDM numerology per bandwidth, the
//! MCS 0-17 table, Gray-mapped constellations and a convolutional transport
//! block codec with rate matching and CRC-16 error detection.

pub mod codec;
pub mod modulation;

pub use codec::{decode_block, encode_block, CodecSpec, CODEC_VERSION};
pub use modulation::{demodulate_soft, modulate};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PhyError {
    #[error("unsupported bandwidth {0} Hz; supported: 5 MHz, 10 MHz, 20 MHz")]
    UnsupportedBandwidth(f64),
    #[error("unknown MCS index {0}; valid range 0..={max}", max = MCS_COUNT - 1)]
    UnknownMcs(usize),
    #[error("bit count {n} not divisible by {bits_per_symbol} bits/symbol")]
    LengthMismatch { n: usize, bits_per_symbol: usize },
    #[error("noise variance must be > 0, got {0}")]
    BadNoiseVariance(f64),
}

/// OFDM grid parameters for one channel bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Numerology {
    pub bw_hz: f64,
    pub n_rb: usize,
    pub subcarrier_spacing_hz: f64,
    pub symbols_per_subframe: usize,
    pub subframe_duration_s: f64,
}

impl Numerology {
    pub fn n_subcarriers(&self) -> usize {
        12 * self.n_rb
    }

    /// Baseband offset of subcarrier `k` from the band center; offset zero
    /// at the center subcarrier `k = n_subcarriers / 2`.
    pub fn subcarrier_offset_hz(&self, k: usize) -> f64 {
        (k as f64 - (self.n_subcarriers() / 2) as f64) * self.subcarrier_spacing_hz
    }
}

/// Fixed bandwidth-to-grid mapping: 5 MHz -> 25 RB, 10 -> 50, 20 -> 100.
pub fn numerology_for_bw(bw_hz: f64) -> Result<Numerology, PhyError> {
    let n_rb = match bw_hz as i64 {
        5_000_000 => 25,
        10_000_000 => 50,
        20_000_000 => 100,
        _ => return Err(PhyError::UnsupportedBandwidth(bw_hz)),
    };
    Ok(Numerology {
        bw_hz,
        n_rb,
        subcarrier_spacing_hz: 15_000.0,
        symbols_per_subframe: 14,
        subframe_duration_s: 1e-3,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    Qpsk,
    Qam16,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }
}

impl std::fmt::Display for Modulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Modulation::Qpsk => write!(f, "qpsk"),
            Modulation::Qam16 => write!(f, "16qam"),
        }
    }
}

pub const MCS_COUNT: usize = 18;

/// One modulation-and-coding-scheme table entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsEntry {
    pub index: usize,
    pub modulation: Modulation,
    pub code_rate: f64,
    /// Fraction of resource elements reserved for control and reference
    /// signals.
    pub overhead_fraction: f64,
}

impl McsEntry {
    pub fn bits_per_symbol(&self) -> usize {
        self.modulation.bits_per_symbol()
    }
}

/// MCS 0-17: indices 0-9 QPSK, 10-17 16QAM, code rate increasing within
/// each modulation. Overridable via the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

const QPSK_RATES: [f64; 10] = [0.12, 0.15, 0.19, 0.25, 0.30, 0.37, 0.44, 0.52, 0.59, 0.66];
const QAM16_RATES: [f64; 8] = [0.33, 0.37, 0.42, 0.48, 0.54, 0.60, 0.64, 0.75];
const DEFAULT_OVERHEAD: f64 = 0.25;

impl Default for McsTable {
    fn default() -> Self {
        let mut entries = Vec::with_capacity(MCS_COUNT);
        for (i, &r) in QPSK_RATES.iter().enumerate() {
            entries.push(McsEntry {
                index: i,
                modulation: Modulation::Qpsk,
                code_rate: r,
                overhead_fraction: DEFAULT_OVERHEAD,
            });
        }
        for (i, &r) in QAM16_RATES.iter().enumerate() {
            entries.push(McsEntry {
                index: 10 + i,
                modulation: Modulation::Qam16,
                code_rate: r,
                overhead_fraction: DEFAULT_OVERHEAD,
            });
        }
        McsTable { entries }
    }
}

impl McsTable {
    pub fn get(&self, index: usize) -> Result<&McsEntry, PhyError> {
        self.entries.get(index).ok_or(PhyError::UnknownMcs(index))
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    /// Replaces the code rate of one entry (config override hook).
    pub fn set_code_rate(&mut self, index: usize, rate: f64) -> Result<(), PhyError> {
        self.entries
            .get_mut(index)
            .map(|e| e.code_rate = rate)
            .ok_or(PhyError::UnknownMcs(index))
    }

    pub fn set_overhead(&mut self, overhead: f64) {
        for e in &mut self.entries {
            e.overhead_fraction = overhead;
        }
    }
}

/// Data resource elements per subframe per stream: the exact count of the
/// overhead pattern, so block sizes and the peak-rate formula agree bit
/// for bit.
pub fn data_res_per_subframe(mcs: &McsEntry, num: &Numerology) -> usize {
    let total = num.n_subcarriers() * num.symbols_per_subframe;
    (0..total)
        .filter(|&r| is_data_re(r, mcs.overhead_fraction))
        .count()
}

/// Transport block payload bits per subframe per stream. With the default
/// table and numerologies this is exact (no rounding loss), which makes
/// BLER-free throughput equal the peak rate bit for bit.
pub fn transport_block_bits(mcs: &McsEntry, num: &Numerology) -> usize {
    let coded = data_res_per_subframe(mcs, num) * mcs.bits_per_symbol();
    (coded as f64 * mcs.code_rate).round() as usize
}

/// Maximum theoretical throughput of an MCS in Mbps, zero BLER.
pub fn peak_throughput_mbps(mcs: &McsEntry, num: &Numerology, n_streams: usize) -> f64 {
    let bits = transport_block_bits(mcs, num) * n_streams;
    bits as f64 / num.subframe_duration_s / 1e6
}

/// True for resource element `r` (in symbol-major order) carrying payload
/// rather than control/reference overhead. The pattern spreads overhead
/// uniformly over subcarriers and symbols; with the default 0.25 overhead
/// every fourth element is reserved.
pub fn is_data_re(r: usize, overhead_fraction: f64) -> bool {
    if overhead_fraction <= 0.0 {
        return true;
    }
    let period = (1.0 / overhead_fraction).round() as usize;
    r % period != 0
}

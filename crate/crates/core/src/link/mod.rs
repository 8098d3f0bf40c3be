//! End-to-end Monte-Carlo link engine.
//!
//! Composes transmitter, wireless fader, copper section, receiver noise and
//! MMSE detection per subframe, measuring BLER and throughput. Two modes:
//! `Explicit` runs the full encode/decode chain per transport block;
//! `Abstracted` collapses per-subcarrier SINRs through a calibrated EESM
//! and draws block outcomes from an AWGN reference table, for wide sweeps.
//!
//! Subframes are independent work items: every random stream is keyed by
//! (seed, domain, subframe) counters, so results are bit-identical for any
//! worker count.

pub mod bler_ref;
pub mod calibration;
pub mod eesm;
pub mod mmse;

pub use bler_ref::{build_bler_reference, build_bler_reference_auto, BlerRefTable};
pub use calibration::{collect_calibration_realizations, simulate_profile_bler};
pub use eesm::{calibrate_beta, eesm_effective_sinr, CalibrationRealization};
pub use mmse::{per_subcarrier_sinr, per_subcarrier_sinr_scalar, MmseEqualizer};

use crate::cable::{self, CableError, CableSpec};
use crate::channel::{ChannelModel, ChannelSampler};
use crate::cmat::{C64, Mat2};
use crate::frontend::{self, FrontendError, FrontendSpec, Sf2sfPlan};
use crate::par;
use crate::phy::{
    self, codec, numerology_for_bw, CodecSpec, McsEntry, McsTable, Numerology, PhyError,
};
use crate::rng::{self, domain};
use crate::{db_to_lin, lin_to_db, THERMAL_NOISE_DBM_HZ};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("plan failed validation:\n{0}")]
    InvalidPlan(String),
    #[error("link engine supports 1 or 2 RF ports, plan has {0}")]
    UnsupportedPortCount(usize),
    #[error("config mode is {config:?} but {called} was invoked")]
    ModeMismatch { config: LinkMode, called: &'static str },
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error(transparent)]
    Codec(#[from] codec::CodecError),
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Cable(#[from] CableError),
    #[error("effective SINR requested for an empty SINR set")]
    EmptySinrList,
    #[error("stale reference table: built with codec {table_version}, current is {current_version}")]
    StaleTable {
        table_version: String,
        current_version: String,
    },
    #[error("reference table mismatch: {0}")]
    TableMismatch(String),
    #[error("reference table {path}: {reason}")]
    TableIo { path: String, reason: String },
    #[error("beta calibration infeasible: {reason}")]
    CalibrationInfeasible { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkMode {
    Explicit,
    Abstracted,
}

/// Passive equalizer design choice for the converter pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EqualizerSettings {
    pub design_length_m: f64,
    pub band_hz: (f64, f64),
}

impl Default for EqualizerSettings {
    fn default() -> Self {
        EqualizerSettings {
            design_length_m: 50.0,
            band_hz: (10e6, 400e6),
        }
    }
}

/// One experiment point.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkConfig {
    pub plan: Sf2sfPlan,
    pub cable: CableSpec,
    pub frontend: FrontendSpec,
    pub equalizer: EqualizerSettings,
    pub bw_hz: f64,
    pub mcs_index: usize,
    pub mcs_table: McsTable,
    pub channel_model: ChannelModel,
    /// Transmit power per RF port over the occupied bandwidth, dBm.
    pub input_power_dbm_per_bw: f64,
    pub rx_noise_figure_db: f64,
    pub n_subframes: usize,
    pub seed: u64,
    pub mode: LinkMode,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            plan: Sf2sfPlan::two_port_same_if(175e6),
            cable: CableSpec::default(),
            frontend: FrontendSpec::default(),
            equalizer: EqualizerSettings::default(),
            bw_hz: 10e6,
            mcs_index: 11,
            mcs_table: McsTable::default(),
            channel_model: ChannelModel::Static,
            input_power_dbm_per_bw: -20.0,
            rx_noise_figure_db: 7.0,
            n_subframes: 2000,
            seed: 1,
            mode: LinkMode::Explicit,
        }
    }
}

/// Per-subcarrier transmit and noise powers of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub tx_dbm_per_subcarrier: f64,
    pub noise_dbm_per_subcarrier: f64,
}

impl Budget {
    pub fn snr_db(&self) -> f64 {
        self.tx_dbm_per_subcarrier - self.noise_dbm_per_subcarrier
    }
}

/// Splits the per-bandwidth input power evenly over the subcarriers and
/// sets the receiver noise floor to thermal density plus noise figure over
/// one subcarrier spacing.
pub fn per_subcarrier_budget(
    input_power_dbm_per_bw: f64,
    rx_noise_figure_db: f64,
    num: &Numerology,
) -> Budget {
    Budget {
        tx_dbm_per_subcarrier: input_power_dbm_per_bw
            - 10.0 * (num.n_subcarriers() as f64).log10(),
        noise_dbm_per_subcarrier: THERMAL_NOISE_DBM_HZ
            + 10.0 * num.subcarrier_spacing_hz.log10()
            + rx_noise_figure_db,
    }
}

/// Reporting interval of the throughput/BLER series, in subframes (500 ms).
pub const INTERVAL_SUBFRAMES: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalStat {
    pub n_blocks: usize,
    pub n_block_errors: usize,
    pub throughput_mbps: f64,
    pub bler: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkResult {
    pub throughput_mbps: f64,
    pub bler: f64,
    pub mean_post_eq_sinr_db: f64,
    pub peak_mbps: f64,
    /// 500 ms reporting intervals in time order.
    pub intervals: Vec<IntervalStat>,
    pub n_blocks: usize,
    pub n_block_errors: usize,
}

/// Everything derived from a config that the per-subframe workers share.
pub(crate) struct Chain {
    pub num: Numerology,
    pub mcs: McsEntry,
    pub n_streams: usize,
    /// Copper section per subcarrier, scaled by the per-subcarrier transmit
    /// amplitude; single-port plans are embedded in the top-left corner.
    pub k_scaled: Vec<Mat2>,
    pub noise_var_mw: f64,
    pub tb_bits: usize,
    pub n_coded: usize,
    pub codec: CodecSpec,
    pub sampler: ChannelSampler,
}

pub(crate) fn build_chain(config: &LinkConfig) -> Result<Chain, LinkError> {
    let num = numerology_for_bw(config.bw_hz)?;
    let mcs = *config.mcs_table.get(config.mcs_index)?;
    let n_streams = config.plan.n_ports();
    if n_streams == 0 || n_streams > 2 {
        return Err(LinkError::UnsupportedPortCount(n_streams));
    }
    let report = frontend::validate_plan(&config.plan, &config.cable, &config.frontend, config.bw_hz);
    if !report.is_ok() {
        return Err(LinkError::InvalidPlan(report.to_string()));
    }

    let grid = cable::uniform_grid_hz(1e6, config.cable.f_max_hz, 1e6);
    let cable_ch = cable::build_cable_channel(&config.cable, &grid, config.seed)?;
    let eq = frontend::design_passive_equalizer(
        &config.cable,
        config.equalizer.design_length_m,
        config.equalizer.band_hz,
    )?;
    let k = frontend::compose_copper_section(&config.plan, &cable_ch, &eq, &config.frontend, &num)?;

    let budget = per_subcarrier_budget(config.input_power_dbm_per_bw, config.rx_noise_figure_db, &num);
    let amp = db_to_lin(budget.tx_dbm_per_subcarrier).sqrt();
    let noise_var_mw = db_to_lin(budget.noise_dbm_per_subcarrier);

    let zero = C64::new(0.0, 0.0);
    let k_scaled: Vec<Mat2> = k
        .iter()
        .map(|m| {
            let full = if m.order() == 2 {
                Mat2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
            } else {
                Mat2::new(m[(0, 0)], zero, zero, zero)
            };
            full.scale(amp)
        })
        .collect();

    let tb_bits = phy::transport_block_bits(&mcs, &num);
    let n_coded = phy::data_res_per_subframe(&mcs, &num) * mcs.bits_per_symbol();
    let sampler = ChannelSampler::new(config.channel_model, &num, config.seed);

    Ok(Chain {
        num,
        mcs,
        n_streams,
        k_scaled,
        noise_var_mw,
        tb_bits,
        n_coded,
        codec: CodecSpec::default(),
        sampler,
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct SubframeStats {
    n_blocks: usize,
    n_block_errors: usize,
    sinr_db_sum: f64,
    sinr_count: usize,
}

fn assemble_result(
    chain: &Chain,
    config: &LinkConfig,
    per_subframe: Vec<SubframeStats>,
) -> LinkResult {
    let mut intervals = Vec::new();
    let mut totals = SubframeStats::default();
    for group in per_subframe.chunks(INTERVAL_SUBFRAMES) {
        let blocks: usize = group.iter().map(|s| s.n_blocks).sum();
        let errors: usize = group.iter().map(|s| s.n_block_errors).sum();
        let elapsed_s = group.len() as f64 * chain.num.subframe_duration_s;
        intervals.push(IntervalStat {
            n_blocks: blocks,
            n_block_errors: errors,
            throughput_mbps: (blocks - errors) as f64 * chain.tb_bits as f64 / elapsed_s / 1e6,
            bler: if blocks > 0 {
                errors as f64 / blocks as f64
            } else {
                0.0
            },
        });
        for s in group {
            totals.n_blocks += s.n_blocks;
            totals.n_block_errors += s.n_block_errors;
            totals.sinr_db_sum += s.sinr_db_sum;
            totals.sinr_count += s.sinr_count;
        }
    }
    let elapsed_s = config.n_subframes as f64 * chain.num.subframe_duration_s;
    let ok_blocks = totals.n_blocks - totals.n_block_errors;
    LinkResult {
        throughput_mbps: ok_blocks as f64 * chain.tb_bits as f64 / elapsed_s / 1e6,
        bler: if totals.n_blocks > 0 {
            totals.n_block_errors as f64 / totals.n_blocks as f64
        } else {
            0.0
        },
        mean_post_eq_sinr_db: if totals.sinr_count > 0 {
            totals.sinr_db_sum / totals.sinr_count as f64
        } else {
            f64::NAN
        },
        peak_mbps: phy::peak_throughput_mbps(&chain.mcs, &chain.num, chain.n_streams),
        intervals,
        n_blocks: totals.n_blocks,
        n_block_errors: totals.n_block_errors,
    }
}

#[inline]
fn clamped_db(sinr: f64) -> f64 {
    lin_to_db(sinr.max(1e-30))
}

/// Full explicit simulation: encode, traverse fader and copper, add noise,
/// MMSE-equalize, soft-demodulate, decode, count block errors.
pub fn run_link_explicit(config: &LinkConfig) -> Result<LinkResult, LinkError> {
    if config.mode != LinkMode::Explicit {
        return Err(LinkError::ModeMismatch {
            config: config.mode,
            called: "run_link_explicit",
        });
    }
    let chain = build_chain(config)?;
    let n_sc = chain.num.n_subcarriers();
    let n_sym = chain.num.symbols_per_subframe;
    let overhead = chain.mcs.overhead_fraction;

    // Static channel: equalizers depend only on k; precompute once.
    let static_eq: Option<Vec<MmseEqualizer>> = chain.sampler.is_static().then(|| {
        chain
            .k_scaled
            .iter()
            .map(|a| MmseEqualizer::new(a, chain.noise_var_mw))
            .collect()
    });

    let per_subframe: Vec<SubframeStats> = par::map_indexed(config.n_subframes, |t| {
        let t64 = t as u64;
        // Per-stream transport blocks.
        let mut symbols = Vec::with_capacity(chain.n_streams);
        let mut payloads = Vec::with_capacity(chain.n_streams);
        for s in 0..chain.n_streams {
            let mut prng = rng::stream_rng(config.seed, domain::PAYLOAD, &[t64, s as u64]);
            let bits = rng::random_bits(&mut prng, chain.tb_bits);
            let coded = codec::encode_block(&bits, &chain.codec, chain.n_coded);
            let syms = phy::modulate(&coded, chain.mcs.modulation).expect("aligned bits");
            payloads.push(bits);
            symbols.push(syms);
        }

        let mut noise_rng = rng::stream_rng(config.seed, domain::NOISE, &[t64]);
        let mut llrs: Vec<Vec<f64>> = (0..chain.n_streams)
            .map(|_| Vec::with_capacity(chain.n_coded))
            .collect();
        let mut stats = SubframeStats::default();
        let mut d = 0usize;
        let noise_amp = chain.noise_var_mw.sqrt();
        let zero = C64::new(0.0, 0.0);

        for sym in 0..n_sym {
            let gains = (!chain.sampler.is_static())
                .then(|| chain.sampler.tap_gains(chain.sampler.symbol_time_s(t, sym)));
            for k in 0..n_sc {
                let r = sym * n_sc + k;
                if !phy::is_data_re(r, overhead) {
                    continue;
                }
                let x = [
                    symbols[0][d],
                    if chain.n_streams == 2 { symbols[1][d] } else { zero },
                ];
                let (a, eq);
                let eq_ref = match (&static_eq, &gains) {
                    (Some(pre), _) => {
                        a = chain.k_scaled[k];
                        &pre[k]
                    }
                    (None, Some(g)) => {
                        let h = chain.sampler.matrix(g, k);
                        a = chain.k_scaled[k].mul(&h);
                        eq = MmseEqualizer::new(&a, chain.noise_var_mw);
                        &eq
                    }
                    (None, None) => unreachable!("non-static sampler always yields gains"),
                };
                let (n0r, n0i) = rng::complex_gaussian(&mut noise_rng);
                let (n1r, n1i) = rng::complex_gaussian(&mut noise_rng);
                let tx = a.mul_vec(x);
                let y = [
                    tx[0] + C64::new(n0r, n0i) * noise_amp,
                    tx[1] + C64::new(n1r, n1i) * noise_amp,
                ];
                let xh = eq_ref.equalize(y);
                for (s, llr_s) in llrs.iter_mut().enumerate() {
                    let sinr = eq_ref.sinr[s];
                    phy::modulation::demod_symbol(
                        xh[s],
                        chain.mcs.modulation,
                        1.0 / sinr.max(1e-30),
                        llr_s,
                    );
                    stats.sinr_db_sum += clamped_db(sinr);
                    stats.sinr_count += 1;
                }
                d += 1;
            }
        }

        for s in 0..chain.n_streams {
            let (decoded, crc_ok) =
                codec::decode_block(&llrs[s], &chain.codec, chain.tb_bits, chain.n_coded)
                    .expect("length fixed by chain");
            stats.n_blocks += 1;
            if !(crc_ok && decoded == payloads[s]) {
                stats.n_block_errors += 1;
            }
        }
        stats
    });

    Ok(assemble_result(&chain, config, per_subframe))
}

/// Checks a reference table against the chain it is about to abstract.
fn check_table(chain: &Chain, config: &LinkConfig, table: &BlerRefTable) -> Result<(), LinkError> {
    if table.codec_version != phy::CODEC_VERSION {
        return Err(LinkError::StaleTable {
            table_version: table.codec_version.clone(),
            current_version: phy::CODEC_VERSION.to_string(),
        });
    }
    if table.mcs_index != config.mcs_index
        || (table.bw_hz - config.bw_hz).abs() > 1.0
        || table.tb_bits != chain.tb_bits
    {
        return Err(LinkError::TableMismatch(format!(
            "table is (mcs {}, bw {} Hz, tb {}), config needs (mcs {}, bw {} Hz, tb {})",
            table.mcs_index, table.bw_hz, table.tb_bits, config.mcs_index, config.bw_hz, chain.tb_bits
        )));
    }
    Ok(())
}

/// Fast abstracted mode: per-subcarrier post-MMSE SINRs are collapsed by
/// EESM with the calibrated `beta`, BLER is interpolated from the AWGN
/// reference table, and block outcomes are drawn from the seeded stream.
/// The channel is sampled once per subframe (mid-subframe symbol), which is
/// exact for the low Doppler rates this fader models.
pub fn run_link_abstracted(
    config: &LinkConfig,
    table: &BlerRefTable,
    beta: f64,
) -> Result<LinkResult, LinkError> {
    if config.mode != LinkMode::Abstracted {
        return Err(LinkError::ModeMismatch {
            config: config.mode,
            called: "run_link_abstracted",
        });
    }
    let chain = build_chain(config)?;
    check_table(&chain, config, table)?;
    let n_sc = chain.num.n_subcarriers();
    let mid_symbol = chain.num.symbols_per_subframe / 2;

    // Collapses one subframe's per-subcarrier SINR field into per-stream
    // block error probabilities plus the SINR statistics.
    let collapse = |sinr_by_stream: &[Vec<f64>]| -> ([f64; 2], f64, usize) {
        let mut per_stream = [0.0f64; 2];
        let mut sinr_db_sum = 0.0;
        let mut count = 0;
        for (s, sinrs) in sinr_by_stream.iter().enumerate() {
            sinr_db_sum += sinrs.iter().map(|&x| clamped_db(x)).sum::<f64>();
            count += sinrs.len();
            let eff = eesm::eesm_effective_sinr(sinrs, beta).expect("n_sc > 0");
            per_stream[s] = table.bler_at_snr_db(clamped_db(eff));
        }
        (per_stream, sinr_db_sum, count)
    };

    // Static channel: SINRs are time-invariant; compute the BLER once.
    let static_point: Option<([f64; 2], f64, usize)> = chain.sampler.is_static().then(|| {
        let sinr_by_stream: Vec<Vec<f64>> = (0..chain.n_streams)
            .map(|s| {
                (0..n_sc)
                    .map(|k| mmse::per_subcarrier_sinr(&chain.k_scaled[k], chain.noise_var_mw)[s])
                    .collect()
            })
            .collect();
        collapse(&sinr_by_stream)
    });

    let per_subframe: Vec<SubframeStats> = par::map_indexed(config.n_subframes, |t| {
        let mut stats = SubframeStats::default();
        let bler_per_stream: [f64; 2];
        match &static_point {
            Some((per_stream, sinr_db_sum, count)) => {
                bler_per_stream = *per_stream;
                stats.sinr_db_sum = *sinr_db_sum;
                stats.sinr_count = *count;
            }
            None => {
                let gains = chain
                    .sampler
                    .tap_gains(chain.sampler.symbol_time_s(t, mid_symbol));
                let mut sinr_by_stream: Vec<Vec<f64>> =
                    vec![vec![0.0f64; n_sc]; chain.n_streams];
                for k in 0..n_sc {
                    let h = chain.sampler.matrix(&gains, k);
                    let a = chain.k_scaled[k].mul(&h);
                    let pair = mmse::per_subcarrier_sinr(&a, chain.noise_var_mw);
                    for (s, sinrs) in sinr_by_stream.iter_mut().enumerate() {
                        sinrs[k] = pair[s];
                    }
                }
                let (per_stream, sinr_db_sum, count) = collapse(&sinr_by_stream);
                bler_per_stream = per_stream;
                stats.sinr_db_sum = sinr_db_sum;
                stats.sinr_count = count;
            }
        }
        let mut draw = rng::stream_rng(config.seed, domain::BLOCK_DRAW, &[t as u64]);
        for s in 0..chain.n_streams {
            let u: f64 = draw.gen();
            stats.n_blocks += 1;
            if u < bler_per_stream[s] {
                stats.n_block_errors += 1;
            }
        }
        stats
    });

    Ok(assemble_result(&chain, config, per_subframe))
}

#[cfg(test)]
mod tests;

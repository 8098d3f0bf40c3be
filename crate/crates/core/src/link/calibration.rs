//! Generation of calibration material for the EESM abstraction: frequency-
//! selective SINR profiles from the fading model plus their explicitly
//! simulated BLER.

use super::bler_ref::BlerRefTable;
use super::eesm::CalibrationRealization;
use super::{mmse, LinkError};
use crate::channel::{ChannelModel, ChannelSampler, CorrelationLevel};
use crate::cmat::Mat2;
use crate::par;
use crate::phy::{
    self, codec, modulation, numerology_for_bw, CodecSpec, McsTable,
};
use crate::rng::{self, domain};
use rand::Rng;

/// Explicit BLER of one per-subcarrier SINR profile: every data resource
/// element of subcarrier `k` sees an AWGN channel at `sinrs_per_k[k]`,
/// which is exactly the post-MMSE view of the full chain.
pub fn simulate_profile_bler(
    sinrs_per_k: &[f64],
    mcs_index: usize,
    table: &McsTable,
    bw_hz: f64,
    n_blocks: usize,
    seed: u64,
) -> Result<f64, LinkError> {
    let mcs = *table.get(mcs_index)?;
    let num = numerology_for_bw(bw_hz)?;
    let n_sc = num.n_subcarriers();
    assert_eq!(sinrs_per_k.len(), n_sc, "one SINR per subcarrier");
    let tb_bits = phy::transport_block_bits(&mcs, &num);
    let n_coded = phy::data_res_per_subframe(&mcs, &num) * mcs.bits_per_symbol();
    let codec_spec = CodecSpec::default();

    let errors: usize = par::map_indexed(n_blocks, |blk| {
        let blk64 = blk as u64;
        let mut prng = rng::stream_rng(seed, domain::PAYLOAD, &[blk64]);
        let bits = rng::random_bits(&mut prng, tb_bits);
        let coded = codec::encode_block(&bits, &codec_spec, n_coded);
        let syms = phy::modulate(&coded, mcs.modulation).expect("aligned");
        let mut nrng = rng::stream_rng(seed, domain::NOISE, &[blk64]);
        let mut llrs = Vec::with_capacity(n_coded);
        let mut d = 0usize;
        for sym in 0..num.symbols_per_subframe {
            for (k, &sinr) in sinrs_per_k.iter().enumerate() {
                let r = sym * n_sc + k;
                if !phy::is_data_re(r, mcs.overhead_fraction) {
                    continue;
                }
                let nv = 1.0 / sinr.max(1e-30);
                let (re, im) = rng::complex_gaussian(&mut nrng);
                let y = syms[d] + crate::cmat::C64::new(re, im) * nv.sqrt();
                modulation::demod_symbol(y, mcs.modulation, nv, &mut llrs);
                d += 1;
            }
        }
        let (decoded, crc_ok) =
            codec::decode_block(&llrs, &codec_spec, tb_bits, n_coded).expect("length fixed");
        usize::from(!(crc_ok && decoded == bits))
    })
    .into_iter()
    .sum();
    Ok(errors as f64 / n_blocks as f64)
}

/// SNR window (dB) in which `table` transitions from near-certain failure
/// to near-certain success.
fn waterfall_window(table: &BlerRefTable) -> (f64, f64) {
    let grid = table.snr_grid_db();
    let mut lo = grid[0];
    let mut hi = *grid.last().unwrap();
    for &snr in grid {
        if table.bler_at_snr_db(snr) > 0.98 {
            lo = snr;
        }
        if table.bler_at_snr_db(snr) > 0.02 {
            hi = snr;
        }
    }
    (lo, hi)
}

/// Draws fading channels around the waterfall of `ref_table` and measures
/// each stream's BLER explicitly. Returns two realizations (one per MIMO
/// stream) per channel draw.
pub fn collect_calibration_realizations(
    mcs_index: usize,
    mcs_table: &McsTable,
    bw_hz: f64,
    correlation: CorrelationLevel,
    n_channels: usize,
    blocks_per_realization: usize,
    ref_table: &BlerRefTable,
    seed: u64,
) -> Result<Vec<CalibrationRealization>, LinkError> {
    let num = numerology_for_bw(bw_hz)?;
    let n_sc = num.n_subcarriers();
    let (wf_lo, wf_hi) = waterfall_window(ref_table);
    let model = ChannelModel::epa5(correlation);

    let mut out = Vec::with_capacity(2 * n_channels);
    for ch in 0..n_channels {
        let ch_seed = rng::derive_seed(seed, domain::FADER, &[ch as u64]);
        let sampler = ChannelSampler::new(model, &num, ch_seed);
        let mut srng = rng::stream_rng(seed, domain::BLOCK_DRAW, &[ch as u64]);
        // Fading pushes the effective SNR below the mean; bias the draw up.
        let mean_snr_db = wf_lo - 1.0 + srng.gen::<f64>() * (wf_hi - wf_lo + 8.0);
        let amp = crate::db_to_lin(mean_snr_db).sqrt();
        let t = srng.gen::<f64>() * 0.5;
        let gains = sampler.tap_gains(t);
        let base = Mat2::identity().scale(amp);
        let mut sinr_by_stream = [vec![0.0f64; n_sc], vec![0.0f64; n_sc]];
        for k in 0..n_sc {
            let h = sampler.matrix(&gains, k);
            let a = base.mul(&h);
            let pair = mmse::per_subcarrier_sinr(&a, 1.0);
            sinr_by_stream[0][k] = pair[0];
            sinr_by_stream[1][k] = pair[1];
        }
        for sinrs in sinr_by_stream {
            let bler = simulate_profile_bler(
                &sinrs,
                mcs_index,
                mcs_table,
                bw_hz,
                blocks_per_realization,
                rng::derive_seed(seed, domain::PAYLOAD, &[ch as u64, out.len() as u64]),
            )?;
            out.push(CalibrationRealization {
                sinrs,
                simulated_bler: bler,
            });
        }
    }
    Ok(out)
}

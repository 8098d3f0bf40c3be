//! AWGN BLER reference tables for the link abstraction.
//!
//! A table holds Monte-Carlo BLER of one (MCS, bandwidth) pair on an AWGN
//! channel, simulated with the production codec and persisted as a plain
//! text file tagged with the codec version. Prediction uses the monotone
//! (isotonic) envelope of the raw points with log-linear interpolation.

use super::LinkError;
use crate::par;
use crate::phy::{
    self, codec, demodulate_soft, modulate, numerology_for_bw, CodecSpec, McsTable, CODEC_VERSION,
};
use crate::rng::{self, domain};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct BlerRefTable {
    pub mcs_index: usize,
    pub bw_hz: f64,
    pub tb_bits: usize,
    pub n_coded: usize,
    pub n_blocks: usize,
    pub codec_version: String,
    snr_grid_db: Vec<f64>,
    bler_raw: Vec<f64>,
    /// Non-increasing fit of `bler_raw` used for prediction.
    bler_fit: Vec<f64>,
}

impl BlerRefTable {
    fn new(
        mcs_index: usize,
        bw_hz: f64,
        tb_bits: usize,
        n_coded: usize,
        n_blocks: usize,
        codec_version: String,
        snr_grid_db: Vec<f64>,
        bler_raw: Vec<f64>,
    ) -> Self {
        let bler_fit = isotonic_non_increasing(&bler_raw);
        BlerRefTable {
            mcs_index,
            bw_hz,
            tb_bits,
            n_coded,
            n_blocks,
            codec_version,
            snr_grid_db,
            bler_raw,
            bler_fit,
        }
    }

    pub fn snr_grid_db(&self) -> &[f64] {
        &self.snr_grid_db
    }

    pub fn bler_raw(&self) -> &[f64] {
        &self.bler_raw
    }

    /// Predicted BLER at an arbitrary SNR: log-linear interpolation on the
    /// monotone envelope, clamped to the end values outside the grid (the
    /// auto-built grid starts in the certain-failure region and ends at
    /// zero observed errors).
    pub fn bler_at_snr_db(&self, snr_db: f64) -> f64 {
        let grid = &self.snr_grid_db;
        let floor = 0.5 / self.n_blocks as f64;
        if snr_db <= grid[0] {
            return self.bler_fit[0];
        }
        if snr_db >= *grid.last().unwrap() {
            return *self.bler_fit.last().unwrap();
        }
        let idx = grid.partition_point(|&g| g < snr_db);
        let (a, b) = (idx - 1, idx);
        let w = (snr_db - grid[a]) / (grid[b] - grid[a]);
        let (pa, pb) = (self.bler_fit[a], self.bler_fit[b]);
        if pa <= 0.0 {
            return 0.0;
        }
        let la = pa.max(floor).ln();
        let lb = pb.max(floor).ln();
        let p = (la + w * (lb - la)).exp();
        // an all-but-zero right endpoint should still reach zero
        if pb <= 0.0 && p <= floor {
            0.0
        } else {
            p.min(1.0)
        }
    }

    /// Raw points must be non-increasing within Monte-Carlo noise; returns
    /// the largest upward violation in units of its 1-sigma noise.
    pub fn worst_inversion_sigma(&self) -> f64 {
        let n = self.n_blocks as f64;
        let mut worst: f64 = 0.0;
        for w in self.bler_raw.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b > a {
                let var = (a * (1.0 - a) + b * (1.0 - b)).max(1.0 / n) / n;
                worst = worst.max((b - a) / var.sqrt());
            }
        }
        worst
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "# bler reference table v1")?;
        writeln!(f, "codec {}", self.codec_version)?;
        writeln!(f, "mcs {}", self.mcs_index)?;
        writeln!(f, "bw_hz {}", self.bw_hz as u64)?;
        writeln!(f, "tb_bits {}", self.tb_bits)?;
        writeln!(f, "n_coded {}", self.n_coded)?;
        writeln!(f, "n_blocks {}", self.n_blocks)?;
        writeln!(f, "columns snr_db bler")?;
        for (snr, bler) in self.snr_grid_db.iter().zip(&self.bler_raw) {
            writeln!(f, "{snr:.4} {bler:.8}")?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, LinkError> {
        let text = std::fs::read_to_string(path).map_err(|e| LinkError::TableIo {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let mut codec_version = String::new();
        let (mut mcs, mut bw, mut tb, mut nc, mut nb) = (None, None, None, None, None);
        let mut grid = Vec::new();
        let mut bler = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("columns") {
                continue;
            }
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap_or("");
            let rest = parts.next().unwrap_or("");
            match head {
                "codec" => codec_version = rest.to_string(),
                "mcs" => mcs = rest.parse::<usize>().ok(),
                "bw_hz" => bw = rest.parse::<f64>().ok(),
                "tb_bits" => tb = rest.parse::<usize>().ok(),
                "n_coded" => nc = rest.parse::<usize>().ok(),
                "n_blocks" => nb = rest.parse::<usize>().ok(),
                num => {
                    let snr = num.parse::<f64>().map_err(|_| LinkError::TableIo {
                        path: path.display().to_string(),
                        reason: format!("bad row: {line}"),
                    })?;
                    let p = rest.parse::<f64>().map_err(|_| LinkError::TableIo {
                        path: path.display().to_string(),
                        reason: format!("bad row: {line}"),
                    })?;
                    grid.push(snr);
                    bler.push(p);
                }
            }
        }
        let missing = || LinkError::TableIo {
            path: path.display().to_string(),
            reason: "missing header field".into(),
        };
        let table = BlerRefTable::new(
            mcs.ok_or_else(missing)?,
            bw.ok_or_else(missing)?,
            tb.ok_or_else(missing)?,
            nc.ok_or_else(missing)?,
            nb.ok_or_else(missing)?,
            codec_version,
            grid,
            bler,
        );
        if table.codec_version != CODEC_VERSION {
            return Err(LinkError::StaleTable {
                table_version: table.codec_version,
                current_version: CODEC_VERSION.to_string(),
            });
        }
        if table.snr_grid_db.is_empty() {
            return Err(LinkError::TableIo {
                path: path.display().to_string(),
                reason: "empty grid".into(),
            });
        }
        Ok(table)
    }

    /// Conventional table file name for one (MCS, bandwidth) pair.
    pub fn file_name(mcs_index: usize, bw_hz: f64) -> String {
        format!("mcs{:02}_bw{}.tsv", mcs_index, (bw_hz / 1e6) as u64)
    }

    /// A perfect analytic waterfall used by unit tests that need a table
    /// without running the Monte Carlo.
    pub fn synthetic_for_tests() -> Self {
        let grid: Vec<f64> = (0..61).map(|i| -5.0 + 0.25 * i as f64).collect();
        let bler: Vec<f64> = grid
            .iter()
            .map(|&s| 1.0 / (1.0 + ((s - 3.0) * 3.0).exp()))
            .collect();
        BlerRefTable::new(
            7,
            5e6,
            3276,
            6300,
            100_000,
            CODEC_VERSION.to_string(),
            grid,
            bler,
        )
    }
}

/// Pool-adjacent-violators fit constrained to be non-increasing.
fn isotonic_non_increasing(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut level: Vec<f64> = Vec::with_capacity(n);
    let mut weight: Vec<f64> = Vec::with_capacity(n);
    for &v in y {
        level.push(v);
        weight.push(1.0);
        while level.len() >= 2 {
            let m = level.len();
            if level[m - 1] > level[m - 2] {
                let w = weight[m - 1] + weight[m - 2];
                let merged = (level[m - 1] * weight[m - 1] + level[m - 2] * weight[m - 2]) / w;
                level.truncate(m - 2);
                weight.truncate(m - 2);
                level.push(merged);
                weight.push(w);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    for (lv, w) in level.iter().zip(&weight) {
        for _ in 0..(*w as usize) {
            out.push(*lv);
        }
    }
    out
}

/// Simulates one AWGN transport block at `snr_lin` (symbol-energy SNR).
/// Returns true on block error.
pub fn awgn_block_error(
    mcs_index: usize,
    table: &McsTable,
    bw_hz: f64,
    snr_lin: f64,
    codec_spec: &CodecSpec,
    seed: u64,
    block_idx: u64,
) -> bool {
    let mcs = table.get(mcs_index).expect("valid mcs");
    let num = numerology_for_bw(bw_hz).expect("valid bw");
    let tb_bits = phy::transport_block_bits(mcs, &num);
    let n_coded = phy::data_res_per_subframe(mcs, &num) * mcs.bits_per_symbol();
    let noise_var = 1.0 / snr_lin;

    let mut prng = rng::stream_rng(seed, domain::AWGN_REF, &[mcs_index as u64, block_idx, 0]);
    let bits = rng::random_bits(&mut prng, tb_bits);
    let coded = codec::encode_block(&bits, codec_spec, n_coded);
    let syms = modulate(&coded, mcs.modulation).expect("aligned");
    let mut nrng = rng::stream_rng(seed, domain::AWGN_REF, &[mcs_index as u64, block_idx, 1]);
    let scale = noise_var.sqrt();
    let noisy: Vec<_> = syms
        .iter()
        .map(|s| {
            let (re, im) = rng::complex_gaussian(&mut nrng);
            s + crate::cmat::C64::new(re, im) * scale
        })
        .collect();
    let llrs = demodulate_soft(&noisy, mcs.modulation, noise_var).expect("aligned");
    let (decoded, crc_ok) = codec::decode_block(&llrs, codec_spec, tb_bits, n_coded).expect("len");
    !(crc_ok && decoded == bits)
}

/// Monte-Carlo AWGN reference for one MCS over an SNR grid.
pub fn build_bler_reference(
    mcs_index: usize,
    table: &McsTable,
    bw_hz: f64,
    snr_grid_db: &[f64],
    n_blocks: usize,
    seed: u64,
) -> Result<BlerRefTable, LinkError> {
    let mcs = table.get(mcs_index).map_err(LinkError::Phy)?;
    let num = numerology_for_bw(bw_hz).map_err(LinkError::Phy)?;
    let tb_bits = phy::transport_block_bits(mcs, &num);
    let n_coded = phy::data_res_per_subframe(mcs, &num) * mcs.bits_per_symbol();
    let codec_spec = CodecSpec::default();

    let mut bler = Vec::with_capacity(snr_grid_db.len());
    for (pt, &snr_db) in snr_grid_db.iter().enumerate() {
        let snr_lin = crate::db_to_lin(snr_db);
        let errors: usize = par::map_indexed(n_blocks, |blk| {
            usize::from(awgn_block_error(
                mcs_index,
                table,
                bw_hz,
                snr_lin,
                &codec_spec,
                rng::derive_seed(seed, domain::AWGN_REF, &[pt as u64]),
                blk as u64,
            ))
        })
        .into_iter()
        .sum();
        bler.push(errors as f64 / n_blocks as f64);
    }
    Ok(BlerRefTable::new(
        mcs_index,
        bw_hz,
        tb_bits,
        n_coded,
        n_blocks,
        CODEC_VERSION.to_string(),
        snr_grid_db.to_vec(),
        bler,
    ))
}

/// Locates the waterfall by coarse probing, then builds a fine-grained
/// reference around it. Grid step 0.25 dB, padded half a dB on both sides.
pub fn build_bler_reference_auto(
    mcs_index: usize,
    table: &McsTable,
    bw_hz: f64,
    n_blocks: usize,
    seed: u64,
) -> Result<BlerRefTable, LinkError> {
    let probe_blocks = (n_blocks / 10).clamp(30, 200);
    let mut lo = None;
    let mut hi = None;
    let mut snr = -14.0f64;
    while snr <= 26.0 {
        let t = build_bler_reference(mcs_index, table, bw_hz, &[snr], probe_blocks, seed)?;
        let p = t.bler_raw()[0];
        if p > 0.999 {
            lo = Some(snr);
        }
        if p < 0.001 && hi.is_none() && lo.is_some() {
            hi = Some(snr);
            break;
        }
        snr += 1.0;
    }
    let lo = lo.unwrap_or(-14.0);
    let hi = hi.unwrap_or(26.0);
    let mut grid = Vec::new();
    let mut s = lo - 0.5;
    while s <= hi + 0.5 + 1e-9 {
        grid.push(s);
        s += 0.25;
    }
    build_bler_reference(mcs_index, table, bw_hz, &grid, n_blocks, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isotonic_fit_is_non_increasing_and_preserves_monotone_input() {
        let y = vec![1.0, 0.9, 0.95, 0.4, 0.45, 0.1, 0.0];
        let fit = isotonic_non_increasing(&y);
        assert_eq!(fit.len(), y.len());
        for w in fit.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        let already = vec![0.9, 0.5, 0.2, 0.0];
        assert_eq!(isotonic_non_increasing(&already), already);
    }

    #[test]
    fn interpolation_behaviour() {
        let t = BlerRefTable::synthetic_for_tests();
        // below grid -> certain failure region
        assert!(t.bler_at_snr_db(-20.0) >= t.bler_raw()[0]);
        // above grid -> last value (effectively zero)
        assert!(t.bler_at_snr_db(30.0) <= 1e-6);
        // interior interpolation is bracketed and monotone
        let a = t.bler_at_snr_db(2.9);
        let b = t.bler_at_snr_db(3.1);
        assert!(a > b);
        assert!(a <= 1.0 && b >= 0.0);
        // exact midpoint of the logistic is 0.5 at 3.0 dB
        assert!((t.bler_at_snr_db(3.0) - 0.5).abs() < 0.02);
    }

    #[test]
    fn tiny_reference_extremes() {
        // High SNR -> no errors; very low SNR -> (near) certain errors.
        let table = McsTable::default();
        let t = build_bler_reference(0, &table, 5e6, &[-10.0, 25.0], 40, 7).unwrap();
        assert!(t.bler_raw()[0] >= 0.99);
        assert_eq!(t.bler_raw()[1], 0.0);
    }

    #[test]
    fn save_load_round_trip_and_stale_detection() {
        let t = BlerRefTable::synthetic_for_tests();
        let dir = std::env::temp_dir().join("roclink_test_tables");
        let path = dir.join(BlerRefTable::file_name(t.mcs_index, t.bw_hz));
        t.save(&path).unwrap();
        let loaded = BlerRefTable::load(&path).unwrap();
        assert_eq!(loaded.mcs_index, t.mcs_index);
        assert_eq!(loaded.snr_grid_db().len(), t.snr_grid_db().len());
        assert!((loaded.bler_at_snr_db(3.0) - t.bler_at_snr_db(3.0)).abs() < 1e-6);

        // corrupt the codec tag -> stale-table error
        let text = std::fs::read_to_string(&path).unwrap();
        let stale = text.replace(CODEC_VERSION, "cc7-OLD-v0");
        std::fs::write(&path, stale).unwrap();
        assert!(matches!(
            BlerRefTable::load(&path),
            Err(LinkError::StaleTable { .. })
        ));
        let _ = std::fs::remove_dir_all(&dir);
    }
}

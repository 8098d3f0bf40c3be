//! Transport block codec: CRC-16 error detection, a constraint-length-7
//! rate-1/3 convolutional code, and uniform rate matching (puncturing or
//! circular-buffer repetition) to hit the MCS code rate.
//!
//! Decoding is soft-input maximum-likelihood sequence estimation (Viterbi
//! over the 64-state trellis) on combined LLRs, followed by the CRC check.

use thiserror::Error;

/// Version tag persisted with BLER reference tables; bump on any change
/// that moves the BLER curves.
pub const CODEC_VERSION: &str = "cc7-133-171-165-rm1-crc16ccitt-v1";

const K: usize = 7;
const N_STATES: usize = 64;
const N_GEN: usize = 3;
const TAIL_BITS: usize = 6;
const CRC_BITS: usize = 16;
const CRC_POLY: u32 = 0x1021;
const CRC_INIT: u32 = 0xFFFF;
/// LLR quantization ceiling; metrics stay far from i32 overflow.
const LLR_QUANT_MAX: f64 = 2047.0;

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("llr length {got} does not match rate-matched block length {want}")]
    LlrLengthMismatch { got: usize, want: usize },
}

/// Convolutional codec parameters. Generators are the octal taps of the
/// three rate-1/3 polynomials, most significant bit acting on the current
/// input bit.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecSpec {
    pub constraint_length: usize,
    pub generators: [u32; N_GEN],
    pub version: &'static str,
}

impl Default for CodecSpec {
    fn default() -> Self {
        CodecSpec {
            constraint_length: K,
            generators: [0o133, 0o171, 0o165],
            version: CODEC_VERSION,
        }
    }
}

impl CodecSpec {
    /// Mother-code output length for `payload_bits` of payload.
    pub fn mother_bits(&self, payload_bits: usize) -> usize {
        N_GEN * (payload_bits + CRC_BITS + TAIL_BITS)
    }

    /// Uniform keep-mask selecting `n_out` of `n_in` positions (puncturing).
    /// Integer arithmetic; the same mask is used by encoder and decoder.
    pub fn puncture_keep(&self, n_in: usize, n_out: usize, i: usize) -> bool {
        ((i + 1) * n_out) / n_in > (i * n_out) / n_in
    }

    fn expected_outputs(&self) -> [u8; 2 * N_STATES] {
        let mut table = [0u8; 2 * N_STATES];
        for reg in 0..(2 * N_STATES) {
            let mut pattern = 0u8;
            for (g_idx, &g) in self.generators.iter().enumerate() {
                let parity = ((reg as u32) & g).count_ones() & 1;
                pattern |= (parity as u8) << (N_GEN - 1 - g_idx);
            }
            table[reg] = pattern;
        }
        table
    }
}

fn crc16(bits: &[u8]) -> [u8; CRC_BITS] {
    let mut reg = CRC_INIT;
    for &b in bits {
        let fb = ((reg >> 15) & 1) ^ (b as u32);
        reg = (reg << 1) & 0xFFFF;
        if fb == 1 {
            reg ^= CRC_POLY;
        }
    }
    let mut out = [0u8; CRC_BITS];
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = ((reg >> (15 - i)) & 1) as u8;
    }
    out
}

/// Encodes a payload into exactly `n_coded` bits: append CRC-16, add six
/// tail zeros, convolve with the three generators, rate-match.
pub fn encode_block(payload: &[u8], codec: &CodecSpec, n_coded: usize) -> Vec<u8> {
    let crc = crc16(payload);
    let mut stream = Vec::with_capacity(payload.len() + CRC_BITS + TAIL_BITS);
    stream.extend_from_slice(payload);
    stream.extend_from_slice(&crc);
    stream.extend(std::iter::repeat(0u8).take(TAIL_BITS));

    let outputs = codec.expected_outputs();
    let n_mother = N_GEN * stream.len();
    let mut mother = Vec::with_capacity(n_mother);
    let mut state = 0usize;
    for &u in &stream {
        let reg = ((u as usize) << (K - 1)) | state;
        let pattern = outputs[reg];
        for g in 0..N_GEN {
            mother.push((pattern >> (N_GEN - 1 - g)) & 1);
        }
        state = ((u as usize) << (K - 2)) | (state >> 1);
    }

    if n_coded == n_mother {
        mother
    } else if n_coded < n_mother {
        (0..n_mother)
            .filter(|&i| codec.puncture_keep(n_mother, n_coded, i))
            .map(|i| mother[i])
            .collect()
    } else {
        (0..n_coded).map(|j| mother[j % n_mother]).collect()
    }
}

/// Soft-decodes `llrs` (one per coded bit, positive favoring bit 0) back to
/// `(payload, crc_ok)`. LLRs of punctured positions are treated as erased;
/// repeated positions are chase-combined. `n_coded` is the rate-matched
/// block length the caller expects; a different LLR count is a usage error.
pub fn decode_block(
    llrs: &[f64],
    codec: &CodecSpec,
    payload_bits: usize,
    n_coded: usize,
) -> Result<(Vec<u8>, bool), CodecError> {
    if llrs.len() != n_coded {
        return Err(CodecError::LlrLengthMismatch {
            got: llrs.len(),
            want: n_coded,
        });
    }
    let n_steps = payload_bits + CRC_BITS + TAIL_BITS;
    let n_mother = N_GEN * n_steps;

    // De-rate-match onto the mother positions.
    let mut mother = vec![0f64; n_mother];
    if n_coded == n_mother {
        mother.copy_from_slice(llrs);
    } else if n_coded < n_mother {
        let mut j = 0;
        for (i, slot) in mother.iter_mut().enumerate() {
            if codec.puncture_keep(n_mother, n_coded, i) {
                *slot = llrs[j];
                j += 1;
            }
        }
        debug_assert_eq!(j, n_coded);
    } else {
        for (j, &l) in llrs.iter().enumerate() {
            mother[j % n_mother] += l;
        }
    }

    // Quantize for integer path metrics.
    let max_abs = mother.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let scale = if max_abs > 0.0 {
        LLR_QUANT_MAX / max_abs
    } else {
        1.0
    };
    let q: Vec<i32> = mother
        .iter()
        .map(|&l| (l * scale).round() as i32)
        .collect();

    let outputs = codec.expected_outputs();
    let neg = i32::MIN / 4;
    let mut metric = [neg; N_STATES];
    metric[0] = 0;
    let mut new_metric = [0i32; N_STATES];
    let mut decisions: Vec<u64> = Vec::with_capacity(n_steps);

    for step in 0..n_steps {
        let l0 = q[N_GEN * step];
        let l1 = q[N_GEN * step + 1];
        let l2 = q[N_GEN * step + 2];
        // Correlation metric for each of the 8 expected-output patterns.
        let mut combo = [0i32; 8];
        for (pat, slot) in combo.iter_mut().enumerate() {
            let s0 = if pat & 0b100 == 0 { l0 } else { -l0 };
            let s1 = if pat & 0b010 == 0 { l1 } else { -l1 };
            let s2 = if pat & 0b001 == 0 { l2 } else { -l2 };
            *slot = s0 + s1 + s2;
        }
        let mut dec: u64 = 0;
        for (sp, slot) in new_metric.iter_mut().enumerate() {
            let u = sp >> (K - 2);
            let p0 = (sp & (N_STATES / 2 - 1)) << 1;
            let p1 = p0 | 1;
            let m0 = metric[p0] + combo[outputs[(u << (K - 1)) | p0] as usize];
            let m1 = metric[p1] + combo[outputs[(u << (K - 1)) | p1] as usize];
            if m1 > m0 {
                dec |= 1 << sp;
                *slot = m1;
            } else {
                *slot = m0;
            }
        }
        decisions.push(dec);
        metric = new_metric;
    }

    // Tail forces the encoder back to state 0; trace back from there.
    let mut state = 0usize;
    let mut bits_rev = Vec::with_capacity(n_steps);
    for step in (0..n_steps).rev() {
        bits_rev.push((state >> (K - 2)) as u8);
        let taken = (decisions[step] >> state) & 1;
        state = ((state & (N_STATES / 2 - 1)) << 1) | taken as usize;
    }
    bits_rev.reverse();

    let payload: Vec<u8> = bits_rev[..payload_bits].to_vec();
    let crc_rx = &bits_rev[payload_bits..payload_bits + CRC_BITS];
    let crc_ok = crc16(&payload) == crc_rx;
    Ok((payload, crc_ok))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::modulation::{demodulate_soft, modulate};
    use crate::phy::Modulation;
    use crate::rng::{self, domain};

    fn payload(n: usize, seed: u64) -> Vec<u8> {
        let mut rng = rng::stream_rng(seed, domain::PAYLOAD, &[0]);
        rng::random_bits(&mut rng, n)
    }

    #[test]
    fn noiseless_round_trip_punctured() {
        let codec = CodecSpec::default();
        let b = 756; // MCS 0 at 5 MHz
        let bits = payload(b, 1);
        let coded = encode_block(&bits, &codec, 6300);
        assert_eq!(coded.len(), 6300);
        let llrs: Vec<f64> = coded.iter().map(|&c| if c == 0 { 5.0 } else { -5.0 }).collect();
        let (decoded, ok) = decode_block(&llrs, &codec, b, 6300).unwrap();
        assert!(ok);
        assert_eq!(decoded, bits);
    }

    #[test]
    fn noiseless_round_trip_repeated() {
        // rate below 1/3 exercises the repetition path
        let codec = CodecSpec::default();
        let b = 300;
        let n_coded = 3000; // mother = 3*(300+22) = 966 < 3000
        let bits = payload(b, 2);
        let coded = encode_block(&bits, &codec, n_coded);
        assert_eq!(coded.len(), n_coded);
        let llrs: Vec<f64> = coded.iter().map(|&c| if c == 0 { 1.0 } else { -1.0 }).collect();
        let (decoded, ok) = decode_block(&llrs, &codec, b, n_coded).unwrap();
        assert!(ok);
        assert_eq!(decoded, bits);
    }

    #[test]
    fn all_zero_payload_round_trip() {
        let codec = CodecSpec::default();
        let bits = vec![0u8; 500];
        let coded = encode_block(&bits, &codec, 2000);
        let llrs: Vec<f64> = coded.iter().map(|&c| if c == 0 { 3.0 } else { -3.0 }).collect();
        let (decoded, ok) = decode_block(&llrs, &codec, 500, 2000).unwrap();
        assert!(ok);
        assert!(decoded.iter().all(|&b| b == 0));
    }

    #[test]
    fn high_rate_puncturing_survives_moderate_noise() {
        let codec = CodecSpec::default();
        let b = 1890; // rate 0.75 at QPSK 5 MHz grid scale
        let n_coded = 2520;
        let bits = payload(b, 3);
        let coded = encode_block(&bits, &codec, n_coded);
        // 7 dB Es/N0 on QPSK: comfortably above the rate-3/4 waterfall
        let snr = crate::db_to_lin(7.0);
        let noise_var = 1.0 / snr;
        let syms = modulate(&coded, Modulation::Qpsk).unwrap();
        let mut rng = rng::stream_rng(77, domain::NOISE, &[0]);
        let noisy: Vec<_> = syms
            .iter()
            .map(|s| {
                let (re, im) = rng::complex_gaussian(&mut rng);
                s + crate::cmat::C64::new(re, im) * noise_var.sqrt()
            })
            .collect();
        let llrs = demodulate_soft(&noisy, Modulation::Qpsk, noise_var).unwrap();
        let (decoded, ok) = decode_block(&llrs, &codec, b, n_coded).unwrap();
        assert!(ok, "decode failed at 7 dB");
        assert_eq!(decoded, bits);
    }

    #[test]
    fn crc_rejects_at_very_low_snr() {
        // At -10 dB the decoder output is effectively random; the CRC-16
        // false-accept rate must stay at the 2^-16 floor (<= 1% observed).
        let codec = CodecSpec::default();
        let b = 756;
        let n_coded = 6300;
        let noise_var = 1.0 / crate::db_to_lin(-10.0);
        let mut n_ok = 0usize;
        let n_blocks = 1000;
        for blk in 0..n_blocks {
            let mut prng = rng::stream_rng(blk as u64, domain::PAYLOAD, &[9]);
            let bits = rng::random_bits(&mut prng, b);
            let coded = encode_block(&bits, &codec, n_coded);
            let syms = modulate(&coded, Modulation::Qpsk).unwrap();
            let mut nrng = rng::stream_rng(blk as u64, domain::NOISE, &[9]);
            let noisy: Vec<_> = syms
                .iter()
                .map(|s| {
                    let (re, im) = rng::complex_gaussian(&mut nrng);
                    s + crate::cmat::C64::new(re, im) * noise_var.sqrt()
                })
                .collect();
            let llrs = demodulate_soft(&noisy, Modulation::Qpsk, noise_var).unwrap();
            let (_, ok) = decode_block(&llrs, &codec, b, n_coded).unwrap();
            if ok {
                n_ok += 1;
            }
        }
        assert!(n_ok <= 10, "crc_ok rate {n_ok}/1000 at -10 dB");
    }

    #[test]
    fn puncture_mask_keeps_exact_count() {
        let codec = CodecSpec::default();
        for (n_in, n_out) in [(2334, 1008), (6300, 6300), (966, 400), (57_066, 50_400)] {
            let kept = (0..n_in)
                .filter(|&i| codec.puncture_keep(n_in, n_out.min(n_in), i))
                .count();
            assert_eq!(kept, n_out.min(n_in));
        }
    }

    #[test]
    fn llr_length_mismatch_is_error() {
        let codec = CodecSpec::default();
        let llrs = vec![0.5; 100];
        let res = decode_block(&llrs, &codec, 756, 6300);
        assert!(matches!(
            res,
            Err(CodecError::LlrLengthMismatch { got: 100, want: 6300 })
        ));
    }
}

//! Gray-mapped QPSK and 16QAM with max-log soft demodulation.
//!
//! Both constellations have unit average symbol energy. Bit-to-axis
//! convention (matching the 3GPP-style Gray layout):
//! - QPSK: bit 0 selects the I sign, bit 1 the Q sign; 0 maps to +,
//!   so bits `00` give `(1+j)/sqrt(2)`.
//! - 16QAM: bits (b0, b2) select the I level, (b1, b3) the Q level;
//!   b0/b1 are sign bits, b2/b3 pick inner (+-1) vs outer (+-3) levels
//!   scaled by `1/sqrt(10)`.
//!
//! LLR convention: positive LLR means bit 0 is more likely. `noise_var`
//! is the complex noise variance E|n|^2.

use super::{Modulation, PhyError};
use crate::cmat::C64;

const QPSK_AMP: f64 = std::f64::consts::FRAC_1_SQRT_2;
const QAM16_STEP: f64 = 0.316_227_766_016_837_94; // 1/sqrt(10)

/// Maps bits to unit-energy complex symbols.
pub fn modulate(bits: &[u8], modulation: Modulation) -> Result<Vec<C64>, PhyError> {
    let bps = modulation.bits_per_symbol();
    if bits.len() % bps != 0 {
        return Err(PhyError::LengthMismatch {
            n: bits.len(),
            bits_per_symbol: bps,
        });
    }
    let symbols = bits
        .chunks_exact(bps)
        .map(|b| match modulation {
            Modulation::Qpsk => {
                let i = if b[0] == 0 { QPSK_AMP } else { -QPSK_AMP };
                let q = if b[1] == 0 { QPSK_AMP } else { -QPSK_AMP };
                C64::new(i, q)
            }
            Modulation::Qam16 => {
                let li = qam16_level(b[0], b[2]);
                let lq = qam16_level(b[1], b[3]);
                C64::new(li, lq)
            }
        })
        .collect();
    Ok(symbols)
}

#[inline]
fn qam16_level(sign_bit: u8, mag_bit: u8) -> f64 {
    let mag = if mag_bit == 0 { 1.0 } else { 3.0 };
    let sign = if sign_bit == 0 { 1.0 } else { -1.0 };
    sign * mag * QAM16_STEP
}

/// Max-log LLRs for a symbol stream observed in complex AWGN of variance
/// `noise_var`. Output length is `bits_per_symbol * symbols.len()`.
pub fn demodulate_soft(
    symbols: &[C64],
    modulation: Modulation,
    noise_var: f64,
) -> Result<Vec<f64>, PhyError> {
    if !(noise_var > 0.0) {
        return Err(PhyError::BadNoiseVariance(noise_var));
    }
    let mut llrs = Vec::with_capacity(symbols.len() * modulation.bits_per_symbol());
    match modulation {
        Modulation::Qpsk => {
            // Exact max-log for antipodal per-axis levels.
            let scale = 4.0 * QPSK_AMP / noise_var;
            for y in symbols {
                llrs.push(scale * y.re);
                llrs.push(scale * y.im);
            }
        }
        Modulation::Qam16 => {
            for y in symbols {
                let (s0, m0) = qam16_axis_llrs(y.re, noise_var);
                let (s1, m1) = qam16_axis_llrs(y.im, noise_var);
                llrs.push(s0);
                llrs.push(s1);
                llrs.push(m0);
                llrs.push(m1);
            }
        }
    }
    Ok(llrs)
}

/// Max-log LLRs of the sign and magnitude bits for one 16QAM axis.
#[inline]
fn qam16_axis_llrs(y: f64, noise_var: f64) -> (f64, f64) {
    let a = QAM16_STEP;
    let d = |level: f64| (y - level) * (y - level);
    let (d_p1, d_p3, d_m1, d_m3) = (d(a), d(3.0 * a), d(-a), d(-3.0 * a));
    // sign bit: 0 -> positive levels, 1 -> negative levels
    let sign = (d_m1.min(d_m3) - d_p1.min(d_p3)) / noise_var;
    // magnitude bit: 0 -> inner levels, 1 -> outer levels
    let mag = (d_p3.min(d_m3) - d_p1.min(d_m1)) / noise_var;
    (sign, mag)
}

/// Appends the LLRs of one symbol to `out`; the allocation-free form of
/// [`demodulate_soft`] used on the per-resource-element hot path.
#[inline]
pub fn demod_symbol(y: C64, modulation: Modulation, noise_var: f64, out: &mut Vec<f64>) {
    match modulation {
        Modulation::Qpsk => {
            let scale = 4.0 * QPSK_AMP / noise_var;
            out.push(scale * y.re);
            out.push(scale * y.im);
        }
        Modulation::Qam16 => {
            let (s0, m0) = qam16_axis_llrs(y.re, noise_var);
            let (s1, m1) = qam16_axis_llrs(y.im, noise_var);
            out.push(s0);
            out.push(s1);
            out.push(m0);
            out.push(m1);
        }
    }
}

/// Hard decision from LLR sign (positive -> 0).
#[inline]
pub fn hard_bit(llr: f64) -> u8 {
    if llr >= 0.0 {
        0
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn qpsk_gray_map_convention() {
        let syms = modulate(&[0, 0], Modulation::Qpsk).unwrap();
        assert!((syms[0] - C64::new(QPSK_AMP, QPSK_AMP)).norm() < 1e-15);
        let syms = modulate(&[1, 0], Modulation::Qpsk).unwrap();
        assert!((syms[0] - C64::new(-QPSK_AMP, QPSK_AMP)).norm() < 1e-15);
        let syms = modulate(&[1, 1], Modulation::Qpsk).unwrap();
        assert!((syms[0] - C64::new(-QPSK_AMP, -QPSK_AMP)).norm() < 1e-15);
    }

    #[test]
    fn constellations_have_unit_energy() {
        for modulation in [Modulation::Qpsk, Modulation::Qam16] {
            let bps = modulation.bits_per_symbol();
            let count = 1usize << bps;
            let mut energy = 0.0;
            for pattern in 0..count {
                let bits: Vec<u8> = (0..bps).map(|b| ((pattern >> b) & 1) as u8).collect();
                let sym = modulate(&bits, modulation).unwrap()[0];
                energy += sym.norm_sqr();
            }
            assert!(
                (energy / count as f64 - 1.0).abs() < 1e-12,
                "{modulation} mean energy {}",
                energy / count as f64
            );
        }
    }

    #[test]
    fn qam16_gray_neighbours_differ_by_one_bit() {
        // Walk the I levels in ascending order; consecutive (sign, mag) bit
        // pairs must differ in exactly one position.
        let levels = [
            (-3.0 * QAM16_STEP, (1u8, 1u8)),
            (-QAM16_STEP, (1, 0)),
            (QAM16_STEP, (0, 0)),
            (3.0 * QAM16_STEP, (0, 1)),
        ];
        for w in levels.windows(2) {
            let (b0, b1) = (w[0].1, w[1].1);
            let diff = (b0.0 ^ b1.0) + (b0.1 ^ b1.1);
            assert_eq!(diff, 1);
        }
        // and the mapping really produces those levels
        for (level, (s, m)) in levels {
            let sym = modulate(&[s, 0, m, 0], Modulation::Qam16).unwrap()[0];
            assert!((sym.re - level).abs() < 1e-15);
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(modulate(&[0, 1, 0], Modulation::Qpsk).is_err());
        assert!(modulate(&[0, 1, 0], Modulation::Qam16).is_err());
        assert!(demodulate_soft(&[C64::new(1.0, 0.0)], Modulation::Qpsk, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn noiseless_round_trip(
            bits in proptest::collection::vec(0u8..2, 64),
            qam in proptest::bool::ANY,
        ) {
            let modulation = if qam { Modulation::Qam16 } else { Modulation::Qpsk };
            let syms = modulate(&bits, modulation).unwrap();
            let llrs = demodulate_soft(&syms, modulation, 1e-6).unwrap();
            let decided: Vec<u8> = llrs.iter().map(|&l| hard_bit(l)).collect();
            prop_assert_eq!(decided, bits);
        }
    }
}

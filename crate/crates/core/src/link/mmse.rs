//! Linear MMSE reception: per-subcarrier equalizer weights and
//! post-equalization SINR per spatial stream.

use crate::cmat::{C64, Mat2};

/// Post-MMSE SINR of both streams of a 2x2 channel `a` under complex noise
/// variance `noise_var`:
/// `SINR_i = 1 / [(I + A^H A / noise_var)^-1]_ii - 1`.
///
/// The resolvent form is always invertible for `noise_var > 0`.
pub fn per_subcarrier_sinr(a: &Mat2, noise_var: f64) -> [f64; 2] {
    let eq = MmseEqualizer::new(a, noise_var);
    eq.sinr
}

/// Scalar (single-stream) post-MMSE SINR; reduces to matched filtering.
pub fn per_subcarrier_sinr_scalar(a: C64, noise_var: f64) -> f64 {
    a.norm_sqr() / noise_var
}

/// Precomputed MMSE weights for one 2x2 channel matrix: estimate,
/// per-stream bias and post-equalization SINR.
#[derive(Debug, Clone, Copy)]
pub struct MmseEqualizer {
    /// W = (A^H A + noise_var I)^-1 A^H
    pub weights: Mat2,
    /// Bias of the MMSE estimate: E[x_hat_i | x] = bias_i * x_i.
    pub bias: [f64; 2],
    pub sinr: [f64; 2],
}

impl MmseEqualizer {
    pub fn new(a: &Mat2, noise_var: f64) -> Self {
        let mut m = a.gram();
        m.m[0][0] += noise_var;
        m.m[1][1] += noise_var;
        let m_inv = m.inverse();
        let weights = m_inv.mul(&a.adjoint());
        let mut bias = [0.0; 2];
        let mut sinr = [0.0; 2];
        for i in 0..2 {
            // diagonal of the inverse resolvent is real for Hermitian m
            let r = (noise_var * m_inv.m[i][i].re).clamp(0.0, 1.0);
            bias[i] = 1.0 - r;
            sinr[i] = if r > 0.0 { (1.0 - r) / r } else { f64::INFINITY };
        }
        MmseEqualizer { weights, bias, sinr }
    }

    /// Unbiased symbol estimates for one received vector.
    pub fn equalize(&self, y: [C64; 2]) -> [C64; 2] {
        let raw = self.weights.mul_vec(y);
        [raw[0] / self.bias[0].max(1e-300), raw[1] / self.bias[1].max(1e-300)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_channel_unit_noise() {
        // Resolvent by hand: (I + I)^-1 = I/2, SINR = 1/(1/2) - 1 = 1.
        let sinr = per_subcarrier_sinr(&Mat2::identity(), 1.0);
        assert!((sinr[0] - 1.0).abs() < 1e-12);
        assert!((sinr[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_channel_vanishing_noise() {
        let sinr = per_subcarrier_sinr(&Mat2::identity(), 1e-12);
        assert!(sinr[0] > 1e11);
        assert!(sinr[1] > 1e11);
    }

    #[test]
    fn dead_stream_gets_zero_sinr() {
        // A = diag(1, 0): stream 0 SINR 1, stream 1 SINR 0.
        let z = C64::new(0.0, 0.0);
        let o = C64::new(1.0, 0.0);
        let a = Mat2::new(o, z, z, z);
        let sinr = per_subcarrier_sinr(&a, 1.0);
        assert!((sinr[0] - 1.0).abs() < 1e-12);
        assert!(sinr[1].abs() < 1e-12);
    }

    #[test]
    fn scalar_matches_matrix_on_diagonal_channel() {
        let g = C64::new(0.3, -0.4);
        let z = C64::new(0.0, 0.0);
        let a = Mat2::new(g, z, z, C64::new(0.9, 0.1));
        let nv = 0.07;
        let sinr = per_subcarrier_sinr(&a, nv);
        assert!((sinr[0] - per_subcarrier_sinr_scalar(g, nv)).abs() < 1e-10);
    }

    #[test]
    fn equalizer_is_unbiased_in_the_mean() {
        let a = Mat2::new(
            C64::new(0.8, 0.1),
            C64::new(0.2, -0.3),
            C64::new(-0.1, 0.2),
            C64::new(0.7, -0.2),
        );
        let eq = MmseEqualizer::new(&a, 0.05);
        // Noise-free reception of x = (1, 0): estimate of stream 0 should
        // equal 1 plus only residual inter-stream leakage.
        let y = a.mul_vec([C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let xh = eq.equalize(y);
        let wa = eq.weights.mul(&a);
        let leak = (wa.m[0][1].norm() / eq.bias[0]).abs();
        assert!((xh[0] - C64::new(1.0, 0.0)).norm() <= leak + 1e-9);
    }

    #[test]
    fn crosstalk_known_to_receiver_costs_little() {
        // Symmetric real crosstalk epsilon at 20 dB SNR; closed-form check.
        let eps = 0.18;
        let a = Mat2::new(
            C64::new(1.0, 0.0),
            C64::new(eps, 0.0),
            C64::new(eps, 0.0),
            C64::new(1.0, 0.0),
        );
        let nv = 0.01;
        let sinr = per_subcarrier_sinr(&a, nv);
        // Eigen-decomposition oracle: modes (1 +- eps)^2 / nv
        let rho_p = (1.0 + eps) * (1.0 + eps) / nv;
        let rho_m = (1.0 - eps) * (1.0 - eps) / nv;
        let inv_diag = 0.5 * (1.0 / (1.0 + rho_p) + 1.0 / (1.0 + rho_m));
        let want = 1.0 / inv_diag - 1.0;
        assert!((sinr[0] - want).abs() / want < 1e-10);
        assert!(sinr[0] < 100.0 && sinr[0] > 85.0);
    }
}

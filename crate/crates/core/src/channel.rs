//! Emulated wireless fader: a static MIMO channel or EPA5 tapped-delay-line
//! Rayleigh fading with classical Doppler spectrum and 2x2 antenna
//! correlation.
//!
//! Tap gains are synthesized by a deterministic sum of sinusoids: per tap
//! and antenna pair, `M` sinusoids with arrival angles on a seeded, rotated
//! regular grid. The expectation of the time autocorrelation over seeds is
//! the classical `J0(2 pi f_d tau)`, and evaluation is pointwise in `t`, so
//! any subframe can be generated independently with bit-stable results.

use crate::cmat::{C64, Mat2};
use crate::phy::Numerology;
use crate::rng::{self, domain};
use rand::Rng;
use std::f64::consts::PI;

pub const EPA_TAP_COUNT: usize = 7;
const N_ENTRIES: usize = 4; // 2x2 MIMO
const N_SINUSOIDS: usize = 16;

/// Antenna correlation level, 3GPP-style: one coefficient per link end
/// (`alpha` at the eNB/transmit side, `beta` at the UE/receive side).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationLevel {
    Low,
    Medium,
    High,
}

impl CorrelationLevel {
    pub fn alpha_beta(self) -> (f64, f64) {
        match self {
            CorrelationLevel::Low => (0.0, 0.0),
            CorrelationLevel::Medium => (0.3, 0.9),
            CorrelationLevel::High => (0.9, 0.9),
        }
    }
}

impl std::fmt::Display for CorrelationLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CorrelationLevel::Low => write!(f, "low"),
            CorrelationLevel::Medium => write!(f, "medium"),
            CorrelationLevel::High => write!(f, "high"),
        }
    }
}

/// Fading model selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    /// Benign conducted channel: identity on every subcarrier and symbol.
    Static,
    Epa5 {
        doppler_hz: f64,
        correlation: CorrelationLevel,
    },
}

impl ChannelModel {
    pub fn epa5(correlation: CorrelationLevel) -> Self {
        ChannelModel::Epa5 {
            doppler_hz: 5.0,
            correlation,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            ChannelModel::Static => "static",
            ChannelModel::Epa5 { .. } => "epa5",
        }
    }
}

/// Tapped-delay-line power profile.
#[derive(Debug, Clone, PartialEq)]
pub struct TapProfile {
    pub delays_ns: Vec<f64>,
    pub powers_db: Vec<f64>,
}

impl TapProfile {
    /// Linear tap powers normalized to unit total power.
    pub fn normalized_linear_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self.powers_db.iter().map(|&p| crate::db_to_lin(p)).collect();
        let total: f64 = lin.iter().sum();
        lin.iter().map(|&p| p / total).collect()
    }
}

/// The EPA tapped-delay-line profile (3GPP TS 36.101 Annex B values).
pub fn epa_tap_profile() -> TapProfile {
    TapProfile {
        delays_ns: vec![0.0, 30.0, 70.0, 90.0, 110.0, 190.0, 410.0],
        powers_db: vec![0.0, -1.0, -2.0, -3.0, -8.0, -17.2, -20.8],
    }
}

/// 2x2 one-coefficient correlation matrices for each end of the link:
/// `R = [[1, x], [x, 1]]` with `x = alpha` at the transmitter and
/// `x = beta` at the receiver.
pub fn correlation_matrices(level: CorrelationLevel) -> (Mat2, Mat2) {
    let (alpha, beta) = level.alpha_beta();
    let build = |x: f64| {
        Mat2::new(
            C64::new(1.0, 0.0),
            C64::new(x, 0.0),
            C64::new(x, 0.0),
            C64::new(1.0, 0.0),
        )
    };
    (build(alpha), build(beta))
}

/// Symmetric square root of `[[1, x], [x, 1]]`.
fn corr_sqrt(x: f64) -> [[f64; 2]; 2] {
    let a = ((1.0 + x).sqrt() + (1.0 - x).sqrt()) / 2.0;
    let b = ((1.0 + x).sqrt() - (1.0 - x).sqrt()) / 2.0;
    [[a, b], [b, a]]
}

/// Sum-of-sinusoids parameters for one fading process (one antenna pair,
/// one tap).
#[derive(Debug, Clone, PartialEq)]
struct SosProcess {
    /// Doppler shift of each sinusoid, rad/s.
    omega: [f64; N_SINUSOIDS],
    phase: [f64; N_SINUSOIDS],
    amplitude: f64,
}

impl SosProcess {
    fn sample(&self, t_s: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for m in 0..N_SINUSOIDS {
            let arg = self.omega[m] * t_s + self.phase[m];
            acc += C64::from_polar(1.0, arg);
        }
        acc * self.amplitude
    }
}

/// Instantaneous tap gains for all four antenna pairs of one time sample.
pub type TapGains = [[C64; EPA_TAP_COUNT]; N_ENTRIES];

/// Deterministic per-seed channel generator; evaluation is pointwise in
/// time, so distinct subframes can be produced in parallel and in any
/// order with identical results.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSampler {
    model: ChannelModel,
    /// exp(-j 2 pi f_k tau) per subcarrier and tap.
    tap_phasors: Vec<[C64; EPA_TAP_COUNT]>,
    processes: Vec<SosProcess>,
    rtx_sqrt: [[f64; 2]; 2],
    rrx_sqrt: [[f64; 2]; 2],
    symbol_period_s: f64,
    subframe_duration_s: f64,
}

impl ChannelSampler {
    pub fn new(model: ChannelModel, num: &Numerology, seed: u64) -> Self {
        let n_sc = num.n_subcarriers();
        let profile = epa_tap_profile();
        let powers = profile.normalized_linear_powers();
        let mut tap_phasors = Vec::with_capacity(n_sc);
        for k in 0..n_sc {
            let f_off = num.subcarrier_offset_hz(k);
            let mut row = [C64::new(0.0, 0.0); EPA_TAP_COUNT];
            for (tap, phasor) in row.iter_mut().enumerate() {
                let tau = profile.delays_ns[tap] * 1e-9;
                *phasor = C64::from_polar(1.0, -2.0 * PI * f_off * tau);
            }
            tap_phasors.push(row);
        }

        let (mut processes, rtx_sqrt, rrx_sqrt) = match model {
            ChannelModel::Static => (Vec::new(), corr_sqrt(0.0), corr_sqrt(0.0)),
            ChannelModel::Epa5 {
                doppler_hz,
                correlation,
            } => {
                let (alpha, beta) = correlation.alpha_beta();
                let mut procs = Vec::with_capacity(N_ENTRIES * EPA_TAP_COUNT);
                for entry in 0..N_ENTRIES {
                    for tap in 0..EPA_TAP_COUNT {
                        let mut rng = rng::stream_rng(
                            seed,
                            domain::FADER,
                            &[entry as u64, tap as u64],
                        );
                        let theta: f64 = rng.gen::<f64>() * 2.0 * PI;
                        let mut omega = [0.0; N_SINUSOIDS];
                        let mut phase = [0.0; N_SINUSOIDS];
                        for m in 0..N_SINUSOIDS {
                            let arrival = (2.0 * PI * m as f64 + theta) / N_SINUSOIDS as f64;
                            omega[m] = 2.0 * PI * doppler_hz * arrival.cos();
                            phase[m] = rng.gen::<f64>() * 2.0 * PI;
                        }
                        procs.push(SosProcess {
                            omega,
                            phase,
                            amplitude: (powers[tap] / N_SINUSOIDS as f64).sqrt(),
                        });
                    }
                }
                (procs, corr_sqrt(alpha), corr_sqrt(beta))
            }
        };
        processes.shrink_to_fit();

        ChannelSampler {
            model,
            tap_phasors,
            processes,
            rtx_sqrt,
            rrx_sqrt,
            symbol_period_s: num.subframe_duration_s / num.symbols_per_subframe as f64,
            subframe_duration_s: num.subframe_duration_s,
        }
    }

    pub fn is_static(&self) -> bool {
        matches!(self.model, ChannelModel::Static)
    }

    pub fn model(&self) -> ChannelModel {
        self.model
    }

    /// Mid-symbol absolute time of (subframe, symbol).
    pub fn symbol_time_s(&self, subframe: usize, symbol: usize) -> f64 {
        subframe as f64 * self.subframe_duration_s + (symbol as f64 + 0.5) * self.symbol_period_s
    }

    /// Tap gains of all antenna pairs at absolute time `t_s`.
    pub fn tap_gains(&self, t_s: f64) -> TapGains {
        let mut gains = [[C64::new(0.0, 0.0); EPA_TAP_COUNT]; N_ENTRIES];
        if self.is_static() {
            return gains;
        }
        for entry in 0..N_ENTRIES {
            for tap in 0..EPA_TAP_COUNT {
                gains[entry][tap] = self.processes[entry * EPA_TAP_COUNT + tap].sample(t_s);
            }
        }
        gains
    }

    /// 2x2 channel matrix of subcarrier `k` given tap gains of one time
    /// sample. Entry layout: row = receive antenna, column = transmit.
    pub fn matrix(&self, gains: &TapGains, k: usize) -> Mat2 {
        if self.is_static() {
            return Mat2::identity();
        }
        let phasors = &self.tap_phasors[k];
        let mut flat = [C64::new(0.0, 0.0); N_ENTRIES];
        for (entry, slot) in flat.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for tap in 0..EPA_TAP_COUNT {
                acc += gains[entry][tap] * phasors[tap];
            }
            *slot = acc;
        }
        // iid construction -> R_rx^(1/2) H R_tx^(1/2)
        let h = [[flat[0], flat[1]], [flat[2], flat[3]]];
        let rr = &self.rrx_sqrt;
        let rt = &self.rtx_sqrt;
        let mut out = Mat2::zeros();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = C64::new(0.0, 0.0);
                for a in 0..2 {
                    for b in 0..2 {
                        acc += h[a][b] * (rr[i][a] * rt[b][j]);
                    }
                }
                out.m[i][j] = acc;
            }
        }
        out
    }
}

/// A realized channel: per-subcarrier, per-symbol 2x2 matrices over a run
/// of `n_subframes`, evaluated lazily from the deterministic sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub seed: u64,
    pub n_subframes: usize,
    sampler: ChannelSampler,
}

impl ChannelRealization {
    pub fn sampler(&self) -> &ChannelSampler {
        &self.sampler
    }

    /// Channel matrix at (subcarrier, subframe, symbol).
    pub fn h(&self, k: usize, subframe: usize, symbol: usize) -> Mat2 {
        let gains = self
            .sampler
            .tap_gains(self.sampler.symbol_time_s(subframe, symbol));
        self.sampler.matrix(&gains, k)
    }
}

/// Builds the deterministic realization for (model, numerology,
/// n_subframes, seed).
pub fn generate_channel(
    model: ChannelModel,
    num: &Numerology,
    n_subframes: usize,
    seed: u64,
) -> ChannelRealization {
    ChannelRealization {
        seed,
        n_subframes,
        sampler: ChannelSampler::new(model, num, seed),
    }
}

//! Exponential effective SNR mapping and its beta calibration.
//!
//! EESM collapses a set of per-subcarrier post-MMSE SINRs into one
//! equivalent AWGN SNR: `-beta * ln(mean(exp(-sinr / beta)))`. beta is
//! fitted per MCS against explicitly simulated BLER of frequency-selective
//! realizations, using the AWGN reference table for prediction.

use super::bler_ref::BlerRefTable;
use super::LinkError;

/// Effective SINR (linear in, linear out) for one SINR set.
pub fn eesm_effective_sinr(sinrs: &[f64], beta: f64) -> Result<f64, LinkError> {
    if sinrs.is_empty() {
        return Err(LinkError::EmptySinrList);
    }
    debug_assert!(beta > 0.0);
    let mean: f64 = sinrs.iter().map(|&s| (-s / beta).exp()).sum::<f64>() / sinrs.len() as f64;
    if mean <= 0.0 {
        // every term underflowed: effectively infinite SINR
        return Ok(f64::INFINITY);
    }
    Ok(-beta * mean.ln())
}

/// One channel realization used for calibration: the per-data-RE SINRs of
/// one transport block and the BLER measured for it by explicit simulation.
#[derive(Debug, Clone)]
pub struct CalibrationRealization {
    pub sinrs: Vec<f64>,
    pub simulated_bler: f64,
}

/// Predicted BLER of one realization under a candidate beta.
fn predict_bler(real: &CalibrationRealization, beta: f64, table: &BlerRefTable) -> f64 {
    let eff = eesm_effective_sinr(&real.sinrs, beta).unwrap_or(f64::INFINITY);
    if eff.is_infinite() {
        return 0.0;
    }
    table.bler_at_snr_db(crate::lin_to_db(eff.max(1e-30)))
}

fn rms_error(realizations: &[CalibrationRealization], beta: f64, table: &BlerRefTable) -> f64 {
    let se: f64 = realizations
        .iter()
        .map(|r| {
            let d = predict_bler(r, beta, table) - r.simulated_bler;
            d * d
        })
        .sum();
    (se / realizations.len() as f64).sqrt()
}

/// Fits beta by minimizing the RMS error between predicted and simulated
/// BLER: a log-spaced coarse grid followed by golden-section refinement.
/// Realizations must span the waterfall region (some BLER in (0.02, 0.9)).
pub fn calibrate_beta(
    realizations: &[CalibrationRealization],
    table: &BlerRefTable,
) -> Result<f64, LinkError> {
    let in_waterfall = realizations
        .iter()
        .filter(|r| r.simulated_bler > 0.02 && r.simulated_bler < 0.9)
        .count();
    if in_waterfall == 0 {
        return Err(LinkError::CalibrationInfeasible {
            reason: "no realization with simulated BLER inside (0.02, 0.9)".into(),
        });
    }

    let n_grid = 60;
    let (log_lo, log_hi) = (0.05f64.ln(), 60.0f64.ln());
    let mut best = (f64::INFINITY, 1.0);
    for i in 0..n_grid {
        let beta = (log_lo + (log_hi - log_lo) * i as f64 / (n_grid - 1) as f64).exp();
        let err = rms_error(realizations, beta, table);
        if err < best.0 {
            best = (err, beta);
        }
    }

    // Golden-section refinement in log space around the grid minimum.
    let step = (log_hi - log_lo) / (n_grid - 1) as f64;
    let mut lo = best.1.ln() - step;
    let mut hi = best.1.ln() + step;
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..40 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if rms_error(realizations, a.exp(), table) < rms_error(realizations, b.exp(), table) {
            hi = b;
        } else {
            lo = a;
        }
    }
    Ok(((lo + hi) / 2.0).exp())
}

/// RMS prediction error of a fitted beta on a (held-out) realization set.
pub fn validation_rms_error(
    realizations: &[CalibrationRealization],
    beta: f64,
    table: &BlerRefTable,
) -> f64 {
    rms_error(realizations, beta, table)
}

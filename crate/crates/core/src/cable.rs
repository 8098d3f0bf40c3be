//! Closed-form frequency-domain model of a multi-pair LAN cable.
//!
//! The direct path of each twisted pair is described by the category-5e
//! insertion-loss limit form, far-end coupling between pairs by an
//! equal-level FEXT limit line with a length correction, and near-end
//! coupling by a NEXT limit line. [`build_cable_channel`] assembles these
//! into per-frequency pair-to-pair complex transfer matrices with seeded
//! uniform crosstalk phases.

use crate::cmat::{C64, CMatN};
use crate::rng::{self, domain};
use crate::{db_to_amp, C_VACUUM_M_S};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CableError {
    #[error("frequency {f_hz} Hz outside modeled range (0, {f_max_hz}] Hz")]
    FrequencyOutOfRange { f_hz: f64, f_max_hz: f64 },
    #[error("invalid cable spec: {0}")]
    InvalidSpec(String),
    #[error("frequency grid must be non-empty and strictly ascending")]
    BadGrid,
}

/// Parametric model of one multi-pair cable.
///
/// Insertion loss follows `il_a*sqrt(f) + il_b*f + il_c/sqrt(f)` in dB per
/// 100 m with `f` in MHz; crosstalk follows limit lines referenced to
/// 100 MHz. Defaults are category-5e limit values extrapolated over the
/// full modeled band, overridable from the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct CableSpec {
    pub category: String,
    pub length_m: f64,
    pub n_pairs: usize,
    /// Fraction of the vacuum speed of light, in (0, 1].
    pub velocity_factor: f64,
    pub il_a: f64,
    pub il_b: f64,
    pub il_c: f64,
    /// Equal-level FEXT at 100 MHz per 100 m, dB.
    pub elfext_ref_db: f64,
    pub elfext_slope_db_per_decade: f64,
    /// NEXT at 100 MHz, dB.
    pub next_ref_db: f64,
    pub next_slope_db_per_decade: f64,
    pub f_max_hz: f64,
}

impl Default for CableSpec {
    fn default() -> Self {
        CableSpec {
            category: "cat5e".to_owned(),
            length_m: 50.0,
            n_pairs: 4,
            velocity_factor: 0.65,
            il_a: 1.967,
            il_b: 0.023,
            il_c: 0.050,
            elfext_ref_db: 23.8,
            elfext_slope_db_per_decade: 20.0,
            next_ref_db: 35.3,
            next_slope_db_per_decade: 15.0,
            f_max_hz: 500e6,
        }
    }
}

impl CableSpec {
    pub fn validate(&self) -> Result<(), CableError> {
        let fail = |msg: &str| Err(CableError::InvalidSpec(msg.to_owned()));
        if !(self.length_m > 0.0) {
            return fail("length_m must be > 0");
        }
        if self.n_pairs < 2 {
            return fail("n_pairs must be >= 2");
        }
        if !(self.velocity_factor > 0.0 && self.velocity_factor <= 1.0) {
            return fail("velocity_factor must be in (0, 1]");
        }
        if self.il_a < 0.0 || self.il_b < 0.0 || self.il_c < 0.0 {
            return fail("insertion-loss coefficients must be >= 0");
        }
        if !(self.elfext_ref_db > 0.0) {
            return fail("elfext_ref_db must be > 0");
        }
        if self.f_max_hz < 400e6 {
            return fail("f_max_hz must be >= 400 MHz");
        }
        Ok(())
    }

    fn check_freq(&self, f_hz: f64) -> Result<(), CableError> {
        if f_hz > 0.0 && f_hz <= self.f_max_hz {
            Ok(())
        } else {
            Err(CableError::FrequencyOutOfRange {
                f_hz,
                f_max_hz: self.f_max_hz,
            })
        }
    }

    /// One-way propagation delay of a pair, seconds.
    pub fn propagation_delay_s(&self) -> f64 {
        self.length_m / (self.velocity_factor * C_VACUUM_M_S)
    }
}

/// Direct-path insertion loss in dB at `f_hz`, linear in cable length.
pub fn insertion_loss_db(spec: &CableSpec, f_hz: f64) -> Result<f64, CableError> {
    spec.check_freq(f_hz)?;
    let f_mhz = f_hz / 1e6;
    let per_100m = spec.il_a * f_mhz.sqrt() + spec.il_b * f_mhz + spec.il_c / f_mhz.sqrt();
    Ok(per_100m * spec.length_m / 100.0)
}

/// Equal-level FEXT loss in dB (positive; smaller means stronger coupling).
///
/// The `+10 log10(length/100)` equal-level correction makes coupled power
/// grow linearly with coupled length.
pub fn fext_coupling_db(spec: &CableSpec, f_hz: f64) -> Result<f64, CableError> {
    spec.check_freq(f_hz)?;
    let f_mhz = f_hz / 1e6;
    Ok(spec.elfext_ref_db
        - spec.elfext_slope_db_per_decade * (f_mhz / 100.0).log10()
        - 10.0 * (spec.length_m / 100.0).log10())
}

/// NEXT loss in dB. Modeled for plan validation of bidirectional use; the
/// downlink simulation itself never excites the near end.
pub fn next_coupling_db(spec: &CableSpec, f_hz: f64) -> Result<f64, CableError> {
    spec.check_freq(f_hz)?;
    let f_mhz = f_hz / 1e6;
    Ok(spec.next_ref_db - spec.next_slope_db_per_decade * (f_mhz / 100.0).log10())
}

/// Complex direct-path response of one pair: magnitude from insertion loss,
/// phase from the propagation delay.
pub fn direct_path_response(spec: &CableSpec, f_hz: f64) -> Result<C64, CableError> {
    let il_db = insertion_loss_db(spec, f_hz)?;
    let mag = db_to_amp(-il_db);
    let phase = -2.0 * std::f64::consts::PI * f_hz * spec.propagation_delay_s();
    Ok(C64::from_polar(mag, phase))
}

/// Per-frequency pair-to-pair transfer matrices of one cable.
///
/// Entry `[i][j]` is the response on pair `i` from an input on pair `j`.
/// Off-diagonal magnitudes are symmetric; phases are independent uniform
/// draws per (i, j, bin), deterministic in `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct CableChannelMatrix {
    pub freq_grid_hz: Vec<f64>,
    pub n_pairs: usize,
    pub seed: u64,
    mats: Vec<CMatN>,
}

impl CableChannelMatrix {
    pub fn n_bins(&self) -> usize {
        self.freq_grid_hz.len()
    }

    pub fn matrix_at_bin(&self, bin: usize) -> &CMatN {
        &self.mats[bin]
    }

    /// Entry (i, j) at an arbitrary in-grid frequency; linear interpolation
    /// in dB magnitude and shortest-arc linear phase between adjacent bins.
    /// Frequencies outside the grid are an error (no extrapolation).
    pub fn entry_at(&self, f_hz: f64, i: usize, j: usize) -> Result<C64, CableError> {
        let grid = &self.freq_grid_hz;
        let lo = *grid.first().ok_or(CableError::BadGrid)?;
        let hi = *grid.last().unwrap();
        if f_hz < lo || f_hz > hi {
            return Err(CableError::FrequencyOutOfRange {
                f_hz,
                f_max_hz: hi,
            });
        }
        let idx = match grid.binary_search_by(|g| g.partial_cmp(&f_hz).unwrap()) {
            Ok(exact) => return Ok(self.mats[exact][(i, j)]),
            Err(ins) => ins,
        };
        let (a, b) = (idx - 1, idx);
        let w = (f_hz - grid[a]) / (grid[b] - grid[a]);
        let za = self.mats[a][(i, j)];
        let zb = self.mats[b][(i, j)];
        let mag_db = (1.0 - w) * 20.0 * za.norm().log10() + w * 20.0 * zb.norm().log10();
        let (pa, pb) = (za.arg(), zb.arg());
        let mut dphi = pb - pa;
        while dphi > std::f64::consts::PI {
            dphi -= 2.0 * std::f64::consts::PI;
        }
        while dphi < -std::f64::consts::PI {
            dphi += 2.0 * std::f64::consts::PI;
        }
        Ok(C64::from_polar(db_to_amp(mag_db), pa + w * dphi))
    }
}

/// Builds the per-frequency transfer matrices over `freq_grid_hz`.
///
/// Pure in (spec, grid, seed): identical inputs give bit-identical output.
pub fn build_cable_channel(
    spec: &CableSpec,
    freq_grid_hz: &[f64],
    seed: u64,
) -> Result<CableChannelMatrix, CableError> {
    spec.validate()?;
    if freq_grid_hz.is_empty() || freq_grid_hz.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CableError::BadGrid);
    }
    let n = spec.n_pairs;
    let mut mats = Vec::with_capacity(freq_grid_hz.len());
    for (bin, &f_hz) in freq_grid_hz.iter().enumerate() {
        let direct = direct_path_response(spec, f_hz)?;
        let il_db = insertion_loss_db(spec, f_hz)?;
        let elfext_db = fext_coupling_db(spec, f_hz)?;
        let fext_mag = db_to_amp(-(il_db + elfext_db));
        let mut m = CMatN::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    m[(i, j)] = direct;
                } else {
                    let mut rng = rng::stream_rng(
                        seed,
                        domain::CABLE_PHASE,
                        &[i as u64, j as u64, bin as u64],
                    );
                    let phase: f64 = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
                    m[(i, j)] = C64::from_polar(fext_mag, phase);
                }
            }
        }
        mats.push(m);
    }
    Ok(CableChannelMatrix {
        freq_grid_hz: freq_grid_hz.to_vec(),
        n_pairs: n,
        seed,
        mats,
    })
}

/// Uniform frequency grid covering (start, stop] at `step_hz` spacing,
/// suitable as the default cable grid.
pub fn uniform_grid_hz(start_hz: f64, stop_hz: f64, step_hz: f64) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut f = start_hz;
    while f <= stop_hz + 1e-6 {
        grid.push(f);
        f += step_hz;
    }
    grid
}

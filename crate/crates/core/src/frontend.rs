//! The two back-to-back LAN-to-coax converters: assignment of RF ports to
//! (pair, IF) slots, the passive cable equalizer, converter insertion loss,
//! and composition of the whole copper section into one per-subcarrier
//! port-to-port matrix.

use crate::cable::{insertion_loss_db, CableChannelMatrix, CableError, CableSpec};
use crate::cmat::{C64, CMatN};
use crate::db_to_amp;
use crate::phy::Numerology;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FrontendError {
    #[error("unknown rf port {0} in plan")]
    UnknownPort(usize),
    #[error("subcarrier index {k} outside grid of {n_sc} subcarriers")]
    SubcarrierOutOfRange { k: usize, n_sc: usize },
    #[error("equalizer band is degenerate: ({0} Hz, {1} Hz)")]
    DegenerateBand(f64, f64),
    #[error("plan failed validation: {0}")]
    InvalidPlan(String),
    #[error(transparent)]
    Cable(#[from] CableError),
}

/// One RF port carried on one twisted pair at one cable IF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub rf_port: usize,
    pub pair: usize,
    pub f_if_hz: f64,
}

/// Space-frequency to space-frequency multiplexing plan: which RF port is
/// carried on which pair at which intermediate frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Sf2sfPlan {
    pub assignments: Vec<Assignment>,
    /// Minimum spectral spacing between slots sharing a pair.
    pub guard_band_hz: f64,
}

impl Sf2sfPlan {
    /// Two ports on two pairs at the same cable IF (the interfering
    /// configuration the experiments run). Guard band defaults to one
    /// resource block.
    pub fn two_port_same_if(f_if_hz: f64) -> Self {
        Sf2sfPlan {
            assignments: vec![
                Assignment {
                    rf_port: 0,
                    pair: 0,
                    f_if_hz,
                },
                Assignment {
                    rf_port: 1,
                    pair: 1,
                    f_if_hz,
                },
            ],
            guard_band_hz: 180e3,
        }
    }

    pub fn n_ports(&self) -> usize {
        self.assignments.len()
    }

    fn by_port(&self, port: usize) -> Result<&Assignment, FrontendError> {
        self.assignments
            .iter()
            .find(|a| a.rf_port == port)
            .ok_or(FrontendError::UnknownPort(port))
    }
}

/// Converter-chain parameters: total flat loss of both converters and the
/// lowest usable cable frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontendSpec {
    pub converter_pair_loss_db: f64,
    pub f_if_min_hz: f64,
}

impl Default for FrontendSpec {
    fn default() -> Self {
        FrontendSpec {
            converter_pair_loss_db: 60.0,
            f_if_min_hz: 10e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanViolation {
    DuplicatePort {
        rf_port: usize,
    },
    UnknownPair {
        rf_port: usize,
        pair: usize,
        n_pairs: usize,
    },
    SlotOverlap {
        pair: usize,
        port_a: usize,
        port_b: usize,
    },
    OutOfBand {
        rf_port: usize,
        edge_hz: f64,
        lo_hz: f64,
        hi_hz: f64,
    },
}

impl std::fmt::Display for PlanViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PlanViolation::DuplicatePort { rf_port } => {
                write!(f, "rf port {rf_port} assigned more than once")
            }
            PlanViolation::UnknownPair {
                rf_port,
                pair,
                n_pairs,
            } => write!(
                f,
                "rf port {rf_port} mapped to pair {pair}, cable has {n_pairs} pairs"
            ),
            PlanViolation::SlotOverlap {
                pair,
                port_a,
                port_b,
            } => write!(
                f,
                "ports {port_a} and {port_b} overlap (incl. guard band) on pair {pair}"
            ),
            PlanViolation::OutOfBand {
                rf_port,
                edge_hz,
                lo_hz,
                hi_hz,
            } => write!(
                f,
                "rf port {rf_port} band edge {:.3} MHz outside usable cable range [{:.3}, {:.3}] MHz",
                edge_hz / 1e6,
                lo_hz / 1e6,
                hi_hz / 1e6
            ),
        }
    }
}

/// Validation outcome; violations are data, not errors.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport {
    pub violations: Vec<PlanViolation>,
}

impl PlanReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for PlanReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_ok() {
            write!(f, "plan ok")
        } else {
            for v in &self.violations {
                writeln!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

/// Checks port uniqueness, pair indices, per-pair slot separation and the
/// usable frequency range for a signal of bandwidth `bw_hz`.
pub fn validate_plan(
    plan: &Sf2sfPlan,
    cable: &CableSpec,
    frontend: &FrontendSpec,
    bw_hz: f64,
) -> PlanReport {
    let mut violations = Vec::new();
    let a = &plan.assignments;
    for (i, ai) in a.iter().enumerate() {
        if a[..i].iter().any(|prev| prev.rf_port == ai.rf_port) {
            violations.push(PlanViolation::DuplicatePort { rf_port: ai.rf_port });
        }
        if ai.pair >= cable.n_pairs {
            violations.push(PlanViolation::UnknownPair {
                rf_port: ai.rf_port,
                pair: ai.pair,
                n_pairs: cable.n_pairs,
            });
        }
        for edge in [ai.f_if_hz - bw_hz / 2.0, ai.f_if_hz + bw_hz / 2.0] {
            if edge < frontend.f_if_min_hz || edge > cable.f_max_hz {
                violations.push(PlanViolation::OutOfBand {
                    rf_port: ai.rf_port,
                    edge_hz: edge,
                    lo_hz: frontend.f_if_min_hz,
                    hi_hz: cable.f_max_hz,
                });
            }
        }
        for aj in &a[i + 1..] {
            if ai.pair == aj.pair {
                let gap = (ai.f_if_hz - aj.f_if_hz).abs() - bw_hz;
                if gap < plan.guard_band_hz {
                    violations.push(PlanViolation::SlotOverlap {
                        pair: ai.pair,
                        port_a: ai.rf_port,
                        port_b: aj.rf_port,
                    });
                }
            }
        }
    }
    PlanReport { violations }
}

/// Passive equalizer response: attenuates low frequencies so that together
/// with a cable of the design length the direct path is flat over the band.
/// Unity gain at the band's upper edge, clamped to 1 above it.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerProfile {
    pub design_length_m: f64,
    pub band_hz: (f64, f64),
    il_a: f64,
    il_b: f64,
    il_c: f64,
    il_at_hi_db: f64,
}

impl EqualizerProfile {
    /// Linear amplitude gain at `f_hz`; always <= 1 (passive device).
    pub fn gain(&self, f_hz: f64) -> f64 {
        if f_hz >= self.band_hz.1 {
            return 1.0;
        }
        let f_mhz = f_hz / 1e6;
        let il_db = (self.il_a * f_mhz.sqrt() + self.il_b * f_mhz + self.il_c / f_mhz.sqrt())
            * self.design_length_m
            / 100.0;
        db_to_amp(-(self.il_at_hi_db - il_db)).min(1.0)
    }
}

/// Designs the fixed equalizer for `design_length_m` of the given cable
/// over `band_hz`.
pub fn design_passive_equalizer(
    cable: &CableSpec,
    design_length_m: f64,
    band_hz: (f64, f64),
) -> Result<EqualizerProfile, FrontendError> {
    if !(band_hz.0 > 0.0 && band_hz.1 > band_hz.0) {
        return Err(FrontendError::DegenerateBand(band_hz.0, band_hz.1));
    }
    let design = CableSpec {
        length_m: design_length_m,
        ..cable.clone()
    };
    let il_at_hi_db = insertion_loss_db(&design, band_hz.1)?;
    Ok(EqualizerProfile {
        design_length_m,
        band_hz,
        il_a: cable.il_a,
        il_b: cable.il_b,
        il_c: cable.il_c,
        il_at_hi_db,
    })
}

/// Cable frequency carrying subcarrier `k` of `port`: the port's IF plus
/// the subcarrier's baseband offset (zero at the band center).
pub fn map_subcarrier_freq(
    plan: &Sf2sfPlan,
    port: usize,
    k: usize,
    num: &Numerology,
) -> Result<f64, FrontendError> {
    let n_sc = num.n_subcarriers();
    if k >= n_sc {
        return Err(FrontendError::SubcarrierOutOfRange { k, n_sc });
    }
    let a = plan.by_port(port)?;
    Ok(a.f_if_hz + num.subcarrier_offset_hz(k))
}

/// Composes converters, equalizer and cable into one port-to-port complex
/// matrix per subcarrier. Row/column `i` corresponds to
/// `plan.assignments[i]`. Off-diagonals carry inter-pair FEXT between
/// ports sharing the same IF; slots at different IFs are frequency-disjoint
/// after demapping and contribute zero.
pub fn compose_copper_section(
    plan: &Sf2sfPlan,
    cable_ch: &CableChannelMatrix,
    eq: &EqualizerProfile,
    frontend: &FrontendSpec,
    num: &Numerology,
) -> Result<Vec<CMatN>, FrontendError> {
    let n = plan.n_ports();
    let n_sc = num.n_subcarriers();
    let conv_amp = db_to_amp(-frontend.converter_pair_loss_db / 2.0).powi(2);
    let mut out = Vec::with_capacity(n_sc);
    for k in 0..n_sc {
        let mut m = CMatN::zeros(n);
        for (j, tx) in plan.assignments.iter().enumerate() {
            let f_k = tx.f_if_hz + num.subcarrier_offset_hz(k);
            let scale = conv_amp * eq.gain(f_k);
            for (i, rx) in plan.assignments.iter().enumerate() {
                if i != j && (rx.f_if_hz - tx.f_if_hz).abs() > 1.0 {
                    continue; // different IF slots never line up after demapping
                }
                let h = cable_ch.entry_at(f_k, rx.pair, tx.pair)?;
                m[(i, j)] = h * scale;
            }
        }
        out.push(m);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cable::{build_cable_channel, fext_coupling_db, uniform_grid_hz};
    use crate::phy::numerology_for_bw;

    fn default_setup() -> (CableSpec, FrontendSpec) {
        (CableSpec::default(), FrontendSpec::default())
    }

    #[test]
    fn two_port_same_if_plan_is_valid() {
        let (cable, fe) = default_setup();
        let plan = Sf2sfPlan::two_port_same_if(175e6);
        let report = validate_plan(&plan, &cable, &fe, 10e6);
        assert!(report.is_ok(), "{report}");
    }

    #[test]
    fn same_pair_close_ifs_overlap() {
        let (cable, fe) = default_setup();
        let plan = Sf2sfPlan {
            assignments: vec![
                Assignment {
                    rf_port: 0,
                    pair: 0,
                    f_if_hz: 100e6,
                },
                Assignment {
                    rf_port: 1,
                    pair: 0,
                    f_if_hz: 104e6,
                },
            ],
            guard_band_hz: 180e3,
        };
        let report = validate_plan(&plan, &cable, &fe, 10e6);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, PlanViolation::SlotOverlap { pair: 0, .. })));
    }

    #[test]
    fn band_edge_beyond_cable_max_is_violation() {
        let (mut cable, fe) = default_setup();
        cable.f_max_hz = 400e6;
        let plan = Sf2sfPlan {
            assignments: vec![Assignment {
                rf_port: 0,
                pair: 0,
                f_if_hz: 400e6,
            }],
            guard_band_hz: 180e3,
        };
        let report = validate_plan(&plan, &cable, &fe, 10e6);
        assert!(report.violations.iter().any(|v| matches!(
            v,
            PlanViolation::OutOfBand { edge_hz, .. } if (*edge_hz - 405e6).abs() < 1.0
        )));
    }

    #[test]
    fn duplicate_port_and_unknown_pair_detected() {
        let (cable, fe) = default_setup();
        let plan = Sf2sfPlan {
            assignments: vec![
                Assignment {
                    rf_port: 0,
                    pair: 0,
                    f_if_hz: 100e6,
                },
                Assignment {
                    rf_port: 0,
                    pair: 7,
                    f_if_hz: 300e6,
                },
            ],
            guard_band_hz: 180e3,
        };
        let report = validate_plan(&plan, &cable, &fe, 5e6);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, PlanViolation::DuplicatePort { rf_port: 0 })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, PlanViolation::UnknownPair { pair: 7, .. })));
    }

    #[test]
    fn equalizer_unity_at_band_top_and_passive() {
        let cable = CableSpec::default();
        let eq = design_passive_equalizer(&cable, 50.0, (10e6, 400e6)).unwrap();
        assert!((eq.gain(400e6) - 1.0).abs() < 1e-12);
        assert!((eq.gain(450e6) - 1.0).abs() < 1e-12); // clamped above band
        for f in [10e6, 50e6, 100e6, 250e6, 399e6] {
            assert!(eq.gain(f) <= 1.0);
        }
        assert!(matches!(
            design_passive_equalizer(&cable, 50.0, (100e6, 100e6)),
            Err(FrontendError::DegenerateBand(..))
        ));
    }

    #[test]
    fn equalizer_gain_value_at_100_mhz() {
        // Oracle: 10^(-(IL(400 MHz, 50 m) - IL(100 MHz, 50 m)) / 20)
        let cable = CableSpec::default();
        let il_400 = insertion_loss_db(&cable, 400e6).unwrap();
        let il_100 = insertion_loss_db(&cable, 100e6).unwrap();
        let want = db_to_amp(-(il_400 - il_100));
        let eq = design_passive_equalizer(&cable, 50.0, (10e6, 400e6)).unwrap();
        assert!((eq.gain(100e6) - want).abs() < 1e-12);
        assert!((want - 0.21665).abs() < 1e-4, "frozen oracle value {want}");
    }

    #[test]
    fn equalized_direct_path_flat_at_design_length() {
        let cable = CableSpec::default();
        let eq = design_passive_equalizer(&cable, 50.0, (10e6, 400e6)).unwrap();
        let reference = eq.gain(400e6) * db_to_amp(-insertion_loss_db(&cable, 400e6).unwrap());
        for f in [10e6, 30e6, 75e6, 175e6, 333e6, 400e6] {
            let composite = eq.gain(f) * db_to_amp(-insertion_loss_db(&cable, f).unwrap());
            assert!(
                ((composite - reference) / reference).abs() < 1e-9,
                "not flat at {f}"
            );
        }
    }

    #[test]
    fn subcarrier_mapping() {
        let num = numerology_for_bw(5e6).unwrap();
        let plan = Sf2sfPlan::two_port_same_if(75e6);
        // center subcarrier sits exactly on the IF
        let center = map_subcarrier_freq(&plan, 0, 150, &num).unwrap();
        assert!((center - 75e6).abs() < 1e-9);
        // highest subcarrier of a 5 MHz band: 75 MHz + 149*15 kHz
        let top = map_subcarrier_freq(&plan, 0, 299, &num).unwrap();
        assert!((top - 77.235e6).abs() < 1e-6);
        // lowest subcarrier of a 10 MHz band at 400 MHz: 400 - 300*15 kHz
        let num10 = numerology_for_bw(10e6).unwrap();
        let plan400 = Sf2sfPlan::two_port_same_if(400e6);
        let lo = map_subcarrier_freq(&plan400, 1, 0, &num10).unwrap();
        assert!((lo - 395.5e6).abs() < 1e-6);
        // bijective in k
        let f_a = map_subcarrier_freq(&plan, 0, 10, &num).unwrap();
        let f_b = map_subcarrier_freq(&plan, 0, 11, &num).unwrap();
        assert!((f_b - f_a - 15e3).abs() < 1e-9);
        assert!(matches!(
            map_subcarrier_freq(&plan, 9, 0, &num),
            Err(FrontendError::UnknownPort(9))
        ));
        assert!(matches!(
            map_subcarrier_freq(&plan, 0, 300, &num),
            Err(FrontendError::SubcarrierOutOfRange { .. })
        ));
    }

    fn composed_fig3(f_if_hz: f64, bw_hz: f64) -> (Vec<CMatN>, CableSpec, Sf2sfPlan) {
        let cable = CableSpec::default();
        let fe = FrontendSpec::default();
        let num = numerology_for_bw(bw_hz).unwrap();
        let plan = Sf2sfPlan::two_port_same_if(f_if_hz);
        let grid = uniform_grid_hz(1e6, 500e6, 1e6);
        let ch = build_cable_channel(&cable, &grid, 42).unwrap();
        let eq = design_passive_equalizer(&cable, 50.0, (10e6, 400e6)).unwrap();
        let k = compose_copper_section(&plan, &ch, &eq, &fe, &num).unwrap();
        (k, cable, plan)
    }

    #[test]
    fn single_port_chain_of_scalars() {
        let mut cable = CableSpec::default();
        cable.elfext_ref_db = 200.0; // crosstalk effectively off
        let fe = FrontendSpec::default();
        let num = numerology_for_bw(5e6).unwrap();
        let plan = Sf2sfPlan {
            assignments: vec![Assignment {
                rf_port: 0,
                pair: 2,
                f_if_hz: 175e6,
            }],
            guard_band_hz: 180e3,
        };
        let grid = uniform_grid_hz(1e6, 500e6, 0.5e6);
        let ch = build_cable_channel(&cable, &grid, 1).unwrap();
        let eq = design_passive_equalizer(&cable, 50.0, (10e6, 400e6)).unwrap();
        let k = compose_copper_section(&plan, &ch, &eq, &fe, &num).unwrap();
        assert_eq!(k.len(), 300);
        for (kk, m) in k.iter().enumerate() {
            assert_eq!(m.order(), 1);
            let f = map_subcarrier_freq(&plan, 0, kk, &num).unwrap();
            let want = db_to_amp(-(fe.converter_pair_loss_db + insertion_loss_db(&cable, f).unwrap()))
                * eq.gain(f);
            assert!(
                (m[(0, 0)].norm() - want).abs() < 1e-6 * want,
                "scalar chain mismatch at subcarrier {kk}"
            );
        }
    }

    #[test]
    fn fext_ratio_identity_per_subcarrier() {
        let (k, cable, plan) = composed_fig3(175e6, 10e6);
        let num = numerology_for_bw(10e6).unwrap();
        for kk in (0..600).step_by(37) {
            let f = map_subcarrier_freq(&plan, 0, kk, &num).unwrap();
            let want = db_to_amp(-fext_coupling_db(&cable, f).unwrap());
            let ratio = k[kk][(0, 1)].norm() / k[kk][(0, 0)].norm();
            // off-diagonal uses interpolated bins; identity holds to grid accuracy
            assert!(
                (ratio - want).abs() / want < 1e-3,
                "ratio {ratio} vs {want} at k={kk}"
            );
        }
    }

    #[test]
    fn different_if_slots_do_not_couple() {
        let cable = CableSpec::default();
        let fe = FrontendSpec::default();
        let num = numerology_for_bw(10e6).unwrap();
        let plan = Sf2sfPlan {
            assignments: vec![
                Assignment {
                    rf_port: 0,
                    pair: 0,
                    f_if_hz: 100e6,
                },
                Assignment {
                    rf_port: 1,
                    pair: 0,
                    f_if_hz: 300e6,
                },
            ],
            guard_band_hz: 180e3,
        };
        assert!(validate_plan(&plan, &cable, &fe, 10e6).is_ok());
        let grid = uniform_grid_hz(1e6, 500e6, 1e6);
        let ch = build_cable_channel(&cable, &grid, 9).unwrap();
        let eq = design_passive_equalizer(&cable, 50.0, (10e6, 400e6)).unwrap();
        let k = compose_copper_section(&plan, &ch, &eq, &fe, &num).unwrap();
        for m in &k {
            assert_eq!(m[(0, 1)].norm(), 0.0);
            assert_eq!(m[(1, 0)].norm(), 0.0);
            assert!(m[(0, 0)].norm() > 0.0);
        }
    }

    #[test]
    fn copper_section_is_passive() {
        for f_if in [75e6, 175e6, 400e6] {
            let (k, _, _) = composed_fig3(f_if, 10e6);
            for m in &k {
                let sv = m.singular_values();
                assert!(sv[0] <= 1.0, "singular value {} > 1", sv[0]);
            }
        }
    }

    #[test]
    fn port_relabeling_permutes_rows_and_columns() {
        let (k, cable, plan) = composed_fig3(175e6, 5e6);
        let fe = FrontendSpec::default();
        let num = numerology_for_bw(5e6).unwrap();
        let swapped = Sf2sfPlan {
            assignments: vec![plan.assignments[1], plan.assignments[0]],
            guard_band_hz: plan.guard_band_hz,
        };
        let grid = uniform_grid_hz(1e6, 500e6, 1e6);
        let ch = build_cable_channel(&cable, &grid, 42).unwrap();
        let eq = design_passive_equalizer(&cable, 50.0, (10e6, 400e6)).unwrap();
        let k_swapped = compose_copper_section(&swapped, &ch, &eq, &fe, &num).unwrap();
        for kk in (0..300).step_by(50) {
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(k[kk][(i, j)], k_swapped[kk][(1 - i, 1 - j)]);
                }
            }
        }
    }

    #[test]
    fn diagonal_flat_within_tenth_db_at_design_length() {
        let (k, _, _) = composed_fig3(175e6, 20e6);
        let mags: Vec<f64> = k.iter().map(|m| m[(0, 0)].norm()).collect();
        let max = mags.iter().cloned().fold(0.0, f64::max);
        let min = mags.iter().cloned().fold(f64::INFINITY, f64::min);
        let spread_db = 20.0 * (max / min).log10();
        assert!(spread_db < 0.1, "diagonal spread {spread_db} dB");
    }

    #[test]
    fn composition_outside_grid_is_error() {
        let cable = CableSpec::default();
        let fe = FrontendSpec::default();
        let num = numerology_for_bw(10e6).unwrap();
        let plan = Sf2sfPlan::two_port_same_if(400e6);
        let grid = uniform_grid_hz(1e6, 200e6, 1e6); // too short for 400 MHz IF
        let ch = build_cable_channel(&cable, &grid, 5).unwrap();
        let eq = design_passive_equalizer(&cable, 50.0, (10e6, 400e6)).unwrap();
        let res = compose_copper_section(&plan, &ch, &eq, &fe, &num);
        assert!(matches!(
            res,
            Err(FrontendError::Cable(CableError::FrequencyOutOfRange { .. }))
        ));
    }
}

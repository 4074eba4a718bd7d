//! Measurement settings, Born-rule outcome probabilities and the correlation
//! estimator.
//!
//! Outcomes are indexed by their sign pattern with qubit 0 as the most
//! significant bit and `+` as 0, so index 0 is `+++` (h h h in the H/V
//! language of a σz measurement) and index 7 is `---`.

mod counts;
mod setting;

pub use counts::{correlation_from_counts, Correlation, CountTable};
pub use setting::{outcome_label, outcome_parity, parse_outcome_label, MeasurementSetting, Settings};

use crate::error::{Error, Result};
use crate::qcore::{Axis, DensityMatrix};

/// Born-rule probabilities of every outcome, p(s) = Tr[ρ ⊗ᵢ ½(I + sᵢ nᵢ·σ)].
/// Values within 1e-12 below zero are clamped.
pub fn outcome_probabilities(rho: &DensityMatrix, settings: &Settings) -> Result<Vec<f64>> {
    let n = settings.n_outcomes();
    if rho.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rho.dim(),
        });
    }
    let m = rho.matrix();
    Ok((0..n)
        .map(|k| {
            let v = settings.outcome_ket(k);
            let a = v.amplitudes();
            let p = a.dotc(&m.apply(a)).re;
            if p < 0.0 && p > -1e-12 {
                0.0
            } else {
                p.max(0.0)
            }
        })
        .collect())
}

/// Exact correlation Σ parity·p from the Born probabilities.
pub fn correlation_from_probabilities(probs: &[f64]) -> f64 {
    let n = probs.len().trailing_zeros() as usize;
    probs.iter().enumerate().map(|(k, p)| outcome_parity(k, n) * p).sum()
}

/// An outcome relabeling used to balance detector efficiencies: the physical
/// measurement negates the observables of the qubits in `mask`, and physical
/// outcome index `i` maps back to logical index `i ^ mask`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Relabeling {
    pub mask: u8,
}

impl Relabeling {
    pub const IDENTITY: Relabeling = Relabeling { mask: 0 };

    pub fn physical_settings(&self, logical: &Settings) -> Settings {
        logical.flipped(self.mask)
    }

    pub fn to_logical(&self, physical_outcome: usize) -> usize {
        physical_outcome ^ self.mask as usize
    }
}

/// The 2ⁿ relabelings that alternate which detector output reports the
/// positive outcome on each photon. Member 0 is the identity and the last
/// member flips every photon.
pub fn balanced_subsettings(settings: &Settings) -> Vec<Relabeling> {
    (0..settings.n_outcomes())
        .map(|m| Relabeling { mask: m as u8 })
        .collect()
}

/// All 3ⁿ Pauli setting combinations, x < y < z lexicographic with qubit 0
/// varying slowest.
pub fn tomography_settings(n_qubits: usize) -> Result<Vec<Settings>> {
    if !(1..=3).contains(&n_qubits) {
        return Err(Error::OutOfRange(format!("{n_qubits} qubits")));
    }
    let total = 3usize.pow(n_qubits as u32);
    Ok((0..total)
        .map(|mut k| {
            let mut axes = vec![Axis::X; n_qubits];
            for slot in axes.iter_mut().rev() {
                *slot = Axis::ALL[k % 3];
                k /= 3;
            }
            Settings::paulis(&axes)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{expectation, Ket};

    fn ghz_plus() -> DensityMatrix {
        DensityMatrix::from_ket(&Ket::ghz_plus())
    }

    #[test]
    fn ghz_zzz_populations() {
        let p = outcome_probabilities(&ghz_plus(), &Settings::paulis(&[Axis::Z; 3])).unwrap();
        for (k, v) in p.iter().enumerate() {
            let expected = if k == 0 || k == 7 { 0.5 } else { 0.0 };
            assert!((v - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn ghz_xxx_outcomes() {
        let p = outcome_probabilities(&ghz_plus(), &Settings::paulis(&[Axis::X; 3])).unwrap();
        // +++, +--, -+-, --+ have even numbers of minus signs.
        for (k, v) in p.iter().enumerate() {
            let expected = if k.count_ones() % 2 == 0 { 0.25 } else { 0.0 };
            assert!((v - expected).abs() < 1e-14, "outcome {k}");
        }
    }

    #[test]
    fn maximally_mixed_is_uniform() {
        let s = Settings::triple(
            MeasurementSetting::x(),
            MeasurementSetting::along([0.2, 0.3, 0.9]).unwrap(),
            MeasurementSetting::z(),
        );
        let p = outcome_probabilities(&DensityMatrix::maximally_mixed(8), &s).unwrap();
        assert!(p.iter().all(|v| (v - 0.125).abs() < 1e-14));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn probability_correlation_equals_expectation() {
        let rho = ghz_plus();
        let s = Settings::triple(
            MeasurementSetting::equatorial(0.3),
            MeasurementSetting::equatorial(-1.1),
            MeasurementSetting::along([0.1, 0.5, 0.2]).unwrap(),
        );
        let p = outcome_probabilities(&rho, &s).unwrap();
        let e = expectation(&rho, &s.observable()).unwrap();
        assert!((correlation_from_probabilities(&p) - e).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let s = Settings::paulis(&[Axis::Z; 2]);
        assert!(outcome_probabilities(&ghz_plus(), &s).is_err());
    }

    #[test]
    fn subsettings_shape() {
        let s = Settings::paulis(&[Axis::Z; 3]);
        let subs = balanced_subsettings(&s);
        assert_eq!(subs.len(), 8);
        assert_eq!(subs[0], Relabeling::IDENTITY);
        assert_eq!(subs[7].mask, 0b111);
        let phys = subs[7].physical_settings(&s);
        for k in 0..3 {
            assert_eq!(phys.get(k), MeasurementSetting::z().negated());
        }
        assert_eq!(subs[7].to_logical(0), 7);
    }

    #[test]
    fn tomography_setting_lists() {
        let three = tomography_settings(3).unwrap();
        assert_eq!(three.len(), 27);
        assert_eq!(three[0], Settings::paulis(&[Axis::X; 3]));
        assert_eq!(three[1], Settings::paulis(&[Axis::X, Axis::X, Axis::Y]));
        assert_eq!(three[26], Settings::paulis(&[Axis::Z; 3]));
        assert_eq!(tomography_settings(2).unwrap().len(), 9);
        for s in three {
            for m in s.iter() {
                let n: f64 = m.bloch().iter().map(|v| v * v).sum();
                assert!((n - 1.0).abs() < 1e-15);
            }
        }
    }
}

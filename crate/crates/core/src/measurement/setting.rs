use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{Axis, Ket, Observable, C64};

/// A ±1-valued single-photon polarization measurement n·σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSetting {
    bloch: [f64; 3],
}

impl MeasurementSetting {
    pub fn new(bloch: [f64; 3]) -> Result<Self> {
        let norm = bloch.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::OutOfRange(format!("bloch vector norm {norm} != 1")));
        }
        Ok(Self { bloch })
    }

    /// Normalizes `v` first.
    pub fn along(v: [f64; 3]) -> Result<Self> {
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::OutOfRange("zero bloch vector".into()));
        }
        Self::new([v[0] / norm, v[1] / norm, v[2] / norm])
    }

    pub fn axis(axis: Axis) -> Self {
        Self { bloch: axis.bloch() }
    }

    pub fn x() -> Self {
        Self::axis(Axis::X)
    }

    pub fn y() -> Self {
        Self::axis(Axis::Y)
    }

    pub fn z() -> Self {
        Self::axis(Axis::Z)
    }

    /// Equatorial setting cos θ·σx + sin θ·σy.
    pub fn equatorial(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { bloch: [c, s, 0.0] }
    }

    /// (σx ± σy)/√2 style combination of two axes with signs.
    pub fn combination(a: Axis, sa: f64, b: Axis, sb: f64) -> Self {
        let (va, vb) = (a.bloch(), b.bloch());
        let v = [0, 1, 2].map(|k| (sa * va[k] + sb * vb[k]) * FRAC_1_SQRT_2);
        Self::along(v).expect("orthogonal axes")
    }

    pub fn bloch(&self) -> [f64; 3] {
        self.bloch
    }

    pub fn negated(&self) -> Self {
        Self {
            bloch: self.bloch.map(|v| -v),
        }
    }

    pub fn observable(&self) -> Observable {
        Observable::bloch(self.bloch)
    }

    /// Eigenstate for outcome +1 (`plus = true`) or −1.
    pub fn eigenket(&self, plus: bool) -> Ket {
        let [x, y, z] = self.bloch;
        let theta = z.clamp(-1.0, 1.0).acos();
        let phi = y.atan2(x);
        let (s, c) = (theta / 2.0).sin_cos();
        let amps = if plus {
            vec![C64::new(c, 0.0), C64::from_polar(s, phi)]
        } else {
            vec![C64::new(s, 0.0), -C64::from_polar(c, phi)]
        };
        Ket::new(amps).expect("unit vector")
    }

    fn label(&self) -> String {
        let named = [("x", Axis::X), ("y", Axis::Y), ("z", Axis::Z)];
        for (name, axis) in named {
            let b = axis.bloch();
            if self.bloch.iter().zip(b).all(|(u, v)| (u - v).abs() < 1e-12) {
                return name.to_string();
            }
            if self.bloch.iter().zip(b).all(|(u, v)| (u + v).abs() < 1e-12) {
                return format!("-{name}");
            }
        }
        format!("({:.4},{:.4},{:.4})", self.bloch[0], self.bloch[1], self.bloch[2])
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// One setting per photon, mode order. Triples for three-photon runs, pairs
/// for heralded two-photon analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings(Vec<MeasurementSetting>);

impl Settings {
    pub fn new(settings: Vec<MeasurementSetting>) -> Result<Self> {
        if settings.is_empty() || settings.len() > 3 {
            return Err(Error::OutOfRange(format!(
                "{} settings; expected 1 to 3",
                settings.len()
            )));
        }
        Ok(Self(settings))
    }

    pub fn triple(a: MeasurementSetting, b: MeasurementSetting, c: MeasurementSetting) -> Self {
        Self(vec![a, b, c])
    }

    pub fn pair(a: MeasurementSetting, b: MeasurementSetting) -> Self {
        Self(vec![a, b])
    }

    pub fn paulis(axes: &[Axis]) -> Self {
        Self(axes.iter().map(|&a| MeasurementSetting::axis(a)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn n_outcomes(&self) -> usize {
        1 << self.0.len()
    }

    pub fn get(&self, qubit: usize) -> MeasurementSetting {
        self.0[qubit]
    }

    pub fn iter(&self) -> impl Iterator<Item = &MeasurementSetting> {
        self.0.iter()
    }

    /// Settings with the qubits whose bit is set in `mask` negated
    /// (bit n−1−k ↔ qubit k).
    pub fn flipped(&self, mask: u8) -> Self {
        let n = self.0.len();
        Self(
            self.0
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    if (mask >> (n - 1 - k)) & 1 == 1 {
                        s.negated()
                    } else {
                        *s
                    }
                })
                .collect(),
        )
    }

    /// Same settings up to sign-free float noise.
    pub fn approx_eq(&self, other: &Settings) -> bool {
        self.0.len() == other.0.len()
            && self
                .0
                .iter()
                .zip(&other.0)
                .all(|(a, b)| a.bloch.iter().zip(b.bloch).all(|(u, v)| (u - v).abs() < 1e-9))
    }

    /// Product eigenket for the outcome with index `outcome`.
    pub fn outcome_ket(&self, outcome: usize) -> Ket {
        let n = self.0.len();
        let mut ket: Option<Ket> = None;
        for (k, s) in self.0.iter().enumerate() {
            let plus = (outcome >> (n - 1 - k)) & 1 == 0;
            let e = s.eigenket(plus);
            ket = Some(match ket {
                None => e,
                Some(acc) => acc.tensor(&e),
            });
        }
        ket.expect("at least one qubit")
    }

    pub fn observable(&self) -> Observable {
        let mut it = self.0.iter();
        let first = it.next().expect("at least one qubit").observable();
        it.fold(first, |acc, s| acc.tensor(&s.observable()))
    }
}

impl fmt::Display for Settings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Product of ±1 outcome signs for outcome index `outcome` on `n` qubits.
pub fn outcome_parity(outcome: usize, n: usize) -> f64 {
    debug_assert!(outcome < (1 << n));
    if outcome.count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `"++-"` style label, qubit 0 first.
pub fn outcome_label(outcome: usize, n: usize) -> String {
    (0..n)
        .map(|k| if (outcome >> (n - 1 - k)) & 1 == 0 { '+' } else { '-' })
        .collect()
}

pub fn parse_outcome_label(label: &str) -> Option<usize> {
    if label.is_empty() || label.len() > 3 {
        return None;
    }
    label.chars().try_fold(0usize, |acc, ch| match ch {
        '+' => Some(acc << 1),
        '-' => Some((acc << 1) | 1),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{expectation, DensityMatrix};

    #[test]
    fn eigenkets_have_the_right_eigenvalues() {
        let settings = [
            MeasurementSetting::x(),
            MeasurementSetting::y(),
            MeasurementSetting::z(),
            MeasurementSetting::z().negated(),
            MeasurementSetting::along([0.3, -0.4, 0.5]).unwrap(),
        ];
        for s in settings {
            for plus in [true, false] {
                let rho = DensityMatrix::from_ket(&s.eigenket(plus));
                let e = expectation(&rho, &s.observable()).unwrap();
                assert!((e - if plus { 1.0 } else { -1.0 }).abs() < 1e-12, "{s} {plus}");
            }
        }
    }

    #[test]
    fn rejects_non_unit_bloch() {
        assert!(MeasurementSetting::new([1.0, 1.0, 0.0]).is_err());
        assert!(MeasurementSetting::along([0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn outcome_labels() {
        assert_eq!(outcome_label(0, 3), "+++");
        assert_eq!(outcome_label(1, 3), "++-");
        assert_eq!(outcome_label(6, 3), "--+");
        assert_eq!(parse_outcome_label("+-"), Some(1));
        assert_eq!(parse_outcome_label("+x"), None);
        for i in 0..8 {
            assert_eq!(parse_outcome_label(&outcome_label(i, 3)), Some(i));
        }
    }

    #[test]
    fn flipped_negates_selected_qubits() {
        let s = Settings::paulis(&[Axis::X, Axis::Y, Axis::Z]);
        let f = s.flipped(0b100);
        assert_eq!(f.get(0), MeasurementSetting::x().negated());
        assert_eq!(f.get(1), MeasurementSetting::y());
        assert_eq!(f.get(2), MeasurementSetting::z());
    }
}

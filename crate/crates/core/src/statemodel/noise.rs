//! Two-parameter noise family: dephasing of the |H…H⟩/|V…V⟩ coherence by a
//! factor γ followed by mixing with white noise of weight p.
//!
//! For a noisy GHZ state the fidelity and purity have closed forms,
//!
//! ```text
//! F(p, γ) = (1 − p)(1 + γ)/2 + p/8
//! P(p, γ) = (1 − p)²(1 + γ²)/2 + p(2 − p)/8
//! ```
//!
//! which is what [`calibrate_noise`] inverts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{ComplexMatrix, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Weight p of the maximally mixed component.
    pub white_noise: f64,
    /// Factor γ multiplying the |H…H⟩⟨V…V| coherence.
    pub coherence: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::NONE
    }
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel {
        white_noise: 0.0,
        coherence: 1.0,
    };

    pub fn new(white_noise: f64, coherence: f64) -> Result<Self> {
        let m = Self { white_noise, coherence };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.white_noise) {
            return Err(Error::OutOfRange(format!(
                "white-noise weight {} not in [0, 1]",
                self.white_noise
            )));
        }
        if !(0.0..=1.0).contains(&self.coherence) {
            return Err(Error::OutOfRange(format!(
                "coherence scale {} not in [0, 1]",
                self.coherence
            )));
        }
        Ok(())
    }

    /// Three-qubit GHZ fidelity predicted by the closed form.
    pub fn ghz_fidelity(&self) -> f64 {
        ghz_fidelity(self.white_noise, self.coherence)
    }

    /// Three-qubit GHZ purity predicted by the closed form.
    pub fn ghz_purity(&self) -> f64 {
        ghz_purity(self.white_noise, self.coherence)
    }

    /// Residual visibility of GHZ equatorial correlations, (1 − p)γ.
    pub fn visibility(&self) -> f64 {
        (1.0 - self.white_noise) * self.coherence
    }

    /// Noise reproducing the tomography fidelity and purity the experiment
    /// reports, as closely as the family allows.
    ///
    /// The pair (0.862, 0.776) lies outside the family: the nearest point is
    /// pure dephasing with γ ≈ 0.737 (F ≈ 0.8685, P ≈ 0.7716).
    pub fn reference() -> Self {
        match calibrate_noise(MEASURED_FIDELITY, MEASURED_PURITY) {
            Ok(m) => m,
            Err(Error::Unreachable {
                nearest_p,
                nearest_gamma,
                ..
            }) => Self {
                white_noise: nearest_p,
                coherence: nearest_gamma,
            },
            Err(e) => unreachable!("calibration of fixed targets failed: {e}"),
        }
    }
}

pub const MEASURED_FIDELITY: f64 = 0.862;
pub const MEASURED_PURITY: f64 = 0.776;

fn ghz_fidelity(p: f64, gamma: f64) -> f64 {
    (1.0 - p) * (1.0 + gamma) / 2.0 + p / 8.0
}

fn ghz_purity(p: f64, gamma: f64) -> f64 {
    (1.0 - p).powi(2) * (1.0 + gamma * gamma) / 2.0 + p * (2.0 - p) / 8.0
}

/// Dephases the coherence between the first and last basis states by γ, then
/// mixes with white noise: (1 − p)ρ′ + p·I/d.
pub fn apply_noise(rho: &DensityMatrix, noise: &NoiseModel) -> Result<DensityMatrix> {
    noise.validate()?;
    let dim = rho.dim();
    let mut m = rho.matrix().clone();
    let last = dim - 1;
    if last > 0 {
        m.set(0, last, m.get(0, last) * noise.coherence);
        m.set(last, 0, m.get(last, 0) * noise.coherence);
    }
    let mixed = &m.scale(1.0 - noise.white_noise) + &ComplexMatrix::identity(dim).scale(noise.white_noise / dim as f64);
    DensityMatrix::new(mixed)
}

/// Finds (p, γ) such that the noisy GHZ state has the target fidelity and
/// purity to within 1e-6.
///
/// Eliminating γ through the fidelity constraint leaves a one-dimensional
/// root problem in p along which the purity is monotone, solved by
/// bisection. When no point of [0,1]² satisfies both targets the error
/// carries the least-squares nearest point.
pub fn calibrate_noise(target_fidelity: f64, target_purity: f64) -> Result<NoiseModel> {
    if !(0.0..=1.0).contains(&target_fidelity) || !(0.0..=1.0).contains(&target_purity) {
        return Err(Error::OutOfRange(format!(
            "targets (F={target_fidelity}, P={target_purity}) outside [0, 1]"
        )));
    }
    let f = target_fidelity;
    let gamma_of = |p: f64| 2.0 * (f - p / 8.0) / (1.0 - p) - 1.0;
    // γ(p) ∈ [0, 1] restricts p to this interval.
    let p_lo = (4.0 * (1.0 - 2.0 * f) / 3.0).max(0.0);
    let p_hi = (8.0 * (1.0 - f) / 7.0).min(1.0);

    if p_lo <= p_hi {
        let residual = |p: f64| {
            if p >= 1.0 {
                // F = 1/8 exactly at p = 1; purity is then 1/8.
                return 0.125 - target_purity;
            }
            ghz_purity(p, gamma_of(p).clamp(0.0, 1.0)) - target_purity
        };
        let (r_lo, r_hi) = (residual(p_lo), residual(p_hi));
        let solution = if r_lo.abs() <= 1e-12 {
            Some(p_lo)
        } else if r_hi.abs() <= 1e-12 {
            Some(p_hi)
        } else if r_lo.signum() != r_hi.signum() {
            let (mut a, mut b, mut ra) = (p_lo, p_hi, r_lo);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                let rm = residual(mid);
                if rm.signum() == ra.signum() {
                    a = mid;
                    ra = rm;
                } else {
                    b = mid;
                }
                if b - a < 1e-15 {
                    break;
                }
            }
            Some(0.5 * (a + b))
        } else {
            None
        };
        if let Some(p) = solution {
            let gamma = if p >= 1.0 { 1.0 } else { gamma_of(p).clamp(0.0, 1.0) };
            let model = NoiseModel {
                white_noise: p,
                coherence: gamma,
            };
            if (model.ghz_fidelity() - f).abs() < 1e-6 && (model.ghz_purity() - target_purity).abs() < 1e-6 {
                return Ok(model);
            }
        }
    }

    let (p, gamma, residual) = nearest_point(target_fidelity, target_purity);
    Err(Error::Unreachable {
        nearest_p: p,
        nearest_gamma: gamma,
        residual,
    })
}

/// Least-squares nearest (p, γ) ∈ [0,1]² in (F, P) space: grid search then a
/// shrinking pattern search.
fn nearest_point(f: f64, purity: f64) -> (f64, f64, f64) {
    let cost = |p: f64, g: f64| (ghz_fidelity(p, g) - f).powi(2) + (ghz_purity(p, g) - purity).powi(2);
    let mut best = (0.0, 0.0, f64::INFINITY);
    const N: usize = 200;
    for i in 0..=N {
        for j in 0..=N {
            let (p, g) = (i as f64 / N as f64, j as f64 / N as f64);
            let c = cost(p, g);
            if c < best.2 {
                best = (p, g, c);
            }
        }
    }
    let (mut p, mut g, mut c) = best;
    let mut step = 1.0 / N as f64;
    while step > 1e-13 {
        let mut moved = false;
        for (dp, dg) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
            let (np, ng) = ((p + dp).clamp(0.0, 1.0), (g + dg).clamp(0.0, 1.0));
            let nc = cost(np, ng);
            if nc < c {
                (p, g, c) = (np, ng, nc);
                moved = true;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (p, g, c.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{fidelity_pure, purity, validate_physical, Ket};
    use crate::statemodel::{make_ghz, GhzParams};

    fn ghz_minus() -> DensityMatrix {
        DensityMatrix::from_ket(&make_ghz(GhzParams::MINUS))
    }

    #[test]
    fn identity_noise_leaves_state_unchanged() {
        let rho = ghz_minus();
        let out = apply_noise(&rho, &NoiseModel::NONE).unwrap();
        assert!(out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
    }

    #[test]
    fn full_dephasing() {
        let out = apply_noise(&ghz_minus(), &NoiseModel::new(0.0, 0.0).unwrap()).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                let expected = if r == c && (r == 0 || r == 7) { 0.5 } else { 0.0 };
                assert!((out.get(r, c).re - expected).abs() < 1e-15);
                assert!(out.get(r, c).im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn noisy_fidelity_matches_linear_algebra() {
        let out = apply_noise(&ghz_minus(), &NoiseModel::new(0.1, 0.9).unwrap()).unwrap();
        let f = fidelity_pure(&out, &Ket::ghz_minus()).unwrap();
        assert!((f - (0.9 * 0.95 + 0.1 / 8.0)).abs() < 1e-12);
        assert!((f - 0.8675).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(NoiseModel::new(1.1, 0.5).is_err());
        assert!(NoiseModel::new(0.5, -0.1).is_err());
    }

    #[test]
    fn noise_grid_stays_physical() {
        let rho = ghz_minus();
        for i in 0..=20 {
            for j in 0..=20 {
                let m = NoiseModel::new(i as f64 / 20.0, j as f64 / 20.0).unwrap();
                let out = apply_noise(&rho, &m).unwrap();
                validate_physical(out.into_matrix(), 1e-10).unwrap();
            }
        }
    }

    #[test]
    fn closed_forms_agree_with_matrices() {
        for &(p, g) in &[(0.0, 1.0), (0.2, 0.3), (0.7, 0.9), (1.0, 0.0)] {
            let m = NoiseModel::new(p, g).unwrap();
            let rho = apply_noise(&ghz_minus(), &m).unwrap();
            assert!((fidelity_pure(&rho, &Ket::ghz_minus()).unwrap() - m.ghz_fidelity()).abs() < 1e-12);
            assert!((purity(&rho) - m.ghz_purity()).abs() < 1e-12);
        }
    }

    #[test]
    fn calibrate_trivial_targets() {
        let m = calibrate_noise(1.0, 1.0).unwrap();
        assert_eq!((m.white_noise, m.coherence), (0.0, 1.0));
        let m = calibrate_noise(0.5, 0.5).unwrap();
        assert!(m.white_noise.abs() < 1e-9 && m.coherence.abs() < 1e-9);
    }

    #[test]
    fn calibrate_reachable_target_roundtrips() {
        let truth = NoiseModel::new(0.12, 0.8).unwrap();
        let m = calibrate_noise(truth.ghz_fidelity(), truth.ghz_purity()).unwrap();
        assert!((m.white_noise - 0.12).abs() < 1e-6);
        assert!((m.coherence - 0.8).abs() < 1e-6);
        let rho = apply_noise(&ghz_minus(), &m).unwrap();
        assert!((fidelity_pure(&rho, &Ket::ghz_minus()).unwrap() - truth.ghz_fidelity()).abs() < 1e-6);
        assert!((purity(&rho) - truth.ghz_purity()).abs() < 1e-6);
    }

    #[test]
    fn reported_targets_are_outside_the_family() {
        // At F = 0.862 the purest member is p = 0, γ = 0.724 with P = 0.762.
        match calibrate_noise(MEASURED_FIDELITY, MEASURED_PURITY) {
            Err(Error::Unreachable {
                nearest_p,
                nearest_gamma,
                residual,
            }) => {
                assert!(nearest_p.abs() < 1e-9);
                assert!((nearest_gamma - 0.7370).abs() < 1e-3);
                assert!(residual < 0.01);
            }
            other => panic!("expected Unreachable, got {other:?}"),
        }
        let m = NoiseModel::reference();
        let rho = apply_noise(&ghz_minus(), &m).unwrap();
        assert!((fidelity_pure(&rho, &Ket::ghz_minus()).unwrap() - 0.8685).abs() < 1e-3);
        assert!((purity(&rho) - 0.7716).abs() < 1e-3);
    }
}

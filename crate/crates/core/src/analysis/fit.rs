use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One point of a phase scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub phase: f64,
    pub value: f64,
    /// Standard error; zero for exact values.
    pub sigma: f64,
}

/// E(φ) = A cos(φ + θ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub amplitude: f64,
    pub amplitude_sigma: f64,
    pub phase_offset: f64,
    pub chi2: f64,
    pub dof: usize,
    /// Amplitude at least three standard errors from zero.
    pub significant: bool,
}

/// Least-squares fit of a cos φ + b sin φ, weighted by 1/σ² when every
/// point has a positive σ and unweighted otherwise. With unweighted points
/// the amplitude error comes from the residual scatter.
pub fn fit_sinusoid(points: &[ScanPoint]) -> Result<SinusoidFit> {
    if points.len() < 3 {
        return Err(Error::OutOfRange(format!(
            "{} scan points; need at least 3",
            points.len()
        )));
    }
    let weighted = points.iter().all(|p| p.sigma > 0.0);
    let weight = |p: &ScanPoint| if weighted { p.sigma.powi(-2) } else { 1.0 };
    let mut normal = Matrix2::zeros();
    let mut rhs = Vector2::zeros();
    for p in points {
        let basis = Vector2::new(p.phase.cos(), p.phase.sin());
        normal += basis * basis.transpose() * weight(p);
        rhs += basis * (p.value * weight(p));
    }
    let cov = normal
        .try_inverse()
        .ok_or_else(|| Error::OutOfRange("scan phases do not determine a sinusoid".into()))?;
    let ab = cov * rhs;
    let chi2: f64 = points
        .iter()
        .map(|p| (p.value - ab[0] * p.phase.cos() - ab[1] * p.phase.sin()).powi(2) * weight(p))
        .sum();
    let dof = points.len() - 2;
    let cov = if weighted { cov } else { cov * (chi2 / dof as f64) };
    let amplitude = ab.norm();
    // Gradient of |(a, b)|; at zero amplitude use the larger marginal error.
    let amplitude_sigma = if amplitude > 0.0 {
        let g = ab / amplitude;
        (g.transpose() * cov * g)[0].max(0.0).sqrt()
    } else {
        cov[(0, 0)].max(cov[(1, 1)]).sqrt()
    };
    Ok(SinusoidFit {
        amplitude,
        amplitude_sigma,
        phase_offset: (-ab[1]).atan2(ab[0]),
        chi2,
        dof,
        significant: amplitude > 3.0 * amplitude_sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn scan(f: impl Fn(f64) -> f64, sigma: f64) -> Vec<ScanPoint> {
        (0..12)
            .map(|k| {
                let phase = 2.0 * PI * k as f64 / 12.0;
                ScanPoint {
                    phase,
                    value: f(phase),
                    sigma,
                }
            })
            .collect()
    }

    #[test]
    fn recovers_exact_cosine() {
        let fit = fit_sinusoid(&scan(|p| 0.82 * (p + 0.3).cos(), 0.0)).unwrap();
        assert!((fit.amplitude - 0.82).abs() < 1e-12);
        assert!((fit.phase_offset - 0.3).abs() < 1e-12);
        assert!(fit.chi2 < 1e-20 && fit.significant);
    }

    #[test]
    fn zero_signal_is_not_significant() {
        let wiggle = |p: f64| 0.01 * (3.0 * p).sin();
        let fit = fit_sinusoid(&scan(wiggle, 0.05)).unwrap();
        assert!(fit.amplitude < 1e-12);
        assert!(!fit.significant);
        assert_eq!(fit.dof, 10);
    }

    #[test]
    fn weighted_error_matches_closed_form() {
        // Uniform phases and σ: Var(a) = Var(b) = 2σ²/n.
        let fit = fit_sinusoid(&scan(|p| p.cos(), 0.05)).unwrap();
        let oracle = (2.0 * 0.05f64.powi(2) / 12.0).sqrt();
        assert!((fit.amplitude_sigma - oracle).abs() < 1e-12);
    }

    #[test]
    fn too_few_points() {
        assert!(fit_sinusoid(&scan(|p| p.cos(), 0.1)[..2]).is_err());
    }
}

//! Entanglement visibility versus fiber-length mismatch in the second source.
//!
//! Photons leaving the two arms acquire different quadratic spectral phases
//! when the pigtail fibers differ in length by ΔL. With a Gaussian intensity
//! spectrum of angular-frequency standard deviation σ and group-velocity
//! dispersion β₂, the overlap of the two spectral amplitudes is
//!
//! ```text
//! O(ΔL) = ∫ |A(ω)|² exp(i·½·β₂·ΔL·(ω − ω₀)²) dω = (1 − i·β₂·ΔL·σ²)^(−1/2)
//! ```
//!
//! and the visibility is V₀·|O(ΔL)| = V₀·(1 + (β₂ΔLσ²)²)^(−1/4).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DispersionParams {
    /// Intensity FWHM of the downconverted spectrum, nm.
    pub bandwidth_fwhm: f64,
    /// nm
    pub center_wavelength: f64,
    /// Group-velocity dispersion, ps² per metre.
    pub gvd_coefficient: f64,
    /// Visibility with perfectly matched fibers.
    pub max_visibility: f64,
}

impl Default for DispersionParams {
    fn default() -> Self {
        Self {
            bandwidth_fwhm: 28.0,
            center_wavelength: 1550.0,
            gvd_coefficient: 2.8e-2,
            max_visibility: 0.90,
        }
    }
}

impl DispersionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_fwhm > 0.0 && self.center_wavelength > 0.0) {
            return Err(Error::OutOfRange("bandwidth and wavelength must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.max_visibility) {
            return Err(Error::OutOfRange(format!(
                "max visibility {} not in [0, 1]",
                self.max_visibility
            )));
        }
        Ok(())
    }

    /// Standard deviation of the intensity spectrum in angular frequency, rad/ps.
    pub fn sigma_omega(&self) -> f64 {
        let lambda = self.center_wavelength * 1e-9;
        let fwhm_hz = SPEED_OF_LIGHT * self.bandwidth_fwhm * 1e-9 / (lambda * lambda);
        let fwhm_rad_per_ps = 2.0 * std::f64::consts::PI * fwhm_hz * 1e-12;
        fwhm_rad_per_ps / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
    }
}

/// Visibility for a fiber-length mismatch `dl` in metres.
pub fn visibility_vs_mismatch(dl: f64, disp: &DispersionParams) -> f64 {
    let s2 = disp.sigma_omega().powi(2);
    let x = disp.gvd_coefficient * dl * s2;
    disp.max_visibility * (1.0 + x * x).powf(-0.25)
}

/// Fiber length to add to the shorter arm, among `candidates`, that maximizes
/// the visibility given an initial mismatch. The residual mismatch is
/// `initial_mismatch − added`.
pub fn optimal_compensation(initial_mismatch: f64, candidates: &[f64], disp: &DispersionParams) -> Option<f64> {
    candidates.iter().copied().max_by(|a, b| {
        visibility_vs_mismatch(initial_mismatch - a, disp)
            .total_cmp(&visibility_vs_mismatch(initial_mismatch - b, disp))
    })
}

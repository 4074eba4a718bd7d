//! Source-state model: the GHZ family with noise, heralding projections, and
//! the dispersion visibility model.

mod dispersion;
mod ghz;
mod herald;
mod noise;

pub use dispersion::{optimal_compensation, visibility_vs_mismatch, DispersionParams};
pub use ghz::{make_ghz, GhzParams};
pub use herald::{herald_project, heralded_target, HeraldOutcome, HeraldSetting, HeraldedState};
pub use noise::{apply_noise, calibrate_noise, NoiseModel, MEASURED_FIDELITY, MEASURED_PURITY};

use crate::error::Result;
use crate::qcore::DensityMatrix;

/// Noisy GHZ state of the given phase.
pub fn noisy_ghz(params: GhzParams, noise: &NoiseModel) -> Result<DensityMatrix> {
    apply_noise(&DensityMatrix::from_ket(&make_ghz(params)), noise)
}

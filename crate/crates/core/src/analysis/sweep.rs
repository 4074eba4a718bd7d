use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::qcore::DensityMatrix;
use crate::statemodel::{herald_project, heralded_target, HeraldOutcome, HeraldSetting};
use crate::tomography::{mle_reconstruct, MleOptions, TomographyDataset};

/// How the two-qubit tomography data of each heralded state is generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    /// Expected counts, no shot noise.
    Exact,
    /// Multinomial counts per Pauli setting.
    Multinomial(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPoint {
    pub beta: f64,
    pub plus_fidelity: f64,
    pub minus_fidelity: f64,
    pub plus_probability: f64,
    pub minus_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Heralding qubit, 0-based.
    pub herald_mode: usize,
    /// Phase of the ideal source state, used for the targets.
    pub ghz_phase: f64,
    pub sampling: Sampling,
    pub seed: u64,
    pub mle: MleOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            herald_mode: 1,
            ghz_phase: std::f64::consts::PI,
            sampling: Sampling::Exact,
            seed: 0,
            mle: MleOptions::default(),
        }
    }
}

/// For each β, heralds both outcomes of |χ(β)⟩, reconstructs each heralded
/// state by tomography and reports its fidelity with the ideal heralded
/// state. Point `i`, outcome `k` samples from substream `2i + k` of the seed.
pub fn beta_sweep(rho3: &DensityMatrix, betas: &[f64], options: &SweepOptions) -> Result<Vec<BetaPoint>> {
    let jobs: Vec<(usize, HeraldOutcome)> = (0..betas.len())
        .flat_map(|i| [(i, HeraldOutcome::Plus), (i, HeraldOutcome::Minus)])
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(i, outcome)| {
            let setting = HeraldSetting::new(betas[i], outcome)?;
            let heralded = herald_project(rho3, options.herald_mode, setting)?;
            let Some(state) = heralded.state else {
                return Ok((0.0, heralded.probability));
            };
            let data = match options.sampling {
                Sampling::Exact => TomographyDataset::exact(&state, 1e6)?,
                Sampling::Multinomial(n) => {
                    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
                    rng.set_stream((2 * i + (outcome == HeraldOutcome::Minus) as usize) as u64);
                    TomographyDataset::sampled(&state, n, &mut rng)?
                }
            };
            let fit = mle_reconstruct(&data, &options.mle)?.require_converged()?;
            let f = fit.fidelity(&heralded_target(options.ghz_phase, setting))?;
            Ok((f, heralded.probability))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(betas
        .iter()
        .enumerate()
        .map(|(i, &beta)| BetaPoint {
            beta,
            plus_fidelity: results[2 * i].0,
            minus_fidelity: results[2 * i + 1].0,
            plus_probability: results[2 * i].1,
            minus_probability: results[2 * i + 1].1,
        })
        .collect())
}

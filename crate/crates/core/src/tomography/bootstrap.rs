use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mle_reconstruct, MleOptions, TomographyDataset};
use crate::error::{Error, Result};
use crate::qcore::Ket;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub fidelity_mean: f64,
    pub fidelity_sd: f64,
    pub purity_mean: f64,
    pub purity_sd: f64,
    /// Resamples that reconstructed successfully.
    pub n_ok: usize,
    /// Resamples whose reconstruction failed or did not converge.
    pub n_failed: usize,
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Multinomial bootstrap of fidelity with `target` and purity. Resample `i`
/// draws from substream `i` of `seed`, so the result does not depend on
/// thread scheduling.
pub fn bootstrap(
    data: &TomographyDataset,
    target: &Ket,
    n_resamples: usize,
    seed: u64,
    options: &MleOptions,
) -> Result<BootstrapSummary> {
    if n_resamples < 2 {
        return Err(Error::OutOfRange(format!("{n_resamples} resamples; need at least 2")));
    }
    let outcomes: Vec<Option<(f64, f64)>> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let r = data
                .resample(&mut rng)
                .and_then(|d| mle_reconstruct(&d, options))
                .and_then(|r| r.require_converged())
                .ok()?;
            Some((r.fidelity(target).ok()?, r.purity))
        })
        .collect();
    let ok: Vec<(f64, f64)> = outcomes.iter().flatten().copied().collect();
    if ok.len() < 2 {
        return Err(Error::OutOfRange(format!(
            "only {} of {n_resamples} resamples reconstructed",
            ok.len()
        )));
    }
    let (fidelity_mean, fidelity_sd) = mean_sd(&ok.iter().map(|x| x.0).collect::<Vec<_>>());
    let (purity_mean, purity_sd) = mean_sd(&ok.iter().map(|x| x.1).collect::<Vec<_>>());
    Ok(BootstrapSummary {
        fidelity_mean,
        fidelity_sd,
        purity_mean,
        purity_sd,
        n_ok: ok.len(),
        n_failed: n_resamples - ok.len(),
    })
}

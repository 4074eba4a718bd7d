use crate::error::{Error, Result};
use crate::measurement::{outcome_parity, Correlation, Settings};
use crate::qcore::Axis;
use crate::tomography::{SettingData, TomographyDataset};

fn pauli_correlation(e: &SettingData) -> Result<(f64, f64, f64)> {
    let total = e.total();
    if total <= 0.0 {
        return Err(Error::EmptyTable);
    }
    let n = e.settings.n_qubits();
    let value = e
        .counts
        .iter()
        .enumerate()
        .map(|(k, c)| outcome_parity(k, n) * c)
        .sum::<f64>()
        / total;
    Ok((value, (1.0 - value * value).max(0.0) / total, total))
}

/// Correlation of product settings from Pauli data:
/// E(n₁, …, nₖ) = Σ n₁ᵢ⋯nₖⱼ ⟨σᵢ⊗⋯⊗σⱼ⟩, each Pauli correlation taken from
/// its own setting and the variances added with squared coefficients.
/// `total` counts the events of every Pauli setting used.
pub fn derived_correlation(data: &TomographyDataset, settings: &Settings) -> Result<Correlation> {
    let n = settings.n_qubits();
    if n != data.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: data.n_qubits(),
            got: n,
        });
    }
    let blochs: Vec<[f64; 3]> = settings.iter().map(|s| s.bloch()).collect();
    let (mut value, mut variance, mut total) = (0.0, 0.0, 0.0);
    for combo in 0..3usize.pow(n as u32) {
        let axes: Vec<usize> = (0..n).map(|q| combo / 3usize.pow((n - 1 - q) as u32) % 3).collect();
        let coefficient: f64 = axes.iter().zip(&blochs).map(|(&a, b)| b[a]).product();
        if coefficient.abs() < 1e-12 {
            continue;
        }
        let pauli = Settings::paulis(&axes.iter().map(|&a| Axis::ALL[a]).collect::<Vec<_>>());
        let entry = data
            .entries()
            .iter()
            .find(|e| e.settings.approx_eq(&pauli))
            .ok_or_else(|| Error::MissingSetting(pauli.to_string()))?;
        let (e, var, t) = pauli_correlation(entry)?;
        value += coefficient * e;
        variance += coefficient * coefficient * var;
        total += t;
    }
    Ok(Correlation {
        value,
        sigma: variance.sqrt(),
        total: total.round() as u64,
    })
}

use super::TomographyDataset;
use crate::error::{Error, Result};
use crate::measurement::outcome_parity;
use crate::qcore::{pauli, tensor_all, Axis, ComplexMatrix};

/// Pauli factor for code 0 (identity), 1 (x), 2 (y) or 3 (z).
pub(super) fn factor(code: usize) -> ComplexMatrix {
    match code {
        0 => ComplexMatrix::identity(2),
        c => pauli(Axis::ALL[c - 1]).matrix().clone(),
    }
}

pub(super) fn codes(index: usize, n: usize) -> Vec<usize> {
    (0..n).map(|q| (index >> (2 * (n - 1 - q))) & 3).collect()
}

/// Estimated ⟨P⟩ for the Pauli string `codes`, pooling every setting whose
/// axes agree on the non-identity positions and marginalizing the rest.
fn pauli_estimate(data: &TomographyDataset, codes: &[usize]) -> Result<f64> {
    let keep: Vec<usize> = (0..codes.len()).filter(|&q| codes[q] != 0).collect();
    if keep.is_empty() {
        return Ok(1.0);
    }
    let n = data.n_qubits();
    let (mut signed, mut total) = (0.0, 0.0);
    for e in data.entries() {
        let matches = keep.iter().all(|&q| {
            let axis = Axis::ALL[codes[q] - 1].bloch();
            e.settings
                .get(q)
                .bloch()
                .iter()
                .zip(axis)
                .all(|(u, v)| (u - v).abs() < 1e-9)
        });
        if !matches {
            continue;
        }
        for (k, &c) in e.counts.iter().enumerate() {
            let bits = keep
                .iter()
                .fold(0usize, |acc, &q| (acc << 1) | ((k >> (n - 1 - q)) & 1));
            signed += outcome_parity(bits, keep.len()) * c;
        }
        total += e.total();
    }
    if total == 0.0 {
        return Err(Error::IncompleteData(format!("no counts for Pauli string {codes:?}")));
    }
    Ok(signed / total)
}

/// ρ = 2⁻ⁿ Σ_P ⟨P⟩ P over all 4ⁿ Pauli strings. Hermitian with unit trace
/// but not necessarily positive.
pub fn linear_inversion(data: &TomographyDataset) -> Result<ComplexMatrix> {
    let n = data.n_qubits();
    let dim = 1 << n;
    let mut rho = ComplexMatrix::zeros(dim);
    for index in 0..(1usize << (2 * n)) {
        let c = codes(index, n);
        let e = pauli_estimate(data, &c)?;
        let factors: Vec<ComplexMatrix> = c.iter().map(|&k| factor(k)).collect();
        rho = &rho + &tensor_all(&factors).scale(e);
    }
    Ok(rho.scale(1.0 / dim as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{expectation, random_density_matrix, trace_distance, DensityMatrix, Ket, Observable};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_ghz_minus() {
        let ghz = DensityMatrix::from_ket(&Ket::ghz_minus());
        let d = TomographyDataset::exact(&ghz, 1.0).unwrap();
        let li = linear_inversion(&d).unwrap();
        assert!(li.max_abs_diff(ghz.matrix()) < 1e-12);
    }

    #[test]
    fn exact_maximally_mixed() {
        let mixed = DensityMatrix::maximally_mixed(8);
        let li = linear_inversion(&TomographyDataset::exact(&mixed, 1.0).unwrap()).unwrap();
        assert!(li.max_abs_diff(mixed.matrix()) < 1e-12);
    }

    #[test]
    fn pauli_estimates_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in [2usize, 3] {
            let rho = random_density_matrix(1 << n, 1 << n, &mut rng);
            let d = TomographyDataset::exact(&rho, 1.0).unwrap();
            for index in 0..(1usize << (2 * n)) {
                let c = codes(index, n);
                let factors: Vec<ComplexMatrix> = c.iter().map(|&k| factor(k)).collect();
                let obs = Observable::new(tensor_all(&factors)).unwrap();
                let direct = expectation(&rho, &obs).unwrap();
                assert!((pauli_estimate(&d, &c).unwrap() - direct).abs() < 1e-12);
            }
            let li = linear_inversion(&d).unwrap();
            assert!(trace_distance(&li, rho.matrix()).unwrap() < 1e-10);
        }
    }
}

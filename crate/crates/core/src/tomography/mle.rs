use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::linear::{codes, factor};
use super::TomographyDataset;
use crate::error::{Error, Result};
use crate::qcore::{
    fidelity_pure, purity, tensor_all, validate_physical, ComplexMatrix, DensityMatrix, Ket, C64, PHYSICAL_TOL,
};

const PROBABILITY_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MleOptions {
    /// Stop once the log-likelihood gain per iteration, relative to its
    /// magnitude, drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub rho: DensityMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    /// False when `max_iter` ran out; `rho` is then the best iterate.
    pub converged: bool,
    pub purity: f64,
}

impl ReconstructionResult {
    pub fn fidelity(&self, target: &Ket) -> Result<f64> {
        fidelity_pure(&self.rho, target)
    }

    /// Turns an unconverged result into [`Error::NonConvergence`].
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergence {
                iterations: self.iterations,
            })
        }
    }
}

/// Outcome projectors as columns of `kets`, with their counts.
struct Problem {
    kets: DMatrix<C64>,
    counts: Vec<f64>,
    total: f64,
}

impl Problem {
    fn new(data: &TomographyDataset) -> Result<Self> {
        let dim = 1usize << data.n_qubits();
        let mut columns = Vec::new();
        let mut counts = Vec::new();
        for (index, e) in data.entries().iter().enumerate() {
            if e.total() <= 0.0 {
                return Err(Error::DegenerateData { index });
            }
            for (k, &c) in e.counts.iter().enumerate() {
                if c > 0.0 {
                    columns.push(e.settings.outcome_ket(k).amplitudes().clone());
                    counts.push(c);
                }
            }
        }
        let kets = DMatrix::from_columns(&columns);
        debug_assert_eq!(kets.nrows(), dim);
        let total = counts.iter().sum();
        Ok(Self { kets, counts, total })
    }

    fn probabilities(&self, rho: &DMatrix<C64>) -> Vec<f64> {
        let rv = rho * &self.kets;
        (0..self.kets.ncols())
            .map(|j| {
                let p = self.kets.column(j).dotc(&rv.column(j)).re;
                p.max(PROBABILITY_FLOOR)
            })
            .collect()
    }

    fn log_likelihood(&self, p: &[f64]) -> f64 {
        self.counts.iter().zip(p).map(|(n, p)| n * p.ln()).sum()
    }

    /// R = Σ (N_j / p_j) |ψ_j⟩⟨ψ_j| / N.
    fn r_operator(&self, p: &[f64]) -> DMatrix<C64> {
        let mut weighted = self.kets.clone();
        for (j, mut col) in weighted.column_iter_mut().enumerate() {
            col *= C64::new(self.counts[j] / p[j] / self.total, 0.0);
        }
        weighted * self.kets.adjoint()
    }
}

fn normalized(m: DMatrix<C64>) -> DMatrix<C64> {
    let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let tr = h.trace().re;
    h / C64::new(tr, 0.0)
}

/// Multinomial log-likelihood Σ N ln p(ρ) of `rho` under `data`.
pub fn log_likelihood(data: &TomographyDataset, rho: &DensityMatrix) -> Result<f64> {
    let problem = Problem::new(data)?;
    let p = problem.probabilities(rho.matrix().as_nalgebra());
    Ok(problem.log_likelihood(&p))
}

/// Euclidean projection of a Hermitian matrix onto the unit-trace PSD set:
/// eigenvalues are projected onto the probability simplex.
fn project_to_states(m: &DMatrix<C64>) -> DMatrix<C64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = nalgebra::SymmetricEigen::new(h);
    let mut sorted: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut shift = 0.0;
    let mut acc = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        acc += v;
        let t = (acc - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            shift = t;
        }
    }
    let d = eig.eigenvalues.map(|l| C64::new((l - shift).max(0.0), 0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.adjoint()
}

/// Σ N ln(p'/p), free of cancellation against the full log-likelihood.
fn gain(counts: &[f64], new: &[f64], old: &[f64]) -> f64 {
    counts
        .iter()
        .zip(new.iter().zip(old))
        .map(|(n, (a, b))| n * ((a - b) / b).ln_1p())
        .sum()
}

/// Newton steps on the log-likelihood over unit-trace Hermitian matrices in
/// Pauli coordinates. Near the optimum likelihood differences fall below
/// rounding error while the fixed-point iteration is still far from machine
/// precision. A step is kept only while the iterate stays positive
/// semidefinite and the gradient shrinks, so boundary optima are untouched.
fn newton_polish(problem: &Problem, mut rho: DMatrix<C64>, n: usize) -> DMatrix<C64> {
    let dim = 1usize << n;
    let strings: Vec<DMatrix<C64>> = (1..(1usize << (2 * n)))
        .map(|index| {
            let factors: Vec<ComplexMatrix> = codes(index, n).iter().map(|&k| factor(k)).collect();
            tensor_all(&factors).as_nalgebra().clone() / C64::new(dim as f64, 0.0)
        })
        .collect();
    let m = problem.kets.ncols();
    let b = DMatrix::<f64>::from_fn(m, strings.len(), |j, a| {
        let k = problem.kets.column(j);
        k.dotc(&(&strings[a] * k)).re
    });
    let gradient = |p: &[f64]| -> DVector<f64> {
        b.tr_mul(&DVector::from_iterator(
            m,
            problem.counts.iter().zip(p).map(|(c, p)| c / p),
        ))
    };
    let mut p = problem.probabilities(&rho);
    let mut g = gradient(&p);
    for _ in 0..30 {
        let w = DVector::from_iterator(m, problem.counts.iter().zip(&p).map(|(c, p)| c / (p * p)));
        let mut wb = b.clone();
        for (j, mut row) in wb.row_iter_mut().enumerate() {
            row *= w[j];
        }
        let Some(chol) = (b.transpose() * wb).cholesky() else {
            break;
        };
        let step = chol.solve(&g);
        let delta = strings
            .iter()
            .zip(step.iter())
            .fold(DMatrix::<C64>::zeros(dim, dim), |acc, (s, c)| {
                acc + s * C64::new(*c, 0.0)
            });
        let cand = normalized(&rho + delta);
        let min_eig = nalgebra::SymmetricEigen::new(cand.clone())
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &l| a.min(l));
        if min_eig < 0.0 {
            break;
        }
        let cand_p = problem.probabilities(&cand);
        let cand_g = gradient(&cand_p);
        if !(cand_g.norm() < g.norm()) {
            break;
        }
        rho = cand;
        p = cand_p;
        g = cand_g;
    }
    rho
}

/// Maximum-likelihood state by diluted fixed-point iteration
/// ρ ← AρA / Tr with A = I + εR, started from the maximally mixed state.
///
/// ε starts at 1, halves whenever the likelihood would drop and doubles
/// after accepted steps. Each fixed-point step is followed by a projected
/// gradient step ρ ← Π(ρ + tR) onto the unit-trace PSD set, kept only if it
/// raises the likelihood. The multiplicative update alone shrinks
/// eigenvalues that should vanish only sublinearly; the projection sets
/// them to zero. Iteration stops when an iteration gains less than `tol`
/// relative to the log-likelihood, followed by Newton polishing.
pub fn mle_reconstruct(data: &TomographyDataset, options: &MleOptions) -> Result<ReconstructionResult> {
    let problem = Problem::new(data)?;
    let dim = 1usize << data.n_qubits();
    let identity = DMatrix::<C64>::identity(dim, dim);
    let mut rho = identity.clone() / C64::new(dim as f64, 0.0);
    let mut p = problem.probabilities(&rho);
    let mut ll = problem.log_likelihood(&p);
    let mut eps = 1.0f64;
    let mut t = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iter {
        iterations += 1;
        let r = problem.r_operator(&p);
        let accepted = loop {
            let a = &identity + &r * C64::new(eps, 0.0);
            let cand = normalized(&a * &rho * &a);
            let cand_p = problem.probabilities(&cand);
            let g = gain(&problem.counts, &cand_p, &p);
            if g >= 0.0 {
                break Some((cand, cand_p, g));
            }
            if eps < 1e-12 {
                break None;
            }
            eps *= 0.5;
        };
        let Some((next, next_p, mut total_gain)) = accepted else {
            // No step size improves the likelihood: stationary point.
            converged = true;
            break;
        };
        rho = next;
        p = next_p;

        let r = problem.r_operator(&p);
        for _ in 0..6 {
            let cand = project_to_states(&(&rho + &r * C64::new(t, 0.0)));
            let cand_p = problem.probabilities(&cand);
            let g = gain(&problem.counts, &cand_p, &p);
            if g > 0.0 {
                rho = cand;
                p = cand_p;
                total_gain += g;
                t *= 2.0;
                break;
            }
            t *= 0.5;
        }
        t = t.clamp(1e-12, 1e12);

        ll = problem.log_likelihood(&p);
        if total_gain <= options.tol * ll.abs().max(1.0) {
            converged = true;
            break;
        }
        eps = (eps * 2.0).min(1e8);
    }

    if converged {
        rho = newton_polish(&problem, rho, data.n_qubits());
        p = problem.probabilities(&rho);
        ll = problem.log_likelihood(&p);
    }

    let m = ComplexMatrix::from_nalgebra(rho)?;
    let rho = validate_physical(m, PHYSICAL_TOL)?;
    Ok(ReconstructionResult {
        purity: purity(&rho),
        rho,
        log_likelihood: ll,
        iterations,
        converged,
    })
}

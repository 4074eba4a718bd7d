use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DVector;

use super::matrix::{tensor, ComplexMatrix, C64, I, ONE, ZERO};
use crate::error::{Error, Result};

/// Tolerance used for the Hermiticity, positivity and trace checks.
pub const PHYSICAL_TOL: f64 = 1e-10;

/// Normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket(DVector<C64>);

impl Ket {
    /// Normalizes `amplitudes`; fails on the zero vector.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::OutOfRange("ket has zero or non-finite norm".into()));
        }
        Ok(Self(v / C64::new(norm, 0.0)))
    }

    /// Computational-basis state `|index⟩` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = ONE;
        Self(v)
    }

    pub fn h() -> Self {
        Self::basis(2, 0)
    }

    pub fn v() -> Self {
        Self::basis(2, 1)
    }

    pub fn d() -> Self {
        Self(DVector::from_vec(vec![C64::new(FRAC_1_SQRT_2, 0.0); 2]))
    }

    pub fn a() -> Self {
        Self(DVector::from_vec(vec![
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::new(-FRAC_1_SQRT_2, 0.0),
        ]))
    }

    /// (|HH⟩ + |VV⟩)/√2
    pub fn phi_plus() -> Self {
        Self::superpose(4, 0, 3, ONE)
    }

    /// (|HH⟩ − |VV⟩)/√2
    pub fn phi_minus() -> Self {
        Self::superpose(4, 0, 3, -ONE)
    }

    /// (|HHH⟩ + |VVV⟩)/√2
    pub fn ghz_plus() -> Self {
        Self::superpose(8, 0, 7, ONE)
    }

    /// (|HHH⟩ − |VVV⟩)/√2
    pub fn ghz_minus() -> Self {
        Self::superpose(8, 0, 7, -ONE)
    }

    fn superpose(dim: usize, i: usize, j: usize, phase: C64) -> Self {
        let mut v = DVector::zeros(dim);
        v[i] = C64::new(FRAC_1_SQRT_2, 0.0);
        v[j] = phase * FRAC_1_SQRT_2;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn tensor(&self, other: &Ket) -> Ket {
        Ket(self.0.kronecker(&other.0))
    }

    pub fn inner(&self, other: &Ket) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn with_global_phase(&self, phase: f64) -> Ket {
        Ket(&self.0 * C64::from_polar(1.0, phase))
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.0, &self.0)
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Checks physicality at [`PHYSICAL_TOL`].
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        validate_physical(m, PHYSICAL_TOL)
    }

    pub fn from_ket(psi: &Ket) -> Self {
        Self(psi.projector())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    /// Convex combination Σ wᵢ ρᵢ; weights must be non-negative and sum to 1.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let dim = parts
            .first()
            .map(|(_, r)| r.dim())
            .ok_or_else(|| Error::OutOfRange("empty mixture".into()))?;
        let mut acc = ComplexMatrix::zeros(dim);
        let mut total = 0.0;
        for (w, r) in parts {
            if r.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.dim(),
                });
            }
            if *w < 0.0 {
                return Err(Error::OutOfRange(format!("negative mixture weight {w}")));
            }
            acc = &acc + &r.0.scale(*w);
            total += w;
        }
        if (total - 1.0).abs() > PHYSICAL_TOL {
            return Err(Error::OutOfRange(format!("mixture weights sum to {total}")));
        }
        Self::new(acc)
    }

    pub(crate) fn from_matrix_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn n_qubits(&self) -> Result<usize> {
        n_qubits(self.dim())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0.get(row, col)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.0.eigh().0
    }

    /// U ρ U†
    pub fn conjugate_by(&self, u: &ComplexMatrix) -> Self {
        Self((&(u * &self.0) * &u.dagger()).hermitian_part())
    }
}

/// Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable(ComplexMatrix);

impl Observable {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let deviation = m.hermitian_deviation();
        if deviation > PHYSICAL_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self(m))
    }

    /// Like [`Observable::new`] but additionally requires every eigenvalue to be ±1.
    pub fn dichotomic(m: ComplexMatrix) -> Result<Self> {
        let obs = Self::new(m)?;
        for v in obs.0.eigh().0 {
            if (v.abs() - 1.0).abs() > PHYSICAL_TOL {
                return Err(Error::OutOfRange(format!(
                    "eigenvalue {v} of a measurement observable is not +-1"
                )));
            }
        }
        Ok(obs)
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn tensor(&self, other: &Observable) -> Observable {
        Observable(tensor(&self.0, &other.0))
    }

    /// n·σ for a real 3-vector `n`.
    pub fn bloch(n: [f64; 3]) -> Observable {
        let m = ComplexMatrix::from_row_major(
            2,
            &[
                C64::new(n[2], 0.0),
                C64::new(n[0], -n[1]),
                C64::new(n[0], n[1]),
                C64::new(-n[2], 0.0),
            ],
        )
        .expect("finite bloch vector");
        Observable(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn bloch(self) -> [f64; 3] {
        match self {
            Axis::X => [1.0, 0.0, 0.0],
            Axis::Y => [0.0, 1.0, 0.0],
            Axis::Z => [0.0, 0.0, 1.0],
        }
    }
}

/// Pauli matrix in the {|H⟩, |V⟩} basis.
pub fn pauli(axis: Axis) -> Observable {
    let entries = match axis {
        Axis::X => [ZERO, ONE, ONE, ZERO],
        Axis::Y => [ZERO, -I, I, ZERO],
        Axis::Z => [ONE, ZERO, ZERO, -ONE],
    };
    Observable(ComplexMatrix::from_row_major(2, &entries).expect("static entries"))
}

pub(crate) fn n_qubits(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(Error::NotQubits(dim));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Tr(ρ·O). The imaginary part is checked against 1e-10 and discarded.
pub fn expectation(rho: &DensityMatrix, obs: &Observable) -> Result<f64> {
    if rho.dim() != obs.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: obs.dim(),
        });
    }
    let value = (rho.matrix() * obs.matrix()).trace();
    debug_assert!(value.im.abs() < 1e-10, "complex expectation {value}");
    Ok(value.re)
}

/// ⟨ψ|ρ|ψ⟩
pub fn fidelity_pure(rho: &DensityMatrix, psi: &Ket) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: psi.dim(),
        });
    }
    let v = psi.amplitudes();
    let value = v.dotc(&rho.matrix().apply(v));
    debug_assert!(value.im.abs() < 1e-10);
    Ok(value.re.clamp(0.0, 1.0))
}

/// Tr(ρ²)
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr(ρ²) = Σ|ρ_ij|² for Hermitian ρ.
    rho.matrix().as_nalgebra().iter().map(|z| z.norm_sqr()).sum()
}

/// Uhlmann fidelity (Tr √(√σ ρ √σ))².
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let sqrt_sigma = sigma.matrix().map_spectrum(|v| v.max(0.0).sqrt());
    let inner = &(&sqrt_sigma * rho.matrix()) * &sqrt_sigma;
    let root_trace: f64 = inner.eigh().0.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok((root_trace * root_trace).clamp(0.0, 1.0))
}

/// ½‖ρ − σ‖₁
pub fn trace_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: sigma.dim(),
        });
    }
    let diff = rho - sigma;
    Ok(0.5 * diff.eigh().0.iter().map(|v| v.abs()).sum::<f64>())
}

/// Reduced state on the qubits listed in `keep` (qubit 0 = most significant).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.n_qubits()?;
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&q| q >= n) {
        return Err(Error::InvalidSubsystem {
            index: bad,
            n_qubits: n,
        });
    }
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();
    let out_dim = 1usize << kept.len();
    let env_dim = 1usize << traced.len();

    // Places the bits of `sub` (MSB first) at the qubit positions `qubits`.
    let scatter = |sub: usize, qubits: &[usize]| -> usize {
        qubits.iter().enumerate().fold(0usize, |acc, (k, &q)| {
            let bit = (sub >> (qubits.len() - 1 - k)) & 1;
            acc | (bit << (n - 1 - q))
        })
    };

    let mut out = ComplexMatrix::zeros(out_dim);
    for i in 0..out_dim {
        let ri = scatter(i, &kept);
        for j in 0..out_dim {
            let rj = scatter(j, &kept);
            let mut acc = ZERO;
            for e in 0..env_dim {
                let re = scatter(e, &traced);
                acc += rho.get(ri | re, rj | re);
            }
            out.set(i, j, acc);
        }
    }
    Ok(DensityMatrix(out))
}

/// The single gate for turning a matrix into a [`DensityMatrix`].
pub fn validate_physical(m: ComplexMatrix, tol: f64) -> Result<DensityMatrix> {
    let deviation = m.hermitian_deviation();
    if deviation > tol {
        return Err(Error::NotHermitian { deviation });
    }
    let trace = m.trace().re;
    if (trace - 1.0).abs() > tol {
        return Err(Error::TraceNotOne { trace });
    }
    let (values, _) = m.eigh();
    if let Some(&lowest) = values.first() {
        if lowest < -tol {
            return Err(Error::NegativeEigenvalue { value: lowest });
        }
    }
    Ok(DensityMatrix(m))
}

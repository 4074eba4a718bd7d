use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense square complex matrix, row-major semantics.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be a square.
    pub fn from_row_major(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        let m = Self(DMatrix::from_row_slice(dim, dim, entries));
        m.check_finite()?;
        Ok(m)
    }

    /// Wraps an nalgebra matrix, rejecting non-square or non-finite input.
    pub fn from_nalgebra(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let m = Self(m);
        m.check_finite()?;
        Ok(m)
    }

    /// Outer product |a⟩⟨b|.
    pub fn outer(a: &DVector<C64>, b: &DVector<C64>) -> Self {
        Self(a * b.adjoint())
    }

    pub fn diagonal(values: &[C64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(values)))
    }

    fn check_finite(&self) -> Result<()> {
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                let z = self.0[(r, c)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: r, col: c });
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.0[(row, col)] = value;
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_nalgebra(self) -> DMatrix<C64> {
        self.0
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * C64::new(s, 0.0))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    /// Largest entrywise deviation from Hermiticity, max |m_ij - conj(m_ji)|.
    pub fn hermitian_deviation(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                let d = (self.0[(r, c)] - self.0[(c, r)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Hermitian part ½(m + m†).
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    /// Eigen-decomposition of the Hermitian part. Eigenvalues ascending,
    /// eigenvectors as matching columns.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<C64>) {
        let h = self.hermitian_part();
        let eig = h.0.symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = DMatrix::zeros(self.dim(), self.dim());
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        (values, vectors)
    }

    /// Applies `f` to the eigenvalues of the Hermitian part.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Self {
        let (values, vectors) = self.eigh();
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            values.len(),
            values.iter().map(|&v| C64::new(f(v), 0.0)),
        ));
        Self(&vectors * d * vectors.adjoint())
    }

    /// Frobenius-norm distance.
    pub fn distance(&self, other: &Self) -> f64 {
        (&self.0 - &other.0).norm()
    }

    /// Largest entrywise modulus difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.0 * v
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim(), self.dim())?;
        for r in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|c| {
                    let z = self.0[(r, c)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Kronecker product; `a` occupies the more significant index.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

/// Kronecker product of a list of factors, left to right.
pub fn tensor_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, f| tensor(&acc, f))
}

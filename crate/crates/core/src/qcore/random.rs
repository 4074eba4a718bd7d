use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{ComplexMatrix, C64};
use super::state::{DensityMatrix, Ket};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state.
pub fn random_ket<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Ket {
    let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    Ket::new(v).expect("nonzero gaussian vector")
}

/// Random mixed state G G† / Tr with G a `dim × rank` complex Ginibre
/// matrix; `rank = dim` gives the Hilbert–Schmidt ensemble.
pub fn random_density_matrix<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let g = DMatrix::from_fn(dim, rank.max(1), |_, _| gaussian(rng));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    let m = ComplexMatrix::from_nalgebra(m.map(|z| z / tr)).expect("finite");
    DensityMatrix::new(m.hermitian_part()).expect("Ginibre products are physical")
}

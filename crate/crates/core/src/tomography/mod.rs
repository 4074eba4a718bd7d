//! Density-matrix reconstruction from Pauli-basis count tables.

mod bootstrap;
mod dataset;
mod linear;
mod mle;

pub use bootstrap::{bootstrap, BootstrapSummary};
pub use dataset::{read_dataset, write_dataset, SettingData, TomographyDataset, MANIFEST};
pub use linear::linear_inversion;
pub use mle::{log_likelihood, mle_reconstruct, MleOptions, ReconstructionResult};

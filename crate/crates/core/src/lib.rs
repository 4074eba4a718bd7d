pub mod error;
pub mod measurement;
pub mod qcore;
pub mod statemodel;

pub use error::{Error, Result};
pub mod analysis;
pub mod coincidence;
pub mod config;
pub mod experiment;
pub mod timetag;
pub mod tomography;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/states.md")]
    mod states {}
    #[doc = include_str!("../../../book/src/measurement.md")]
    mod measurement {}
    #[doc = include_str!("../../../book/src/inequalities.md")]
    mod inequalities {}
    #[doc = include_str!("../../../book/src/timetags.md")]
    mod timetags {}
    #[doc = include_str!("../../../book/src/tomography.md")]
    mod tomography {}
    #[doc = include_str!("../../../book/src/heralding.md")]
    mod heralding {}
    #[doc = include_str!("../../../book/src/dispersion.md")]
    mod dispersion {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

//! Bell-type inequalities, heralding metrics, the heralding β sweep and
//! phase-scan fits.

mod fit;
mod herald;
mod inequality;
mod pauli;
mod sweep;

pub use fit::{fit_sinusoid, ScanPoint, SinusoidFit};
pub use herald::{heralding_efficiency_from_rates, heralding_metrics, HeraldChannels, HeraldReport, HeraldTruth};
pub use inequality::{chsh, mermin, svetlichny, ChshVariant, Inequality, InequalityResult, Term, TermSpec};
pub use pauli::derived_correlation;
pub use sweep::{beta_sweep, BetaPoint, Sampling, SweepOptions};

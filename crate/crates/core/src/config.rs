//! TOML run configuration.
//!
//! ```toml
//! [experiment]   # ExperimentConfig
//! [noise]        # NoiseModel
//! [coincidence]  # CoincidenceParams
//! [dispersion]   # DispersionParams
//! [source]       # GHZ phase
//! [run]          # desk scaling, bootstrap size
//! ```
//!
//! Keys left out take the experiment's values ([`Config::reference`]). Unknown
//! keys are errors.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coincidence::CoincidenceParams;
use crate::error::{Error, Result};
use crate::statemodel::{DispersionParams, NoiseModel};
use crate::timetag::ExperimentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    /// Relative phase of |VVV⟩, radians.
    pub phase: f64,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            phase: std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Desk-scale runs divide durations by this and multiply the triplet
    /// rate by it, keeping the expected triplets per setting.
    pub desk_speedup: f64,
    pub bootstrap_resamples: usize,
    /// Iteration cap of the maximum-likelihood reconstruction.
    pub mle_max_iter: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            desk_speedup: 60.0,
            bootstrap_resamples: 100,
            mle_max_iter: crate::tomography::MleOptions::default().max_iter,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub experiment: ExperimentConfig,
    pub noise: NoiseModel,
    pub coincidence: CoincidenceParams,
    pub dispersion: DispersionParams,
    pub source: SourceConfig,
    pub run: RunConfig,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn toml_error(text: &str, e: toml::de::Error) -> Error {
    match e.span() {
        Some(span) => Error::Config(format!("line {}: {}", line_of(text, span.start), e.message())),
        None => Error::Config(e.message().to_string()),
    }
}

/// Overlays `top` onto `base`, descending into tables.
fn overlay(base: &mut toml::Table, top: toml::Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => overlay(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

impl Config {
    /// The experiment's detector parameters, its calibrated noise and a GHZ⁻ source.
    pub fn reference() -> Self {
        Self {
            experiment: ExperimentConfig::reference(),
            noise: NoiseModel::reference(),
            ..Self::default()
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        // Strict pass for unknown keys and type errors with their lines.
        toml::from_str::<Config>(text).map_err(|e| toml_error(text, e))?;
        let table: toml::Table = toml::from_str(text).map_err(|e| toml_error(text, e))?;
        let mut merged = toml::Table::try_from(Self::reference()).map_err(|e| Error::Config(e.to_string()))?;
        overlay(&mut merged, table);
        let config: Config = merged
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| match e {
            Error::Config(m) | Error::OutOfRange(m) => Error::Config(m),
            e => e,
        };
        self.experiment.validate().map_err(wrap)?;
        self.noise.validate().map_err(wrap)?;
        self.coincidence.validate().map_err(wrap)?;
        self.dispersion.validate().map_err(wrap)?;
        if !(self.run.desk_speedup.is_finite() && self.run.desk_speedup >= 1.0) {
            return Err(Error::Config(format!(
                "desk_speedup {} must be >= 1",
                self.run.desk_speedup
            )));
        }
        if self.run.mle_max_iter == 0 {
            return Err(Error::Config("mle_max_iter must be at least 1".into()));
        }
        if !self.source.phase.is_finite() {
            return Err(Error::Config("source phase must be finite".into()));
        }
        Ok(())
    }

    /// Experiment with durations divided and the triplet rate multiplied by
    /// the desk speedup; `paper_exact` returns it unchanged.
    pub fn experiment_for_run(&self, paper_exact: bool) -> ExperimentConfig {
        let mut e = self.experiment.clone();
        if !paper_exact {
            e.triplet_rate *= self.run.desk_speedup;
            e.duration /= self.run.desk_speedup;
        }
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_reference() {
        assert_eq!(Config::from_toml_str("").unwrap(), Config::reference());
    }

    #[test]
    fn partial_sections_overlay_the_preset() {
        let c = Config::from_toml_str("[experiment]\nduration = 10.0\n\n[noise]\ncoherence = 0.5\n").unwrap();
        assert_eq!(c.experiment.duration, 10.0);
        assert_eq!(c.experiment.triplet_rate, ExperimentConfig::reference().triplet_rate);
        assert_eq!(c.noise.coherence, 0.5);
        assert_eq!(c.noise.white_noise, NoiseModel::reference().white_noise);
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let err = Config::from_toml_str("[run]\ndesk_speedup = 2.0\n\n[coincidence]\nwindow = 3\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config(_)));
        assert!(msg.contains("line 5"), "{msg}");
        assert!(msg.contains("window"), "{msg}");
    }

    #[test]
    fn type_error_and_range_error() {
        let err = Config::from_toml_str("[experiment]\neta1 = \"high\"\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = Config::from_toml_str("[experiment]\neta1 = 1.5\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn roundtrip_and_desk_scaling() {
        let c = Config::reference();
        assert_eq!(Config::from_toml_str(&c.to_toml_string()).unwrap(), c);
        let desk = c.experiment_for_run(false);
        let expected = c.experiment.triplet_rate * c.experiment.duration;
        assert!((desk.triplet_rate * desk.duration - expected).abs() < 1e-9 * expected);
        assert_eq!(c.experiment_for_run(true), c.experiment);
    }
}

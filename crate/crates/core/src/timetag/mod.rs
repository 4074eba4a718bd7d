//! Monte-Carlo time-tag streams.
//!
//! Six detector channels: 0/1 are the `+`/`−` outputs of the mode-1 analyzer,
//! 2/3 of mode 2 and 4/5 of mode 3. Timestamps are integer ticks of the time
//! tagger's resolution.

mod io;
mod sim;

pub use io::{read_csv, read_stream, write_csv, write_stream, TagStream, HEADER_LEN, MAGIC, RECORD_LEN};
pub use sim::{simulate_setting, SimulatedRun};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::Settings;
use crate::statemodel::NoiseModel;

pub const N_CHANNELS: usize = 6;

/// Channel of qubit `qubit` reporting outcome `minus`.
pub fn channel_of(qubit: usize, minus: bool) -> u8 {
    (2 * qubit + minus as usize) as u8
}

/// Analyzer group (qubit) of a channel.
pub fn group_of(channel: u8) -> usize {
    channel as usize / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TimeTagRecord {
    pub timestamp: u64,
    pub channel: u8,
}

impl TimeTagRecord {
    pub fn new(timestamp: u64, channel: u8) -> Self {
        Self { timestamp, channel }
    }
}

/// Ground truth for a simulated tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TagOrigin {
    /// Photon of the triplet with this serial number.
    Triplet(u64),
    /// 842 nm photon of a first-stage pair with no partners.
    Pair1,
    Dark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Acquisition {
    /// Every tag on every channel is recorded.
    #[default]
    Full,
    /// Telecom channels are recorded in full; mode-1 tags only within the
    /// record window of some telecom tag, as a triple-triggered tagger does.
    Gated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Generated triplets per second, before any loss.
    pub triplet_rate: f64,
    /// First-stage pairs per second; their unpartnered 842 nm photons form
    /// the accidental background on mode 1.
    pub pair1_rate: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    /// Extra per-channel efficiency on top of the mode efficiency.
    pub channel_efficiency: [f64; N_CHANNELS],
    /// Counts per second.
    pub dark_rate: [f64; N_CHANNELS],
    /// Gaussian timing jitter, ps.
    pub jitter_sigma: [f64; N_CHANNELS],
    /// ps
    pub channel_delay: [f64; N_CHANNELS],
    /// ps
    pub tick: f64,
    /// ps
    pub record_window: f64,
    /// Seconds per setting.
    pub duration: f64,
    pub seed: u64,
    pub acquisition: Acquisition,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            triplet_rate: 0.0,
            pair1_rate: 0.0,
            eta1: 0.23,
            eta2: 0.30,
            eta3: 0.30,
            channel_efficiency: [1.0; N_CHANNELS],
            dark_rate: [330.0; N_CHANNELS],
            jitter_sigma: [350.0, 350.0, 80.0, 80.0, 80.0, 80.0],
            channel_delay: [0.0, 0.0, 0.0, 0.0, 7000.0, 7000.0],
            tick: 156.25,
            record_window: 15_000.0,
            duration: 1.0,
            seed: 0,
            acquisition: Acquisition::Full,
        }
    }
}

/// Detected windowed triples per minute reported for the source.
pub const MEASURED_TRIPLES_PER_MINUTE: f64 = 11.1;

impl ExperimentConfig {
    /// Detector parameters of the experiment with the triplet rate chosen to
    /// give 11.1 detected triples per minute, 16 minutes per setting and a
    /// first-stage pair rate tuned so that the time-difference histogram has
    /// a peak-to-background ratio near 73.
    pub fn reference() -> Self {
        let base = Self::default();
        Self {
            triplet_rate: MEASURED_TRIPLES_PER_MINUTE / 60.0 / (base.eta1 * base.eta2 * base.eta3),
            pair1_rate: 1.6e7,
            duration: 960.0,
            acquisition: Acquisition::Gated,
            ..base
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [self.triplet_rate, self.pair1_rate];
        if rates
            .iter()
            .chain(&self.dark_rate)
            .any(|r| !(r.is_finite() && *r >= 0.0))
        {
            return Err(Error::Config("rates must be finite and non-negative".into()));
        }
        let effs = [self.eta1, self.eta2, self.eta3];
        if effs
            .iter()
            .chain(&self.channel_efficiency)
            .any(|e| !(0.0..=1.0).contains(e))
        {
            return Err(Error::Config("efficiencies must lie in [0, 1]".into()));
        }
        if self.jitter_sigma.iter().any(|j| !(j.is_finite() && *j >= 0.0)) {
            return Err(Error::Config("jitter must be finite and non-negative".into()));
        }
        if self.channel_delay.iter().any(|d| !d.is_finite()) {
            return Err(Error::Config("delays must be finite".into()));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::Config(format!("duration {} must be positive", self.duration)));
        }
        if !(self.tick.is_finite() && self.tick > 0.0) {
            return Err(Error::Config(format!("tick {} must be positive", self.tick)));
        }
        if !(self.record_window.is_finite() && self.record_window > 0.0) {
            return Err(Error::Config("record window must be positive".into()));
        }
        Ok(())
    }

    pub fn eta(&self, qubit: usize) -> f64 {
        [self.eta1, self.eta2, self.eta3][qubit]
    }

    /// Tick length in integer femtoseconds, as stored in stream headers.
    pub fn tick_fs(&self) -> u64 {
        (self.tick * 1000.0).round() as u64
    }
}

/// Source-state descriptor stored alongside a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDescriptor {
    pub phase: f64,
    pub noise: NoiseModel,
}

/// What was simulated for one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub setting_index: u64,
    /// Logical settings.
    pub settings: Settings,
    /// Sign-flip mask of the physical measurement (see
    /// [`Relabeling`](crate::measurement::Relabeling)).
    pub relabel_mask: u8,
    pub state: StateDescriptor,
    pub stream: Option<String>,
}

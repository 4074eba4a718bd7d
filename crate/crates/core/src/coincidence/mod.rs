//! Three-fold coincidence analysis of time-tag streams.
//!
//! All arithmetic is on delay-corrected tick counts: a tag on channel `c`
//! at raw tick `t` sits at `t − round(delay_correction[c] / tick)`.

mod calibrate;
mod finder;
mod histogram;

pub use calibrate::delay_calibrate;
pub use finder::{find_triples, TripleFinder};
pub use histogram::{snr, standard_regions, Histogram2D, Region, Snr};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{CountTable, Relabeling, Settings};
use crate::timetag::{TimeTagRecord, N_CHANNELS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoincidenceParams {
    /// ps
    pub record_window: f64,
    /// ps
    pub coincidence_window: f64,
    /// Subtracted from each channel's timestamps, ps.
    pub delay_correction: [f64; N_CHANNELS],
    /// Histogram bin width in ticks.
    pub bin_ticks: u32,
}

impl Default for CoincidenceParams {
    fn default() -> Self {
        Self {
            record_window: 15_000.0,
            coincidence_window: 1_250.0,
            delay_correction: [0.0; N_CHANNELS],
            bin_ticks: 1,
        }
    }
}

impl CoincidenceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.coincidence_window > 0.0 && self.coincidence_window <= self.record_window) {
            return Err(Error::Config(format!(
                "need 0 < coincidence_window ({}) <= record_window ({})",
                self.coincidence_window, self.record_window
            )));
        }
        if self.delay_correction.iter().any(|d| !d.is_finite()) {
            return Err(Error::Config("delay corrections must be finite".into()));
        }
        if self.bin_ticks == 0 {
            return Err(Error::Config("bin_ticks must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_delays(mut self, delay_correction: [f64; N_CHANNELS]) -> Self {
        self.delay_correction = delay_correction;
        self
    }

    /// Per-channel correction in whole ticks.
    pub fn shifts(&self, tick_ps: f64) -> [i64; N_CHANNELS] {
        self.delay_correction.map(|d| (d / tick_ps).round() as i64)
    }

    pub fn record_ticks(&self, tick_ps: f64) -> i64 {
        (self.record_window / tick_ps + 1e-9).floor() as i64
    }

    pub fn coincidence_ticks(&self, tick_ps: f64) -> i64 {
        (self.coincidence_window / tick_ps + 1e-9).floor() as i64
    }
}

/// One tag from each analyzer group, in group order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triple {
    pub records: [TimeTagRecord; 3],
    /// Positions of the tags in the input stream.
    pub indices: [usize; 3],
    /// Delay-corrected tick times.
    pub corrected: [i64; 3],
}

impl Triple {
    pub fn span(&self) -> i64 {
        let max = self.corrected.iter().max().unwrap();
        let min = self.corrected.iter().min().unwrap();
        max - min
    }

    /// (t₂ − t₁, t₃ − t₂) in ticks.
    pub fn differences(&self) -> (i64, i64) {
        let [a, b, c] = self.corrected;
        (b - a, c - b)
    }

    /// Physical outcome index: bit set for the `−` output of each analyzer.
    pub fn outcome(&self) -> usize {
        self.records
            .iter()
            .fold(0, |acc, r| (acc << 1) | (r.channel as usize & 1))
    }

    pub fn is_windowed(&self, params: &CoincidenceParams, tick_ps: f64) -> bool {
        self.span() <= params.coincidence_ticks(tick_ps)
    }
}

/// Windowed triples binned by outcome, mapped back to logical outcomes.
pub fn count_table(
    triples: &[Triple],
    params: &CoincidenceParams,
    tick_ps: f64,
    settings: &Settings,
    relabeling: Relabeling,
) -> CountTable {
    let mut table = CountTable::zeros(settings.clone());
    for t in triples.iter().filter(|t| t.is_windowed(params, tick_ps)) {
        table.increment(relabeling.to_logical(t.outcome()));
    }
    table
}

pub fn windowed_count(triples: &[Triple], params: &CoincidenceParams, tick_ps: f64) -> usize {
    triples.iter().filter(|t| t.is_windowed(params, tick_ps)).count()
}

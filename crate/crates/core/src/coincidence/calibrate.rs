use std::collections::BTreeMap;

use super::{find_triples, CoincidenceParams, Triple};
use crate::error::{Error, Result};
use crate::timetag::{group_of, TagStream, N_CHANNELS};

/// Histogram of integer tick differences.
#[derive(Default)]
struct DiffHistogram(BTreeMap<i64, u64>);

impl DiffHistogram {
    fn add(&mut self, d: i64) {
        *self.0.entry(d).or_default() += 1;
    }

    fn count(&self, d: i64) -> u64 {
        self.0.get(&d).copied().unwrap_or(0)
    }

    fn sum(&self, range: std::ops::RangeInclusive<i64>) -> u64 {
        self.0.range(range).map(|(_, c)| c).sum()
    }

    /// Centroid of the ±4-bin neighbourhood of the 5-bin smoothed maximum,
    /// with the significance of that maximum over the flat level measured
    /// away from it. `None` when the histogram has no significant peak.
    fn peak(&self, half_range: i64) -> Option<f64> {
        let smoothed = |d: i64| self.sum(d - 2..=d + 2);
        let mode = (-half_range..=half_range).max_by_key(|&d| (smoothed(d), -d.abs()))?;
        let in_peak = smoothed(mode) as f64;
        let far: Vec<i64> = (-half_range..=half_range).filter(|d| (d - mode).abs() > 10).collect();
        let level = if far.is_empty() {
            0.0
        } else {
            far.iter().map(|&d| self.count(d)).sum::<u64>() as f64 / far.len() as f64
        };
        let expected = 5.0 * level;
        if in_peak < expected + 5.0 * expected.sqrt() + 3.0 {
            return None;
        }
        let (mut w, mut s) = (0.0, 0.0);
        for d in mode - 4..=mode + 4 {
            let c = (self.count(d) as f64 - level).max(0.0);
            w += c;
            s += c * d as f64;
        }
        Some(if w > 0.0 { s / w } else { mode as f64 })
    }
}

/// Per-channel delay corrections (ps, channel 2 as the zero reference) that
/// centre the three-fold coincidence peak, to a resolution of one tick.
///
/// `params` supplies the record window and a starting correction; the true
/// offsets must lie within one record window of that guess.
pub fn delay_calibrate(stream: &TagStream, params: &CoincidenceParams) -> Result<[f64; N_CHANNELS]> {
    let tick = stream.tick_ps();
    let triples = find_triples(stream, params)?;
    let half = params.record_ticks(tick);
    let start = params.shifts(tick);

    let mut h01 = DiffHistogram::default();
    let mut h12 = DiffHistogram::default();
    for t in &triples {
        let (d21, d32) = t.differences();
        h01.add(d21);
        h12.add(d32);
    }
    let m01 = h01.peak(half).ok_or(Error::NoPeak)?.round() as i64;
    let m12 = h12.peak(half).ok_or(Error::NoPeak)?.round() as i64;
    let group_delay = [-m01, 0, m12];

    let residual = channel_residuals(&triples, &group_delay, half);
    let mut ticks = [0i64; N_CHANNELS];
    for ch in 0..N_CHANNELS {
        ticks[ch] = start[ch] + group_delay[group_of(ch as u8)] + residual[ch];
    }
    let reference = ticks[2];
    Ok(ticks.map(|t| (t - reference) as f64 * tick))
}

fn channel_residuals(triples: &[Triple], group_delay: &[i64; 3], half: i64) -> [i64; N_CHANNELS] {
    let mut hists: Vec<DiffHistogram> = (0..N_CHANNELS).map(|_| DiffHistogram::default()).collect();
    for t in triples {
        let aligned: Vec<i64> = (0..3).map(|g| t.corrected[g] - group_delay[g]).collect();
        for g in 0..3 {
            let ch = t.records[g].channel as usize;
            for o in (0..3).filter(|&o| o != g) {
                hists[ch].add(aligned[g] - aligned[o]);
            }
        }
    }
    let mut out = [0i64; N_CHANNELS];
    for (ch, h) in hists.iter().enumerate() {
        out[ch] = h.peak(half).map_or(0, |v| v.round() as i64);
    }
    out
}

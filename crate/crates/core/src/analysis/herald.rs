use serde::{Deserialize, Serialize};

use crate::coincidence::CoincidenceParams;
use crate::error::{Error, Result};
use crate::timetag::{TagOrigin, TagStream};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeraldChannels {
    pub herald: Vec<u8>,
    /// Channels of the two heralded photons, one list per photon.
    pub partners: [Vec<u8>; 2],
}

impl Default for HeraldChannels {
    /// Herald on the 1530 nm photon (mode 2).
    fn default() -> Self {
        Self {
            herald: vec![2, 3],
            partners: [vec![0, 1], vec![4, 5]],
        }
    }
}

/// How herald tags that are real photons are told apart from background.
#[derive(Debug, Clone, Copy)]
pub enum HeraldTruth<'a> {
    /// Simulation ground truth, one label per stream record.
    Labels(&'a [TagOrigin]),
    /// Known background rate on the herald channels, counts per second.
    BackgroundRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeraldReport {
    /// Herald tags accompanied by both partners, per second.
    pub heralded_pair_rate: f64,
    /// All tags on the herald channels, per second.
    pub herald_signal_rate: f64,
    pub heralding_efficiency: f64,
    /// Efficiency given that the herald tag is a real photon.
    pub conditioned_efficiency: f64,
    pub heralded_pairs: u64,
    pub herald_tags: u64,
    pub duration: f64,
}

/// Heralded pairs per herald signal.
pub fn heralding_efficiency_from_rates(heralded_pair_rate: f64, herald_signal_rate: f64) -> Result<f64> {
    if !(herald_signal_rate > 0.0) {
        return Err(Error::ZeroHeraldRate);
    }
    Ok((heralded_pair_rate / herald_signal_rate).clamp(0.0, 1.0))
}

/// Counts herald tags with a tag of each partner photon such that all three
/// delay-corrected times fit in the coincidence window. `duration` is the
/// acquisition time in seconds.
///
/// With [`HeraldTruth::BackgroundRate`] the conditioned efficiency is
/// heralded pairs over herald tags minus the expected background tags.
/// Coincidences of a background herald with a real partner pair are rare
/// enough to be ignored.
pub fn heralding_metrics(
    stream: &TagStream,
    params: &CoincidenceParams,
    channels: &HeraldChannels,
    duration: f64,
    truth: HeraldTruth,
) -> Result<HeraldReport> {
    params.validate()?;
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::OutOfRange(format!("duration {duration}")));
    }
    if let HeraldTruth::Labels(labels) = truth {
        if labels.len() != stream.records.len() {
            return Err(Error::DimensionMismatch {
                expected: stream.records.len(),
                got: labels.len(),
            });
        }
    }
    let tick_ps = stream.tick_ps();
    let shifts = params.shifts(tick_ps);
    let w = params.coincidence_ticks(tick_ps);
    let corrected = |i: usize| {
        let r = stream.records[i];
        r.timestamp as i64 - shifts[r.channel as usize]
    };

    let partner_times: Vec<Vec<i64>> = channels
        .partners
        .iter()
        .map(|chs| {
            let mut v: Vec<i64> = (0..stream.records.len())
                .filter(|&i| chs.contains(&stream.records[i].channel))
                .map(corrected)
                .collect();
            v.sort_unstable();
            v
        })
        .collect();
    let near = |list: &[i64], t: i64| -> std::ops::Range<usize> {
        list.partition_point(|&x| x < t - w)..list.partition_point(|&x| x <= t + w)
    };

    let (mut herald_tags, mut heralded) = (0u64, 0u64);
    let (mut true_tags, mut true_heralded) = (0u64, 0u64);
    for (i, r) in stream.records.iter().enumerate() {
        if !channels.herald.contains(&r.channel) {
            continue;
        }
        let t = corrected(i);
        let (a, b) = (&partner_times[0], &partner_times[1]);
        let hit = a[near(a, t)].iter().any(|&ta| {
            b[near(b, t)]
                .iter()
                .any(|&tb| t.max(ta).max(tb) - t.min(ta).min(tb) <= w)
        });
        herald_tags += 1;
        heralded += hit as u64;
        if let HeraldTruth::Labels(labels) = truth {
            if matches!(labels[i], TagOrigin::Triplet(_)) {
                true_tags += 1;
                true_heralded += hit as u64;
            }
        }
    }
    if herald_tags == 0 {
        return Err(Error::ZeroHeraldRate);
    }

    let conditioned_efficiency = match truth {
        HeraldTruth::Labels(_) => {
            if true_tags == 0 {
                0.0
            } else {
                true_heralded as f64 / true_tags as f64
            }
        }
        HeraldTruth::BackgroundRate(rate) => {
            let signal = herald_tags as f64 - rate * duration;
            if !(signal > 0.0) {
                return Err(Error::OutOfRange(format!(
                    "background rate {rate}/s leaves no signal among {herald_tags} herald tags"
                )));
            }
            (heralded as f64 / signal).clamp(0.0, 1.0)
        }
    };
    let heralded_pair_rate = heralded as f64 / duration;
    let herald_signal_rate = herald_tags as f64 / duration;
    Ok(HeraldReport {
        heralded_pair_rate,
        herald_signal_rate,
        heralding_efficiency: heralding_efficiency_from_rates(heralded_pair_rate, herald_signal_rate)?,
        conditioned_efficiency,
        heralded_pairs: heralded,
        herald_tags,
        duration,
    })
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::io::TagStream;
use super::{channel_of, Acquisition, ExperimentConfig, TagOrigin, TimeTagRecord, N_CHANNELS};
use crate::error::{Error, Result};
use crate::measurement::{outcome_probabilities, Settings};
use crate::qcore::DensityMatrix;

/// A simulated stream with the ground-truth origin of every tag.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedRun {
    pub stream: TagStream,
    /// Parallel to `stream.records`.
    pub origins: Vec<TagOrigin>,
    /// Triplets generated, detected or not.
    pub n_triplets: u64,
}

impl SimulatedRun {
    /// Tags of triplets that had all three photons recorded, grouped by
    /// triplet, as indices into the stream.
    pub fn complete_triplets(&self) -> Vec<[usize; 3]> {
        let mut by_id: std::collections::HashMap<u64, Vec<usize>> = Default::default();
        for (i, o) in self.origins.iter().enumerate() {
            if let TagOrigin::Triplet(id) = o {
                by_id.entry(*id).or_default().push(i);
            }
        }
        let mut out: Vec<[usize; 3]> = by_id
            .into_values()
            .filter(|v| v.len() == 3)
            .map(|v| {
                let mut t = [v[0], v[1], v[2]];
                t.sort_by_key(|&i| self.stream.records[i].channel);
                t
            })
            .collect();
        out.sort_unstable();
        out
    }
}

fn poisson<R: Rng>(mean: f64, rng: &mut R) -> Result<u64> {
    if mean <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mean).map_err(|e| Error::OutOfRange(format!("poisson mean {mean}: {e}")))?;
    Ok(d.sample(rng) as u64)
}

/// Union of closed intervals, kept sorted and disjoint.
struct Gate {
    starts: Vec<f64>,
    ends: Vec<f64>,
    /// Cumulative length before each interval.
    offsets: Vec<f64>,
    total: f64,
}

impl Gate {
    fn around(mut centers: Vec<f64>, half_width: f64, lo: f64, hi: f64) -> Self {
        centers.sort_by(f64::total_cmp);
        let (mut starts, mut ends) = (Vec::new(), Vec::<f64>::new());
        for c in centers {
            let (s, e) = ((c - half_width).max(lo), (c + half_width).min(hi));
            if s >= e {
                continue;
            }
            match ends.last_mut() {
                Some(last) if s <= *last => *last = last.max(e),
                _ => {
                    starts.push(s);
                    ends.push(e);
                }
            }
        }
        let mut offsets = Vec::with_capacity(starts.len());
        let mut total = 0.0;
        for (s, e) in starts.iter().zip(&ends) {
            offsets.push(total);
            total += e - s;
        }
        Self {
            starts,
            ends,
            offsets,
            total,
        }
    }

    fn contains(&self, t: f64) -> bool {
        let i = self.starts.partition_point(|&s| s <= t);
        i > 0 && t <= self.ends[i - 1]
    }

    /// Maps a position in [0, total) of the concatenated intervals to time.
    fn locate(&self, u: f64) -> f64 {
        let i = self.offsets.partition_point(|&o| o <= u).max(1) - 1;
        self.starts[i] + (u - self.offsets[i])
    }
}

/// Simulates one measurement setting. `settings` are the physical analyzer
/// settings; `setting_index` selects an independent random substream of
/// `config.seed`, so settings can be generated in any order or in parallel.
pub fn simulate_setting(
    config: &ExperimentConfig,
    rho: &DensityMatrix,
    settings: &Settings,
    setting_index: u64,
) -> Result<SimulatedRun> {
    config.validate()?;
    if settings.n_qubits() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: settings.n_qubits(),
        });
    }
    let probs = outcome_probabilities(rho, settings)?;
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(setting_index);

    let span = config.duration * 1e12;
    let gated = config.acquisition == Acquisition::Gated;
    let jitter = |ch: u8, rng: &mut ChaCha8Rng| -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        config.channel_delay[ch as usize] + config.jitter_sigma[ch as usize] * z
    };

    let mut events: Vec<(f64, u8, TagOrigin)> = Vec::new();
    let mut mode1_triplet: Vec<(f64, u8, TagOrigin)> = Vec::new();

    let n_triplets = poisson(config.triplet_rate * config.duration, &mut rng)?;
    for id in 0..n_triplets {
        let t = rng.random::<f64>() * span;
        let u = rng.random::<f64>() * acc;
        let outcome = cdf.partition_point(|&c| c <= u).min(probs.len() - 1);
        for q in 0..3 {
            let ch = channel_of(q, (outcome >> (2 - q)) & 1 == 1);
            let survive = config.eta(q) * config.channel_efficiency[ch as usize];
            if rng.random::<f64>() < survive {
                let ev = (t + jitter(ch, &mut rng), ch, TagOrigin::Triplet(id));
                if gated && q == 0 {
                    mode1_triplet.push(ev);
                } else {
                    events.push(ev);
                }
            }
        }
    }

    let telecom_dark_start = if gated { 2 } else { 0 };
    for ch in telecom_dark_start..N_CHANNELS as u8 {
        let n = poisson(config.dark_rate[ch as usize] * config.duration, &mut rng)?;
        for _ in 0..n {
            events.push((rng.random::<f64>() * span, ch, TagOrigin::Dark));
        }
    }

    let pair1_rate = |ch: usize| 0.5 * config.pair1_rate * config.eta1 * config.channel_efficiency[ch];

    if gated {
        let gate = Gate::around(events.iter().map(|e| e.0).collect(), config.record_window, 0.0, span);
        events.extend(mode1_triplet.into_iter().filter(|e| gate.contains(e.0)));
        let length_s = gate.total * 1e-12;
        for ch in 0..2u8 {
            for (rate, origin) in [
                (pair1_rate(ch as usize), TagOrigin::Pair1),
                (config.dark_rate[ch as usize], TagOrigin::Dark),
            ] {
                let n = poisson(rate * length_s, &mut rng)?;
                for _ in 0..n {
                    let u = rng.random::<f64>() * gate.total;
                    events.push((gate.locate(u), ch, origin));
                }
            }
        }
    } else {
        for ch in 0..2u8 {
            let n = poisson(pair1_rate(ch as usize) * config.duration, &mut rng)?;
            for _ in 0..n {
                events.push((rng.random::<f64>() * span, ch, TagOrigin::Pair1));
            }
        }
    }

    let mut tags: Vec<(u64, u8, TagOrigin)> = events
        .into_iter()
        .filter(|e| e.0 >= 0.0 && e.0 < span)
        .map(|(t, ch, o)| ((t / config.tick).floor() as u64, ch, o))
        .collect();
    tags.sort_by_key(|&(t, ch, _)| (t, ch));

    let (records, origins) = tags
        .into_iter()
        .map(|(t, ch, o)| (TimeTagRecord::new(t, ch), o))
        .unzip();
    Ok(SimulatedRun {
        stream: TagStream::new(config.tick_fs(), records),
        origins,
        n_triplets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{MeasurementSetting, Settings};
    use crate::qcore::{Axis, Ket};

    fn ghz() -> DensityMatrix {
        DensityMatrix::from_ket(&Ket::ghz_plus())
    }

    fn xxx() -> Settings {
        Settings::paulis(&[Axis::X; 3])
    }

    fn dark_only(duration: f64) -> ExperimentConfig {
        ExperimentConfig {
            duration,
            ..Default::default()
        }
    }

    #[test]
    fn tiny_duration_is_empty() {
        let run = simulate_setting(&dark_only(1e-15), &ghz(), &xxx(), 0).unwrap();
        assert!(run.stream.records.is_empty());
    }

    #[test]
    fn dark_counts_are_poisson() {
        let run = simulate_setting(&dark_only(10.0), &ghz(), &xxx(), 0).unwrap();
        let mut per = [0usize; N_CHANNELS];
        for r in &run.stream.records {
            per[r.channel as usize] += 1;
        }
        let band = 4.0 * 3300f64.sqrt();
        for (ch, &n) in per.iter().enumerate() {
            assert!((n as f64 - 3300.0).abs() < band, "channel {ch}: {n}");
        }
        assert!(run.origins.iter().all(|o| *o == TagOrigin::Dark));
    }

    #[test]
    fn deterministic_per_substream() {
        let c = ExperimentConfig {
            triplet_rate: 200.0,
            pair1_rate: 1e4,
            seed: 11,
            ..dark_only(2.0)
        };
        let a = simulate_setting(&c, &ghz(), &xxx(), 3).unwrap();
        let b = simulate_setting(&c, &ghz(), &xxx(), 3).unwrap();
        let other = simulate_setting(&c, &ghz(), &xxx(), 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.stream, other.stream);
        a.stream.check_sorted().unwrap();
        assert!(a.stream.records.iter().all(|r| (r.channel as usize) < N_CHANNELS));
    }

    #[test]
    fn detected_outcomes_follow_born_rule() {
        let c = ExperimentConfig {
            triplet_rate: 1e4,
            eta1: 1.0,
            eta2: 1.0,
            eta3: 1.0,
            dark_rate: [0.0; N_CHANNELS],
            ..dark_only(10.0)
        };
        let s = Settings::triple(
            MeasurementSetting::equatorial(0.4),
            MeasurementSetting::x(),
            MeasurementSetting::along([0.3, 0.2, 0.9]).unwrap(),
        );
        let run = simulate_setting(&c, &ghz(), &s, 0).unwrap();
        let probs = outcome_probabilities(&ghz(), &s).unwrap();
        let mut counts = [0f64; 8];
        let triplets = run.complete_triplets();
        for t in &triplets {
            let chans = t.map(|i| run.stream.records[i].channel);
            let k = chans.iter().enumerate().fold(0, |acc, (q, &ch)| {
                assert_eq!(ch as usize / 2, q);
                (acc << 1) | (ch as usize % 2)
            });
            counts[k] += 1.0;
        }
        let n = triplets.len() as f64;
        assert!(n > 9e4);
        for k in 0..8 {
            let sigma = (n * probs[k] * (1.0 - probs[k])).sqrt().max(1.0);
            assert!((counts[k] - n * probs[k]).abs() < 5.0 * sigma, "outcome {k}");
        }
    }

    #[test]
    fn gated_background_only_near_telecom_tags() {
        let c = ExperimentConfig {
            triplet_rate: 50.0,
            pair1_rate: 2e6,
            acquisition: Acquisition::Gated,
            ..dark_only(5.0)
        };
        let run = simulate_setting(&c, &ghz(), &xxx(), 0).unwrap();
        let tick = c.tick;
        let telecom: Vec<f64> = run
            .stream
            .records
            .iter()
            .filter(|r| r.channel >= 2)
            .map(|r| r.timestamp as f64 * tick)
            .collect();
        let mut pair1 = 0usize;
        for (r, o) in run.stream.records.iter().zip(&run.origins) {
            if r.channel < 2 {
                let t = r.timestamp as f64 * tick;
                let i = telecom.partition_point(|&x| x < t);
                let near = [i.checked_sub(1), Some(i)]
                    .into_iter()
                    .flatten()
                    .filter_map(|j| telecom.get(j))
                    .any(|&x| (x - t).abs() <= c.record_window + 2.0 * tick);
                assert!(near, "mode-1 tag at {t} ps far from any telecom tag");
                if *o == TagOrigin::Pair1 {
                    pair1 += 1;
                }
            }
        }
        // Telecom tags are sparse, so gates rarely overlap.
        let gate_s = telecom.len() as f64 * 2.0 * c.record_window * 1e-12;
        let expected = c.pair1_rate * c.eta1 * gate_s;
        assert!(
            (pair1 as f64 - expected).abs() < 5.0 * expected.sqrt() + 0.01 * expected,
            "{pair1} vs {expected}"
        );
    }

    #[test]
    fn gate_union_and_lookup() {
        let g = Gate::around(vec![10.0, 0.0, 12.0, 50.0], 2.0, 0.0, 100.0);
        assert_eq!(g.starts, vec![0.0, 8.0, 48.0]);
        assert_eq!(g.ends, vec![2.0, 14.0, 52.0]);
        assert_eq!(g.total, 12.0);
        assert!(g.contains(13.0) && !g.contains(5.0));
        assert_eq!(g.locate(0.5), 0.5);
        assert_eq!(g.locate(3.0), 9.0);
        assert_eq!(g.locate(9.0), 49.0);
    }
}

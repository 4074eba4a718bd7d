use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use super::{CoincidenceParams, Triple};
use crate::error::{Error, Result};
use crate::timetag::{group_of, TagStream, TimeTagRecord, N_CHANNELS};

#[derive(Debug, Clone, Copy)]
struct Pending {
    corrected: i64,
    record: TimeTagRecord,
    index: usize,
    used: bool,
}

/// Single-pass triple finder over a timestamp-sorted tag stream.
///
/// Tags pass through a small reorder heap that restores delay-corrected
/// order, then a buffer spanning one record window. The earliest unused tag
/// anchors a candidate; the earliest unused tag of each other group within
/// `record_window` after it completes the triple. An anchor that cannot be
/// completed is discarded, since no later anchor can reach back to it.
#[derive(Debug)]
pub struct TripleFinder {
    shifts: [i64; N_CHANNELS],
    max_shift: i64,
    window: i64,
    heap: BinaryHeap<Reverse<(i64, u8, usize, u64)>>,
    buffer: VecDeque<Pending>,
    last_raw: Option<u64>,
    next_index: usize,
    peak_resident: usize,
    found: Vec<Triple>,
}

impl TripleFinder {
    pub fn new(params: &CoincidenceParams, tick_ps: f64) -> Result<Self> {
        params.validate()?;
        let shifts = params.shifts(tick_ps);
        Ok(Self {
            shifts,
            max_shift: *shifts.iter().max().unwrap(),
            window: params.record_ticks(tick_ps),
            heap: BinaryHeap::new(),
            buffer: VecDeque::new(),
            last_raw: None,
            next_index: 0,
            peak_resident: 0,
            found: Vec::new(),
        })
    }

    pub fn push(&mut self, record: TimeTagRecord) -> Result<()> {
        let index = self.next_index;
        if self.last_raw.is_some_and(|last| record.timestamp < last) {
            return Err(Error::Unsorted { index });
        }
        if record.channel as usize >= N_CHANNELS {
            return Err(Error::MalformedStream {
                offset: index as u64,
                reason: format!("channel {} out of range", record.channel),
            });
        }
        self.next_index += 1;
        self.last_raw = Some(record.timestamp);
        let corrected = record.timestamp as i64 - self.shifts[record.channel as usize];
        self.heap
            .push(Reverse((corrected, record.channel, index, record.timestamp)));
        self.peak_resident = self.peak_resident.max(self.resident());
        // Every later tag has corrected time >= this bound.
        let bound = record.timestamp as i64 - self.max_shift;
        self.release(Some(bound));
        Ok(())
    }

    /// Flushes the remaining tags and returns every triple found.
    pub fn finish(mut self) -> Vec<Triple> {
        self.release(None);
        self.found
    }

    /// Largest number of tags held at once.
    pub fn peak_resident(&self) -> usize {
        self.peak_resident
    }

    pub fn resident(&self) -> usize {
        self.heap.len() + self.buffer.len()
    }

    /// Triples completed so far.
    pub fn drain(&mut self) -> Vec<Triple> {
        std::mem::take(&mut self.found)
    }

    fn release(&mut self, bound: Option<i64>) {
        while let Some(Reverse((corrected, channel, index, timestamp))) = self.heap.peek().copied() {
            if bound.is_some_and(|b| corrected >= b) {
                break;
            }
            self.heap.pop();
            self.buffer.push_back(Pending {
                corrected,
                record: TimeTagRecord { timestamp, channel },
                index,
                used: false,
            });
        }
        self.match_ready(bound);
    }

    fn match_ready(&mut self, bound: Option<i64>) {
        while let Some(front) = self.buffer.front().copied() {
            if front.used {
                self.buffer.pop_front();
                continue;
            }
            let limit = front.corrected + self.window;
            // Tags up to `limit` may still be in the heap.
            if bound.is_some_and(|b| b <= limit) {
                break;
            }
            self.buffer.pop_front();
            let anchor_group = group_of(front.record.channel);
            let mut pick: [Option<usize>; 3] = [None; 3];
            for (pos, p) in self.buffer.iter().enumerate() {
                if p.corrected > limit {
                    break;
                }
                let g = group_of(p.record.channel);
                if !p.used && g != anchor_group && pick[g].is_none() {
                    pick[g] = Some(pos);
                }
            }
            let others: Vec<usize> = (0..3).filter(|&g| g != anchor_group).collect();
            if let (Some(i), Some(j)) = (pick[others[0]], pick[others[1]]) {
                let mut members: [Pending; 3] = [front; 3];
                members[others[0]] = self.buffer[i];
                members[others[1]] = self.buffer[j];
                self.buffer[i].used = true;
                self.buffer[j].used = true;
                self.found.push(Triple {
                    records: members.map(|m| m.record),
                    indices: members.map(|m| m.index),
                    corrected: members.map(|m| m.corrected),
                });
            }
        }
    }
}

/// All triples of a stream, in anchor order.
pub fn find_triples(stream: &TagStream, params: &CoincidenceParams) -> Result<Vec<Triple>> {
    let mut finder = TripleFinder::new(params, stream.tick_ps())?;
    for r in &stream.records {
        finder.push(*r)?;
    }
    Ok(finder.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const TICK_FS: u64 = 156_250;

    fn stream(tags: &[(u64, u8)]) -> TagStream {
        TagStream::new(TICK_FS, tags.iter().map(|&(t, c)| TimeTagRecord::new(t, c)).collect())
    }

    fn params() -> CoincidenceParams {
        CoincidenceParams::default()
    }

    #[test]
    fn one_triple() {
        let s = stream(&[(1000, 0), (1003, 2), (1005, 4)]);
        let t = find_triples(&s, &params()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].indices, [0, 1, 2]);
        assert_eq!(t[0].differences(), (3, 2));
    }

    #[test]
    fn same_group_never_pairs() {
        let s = stream(&[(1000, 0), (1001, 1), (1002, 0)]);
        assert!(find_triples(&s, &params()).unwrap().is_empty());
    }

    #[test]
    fn span_limited_by_record_window() {
        let s = stream(&[(1000, 0), (1050, 2), (1097, 4)]);
        assert!(find_triples(&s, &params()).unwrap().is_empty());
        let s = stream(&[(1000, 0), (1050, 2), (1096, 4)]);
        assert_eq!(find_triples(&s, &params()).unwrap().len(), 1);
    }

    #[test]
    fn unsorted_input_is_an_error() {
        let s = stream(&[(10, 0), (5, 2)]);
        assert!(matches!(find_triples(&s, &params()), Err(Error::Unsorted { index: 1 })));
    }

    #[test]
    fn delay_correction_reorders() {
        // Mode-3 photons arrive 7 ns (44.8 ticks) late.
        let p = params().with_delays([0.0, 0.0, 0.0, 0.0, 7000.0, 7000.0]);
        let s = stream(&[(1000, 0), (1001, 2), (1040, 1), (1045, 5), (1085, 3), (1090, 4)]);
        let t = find_triples(&s, &p).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].indices, [0, 1, 3]);
        assert_eq!(t[0].corrected, [1000, 1001, 1000]);
        assert_eq!(t[1].indices, [2, 4, 5]);
    }

    #[test]
    fn greedy_uses_each_tag_once() {
        let s = stream(&[(0, 0), (1, 1), (2, 2), (3, 4), (4, 3), (5, 5)]);
        let t = find_triples(&s, &params()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].indices, [0, 2, 3]);
        assert_eq!(t[1].indices, [1, 4, 5]);
    }

    #[test]
    fn memory_stays_bounded_on_bursts() {
        // Bursts of 50 tags on every channel separated by long gaps.
        let mut tags = Vec::new();
        for burst in 0..200u64 {
            for k in 0..50u64 {
                for ch in 0..6u8 {
                    tags.push((burst * 100_000 + k, ch));
                }
            }
        }
        let s = stream(&tags);
        let mut f = TripleFinder::new(&params(), s.tick_ps()).unwrap();
        for r in &s.records {
            f.push(*r).unwrap();
        }
        let peak = f.peak_resident();
        let triples = f.finish();
        assert_eq!(triples.len(), 200 * 100);
        // One burst (300 tags) plus the 96-tick lookahead.
        assert!(peak <= 2 * 300, "peak resident {peak}");
    }

    proptest! {
        #[test]
        fn offset_invariance(
            mut tags in prop::collection::vec((0u64..5_000, 0u8..6), 0..120),
            offset in 0u64..1_000_000,
        ) {
            tags.sort();
            let a = find_triples(&stream(&tags), &params()).unwrap();
            let shifted: Vec<_> = tags.iter().map(|&(t, c)| (t + offset, c)).collect();
            let b = find_triples(&stream(&shifted), &params()).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(x.indices, y.indices);
            }
        }

        #[test]
        fn triples_are_valid(mut tags in prop::collection::vec((0u64..2_000, 0u8..6), 0..150)) {
            tags.sort();
            let p = params();
            let triples = find_triples(&stream(&tags), &p).unwrap();
            let mut used = std::collections::HashSet::new();
            for t in &triples {
                prop_assert!(super::super::tests::check_groups(&t.records));
                prop_assert!(t.span() <= p.record_ticks(156.25));
                for i in t.indices {
                    prop_assert!(used.insert(i));
                }
            }
        }
    }
}

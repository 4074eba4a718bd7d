use std::collections::HashSet;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::{CoincidenceParams, Triple};
use crate::error::{Error, Result};

/// Counts of (t₂ − t₁, t₃ − t₂) over tick-aligned bins covering ±record
/// window on both axes. Bin `k` is centred on `k · bin_ticks` ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2D {
    bin_ticks: u32,
    half_bins: i64,
    counts: Vec<u64>,
}

impl Histogram2D {
    pub fn new(params: &CoincidenceParams, tick_ps: f64) -> Self {
        let b = params.bin_ticks.max(1) as i64;
        let half_bins = (params.record_ticks(tick_ps) + b - 1) / b;
        let side = (2 * half_bins + 1) as usize;
        Self {
            bin_ticks: b as u32,
            half_bins,
            counts: vec![0; side * side],
        }
    }

    pub fn from_triples(triples: &[Triple], params: &CoincidenceParams, tick_ps: f64) -> Self {
        let mut h = Self::new(params, tick_ps);
        for t in triples {
            let (d21, d32) = t.differences();
            h.add(d21, d32);
        }
        h
    }

    pub fn bin_of(&self, ticks: i64) -> i64 {
        (ticks as f64 / self.bin_ticks as f64).round() as i64
    }

    /// Adds one entry at tick differences (t21, t32); entries off the grid
    /// are dropped and reported as `false`.
    pub fn add(&mut self, t21: i64, t32: i64) -> bool {
        let (b21, b32) = (self.bin_of(t21), self.bin_of(t32));
        match self.offset(b21, b32) {
            Some(i) => {
                self.counts[i] += 1;
                true
            }
            None => false,
        }
    }

    fn offset(&self, b21: i64, b32: i64) -> Option<usize> {
        let h = self.half_bins;
        if b21.abs() > h || b32.abs() > h {
            return None;
        }
        let side = 2 * h + 1;
        Some(((b21 + h) * side + (b32 + h)) as usize)
    }

    pub fn get(&self, b21: i64, b32: i64) -> u64 {
        self.offset(b21, b32).map_or(0, |i| self.counts[i])
    }

    pub fn half_bins(&self) -> i64 {
        self.half_bins
    }

    pub fn bin_ticks(&self) -> u32 {
        self.bin_ticks
    }

    pub fn bins(&self) -> RangeInclusive<i64> {
        -self.half_bins..=self.half_bins
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Bin with the most counts (lowest coordinates on ties).
    pub fn argmax(&self) -> (i64, i64, u64) {
        let mut best = (0, 0, 0);
        for b21 in self.bins() {
            for b32 in self.bins() {
                let c = self.get(b21, b32);
                if c > best.2 {
                    best = (b21, b32, c);
                }
            }
        }
        best
    }

    /// Total counts with t₃ − t₂ in bin `b32`.
    pub fn row_sum(&self, b32: i64) -> u64 {
        self.bins().map(|b21| self.get(b21, b32)).sum()
    }

    /// Total counts with t₂ − t₁ in bin `b21`.
    pub fn column_sum(&self, b21: i64) -> u64 {
        self.bins().map(|b32| self.get(b21, b32)).sum()
    }

    /// CSV with header `t21_ticks,t32_ticks,count`, every bin listed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t21_ticks,t32_ticks,count\n");
        let b = self.bin_ticks as i64;
        for b21 in self.bins() {
            for b32 in self.bins() {
                writeln!(out, "{},{},{}", b21 * b, b32 * b, self.get(b21, b32)).unwrap();
            }
        }
        out
    }
}

/// A set of histogram bins.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region(Vec<(i64, i64)>);

impl Region {
    pub fn new(bins: Vec<(i64, i64)>) -> Self {
        Self(bins)
    }

    pub fn rect(b21: RangeInclusive<i64>, b32: RangeInclusive<i64>) -> Self {
        let mut bins = Vec::new();
        for x in b21 {
            for y in b32.clone() {
                bins.push((x, y));
            }
        }
        Self(bins)
    }

    pub fn bins(&self) -> &[(i64, i64)] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn mean(&self, h: &Histogram2D) -> f64 {
        self.0.iter().map(|&(x, y)| h.get(x, y)).sum::<u64>() as f64 / self.0.len() as f64
    }
}

/// Peak: the 3×3 bins around `center`. Background: the same three
/// t₃ − t₂ rows where |t₂ − t₁ − center| exceeds 3 ns, i.e. the accidental
/// ridge of true telecom pairs with an unrelated mode-1 photon, which is
/// the level underneath the peak.
pub fn standard_regions(h: &Histogram2D, center: (i64, i64), tick_ps: f64) -> (Region, Region) {
    let (c21, c32) = center;
    let peak = Region::rect(c21 - 1..=c21 + 1, c32 - 1..=c32 + 1);
    let bin_ps = h.bin_ticks() as f64 * tick_ps;
    let mut bg = Vec::new();
    for b32 in c32 - 1..=c32 + 1 {
        for b21 in h.bins() {
            if ((b21 - c21) as f64 * bin_ps).abs() > 3000.0 && b32.abs() <= h.half_bins() {
                bg.push((b21, b32));
            }
        }
    }
    (peak, Region(bg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snr {
    /// Infinite when saturated.
    pub value: f64,
    pub peak_mean: f64,
    pub background_mean: f64,
    /// Background was empty of counts.
    pub saturated: bool,
}

/// Ratio of mean bin contents of two disjoint regions.
pub fn snr(h: &Histogram2D, peak: &Region, background: &Region) -> Result<Snr> {
    if peak.is_empty() {
        return Err(Error::EmptyRegion("peak"));
    }
    if background.is_empty() {
        return Err(Error::EmptyRegion("background"));
    }
    let p: HashSet<_> = peak.bins().iter().collect();
    if background.bins().iter().any(|b| p.contains(b)) {
        return Err(Error::OverlappingRegions);
    }
    let peak_mean = peak.mean(h);
    let background_mean = background.mean(h);
    if background_mean == 0.0 {
        if peak_mean == 0.0 {
            return Err(Error::NoPeak);
        }
        return Ok(Snr {
            value: f64::INFINITY,
            peak_mean,
            background_mean,
            saturated: true,
        });
    }
    Ok(Snr {
        value: peak_mean / background_mean,
        peak_mean,
        background_mean,
        saturated: false,
    })
}

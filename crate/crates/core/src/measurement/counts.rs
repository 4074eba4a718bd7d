use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::setting::{outcome_label, outcome_parity, parse_outcome_label, Settings};
use crate::error::{Error, Result};

/// Coincidence counts for every outcome sign pattern of one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    pub settings: Settings,
    counts: Vec<u64>,
}

impl CountTable {
    pub fn new(settings: Settings, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != settings.n_outcomes() {
            return Err(Error::DimensionMismatch {
                expected: settings.n_outcomes(),
                got: counts.len(),
            });
        }
        Ok(Self { settings, counts })
    }

    pub fn zeros(settings: Settings) -> Self {
        let n = settings.n_outcomes();
        Self {
            settings,
            counts: vec![0; n],
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n_qubits(&self) -> usize {
        self.settings.n_qubits()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn increment(&mut self, outcome: usize) {
        self.counts[outcome] += 1;
    }

    /// Adds another table of the same settings.
    pub fn merge(&mut self, other: &CountTable) -> Result<()> {
        if !self.settings.approx_eq(&other.settings) {
            return Err(Error::OutOfRange(format!(
                "cannot merge tables for settings {} and {}",
                self.settings, other.settings
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// Counts summed over every qubit not in `keep`; the result is indexed by
    /// the sign pattern of the kept qubits in their original order.
    pub fn marginal(&self, keep: &[usize]) -> Vec<u64> {
        let n = self.n_qubits();
        let mut out = vec![0u64; 1 << keep.len()];
        for (k, &c) in self.counts.iter().enumerate() {
            let idx = keep
                .iter()
                .fold(0usize, |acc, &q| (acc << 1) | ((k >> (n - 1 - q)) & 1));
            out[idx] += c;
        }
        out
    }

    /// Splits off qubit `qubit`: returns the tables of the remaining qubits
    /// conditioned on that qubit's `+` and `−` outcomes.
    pub fn split_on(&self, qubit: usize) -> Result<(CountTable, CountTable)> {
        let n = self.n_qubits();
        if qubit >= n || n < 2 {
            return Err(Error::InvalidSubsystem {
                index: qubit,
                n_qubits: n,
            });
        }
        let rest: Vec<usize> = (0..n).filter(|&q| q != qubit).collect();
        let settings = Settings::new(rest.iter().map(|&q| self.settings.get(q)).collect())?;
        let mut plus = CountTable::zeros(settings.clone());
        let mut minus = CountTable::zeros(settings);
        for (k, &c) in self.counts.iter().enumerate() {
            let idx = rest
                .iter()
                .fold(0usize, |acc, &q| (acc << 1) | ((k >> (n - 1 - q)) & 1));
            if (k >> (n - 1 - qubit)) & 1 == 0 {
                plus.counts[idx] += c;
            } else {
                minus.counts[idx] += c;
            }
        }
        Ok((plus, minus))
    }

    /// Draws `n` outcomes from `probs` (one multinomial sample).
    pub fn sample<R: Rng + ?Sized>(settings: Settings, probs: &[f64], n: u64, rng: &mut R) -> Result<Self> {
        if probs.len() != settings.n_outcomes() {
            return Err(Error::DimensionMismatch {
                expected: settings.n_outcomes(),
                got: probs.len(),
            });
        }
        let mut counts = vec![0u64; probs.len()];
        let mut remaining = n;
        let mut mass = 1.0f64;
        for (k, &p) in probs.iter().enumerate() {
            if remaining == 0 {
                break;
            }
            if k == probs.len() - 1 {
                counts[k] = remaining;
                break;
            }
            let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
            let draw = Binomial::new(remaining, q)
                .map_err(|e| Error::OutOfRange(e.to_string()))?
                .sample(rng);
            counts[k] = draw;
            remaining -= draw;
            mass -= p;
        }
        Self::new(settings, counts)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("outcome,count\n");
        let n = self.n_qubits();
        for (k, c) in self.counts.iter().enumerate() {
            writeln!(out, "{},{}", outcome_label(k, n), c).unwrap();
        }
        out
    }

    pub fn from_csv(settings: Settings, text: &str) -> Result<Self> {
        let mut table = CountTable::zeros(settings);
        let n = table.n_qubits();
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "outcome,count" => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    reason: "expected header `outcome,count`".into(),
                })
            }
        }
        for (idx, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| Error::Parse {
                line: idx + 1,
                reason: reason.to_string(),
            };
            let (label, count) = line.split_once(',').ok_or_else(|| bad("missing comma"))?;
            let outcome = parse_outcome_label(label.trim())
                .filter(|_| label.trim().len() == n)
                .ok_or_else(|| bad("bad outcome label"))?;
            let count: u64 = count.trim().parse().map_err(|_| bad("bad count"))?;
            table.counts[outcome] += count;
        }
        Ok(table)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub value: f64,
    pub sigma: f64,
    pub total: u64,
}

/// E = Σ parity·N / N with multinomial standard error √((1 − E²)/N).
pub fn correlation_from_counts(t: &CountTable) -> Result<Correlation> {
    let total = t.total();
    if total == 0 {
        return Err(Error::EmptyTable);
    }
    let n = t.n_qubits();
    let signed: f64 = t
        .counts()
        .iter()
        .enumerate()
        .map(|(k, &c)| outcome_parity(k, n) * c as f64)
        .sum();
    let value = signed / total as f64;
    let sigma = ((1.0 - value * value).max(0.0) / total as f64).sqrt();
    Ok(Correlation { value, sigma, total })
}

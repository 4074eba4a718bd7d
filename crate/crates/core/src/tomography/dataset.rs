use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::measurement::{outcome_probabilities, tomography_settings, CountTable, MeasurementSetting, Settings};
use crate::qcore::DensityMatrix;

/// Outcome weights for one setting. Weights are usually integer counts but
/// expected (fractional) counts are accepted for exact-statistics studies.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingData {
    pub settings: Settings,
    pub counts: Vec<f64>,
}

impl SettingData {
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Count data for every Pauli setting combination of an n-qubit state.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyDataset {
    n_qubits: usize,
    entries: Vec<SettingData>,
}

impl TomographyDataset {
    /// Checks that all 3ⁿ Pauli combinations are present. Tables for the same
    /// setting are merged.
    pub fn new(entries: Vec<SettingData>) -> Result<Self> {
        let first = entries
            .first()
            .ok_or_else(|| Error::IncompleteData("no settings".into()))?;
        let n_qubits = first.settings.n_qubits();
        let mut merged: Vec<SettingData> = Vec::new();
        for e in entries {
            if e.settings.n_qubits() != n_qubits || e.counts.len() != 1 << n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: n_qubits,
                    got: e.settings.n_qubits(),
                });
            }
            if e.counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
                return Err(Error::OutOfRange("counts must be finite and non-negative".into()));
            }
            match merged.iter_mut().find(|m| m.settings.approx_eq(&e.settings)) {
                Some(m) => m.counts.iter_mut().zip(&e.counts).for_each(|(a, b)| *a += b),
                None => merged.push(e),
            }
        }
        for s in tomography_settings(n_qubits)? {
            if !merged.iter().any(|m| m.settings.approx_eq(&s)) {
                return Err(Error::IncompleteData(format!("missing setting {s}")));
            }
        }
        Ok(Self {
            n_qubits,
            entries: merged,
        })
    }

    pub fn from_count_tables(tables: &[CountTable]) -> Result<Self> {
        Self::new(
            tables
                .iter()
                .map(|t| SettingData {
                    settings: t.settings.clone(),
                    counts: t.counts().iter().map(|&c| c as f64).collect(),
                })
                .collect(),
        )
    }

    /// Expected counts `n_per_setting · p` for every Pauli setting.
    pub fn exact(rho: &DensityMatrix, n_per_setting: f64) -> Result<Self> {
        let n = rho.n_qubits()?;
        let entries = tomography_settings(n)?
            .into_iter()
            .map(|s| {
                let p = outcome_probabilities(rho, &s)?;
                Ok(SettingData {
                    counts: p.iter().map(|v| v * n_per_setting).collect(),
                    settings: s,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    /// One multinomial sample of `n_per_setting` events per Pauli setting.
    pub fn sampled<R: Rng + ?Sized>(rho: &DensityMatrix, n_per_setting: u64, rng: &mut R) -> Result<Self> {
        let n = rho.n_qubits()?;
        let tables = tomography_settings(n)?
            .into_iter()
            .map(|s| {
                let p = outcome_probabilities(rho, &s)?;
                CountTable::sample(s, &p, n_per_setting, rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_count_tables(&tables)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn entries(&self) -> &[SettingData] {
        &self.entries
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(SettingData::total).sum()
    }

    /// Same data with the settings listed in another order.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.entries.len() {
            return Err(Error::DimensionMismatch {
                expected: self.entries.len(),
                got: order.len(),
            });
        }
        Self::new(order.iter().map(|&i| self.entries[i].clone()).collect())
    }

    /// Adds another dataset of the same qubit count, setting by setting.
    pub fn merged(&self, other: &TomographyDataset) -> Result<Self> {
        let mut all = self.entries.clone();
        all.extend(other.entries.iter().cloned());
        Self::new(all)
    }

    /// Resamples each setting multinomially at its own (rounded) total.
    pub fn resample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let total = e.total();
                let n = total.round() as u64;
                let p: Vec<f64> = if total > 0.0 {
                    e.counts.iter().map(|c| c / total).collect()
                } else {
                    vec![0.0; e.counts.len()]
                };
                let t = CountTable::sample(e.settings.clone(), &p, n, rng)?;
                Ok(SettingData {
                    settings: e.settings.clone(),
                    counts: t.counts().iter().map(|&c| c as f64).collect(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }
}

pub const MANIFEST: &str = "manifest.csv";

fn bloch_header(n: usize) -> String {
    let mut h = String::from("file");
    for q in 1..=n {
        write!(h, ",n{q}x,n{q}y,n{q}z").unwrap();
    }
    h
}

/// Writes one `outcome,count` CSV per setting plus `manifest.csv` listing
/// each file with the Bloch vectors of its settings. Counts are rounded.
pub fn write_dataset(data: &TomographyDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = bloch_header(data.n_qubits);
    manifest.push('\n');
    for (k, e) in data.entries.iter().enumerate() {
        let file = format!("setting_{k:02}.csv");
        let counts: Vec<u64> = e.counts.iter().map(|c| c.round() as u64).collect();
        fs::write(dir.join(&file), CountTable::new(e.settings.clone(), counts)?.to_csv())?;
        manifest.push_str(&file);
        for s in e.settings.iter() {
            for v in s.bloch() {
                write!(manifest, ",{v:.17e}").unwrap();
            }
        }
        manifest.push('\n');
    }
    fs::write(dir.join(MANIFEST), manifest)?;
    Ok(())
}

pub fn read_dataset(dir: &Path) -> Result<TomographyDataset> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, h)| h.trim()).unwrap_or("");
    let n = (1..=3)
        .find(|&n| header == bloch_header(n))
        .ok_or_else(|| Error::Parse {
            line: 1,
            reason: format!("unexpected manifest header `{header}`"),
        })?;
    let mut tables = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| Error::Parse { line: idx + 1, reason };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 1 + 3 * n {
            return Err(bad(format!("expected {} fields", 1 + 3 * n)));
        }
        let values = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| bad(format!("bad number `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        let settings = values
            .chunks(3)
            .map(|c| MeasurementSetting::along([c[0], c[1], c[2]]).map_err(|e| bad(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        let settings = Settings::new(settings)?;
        let csv = fs::read_to_string(dir.join(fields[0]))?;
        tables.push(CountTable::from_csv(settings, &csv)?);
    }
    TomographyDataset::from_count_tables(&tables)
}

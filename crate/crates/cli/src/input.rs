use std::fs;
use std::path::Path;

use cascade::coincidence::{count_table, delay_calibrate, find_triples, CoincidenceParams};
use cascade::measurement::{CountTable, Relabeling};
use cascade::timetag::{read_stream, RunRecord, StateDescriptor};
use cascade::tomography::{read_dataset, MANIFEST};
use cascade::{Error, Result};
use serde::{Deserialize, Serialize};

pub const RECORDS: &str = "records.toml";

/// Index of a `simulate` output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Records {
    /// σz stream used to calibrate the channel delays.
    pub calibration: String,
    pub run: Vec<RunRecord>,
}

/// Count tables and, for simulated input, the source that produced them.
pub struct Loaded {
    pub tables: Vec<CountTable>,
    pub state: Option<StateDescriptor>,
}

/// Reads either a `simulate` output (directory or its `records.toml`) or a
/// count-table dataset directory with a `manifest.csv`.
pub fn load(path: &Path, params: &CoincidenceParams) -> Result<Loaded> {
    let (dir, records) = if path.is_dir() {
        (path.to_path_buf(), path.join(RECORDS))
    } else {
        (
            path.parent().unwrap_or(Path::new(".")).to_path_buf(),
            path.to_path_buf(),
        )
    };
    if path.is_dir() && dir.join(MANIFEST).exists() {
        let data = read_dataset(&dir)?;
        let tables = data
            .entries()
            .iter()
            .map(|e| CountTable::new(e.settings.clone(), e.counts.iter().map(|c| c.round() as u64).collect()))
            .collect::<Result<_>>()?;
        return Ok(Loaded { tables, state: None });
    }
    let text = fs::read_to_string(&records)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", records.display())))?;
    let records: Records = toml::from_str(&text).map_err(|e| Error::Parse {
        line: e.span().map(|s| text[..s.start].matches('\n').count() + 1).unwrap_or(0),
        reason: e.message().to_string(),
    })?;
    let calibration = read_stream(&dir.join(&records.calibration))?;
    let delays = delay_calibrate(&calibration, params)?;
    let params = params.clone().with_delays(delays);

    let mut tables: Vec<CountTable> = Vec::new();
    for r in &records.run {
        let name = r
            .stream
            .as_deref()
            .ok_or_else(|| Error::IncompleteData("run without a stream file".into()))?;
        let stream = read_stream(&dir.join(name))?;
        let triples = find_triples(&stream, &params)?;
        let relabeling = Relabeling { mask: r.relabel_mask };
        let table = count_table(&triples, &params, stream.tick_ps(), &r.settings, relabeling);
        match tables.iter_mut().find(|t| t.settings.approx_eq(&r.settings)) {
            Some(t) => t.merge(&table)?,
            None => tables.push(table),
        }
    }
    Ok(Loaded {
        tables,
        state: records.run.first().map(|r| r.state),
    })
}

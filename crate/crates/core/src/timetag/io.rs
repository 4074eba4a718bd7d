//! Binary and CSV stream files.
//!
//! Binary layout: a 16-byte header (`TTAG`, format version as u32 LE, tick
//! length in femtoseconds as u64 LE) followed by 9-byte records (timestamp
//! ticks u64 LE, channel u8).

use std::fs;
use std::io::Write as _;
use std::path::Path;

use super::{TimeTagRecord, N_CHANNELS};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TTAG";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;
pub const RECORD_LEN: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagStream {
    pub tick_fs: u64,
    pub records: Vec<TimeTagRecord>,
}

impl TagStream {
    pub fn new(tick_fs: u64, records: Vec<TimeTagRecord>) -> Self {
        Self { tick_fs, records }
    }

    pub fn tick_ps(&self) -> f64 {
        self.tick_fs as f64 / 1000.0
    }

    pub fn check_sorted(&self) -> Result<()> {
        check_sorted(&self.records)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.check_sorted()?;
        let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * self.records.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.tick_fs.to_le_bytes());
        for r in &self.records {
            out.extend_from_slice(&r.timestamp.to_le_bytes());
            out.push(r.channel);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |offset: usize, reason: &str| Error::MalformedStream {
            offset: offset as u64,
            reason: reason.to_string(),
        };
        if bytes.len() < HEADER_LEN {
            return Err(bad(bytes.len(), "truncated header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(bad(0, "bad magic"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(bad(4, &format!("unsupported format version {version}")));
        }
        let tick_fs = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        if tick_fs == 0 {
            return Err(bad(8, "zero tick length"));
        }
        let body = &bytes[HEADER_LEN..];
        let whole = body.len() / RECORD_LEN;
        if !body.len().is_multiple_of(RECORD_LEN) {
            return Err(bad(HEADER_LEN + whole * RECORD_LEN, "truncated record"));
        }
        let mut records = Vec::with_capacity(whole);
        let mut last = 0u64;
        for (k, chunk) in body.chunks_exact(RECORD_LEN).enumerate() {
            let offset = HEADER_LEN + k * RECORD_LEN;
            let timestamp = u64::from_le_bytes(chunk[..8].try_into().unwrap());
            let channel = chunk[8];
            if channel as usize >= N_CHANNELS {
                return Err(bad(offset + 8, &format!("channel {channel} out of range")));
            }
            if timestamp < last {
                return Err(bad(offset, "timestamps decrease"));
            }
            last = timestamp;
            records.push(TimeTagRecord { timestamp, channel });
        }
        Ok(Self { tick_fs, records })
    }
}

pub(crate) fn check_sorted(records: &[TimeTagRecord]) -> Result<()> {
    match records.windows(2).position(|w| w[1].timestamp < w[0].timestamp) {
        Some(i) => Err(Error::Unsorted { index: i + 1 }),
        None => Ok(()),
    }
}

pub fn write_stream(stream: &TagStream, path: &Path) -> Result<()> {
    fs::write(path, stream.to_bytes()?)?;
    Ok(())
}

pub fn read_stream(path: &Path) -> Result<TagStream> {
    TagStream::from_bytes(&fs::read(path)?)
}

/// CSV with header `timestamp_ticks,channel`. The tick length is not stored.
pub fn write_csv(records: &[TimeTagRecord], path: &Path) -> Result<()> {
    check_sorted(records)?;
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "timestamp_ticks,channel")?;
    for r in records {
        writeln!(out, "{},{}", r.timestamp, r.channel)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<TimeTagRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "timestamp_ticks,channel" => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                reason: "expected header `timestamp_ticks,channel`".into(),
            })
        }
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::Parse {
            line: idx + 1,
            reason: reason.to_string(),
        };
        let (t, c) = line.split_once(',').ok_or_else(|| bad("missing comma"))?;
        let timestamp = t.trim().parse().map_err(|_| bad("bad timestamp"))?;
        let channel: u8 = c.trim().parse().map_err(|_| bad("bad channel"))?;
        if channel as usize >= N_CHANNELS {
            return Err(bad("channel out of range"));
        }
        records.push(TimeTagRecord { timestamp, channel });
    }
    check_sorted(&records)?;
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_stream_is_header_only() {
        let s = TagStream::new(156_250, vec![]);
        let bytes = s.to_bytes().unwrap();
        assert_eq!(bytes.len(), HEADER_LEN);
        assert_eq!(&bytes[..4], b"TTAG");
        assert_eq!(TagStream::from_bytes(&bytes).unwrap(), s);
    }

    #[test]
    fn truncated_record_reports_offset() {
        let s = TagStream::new(156_250, vec![TimeTagRecord::new(1, 0), TimeTagRecord::new(5, 3)]);
        let mut bytes = s.to_bytes().unwrap();
        bytes.truncate(bytes.len() - 4);
        match TagStream::from_bytes(&bytes) {
            Err(Error::MalformedStream { offset, .. }) => assert_eq!(offset, 25),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_headers_and_channels() {
        assert!(TagStream::from_bytes(b"TTAG").is_err());
        let mut bytes = TagStream::new(1, vec![TimeTagRecord::new(0, 2)]).to_bytes().unwrap();
        bytes[0] = b'X';
        assert!(matches!(
            TagStream::from_bytes(&bytes),
            Err(Error::MalformedStream { offset: 0, .. })
        ));
        bytes[0] = b'T';
        bytes[HEADER_LEN + 8] = 9;
        assert!(matches!(
            TagStream::from_bytes(&bytes),
            Err(Error::MalformedStream { offset: 24, .. })
        ));
    }

    #[test]
    fn unsorted_write_is_refused() {
        let s = TagStream::new(1, vec![TimeTagRecord::new(5, 0), TimeTagRecord::new(4, 0)]);
        assert!(matches!(s.to_bytes(), Err(Error::Unsorted { index: 1 })));
    }

    #[test]
    fn csv_roundtrip() {
        let dir = std::env::temp_dir().join(format!("ttag-csv-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.csv");
        let recs = vec![
            TimeTagRecord::new(3, 1),
            TimeTagRecord::new(3, 4),
            TimeTagRecord::new(90, 5),
        ];
        write_csv(&recs, &path).unwrap();
        assert_eq!(read_csv(&path).unwrap(), recs);
        fs::remove_dir_all(dir).unwrap();
    }

    proptest! {
        #[test]
        fn binary_roundtrip(mut ts in prop::collection::vec((any::<u64>(), 0u8..6), 0..200), tick in 1u64..10_000_000) {
            ts.sort();
            let recs: Vec<_> = ts.into_iter().map(|(t, c)| TimeTagRecord::new(t, c)).collect();
            let s = TagStream::new(tick, recs);
            prop_assert_eq!(TagStream::from_bytes(&s.to_bytes().unwrap()).unwrap(), s);
        }
    }
}

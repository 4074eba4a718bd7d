//! Text serialization of density matrices.
//!
//! ```text
//! dim=2
//! 5.0000000000000000e-1+0.0000000000000000e0i 0.0000000000000000e0+0.0000000000000000e0i
//! 0.0000000000000000e0+0.0000000000000000e0i 5.0000000000000000e-1+0.0000000000000000e0i
//! ```

use std::fmt::Write as _;

use super::matrix::{ComplexMatrix, C64};
use super::state::DensityMatrix;
use crate::error::{Error, Result};

pub fn format_complex(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:.16e}{}{:.16e}i", z.re, sign, z.im.abs())
}

pub fn parse_complex(s: &str) -> Option<C64> {
    let body = s.strip_suffix('i')?;
    // The split point is the last '+' or '-' that is neither leading nor an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'))?;
    let re: f64 = body[..split].parse().ok()?;
    let im: f64 = body[split..].parse().ok()?;
    Some(C64::new(re, im))
}

pub fn write_matrix(m: &ComplexMatrix) -> String {
    let mut out = String::new();
    writeln!(out, "dim={}", m.dim()).unwrap();
    for r in 0..m.dim() {
        let row: Vec<String> = (0..m.dim()).map(|c| format_complex(m.get(r, c))).collect();
        writeln!(out, "{}", row.join(" ")).unwrap();
    }
    out
}

pub fn read_matrix(text: &str) -> Result<ComplexMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        reason: "missing dim header".into(),
    })?;
    let dim: usize = header
        .trim()
        .strip_prefix("dim=")
        .and_then(|d| d.parse().ok())
        .ok_or_else(|| Error::Parse {
            line: 1,
            reason: format!("bad header {header:?}"),
        })?;
    let mut entries = Vec::with_capacity(dim * dim);
    for row in 0..dim {
        let (idx, line) = lines.next().ok_or(Error::Parse {
            line: row + 2,
            reason: "missing row".into(),
        })?;
        let parsed: Option<Vec<C64>> = line.split_whitespace().map(parse_complex).collect();
        let parsed = parsed.ok_or_else(|| Error::Parse {
            line: idx + 1,
            reason: "bad complex entry".into(),
        })?;
        if parsed.len() != dim {
            return Err(Error::Parse {
                line: idx + 1,
                reason: format!("expected {dim} entries, found {}", parsed.len()),
            });
        }
        entries.extend(parsed);
    }
    ComplexMatrix::from_row_major(dim, &entries)
}

pub fn write_density_matrix(rho: &DensityMatrix) -> String {
    write_matrix(rho.matrix())
}

pub fn read_density_matrix(text: &str) -> Result<DensityMatrix> {
    DensityMatrix::new(read_matrix(text)?)
}

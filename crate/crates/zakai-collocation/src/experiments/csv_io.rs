//! Minimal CSV emission for numeric experiment tables.
//!
//! Every table here is rectangular, header-first, and contains only numbers,
//! short identifiers, and diagnostic messages — no quoting dialects needed,
//! so a dedicated writer keeps the byte format fully under our control.
//! Floats are written with 17 significant digits (`{:.16e}`), which is
//! enough for `f64` parsing to reproduce them bit for bit.

use std::fmt;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Float(f64),
    Int(u64),
    Text(String),
    /// An absent value (failed cell); serializes to the empty string.
    Empty,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Float(v) => write!(f, "{}", format_float(*v)),
            Field::Int(v) => write!(f, "{v}"),
            Field::Text(s) => write!(f, "{s}"),
            Field::Empty => Ok(()),
        }
    }
}

/// Round-trip float formatting: 17 significant digits in scientific form.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a header and rows to `path`, rejecting cells that would corrupt the
/// row structure (separators or line breaks inside a text field).
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Field>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::InvalidParameter(format!(
                "row has {} cells under a {}-column header",
                row.len(),
                header.len()
            )));
        }
        let mut first = true;
        for cell in row {
            if !first {
                out.push(',');
            }
            first = false;
            let text = cell.to_string();
            if text.contains(',') || text.contains('\n') || text.contains('\r') {
                return Err(Error::InvalidParameter(format!(
                    "cell {text:?} would corrupt the CSV row structure"
                )));
            }
            out.push_str(&text);
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read back a file written by [`write_csv`]: the header line and raw string
/// cells. Exposed so consumers (and the round-trip tests) need no external
/// parser for these files.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidParameter("empty CSV file".into()))?
        .split(',')
        .map(str::to_owned)
        .collect();
    let rows = lines
        .map(|line| line.split(',').map(str::to_owned).collect())
        .collect();
    Ok((header, rows))
}

//! Profile and sweep tables (CSV and JSON).

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::fmt_sig;
use crate::error::{Error, Result};
use crate::infodecomp::{DecompositionProfile, ScaleMeasures};

pub const NATS_TO_BITS: f64 = std::f64::consts::LOG2_E;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    #[default]
    Nats,
    Bits,
}

impl Unit {
    pub fn factor(self) -> f64 {
        match self {
            Unit::Nats => 1.0,
            Unit::Bits => NATS_TO_BITS,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Unit::Nats => "nats",
            Unit::Bits => "bits",
        }
    }
}

impl std::str::FromStr for Unit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nats" => Ok(Unit::Nats),
            "bits" => Ok(Unit::Bits),
            other => Err(Error::Config(format!("unit must be nats or bits, got {other:?}"))),
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn row(m: &ScaleMeasures, unit: Unit) -> impl Iterator<Item = String> {
    let m = m.scaled(unit.factor());
    std::iter::once(m.tau.to_string()).chain(m.values().into_iter().map(fmt_sig))
}

/// Writes the profile table with its `# target=.. sources=.. unit=..` line.
pub fn write_profile_csv<W: Write>(profile: &DecompositionProfile, unit: Unit, mut w: W) -> Result<()> {
    writeln!(
        w,
        "# target={} sources={},{} unit={}",
        profile.target,
        profile.sources.0,
        profile.sources.1,
        unit.name()
    )?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(ScaleMeasures::COLUMNS).map_err(csv_err)?;
    for m in &profile.measures {
        out.write_record(row(m, unit)).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_profile_json<W: Write>(profile: &DecompositionProfile, unit: Unit, w: W) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a> {
        unit: &'static str,
        #[serde(flatten)]
        profile: &'a DecompositionProfile,
    }
    let scaled;
    let profile = if unit == Unit::Nats {
        profile
    } else {
        let mut p = profile.clone();
        p.measures = p.measures.iter().map(|m| m.scaled(unit.factor())).collect();
        scaled = p;
        &scaled
    };
    serde_json::to_writer_pretty(w, &Doc { unit: unit.name(), profile })
        .map_err(|e| Error::Io(e.to_string()))
}

/// Header of the sweep table: `d_swept,tau,T_i,...,U_k`.
pub fn sweep_columns() -> Vec<&'static str> {
    std::iter::once("d_swept").chain(ScaleMeasures::COLUMNS).collect()
}

/// Writes one row per (swept value, scale), ordered by swept value.
pub fn write_sweep_csv<W: Write>(
    sweep: &[(f64, DecompositionProfile)],
    unit: Unit,
    swept: &str,
    mut w: W,
) -> Result<()> {
    if let Some((_, first)) = sweep.first() {
        writeln!(
            w,
            "# target={} sources={},{} unit={} swept={swept}",
            first.target,
            first.sources.0,
            first.sources.1,
            unit.name()
        )?;
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(sweep_columns()).map_err(csv_err)?;
    for (d, profile) in sweep {
        for m in &profile.measures {
            out.write_record(std::iter::once(fmt_sig(*d)).chain(row(m, unit)))
                .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// A parsed numeric table with its `key=value` comment attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub attributes: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn attribute(&self, key: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn is_sweep(&self) -> bool {
        self.columns.first().map(String::as_str) == Some("d_swept")
    }
}

/// Reads a profile or sweep CSV written by this module.
pub fn read_table<R: std::io::Read>(reader: R) -> Result<Table> {
    let mut attributes = Vec::new();
    let mut body = String::new();
    let mut line_offset = 0;
    for line in std::io::BufReader::new(reader).lines() {
        let line = line?;
        if let Some(comment) = line.strip_prefix('#') {
            if body.is_empty() {
                line_offset += 1;
            }
            for tok in comment.split_whitespace() {
                if let Some((k, v)) = tok.split_once('=') {
                    attributes.push((k.to_string(), v.to_string()));
                }
            }
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let columns: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if columns.is_empty() || columns.iter().all(String::is_empty) {
        return Err(Error::Parse {
            row: line_offset + 1,
            column: 1,
            message: "missing header".into(),
        });
    }
    let mut rows = Vec::new();
    for (n, rec) in rdr.records().enumerate() {
        let line = line_offset + n + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row: line,
            column: 1,
            message: e.to_string(),
        })?;
        let vals = rec
            .iter()
            .enumerate()
            .map(|(j, cell)| {
                cell.trim().parse::<f64>().map_err(|_| Error::Parse {
                    row: line,
                    column: j + 1,
                    message: format!("not a number: {cell:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(vals);
    }
    Ok(Table {
        attributes,
        columns,
        rows,
    })
}

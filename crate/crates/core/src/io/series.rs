//! Multichannel time series: CSV ingestion and preprocessing.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest fraction of missing samples per channel that preprocessing repairs.
pub const MAX_MISSING_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub source: Option<String>,
    pub normalized: bool,
    /// Interpolated index ranges `(channel, first, last)`, inclusive.
    pub interpolated: Vec<(usize, usize, usize)>,
    pub seed: Option<u64>,
    pub generator: Option<String>,
}

/// Labeled `M x N` samples; `NaN` marks a missing sample before preprocessing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesSet {
    pub labels: Vec<String>,
    pub data: Vec<Vec<f64>>,
    pub meta: SeriesMeta,
}

impl TimeSeriesSet {
    pub fn new(labels: Vec<String>, data: Vec<Vec<f64>>, meta: SeriesMeta) -> Result<Self> {
        if labels.len() != data.len() {
            return Err(Error::Argument(format!(
                "{} labels for {} channels",
                labels.len(),
                data.len()
            )));
        }
        if data.is_empty() {
            return Err(Error::ChannelCount("at least one channel is required".into()));
        }
        let n = data[0].len();
        if data.iter().any(|c| c.len() != n) {
            return Err(Error::Argument("channels have different lengths".into()));
        }
        Ok(Self { labels, data, meta })
    }

    pub fn channels(&self) -> usize {
        self.data.len()
    }

    pub fn len(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn channel(&self, label: &str) -> Option<&[f64]> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.data[i].as_slice())
    }

    pub fn has_missing(&self) -> bool {
        self.data.iter().flatten().any(|v| v.is_nan())
    }

    /// Writes a header row of labels and one sample per row.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let map = |e: csv::Error| Error::Io(e.to_string());
        out.write_record(&self.labels).map_err(map)?;
        for n in 0..self.len() {
            out.write_record(self.data.iter().map(|c| {
                let v = c[n];
                if v.is_nan() {
                    String::new()
                } else {
                    super::fmt_sig(v)
                }
            }))
            .map_err(map)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads a CSV with a header row of channel names; empty cells are missing.
///
/// Rows in error messages are 1-based file lines (the header is line 1).
pub fn load_csv(path: impl AsRef<Path>) -> Result<TimeSeriesSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut ts = read_csv(file)?;
    ts.meta.source = Some(path.display().to_string());
    Ok(ts)
}

pub fn read_csv<R: std::io::Read>(reader: R) -> Result<TimeSeriesSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            row: 1,
            column: 1,
            message: e.to_string(),
        })?
        .clone();
    let labels: Vec<String> = headers.iter().map(str::to_string).collect();
    if labels.len() < 2 {
        return Err(Error::ChannelCount(format!(
            "need at least 2 channels, found {}",
            labels.len()
        )));
    }
    let mut data = vec![Vec::new(); labels.len()];
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse {
                row,
                column: 0,
                message: match e.kind() {
                    csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                        format!("ragged row: expected {expected_len} fields, found {len}")
                    }
                    _ => e.to_string(),
                },
            }
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        for (col, cell) in record.iter().enumerate() {
            let v = if cell.is_empty() {
                f64::NAN
            } else {
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => v,
                    _ => {
                        return Err(Error::Parse {
                            row,
                            column: col + 1,
                            message: format!("non-numeric cell {cell:?} in channel {}", labels[col]),
                        })
                    }
                }
            };
            data[col].push(v);
        }
    }
    TimeSeriesSet::new(labels, data, SeriesMeta::default())
}

/// Linear interpolation of missing samples, then per-channel normalization
/// to zero mean and unit sample variance.
pub fn preprocess(ts: &TimeSeriesSet) -> Result<TimeSeriesSet> {
    let mut out = ts.clone();
    let mut interpolated = Vec::new();
    for (c, channel) in out.data.iter_mut().enumerate() {
        let label = &ts.labels[c];
        let n = channel.len();
        let missing = channel.iter().filter(|v| v.is_nan()).count();
        if n == 0 || missing as f64 > MAX_MISSING_FRACTION * n as f64 {
            return Err(Error::DataQuality(format!(
                "channel {label} has {missing} of {n} samples missing (limit {:.0}%)",
                MAX_MISSING_FRACTION * 100.0
            )));
        }
        for (first, last) in fill_gaps(channel) {
            interpolated.push((c, first, last));
        }
        normalize(channel).ok_or_else(|| Error::DegenerateChannel(label.clone()))?;
    }
    out.meta.normalized = true;
    out.meta.interpolated = interpolated;
    Ok(out)
}

/// Fills NaN runs in place; returns the filled index ranges.
fn fill_gaps(x: &mut [f64]) -> Vec<(usize, usize)> {
    let n = x.len();
    let mut ranges = Vec::new();
    let mut i = 0;
    while i < n {
        if !x[i].is_nan() {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && x[i].is_nan() {
            i += 1;
        }
        let end = i - 1;
        let left = start.checked_sub(1).map(|k| x[k]);
        let right = (i < n).then(|| x[i]);
        match (left, right) {
            (Some(a), Some(b)) => {
                let span = (end - start + 2) as f64;
                for (step, k) in (start..=end).enumerate() {
                    let t = (step + 1) as f64 / span;
                    x[k] = a + t * (b - a);
                }
            }
            (Some(a), None) => x[start..=end].fill(a),
            (None, Some(b)) => x[start..=end].fill(b),
            (None, None) => {}
        }
        ranges.push((start, end));
    }
    ranges
}

fn normalize(x: &mut [f64]) -> Option<()> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if !(sd > 1e-300) || !sd.is_finite() {
        return None;
    }
    for v in x.iter_mut() {
        *v = (*v - mean) / sd;
    }
    // Second pass removes the rounding left in the mean.
    let residual = x.iter().sum::<f64>() / n as f64;
    for v in x.iter_mut() {
        *v -= residual;
    }
    Some(())
}

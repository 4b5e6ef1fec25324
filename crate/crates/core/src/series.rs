//! Reading series from CSV and writing trajectories back out.
//!
//! Input is comma separated, UTF-8, LF or CRLF. A header row is assumed when
//! any cell of the first row fails to parse as a number.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Which CSV column holds the series.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Column {
    /// `value` if the header has it, otherwise the last column.
    #[default]
    Auto,
    /// Zero-based position.
    Index(usize),
    Name(String),
}

impl std::str::FromStr for Column {
    type Err = std::convert::Infallible;

    /// Digits select by position, anything else by header name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        })
    }
}

/// One numeric column pulled out of a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub values: Vec<f64>,
    /// File line of each value (1-based), for error messages.
    pub lines: Vec<usize>,
    pub column: String,
    pub has_header: bool,
    /// Sample spacing implied by a `time` / `t` column, if the file has one.
    pub time_step: Option<f64>,
}

impl Series {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Simple returns `r_t = (P_t - P_{t-1}) / P_{t-1}`, one shorter than the
    /// input.
    pub fn to_returns(&self) -> Result<Series> {
        let values = simple_returns_at(&self.values, &self.lines)?;
        Ok(Series {
            values,
            lines: self.lines[1..].to_vec(),
            column: self.column.clone(),
            has_header: self.has_header,
            time_step: self.time_step,
        })
    }

    pub fn into_trajectory(self, dt: f64) -> Result<Trajectory> {
        Trajectory::new(self.values, dt)
    }
}

/// Simple returns of a price series. A zero price is an input error naming
/// its 1-based row.
///
/// ```
/// let r = excursion_core::series::simple_returns(&[100.0, 110.0, 99.0]).unwrap();
/// assert!((r[0] - 0.10).abs() < 1e-12 && (r[1] + 0.10).abs() < 1e-12);
/// ```
pub fn simple_returns(prices: &[f64]) -> Result<Vec<f64>> {
    let rows: Vec<usize> = (1..=prices.len()).collect();
    simple_returns_at(prices, &rows)
}

fn simple_returns_at(prices: &[f64], rows: &[usize]) -> Result<Vec<f64>> {
    prices
        .windows(2)
        .zip(rows)
        .map(|(p, row)| {
            if p[0] == 0.0 {
                Err(Error::invalid(format!(
                    "zero price at row {row}: return to the next row is undefined"
                )))
            } else {
                Ok((p[1] - p[0]) / p[0])
            }
        })
        .collect()
}

pub fn read_series(path: &Path, column: &Column) -> Result<Series> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_series(file, column).map_err(|e| e.in_source(path.display().to_string()))
}

/// Parse CSV text from any reader. See the module docs for the format.
pub fn parse_series<R: Read>(mut input: R, column: &Column) -> Result<Series> {
    let mut text = Vec::new();
    input
        .read_to_end(&mut text)
        .map_err(|e| Error::invalid(format!("read failed: {e}")))?;
    // csv starts a record after CRLF at the LF byte and miscounts lines there
    let newlines: Vec<usize> = newline_offsets(&text);
    let line_at = |byte: u64| newlines.partition_point(|&nl| (nl as u64) <= byte) + 1;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_slice());

    let mut rows: Vec<(usize, csv::StringRecord)> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| line_at(p.byte()));
            Error::parse(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| line_at(p.byte()));
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push((line, rec));
    }
    let Some((_, first)) = rows.first() else {
        return Err(Error::invalid("CSV has no rows"));
    };

    let has_header = first.iter().any(|cell| cell.parse::<f64>().is_err());
    let header: Option<Vec<String>> =
        has_header.then(|| first.iter().map(|s| s.to_string()).collect());
    let width = first.len();
    let data = if has_header { &rows[1..] } else { &rows[..] };

    let idx = match column {
        Column::Index(i) if *i < width => *i,
        Column::Index(i) => {
            return Err(Error::invalid(format!(
                "column {i} out of range (file has {width} columns)"
            )))
        }
        Column::Name(name) => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| match &header {
                Some(h) => Error::invalid(format!(
                    "no column named '{name}' (have: {})",
                    h.join(", ")
                )),
                None => Error::invalid(format!("no header row, cannot select column '{name}'")),
            })?,
        Column::Auto => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c.eq_ignore_ascii_case("value")))
            .unwrap_or(width - 1),
    };
    let column_name = header
        .as_ref()
        .map_or_else(|| idx.to_string(), |h| h[idx].clone());

    let mut values = Vec::with_capacity(data.len());
    let mut lines = Vec::with_capacity(data.len());
    for (line, rec) in data {
        let cell = rec.get(idx).ok_or_else(|| {
            Error::parse(*line, format!("row has {} fields, expected column {idx}", rec.len()))
        })?;
        let v = cell
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::parse(*line, format!("'{cell}' in column '{column_name}' is not a finite number")))?;
        values.push(v);
        lines.push(*line);
    }

    let time_step = header.as_ref().and_then(|h| {
        let t = h
            .iter()
            .position(|c| c.eq_ignore_ascii_case("time") || c.eq_ignore_ascii_case("t"))?;
        if t == idx || data.len() < 2 {
            return None;
        }
        let first = data.first()?.1.get(t)?.parse::<f64>().ok()?;
        let last = data.last()?.1.get(t)?.parse::<f64>().ok()?;
        let step = (last - first) / (data.len() - 1) as f64;
        (step.is_finite() && step > 0.0).then_some(step)
    });

    Ok(Series {
        values,
        lines,
        column: column_name,
        has_header,
        time_step,
    })
}

fn newline_offsets(bytes: &[u8]) -> Vec<usize> {
    bytes
        .iter()
        .enumerate()
        .filter_map(|(i, b)| (*b == b'\n').then_some(i))
        .collect()
}

/// Two-column `time,value` CSV with a header.
pub fn write_trajectory<W: Write>(traj: &Trajectory, mut out: W) -> std::io::Result<()> {
    writeln!(out, "time,value")?;
    for (k, v) in traj.values().iter().enumerate() {
        writeln!(out, "{},{}", traj.time(k), v)?;
    }
    out.flush()
}

pub fn save_trajectory(traj: &Trajectory, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trajectory(traj, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::TimeSeriesError;

pub const DEFAULT_STEP_SECONDS: i64 = 300;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Aligned water-level and rainfall records at a fixed step.
///
/// Timestamps are not stored per row: the frame holds a start instant and a
/// step, so constant spacing holds by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesFrame {
    site_id: String,
    start: i64,
    step_seconds: i64,
    level: Vec<f64>,
    rainfall: Vec<f64>,
}

/// How missing steps in an input file are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapFill {
    #[default]
    Reject,
    /// Forward-fill missing steps with the last observed row.
    Hold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_filled: usize,
}

impl TimeSeriesFrame {
    pub fn new(
        site_id: impl Into<String>,
        start: i64,
        step_seconds: i64,
        level: Vec<f64>,
        rainfall: Vec<f64>,
    ) -> Result<Self, TimeSeriesError> {
        if step_seconds <= 0 {
            return Err(TimeSeriesError::InvalidStep(step_seconds));
        }
        if level.len() != rainfall.len() {
            return Err(TimeSeriesError::LengthMismatch {
                level: level.len(),
                rainfall: rainfall.len(),
            });
        }
        if level.len() < 2 {
            return Err(TimeSeriesError::TooShort {
                needed: 2,
                actual: level.len(),
            });
        }
        for (i, (&l, &r)) in level.iter().zip(&rainfall).enumerate() {
            check_value(i + 1, None, "level", l)?;
            check_value(i + 1, None, "rainfall", r)?;
        }
        Ok(Self {
            site_id: site_id.into(),
            start,
            step_seconds,
            level,
            rainfall,
        })
    }

    pub fn site_id(&self) -> &str {
        &self.site_id
    }

    pub fn len(&self) -> usize {
        self.level.len()
    }

    pub fn is_empty(&self) -> bool {
        self.level.is_empty()
    }

    pub fn step_seconds(&self) -> i64 {
        self.step_seconds
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Unix seconds of row `i`.
    pub fn timestamp(&self, i: usize) -> i64 {
        self.start + self.step_seconds * i as i64
    }

    pub fn timestamps(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.len()).map(|i| self.timestamp(i))
    }

    pub fn level(&self) -> &[f64] {
        &self.level
    }

    pub fn rainfall(&self) -> &[f64] {
        &self.rainfall
    }

    /// Rows `[from, to)` as a new frame. Panics if the range is out of bounds.
    pub fn slice(&self, from: usize, to: usize) -> Result<Self, TimeSeriesError> {
        Self::new(
            self.site_id.clone(),
            self.timestamp(from),
            self.step_seconds,
            self.level[from..to].to_vec(),
            self.rainfall[from..to].to_vec(),
        )
    }

    /// Reads a `timestamp,level_m,rainfall_mm_s` CSV file.
    pub fn load(
        path: impl AsRef<Path>,
        step_seconds: i64,
        fill: GapFill,
    ) -> Result<(Self, LoadReport), TimeSeriesError> {
        let path = path.as_ref();
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| TimeSeriesError::Io(format!("{}: {e}", path.display())))?;
        let site = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse_csv(&text, site, step_seconds, fill)
    }

    pub fn parse_csv(
        text: &str,
        site_id: impl Into<String>,
        step_seconds: i64,
        fill: GapFill,
    ) -> Result<(Self, LoadReport), TimeSeriesError> {
        if step_seconds <= 0 {
            return Err(TimeSeriesError::InvalidStep(step_seconds));
        }
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());

        let headers = reader
            .headers()
            .map_err(|e| TimeSeriesError::Parse {
                line: 1,
                message: e.to_string(),
            })?
            .clone();
        check_header(&headers)?;

        let mut start = None;
        let mut prev_time: Option<i64> = None;
        let mut level = Vec::new();
        let mut rainfall = Vec::new();
        let mut report = LoadReport::default();

        for (row_idx, record) in reader.records().enumerate() {
            let row = row_idx + 1;
            let record = record.map_err(|e| TimeSeriesError::Parse {
                line: e.position().map_or(row + 1, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(row + 1, |p| p.line() as usize);
            if record.len() != 3 {
                return Err(TimeSeriesError::Parse {
                    line,
                    message: format!("expected 3 fields, found {}", record.len()),
                });
            }
            let time = parse_timestamp(&record[0]).ok_or_else(|| TimeSeriesError::Parse {
                line,
                message: format!("invalid timestamp `{}`", &record[0]),
            })?;
            let l = parse_number(&record[1], line, "level")?;
            let r = parse_number(&record[2], line, "rainfall")?;
            check_value(row, Some(line), "level", l)?;
            check_value(row, Some(line), "rainfall", r)?;

            if let Some(prev) = prev_time {
                let delta = time - prev;
                if delta <= 0 || delta % step_seconds != 0 {
                    return Err(TimeSeriesError::Spacing {
                        line,
                        instant: format_timestamp(time),
                        delta,
                        step: step_seconds,
                    });
                }
                let missing = (delta / step_seconds - 1) as usize;
                if missing > 0 {
                    match fill {
                        GapFill::Reject => {
                            return Err(TimeSeriesError::Gap {
                                line,
                                instant: format_timestamp(prev + step_seconds),
                                missing,
                            })
                        }
                        GapFill::Hold => {
                            let (hl, hr) = (level[level.len() - 1], rainfall[rainfall.len() - 1]);
                            level.extend(std::iter::repeat_n(hl, missing));
                            rainfall.extend(std::iter::repeat_n(hr, missing));
                            report.rows_filled += missing;
                        }
                    }
                }
            } else {
                start = Some(time);
            }
            prev_time = Some(time);
            level.push(l);
            rainfall.push(r);
            report.rows_read += 1;
        }

        let start = start.ok_or(TimeSeriesError::TooShort { needed: 2, actual: 0 })?;
        let frame = Self::new(site_id, start, step_seconds, level, rainfall)?;
        Ok((frame, report))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TimeSeriesError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| TimeSeriesError::Io(e.to_string());
        w.write_record(["timestamp", "level_m", "rainfall_mm_s"]).map_err(io)?;
        for i in 0..self.len() {
            w.write_record([
                format_timestamp(self.timestamp(i)),
                self.level[i].to_string(),
                self.rainfall[i].to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| TimeSeriesError::Io(e.to_string()))
    }
}

fn check_header(headers: &csv::StringRecord) -> Result<(), TimeSeriesError> {
    let names: Vec<&str> = headers.iter().collect();
    let ok = matches!(
        names.as_slice(),
        ["timestamp", "level_m" | "level", "rainfall_mm_s" | "rainfall"]
    );
    if ok {
        Ok(())
    } else {
        Err(TimeSeriesError::Parse {
            line: 1,
            message: format!(
                "expected header `timestamp,level_m,rainfall_mm_s`, found `{}`",
                names.join(",")
            ),
        })
    }
}

fn parse_number(field: &str, line: usize, column: &'static str) -> Result<f64, TimeSeriesError> {
    field.parse::<f64>().map_err(|_| TimeSeriesError::Parse {
        line,
        message: format!("invalid {column} value `{field}`"),
    })
}

fn check_value(row: usize, line: Option<usize>, column: &'static str, value: f64) -> Result<(), TimeSeriesError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(TimeSeriesError::Range {
            row,
            line,
            column,
            value,
        })
    }
}

/// Parses RFC 3339 or naive ISO-8601 timestamps (naive ones are taken as UTC).
pub fn parse_timestamp(s: &str) -> Option<i64> {
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ]
    .iter()
    .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
    .map(|dt| dt.and_utc().timestamp())
}

pub fn format_timestamp(t: i64) -> String {
    DateTime::from_timestamp(t, 0)
        .map(|dt| dt.format(TIMESTAMP_FORMAT).to_string())
        .unwrap_or_else(|| t.to_string())
}

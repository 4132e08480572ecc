//! Per-frame CSV track log.
//!
//! Columns are fixed; absent values are empty fields. Floats use Rust's
//! shortest round-trip formatting, so re-parsing a log is lossless.

use std::io::{self, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tracker::{Status, TrackOutcome};

pub const COLUMNS: [&str; 15] = [
    "frame",
    "time_s",
    "status",
    "x",
    "y",
    "score",
    "angle_deg",
    "support",
    "win_x",
    "win_y",
    "win_w",
    "win_h",
    "pan_counts",
    "tilt_counts",
    "trace_P",
];

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("bad log: {0}")]
    Format(String),
}

/// One log row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub frame: u64,
    pub time_s: f64,
    pub status: String,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub score: Option<f64>,
    pub angle_deg: Option<f64>,
    pub support: Option<usize>,
    pub win_x: usize,
    pub win_y: usize,
    pub win_w: usize,
    pub win_h: usize,
    pub pan_counts: Option<i64>,
    pub tilt_counts: Option<i64>,
    #[serde(rename = "trace_P")]
    pub trace_p: Option<f64>,
}

impl LogRecord {
    pub fn status(&self) -> Result<Status, LogError> {
        self.status.parse().map_err(LogError::Format)
    }
}

impl From<&TrackOutcome> for LogRecord {
    fn from(o: &TrackOutcome) -> Self {
        let d = o.detection.as_ref();
        LogRecord {
            frame: o.frame_index,
            time_s: o.time_s,
            status: o.status.as_str().to_string(),
            x: d.map(|d| d.x),
            y: d.map(|d| d.y),
            score: d.map(|d| d.best_score),
            angle_deg: d.map(|d| d.best_angle_deg),
            support: d.map(|d| d.support),
            win_x: o.window.x,
            win_y: o.window.y,
            win_w: o.window.w,
            win_h: o.window.h,
            pan_counts: o.gimbal_cmd.map(|c| c.0),
            tilt_counts: o.gimbal_cmd.map(|c| c.1),
            trace_p: o.state.as_ref().map(|s| s.trace()),
        }
    }
}

/// Streaming writer; the header is written on creation.
pub struct LogWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> LogWriter<W> {
    pub fn new(out: W) -> Result<Self, LogError> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        inner.write_record(COLUMNS)?;
        Ok(LogWriter { inner })
    }

    pub fn write(&mut self, outcome: &TrackOutcome) -> Result<(), LogError> {
        self.write_record(&LogRecord::from(outcome))
    }

    pub fn write_record(&mut self, r: &LogRecord) -> Result<(), LogError> {
        self.inner.serialize(r)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, LogError> {
        self.inner.flush()?;
        self.inner
            .into_inner()
            .map_err(|e| LogError::Io(io::Error::other(e.to_string())))
    }
}

/// Writes a complete log (header plus one row per outcome) to `path`.
pub fn write_log(path: &Path, outcomes: &[TrackOutcome]) -> Result<(), LogError> {
    let file = std::fs::File::create(path)?;
    let mut w = LogWriter::new(io::BufWriter::new(file))?;
    for o in outcomes {
        w.write(o)?;
    }
    w.finish()?.flush()?;
    Ok(())
}

/// Renders a log in memory.
pub fn log_to_string(outcomes: &[TrackOutcome]) -> String {
    let mut w = LogWriter::new(Vec::new()).expect("writing to memory");
    for o in outcomes {
        w.write(o).expect("writing to memory");
    }
    String::from_utf8(w.finish().expect("writing to memory")).expect("csv output is UTF-8")
}

pub fn read_log<R: Read>(input: R) -> Result<Vec<LogRecord>, LogError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != COLUMNS {
        return Err(LogError::Format(format!("unexpected header {header:?}")));
    }
    let records = rdr.deserialize().collect::<Result<Vec<LogRecord>, _>>()?;
    for r in &records {
        r.status()?;
    }
    Ok(records)
}

pub fn read_log_file(path: &Path) -> Result<Vec<LogRecord>, LogError> {
    read_log(std::fs::File::open(path)?)
}

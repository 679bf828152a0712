//! Load traces and the periodic profiles fitted to them.

mod profile;
mod synth;

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub use profile::{discretize, stats, LoadProfile, LoadStats, StepLoad, MAX_SUBINTERVALS};
pub use synth::{synthesize_profile, SYNTH_SAMPLE_STEP_HOURS};

/// One week, in hours.
pub const DEFAULT_PERIOD_HOURS: f64 = 168.0;

/// Header line of the trace CSV format.
pub const TRACE_HEADER: [&str; 2] = ["time_hours", "load"];

#[derive(Debug, Clone, PartialEq)]
pub struct LoadTrace {
    /// `(time in hours, normalized load)`, strictly increasing times in `[0, period)`.
    pub samples: Vec<(f64, f64)>,
    pub period: f64,
}

impl LoadTrace {
    pub fn new(samples: Vec<(f64, f64)>, period: f64) -> Result<Self> {
        let trace = LoadTrace { samples, period };
        trace.validate()?;
        Ok(trace)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period.is_finite() && self.period > 0.0) {
            return Err(Error::InvalidArgument(format!("period {} must be positive", self.period)));
        }
        if self.samples.len() < 4 {
            return Err(Error::TooFewSamples(self.samples.len()));
        }
        let mut prev = f64::NEG_INFINITY;
        for &(time, load) in &self.samples {
            if !(time.is_finite() && time >= 0.0 && time < self.period) {
                return Err(Error::InvalidArgument(format!("time {time} outside [0, {})", self.period)));
            }
            if time <= prev {
                return Err(Error::InvalidArgument(format!("times not strictly increasing at t={time}")));
            }
            if !(0.0..=1.0).contains(&load) {
                return Err(Error::LoadOutOfRange { time, load });
            }
            prev = time;
        }
        Ok(())
    }
}

/// Reads the `time_hours,load` CSV format. Lines starting with `#` are comments.
pub fn parse_trace<R: Read>(reader: R, period: f64) -> Result<LoadTrace> {
    let mut rdr =
        csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).flexible(false).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != TRACE_HEADER {
        return Err(Error::TraceParse {
            line: 1,
            message: format!(
                "expected header `time_hours,load`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::TraceParse { line, message: e.to_string() }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let field = |idx: usize| -> Result<f64> {
            record[idx]
                .parse::<f64>()
                .map_err(|e| Error::TraceParse { line, message: format!("`{}`: {e}", &record[idx]) })
        };
        let time = field(0)?;
        let load = field(1)?;
        if !(0.0..=1.0).contains(&load) {
            return Err(Error::LoadOutOfRange { time, load });
        }
        if let Some(&(prev, _)) = samples.last() {
            if time <= prev {
                return Err(Error::TraceParse { line, message: format!("time {time} does not increase") });
            }
        }
        samples.push((time, load));
    }
    LoadTrace::new(samples, period)
}

pub fn write_trace<W: Write>(writer: W, trace: &LoadTrace) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(TRACE_HEADER)?;
    for &(t, l) in &trace.samples {
        wtr.write_record([t.to_string(), l.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}

use std::io::Write;

use serde::Serialize;

use crate::error::SimError;
use crate::model::LaneId;

/// Per-step vehicle state, one row per vehicle per step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub t: f64,
    pub vehicle_id: u64,
    pub lane_id: LaneId,
    pub offset_m: f64,
    pub speed_mps: f64,
    pub charging_w: f64,
    /// Whether the vehicle's energy counts toward lane utility.
    pub metered: bool,
}

pub trait TraceSink {
    fn record(&mut self, row: &TraceRow) -> Result<(), SimError>;
}

impl TraceSink for Vec<TraceRow> {
    fn record(&mut self, row: &TraceRow) -> Result<(), SimError> {
        self.push(row.clone());
        Ok(())
    }
}

/// Writes trace rows as CSV with a header line.
pub struct CsvTrace<W: Write> {
    writer: csv::Writer<W>,
}

impl<W: Write> CsvTrace<W> {
    pub fn new(inner: W) -> Self {
        CsvTrace {
            writer: csv::Writer::from_writer(inner),
        }
    }

    pub fn finish(mut self) -> Result<W, SimError> {
        self.writer
            .flush()
            .map_err(|e| SimError::Trace(e.to_string()))?;
        self.writer
            .into_inner()
            .map_err(|e| SimError::Trace(e.to_string()))
    }
}

impl<W: Write> TraceSink for CsvTrace<W> {
    fn record(&mut self, row: &TraceRow) -> Result<(), SimError> {
        self.writer
            .serialize(row)
            .map_err(|e| SimError::Trace(e.to_string()))
    }
}

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One row of a trajectory log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub trial_id: usize,
    pub step: usize,
    pub fish_id: usize,
    pub pigment: String,
    pub x: f64,
    pub z: f64,
    pub heading: f64,
}

pub struct TrajectoryWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(w: W) -> Self {
        Self { inner: csv::Writer::from_writer(w) }
    }

    pub fn write(&mut self, row: &TrajectoryRow) -> Result<()> {
        self.inner.serialize(row)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

/// Parses a trajectory CSV; errors name the offending line.
pub fn read_trajectory<R: Read>(r: R) -> Result<Vec<TrajectoryRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rdr.deserialize::<TrajectoryRow>() {
        let row = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Data(format!("line {line}: {e}"))
        })?;
        row.pigment.parse::<crate::render::Pigment>().map_err(|e| Error::Data(format!("step {}: {e}", row.step)))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Data("trajectory file has no rows".into()));
    }
    Ok(rows)
}

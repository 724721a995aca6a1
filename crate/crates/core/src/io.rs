//! CSV tables: comma separated, `.` decimal point, one header row, LF line
//! endings. Lines starting with `#` are comments and are skipped on read.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calibration::SpectrumPoint;
use crate::error::Result;
use crate::readout::{HistogramBin, ShotBatch};

pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r)
}

#[derive(Debug, Serialize, Deserialize)]
struct SpectrumRow {
    frequency_hz: f64,
    re: f64,
    im: f64,
}

pub fn write_spectrum<W: Write>(w: W, spectrum: &[SpectrumPoint]) -> Result<()> {
    let mut out = csv_writer(w);
    for p in spectrum {
        out.serialize(SpectrumRow {
            frequency_hz: p.frequency_hz,
            re: p.value.re,
            im: p.value.im,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_spectrum<R: Read>(r: R) -> Result<Vec<SpectrumPoint>> {
    let mut rdr = csv_reader(r);
    let mut out = Vec::new();
    for row in rdr.deserialize::<SpectrumRow>() {
        let row = row?;
        out.push(SpectrumPoint {
            frequency_hz: row.frequency_hz,
            value: Complex64::new(row.re, row.im),
        });
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct ShotRow {
    shot_index: usize,
    true_state: &'static str,
    jump_time_s: Option<f64>,
    i_volts: f64,
    q_volts: f64,
    assigned: &'static str,
}

/// One row per shot; `jump_time_s` is empty when the qubit did not decay.
pub fn write_shots<W: Write>(w: W, batch: &ShotBatch) -> Result<()> {
    let mut out = csv_writer(w);
    for (k, r) in batch.records.iter().enumerate() {
        out.serialize(ShotRow {
            shot_index: k,
            true_state: r.true_state.label(),
            jump_time_s: r.jump_time,
            i_volts: r.i,
            q_volts: r.q,
            assigned: r.assigned.label(),
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_histogram<W: Write>(w: W, bins: &[HistogramBin]) -> Result<()> {
    let mut out = csv_writer(w);
    for b in bins {
        out.serialize(b)?;
    }
    out.flush()?;
    Ok(())
}

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::watts_to_dbm;

/// One CSV line. Column order is part of the output format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    #[serde(rename = "N_v")]
    pub n_v: usize,
    #[serde(rename = "N_h")]
    pub n_h: usize,
    #[serde(rename = "N")]
    pub n: usize,
    /// Phase levels; empty for continuous phases.
    #[serde(rename = "L")]
    pub levels: Option<usize>,
    pub distance_m: f64,
    pub seed: u64,
    /// Received power per watt of transmit power.
    pub objective: f64,
    pub received_power_w: f64,
    pub received_power_dbm: f64,
    pub variable_count: usize,
    pub solver_evaluations: u64,
    /// Empty unless timing was requested, so reruns compare byte for byte.
    pub wall_time_s: Option<f64>,
}

pub const CSV_HEADER: [&str; 13] = [
    "method",
    "N_v",
    "N_h",
    "N",
    "L",
    "distance_m",
    "seed",
    "objective",
    "received_power_w",
    "received_power_dbm",
    "variable_count",
    "solver_evaluations",
    "wall_time_s",
];

impl ResultRow {
    pub(crate) fn with_power(mut self, power_w: f64) -> Self {
        self.received_power_w = power_w;
        self.received_power_dbm = watts_to_dbm(power_w);
        self
    }
}

/// Writes the header (always) and `rows`.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_bytes(rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(buf)
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec?);
    }
    Ok(rows)
}

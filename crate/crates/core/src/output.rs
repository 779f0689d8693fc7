//! CSV and JSON result emission.
//!
//! Aggregate rows: `protocol,range,trials,connectivity,mean_lifetime,sd_lifetime,
//! mean_energy_per_round,mean_delay_per_round,mean_energy_delay,mean_leaf_fraction`.
//! Per-round rows: `trial,round,energy_j,delay_slots,alive`. Floats use the
//! shortest representation that parses back to the same value; fields that do
//! not apply to a protocol are empty (CSV) or `null` (JSON).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cli::Format;
use crate::error::Result;
use crate::sim::{ExperimentSummary, SimulationReport};

pub const AGGREGATE_HEADER: [&str; 10] = [
    "protocol",
    "range",
    "trials",
    "connectivity",
    "mean_lifetime",
    "sd_lifetime",
    "mean_energy_per_round",
    "mean_delay_per_round",
    "mean_energy_delay",
    "mean_leaf_fraction",
];

pub const ROUND_HEADER: [&str; 5] = ["trial", "round", "energy_j", "delay_slots", "alive"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub protocol: String,
    pub range: Option<f64>,
    pub trials: usize,
    pub connectivity: f64,
    pub mean_lifetime: f64,
    pub sd_lifetime: f64,
    pub mean_energy_per_round: f64,
    pub mean_delay_per_round: f64,
    pub mean_energy_delay: f64,
    pub mean_leaf_fraction: Option<f64>,
}

impl From<&ExperimentSummary> for AggregateRow {
    fn from(s: &ExperimentSummary) -> Self {
        Self {
            protocol: s.protocol.to_string(),
            range: s.range,
            trials: s.trials,
            connectivity: s.connectivity,
            mean_lifetime: s.mean_lifetime,
            sd_lifetime: s.sd_lifetime,
            mean_energy_per_round: s.mean_energy_per_round,
            mean_delay_per_round: s.mean_delay_per_round,
            mean_energy_delay: s.mean_energy_delay,
            mean_leaf_fraction: s.mean_leaf_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRow {
    pub trial: usize,
    pub round: u64,
    pub energy_j: f64,
    pub delay_slots: u64,
    pub alive: usize,
}

pub fn round_rows(reports: &[SimulationReport]) -> Vec<RoundRow> {
    reports
        .iter()
        .enumerate()
        .flat_map(|(trial, r)| {
            r.rounds.iter().map(move |m| RoundRow {
                trial,
                round: m.round,
                energy_j: m.energy_lost,
                delay_slots: m.delay,
                alive: m.alive,
            })
        })
        .collect()
}

fn write_csv<W: Write, R: Serialize>(out: W, header: &[&str], rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<W: Write, R: Serialize>(mut out: W, rows: &[R]) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_aggregates<W: Write>(out: W, summaries: &[ExperimentSummary], format: Format) -> Result<()> {
    let rows: Vec<AggregateRow> = summaries.iter().map(AggregateRow::from).collect();
    match format {
        Format::Csv => write_csv(out, &AGGREGATE_HEADER, &rows),
        Format::Json => write_json(out, &rows),
    }
}

pub fn write_rounds<W: Write>(out: W, reports: &[SimulationReport], format: Format) -> Result<()> {
    let rows = round_rows(reports);
    match format {
        Format::Csv => write_csv(out, &ROUND_HEADER, &rows),
        Format::Json => write_json(out, &rows),
    }
}

pub fn read_aggregate_csv(text: &str) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn read_round_csv(text: &str) -> Result<Vec<RoundRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

//! Report files. JSON keys follow struct declaration order and maps are
//! sorted, so a report is a pure function of its contents.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::solvers::{HistoryEntry, Phase};

pub const TOOL: &str = "cmm";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Envelope<T: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_digest: String,
    pub seeds: BTreeMap<String, u64>,
    pub body: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(command: &str, config_digest: String, seeds: BTreeMap<String, u64>, body: T) -> Self {
        Envelope { tool: TOOL, version: VERSION, command: command.into(), config_digest, seeds, body }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn num(v: f64) -> String {
    format!("{v:.17e}")
}

/// CSV with columns node, coordinates, then the named value columns.
pub fn columns_csv(coords: &[Vec<f64>], columns: &[(&str, &[f64])]) -> Result<Vec<u8>> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    let cd = coords.first().map_or(0, |c| c.len());
    let mut head = vec!["node".to_string()];
    head.extend((0..cd).map(|a| format!("x{a}")));
    head.extend(columns.iter().map(|(n, _)| n.to_string()));
    wr.write_record(&head).map_err(csv_err)?;
    for (i, c) in coords.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(c.iter().map(|v| num(*v)));
        row.extend(columns.iter().map(|(_, col)| num(col[i])));
        wr.write_record(&row).map_err(csv_err)?;
    }
    wr.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn phase_name(p: Phase) -> &'static str {
    match p {
        Phase::Initial => "initial",
        Phase::Flow => "flow",
        Phase::Gauge => "gauge",
        Phase::Newton => "newton",
    }
}

/// One row per history entry; per-component norms are trailing columns.
pub fn history_csv(history: &[HistoryEntry]) -> Result<Vec<u8>> {
    let mut wr = csv::Writer::from_writer(Vec::new());
    let k = history.first().map_or(0, |h| h.linf.len());
    let mut head: Vec<String> =
        ["iteration", "phase", "step", "calabi", "mabuchi", "rejections", "linear_iterations", "linear_residual"].iter().map(|s| s.to_string()).collect();
    head.extend((0..k).map(|i| format!("linf_{i}")));
    head.extend((0..k).map(|i| format!("l2_{i}")));
    wr.write_record(&head).map_err(csv_err)?;
    for h in history {
        let mut row = vec![
            h.iteration.to_string(),
            phase_name(h.phase).to_string(),
            num(h.step),
            num(h.calabi),
            num(h.mabuchi),
            h.rejections.to_string(),
            h.linear_iterations.to_string(),
            num(h.linear_residual),
        ];
        row.extend(h.linf.iter().map(|v| num(*v)));
        row.extend(h.l2.iter().map(|v| num(*v)));
        wr.write_record(&row).map_err(csv_err)?;
    }
    wr.into_inner().map_err(|e| Error::Io(e.to_string()))
}

//! Result rows, tables, aggregation, and CSV/JSON rendering.
//!
//! The CSV layout is the data contract of the whole artifact:
//!
//! ```text
//! sweep_axis,sweep_value,mode,trial,min_se,q,iterations,runtime_ms,se_user_1,…
//! ```
//!
//! Floats carry nine significant digits, integers are plain, and rows appear
//! in deterministic order (sweep value outermost, then mode, then trial).
//! When rows have different user counts (a `k_users` sweep), the header
//! covers the largest count and shorter rows leave the extra per-user
//! columns empty. Rendering a parsed table reproduces the file byte for
//! byte, so downstream tooling can treat the CSV as canonical.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use crate::wmmse::Mode;

use super::config::SweepAxis;
use super::HarnessError;

/// The fixed leading columns of the CSV schema.
const BASE_HEADER: &str = "sweep_axis,sweep_value,mode,trial,min_se,q,iterations,runtime_ms";

/// Format a float with nine significant digits (the CSV contract).
fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

/// One Monte-Carlo trial: the scenario cell it belongs to and the metrics it
/// produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    /// Axis the enclosing sweep varies.
    pub sweep_axis: SweepAxis,
    /// Value of that axis for this row.
    pub sweep_value: f64,
    /// Transmission mode.
    pub mode: Mode,
    /// Trial index within the (value, mode) cell.
    pub trial: usize,
    /// Worst per-user spectral efficiency on held-out samples, bit/s/Hz.
    pub min_se: f64,
    /// Final optimizer objective (for FRR, the reference min rate).
    pub q: f64,
    /// Alternating-optimization iterations used (0 for FRR).
    pub iterations: usize,
    /// Wall-clock time of the solve plus evaluation, milliseconds.
    pub runtime_ms: f64,
    /// Per-user spectral efficiencies on held-out samples, bit/s/Hz.
    pub user_se: Vec<f64>,
}

/// Per-(value, mode) summary statistics of min-SE over trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub sweep_axis: SweepAxis,
    pub sweep_value: f64,
    pub mode: Mode,
    /// Number of trials in the cell.
    pub n_trials: usize,
    /// Mean min-SE over the cell's trials.
    pub mean_min_se: f64,
    /// Sample standard deviation of min-SE (0 for a single trial).
    pub std_min_se: f64,
    pub min_min_se: f64,
    pub max_min_se: f64,
}

/// An ordered collection of trial rows with CSV/JSON rendering and exact
/// aggregate recomputation.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ResultTable {
    pub rows: Vec<TrialRow>,
}

impl ResultTable {
    /// Largest per-user column count across rows.
    pub fn max_users(&self) -> usize {
        self.rows.iter().map(|r| r.user_se.len()).max().unwrap_or(0)
    }

    /// The exact header line for a table whose widest row has `max_users`
    /// per-user columns.
    pub fn csv_header(max_users: usize) -> String {
        let mut header = String::from(BASE_HEADER);
        for k in 1..=max_users {
            let _ = write!(header, ",se_user_{k}");
        }
        header
    }

    /// Render the table as CSV; an empty table is an error.
    pub fn to_csv_string(&self) -> Result<String, HarnessError> {
        if self.rows.is_empty() {
            return Err(HarnessError::EmptyTable);
        }
        let width = self.max_users();
        let mut out = Self::csv_header(width);
        out.push('\n');
        for row in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{}",
                row.sweep_axis.label(),
                fmt_float(row.sweep_value),
                row.mode.label(),
                row.trial,
                fmt_float(row.min_se),
                fmt_float(row.q),
                row.iterations,
                fmt_float(row.runtime_ms),
            );
            for k in 0..width {
                out.push(',');
                if let Some(&se) = row.user_se.get(k) {
                    out.push_str(&fmt_float(se));
                }
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Parse a table previously rendered by [`Self::to_csv_string`].
    pub fn from_csv_str(text: &str) -> Result<Self, HarnessError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(HarnessError::EmptyTable)?;
        if !header.starts_with(BASE_HEADER) {
            return Err(HarnessError::Parse(format!("unexpected header `{header}`")));
        }
        let n_cols = header.split(',').count();
        let mut rows = Vec::new();
        for (idx, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n_cols {
                return Err(HarnessError::Parse(format!(
                    "row {} has {} fields, header has {n_cols}",
                    idx + 1,
                    fields.len()
                )));
            }
            let float = |field: &str, what: &str| -> Result<f64, HarnessError> {
                field
                    .parse::<f64>()
                    .map_err(|_| HarnessError::Parse(format!("row {}: bad {what} `{field}`", idx + 1)))
            };
            let count = |field: &str, what: &str| -> Result<usize, HarnessError> {
                field
                    .parse::<usize>()
                    .map_err(|_| HarnessError::Parse(format!("row {}: bad {what} `{field}`", idx + 1)))
            };
            // Per-user columns: a filled prefix, then only empty padding.
            let tail = &fields[8..];
            let filled = tail.iter().take_while(|s| !s.is_empty()).count();
            if tail[filled..].iter().any(|s| !s.is_empty()) {
                return Err(HarnessError::Parse(format!(
                    "row {}: gap in per-user columns",
                    idx + 1
                )));
            }
            rows.push(TrialRow {
                sweep_axis: fields[0].parse()?,
                sweep_value: float(fields[1], "sweep_value")?,
                mode: Mode::from_str(fields[2])
                    .map_err(|e| HarnessError::Parse(format!("row {}: {e}", idx + 1)))?,
                trial: count(fields[3], "trial")?,
                min_se: float(fields[4], "min_se")?,
                q: float(fields[5], "q")?,
                iterations: count(fields[6], "iterations")?,
                runtime_ms: float(fields[7], "runtime_ms")?,
                user_se: tail[..filled]
                    .iter()
                    .map(|s| float(s, "user SE"))
                    .collect::<Result<_, _>>()?,
            });
        }
        if rows.is_empty() {
            return Err(HarnessError::EmptyTable);
        }
        Ok(Self { rows })
    }

    /// Render the table as a JSON array of row objects; an empty table is an
    /// error.
    pub fn to_json_string(&self) -> Result<String, HarnessError> {
        if self.rows.is_empty() {
            return Err(HarnessError::EmptyTable);
        }
        Ok(serde_json::to_string_pretty(&self.rows)?)
    }

    /// Group rows by (sweep value, mode) in first-appearance order and
    /// summarize min-SE. The statistics are plain arithmetic over the rows,
    /// so they can be recomputed exactly from the emitted table.
    pub fn aggregate(&self) -> Vec<AggregateRow> {
        let mut keys: Vec<(SweepAxis, f64, Mode)> = Vec::new();
        let mut cells: Vec<Vec<f64>> = Vec::new();
        for row in &self.rows {
            let key = (row.sweep_axis, row.sweep_value, row.mode);
            match keys.iter().position(|k| *k == key) {
                Some(i) => cells[i].push(row.min_se),
                None => {
                    keys.push(key);
                    cells.push(vec![row.min_se]);
                }
            }
        }
        keys.into_iter()
            .zip(cells)
            .map(|((sweep_axis, sweep_value, mode), xs)| {
                let n = xs.len();
                let mean = xs.iter().sum::<f64>() / n as f64;
                let var = if n > 1 {
                    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
                } else {
                    0.0
                };
                AggregateRow {
                    sweep_axis,
                    sweep_value,
                    mode,
                    n_trials: n,
                    mean_min_se: mean,
                    std_min_se: var.sqrt(),
                    min_min_se: xs.iter().copied().fold(f64::INFINITY, f64::min),
                    max_min_se: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                }
            })
            .collect()
    }
}

//! Panel and matrix files.
//!
//! Panels are CSV files with a header row of channel labels and one row of
//! decimal values per sample. Transfer entropy matrices are written in the
//! "from/to" layout: one row per source, one column per target, four
//! decimals, `-` for cells pairing a process with itself.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use redundancy_core::{ProcessId, TeMatrix, TimeSeriesPanel};
use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Header text of the first column of a matrix file.
pub const MATRIX_CORNER: &str = "from/to";
const ABSENT_CELL: &str = "-";

fn reader(path: &Path) -> CliResult<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn writer(path: &Path) -> CliResult<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Reads a panel CSV and validates it.
pub fn load_panel_csv(path: &Path) -> CliResult<TimeSeriesPanel> {
    let mut rdr = reader(path)?;
    let labels: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::csv(path, e))?
        .iter()
        .map(|s| s.trim_start_matches('\u{feff}').to_string())
        .collect();
    let width = labels.len();
    let mut channels: Vec<Vec<f64>> = vec![Vec::new(); width];
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::csv(path, e))?;
        let line = record_line(&record);
        if record.len() != width {
            return Err(CliError::Parse {
                line,
                column: record.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| CliError::Parse {
                line,
                column: col + 1,
                message: format!("invalid number {field:?}"),
            })?;
            if !value.is_finite() {
                return Err(CliError::NonFinite {
                    line,
                    column: col + 1,
                    label: labels[col].clone(),
                    value: field.to_string(),
                });
            }
            channels[col].push(value);
        }
    }
    Ok(TimeSeriesPanel::new(labels, channels)?)
}

/// Writes a panel in the same layout [`load_panel_csv`] reads, with values in
/// shortest round-trip form.
pub fn save_panel_csv(panel: &TimeSeriesPanel, path: &Path) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(panel.labels())
        .map_err(|e| CliError::csv(path, e))?;
    let mut row = Vec::with_capacity(panel.channel_count());
    for t in 0..panel.sample_count() {
        row.clear();
        row.extend(panel.channels().map(|c| c[t].to_string()));
        w.write_record(&row).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes clamped transfer entropies, rows = sources, columns = targets.
pub fn save_te_matrix_csv(matrix: &TeMatrix, labels: &[String], path: &Path) -> CliResult<()> {
    write_matrix_csv(matrix, labels, path, |m, r, c| m.get(r, c))
}

/// Writes raw (unclamped) transfer entropies in the same layout.
pub fn save_raw_te_matrix_csv(matrix: &TeMatrix, labels: &[String], path: &Path) -> CliResult<()> {
    write_matrix_csv(matrix, labels, path, |m, r, c| m.get_raw(r, c))
}

fn write_matrix_csv(
    matrix: &TeMatrix,
    labels: &[String],
    path: &Path,
    cell: impl Fn(&TeMatrix, ProcessId, ProcessId) -> Option<f64>,
) -> CliResult<()> {
    let label = |id: ProcessId| labels.get(id.0).cloned().unwrap_or_else(|| id.to_string());
    let mut w = writer(path)?;
    let header: Vec<String> = std::iter::once(MATRIX_CORNER.to_string())
        .chain(matrix.col_ids.iter().map(|&c| label(c)))
        .collect();
    w.write_record(&header)
        .map_err(|e| CliError::csv(path, e))?;
    for &r in &matrix.row_ids {
        let row: Vec<String> = std::iter::once(label(r))
            .chain(matrix.col_ids.iter().map(|&c| match cell(matrix, r, c) {
                Some(v) => format!("{v:.4}"),
                None => ABSENT_CELL.to_string(),
            }))
            .collect();
        w.write_record(&row).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// A transfer entropy matrix read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

impl LabeledMatrix {
    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let r = self.row_labels.iter().position(|l| l == row)?;
        let c = self.col_labels.iter().position(|l| l == col)?;
        self.values[r][c]
    }
}

/// Reads a matrix written by [`save_te_matrix_csv`].
pub fn load_te_matrix_csv(path: &Path) -> CliResult<LabeledMatrix> {
    let mut rdr = reader(path)?;
    let header = rdr.headers().map_err(|e| CliError::csv(path, e))?.clone();
    if header.get(0) != Some(MATRIX_CORNER) {
        return Err(CliError::Parse {
            line: 1,
            column: 1,
            message: format!("expected {MATRIX_CORNER:?} in the first header cell"),
        });
    }
    let col_labels: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut row_labels = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::csv(path, e))?;
        let line = record_line(&record);
        if record.len() != header.len() {
            return Err(CliError::Parse {
                line,
                column: record.len().min(header.len()) + 1,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        row_labels.push(record[0].to_string());
        let row = record
            .iter()
            .enumerate()
            .skip(1)
            .map(|(col, field)| {
                if field == ABSENT_CELL {
                    return Ok(None);
                }
                field.parse().map(Some).map_err(|_| CliError::Parse {
                    line,
                    column: col + 1,
                    message: format!("invalid number {field:?}"),
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        values.push(row);
    }
    Ok(LabeledMatrix {
        row_labels,
        col_labels,
        values,
    })
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::json(path, e))?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}

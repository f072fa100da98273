//! Report bundles: per-target reports, the matrices behind them and the
//! configuration that produced them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use redundancy_core::select::PipelineOutput;
use redundancy_core::{ProcessId, RedundancyReport, TeMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::write_json;

pub const TOOL_NAME: &str = "redundancy";

/// Details of one invocation that do not affect results: when it ran, with
/// how many workers and where it wrote. Excluded when comparing runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeInfo {
    pub created_unix_seconds: u64,
    pub threads: usize,
    pub output: PathBuf,
}

impl RuntimeInfo {
    /// Current time, or `SOURCE_DATE_EPOCH` when set.
    pub fn now(output: &Path) -> Self {
        let created_unix_seconds = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_secs())
            });
        Self {
            created_unix_seconds,
            threads: rayon::current_num_threads(),
            output: output.to_path_buf(),
        }
    }
}

/// Where an output came from: the tool, the subcommand and its effective
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub runtime: RuntimeInfo,
}

impl Provenance {
    pub fn new<C: Serialize>(command: &str, seed: Option<u64>, config: &C, output: &Path) -> Self {
        Self {
            tool: TOOL_NAME.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config: serde_json::to_value(config).expect("configuration serializes"),
            runtime: RuntimeInfo::now(output),
        }
    }
}

/// A transfer entropy matrix with channel labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub sources: Vec<String>,
    pub targets: Vec<String>,
    /// Estimates as returned by the estimator, possibly negative.
    pub raw: Vec<Vec<Option<f64>>>,
    /// Estimates clamped at zero.
    pub clamped: Vec<Vec<Option<f64>>>,
}

impl MatrixRecord {
    pub fn from_matrix(m: &TeMatrix, labels: &[String]) -> Self {
        let names = |ids: &[ProcessId]| ids.iter().map(|&id| label_of(labels, id)).collect();
        Self {
            sources: names(&m.row_ids),
            targets: names(&m.col_ids),
            raw: m.raw_values.clone(),
            clamped: m.values.clone(),
        }
    }

    fn empty() -> Self {
        Self {
            sources: Vec::new(),
            targets: Vec::new(),
            raw: Vec::new(),
            clamped: Vec::new(),
        }
    }
}

fn label_of(labels: &[String], id: ProcessId) -> String {
    labels.get(id.0).cloned().unwrap_or_else(|| id.to_string())
}

/// A report with process ids replaced by channel labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub target: String,
    pub target_relevant: Vec<String>,
    pub hidden: String,
    pub relevant: Vec<String>,
    #[serde(rename = "R_phi_to_z")]
    pub r_phi_to_z: f64,
    #[serde(rename = "R_phi_to_set")]
    pub r_phi_to_set: f64,
    #[serde(rename = "R_set_to_z")]
    pub r_set_to_z: f64,
    pub bound: f64,
    pub degenerate_flags: Vec<String>,
}

impl ReportRow {
    pub fn from_report(r: &RedundancyReport, labels: &[String]) -> Self {
        let names = |ids: &[ProcessId]| ids.iter().map(|&id| label_of(labels, id)).collect();
        Self {
            target: label_of(labels, r.target),
            target_relevant: names(&r.target_relevant),
            hidden: label_of(labels, r.hidden),
            relevant: names(&r.relevant),
            r_phi_to_z: r.r_phi_to_z,
            r_phi_to_set: r.r_phi_to_set,
            r_set_to_z: r.r_set_to_z,
            bound: r.bound,
            degenerate_flags: r.degenerate_flags.clone(),
        }
    }
}

/// Everything a `select` run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub provenance: Provenance,
    pub sources: Vec<String>,
    pub targets: Vec<String>,
    pub reports: Vec<ReportRow>,
    pub te_among_sources: MatrixRecord,
    pub te_to_targets: MatrixRecord,
}

impl ReportBundle {
    pub fn new(provenance: Provenance, out: &PipelineOutput, labels: &[String]) -> Self {
        Self {
            provenance,
            sources: out
                .te_among_sources
                .row_ids
                .iter()
                .map(|&id| label_of(labels, id))
                .collect(),
            targets: out
                .te_to_targets
                .col_ids
                .iter()
                .map(|&id| label_of(labels, id))
                .collect(),
            reports: out
                .reports
                .iter()
                .map(|r| ReportRow::from_report(r, labels))
                .collect(),
            te_among_sources: MatrixRecord::from_matrix(&out.te_among_sources, labels),
            te_to_targets: MatrixRecord::from_matrix(&out.te_to_targets, labels),
        }
    }

    /// A bundle with no sources, targets or reports.
    pub fn empty(provenance: Provenance) -> Self {
        Self {
            provenance,
            sources: Vec::new(),
            targets: Vec::new(),
            reports: Vec::new(),
            te_among_sources: MatrixRecord::empty(),
            te_to_targets: MatrixRecord::empty(),
        }
    }
}

pub fn save_reports_json(bundle: &ReportBundle, path: &Path) -> CliResult<()> {
    write_json(bundle, path)
}

pub const CURVE_FILE: &str = "redundancy_curve.csv";
pub const HIDDEN_HISTOGRAM_FILE: &str = "hidden_histogram.csv";
pub const RELEVANT_HISTOGRAM_FILE: &str = "relevant_histogram.csv";
pub const TARGET_RELEVANT_HISTOGRAM_FILE: &str = "target_relevant_histogram.csv";

/// Writes the per-target redundancy curve and the three selection
/// histograms into `out_dir`, returning the written paths.
///
/// Histograms list every source of the bundle in source order.
pub fn emit_plot_data(bundle: &ReportBundle, out_dir: &Path) -> CliResult<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut written = Vec::new();

    let path = out_dir.join(CURVE_FILE);
    let mut w = csv_writer(&path)?;
    w.write_record([
        "target",
        "R_phi_to_z",
        "R_phi_to_set",
        "R_set_to_z",
        "bound",
    ])
    .map_err(|e| CliError::csv(&path, e))?;
    for r in &bundle.reports {
        w.write_record([
            r.target.clone(),
            r.r_phi_to_z.to_string(),
            r.r_phi_to_set.to_string(),
            r.r_set_to_z.to_string(),
            r.bound.to_string(),
        ])
        .map_err(|e| CliError::csv(&path, e))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    written.push(path);

    let hidden = count(bundle, |r| std::slice::from_ref(&r.hidden));
    let relevant = count(bundle, |r| &r.relevant);
    let target_relevant = count(bundle, |r| &r.target_relevant);
    for (name, counts) in [
        (HIDDEN_HISTOGRAM_FILE, hidden),
        (RELEVANT_HISTOGRAM_FILE, relevant),
        (TARGET_RELEVANT_HISTOGRAM_FILE, target_relevant),
    ] {
        let path = out_dir.join(name);
        let mut w = csv_writer(&path)?;
        w.write_record(["source", "count"])
            .map_err(|e| CliError::csv(&path, e))?;
        for source in &bundle.sources {
            let n = counts.get(source.as_str()).copied().unwrap_or(0);
            w.write_record([source.as_str(), &n.to_string()])
                .map_err(|e| CliError::csv(&path, e))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn count<'a>(
    bundle: &'a ReportBundle,
    pick: impl Fn(&'a ReportRow) -> &'a [String],
) -> BTreeMap<&'a str, usize> {
    let mut counts = BTreeMap::new();
    for r in &bundle.reports {
        for s in pick(r) {
            *counts.entry(s.as_str()).or_insert(0) += 1;
        }
    }
    counts
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| CliError::csv(path, e))
}

//! Command-line front end: panel and matrix files, report bundles, plot data
//! and the `redundancy` subcommands.

pub mod bundle;
pub mod commands;
pub mod error;
pub mod io;

pub use bundle::{emit_plot_data, save_reports_json, Provenance, ReportBundle};
pub use error::{CliError, CliResult};
pub use io::{load_panel_csv, load_te_matrix_csv, save_panel_csv, save_te_matrix_csv};

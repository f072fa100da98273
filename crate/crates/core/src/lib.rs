//! Directed redundancy analysis for multichannel time series.
//!
//! The crate estimates pairwise transfer entropies with a nearest-neighbor
//! conditional mutual information estimator, selects a hidden redundancy
//! process and the sources it drives, and bounds the redundant information
//! those sources relay to a target. Closed forms and an exact Gaussian
//! evaluator for linear networks serve as reference values.

pub mod discrete;
pub mod error;
pub mod estimator;
pub mod gauss;
pub mod linsim;
pub mod panel;
pub mod select;

pub use error::{Error, Result};
pub use estimator::{embed, knn_cmi, te_matrix, transfer_entropy, EmbeddedCloud, EmbeddingSpec};
pub use linsim::{
    simulate_benchmark, simulate_lag_network, Coupling, LagCouplingSpec, LinSysParams,
};
pub use panel::{standardize, validate_panel, ProcessId, TeMatrix, TimeSeriesPanel};
pub use select::{run_pipeline, RedundancyReport, SelectionConfig};

//! Target-relevant source selection, hidden redundancy process
//! identification and the resulting redundancy bounds.
//!
//! All thresholds and minima operate on clamped (non-negative) transfer
//! entropies. Ties are broken by ascending process index.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{te_matrix, EmbeddingSpec};
use crate::panel::{ProcessId, TeMatrix, TimeSeriesPanel};

pub const FLAG_ZERO_TARGET_TE: &str = "zero_total_te_to_target";
pub const FLAG_ALL_ZERO: &str = "all_candidate_redundancies_zero";
pub const FLAG_EMPTY_RELEVANT: &str = "empty_relevant_set";

/// Mass fractions for the two subset selections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Fraction of the total source-to-target transfer entropy to cover.
    pub eta_t: f64,
    /// Fraction of a candidate's outgoing transfer entropy into the
    /// target-relevant set to cover.
    pub eta_h: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            eta_t: 0.8,
            eta_h: 0.8,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta_t", self.eta_t), ("eta_h", self.eta_h)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidConfig(format!(
                    "{name} = {v} is outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

/// Smallest set of candidates whose summed weight reaches `eta` times the
/// total weight.
///
/// Candidates are taken in descending weight order (ties by ascending
/// index) until the running sum meets or exceeds the threshold. Returns
/// candidate indices in the order they were taken. `eta = 0` or a zero total
/// yields the empty set.
pub fn min_fraction_subset(weights: &[f64], eta: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    // Summed in the same order as the running sum below.
    let total: f64 = order.iter().map(|&i| weights[i]).sum();
    if eta <= 0.0 || total <= 0.0 {
        return Vec::new();
    }
    let threshold = eta * total;
    let mut taken = Vec::new();
    let mut sum = 0.0;
    for i in order {
        if sum >= threshold {
            break;
        }
        sum += weights[i];
        taken.push(i);
    }
    taken
}

/// [`min_fraction_subset`] over labeled candidates; ties resolve by
/// ascending process index regardless of input order.
fn min_fraction_ids(candidates: &[(ProcessId, f64)], eta: f64) -> Vec<ProcessId> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by_key(|(id, _)| *id);
    let weights: Vec<f64> = sorted.iter().map(|(_, w)| *w).collect();
    min_fraction_subset(&weights, eta)
        .into_iter()
        .map(|i| sorted[i].0)
        .collect()
}

/// The target-relevant set and whether the total mass was zero.
pub fn target_relevant_set(
    te_to_target: &[(ProcessId, f64)],
    cfg: &SelectionConfig,
) -> (Vec<ProcessId>, bool) {
    let total: f64 = te_to_target.iter().map(|(_, w)| w).sum();
    (min_fraction_ids(te_to_target, cfg.eta_t), total <= 0.0)
}

/// Members of `t_set` (other than `candidate`) that receive an `eta_h`
/// fraction of the candidate's outgoing transfer entropy into `t_set`.
pub fn candidate_relevant_set(
    candidate: ProcessId,
    te_among_sources: &TeMatrix,
    t_set: &[ProcessId],
    cfg: &SelectionConfig,
) -> Vec<ProcessId> {
    let weights: Vec<(ProcessId, f64)> = t_set
        .iter()
        .filter(|&&j| j != candidate)
        .map(|&j| (j, te_among_sources.weight(candidate, j)))
        .collect();
    min_fraction_ids(&weights, cfg.eta_h)
}

/// Smallest transfer entropy from `candidate` into its relevant set; zero
/// (with `true` flag) when the set is empty.
pub fn candidate_redundancy(
    candidate: ProcessId,
    t_hat: &[ProcessId],
    te_among_sources: &TeMatrix,
) -> (f64, bool) {
    if t_hat.is_empty() {
        return (0.0, true);
    }
    let r = t_hat
        .iter()
        .map(|&j| te_among_sources.weight(candidate, j))
        .fold(f64::INFINITY, f64::min);
    (r, false)
}

/// Outcome of the hidden-process search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenSelection {
    pub hidden: ProcessId,
    pub relevant: Vec<ProcessId>,
    /// Smallest transfer entropy from the hidden process into `relevant`.
    pub redundancy: f64,
    /// Every candidate had zero redundancy; `hidden` is the lowest index.
    pub all_zero: bool,
}

/// Picks the candidate with the largest minimal outgoing transfer entropy
/// into its relevant set.
pub fn pick_hidden(
    candidates: &[ProcessId],
    te_among_sources: &TeMatrix,
    t_set: &[ProcessId],
    cfg: &SelectionConfig,
) -> Result<HiddenSelection> {
    let mut sorted = candidates.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut best: Option<HiddenSelection> = None;
    for &i in &sorted {
        let t_hat = candidate_relevant_set(i, te_among_sources, t_set, cfg);
        let (r, _) = candidate_redundancy(i, &t_hat, te_among_sources);
        if best.as_ref().map_or(true, |b| r > b.redundancy) {
            best = Some(HiddenSelection {
                hidden: i,
                relevant: t_hat,
                redundancy: r,
                all_zero: false,
            });
        }
    }
    let mut best = best.ok_or_else(|| Error::InvalidConfig("no candidate sources".into()))?;
    best.all_zero = best.redundancy <= 0.0;
    Ok(best)
}

/// Upper bound on the redundancy relayed through the relevant sources.
pub fn theorem1_bound(r_phi_to_z: f64, r_phi_to_set: f64, r_set_to_z: f64) -> f64 {
    r_phi_to_z.min(r_phi_to_set).min(r_set_to_z)
}

/// Bound for a known hidden process `phi` relaying through `X` and `Y` to `Z`.
pub fn lemma1_bound(te_phi_z: f64, te_phi_x: f64, te_phi_y: f64, te_x_z: f64, te_y_z: f64) -> f64 {
    [te_phi_z, te_phi_x, te_phi_y, te_x_z, te_y_z]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Per-target selection outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedundancyReport {
    pub target: ProcessId,
    pub target_relevant: Vec<ProcessId>,
    pub hidden: ProcessId,
    pub relevant: Vec<ProcessId>,
    pub r_phi_to_z: f64,
    pub r_phi_to_set: f64,
    pub r_set_to_z: f64,
    pub bound: f64,
    pub degenerate_flags: Vec<String>,
}

impl RedundancyReport {
    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_flags.is_empty()
    }
}

/// Builds the report for one target from precomputed matrices.
///
/// `te_to_targets` must contain the `source -> target` cells; the target is
/// excluded from its own source list.
pub fn report_for_target(
    target: ProcessId,
    sources: &[ProcessId],
    te_among_sources: &TeMatrix,
    te_to_targets: &TeMatrix,
    cfg: &SelectionConfig,
) -> Result<RedundancyReport> {
    let candidates: Vec<ProcessId> = sources.iter().copied().filter(|&s| s != target).collect();
    if candidates.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "target {target} has no sources other than itself"
        )));
    }
    let column: Vec<(ProcessId, f64)> = candidates
        .iter()
        .map(|&s| (s, te_to_targets.weight(s, target)))
        .collect();
    let mut flags = Vec::new();
    let (t_set, zero_total) = target_relevant_set(&column, cfg);
    if zero_total {
        flags.push(FLAG_ZERO_TARGET_TE.to_string());
    }
    let hidden = pick_hidden(&candidates, te_among_sources, &t_set, cfg)?;
    if hidden.all_zero {
        flags.push(FLAG_ALL_ZERO.to_string());
    }
    if hidden.relevant.is_empty() {
        flags.push(FLAG_EMPTY_RELEVANT.to_string());
    }
    let r_phi_to_z = te_to_targets.weight(hidden.hidden, target);
    let r_set_to_z = if hidden.relevant.is_empty() {
        0.0
    } else {
        hidden
            .relevant
            .iter()
            .map(|&j| te_to_targets.weight(j, target))
            .fold(f64::INFINITY, f64::min)
    };
    let r_phi_to_set = hidden.redundancy;
    Ok(RedundancyReport {
        target,
        target_relevant: t_set,
        hidden: hidden.hidden,
        relevant: hidden.relevant,
        r_phi_to_z,
        r_phi_to_set,
        r_set_to_z,
        bound: theorem1_bound(r_phi_to_z, r_phi_to_set, r_set_to_z),
        degenerate_flags: flags,
    })
}

/// Reports together with the transfer entropy matrices they were built from.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub reports: Vec<RedundancyReport>,
    /// Sources (rows) by sources (columns).
    pub te_among_sources: TeMatrix,
    /// Sources (rows) by targets (columns).
    pub te_to_targets: TeMatrix,
}

/// Runs the selection for each target.
///
/// The source-by-source matrix is estimated once and shared by all targets.
pub fn run_pipeline(
    panel: &TimeSeriesPanel,
    targets: &[ProcessId],
    sources: &[ProcessId],
    spec: &EmbeddingSpec,
    cfg: &SelectionConfig,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    if sources.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one source is required".into(),
        ));
    }
    let te_among_sources = te_matrix(panel, sources, sources, spec)?;
    // Columns for targets that are also sources are already estimated.
    let mut extra: Vec<ProcessId> = targets
        .iter()
        .copied()
        .filter(|t| !sources.contains(t))
        .collect();
    extra.sort();
    extra.dedup();
    let te_extra = te_matrix(panel, sources, &extra, spec)?;
    let raw = sources
        .iter()
        .map(|&s| {
            targets
                .iter()
                .map(|&t| {
                    if sources.contains(&t) {
                        te_among_sources.get_raw(s, t)
                    } else {
                        te_extra.get_raw(s, t)
                    }
                })
                .collect()
        })
        .collect();
    let te_to_targets = TeMatrix::from_raw(sources.to_vec(), targets.to_vec(), raw);
    let reports = targets
        .iter()
        .map(|&t| report_for_target(t, sources, &te_among_sources, &te_to_targets, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(PipelineOutput {
        reports,
        te_among_sources,
        te_to_targets,
    })
}

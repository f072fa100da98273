//! Nearest-neighbor transfer entropy estimation.
//!
//! Transfer entropy `TE(source -> target)` is estimated as the conditional
//! mutual information between the source's past and the target's present
//! given the target's past, using a single max-norm k-th neighbor radius in
//! the joint space and strict-inequality neighbor counts in the three
//! marginal subspaces:
//!
//! ```text
//! I = psi(k) - < psi(n_sp+1) + psi(n_pp+1) - psi(n_p+1) >
//! ```
//!
//! where `sp` is (source past, target past), `pp` is (target present, target
//! past) and `p` is the target past alone.

pub mod digamma;
pub mod jitter;
pub mod kdtree;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::nats_to_bits;
use crate::panel::{standardize_series, ProcessId, TeMatrix, TimeSeriesPanel};
use digamma::digamma_table;
use kdtree::{build_index, PointSet};

pub use digamma::digamma;

/// Largest fraction of points allowed to have a zero k-th neighbor distance.
const MAX_ZERO_RADIUS_FRACTION: f64 = 0.01;

/// History and neighbor settings for transfer entropy estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    /// Number of past samples used for both source and target.
    pub max_lag: usize,
    /// Offset of the predicted target sample after the most recent history sample.
    pub horizon: usize,
    pub k_neighbors: usize,
    /// Tie-breaking noise amplitude relative to each channel's standard deviation.
    pub jitter_amplitude: f64,
    pub seed: u64,
}

impl Default for EmbeddingSpec {
    fn default() -> Self {
        Self {
            max_lag: 5,
            horizon: 1,
            k_neighbors: 10,
            jitter_amplitude: 1e-8,
            seed: 0,
        }
    }
}

impl EmbeddingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.max_lag == 0 || self.horizon == 0 || self.k_neighbors == 0 {
            return Err(Error::InvalidConfig(
                "max_lag, horizon and k_neighbors must be at least 1".into(),
            ));
        }
        if !(self.jitter_amplitude >= 0.0 && self.jitter_amplitude.is_finite()) {
            return Err(Error::InvalidConfig(
                "jitter amplitude must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Shortest series accepted by [`embed`].
    pub fn min_length(&self) -> usize {
        self.max_lag + self.horizon + self.k_neighbors + 1
    }

    /// Seed for one ordered pair, independent of evaluation order.
    pub fn pair_seed(&self, source: ProcessId, target: ProcessId) -> u64 {
        jitter::mix(&[self.seed, source.0 as u64, target.0 as u64])
    }
}

/// Delay-embedded points `[source past (L), target present (1), target past (L)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedCloud {
    history: usize,
    /// Row-major, `2 * history + 1` values per point.
    points: Vec<f64>,
}

impl EmbeddedCloud {
    pub fn len(&self) -> usize {
        self.points.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        2 * self.history + 1
    }

    pub fn history(&self) -> usize {
        self.history
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim()..(i + 1) * self.dim()]
    }

    /// Source past block of point `i`, most recent sample first.
    pub fn source_past(&self, i: usize) -> &[f64] {
        &self.point(i)[..self.history]
    }

    pub fn target_present(&self, i: usize) -> f64 {
        self.point(i)[self.history]
    }

    /// Target past block of point `i`, most recent sample first.
    pub fn target_past(&self, i: usize) -> &[f64] {
        &self.point(i)[self.history + 1..]
    }

    /// Projection onto the listed coordinates.
    fn project(&self, coords: &[usize]) -> PointSet {
        let mut out = Vec::with_capacity(self.len() * coords.len());
        for p in self.points.chunks_exact(self.dim()) {
            out.extend(coords.iter().map(|&c| p[c]));
        }
        PointSet::new(coords.len(), out)
    }

    /// Builds a cloud from explicit blocks; all blocks must have `len` rows.
    pub fn from_blocks(
        source_past: &[Vec<f64>],
        target_present: &[f64],
        target_past: &[Vec<f64>],
    ) -> Result<Self> {
        let n = target_present.len();
        let history = source_past.first().map_or(0, Vec::len);
        if source_past.len() != n
            || target_past.len() != n
            || history == 0
            || source_past
                .iter()
                .chain(target_past)
                .any(|r| r.len() != history)
        {
            return Err(Error::InvalidConfig("inconsistent embedding blocks".into()));
        }
        let mut points = Vec::with_capacity(n * (2 * history + 1));
        for i in 0..n {
            points.extend_from_slice(&source_past[i]);
            points.push(target_present[i]);
            points.extend_from_slice(&target_past[i]);
        }
        Ok(Self { history, points })
    }
}

/// Delay-embeds a source/target pair.
///
/// Point `t` (for `t = L ..= N - u`) is
/// `[s(t-1), ..., s(t-L), z(t-1+u), z(t-1), ..., z(t-L)]`.
pub fn embed(source: &[f64], target: &[f64], spec: &EmbeddingSpec) -> Result<EmbeddedCloud> {
    spec.validate()?;
    let n = source.len().min(target.len());
    if source.len() != target.len() {
        return Err(Error::InvalidConfig(
            "source and target lengths differ".into(),
        ));
    }
    let required = spec.min_length();
    if n < required {
        return Err(Error::TooShort {
            available: n,
            required,
        });
    }
    let l = spec.max_lag;
    let u = spec.horizon;
    let mut points = Vec::with_capacity((n - l - u + 1) * (2 * l + 1));
    for t in l..=n - u {
        points.extend((1..=l).map(|lag| source[t - lag]));
        points.push(target[t - 1 + u]);
        points.extend((1..=l).map(|lag| target[t - lag]));
    }
    Ok(EmbeddedCloud { history: l, points })
}

/// Sum with pairwise (cascade) reduction over a fixed order.
fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 32 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Conditional mutual information `I(source past; target present | target past)`
/// in nats.
fn knn_cmi_nats(cloud: &EmbeddedCloud, k: usize) -> Result<f64> {
    let m = cloud.len();
    if k == 0 || k >= m {
        return Err(Error::TooShort {
            available: m,
            required: k + 1,
        });
    }
    let l = cloud.history();
    let all: Vec<usize> = (0..cloud.dim()).collect();
    let src_and_past: Vec<usize> = (0..l).chain(l + 1..2 * l + 1).collect();
    let present_and_past: Vec<usize> = (l..2 * l + 1).collect();
    let past: Vec<usize> = (l + 1..2 * l + 1).collect();

    let joint = cloud.project(&all);
    let sp = cloud.project(&src_and_past);
    let pp = cloud.project(&present_and_past);
    let p = cloud.project(&past);
    let (joint_idx, sp_idx, pp_idx, p_idx) = (
        build_index(&joint),
        build_index(&sp),
        build_index(&pp),
        build_index(&p),
    );
    let psi = digamma_table(m);

    let per_point: Vec<(f64, bool)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let eps = joint_idx.kth_distance(i, k);
            let n_sp = sp_idx.count_within(i, eps);
            let n_pp = pp_idx.count_within(i, eps);
            let n_p = p_idx.count_within(i, eps);
            (psi[n_sp + 1] + psi[n_pp + 1] - psi[n_p + 1], eps == 0.0)
        })
        .collect();

    let zero_radius = per_point.iter().filter(|(_, z)| *z).count();
    if zero_radius as f64 > MAX_ZERO_RADIUS_FRACTION * m as f64 {
        return Err(Error::DegenerateGeometry {
            zero_radius,
            points: m,
        });
    }
    let terms: Vec<f64> = per_point.into_iter().map(|(v, _)| v).collect();
    Ok(psi[k] - pairwise_sum(&terms) / m as f64)
}

/// Nearest-neighbor estimate, in bits, of the conditional mutual information
/// between the source-past block and the target-present block given the
/// target-past block.
pub fn knn_cmi(cloud: &EmbeddedCloud, k: usize) -> Result<f64> {
    knn_cmi_nats(cloud, k).map(nats_to_bits)
}

/// Standardizes, jitters and embeds one ordered pair of series.
fn prepare_pair(
    source: &[f64],
    target: &[f64],
    ids: (ProcessId, ProcessId),
    labels: (&str, &str),
    spec: &EmbeddingSpec,
) -> Result<EmbeddedCloud> {
    let key = spec.pair_seed(ids.0, ids.1);
    let prep = |series: &[f64], id: ProcessId, label: &str| -> Result<Vec<f64>> {
        let z = standardize_series(series).ok_or_else(|| Error::ConstantChannel(label.into()))?;
        Ok(jitter::jitter_series(
            &z,
            spec.jitter_amplitude,
            key,
            id.0 as u64,
        ))
    };
    let s = prep(source, ids.0, labels.0)?;
    let t = prep(target, ids.1, labels.1)?;
    embed(&s, &t, spec)
}

/// Raw transfer entropy estimate `TE(source -> target)` in bits.
///
/// May be slightly negative through estimator noise.
pub fn transfer_entropy(
    panel: &TimeSeriesPanel,
    source: ProcessId,
    target: ProcessId,
    spec: &EmbeddingSpec,
) -> Result<f64> {
    spec.validate()?;
    panel.process(source.0)?;
    panel.process(target.0)?;
    if source == target {
        return Err(Error::SameProcess(source.0));
    }
    let cloud = prepare_pair(
        panel.channel(source.0),
        panel.channel(target.0),
        (source, target),
        (panel.label(source), panel.label(target)),
        spec,
    )?;
    knn_cmi(&cloud, spec.k_neighbors)
}

/// Transfer entropy for every ordered `(source, target)` pair with distinct
/// processes. Cells pairing a process with itself are left absent.
pub fn te_matrix(
    panel: &TimeSeriesPanel,
    sources: &[ProcessId],
    targets: &[ProcessId],
    spec: &EmbeddingSpec,
) -> Result<TeMatrix> {
    spec.validate()?;
    for id in sources.iter().chain(targets) {
        panel.process(id.0)?;
    }
    let pairs: Vec<(usize, usize)> = (0..sources.len())
        .flat_map(|r| (0..targets.len()).map(move |c| (r, c)))
        .collect();
    let cells: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&(r, c)| {
            let (s, t) = (sources[r], targets[c]);
            if s == t {
                return Ok(None);
            }
            transfer_entropy(panel, s, t, spec)
                .map(Some)
                .map_err(|e| Error::Pair {
                    source_id: s.0,
                    target: t.0,
                    error: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    let nt = targets.len();
    let raw = (0..sources.len())
        .map(|r| cells[r * nt..(r + 1) * nt].to_vec())
        .collect();
    Ok(TeMatrix::from_raw(sources.to_vec(), targets.to_vec(), raw))
}

//! Multichannel time-series panel and the transfer-entropy matrix container.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Channels with variance below this are rejected by [`standardize`].
pub const MIN_VARIANCE: f64 = 1e-15;

/// Index of a channel inside a [`TimeSeriesPanel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProcessId(pub usize);

impl ProcessId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for ProcessId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// `J` labeled channels of `N` real samples each.
///
/// Samples of one channel are stored contiguously, so a history window of a
/// single channel is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    labels: Vec<String>,
    data: Vec<f64>,
    sample_count: usize,
}

impl TimeSeriesPanel {
    /// Builds a panel from per-channel sample vectors and validates it.
    pub fn new(labels: Vec<String>, channels: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != channels.len() {
            return Err(Error::InvalidConfig(format!(
                "{} labels for {} channels",
                labels.len(),
                channels.len()
            )));
        }
        let sample_count = channels.first().map_or(0, Vec::len);
        for (channel, samples) in channels.iter().enumerate() {
            if samples.len() != sample_count {
                return Err(Error::LengthMismatch {
                    channel,
                    expected: sample_count,
                    found: samples.len(),
                });
            }
        }
        let panel = Self {
            labels,
            data: channels.concat(),
            sample_count,
        };
        panel.validate()?;
        Ok(panel)
    }

    /// Checks every panel invariant.
    pub fn validate(&self) -> Result<()> {
        if self.labels.is_empty() || self.sample_count == 0 {
            return Err(Error::EmptyPanel);
        }
        if self.data.len() != self.labels.len() * self.sample_count {
            return Err(Error::LengthMismatch {
                channel: self.data.len() / self.sample_count,
                expected: self.sample_count,
                found: self.data.len() % self.sample_count,
            });
        }
        let mut seen = HashSet::with_capacity(self.labels.len());
        for label in &self.labels {
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        for channel in 0..self.labels.len() {
            if let Some(sample) = self.channel(channel).iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite { channel, sample });
            }
        }
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, id: ProcessId) -> &str {
        &self.labels[id.0]
    }

    pub fn channel_count(&self) -> usize {
        self.labels.len()
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// Samples of channel `index`.
    ///
    /// Panics if `index` is out of range; use [`Self::process`] to check ids first.
    pub fn channel(&self, index: usize) -> &[f64] {
        &self.data[index * self.sample_count..(index + 1) * self.sample_count]
    }

    /// Validated process id for channel `index`.
    pub fn process(&self, index: usize) -> Result<ProcessId> {
        if index < self.labels.len() {
            Ok(ProcessId(index))
        } else {
            Err(Error::InvalidProcess {
                index,
                channels: self.labels.len(),
            })
        }
    }

    pub fn process_by_label(&self, label: &str) -> Option<ProcessId> {
        self.labels.iter().position(|l| l == label).map(ProcessId)
    }

    pub fn channels(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.sample_count)
    }

    /// Returns a copy with each channel mapped through `f`.
    pub fn map_channels<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, &[f64]) -> Result<Vec<f64>>,
    {
        let channels = self
            .channels()
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.labels.clone(), channels)
    }
}

/// Returns the panel unchanged if all invariants hold.
pub fn validate_panel(panel: TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    panel.validate()?;
    Ok(panel)
}

/// Sample mean and unbiased (N-1) variance of a series.
pub fn mean_and_variance(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let ss = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

/// Standardizes one series to zero mean and unit unbiased variance.
pub fn standardize_series(samples: &[f64]) -> Option<Vec<f64>> {
    let (mean, var) = mean_and_variance(samples);
    if !(var >= MIN_VARIANCE) {
        return None;
    }
    let sd = var.sqrt();
    Some(samples.iter().map(|v| (v - mean) / sd).collect())
}

/// Rescales every channel to sample mean 0 and unbiased sample variance 1.
pub fn standardize(panel: &TimeSeriesPanel) -> Result<TimeSeriesPanel> {
    panel.map_channels(|i, samples| {
        standardize_series(samples).ok_or_else(|| Error::ConstantChannel(panel.labels[i].clone()))
    })
}

/// Pairwise directed transfer entropies in bits.
///
/// Rows are sources, columns are targets. A cell whose source and target are
/// the same process is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeMatrix {
    pub row_ids: Vec<ProcessId>,
    pub col_ids: Vec<ProcessId>,
    /// Estimates clamped at zero.
    pub values: Vec<Vec<Option<f64>>>,
    /// Estimates as returned by the estimator, possibly negative.
    pub raw_values: Vec<Vec<Option<f64>>>,
}

impl TeMatrix {
    /// Builds a matrix from raw estimates; clamped values are derived.
    pub fn from_raw(
        row_ids: Vec<ProcessId>,
        col_ids: Vec<ProcessId>,
        raw_values: Vec<Vec<Option<f64>>>,
    ) -> Self {
        let values = raw_values
            .iter()
            .map(|row| row.iter().map(|v| v.map(|x| x.max(0.0))).collect())
            .collect();
        Self {
            row_ids,
            col_ids,
            values,
            raw_values,
        }
    }

    fn position(&self, source: ProcessId, target: ProcessId) -> Option<(usize, usize)> {
        let r = self.row_ids.iter().position(|&id| id == source)?;
        let c = self.col_ids.iter().position(|&id| id == target)?;
        Some((r, c))
    }

    /// Clamped estimate for `source -> target`, `None` if absent.
    pub fn get(&self, source: ProcessId, target: ProcessId) -> Option<f64> {
        self.position(source, target)
            .and_then(|(r, c)| self.values[r][c])
    }

    pub fn get_raw(&self, source: ProcessId, target: ProcessId) -> Option<f64> {
        self.position(source, target)
            .and_then(|(r, c)| self.raw_values[r][c])
    }

    /// Clamped estimate, with absent cells read as zero.
    pub fn weight(&self, source: ProcessId, target: ProcessId) -> f64 {
        self.get(source, target).unwrap_or(0.0)
    }
}

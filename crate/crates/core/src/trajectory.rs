//! Uniformly sampled scalar series, the input to every analysis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ground-truth class of a series, when known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Diffusive,
    Deterministic,
    Unknown,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Diffusive => "diffusive",
            Label::Deterministic => "deterministic",
            Label::Unknown => "unknown",
        })
    }
}

/// Samples `x_0..x_{n-1}` taken every `dt` time units.
///
/// Construction validates `n >= 2`, `dt > 0` and finiteness of every sample,
/// so downstream code never re-checks them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    values: Vec<f64>,
    dt: f64,
    label: Label,
}

impl Trajectory {
    pub fn new(values: Vec<f64>, dt: f64) -> Result<Self> {
        Self::with_label(values, dt, Label::Unknown)
    }

    pub fn with_label(values: Vec<f64>, dt: f64, label: Label) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid(format!(
                "trajectory needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("dt must be positive and finite, got {dt}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "sample {i} is not finite ({})",
                values[i]
            )));
        }
        Ok(Self { values, dt, label })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; a valid trajectory has at least two samples.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Total observed duration `(n - 1) * dt`.
    pub fn duration(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.dt
    }

    /// `max - min` of the samples.
    pub fn range(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo
    }

    /// Sample time of index `i`.
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }
}

//! Latent-exposure block: the Dirichlet-process mixture over crossing
//! counts and its Gibbs updates (cluster assignment, stick weights, latent
//! continuization, cluster parameters, and the Metropolis-Hastings count
//! update).

pub mod kernel;
pub mod steps;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use kernel::{kernel_pmf, ln_kernel_pmf};
pub use steps::{
    assign_clusters, mean_posterior, mh_update_crossings, precision_posterior,
    sample_latent_continuous, update_cluster_params, update_stick_weights, KernelTable,
    MixtureProposal,
};

/// Nearest nonnegative integer of a continuized count (`x > -0.5` by
/// construction, so rounding never lands below zero).
#[inline]
pub fn nearest_count(x: f64) -> u32 {
    let r = x.round();
    if r <= 0.0 {
        0
    } else {
        r as u32
    }
}

/// Hyperparameters of the DP mixture and its Normal-Gamma base distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpHyper {
    /// Truncation level: maximum number of distinct clusters.
    pub max_clusters: usize,
    /// DP precision (mass) parameter.
    pub precision: f64,
    /// Base-distribution location.
    pub base_mean: f64,
    /// Gamma shape on the cluster precision.
    pub base_shape: f64,
    /// Gamma rate on the cluster precision.
    pub base_rate: f64,
}

impl Default for DpHyper {
    fn default() -> Self {
        DpHyper {
            max_clusters: 3,
            precision: 1.0,
            base_mean: 0.0,
            base_shape: 2.0,
            base_rate: 10.0,
        }
    }
}

impl DpHyper {
    pub fn validate(&self) -> Result<()> {
        if self.max_clusters == 0 {
            return Err(Error::config("max_clusters must be at least 1"));
        }
        if !(self.precision > 0.0 && self.base_shape > 0.0 && self.base_rate > 0.0) {
            return Err(Error::config(
                "DP precision and base shape/rate must be positive",
            ));
        }
        if !self.base_mean.is_finite() {
            return Err(Error::config("base mean must be finite"));
        }
        Ok(())
    }
}

/// Mixture state: truncated stick-breaking weights, cluster parameters, and
/// the per-cell cluster assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpState {
    /// Cluster locations, each >= -0.5.
    pub means: Vec<f64>,
    /// Cluster variances, each > 0.
    pub vars: Vec<f64>,
    /// Stick variables V_l in (0,1], last pinned to 1.
    pub sticks: Vec<f64>,
    /// Mixture weights, summing to exactly one.
    pub weights: Vec<f64>,
    /// Cluster id per cell, segment-major.
    pub assignment: Vec<usize>,
}

impl DpState {
    /// Check the structural invariants the sampler must preserve.
    pub fn check_legal(&self) -> Result<()> {
        let c = self.means.len();
        if self.vars.len() != c || self.sticks.len() != c || self.weights.len() != c {
            return Err(Error::validation("cluster arrays disagree on length"));
        }
        if self.means.iter().any(|&m| !(m >= -0.5)) {
            return Err(Error::validation("a cluster mean fell below -0.5"));
        }
        if self.vars.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::validation("a cluster variance is not positive"));
        }
        let sum: f64 = self.weights.iter().sum();
        if sum != 1.0 {
            return Err(Error::validation(format!(
                "mixture weights sum to {sum}, expected exactly 1"
            )));
        }
        if self.sticks.last() != Some(&1.0) {
            return Err(Error::validation("last stick variable must be 1"));
        }
        if self.assignment.iter().any(|&z| z >= c) {
            return Err(Error::validation("cluster assignment out of range"));
        }
        Ok(())
    }
}

/// Per-cell latent crossing counts and their continuized values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureState {
    /// Crossing count per cell, segment-major.
    pub counts: Vec<u32>,
    /// Continuized latent per cell, in (n - 1/2, n + 1/2).
    pub latent: Vec<f64>,
}

impl ExposureState {
    pub fn check_legal(&self, observed: &[u32]) -> Result<()> {
        if self.counts.len() != observed.len() || self.latent.len() != observed.len() {
            return Err(Error::validation("exposure arrays disagree with panel size"));
        }
        for (i, (&n, &k)) in self.counts.iter().zip(observed).enumerate() {
            if n < k {
                return Err(Error::validation(format!(
                    "cell {i}: crossings {n} below observed count {k}"
                )));
            }
            let ns = self.latent[i];
            if !(ns > -0.5) || nearest_count(ns) != n {
                return Err(Error::validation(format!(
                    "cell {i}: continuized latent {ns} does not round to {n}"
                )));
            }
        }
        Ok(())
    }
}

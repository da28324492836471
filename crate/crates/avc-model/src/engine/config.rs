//! Run configuration for the Gibbs engine.

use serde::{Deserialize, Serialize};

use crate::collision::CollisionHyper;
use crate::error::{Error, Result};
use crate::exposure::DpHyper;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Total sweeps per chain.
    pub iterations: usize,
    /// Leading sweeps discarded from every chain.
    pub burn_in: usize,
    /// Keep every `thin`-th post-burn-in draw of the global parameters.
    pub thin: usize,
    /// Keep per-cell (n, p) samples every `cell_thin`-th kept draw.
    pub cell_thin: usize,
    /// Record per-cell samples at all (they dominate storage).
    pub store_cell_draws: bool,
    pub chains: usize,
    pub seed: u64,
    pub dp: DpHyper,
    pub collision: CollisionHyper,
    /// Standardize segment covariates before fitting; the transform is
    /// recorded in the run metadata for back-transformation.
    pub standardize: bool,
    /// Support cap of the count proposal; 0 selects
    /// `max(50, 10 * max observed count)`.
    pub proposal_cap: u32,
    /// Write a checkpoint every this many sweeps; 0 disables checkpointing.
    pub checkpoint_interval: usize,
    /// Halt each chain after this many sweeps (operational hook used to
    /// exercise checkpoint/resume; the run is then incomplete by design).
    pub stop_after: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            iterations: 20_000,
            burn_in: 10_000,
            thin: 1,
            cell_thin: 10,
            store_cell_draws: true,
            chains: 4,
            seed: 1,
            dp: DpHyper::default(),
            collision: CollisionHyper::default(),
            standardize: false,
            proposal_cap: 0,
            checkpoint_interval: 0,
            stop_after: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations must be positive"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::config(format!(
                "burn_in ({}) must be below iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 || self.cell_thin == 0 {
            return Err(Error::config("thin and cell_thin must be at least 1"));
        }
        if self.chains == 0 {
            return Err(Error::config("at least one chain is required"));
        }
        self.dp.validate()?;
        self.collision.validate()?;
        Ok(())
    }

    /// Effective proposal cap for a panel whose largest observed count is
    /// `max_count`.
    pub fn effective_cap(&self, max_count: u32) -> u32 {
        if self.proposal_cap > 0 {
            self.proposal_cap.max(max_count)
        } else {
            50.max(10 * max_count)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_documented_schedule() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.iterations, 20_000);
        assert_eq!(cfg.burn_in, 10_000);
        assert_eq!(cfg.chains, 4);
        cfg.validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_schedules() {
        let mut cfg = RunConfig::default();
        cfg.burn_in = cfg.iterations;
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.thin = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = RunConfig::default();
        cfg.chains = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn cap_rule() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.effective_cap(0), 50);
        assert_eq!(cfg.effective_cap(3), 50);
        assert_eq!(cfg.effective_cap(9), 90);
        let mut cfg = RunConfig::default();
        cfg.proposal_cap = 20;
        assert_eq!(cfg.effective_cap(3), 20);
        assert_eq!(cfg.effective_cap(25), 25);
    }
}

//! One chain of the blocked Gibbs sampler.
//!
//! A sweep runs the exposure block in full (cluster assignment, stick
//! weights, latent continuization, cluster parameters, count update), then
//! the collision block (auxiliary draw, time-invariant coefficients, the
//! twelve month blocks, indicators, indicator probabilities). Cell loops run
//! in a fixed segment-major order, so a chain is a pure function of
//! `(dataset, hyperparameters, seed, chain id)`.

use serde::{Deserialize, Serialize};

use crate::collision::{
    self, augment_omega, collision_prob, compute_psi_grid, refresh_kappa, CollisionHyper,
    RegressionState,
};
use crate::design::DesignMatrices;
use crate::dist::{sample_categorical, sample_gamma, sample_truncated_normal, TruncatedNormalSpec};
use crate::error::Result;
use crate::exposure::{
    assign_clusters, mh_update_crossings, nearest_count, sample_latent_continuous,
    update_cluster_params, update_stick_weights, DpHyper, DpState, ExposureState, KernelTable,
    MixtureProposal,
};
use crate::stream::RandomStream;

/// Deliberate defects for the sampler-correctness harness. `None` is the
/// production path; the other variants reproduce specific bookkeeping
/// mistakes so the joint-distribution test can demonstrate it detects them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultInjection {
    None,
    /// Cluster-variance update with the misprinted (unsquared) Gamma rate.
    UnsquaredClusterRate,
    /// Skip the kappa refresh after the count update.
    StaleKappa,
}

/// Full sampler state of one chain plus its random stream.
pub struct ChainSampler<'d> {
    design: &'d DesignMatrices,
    dp_hyper: DpHyper,
    collision_hyper: CollisionHyper,
    cap: u32,
    /// Observed counts; owned so validation harnesses can regenerate data.
    counts: Vec<u32>,
    pub dp: DpState,
    pub exposure: ExposureState,
    pub regression: RegressionState,
    kappa: Vec<f64>,
    psi: Vec<f64>,
    rng: RandomStream,
    pub sweep_index: usize,
    accepted: u64,
    proposed: u64,
}

/// Serializable snapshot of everything a chain needs to resume exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerSnapshot {
    pub counts: Vec<u32>,
    pub dp: DpState,
    pub exposure: ExposureState,
    pub regression: RegressionState,
    pub kappa: Vec<f64>,
    pub rng: crate::stream::StreamState,
    pub sweep_index: usize,
    pub accepted: u64,
    pub proposed: u64,
}

impl<'d> ChainSampler<'d> {
    /// Initialize a chain from the documented starting point: zero
    /// coefficients, `q = 1/2`, indicators fair-coin, cluster parameters
    /// from the base distribution, uniform assignments, and counts at
    /// `max(observed, prior mixture draw)`.
    pub fn init(
        design: &'d DesignMatrices,
        dp_hyper: DpHyper,
        collision_hyper: CollisionHyper,
        cap: u32,
        mut rng: RandomStream,
    ) -> Result<Self> {
        dp_hyper.validate()?;
        collision_hyper.validate()?;
        let cells = design.num_cells();
        let c = dp_hyper.max_clusters;

        let mut means = Vec::with_capacity(c);
        let mut vars = Vec::with_capacity(c);
        for _ in 0..c {
            let precision = sample_gamma(dp_hyper.base_shape, dp_hyper.base_rate, &mut rng)?;
            let var = 1.0 / precision;
            let spec = TruncatedNormalSpec::new(dp_hyper.base_mean, var.sqrt(), -0.5)?;
            means.push(sample_truncated_normal(&spec, &mut rng));
            vars.push(var);
        }
        let mut sticks = vec![1.0; c];
        for stick in sticks.iter_mut().take(c.saturating_sub(1)) {
            *stick = crate::dist::sample_beta(1.0, dp_hyper.precision, &mut rng)?;
        }
        let weights = crate::exposure::steps::stick_weights(&sticks);

        let uniform = vec![1.0; c];
        let mut assignment = vec![0usize; cells];
        for slot in &mut assignment {
            *slot = sample_categorical(&uniform, &mut rng)?;
        }

        let mut counts_latent = Vec::with_capacity(cells);
        for &k in &design.counts {
            let cluster = sample_categorical(&weights, &mut rng)?;
            let spec = TruncatedNormalSpec::new(means[cluster], vars[cluster].sqrt(), -0.5)?;
            let draw = nearest_count(sample_truncated_normal(&spec, &mut rng)).min(cap);
            counts_latent.push(draw.max(k));
        }
        let latent: Vec<f64> = counts_latent.iter().map(|&n| f64::from(n)).collect();

        let months = design.months;
        let regression = RegressionState {
            beta: vec![0.0; design.x_dim],
            alpha0: vec![0.0; months],
            gamma: vec![vec![0.0; design.y_dim]; months],
            q: vec![0.5; months],
            indicators: (0..cells).map(|_| u8::from(rng.bernoulli(0.5))).collect(),
            omega: vec![0.0; cells],
        };

        let mut kappa = vec![0.0; cells];
        refresh_kappa(&design.counts, &counts_latent, &mut kappa);

        Ok(ChainSampler {
            design,
            dp_hyper,
            collision_hyper,
            cap,
            counts: design.counts.clone(),
            dp: DpState {
                means,
                vars,
                sticks,
                weights,
                assignment,
            },
            exposure: ExposureState {
                counts: counts_latent,
                latent,
            },
            regression,
            kappa,
            psi: vec![0.0; cells],
            rng,
            sweep_index: 0,
            accepted: 0,
            proposed: 0,
        })
    }

    pub fn design(&self) -> &'d DesignMatrices {
        self.design
    }

    pub fn observed_counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            f64::NAN
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn accept_counts(&self) -> (u64, u64) {
        (self.accepted, self.proposed)
    }

    /// One full sweep of the production sampler.
    pub fn sweep(&mut self) -> Result<()> {
        self.sweep_with(FaultInjection::None)
    }

    /// One full sweep with an optional injected defect (test harness only).
    pub fn sweep_with(&mut self, fault: FaultInjection) -> Result<()> {
        let sweep = self.sweep_index;
        let block = |e: crate::error::Error, name: &'static str| e.in_block(name, sweep);

        // Exposure block.
        let table = KernelTable::build(&self.dp.means, &self.dp.vars, self.cap)
            .map_err(|e| block(e, "cluster-kernel"))?;
        assign_clusters(
            &self.exposure.counts,
            &self.dp.weights,
            &table,
            &mut self.dp.assignment,
            &mut self.rng,
        )
        .map_err(|e| block(e, "cluster-assignment"))?;

        let (sticks, weights) =
            update_stick_weights(&self.dp.assignment, &self.dp_hyper, &mut self.rng)
                .map_err(|e| block(e, "stick-weights"))?;
        self.dp.sticks = sticks;
        self.dp.weights = weights;

        for (i, latent) in self.exposure.latent.iter_mut().enumerate() {
            let cluster = self.dp.assignment[i];
            let n = self.exposure.counts[i];
            let (lo, hi) = table.cdf_bounds(cluster, n);
            *latent = sample_latent_continuous(
                n,
                self.dp.means[cluster],
                self.dp.vars[cluster].sqrt(),
                lo,
                hi,
                &mut self.rng,
            );
        }

        update_cluster_params(
            &mut self.dp.means,
            &mut self.dp.vars,
            &self.dp.assignment,
            &self.exposure.latent,
            &self.dp_hyper,
            &mut self.rng,
            fault == FaultInjection::UnsquaredClusterRate,
        )
        .map_err(|e| block(e, "cluster-params"))?;

        let table = KernelTable::build(&self.dp.means, &self.dp.vars, self.cap)
            .map_err(|e| block(e, "cluster-kernel"))?;
        let proposal = MixtureProposal::build(&self.dp.weights, &table);
        compute_psi_grid(self.design, &self.regression, &mut self.psi);
        for i in 0..self.exposure.counts.len() {
            let (next, accepted) = mh_update_crossings(
                self.counts[i],
                self.exposure.counts[i],
                self.psi[i],
                &proposal,
                &mut self.rng,
            );
            self.exposure.counts[i] = next;
            self.accepted += u64::from(accepted);
            self.proposed += 1;
        }
        if fault != FaultInjection::StaleKappa {
            refresh_kappa(&self.counts, &self.exposure.counts, &mut self.kappa);
        }

        // Collision block. The count update leaves psi untouched, so the
        // grid computed for the Metropolis step is still current here.
        augment_omega(
            &self.exposure.counts,
            &self.psi,
            &mut self.regression.omega,
            &mut self.rng,
        )
        .map_err(|e| block(e, "polya-gamma"))?;

        collision::update_beta(
            self.design,
            &mut self.regression,
            &self.kappa,
            &self.collision_hyper,
            &mut self.rng,
        )
        .map_err(|e| block(e, "beta-update"))?;

        for t0 in 0..self.design.months {
            collision::update_time_varying(
                self.design,
                &mut self.regression,
                &self.kappa,
                t0,
                &self.collision_hyper,
                &mut self.rng,
            )
            .map_err(|e| block(e, "month-update"))?;
        }

        collision::update_indicators(self.design, &mut self.regression, &self.kappa, &mut self.rng);
        collision::update_q(
            self.design,
            &mut self.regression,
            &self.collision_hyper,
            &mut self.rng,
        )
        .map_err(|e| block(e, "indicator-probability"))?;

        self.sweep_index += 1;
        Ok(())
    }

    /// Current collision probability per cell under the post-sweep state.
    pub fn probability_grid(&mut self) -> Vec<f64> {
        compute_psi_grid(self.design, &self.regression, &mut self.psi);
        self.psi.iter().map(|&v| collision_prob(v)).collect()
    }

    /// Structural invariants that must hold after every sweep.
    pub fn check_legal(&self) -> Result<()> {
        self.dp.check_legal()?;
        self.exposure.check_legal(&self.counts)?;
        self.regression
            .check_legal(&self.counts, &self.exposure.counts)?;
        Ok(())
    }

    pub fn snapshot(&self) -> SamplerSnapshot {
        SamplerSnapshot {
            counts: self.counts.clone(),
            dp: self.dp.clone(),
            exposure: self.exposure.clone(),
            regression: self.regression.clone(),
            kappa: self.kappa.clone(),
            rng: self.rng.state(),
            sweep_index: self.sweep_index,
            accepted: self.accepted,
            proposed: self.proposed,
        }
    }

    pub fn restore(
        design: &'d DesignMatrices,
        dp_hyper: DpHyper,
        collision_hyper: CollisionHyper,
        cap: u32,
        snapshot: SamplerSnapshot,
    ) -> Self {
        let cells = design.num_cells();
        ChainSampler {
            design,
            dp_hyper,
            collision_hyper,
            cap,
            counts: snapshot.counts,
            dp: snapshot.dp,
            exposure: snapshot.exposure,
            regression: snapshot.regression,
            kappa: snapshot.kappa,
            psi: vec![0.0; cells],
            rng: RandomStream::restore(snapshot.rng),
            sweep_index: snapshot.sweep_index,
            accepted: snapshot.accepted,
            proposed: snapshot.proposed,
        }
    }

    /// Replace the full latent-and-parameter state with a draw from the
    /// prior/forward model, leaving the observed counts untouched until
    /// [`Self::regenerate_data`] is called. Validation-harness entry point.
    pub fn prior_draw(&mut self) -> Result<()> {
        let c = self.dp_hyper.max_clusters;
        for l in 0..c {
            let precision =
                sample_gamma(self.dp_hyper.base_shape, self.dp_hyper.base_rate, &mut self.rng)?;
            let var = 1.0 / precision;
            let spec = TruncatedNormalSpec::new(self.dp_hyper.base_mean, var.sqrt(), -0.5)?;
            self.dp.means[l] = sample_truncated_normal(&spec, &mut self.rng);
            self.dp.vars[l] = var;
        }
        for l in 0..c.saturating_sub(1) {
            self.dp.sticks[l] = crate::dist::sample_beta(1.0, self.dp_hyper.precision, &mut self.rng)?;
        }
        self.dp.sticks[c - 1] = 1.0;
        self.dp.weights = crate::exposure::steps::stick_weights(&self.dp.sticks);

        for i in 0..self.design.num_cells() {
            let cluster = sample_categorical(&self.dp.weights, &mut self.rng)?;
            self.dp.assignment[i] = cluster;
            let spec = TruncatedNormalSpec::new(
                self.dp.means[cluster],
                self.dp.vars[cluster].sqrt(),
                -0.5,
            )?;
            // Rejection keeps the forward draw inside the sampler's capped
            // support; the cap is chosen so this almost never loops.
            let (n, n_star) = loop {
                let draw = sample_truncated_normal(&spec, &mut self.rng);
                let n = nearest_count(draw);
                if n <= self.cap {
                    break (n, draw);
                }
            };
            self.exposure.counts[i] = n;
            self.exposure.latent[i] = n_star;
        }

        let sd_beta = self.collision_hyper.beta_prior_scale.sqrt();
        for b in &mut self.regression.beta {
            *b = sd_beta * self.rng.standard_normal();
        }
        let sd_month = self.collision_hyper.month_prior_scale.sqrt();
        for t0 in 0..self.design.months {
            self.regression.q[t0] = crate::dist::sample_beta(
                self.collision_hyper.q_prior_a,
                self.collision_hyper.q_prior_b,
                &mut self.rng,
            )?
            .clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            self.regression.alpha0[t0] = sd_month * self.rng.standard_normal();
            for g in &mut self.regression.gamma[t0] {
                *g = sd_month * self.rng.standard_normal();
            }
        }
        for s in 0..self.design.segments {
            for t0 in 0..self.design.months {
                let cell = self.design.cell_index(s, t0);
                self.regression.indicators[cell] =
                    u8::from(self.rng.bernoulli(self.regression.q[t0]));
            }
        }
        self.regression.omega.fill(0.0);
        Ok(())
    }

    /// Redraw the observed counts from the binomial likelihood under the
    /// current latent state, then refresh the augmentation pseudo-response.
    pub fn regenerate_data(&mut self) -> Result<()> {
        compute_psi_grid(self.design, &self.regression, &mut self.psi);
        for i in 0..self.counts.len() {
            let p = collision_prob(self.psi[i]);
            let n = self.exposure.counts[i];
            let mut k = 0u32;
            for _ in 0..n {
                k += u32::from(self.rng.bernoulli(p));
            }
            self.counts[i] = k;
        }
        refresh_kappa(&self.counts, &self.exposure.counts, &mut self.kappa);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::simulate::{simulate_dataset, CovariateDist, SimulationSpec};
    use crate::data::DataSchema;

    fn small_design() -> DesignMatrices {
        let schema = DataSchema::new(
            vec!["a".into(), "b".into()],
            vec!["r".into()],
            4,
        )
        .unwrap();
        let spec = SimulationSpec {
            schema,
            segments: 30,
            x_dists: vec![
                CovariateDist::Normal { mean: 0.0, sd: 1.0 },
                CovariateDist::Bernoulli { p: 0.4 },
            ],
            y_dists: vec![CovariateDist::Normal { mean: 0.0, sd: 1.0 }],
            beta: vec![0.3, -0.4],
            alpha0: vec![-0.2; 4],
            gamma: vec![vec![0.1]; 4],
            q: vec![0.5; 4],
            cluster_weights: vec![0.8, 0.2],
            cluster_means: vec![-0.3, 2.0],
            cluster_sds: vec![0.2, 1.0],
        };
        let mut rng = RandomStream::new(404, 0);
        let (ds, _) = simulate_dataset(&spec, &mut rng).unwrap();
        DesignMatrices::from_dataset(&ds, false)
    }

    #[test]
    fn sweeps_preserve_state_legality() {
        let design = small_design();
        let mut sampler = ChainSampler::init(
            &design,
            DpHyper::default(),
            CollisionHyper::default(),
            50,
            RandomStream::new(11, 0),
        )
        .unwrap();
        sampler.check_legal().unwrap();
        for _ in 0..40 {
            sampler.sweep().unwrap();
            sampler.check_legal().unwrap();
        }
        assert!(sampler.acceptance_rate() > 0.0);
    }

    #[test]
    fn chains_are_reproducible() {
        let design = small_design();
        let run = |stream: u64| {
            let mut sampler = ChainSampler::init(
                &design,
                DpHyper::default(),
                CollisionHyper::default(),
                50,
                RandomStream::new(99, stream),
            )
            .unwrap();
            for _ in 0..25 {
                sampler.sweep().unwrap();
            }
            (
                sampler.regression.beta.clone(),
                sampler.exposure.counts.clone(),
                sampler.dp.weights.clone(),
            )
        };
        let a = run(0);
        let b = run(0);
        assert_eq!(a, b);
        let c = run(1);
        assert_ne!(a, c);
    }

    #[test]
    fn snapshot_restore_resumes_identically() {
        let design = small_design();
        let mut full = ChainSampler::init(
            &design,
            DpHyper::default(),
            CollisionHyper::default(),
            50,
            RandomStream::new(7, 3),
        )
        .unwrap();
        for _ in 0..10 {
            full.sweep().unwrap();
        }
        let snap = full.snapshot();
        let json = serde_json::to_string(&snap).unwrap();
        for _ in 0..10 {
            full.sweep().unwrap();
        }

        let decoded: SamplerSnapshot = serde_json::from_str(&json).unwrap();
        let mut resumed = ChainSampler::restore(
            &design,
            DpHyper::default(),
            CollisionHyper::default(),
            50,
            decoded,
        );
        for _ in 0..10 {
            resumed.sweep().unwrap();
        }
        assert_eq!(full.regression, resumed.regression);
        assert_eq!(full.exposure, resumed.exposure);
        assert_eq!(full.dp, resumed.dp);
        assert_eq!(full.sweep_index, resumed.sweep_index);
    }

    #[test]
    fn prior_draw_and_regeneration_stay_legal() {
        let design = small_design();
        let mut sampler = ChainSampler::init(
            &design,
            DpHyper::default(),
            CollisionHyper::default(),
            50,
            RandomStream::new(13, 0),
        )
        .unwrap();
        for _ in 0..20 {
            sampler.prior_draw().unwrap();
            sampler.regenerate_data().unwrap();
            // Regenerated data satisfies k <= n by construction.
            for (k, n) in sampler.counts.iter().zip(&sampler.exposure.counts) {
                assert!(k <= n);
            }
            sampler.sweep().unwrap();
            sampler.check_legal().unwrap();
        }
    }
}

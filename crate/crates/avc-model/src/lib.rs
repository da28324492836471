//! Bayesian hierarchical binomial model for sparse collision-count panels
//! with unknown exposure.
//!
//! Observed monthly collision counts on road segments are modeled as
//! binomial outcomes of a latent number of animal crossings, with a
//! Dirichlet-process mixture over the latent crossing counts and a logistic
//! collision probability driven by segment design factors, month effects,
//! and time-varying covariates. Estimation is a blocked Gibbs sampler with
//! Polya-Gamma augmentation; the crate also ships a synthetic-data
//! generator, convergence diagnostics, posterior analytics, hotspot
//! ranking, and counterfactual scenario evaluation.

pub mod collision;
pub mod data;
pub mod design;
pub mod dist;
pub mod engine;
pub mod error;
pub mod exposure;
pub mod stream;

pub use error::{Error, Result};
pub use stream::{RandomStream, StreamState};

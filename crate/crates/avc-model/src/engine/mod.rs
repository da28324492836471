//! Gibbs engine: sweep orchestration, multi-chain runs, draw persistence,
//! checkpointing, convergence diagnostics, and the sampler-correctness
//! harness.

pub mod config;
pub mod diagnostics;
pub mod draws;
pub mod geweke;
pub mod runner;
pub mod sampler;

pub use config::RunConfig;
pub use diagnostics::{effective_sample_size, gelman_rubin, DiagnosticsReport};
pub use draws::{parameter_names, CellDraw, CellTable, ChainDraws, DrawStore};
pub use geweke::{joint_distribution_test, GewekeConfig, GewekeReport};
pub use runner::{fit, fit_to_dir, fit_with_options, FitOutput, FitReport, RunMeta};
pub use sampler::{ChainSampler, FaultInjection};

//! Multi-chain orchestration: runs chains in parallel (each owns its
//! stream keyed by chain id, so scheduling cannot affect the draws), keeps
//! post-burn-in thinned draws, and persists checkpoints for exact resume.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::design::{DesignMatrices, Standardization};
use crate::engine::config::RunConfig;
use crate::engine::draws::{parameter_names, CellDraw, CellTable, ChainDraws, DrawStore};
use crate::engine::sampler::{ChainSampler, SamplerSnapshot};
use crate::error::{Error, Result};
use crate::stream::RandomStream;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Run metadata written next to the draw files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub config: RunConfig,
    pub x_names: Vec<String>,
    pub y_names: Vec<String>,
    pub months: u32,
    pub segments: usize,
    pub standardization: Option<Standardization>,
    pub acceptance_rate: f64,
    pub per_chain_acceptance: Vec<f64>,
    pub completed: bool,
}

impl RunMeta {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// In-memory result of a fit.
#[derive(Debug, Clone)]
pub struct FitOutput {
    pub draws: DrawStore,
    pub cells: Option<CellTable>,
    pub acceptance_rate: f64,
    pub per_chain_acceptance: Vec<f64>,
    pub completed: bool,
    pub standardization: Option<Standardization>,
}

/// Versioned snapshot of one chain: sampler state plus the draws kept so
/// far, sufficient to continue as if never interrupted.
#[derive(Debug, Serialize, Deserialize)]
struct ChainCheckpoint {
    version: u32,
    fingerprint: String,
    chain: usize,
    kept: usize,
    snapshot: SamplerSnapshot,
    draws: ChainDraws,
    cells: Vec<CellDraw>,
}

fn fingerprint(config: &RunConfig, design: &DesignMatrices) -> String {
    // Interruption knobs are excluded: a resumed run may change them.
    let mut cfg = config.clone();
    cfg.stop_after = None;
    cfg.checkpoint_interval = 0;
    format!(
        "{}|s={},t={},kx={},ky={},maxk={}",
        serde_json::to_string(&cfg).expect("config serializes"),
        design.segments,
        design.months,
        design.x_dim,
        design.y_dim,
        design.max_count
    )
}

fn checkpoint_path(dir: &Path, chain: usize) -> PathBuf {
    dir.join(format!("checkpoint.chain{chain}.json"))
}

struct ChainOutput {
    draws: ChainDraws,
    cells: Vec<CellDraw>,
    accepted: u64,
    proposed: u64,
    completed: bool,
}

fn record_draw(
    sampler: &mut ChainSampler<'_>,
    chain: usize,
    iteration: u64,
    draws: &mut ChainDraws,
    cells: &mut Vec<CellDraw>,
    record_cells: bool,
) {
    let design = sampler.design();
    let probs = sampler.probability_grid();
    let months = design.months;

    let mut values =
        Vec::with_capacity(design.x_dim + months * (2 + design.y_dim) + months + 2);
    values.extend_from_slice(&sampler.regression.beta);
    values.extend_from_slice(&sampler.regression.alpha0);
    for t0 in 0..months {
        values.extend_from_slice(&sampler.regression.gamma[t0]);
    }
    values.extend_from_slice(&sampler.regression.q);
    for t0 in 0..months {
        let mut total = 0.0;
        for s in 0..design.segments {
            let cell = design.cell_index(s, t0);
            total += f64::from(sampler.exposure.counts[cell]) * probs[cell];
        }
        values.push(total);
    }
    values.push(sampler.exposure.counts.iter().filter(|&&n| n > 0).count() as f64);
    values.push(
        sampler
            .regression
            .indicators
            .iter()
            .filter(|&&i| i == 1)
            .count() as f64,
    );
    draws.push(iteration, values);

    if record_cells {
        for (cell, (&n, &p)) in sampler
            .exposure
            .counts
            .iter()
            .zip(&probs)
            .enumerate()
        {
            cells.push(CellDraw {
                chain: chain as u32,
                iteration,
                cell: cell as u32,
                n,
                p,
            });
        }
    }
}

fn run_chain(
    design: &DesignMatrices,
    config: &RunConfig,
    chain: usize,
    checkpoint_dir: Option<&Path>,
    resume: bool,
) -> Result<ChainOutput> {
    let cap = config.effective_cap(design.max_count);
    let print = fingerprint(config, design);
    let ckpt_file = checkpoint_dir.map(|d| checkpoint_path(d, chain));

    let mut draws = ChainDraws::new(chain);
    let mut cells: Vec<CellDraw> = Vec::new();
    let mut kept = 0usize;

    let mut sampler = match (&ckpt_file, resume) {
        (Some(path), true) if path.exists() => {
            let file = std::fs::File::open(path)?;
            let ckpt: ChainCheckpoint =
                serde_json::from_reader(std::io::BufReader::new(file))?;
            if ckpt.version != CHECKPOINT_VERSION {
                return Err(Error::Checkpoint(format!(
                    "checkpoint {} has version {}, expected {CHECKPOINT_VERSION}",
                    path.display(),
                    ckpt.version
                )));
            }
            if ckpt.fingerprint != print {
                return Err(Error::Checkpoint(format!(
                    "checkpoint {} was written under a different configuration or dataset",
                    path.display()
                )));
            }
            if ckpt.chain != chain {
                return Err(Error::Checkpoint("checkpoint chain id mismatch".into()));
            }
            draws = ckpt.draws;
            cells = ckpt.cells;
            kept = ckpt.kept;
            ChainSampler::restore(design, config.dp, config.collision, cap, ckpt.snapshot)
        }
        _ => ChainSampler::init(
            design,
            config.dp,
            config.collision,
            cap,
            RandomStream::new(config.seed, chain as u64),
        )?,
    };

    let mut completed = true;
    while sampler.sweep_index < config.iterations {
        if let Some(halt) = config.stop_after {
            if sampler.sweep_index >= halt {
                completed = false;
                break;
            }
        }
        sampler.sweep_with(crate::engine::sampler::FaultInjection::None)?;
        let s = sampler.sweep_index;
        if s > config.burn_in && (s - config.burn_in - 1) % config.thin == 0 {
            let record_cells = config.store_cell_draws && kept % config.cell_thin == 0;
            record_draw(
                &mut sampler,
                chain,
                s as u64,
                &mut draws,
                &mut cells,
                record_cells,
            );
            kept += 1;
        }
        if config.checkpoint_interval > 0 && s % config.checkpoint_interval == 0 {
            if let Some(path) = &ckpt_file {
                write_checkpoint(path, &print, chain, kept, &sampler, &draws, &cells)?;
            }
        }
    }
    // A halted run leaves a checkpoint at the halt point so resume can
    // continue exactly.
    if !completed {
        if let Some(path) = &ckpt_file {
            write_checkpoint(path, &print, chain, kept, &sampler, &draws, &cells)?;
        }
    }

    let (accepted, proposed) = sampler.accept_counts();
    Ok(ChainOutput {
        draws,
        cells,
        accepted,
        proposed,
        completed,
    })
}

fn write_checkpoint(
    path: &Path,
    fingerprint: &str,
    chain: usize,
    kept: usize,
    sampler: &ChainSampler<'_>,
    draws: &ChainDraws,
    cells: &[CellDraw],
) -> Result<()> {
    let ckpt = ChainCheckpoint {
        version: CHECKPOINT_VERSION,
        fingerprint: fingerprint.to_string(),
        chain,
        kept,
        snapshot: sampler.snapshot(),
        draws: draws.clone(),
        cells: cells.to_vec(),
    };
    let tmp = path.with_extension("json.tmp");
    {
        let file = std::fs::File::create(&tmp)?;
        serde_json::to_writer(std::io::BufWriter::new(file), &ckpt)?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Run all chains over a validated dataset. With `checkpoint_dir` set and
/// `resume` true, chains continue from their checkpoint files.
pub fn fit_with_options(
    dataset: &Dataset,
    config: &RunConfig,
    checkpoint_dir: Option<&Path>,
    resume: bool,
) -> Result<FitOutput> {
    config.validate()?;
    dataset.validate()?;
    let design = DesignMatrices::from_dataset(dataset, config.standardize);

    let mut results: Vec<Option<Result<ChainOutput>>> =
        (0..config.chains).map(|_| None).collect();
    std::thread::scope(|scope| {
        let design = &design;
        let mut handles = Vec::new();
        for (chain, slot) in results.iter_mut().enumerate() {
            handles.push(scope.spawn(move || {
                *slot = Some(run_chain(design, config, chain, checkpoint_dir, resume));
            }));
        }
        for handle in handles {
            handle.join().expect("chain thread panicked");
        }
    });

    let params = parameter_names(&dataset.schema);
    let mut store = DrawStore::new(params);
    let mut cells = CellTable::new(
        dataset.segments.iter().map(|s| s.id.clone()).collect(),
        dataset.months(),
    );
    let mut accepted = 0u64;
    let mut proposed = 0u64;
    let mut per_chain = Vec::with_capacity(config.chains);
    let mut completed = true;
    for slot in results {
        let out = slot.expect("every chain ran")?;
        per_chain.push(if out.proposed == 0 {
            f64::NAN
        } else {
            out.accepted as f64 / out.proposed as f64
        });
        accepted += out.accepted;
        proposed += out.proposed;
        completed &= out.completed;
        store.chains.push(out.draws);
        cells.rows.extend(out.cells);
    }
    store.validate()?;

    Ok(FitOutput {
        draws: store,
        cells: if config.store_cell_draws {
            Some(cells)
        } else {
            None
        },
        acceptance_rate: if proposed == 0 {
            f64::NAN
        } else {
            accepted as f64 / proposed as f64
        },
        per_chain_acceptance: per_chain,
        completed,
        standardization: design.standardization.clone(),
    })
}

/// In-memory fit with no checkpoint files.
pub fn fit(dataset: &Dataset, config: &RunConfig) -> Result<FitOutput> {
    fit_with_options(dataset, config, None, false)
}

/// Paths produced by [`fit_to_dir`].
#[derive(Debug, Clone)]
pub struct FitReport {
    pub draws_path: PathBuf,
    pub cells_path: Option<PathBuf>,
    pub meta_path: PathBuf,
    pub acceptance_rate: f64,
    pub average_r_hat: Option<f64>,
    pub completed: bool,
}

/// Fit and persist draws, per-cell samples, and run metadata under
/// `out_dir`. Checkpoints (if enabled) live in the same directory.
pub fn fit_to_dir(
    dataset: &Dataset,
    config: &RunConfig,
    out_dir: &Path,
    resume: bool,
) -> Result<FitReport> {
    std::fs::create_dir_all(out_dir)?;
    let ckpt_dir = (config.checkpoint_interval > 0 || config.stop_after.is_some())
        .then_some(out_dir);
    let output = fit_with_options(dataset, config, ckpt_dir, resume)?;

    let draws_path = out_dir.join("draws.csv");
    output.draws.write_csv(&draws_path)?;
    let cells_path = match &output.cells {
        Some(cells) => {
            let path = out_dir.join("cells.csv");
            cells.write_csv(&path)?;
            Some(path)
        }
        None => None,
    };
    let meta = RunMeta {
        config: config.clone(),
        x_names: dataset.schema.x_names.clone(),
        y_names: dataset.schema.y_names.clone(),
        months: dataset.months(),
        segments: dataset.num_segments(),
        standardization: output.standardization.clone(),
        acceptance_rate: output.acceptance_rate,
        per_chain_acceptance: output.per_chain_acceptance.clone(),
        completed: output.completed,
    };
    let meta_path = out_dir.join("meta.json");
    meta.write_json(&meta_path)?;

    let average_r_hat = if output.completed && output.draws.chains.len() >= 2 {
        crate::engine::diagnostics::DiagnosticsReport::from_store(
            &output.draws,
            Some(output.acceptance_rate),
        )
        .ok()
        .and_then(|r| r.average_r_hat)
    } else {
        None
    };

    Ok(FitReport {
        draws_path,
        cells_path,
        meta_path,
        acceptance_rate: output.acceptance_rate,
        average_r_hat,
        completed: output.completed,
    })
}

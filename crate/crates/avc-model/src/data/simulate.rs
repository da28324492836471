//! Forward simulation of the full generative hierarchy.
//!
//! The generator draws every latent quantity the sampler later infers and
//! records them as [`GroundTruth`], which is what parameter-recovery tests
//! score against.

use serde::{Deserialize, Serialize};

use crate::collision::collision_prob;
use crate::data::{DataSchema, Dataset, PanelCell, SegmentCovariates};
use crate::dist::{sample_categorical, sample_truncated_normal, TruncatedNormalSpec};
use crate::error::{Error, Result};
use crate::exposure::nearest_count;
use crate::stream::RandomStream;

/// Marginal distribution used to generate one synthetic covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CovariateDist {
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    Bernoulli { p: f64 },
    Gamma { shape: f64, rate: f64 },
    Constant { value: f64 },
}

impl CovariateDist {
    /// Parse forms like `normal(0,1)`, `uniform(5,85)`, `bernoulli(0.3)`,
    /// `gamma(2,0.5)`, `constant(1)`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let open = text
            .find('(')
            .ok_or_else(|| Error::config(format!("malformed distribution `{text}`")))?;
        if !text.ends_with(')') {
            return Err(Error::config(format!("malformed distribution `{text}`")));
        }
        let name = &text[..open];
        let args: Vec<f64> = text[open + 1..text.len() - 1]
            .split(',')
            .filter(|a| !a.trim().is_empty())
            .map(|a| {
                a.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::config(format!("bad argument `{a}` in `{text}`")))
            })
            .collect::<Result<_>>()?;
        let need = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(Error::config(format!(
                    "`{name}` takes {n} arguments, got {} in `{text}`",
                    args.len()
                )))
            }
        };
        match name {
            "normal" => {
                need(2)?;
                if args[1] <= 0.0 {
                    return Err(Error::config(format!("normal sd must be positive: `{text}`")));
                }
                Ok(CovariateDist::Normal {
                    mean: args[0],
                    sd: args[1],
                })
            }
            "uniform" => {
                need(2)?;
                if args[1] <= args[0] {
                    return Err(Error::config(format!("uniform needs lo < hi: `{text}`")));
                }
                Ok(CovariateDist::Uniform {
                    lo: args[0],
                    hi: args[1],
                })
            }
            "bernoulli" => {
                need(1)?;
                if !(0.0..=1.0).contains(&args[0]) {
                    return Err(Error::config(format!("bernoulli p must be in [0,1]: `{text}`")));
                }
                Ok(CovariateDist::Bernoulli { p: args[0] })
            }
            "gamma" => {
                need(2)?;
                if args[0] <= 0.0 || args[1] <= 0.0 {
                    return Err(Error::config(format!(
                        "gamma parameters must be positive: `{text}`"
                    )));
                }
                Ok(CovariateDist::Gamma {
                    shape: args[0],
                    rate: args[1],
                })
            }
            "constant" => {
                need(1)?;
                Ok(CovariateDist::Constant { value: args[0] })
            }
            other => Err(Error::config(format!("unknown distribution `{other}`"))),
        }
    }

    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        match *self {
            CovariateDist::Normal { mean, sd } => mean + sd * rng.standard_normal(),
            CovariateDist::Uniform { lo, hi } => rng.uniform_range(lo, hi),
            CovariateDist::Bernoulli { p } => f64::from(rng.bernoulli(p)),
            CovariateDist::Gamma { shape, rate } => {
                crate::dist::sample_gamma(shape, rate, rng).expect("validated parameters")
            }
            CovariateDist::Constant { value } => value,
        }
    }
}

/// Everything the generator needs: panel dimensions, covariate
/// distributions, and the true parameter values of the hierarchy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub schema: DataSchema,
    pub segments: usize,
    pub x_dists: Vec<CovariateDist>,
    pub y_dists: Vec<CovariateDist>,
    pub beta: Vec<f64>,
    /// Month-specific constant effect, length T.
    pub alpha0: Vec<f64>,
    /// Month-specific time-varying coefficients, T rows of length J.
    pub gamma: Vec<Vec<f64>>,
    /// Indicator probability per month, length T.
    pub q: Vec<f64>,
    pub cluster_weights: Vec<f64>,
    pub cluster_means: Vec<f64>,
    pub cluster_sds: Vec<f64>,
}

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        let t = self.schema.months as usize;
        if self.segments == 0 {
            return Err(Error::config("generation spec needs at least one segment"));
        }
        if self.x_dists.len() != self.schema.x_dim() {
            return Err(Error::config(format!(
                "{} segment covariates declared but {} distributions given",
                self.schema.x_dim(),
                self.x_dists.len()
            )));
        }
        if self.y_dists.len() != self.schema.y_dim() {
            return Err(Error::config(format!(
                "{} time-varying covariates declared but {} distributions given",
                self.schema.y_dim(),
                self.y_dists.len()
            )));
        }
        if self.beta.len() != self.schema.x_dim() {
            return Err(Error::config("true_beta length must match segment covariates"));
        }
        if self.alpha0.len() != t || self.q.len() != t || self.gamma.len() != t {
            return Err(Error::config(
                "true_alpha0, true_q, true_gamma must each cover every month",
            ));
        }
        if self.gamma.iter().any(|g| g.len() != self.schema.y_dim()) {
            return Err(Error::config(
                "each month of true_gamma must match the time-varying covariate count",
            ));
        }
        if self.q.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
            return Err(Error::config("true_q entries must lie in [0,1]"));
        }
        let c = self.cluster_weights.len();
        if c == 0 || self.cluster_means.len() != c || self.cluster_sds.len() != c {
            return Err(Error::config(
                "cluster weights, means and sds must be nonempty and equal-length",
            ));
        }
        let wsum: f64 = self.cluster_weights.iter().sum();
        if self.cluster_weights.iter().any(|&w| w < 0.0) || wsum <= 0.0 {
            return Err(Error::config("cluster weights must be nonnegative with positive sum"));
        }
        if self.cluster_sds.iter().any(|&s| s <= 0.0) {
            return Err(Error::config("cluster sds must be positive"));
        }
        if self.cluster_means.iter().any(|&m| m < -0.5) {
            return Err(Error::config("cluster means must be at least -0.5"));
        }
        Ok(())
    }
}

/// The latent state behind a simulated dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub beta: Vec<f64>,
    pub alpha0: Vec<f64>,
    pub gamma: Vec<Vec<f64>>,
    pub q: Vec<f64>,
    /// Latent crossing count per cell, segment-major.
    pub crossings: Vec<u32>,
    /// Indicator per cell, segment-major.
    pub indicators: Vec<u8>,
    /// Cluster id per cell, segment-major.
    pub cluster_of_cell: Vec<usize>,
    pub cluster_weights: Vec<f64>,
    pub cluster_means: Vec<f64>,
    pub cluster_sds: Vec<f64>,
}

impl GroundTruth {
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// Draw a complete dataset from the hierarchy described by `spec`.
pub fn simulate_dataset(
    spec: &SimulationSpec,
    rng: &mut RandomStream,
) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let s_count = spec.segments;
    let t_count = spec.schema.months as usize;
    let width = s_count.to_string().len().max(3);

    let mut segments = Vec::with_capacity(s_count);
    for s in 0..s_count {
        let x: Vec<f64> = spec.x_dists.iter().map(|d| d.sample(rng)).collect();
        segments.push(SegmentCovariates {
            id: format!("s{s:0width$}"),
            x,
        });
    }

    let mut cells = Vec::with_capacity(s_count * t_count);
    let mut crossings = Vec::with_capacity(s_count * t_count);
    let mut indicators = Vec::with_capacity(s_count * t_count);
    let mut cluster_of_cell = Vec::with_capacity(s_count * t_count);

    for s in 0..s_count {
        for t in 1..=t_count {
            let ti = t - 1;
            let cluster = sample_categorical(&spec.cluster_weights, rng)?;
            let tn = TruncatedNormalSpec::new(
                spec.cluster_means[cluster],
                spec.cluster_sds[cluster],
                -0.5,
            )?;
            let n_star = sample_truncated_normal(&tn, rng);
            let n = nearest_count(n_star);

            let indicator = rng.bernoulli(spec.q[ti]);
            let y: Vec<f64> = spec.y_dists.iter().map(|d| d.sample(rng)).collect();

            let mut psi = if indicator { spec.alpha0[ti] } else { 0.0 };
            for (b, xv) in spec.beta.iter().zip(&segments[s].x) {
                psi += b * xv;
            }
            for (g, yv) in spec.gamma[ti].iter().zip(&y) {
                psi += g * yv;
            }
            let p = collision_prob(psi);
            let mut count = 0u32;
            for _ in 0..n {
                if rng.bernoulli(p) {
                    count += 1;
                }
            }

            cells.push(PanelCell {
                segment: s,
                month: t as u32,
                count,
                y,
            });
            crossings.push(n);
            indicators.push(u8::from(indicator));
            cluster_of_cell.push(cluster);
        }
    }

    let dataset = Dataset::new(spec.schema.clone(), segments, cells)?;
    let truth = GroundTruth {
        beta: spec.beta.clone(),
        alpha0: spec.alpha0.clone(),
        gamma: spec.gamma.clone(),
        q: spec.q.clone(),
        crossings,
        indicators,
        cluster_of_cell,
        cluster_weights: spec.cluster_weights.clone(),
        cluster_means: spec.cluster_means.clone(),
        cluster_sds: spec.cluster_sds.clone(),
    };
    Ok((dataset, truth))
}

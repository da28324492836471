//! Convergence diagnostics: Gelman-Rubin scale reduction and effective
//! sample size.

use serde::{Deserialize, Serialize};

use crate::engine::draws::{monitored_parameters, DrawStore};
use crate::error::{Error, Result};

/// Gelman-Rubin potential scale reduction for one scalar parameter across
/// chains (between/within variance ratio on the full chains). Returns
/// `None` when the within-chain variance is zero, which is reported as
/// not-computable rather than infinity.
pub fn gelman_rubin(chains: &[&[f64]]) -> Result<Option<f64>> {
    if chains.len() < 2 {
        return Err(Error::invalid("Gelman-Rubin needs at least 2 chains"));
    }
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if n < 10 {
        return Err(Error::invalid(
            "Gelman-Rubin needs at least 10 draws per chain",
        ));
    }
    let m = chains.len() as f64;
    let nf = n as f64;

    let means: Vec<f64> = chains
        .iter()
        .map(|c| c[..n].iter().sum::<f64>() / nf)
        .collect();
    let vars: Vec<f64> = chains
        .iter()
        .zip(&means)
        .map(|(c, &mu)| c[..n].iter().map(|&x| (x - mu) * (x - mu)).sum::<f64>() / (nf - 1.0))
        .collect();

    let grand = means.iter().sum::<f64>() / m;
    let between = nf / (m - 1.0) * means.iter().map(|&x| (x - grand) * (x - grand)).sum::<f64>();
    let within = vars.iter().sum::<f64>() / m;
    if within <= 0.0 {
        return Ok(None);
    }
    let pooled = (nf - 1.0) / nf * within + between / nf;
    Ok(Some((pooled / within).sqrt()))
}

/// Effective sample size of a single scalar sequence by Geyer's
/// initial-positive-sequence estimator. Constant sequences are
/// not-computable (`None`); the estimate is capped at the sequence length.
pub fn effective_sample_size(draws: &[f64]) -> Result<Option<f64>> {
    let n = draws.len();
    if n < 50 {
        return Err(Error::invalid(
            "effective sample size needs at least 50 draws",
        ));
    }
    let nf = n as f64;
    let mean = draws.iter().sum::<f64>() / nf;
    let var0 = draws.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / nf;
    if var0 <= 0.0 {
        return Ok(None);
    }
    let autocov = |lag: usize| -> f64 {
        draws[..n - lag]
            .iter()
            .zip(&draws[lag..])
            .map(|(&a, &b)| (a - mean) * (b - mean))
            .sum::<f64>()
            / nf
    };
    // Sum paired autocorrelations while the pairs stay positive.
    let mut tau = 1.0;
    let mut lag = 1;
    while lag + 1 < n {
        let pair = (autocov(lag) + autocov(lag + 1)) / var0;
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    Ok(Some((nf / tau).min(nf)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParameterDiagnostics {
    pub name: String,
    pub r_hat: Option<f64>,
    /// Summed across chains.
    pub ess: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub parameters: Vec<ParameterDiagnostics>,
    /// Mean of the computable per-parameter values.
    pub average_r_hat: Option<f64>,
    /// Count-update acceptance rate, when the draws came with run metadata.
    pub mh_acceptance_rate: Option<f64>,
}

impl DiagnosticsReport {
    /// Diagnostics over every monitored parameter of a draw store.
    pub fn from_store(store: &DrawStore, mh_acceptance_rate: Option<f64>) -> Result<Self> {
        store.validate()?;
        let monitored = monitored_parameters(&store.params);
        let mut parameters = Vec::with_capacity(monitored.len());
        for idx in monitored {
            let series: Vec<Vec<f64>> = store.chains.iter().map(|c| c.series(idx)).collect();
            let refs: Vec<&[f64]> = series.iter().map(Vec::as_slice).collect();
            let r_hat = if refs.len() >= 2 {
                gelman_rubin(&refs)?
            } else {
                None
            };
            let mut ess_total = 0.0;
            let mut ess_any = false;
            for chain in &series {
                if chain.len() >= 50 {
                    if let Some(e) = effective_sample_size(chain)? {
                        ess_total += e;
                        ess_any = true;
                    }
                }
            }
            parameters.push(ParameterDiagnostics {
                name: store.params[idx].clone(),
                r_hat,
                ess: if ess_any { Some(ess_total) } else { None },
            });
        }
        let computable: Vec<f64> = parameters.iter().filter_map(|p| p.r_hat).collect();
        let average_r_hat = if computable.is_empty() {
            None
        } else {
            Some(computable.iter().sum::<f64>() / computable.len() as f64)
        };
        Ok(DiagnosticsReport {
            parameters,
            average_r_hat,
            mh_acceptance_rate,
        })
    }

    pub fn write_json(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }
}

impl std::fmt::Display for DiagnosticsReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:<28} {:>10} {:>12}", "parameter", "r_hat", "ess")?;
        for p in &self.parameters {
            let r = p
                .r_hat
                .map_or("n/a".to_string(), |v| format!("{v:.4}"));
            let e = p.ess.map_or("n/a".to_string(), |v| format!("{v:.1}"));
            writeln!(f, "{:<28} {:>10} {:>12}", p.name, r, e)?;
        }
        match self.average_r_hat {
            Some(v) => writeln!(f, "average r_hat: {v:.4}")?,
            None => writeln!(f, "average r_hat: n/a")?,
        }
        if let Some(a) = self.mh_acceptance_rate {
            writeln!(f, "count-update acceptance rate: {a:.4}")?;
        }
        Ok(())
    }
}

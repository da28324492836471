//! Posterior draw storage and the on-disk CSV formats.
//!
//! Global parameters go to a long-format CSV with columns
//! `chain, iteration, parameter, value`; thinned per-cell samples go to a
//! separate CSV with columns `chain, iteration, segment_id, month, n, p`.
//! Floats are written in shortest round-trip form, so files reload
//! bit-exactly.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::DataSchema;
use crate::error::{Error, Result};

/// Parameter names recorded per draw, in file order.
pub fn parameter_names(schema: &DataSchema) -> Vec<String> {
    let mut names = Vec::new();
    for x in &schema.x_names {
        names.push(format!("beta[{x}]"));
    }
    for t in 1..=schema.months {
        names.push(format!("alpha0[{t}]"));
    }
    for t in 1..=schema.months {
        for y in &schema.y_names {
            names.push(format!("gamma[{t}][{y}]"));
        }
    }
    for t in 1..=schema.months {
        names.push(format!("q[{t}]"));
    }
    for t in 1..=schema.months {
        names.push(format!("monthly_total[{t}]"));
    }
    names.push("nonzero_n".to_string());
    names.push("nonzero_i".to_string());
    names
}

/// Names monitored by the convergence diagnostics: the regression
/// parameters, indicator probabilities, and monthly expected totals.
/// Per-cell latents are excluded.
pub fn monitored_parameters(names: &[String]) -> Vec<usize> {
    names
        .iter()
        .enumerate()
        .filter(|(_, n)| !n.starts_with("nonzero_"))
        .map(|(i, _)| i)
        .collect()
}

/// Kept draws of one chain, one row of values per kept iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDraws {
    pub chain: usize,
    pub iterations: Vec<u64>,
    pub values: Vec<Vec<f64>>,
}

impl ChainDraws {
    pub fn new(chain: usize) -> Self {
        ChainDraws {
            chain,
            iterations: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, iteration: u64, values: Vec<f64>) {
        self.iterations.push(iteration);
        self.values.push(values);
    }

    pub fn series(&self, param: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[param]).collect()
    }
}

/// Thinned posterior draws across chains, with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawStore {
    pub params: Vec<String>,
    pub chains: Vec<ChainDraws>,
}

impl DrawStore {
    pub fn new(params: Vec<String>) -> Self {
        DrawStore {
            params,
            chains: Vec::new(),
        }
    }

    pub fn param_index(&self, name: &str) -> Result<usize> {
        self.params
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| Error::validation(format!("unknown parameter `{name}`")))
    }

    /// All kept draws of one parameter, pooled across chains.
    pub fn pooled(&self, param: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for chain in &self.chains {
            out.extend(chain.series(param));
        }
        out
    }

    pub fn num_draws(&self) -> usize {
        self.chains.iter().map(|c| c.values.len()).sum()
    }

    /// Iteration indices must be strictly increasing within each chain.
    pub fn validate(&self) -> Result<()> {
        for chain in &self.chains {
            if chain.values.len() != chain.iterations.len() {
                return Err(Error::validation("draw rows and iteration indices disagree"));
            }
            if chain.values.iter().any(|row| row.len() != self.params.len()) {
                return Err(Error::validation("draw row width disagrees with parameter list"));
            }
            if chain.iterations.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::validation(format!(
                    "iteration indices not strictly increasing in chain {}",
                    chain.chain
                )));
            }
        }
        Ok(())
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "chain,iteration,parameter,value")?;
        for chain in &self.chains {
            for (iter, row) in chain.iterations.iter().zip(&chain.values) {
                for (name, value) in self.params.iter().zip(row) {
                    writeln!(out, "{},{},{},{}", chain.chain, iter, name, value)?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let headers = reader.headers()?.clone();
        let want = ["chain", "iteration", "parameter", "value"];
        if headers.iter().take(4).ne(want) {
            return Err(Error::validation(format!(
                "draw file {} must have header chain,iteration,parameter,value",
                path.display()
            )));
        }
        let mut params: Vec<String> = Vec::new();
        let mut chains: Vec<ChainDraws> = Vec::new();
        let mut current: Option<(usize, u64, Vec<f64>)> = None;

        let mut flush =
            |chains: &mut Vec<ChainDraws>, row: Option<(usize, u64, Vec<f64>)>| {
                if let Some((chain_id, iter, values)) = row {
                    if chains.last().map(|c| c.chain) != Some(chain_id) {
                        chains.push(ChainDraws::new(chain_id));
                    }
                    chains.last_mut().expect("pushed above").push(iter, values);
                }
            };

        for record in reader.records() {
            let record = record?;
            let row = record.position().map_or(0, |p| p.line());
            let bad = |what: &str| Error::Ingestion {
                file: path.display().to_string(),
                row,
                message: what.to_string(),
            };
            let chain_id: usize = record
                .get(0)
                .unwrap_or_default()
                .parse()
                .map_err(|_| bad("bad chain id"))?;
            let iter: u64 = record
                .get(1)
                .unwrap_or_default()
                .parse()
                .map_err(|_| bad("bad iteration"))?;
            let name = record.get(2).unwrap_or_default().to_string();
            let value: f64 = record
                .get(3)
                .unwrap_or_default()
                .parse()
                .map_err(|_| bad("bad value"))?;

            let start_new = match &current {
                None => true,
                Some((c, i, _)) => *c != chain_id || *i != iter,
            };
            if start_new {
                flush(&mut chains, current.take());
                current = Some((chain_id, iter, Vec::new()));
            }
            let slot = current.as_mut().expect("set above");
            let idx = slot.2.len();
            if idx == params.len() {
                params.push(name.clone());
            } else if params[idx] != name {
                return Err(bad("parameter order differs between draws"));
            }
            slot.2.push(value);
        }
        flush(&mut chains, current.take());

        let store = DrawStore { params, chains };
        store.validate()?;
        Ok(store)
    }
}

/// Thinned per-cell (n, p) samples with draw provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellTable {
    pub segment_ids: Vec<String>,
    pub months: u32,
    pub rows: Vec<CellDraw>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellDraw {
    pub chain: u32,
    pub iteration: u64,
    /// Segment-major cell index.
    pub cell: u32,
    pub n: u32,
    pub p: f64,
}

impl CellTable {
    pub fn new(segment_ids: Vec<String>, months: u32) -> Self {
        CellTable {
            segment_ids,
            months,
            rows: Vec::new(),
        }
    }

    #[inline]
    pub fn segment_of(&self, cell: u32) -> usize {
        (cell / self.months) as usize
    }

    #[inline]
    pub fn month_of(&self, cell: u32) -> u32 {
        cell % self.months + 1
    }

    pub fn num_cells(&self) -> usize {
        self.segment_ids.len() * self.months as usize
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "chain,iteration,segment_id,month,n,p")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                row.chain,
                row.iteration,
                self.segment_ids[self.segment_of(row.cell)],
                self.month_of(row.cell),
                row.n,
                row.p
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut lines = file.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "chain,iteration,segment_id,month,n,p" => {}
            _ => {
                return Err(Error::validation(format!(
                    "cell file {} must have header chain,iteration,segment_id,month,n,p",
                    path.display()
                )))
            }
        }
        let mut segment_ids: Vec<String> = Vec::new();
        let mut index_of: std::collections::HashMap<String, u32> = std::collections::HashMap::new();
        let mut months: u32 = 0;
        // (chain, iteration, segment index, month, n, p) until the month
        // count is known; cell indices are assembled afterwards.
        let mut raw: Vec<(u32, u64, u32, u32, u32, f64)> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Ingestion {
                file: path.display().to_string(),
                row: lineno as u64 + 2,
                message: what.to_string(),
            };
            let mut parts = line.split(',');
            let mut next = |what: &'static str| parts.next().map(str::trim).ok_or_else(|| bad(what));
            let chain: u32 = next("chain")?.parse().map_err(|_| bad("bad chain"))?;
            let iteration: u64 = next("iteration")?.parse().map_err(|_| bad("bad iteration"))?;
            let seg = next("segment_id")?.to_string();
            let month: u32 = next("month")?.parse().map_err(|_| bad("bad month"))?;
            let n: u32 = next("n")?.parse().map_err(|_| bad("bad n"))?;
            let p: f64 = next("p")?.parse().map_err(|_| bad("bad p"))?;
            months = months.max(month);
            let seg_idx = *index_of.entry(seg.clone()).or_insert_with(|| {
                segment_ids.push(seg);
                segment_ids.len() as u32 - 1
            });
            raw.push((chain, iteration, seg_idx, month, n, p));
        }
        let rows = raw
            .into_iter()
            .map(|(chain, iteration, seg_idx, month, n, p)| CellDraw {
                chain,
                iteration,
                cell: seg_idx * months + (month - 1),
                n,
                p,
            })
            .collect();
        Ok(CellTable {
            segment_ids,
            months,
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> DataSchema {
        DataSchema::new(vec!["speed".into()], vec!["rain".into()], 2).unwrap()
    }

    #[test]
    fn parameter_naming_is_stable() {
        let names = parameter_names(&schema());
        assert_eq!(
            names,
            vec![
                "beta[speed]",
                "alpha0[1]",
                "alpha0[2]",
                "gamma[1][rain]",
                "gamma[2][rain]",
                "q[1]",
                "q[2]",
                "monthly_total[1]",
                "monthly_total[2]",
                "nonzero_n",
                "nonzero_i",
            ]
        );
        let monitored = monitored_parameters(&names);
        assert_eq!(monitored.len(), names.len() - 2);
    }

    #[test]
    fn draw_store_roundtrips_through_csv() {
        let params = parameter_names(&schema());
        let width = params.len();
        let mut store = DrawStore::new(params);
        for chain in 0..2 {
            let mut cd = ChainDraws::new(chain);
            for draw in 0..3u64 {
                let values: Vec<f64> = (0..width)
                    .map(|p| (chain as f64) * 100.0 + draw as f64 + p as f64 * 0.001)
                    .collect();
                cd.push(draw * 2 + 5, values);
            }
            store.chains.push(cd);
        }
        store.validate().unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("draws.csv");
        store.write_csv(&path).unwrap();
        let loaded = DrawStore::read_csv(&path).unwrap();
        assert_eq!(store, loaded);
    }

    #[test]
    fn draw_store_rejects_nonincreasing_iterations() {
        let mut store = DrawStore::new(vec!["a".into()]);
        let mut cd = ChainDraws::new(0);
        cd.push(5, vec![1.0]);
        cd.push(5, vec![2.0]);
        store.chains.push(cd);
        assert!(store.validate().is_err());
    }

    #[test]
    fn cell_table_roundtrips_through_csv() {
        let mut table = CellTable::new(vec!["alpha".into(), "beta".into()], 2);
        table.rows.push(CellDraw {
            chain: 0,
            iteration: 11,
            cell: 0,
            n: 3,
            p: 0.25,
        });
        table.rows.push(CellDraw {
            chain: 1,
            iteration: 12,
            cell: 3,
            n: 0,
            p: 0.017345678912345,
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cells.csv");
        table.write_csv(&path).unwrap();
        let loaded = CellTable::read_csv(&path).unwrap();
        assert_eq!(table, loaded);
    }
}

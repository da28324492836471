//! Domain types, dataset validation, and the synthetic-data generator.

pub mod io;
pub mod simulate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_dataset, write_dataset};
pub use simulate::{simulate_dataset, CovariateDist, GroundTruth, SimulationSpec};

/// Declares which columns of the input files carry covariates, and which of
/// them are constrained. Covariates are schema-driven, never hard-coded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataSchema {
    /// Time-invariant segment covariates (columns of the segments file).
    pub x_names: Vec<String>,
    /// Time-varying covariates (columns of the panel file).
    pub y_names: Vec<String>,
    /// Months per cycle.
    pub months: u32,
    /// Covariates that must be exactly 0 or 1.
    pub flag_covariates: Vec<String>,
    /// Covariates that must be nonnegative.
    pub nonnegative_covariates: Vec<String>,
}

impl DataSchema {
    pub fn new(x_names: Vec<String>, y_names: Vec<String>, months: u32) -> Result<Self> {
        let schema = DataSchema {
            x_names,
            y_names,
            months,
            flag_covariates: Vec::new(),
            nonnegative_covariates: Vec::new(),
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_names.is_empty() {
            return Err(Error::config("schema declares no segment covariates"));
        }
        if self.months == 0 {
            return Err(Error::config("months per cycle must be at least 1"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in self.x_names.iter().chain(&self.y_names) {
            if !seen.insert(name.as_str()) {
                return Err(Error::config(format!("duplicate covariate name `{name}`")));
            }
        }
        for name in self
            .flag_covariates
            .iter()
            .chain(&self.nonnegative_covariates)
        {
            if !seen.contains(name.as_str()) {
                return Err(Error::config(format!(
                    "constraint names unknown covariate `{name}`"
                )));
            }
        }
        Ok(())
    }

    pub fn x_dim(&self) -> usize {
        self.x_names.len()
    }

    pub fn y_dim(&self) -> usize {
        self.y_names.len()
    }
}

/// One road segment and its time-invariant design factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentCovariates {
    pub id: String,
    pub x: Vec<f64>,
}

/// One segment-month observation: the recorded count and the time-varying
/// covariates for that cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelCell {
    /// Index into `Dataset::segments`.
    pub segment: usize,
    /// 1-based month.
    pub month: u32,
    /// Observed collision count.
    pub count: u32,
    pub y: Vec<f64>,
}

/// A complete S x T panel: every (segment, month) pair appears exactly once,
/// stored segment-major. Immutable after load; safe to share across chains.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: DataSchema,
    pub segments: Vec<SegmentCovariates>,
    cells: Vec<PanelCell>,
}

impl Dataset {
    /// Assemble and validate a dataset from parts. `cells` may arrive in any
    /// order; they are sorted into segment-major layout.
    pub fn new(
        schema: DataSchema,
        segments: Vec<SegmentCovariates>,
        mut cells: Vec<PanelCell>,
    ) -> Result<Self> {
        schema.validate()?;
        cells.sort_by_key(|c| (c.segment, c.month));
        let ds = Dataset {
            schema,
            segments,
            cells,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn num_segments(&self) -> usize {
        self.segments.len()
    }

    pub fn months(&self) -> u32 {
        self.schema.months
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Segment-major cell index for (segment s, 1-based month t).
    #[inline]
    pub fn cell_index(&self, segment: usize, month: u32) -> usize {
        segment * self.schema.months as usize + (month - 1) as usize
    }

    #[inline]
    pub fn cell(&self, segment: usize, month: u32) -> &PanelCell {
        &self.cells[self.cell_index(segment, month)]
    }

    pub fn cells(&self) -> &[PanelCell] {
        &self.cells
    }

    pub fn max_count(&self) -> u32 {
        self.cells.iter().map(|c| c.count).max().unwrap_or(0)
    }

    /// Observed count totals per month (1-based index 0..T-1).
    pub fn monthly_observed_totals(&self) -> Vec<f64> {
        let t = self.schema.months as usize;
        let mut totals = vec![0.0; t];
        for cell in &self.cells {
            totals[(cell.month - 1) as usize] += f64::from(cell.count);
        }
        totals
    }

    /// Check every structural invariant; `Dataset::new` runs this once.
    pub fn validate(&self) -> Result<()> {
        let s = self.segments.len();
        let t = self.schema.months;
        if s == 0 {
            return Err(Error::validation("dataset has no segments"));
        }
        let mut ids = std::collections::BTreeSet::new();
        for seg in &self.segments {
            if !ids.insert(seg.id.as_str()) {
                return Err(Error::validation(format!(
                    "duplicate segment id `{}`",
                    seg.id
                )));
            }
            if seg.x.len() != self.schema.x_dim() {
                return Err(Error::validation(format!(
                    "segment `{}` has {} covariates, schema declares {}",
                    seg.id,
                    seg.x.len(),
                    self.schema.x_dim()
                )));
            }
            for (name, &v) in self.schema.x_names.iter().zip(&seg.x) {
                check_covariate(&self.schema, name, v, &seg.id)?;
            }
        }
        if self.cells.len() != s * t as usize {
            return Err(Error::validation(format!(
                "panel is incomplete: {} cells, expected {} ({} segments x {} months)",
                self.cells.len(),
                s * t as usize,
                s,
                t
            )));
        }
        for (idx, cell) in self.cells.iter().enumerate() {
            let want_seg = idx / t as usize;
            let want_month = (idx % t as usize) as u32 + 1;
            if cell.segment != want_seg || cell.month != want_month {
                let missing = (
                    self.segments[want_seg].id.as_str(),
                    want_month,
                );
                return Err(Error::validation(format!(
                    "panel is incomplete or duplicated near segment `{}`, month {}",
                    missing.0, missing.1
                )));
            }
            if cell.month == 0 || cell.month > t {
                return Err(Error::validation(format!(
                    "month {} out of range 1..={}",
                    cell.month, t
                )));
            }
            if cell.y.len() != self.schema.y_dim() {
                return Err(Error::validation(format!(
                    "cell ({}, {}) has {} time-varying covariates, schema declares {}",
                    self.segments[cell.segment].id,
                    cell.month,
                    cell.y.len(),
                    self.schema.y_dim()
                )));
            }
            for &v in &cell.y {
                if !v.is_finite() {
                    return Err(Error::validation(format!(
                        "non-finite time-varying covariate in cell ({}, {})",
                        self.segments[cell.segment].id, cell.month
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_covariate(schema: &DataSchema, name: &str, v: f64, segment: &str) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::validation(format!(
            "covariate `{name}` of segment `{segment}` is not finite"
        )));
    }
    if schema.flag_covariates.iter().any(|f| f == name) && v != 0.0 && v != 1.0 {
        return Err(Error::validation(format!(
            "flag covariate `{name}` of segment `{segment}` must be 0 or 1, got {v}"
        )));
    }
    if schema.nonnegative_covariates.iter().any(|f| f == name) && v < 0.0 {
        return Err(Error::validation(format!(
            "covariate `{name}` of segment `{segment}` must be nonnegative, got {v}"
        )));
    }
    Ok(())
}

/// Min/mean/max of one covariate across the dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovariateSummary {
    pub name: String,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

/// Summary rows for every segment covariate, then every time-varying one.
pub fn summarize_covariates(dataset: &Dataset) -> Vec<CovariateSummary> {
    let mut rows = Vec::new();
    for (j, name) in dataset.schema.x_names.iter().enumerate() {
        rows.push(column_summary(
            name,
            dataset.segments.iter().map(|s| s.x[j]),
        ));
    }
    for (j, name) in dataset.schema.y_names.iter().enumerate() {
        rows.push(column_summary(name, dataset.cells().iter().map(|c| c.y[j])));
    }
    rows
}

fn column_summary(name: &str, values: impl Iterator<Item = f64>) -> CovariateSummary {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut n = 0usize;
    for v in values {
        min = min.min(v);
        max = max.max(v);
        sum += v;
        n += 1;
    }
    CovariateSummary {
        name: name.to_string(),
        min,
        mean: sum / n as f64,
        max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_schema() -> DataSchema {
        DataSchema::new(
            vec!["speed_limit".into(), "urban".into()],
            vec!["rainfall".into()],
            12,
        )
        .unwrap()
    }

    pub(crate) fn tiny_dataset() -> Dataset {
        let schema = tiny_schema();
        let segments = vec![
            SegmentCovariates {
                id: "seg1".into(),
                x: vec![60.0, 0.0],
            },
            SegmentCovariates {
                id: "seg2".into(),
                x: vec![45.0, 1.0],
            },
        ];
        let mut cells = Vec::new();
        for s in 0..2 {
            for t in 1..=12 {
                cells.push(PanelCell {
                    segment: s,
                    month: t,
                    count: u32::from(s == 0 && t == 7),
                    y: vec![0.5 * f64::from(t)],
                });
            }
        }
        Dataset::new(schema, segments, cells).unwrap()
    }

    #[test]
    fn well_formed_panel_loads() {
        let ds = tiny_dataset();
        assert_eq!(ds.num_segments(), 2);
        assert_eq!(ds.months(), 12);
        assert_eq!(ds.num_cells(), 24);
        assert_eq!(ds.cell(0, 7).count, 1);
        assert_eq!(ds.max_count(), 1);
    }

    #[test]
    fn incomplete_panel_names_the_gap() {
        let ds = tiny_dataset();
        let mut cells: Vec<PanelCell> = ds.cells().to_vec();
        cells.retain(|c| !(c.segment == 0 && c.month == 7));
        let err = Dataset::new(ds.schema.clone(), ds.segments.clone(), cells).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("incomplete"), "{msg}");
    }

    #[test]
    fn duplicate_cell_is_rejected() {
        let ds = tiny_dataset();
        let mut cells: Vec<PanelCell> = ds.cells().to_vec();
        cells.push(cells[3].clone());
        assert!(Dataset::new(ds.schema.clone(), ds.segments.clone(), cells).is_err());
    }

    #[test]
    fn flag_covariate_must_be_binary() {
        let mut schema = tiny_schema();
        schema.flag_covariates = vec!["urban".into()];
        let segments = vec![SegmentCovariates {
            id: "s".into(),
            x: vec![50.0, 0.7],
        }];
        let cells = (1..=12)
            .map(|t| PanelCell {
                segment: 0,
                month: t,
                count: 0,
                y: vec![0.0],
            })
            .collect();
        assert!(Dataset::new(schema, segments, cells).is_err());
    }

    #[test]
    fn schema_rejects_duplicates_and_unknown_constraints() {
        assert!(DataSchema::new(vec!["a".into(), "a".into()], vec![], 12).is_err());
        let mut schema = tiny_schema();
        schema.flag_covariates = vec!["nope".into()];
        assert!(schema.validate().is_err());
    }

    #[test]
    fn covariate_summary_single_segment() {
        let schema = DataSchema::new(vec!["speed_limit".into()], vec![], 2).unwrap();
        let segments = vec![SegmentCovariates {
            id: "only".into(),
            x: vec![60.0],
        }];
        let cells = (1..=2)
            .map(|t| PanelCell {
                segment: 0,
                month: t,
                count: 0,
                y: vec![],
            })
            .collect();
        let ds = Dataset::new(schema, segments, cells).unwrap();
        let rows = summarize_covariates(&ds);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].min, 60.0);
        assert_eq!(rows[0].mean, 60.0);
        assert_eq!(rows[0].max, 60.0);
    }

    #[test]
    fn monthly_totals_pass_through() {
        let ds = tiny_dataset();
        let totals = ds.monthly_observed_totals();
        assert_eq!(totals[6], 1.0);
        assert_eq!(totals.iter().sum::<f64>(), 1.0);
    }
}

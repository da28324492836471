//! Flattened design matrices extracted from a validated dataset.
//!
//! The sampler's hot loops index covariates by raw offset; this view owns
//! the contiguous storage and the optional standardization transform.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;

/// Recorded so coefficients fit on standardized covariates can be mapped
/// back to raw scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub x_mean: Vec<f64>,
    pub x_sd: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DesignMatrices {
    pub segments: usize,
    pub months: usize,
    pub x_dim: usize,
    pub y_dim: usize,
    /// Segment covariates, row-major `segments x x_dim`.
    x: Vec<f64>,
    /// Cell covariates, row-major `(segments * months) x y_dim`.
    y: Vec<f64>,
    /// Observed counts per cell, segment-major.
    pub counts: Vec<u32>,
    pub max_count: u32,
    pub standardization: Option<Standardization>,
}

impl DesignMatrices {
    pub fn from_dataset(dataset: &Dataset, standardize: bool) -> Self {
        let s = dataset.num_segments();
        let t = dataset.months() as usize;
        let kx = dataset.schema.x_dim();
        let ky = dataset.schema.y_dim();

        let mut x = Vec::with_capacity(s * kx);
        for seg in &dataset.segments {
            x.extend_from_slice(&seg.x);
        }
        let standardization = if standardize {
            let mut mean = vec![0.0; kx];
            let mut sd = vec![0.0; kx];
            for j in 0..kx {
                let col: Vec<f64> = (0..s).map(|i| x[i * kx + j]).collect();
                let m = col.iter().sum::<f64>() / s as f64;
                let v = col.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / s as f64;
                mean[j] = m;
                // Constant columns (flags present everywhere, say) pass
                // through unscaled.
                sd[j] = if v > 0.0 { v.sqrt() } else { 1.0 };
            }
            for i in 0..s {
                for j in 0..kx {
                    x[i * kx + j] = (x[i * kx + j] - mean[j]) / sd[j];
                }
            }
            Some(Standardization {
                x_mean: mean,
                x_sd: sd,
            })
        } else {
            None
        };

        let mut y = Vec::with_capacity(s * t * ky);
        let mut counts = Vec::with_capacity(s * t);
        for cell in dataset.cells() {
            y.extend_from_slice(&cell.y);
            counts.push(cell.count);
        }
        let max_count = counts.iter().copied().max().unwrap_or(0);

        DesignMatrices {
            segments: s,
            months: t,
            x_dim: kx,
            y_dim: ky,
            x,
            y,
            counts,
            max_count,
            standardization,
        }
    }

    pub fn num_cells(&self) -> usize {
        self.segments * self.months
    }

    /// Cell index for (segment, 0-based month).
    #[inline]
    pub fn cell_index(&self, segment: usize, month0: usize) -> usize {
        segment * self.months + month0
    }

    #[inline]
    pub fn x_of(&self, segment: usize) -> &[f64] {
        &self.x[segment * self.x_dim..(segment + 1) * self.x_dim]
    }

    #[inline]
    pub fn y_of(&self, cell: usize) -> &[f64] {
        &self.y[cell * self.y_dim..(cell + 1) * self.y_dim]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{DataSchema, Dataset, PanelCell, SegmentCovariates};

    fn dataset() -> Dataset {
        let schema =
            DataSchema::new(vec!["a".into(), "b".into()], vec!["r".into()], 2).unwrap();
        let segments = vec![
            SegmentCovariates {
                id: "x".into(),
                x: vec![1.0, 10.0],
            },
            SegmentCovariates {
                id: "y".into(),
                x: vec![3.0, 30.0],
            },
        ];
        let cells = vec![
            PanelCell { segment: 0, month: 1, count: 2, y: vec![0.1] },
            PanelCell { segment: 0, month: 2, count: 0, y: vec![0.2] },
            PanelCell { segment: 1, month: 1, count: 1, y: vec![0.3] },
            PanelCell { segment: 1, month: 2, count: 0, y: vec![0.4] },
        ];
        Dataset::new(schema, segments, cells).unwrap()
    }

    #[test]
    fn layout_and_lookup() {
        let d = DesignMatrices::from_dataset(&dataset(), false);
        assert_eq!(d.x_of(1), &[3.0, 30.0]);
        assert_eq!(d.y_of(d.cell_index(1, 0)), &[0.3]);
        assert_eq!(d.counts, vec![2, 0, 1, 0]);
        assert_eq!(d.max_count, 2);
        assert!(d.standardization.is_none());
    }

    #[test]
    fn standardization_centers_and_scales() {
        let d = DesignMatrices::from_dataset(&dataset(), true);
        let st = d.standardization.as_ref().unwrap();
        assert_eq!(st.x_mean, vec![2.0, 20.0]);
        // Population sd of {1,3} is 1; of {10,30} is 10.
        assert_eq!(st.x_sd, vec![1.0, 10.0]);
        assert_eq!(d.x_of(0), &[-1.0, -1.0]);
        assert_eq!(d.x_of(1), &[1.0, 1.0]);
    }
}

//! Threshold-sweep segmentation of highly absorbing material in a coarse
//! reconstruction. The holder region is blacked out.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{Field, RegionTable};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    /// Minimum segmented volume as a fraction of all voxels.
    pub relevant_fraction: f64,
    pub sweep_steps: usize,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            relevant_fraction: 5e-6,
            sweep_steps: 32,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.relevant_fraction > 0.0 && self.relevant_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "relevant_fraction {} must lie in (0, 1)",
                self.relevant_fraction
            )));
        }
        if self.sweep_steps < 2 {
            return Err(Error::InvalidConfig("sweep_steps must be at least 2".into()));
        }
        Ok(())
    }
}

/// Statistics of one segmentation, kept for the run log.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentationLog {
    pub marker_value: f64,
    pub upper: f64,
    pub holder_value: f64,
    pub lower: f64,
    pub threshold: f64,
    pub segmented_voxels: usize,
}

#[derive(Clone, Debug)]
pub struct Segmentation {
    pub volume: Field,
    pub log: SegmentationLog,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn top_decile_mean(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| b.total_cmp(a));
    let k = v.len().div_ceil(10);
    v[..k].iter().sum::<f64>() / k as f64
}

pub fn segment_high_absorbers(
    recon: &Field,
    regions: &RegionTable,
    cfg: &SegmentationConfig,
) -> Result<Segmentation> {
    cfg.validate()?;
    if !recon.is_finite() {
        return Err(Error::NonFinite("reconstruction"));
    }
    let grid = &recon.grid;
    let values = |idx: Vec<usize>| idx.into_iter().map(|i| recon.data[i]).collect::<Vec<_>>();

    let markers: Vec<f64> = regions.markers.iter().flat_map(|b| values(b.voxels(grid))).collect();
    if markers.is_empty() {
        return Err(Error::EmptyRegion("marker"));
    }
    let sample = values(regions.sample.voxels(grid));
    if sample.is_empty() {
        return Err(Error::EmptyRegion("sample"));
    }
    let holder_idx = regions.holder.voxels(grid);
    if holder_idx.is_empty() {
        return Err(Error::EmptyRegion("holder"));
    }
    let marker_value = top_decile_mean(markers);
    let upper = sample.iter().copied().fold(marker_value, f64::max);
    let holder_value = median(values(holder_idx.clone()));
    let lower = holder_value + 0.25 * (upper - holder_value);

    let mut in_holder = vec![false; grid.len()];
    for i in holder_idx {
        in_holder[i] = true;
    }
    let count_above = |t: f64| {
        recon
            .data
            .par_iter()
            .zip(&in_holder)
            .filter(|(v, h)| !**h && **v > t)
            .count()
    };

    let wanted = cfg.relevant_fraction * grid.len() as f64;
    let mut threshold = lower;
    for k in 0..cfg.sweep_steps {
        let t = upper - k as f64 * (upper - lower) / (cfg.sweep_steps - 1) as f64;
        if count_above(t) as f64 >= wanted {
            threshold = t;
            break;
        }
    }
    if lower > upper {
        // The holder outshines everything else; nothing is segmented.
        threshold = lower;
    }

    let data: Vec<f64> = recon
        .data
        .par_iter()
        .zip(&in_holder)
        .map(|(&v, &h)| if !h && v > threshold { v } else { 0.0 })
        .collect();
    let segmented_voxels = data.iter().filter(|v| **v != 0.0).count();
    Ok(Segmentation {
        volume: Field::from_vec(*grid, data)?,
        log: SegmentationLog {
            marker_value,
            upper,
            holder_value,
            lower,
            threshold,
            segmented_voxels,
        },
    })
}

//! Line profiles through reconstructions and their gradient-magnitude
//! sharpness.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Field;

/// A segment between two points given in voxel index coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub name: String,
    pub start: [f64; 3],
    pub end: [f64; 3],
}

impl ProfileSpec {
    pub fn length(&self) -> f64 {
        (0..3).map(|a| (self.end[a] - self.start[a]).powi(2)).sum::<f64>().sqrt()
    }

    /// Samples at roughly unit voxel steps, never fewer than three.
    pub fn n_samples(&self) -> usize {
        (self.length().round() as usize + 1).max(3)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineProfile {
    pub name: String,
    /// Distance between consecutive samples in voxels.
    pub step: f64,
    pub samples: Vec<f64>,
}

impl LineProfile {
    /// CSV `t,value` with `t` in voxels from the start.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,value")?;
        for (i, v) in self.samples.iter().enumerate() {
            writeln!(w, "{},{v}", i as f64 * self.step)?;
        }
        Ok(())
    }
}

pub fn extract_profile(volume: &Field, spec: &ProfileSpec) -> Result<LineProfile> {
    let dims = volume.grid.dims;
    for p in [spec.start, spec.end] {
        if (0..3).any(|a| !(p[a] >= 0.0 && p[a] <= dims[a] as f64 - 1.0)) {
            return Err(Error::Profile(format!("{}: endpoint {p:?} outside grid {dims:?}", spec.name)));
        }
    }
    let n = spec.n_samples();
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            let q = [0, 1, 2].map(|a| spec.start[a] + t * (spec.end[a] - spec.start[a]));
            volume.sample_trilinear(q)
        })
        .collect();
    Ok(LineProfile {
        name: spec.name.clone(),
        step: spec.length() / (n - 1) as f64,
        samples,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Mean,
    Max,
    Sum,
}

/// Aggregate of the absolute central differences over interior samples, per
/// voxel of distance.
pub fn gradient_magnitude(profile: &LineProfile, agg: Aggregation) -> Result<f64> {
    let s = &profile.samples;
    if s.len() < 3 {
        return Err(Error::Profile(format!("{} has {} samples, need 3", profile.name, s.len())));
    }
    let step = if profile.step > 0.0 { profile.step } else { 1.0 };
    let diffs = s.windows(3).map(|w| ((w[2] - w[0]) / (2.0 * step)).abs());
    Ok(match agg {
        Aggregation::Mean => diffs.sum::<f64>() / (s.len() - 2) as f64,
        Aggregation::Max => diffs.fold(0.0, f64::max),
        Aggregation::Sum => diffs.sum(),
    })
}

pub fn percent_delta(reference: f64, value: f64) -> f64 {
    if reference == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::INFINITY.copysign(value)
        }
    } else {
        100.0 * (value - reference) / reference
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub runs: Vec<String>,
    pub profiles: Vec<String>,
    /// `values[profile][run]`.
    pub values: Vec<Vec<f64>>,
    /// Percent change against the first run, same layout as `values`.
    pub deltas: Vec<Vec<f64>>,
}

pub fn compare_runs(
    runs: &[(String, &Field)],
    profiles: &[ProfileSpec],
    agg: Aggregation,
) -> Result<ComparisonTable> {
    let Some((_, first)) = runs.first() else {
        return Err(Error::Profile("no runs to compare".into()));
    };
    if let Some((name, _)) = runs.iter().find(|(_, f)| f.grid != first.grid) {
        return Err(Error::DimensionMismatch(format!("run {name} uses a different grid")));
    }
    let mut values = Vec::new();
    let mut deltas = Vec::new();
    for spec in profiles {
        let row = runs
            .iter()
            .map(|(_, f)| gradient_magnitude(&extract_profile(f, spec)?, agg))
            .collect::<Result<Vec<_>>>()?;
        deltas.push(row.iter().map(|v| percent_delta(row[0], *v)).collect());
        values.push(row);
    }
    Ok(ComparisonTable {
        runs: runs.iter().map(|(n, _)| n.clone()).collect(),
        profiles: profiles.iter().map(|p| p.name.clone()).collect(),
        values,
        deltas,
    })
}

impl ComparisonTable {
    /// CSV `profile,run,gradient_magnitude,delta_percent`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("profile,run,gradient_magnitude,delta_percent\n");
        for (p, name) in self.profiles.iter().enumerate() {
            for (r, run) in self.runs.iter().enumerate() {
                let _ = writeln!(out, "{name},{run},{},{}", self.values[p][r], self.deltas[p][r]);
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{:<12}", "profile");
        for r in &self.runs {
            let _ = write!(out, " {r:>24}");
        }
        out.push('\n');
        for (p, name) in self.profiles.iter().enumerate() {
            let _ = write!(out, "{name:<12}");
            for r in 0..self.runs.len() {
                let cell = if r == 0 {
                    format!("{:.6}", self.values[p][r])
                } else {
                    format!("{:.6} ({:+.1} %)", self.values[p][r], self.deltas[p][r])
                };
                let _ = write!(out, " {cell:>24}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Grid;
    use approx::assert_relative_eq;

    fn ramp() -> Field {
        let g = Grid::cube(10, 1.0).unwrap();
        let mut f = Field::zeros(g);
        for idx in 0..g.len() {
            let [i, j, k] = g.coords(idx);
            f.data[idx] = 0.5 * i as f64 - 0.25 * j as f64 + 2.0 * k as f64;
        }
        f
    }

    fn spec(start: [f64; 3], end: [f64; 3]) -> ProfileSpec {
        ProfileSpec { name: "p".into(), start, end }
    }

    #[test]
    fn constant_volume_flat_profile() {
        let mut f = Field::zeros(Grid::cube(8, 1.0).unwrap());
        f.data.iter_mut().for_each(|v| *v = 3.0);
        let p = extract_profile(&f, &spec([0.5, 1.0, 2.0], [6.5, 5.0, 4.0])).unwrap();
        assert!(p.samples.iter().all(|v| (*v - 3.0).abs() < 1e-12));
        assert!(gradient_magnitude(&p, Aggregation::Mean).unwrap() < 1e-12);
    }

    #[test]
    fn axis_profile_hits_voxels() {
        let f = ramp();
        let p = extract_profile(&f, &spec([2.0, 3.0, 0.0], [2.0, 3.0, 9.0])).unwrap();
        assert_eq!(p.samples.len(), 10);
        for (k, v) in p.samples.iter().enumerate() {
            assert_eq!(*v, f.at(2, 3, k));
        }
    }

    #[test]
    fn diagonal_profile_on_ramp_is_linear() {
        let f = ramp();
        let (a, b) = ([0.3, 8.1, 1.2], [8.7, 0.4, 7.9]);
        let p = extract_profile(&f, &spec(a, b)).unwrap();
        let val = |q: [f64; 3]| 0.5 * q[0] - 0.25 * q[1] + 2.0 * q[2];
        let n = p.samples.len();
        for (i, v) in p.samples.iter().enumerate() {
            let t = i as f64 / (n - 1) as f64;
            let q = [0, 1, 2].map(|k| a[k] + t * (b[k] - a[k]));
            assert!((v - val(q)).abs() < 1e-6);
        }
    }

    #[test]
    fn endpoints_must_be_inside() {
        assert!(extract_profile(&ramp(), &spec([0.0, 0.0, 0.0], [9.5, 0.0, 0.0])).is_err());
    }

    #[test]
    fn unit_step_edge() {
        for n in [5, 10, 40] {
            let samples = (0..n).map(|i| if i < n / 2 { 0.0 } else { 1.0 }).collect();
            let p = LineProfile { name: "e".into(), step: 1.0, samples };
            assert_relative_eq!(gradient_magnitude(&p, Aggregation::Mean).unwrap(), 1.0 / (n - 2) as f64);
            assert_eq!(gradient_magnitude(&p, Aggregation::Max).unwrap(), 0.5);
            assert_eq!(gradient_magnitude(&p, Aggregation::Sum).unwrap(), 1.0);
        }
    }

    #[test]
    fn delta_formula() {
        assert!((percent_delta(0.000991, 0.002284) - 130.5).abs() < 0.05);
        assert_eq!(percent_delta(2.0, 2.0), 0.0);
    }

    #[test]
    fn identical_runs_zero_delta() {
        let f = ramp();
        let t = compare_runs(
            &[("a".into(), &f), ("b".into(), &f)],
            &[spec([0.0, 0.0, 0.0], [9.0, 9.0, 9.0])],
            Aggregation::Mean,
        )
        .unwrap();
        assert_eq!(t.deltas, vec![vec![0.0, 0.0]]);
        assert!(t.to_csv().lines().count() == 3);
    }

    #[test]
    fn grid_mismatch_rejected() {
        let f = ramp();
        let g = Field::zeros(Grid::cube(12, 1.0).unwrap());
        let r = compare_runs(&[("a".into(), &f), ("b".into(), &g)], &[], Aggregation::Mean);
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }
}

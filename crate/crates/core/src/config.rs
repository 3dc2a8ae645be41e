//! Experiment configuration, read from and written to TOML. Every default is
//! spelled out when a config is serialized, so a written config fully
//! describes its experiment.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::DetectorSpec;
use crate::metrics::{Aggregation, ProfileSpec};
use crate::phantom::{PhantomSpec, SampleLayout};
use crate::recon::Regularization;
use crate::robot::ReachabilitySpec;
use crate::sampler::SamplerConfig;
use crate::segmentation::SegmentationConfig;
use crate::volume::{AttenuationTable, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub size: usize,
    pub spacing_mm: f64,
}

impl GridConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::cube(self.size, self.spacing_mm)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhantomConfig {
    pub sample: u8,
    pub grid: GridConfig,
    pub include_absorber: bool,
    pub layout: SampleLayout,
    pub attenuation: AttenuationTable,
}

impl PhantomConfig {
    pub fn for_sample(sample: u8) -> Self {
        let g = PhantomSpec::default_grid(sample);
        Self {
            sample,
            grid: GridConfig { size: g.dims[0], spacing_mm: g.spacing },
            include_absorber: true,
            layout: SampleLayout::default_for(sample),
            attenuation: AttenuationTable::default(),
        }
    }

    pub fn spec(&self) -> Result<PhantomSpec> {
        let mut spec = PhantomSpec::for_sample(self.sample, self.grid.grid()?, self.layout)?;
        spec.attenuation = self.attenuation;
        if !self.include_absorber {
            spec = spec.without_absorber();
        }
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereConfig {
    pub n_side_low: u32,
    pub n_side_high: u32,
    /// Neighbor spreading radius in degrees.
    pub r_deg: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopConfig {
    /// Pose attempts in the optimization loop, failures included.
    pub budget: usize,
    /// Spread every attempted pose's refreshed score, not just the newest.
    pub spread_all_poses: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconStage {
    pub grid: GridConfig,
    pub iterations: usize,
    pub regularization: Regularization,
    /// Detector pixels averaged per side before reconstructing.
    pub detector_binning: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub enabled: bool,
    /// Unattenuated photon count per detector pixel.
    pub i0: f64,
    /// Converts line integrals of the phantom to optical depth.
    pub attenuation_scale: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { enabled: false, i0: 1e4, attenuation_scale: 0.1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    /// Grid whose reachable pixels form the whole-sphere trajectory.
    pub whole_sphere_n_side: u32,
    /// Dense grid the random trajectory draws from without replacement.
    pub random_n_side: u32,
    /// Successful acquisitions the random trajectory aims for; when absent
    /// the reachable count of the whole-sphere grid is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_target: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    pub aggregation: Aggregation,
    pub profiles: Vec<ProfileSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub phantom: PhantomConfig,
    pub detector: DetectorSpec,
    pub sphere: SphereConfig,
    pub sampler: SamplerConfig,
    #[serde(rename = "loop")]
    pub loop_: LoopConfig,
    pub coarse: ReconStage,
    pub final_recon: ReconStage,
    pub segmentation: SegmentationConfig,
    pub reachability: ReachabilitySpec,
    pub noise: NoiseConfig,
    pub baselines: BaselineConfig,
    pub metrics: MetricsConfig,
}

/// Line profiles for a sample at the default grid, in voxel coordinates.
pub fn default_profiles(sample: u8) -> Vec<ProfileSpec> {
    let p = |name: &str, start, end| ProfileSpec { name: name.into(), start, end };
    if sample == 2 {
        vec![
            p("profile_1", [23.5, 39.5, 37.5], [43.5, 39.5, 37.5]),
            p("profile_2", [47.5, 41.5, 21.5], [47.5, 59.5, 21.5]),
            p("profile_3", [53.5, 47.5, 22.5], [67.5, 47.5, 22.5]),
        ]
    } else {
        vec![
            p("profile_1", [43.0, 27.5, 62.5], [43.0, 67.5, 62.5]),
            p("profile_2", [43.0, 33.5, 32.5], [43.0, 61.5, 32.5]),
            p("profile_3", [43.0, 47.5, 19.5], [43.0, 47.5, 75.5]),
        ]
    }
}

impl ExperimentConfig {
    /// Desk-scale defaults for sample 1 or 2.
    pub fn desk_scale(sample: u8) -> Self {
        let phantom = PhantomConfig::for_sample(sample);
        let coarse_spacing = phantom.grid.spacing_mm * 2.0;
        let full = phantom.grid;
        Self {
            seed: 1,
            phantom,
            detector: DetectorSpec::default(),
            sphere: SphereConfig { n_side_low: 3, n_side_high: 18, r_deg: 5.0 },
            sampler: SamplerConfig::default(),
            loop_: LoopConfig { budget: 150, spread_all_poses: false },
            coarse: ReconStage {
                grid: GridConfig { size: full.size / 2, spacing_mm: coarse_spacing },
                iterations: 10,
                regularization: Regularization::default(),
                detector_binning: 1,
            },
            final_recon: ReconStage {
                grid: full,
                iterations: 30,
                regularization: Regularization::default(),
                detector_binning: 1,
            },
            // The coarse grid is small enough that 5e-6 of it is under one
            // voxel; 5e-4 keeps the relevant volume at tens of voxels.
            segmentation: SegmentationConfig { relevant_fraction: 5e-4, ..SegmentationConfig::default() },
            reachability: ReachabilitySpec::default(),
            noise: NoiseConfig::default(),
            baselines: BaselineConfig { whole_sphere_n_side: 5, random_n_side: 18, random_target: None },
            metrics: MetricsConfig { aggregation: Aggregation::Mean, profiles: default_profiles(sample) },
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml_string()?.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        self.phantom.spec()?;
        self.detector.validate()?;
        self.sampler.validate()?;
        self.segmentation.validate()?;
        self.reachability.validate()?;
        let s = &self.sphere;
        if s.n_side_low == 0 || s.n_side_high <= s.n_side_low {
            return bad(format!("need 0 < n_side_low < n_side_high, got {} and {}", s.n_side_low, s.n_side_high));
        }
        if !(s.r_deg >= 0.0 && s.r_deg <= 180.0) {
            return bad(format!("r_deg = {} must lie in [0, 180]", s.r_deg));
        }
        if self.loop_.budget == 0 {
            return bad("loop budget must be at least 1".into());
        }
        for (name, st) in [("coarse", &self.coarse), ("final_recon", &self.final_recon)] {
            st.grid.grid()?;
            if st.iterations == 0 {
                return bad(format!("{name}.iterations must be at least 1"));
            }
            if st.detector_binning == 0
                || self.detector.rows % st.detector_binning != 0
                || self.detector.cols % st.detector_binning != 0
            {
                return bad(format!("{name}.detector_binning must divide the detector size"));
            }
        }
        if self.noise.enabled && !(self.noise.i0 >= 1.0 && self.noise.attenuation_scale > 0.0) {
            return bad("noise needs i0 >= 1 and attenuation_scale > 0".into());
        }
        if self.baselines.whole_sphere_n_side == 0 || self.baselines.random_n_side == 0 {
            return bad("baseline grids need n_side >= 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        for sample in [1, 2] {
            let cfg = ExperimentConfig::desk_scale(sample);
            cfg.validate().unwrap();
            let text = cfg.to_toml_string().unwrap();
            let back = ExperimentConfig::from_toml_str(&text).unwrap();
            assert_eq!(cfg, back);
            assert_eq!(cfg.hash().unwrap(), back.hash().unwrap());
        }
    }

    #[test]
    fn written_config_is_explicit() {
        let text = ExperimentConfig::desk_scale(1).to_toml_string().unwrap();
        for key in ["relevant_fraction", "sweep_steps", "x_min", "spread_all_poses", "r_deg", "i0", "probes"] {
            assert!(text.contains(key), "{key} missing from\n{text}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut text = ExperimentConfig::desk_scale(1).to_toml_string().unwrap();
        text = text.replacen("[sphere]\n", "[sphere]\nbogus = 1\n", 1);
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = ExperimentConfig::desk_scale(1);
        cfg.sphere.n_side_high = 3;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::desk_scale(1);
        cfg.loop_.budget = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::desk_scale(1);
        cfg.coarse.detector_binning = 5;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::desk_scale(1);
        cfg.phantom.sample = 3;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hash_tracks_changes() {
        let a = ExperimentConfig::desk_scale(1);
        let mut b = a.clone();
        b.seed = 2;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }
}

//! Stand-in for the robotic holder: a reachability mask made of spherical
//! caps and random acquisition failures.

use std::fmt;

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{direction, PixelState};

/// A cap of directions the arm cannot reach.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cap {
    pub theta_deg: f64,
    pub phi_deg: f64,
    pub radius_deg: f64,
}

impl Cap {
    pub fn center(&self) -> Vector3<f64> {
        direction(self.theta_deg.to_radians(), self.phi_deg.to_radians())
    }

    pub fn contains(&self, dir: &Vector3<f64>) -> bool {
        self.center().dot(&dir.normalize()) >= self.radius_deg.to_radians().cos()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachabilitySpec {
    pub unreachable_caps: Vec<Cap>,
    pub failure_prob_hardware: f64,
    pub failure_prob_calibration: f64,
}

impl Default for ReachabilitySpec {
    /// Cap layout calibrated to leave 89 of 108 poses reachable at
    /// `n_side = 3` and 725 of 972 at `n_side = 9`.
    fn default() -> Self {
        let cap = |theta_deg, phi_deg, radius_deg| Cap { theta_deg, phi_deg, radius_deg };
        Self {
            unreachable_caps: vec![
                cap(37.3, 90.1, 12.6),
                cap(114.9, 13.3, 27.7),
                cap(62.1, 330.1, 18.4),
                cap(137.8, 118.1, 47.6),
            ],
            failure_prob_hardware: 0.0,
            failure_prob_calibration: 0.0,
        }
    }
}

impl ReachabilitySpec {
    pub fn unrestricted() -> Self {
        Self {
            unreachable_caps: Vec::new(),
            failure_prob_hardware: 0.0,
            failure_prob_calibration: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("failure_prob_hardware", self.failure_prob_hardware),
            ("failure_prob_calibration", self.failure_prob_calibration),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} = {p} must lie in [0, 1]")));
            }
        }
        if self.unreachable_caps.iter().any(|c| !(c.radius_deg >= 0.0)) {
            return Err(Error::InvalidConfig("cap radii must be >= 0".into()));
        }
        Ok(())
    }

    pub fn is_reachable(&self, dir: &Vector3<f64>) -> bool {
        !self.unreachable_caps.iter().any(|c| c.contains(dir))
    }

    /// Unreachable poses consume no randomness; reachable ones draw the
    /// hardware check first and the calibration check only if it passed.
    pub fn attempt_acquisition<R: Rng + ?Sized>(&self, dir: &Vector3<f64>, rng: &mut R) -> Outcome {
        if !self.is_reachable(dir) {
            return Outcome::Unreachable;
        }
        if rng.random::<f64>() < self.failure_prob_hardware {
            return Outcome::HardwareError;
        }
        if rng.random::<f64>() < self.failure_prob_calibration {
            return Outcome::CalibrationError;
        }
        Outcome::Ok
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    HardwareError,
    CalibrationError,
    Unreachable,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Ok => "ok",
            Outcome::HardwareError => "hardware_error",
            Outcome::CalibrationError => "calibration_error",
            Outcome::Unreachable => "unreachable",
        }
    }

    /// State a pixel takes after this outcome.
    pub fn pixel_state(&self) -> PixelState {
        match self {
            Outcome::Ok => PixelState::Acquired,
            Outcome::HardwareError | Outcome::CalibrationError => PixelState::Failed,
            Outcome::Unreachable => PixelState::Unreachable,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{PixelId, SpherePartition};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn reachable_count(spec: &ReachabilitySpec, n_side: u32) -> usize {
        let p = SpherePartition::new(n_side).unwrap();
        (0..p.n_pix())
            .filter(|&i| spec.is_reachable(&p.pixel_direction(PixelId(i)).unwrap()))
            .count()
    }

    #[test]
    fn default_caps_match_calibration_counts() {
        let spec = ReachabilitySpec::default();
        assert_eq!(reachable_count(&spec, 3), 89);
        assert_eq!(reachable_count(&spec, 9), 725);
    }

    #[test]
    fn no_caps_reach_everything() {
        assert_eq!(reachable_count(&ReachabilitySpec::unrestricted(), 4), 192);
    }

    #[test]
    fn certain_hardware_failure() {
        let spec = ReachabilitySpec { failure_prob_hardware: 1.0, ..ReachabilitySpec::unrestricted() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(spec.attempt_acquisition(&Vector3::x(), &mut rng), Outcome::HardwareError);
        }
    }

    #[test]
    fn unreachable_draws_nothing() {
        let spec = ReachabilitySpec {
            failure_prob_hardware: 0.5,
            ..ReachabilitySpec::default()
        };
        let cap = spec.unreachable_caps[0].center();
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let b = a.clone();
        assert_eq!(spec.attempt_acquisition(&cap, &mut a), Outcome::Unreachable);
        assert_eq!(a, b);
    }

    #[test]
    fn outcome_states() {
        assert_eq!(Outcome::Ok.pixel_state(), PixelState::Acquired);
        assert_eq!(Outcome::HardwareError.pixel_state(), PixelState::Failed);
        assert_eq!(Outcome::CalibrationError.pixel_state(), PixelState::Failed);
        assert_eq!(Outcome::Unreachable.pixel_state(), PixelState::Unreachable);
    }

    #[test]
    fn rejects_bad_probabilities() {
        let spec = ReachabilitySpec { failure_prob_calibration: 1.5, ..ReachabilitySpec::default() };
        assert!(spec.validate().is_err());
    }
}

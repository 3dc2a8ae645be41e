//! Inverse-power weighting of absorption scores and weighted draws of the
//! next pose.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere::{PixelId, PixelState, SphereScoreMap};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Penalty exponent.
    pub s: f64,
    /// Scores below this are clamped to it before inversion.
    pub x_min: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { s: 20.0, x_min: 1.0 }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s >= 1.0 && self.s.is_finite()) {
            return Err(Error::InvalidConfig(format!("penalty s = {} must be >= 1", self.s)));
        }
        if !(self.x_min >= 1.0 && self.x_min.is_finite()) {
            return Err(Error::InvalidConfig(format!("x_min = {} must be >= 1", self.x_min)));
        }
        Ok(())
    }

    pub fn weight(&self, score: f64) -> f64 {
        1.0 / score.max(self.x_min).powf(self.s)
    }
}

/// One weight per pixel; nonzero only for untried pixels that carry a score.
pub fn build_weights(map: &SphereScoreMap, cfg: &SamplerConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let w: Vec<f64> = map
        .states()
        .iter()
        .zip(map.scores())
        .map(|(st, sc)| match (st, sc) {
            (PixelState::Untried, Some(x)) => cfg.weight(*x as f64),
            _ => 0.0,
        })
        .collect();
    if w.iter().all(|v| *v == 0.0) {
        return Err(Error::NoCandidates);
    }
    Ok(w)
}

/// Normalized probabilities `w_i / sum(w)`.
pub fn probabilities(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

/// Inverse-CDF draw over the running sums of `weights`.
pub fn sample_next<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<PixelId> {
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::NonFinite("sampling weights"));
    }
    let mut cum = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cum.push(acc);
    }
    if acc <= 0.0 {
        return Err(Error::NoCandidates);
    }
    let target = rng.random::<f64>() * acc;
    let i = cum.partition_point(|c| *c <= target);
    if i < weights.len() && weights[i] > 0.0 {
        return Ok(PixelId(i));
    }
    // Rounding pushed the target past the last sum.
    let last = weights.iter().rposition(|w| *w > 0.0).expect("positive total");
    Ok(PixelId(last))
}

/// CSV `pixel_id,weight,prob`.
pub fn write_probabilities_csv<W: std::io::Write>(weights: &[f64], mut w: W) -> Result<()> {
    writeln!(w, "pixel_id,weight,prob")?;
    for (i, (wi, p)) in weights.iter().zip(probabilities(weights)).enumerate() {
        writeln!(w, "{i},{wi:e},{p:e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::SpherePartition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_weight_always_drawn() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = [0.0, 0.0, 2.5, 0.0];
        for _ in 0..1000 {
            assert_eq!(sample_next(&w, &mut rng).unwrap(), PixelId(2));
        }
    }

    #[test]
    fn all_zero_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(sample_next(&[0.0, 0.0], &mut rng), Err(Error::NoCandidates)));
        let map = SphereScoreMap::new(SpherePartition::new(1).unwrap());
        assert!(matches!(build_weights(&map, &SamplerConfig::default()), Err(Error::NoCandidates)));
    }

    #[test]
    fn weights_follow_states() {
        let mut map = SphereScoreMap::new(SpherePartition::new(1).unwrap());
        for i in 0..12 {
            map.set_score(PixelId(i), i as u32);
        }
        map.set_acquired(PixelId(3), 3);
        map.set_undefined(PixelId(4), PixelState::Failed);
        map.set_undefined(PixelId(5), PixelState::Unreachable);
        let cfg = SamplerConfig { s: 2.0, x_min: 1.0 };
        let w = build_weights(&map, &cfg).unwrap();
        assert_eq!(w[0], 1.0);
        assert_eq!(w[1], 1.0);
        assert_eq!(w[2], 0.25);
        assert_eq!(&w[3..6], &[0.0, 0.0, 0.0]);
        assert_eq!(w[10], 0.01);
    }

    #[test]
    fn same_seed_same_draws() {
        let w = [0.3, 1.0, 0.0, 2.0, 0.7];
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| sample_next(&w, &mut rng).unwrap().0).collect::<Vec<_>>()
        };
        assert_eq!(draw(9), draw(9));
        assert_ne!(draw(9), draw(10));
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig { s: 0.5, x_min: 1.0 }.validate().is_err());
        assert!(SamplerConfig { s: 1.0, x_min: 0.5 }.validate().is_err());
        assert!(SamplerConfig::default().validate().is_ok());
    }
}

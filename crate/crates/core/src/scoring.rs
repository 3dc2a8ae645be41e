//! Absorption scores: the number of detector pixels that see any segmented
//! high absorber, plus spreading of a fresh score to nearby untried poses.

use crate::error::Result;
use crate::geometry::{ConeBeamPose, DetectorSpec};
use crate::projector::JosephProjector;
use crate::sphere::{PixelId, PixelState, SphereScoreMap};
use crate::volume::Field;

/// Relative zero threshold for line integrals.
pub const REL_EPS: f64 = 1e-9;

/// Zero threshold for a batch whose largest line integral is `max`.
pub fn eps_for_max(max: f64) -> f64 {
    if max > 0.0 {
        REL_EPS * max
    } else {
        REL_EPS
    }
}

/// L0 norm of one detector image: pixels strictly above `eps`.
pub fn l0(image: &[f64], eps: f64) -> u32 {
    image.iter().filter(|v| **v > eps).count() as u32
}

pub fn absorption_score(seg: &Field, pose: &ConeBeamPose, det: &DetectorSpec, eps: f64) -> Result<u32> {
    let proj = JosephProjector::new(seg.grid, *det, std::slice::from_ref(pose))?;
    Ok(l0(&proj.forward(&seg.data), eps))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchScores {
    pub scores: Vec<u32>,
    pub eps: f64,
}

/// Scores every pose from one batched projection. The zero threshold is
/// derived from the batch maximum and returned so single-pose calls can
/// reproduce the batch exactly.
pub fn rescore_all(seg: &Field, poses: &[ConeBeamPose], det: &DetectorSpec) -> Result<BatchScores> {
    let proj = JosephProjector::new(seg.grid, *det, poses)?;
    let sino = proj.forward(&seg.data);
    let eps = eps_for_max(sino.iter().copied().fold(0.0, f64::max));
    let n = det.n_pixels();
    let scores = if n == 0 { Vec::new() } else { sino.chunks(n).map(|v| l0(v, eps)).collect() };
    Ok(BatchScores { scores, eps })
}

/// Writes `score` onto `pixel` and onto every untried pixel whose center is
/// within `r_deg` of it. Returns how many neighbors changed hands.
pub fn spread_to_neighbors(map: &mut SphereScoreMap, pixel: PixelId, score: u32, r_deg: f64) -> Result<usize> {
    let center = map.partition().pixel_direction(pixel)?;
    map.set_score(pixel, score);
    let mut updated = 0;
    for id in map.partition().query_disc(&center, r_deg) {
        if id != pixel && map.state(id) == PixelState::Untried {
            map.set_score(id, score);
            updated += 1;
        }
    }
    Ok(updated)
}

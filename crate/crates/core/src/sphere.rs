//! Equal-area ring-ordered pixelization of the unit sphere and the per-pixel
//! score/state store that drives pose selection.
//!
//! The partition is the HEALPix construction in RING ordering: `12 * n_side^2`
//! pixels of identical solid angle arranged on `4 * n_side - 1` iso-latitude
//! rings, numbered from the north pole southwards and, within a ring, by
//! increasing azimuth.
//!
//! Directions exactly on a pixel boundary resolve through the floor operations
//! of [`SpherePartition::ang_to_pixel`]. In particular the north pole maps to
//! pixel 0 and the south pole to the first pixel of the last ring.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of pixels of a partition with resolution `n_side`.
pub fn num_pixels(n_side: u32) -> usize {
    12 * (n_side as usize) * (n_side as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PixelId(pub usize);

impl fmt::Display for PixelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Unit vector for colatitude `theta` and azimuth `phi`.
pub fn direction(theta: f64, phi: f64) -> Vector3<f64> {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vector3::new(st * cp, st * sp, ct)
}

/// Colatitude and azimuth (in `[0, 2pi)`) of a nonzero vector.
pub fn angles(v: &Vector3<f64>) -> (f64, f64) {
    let v = v.normalize();
    let theta = v.z.clamp(-1.0, 1.0).acos();
    let mut phi = v.y.atan2(v.x);
    if phi < 0.0 {
        phi += TAU;
    }
    if phi >= TAU {
        phi -= TAU;
    }
    (theta, phi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpherePartition {
    n_side: u32,
}

impl SpherePartition {
    pub fn new(n_side: u32) -> Result<Self> {
        if n_side == 0 {
            return Err(Error::InvalidConfig("n_side must be >= 1".into()));
        }
        Ok(Self { n_side })
    }

    pub fn n_side(&self) -> u32 {
        self.n_side
    }

    pub fn n_pix(&self) -> usize {
        num_pixels(self.n_side)
    }

    pub fn pixel_solid_angle(&self) -> f64 {
        4.0 * PI / self.n_pix() as f64
    }

    /// Pixels in the north polar cap (rings `1..n_side`).
    fn n_cap(&self) -> usize {
        let n = self.n_side as usize;
        2 * n * (n - 1)
    }

    pub fn n_rings(&self) -> usize {
        4 * self.n_side as usize - 1
    }

    /// First pixel index, pixel count and cosine of the colatitude of ring
    /// `ring` (1-based, north to south).
    pub fn ring_info(&self, ring: usize) -> (usize, usize, f64) {
        let n = self.n_side as usize;
        let npix = self.n_pix();
        let nf = n as f64;
        if ring < n {
            let z = 1.0 - (ring * ring) as f64 / (3.0 * nf * nf);
            (2 * ring * (ring - 1), 4 * ring, z)
        } else if ring <= 3 * n {
            let z = (2 * n) as f64 / (1.5 * nf) - ring as f64 / (1.5 * nf);
            (self.n_cap() + (ring - n) * 4 * n, 4 * n, z)
        } else {
            let i = 4 * n - ring;
            let z = -1.0 + (i * i) as f64 / (3.0 * nf * nf);
            (npix - 2 * i * (i + 1), 4 * i, z)
        }
    }

    /// Ring (1-based) containing pixel `id`.
    pub fn ring_of(&self, id: usize) -> usize {
        let n = self.n_side as usize;
        let npix = self.n_pix();
        let ncap = self.n_cap();
        if id < ncap {
            (1 + isqrt(1 + 2 * id)) >> 1
        } else if id < npix - ncap {
            (id - ncap) / (4 * n) + n
        } else {
            let ip = npix - id;
            4 * n - ((1 + isqrt(2 * ip - 1)) >> 1)
        }
    }

    fn check(&self, id: PixelId) -> Result<()> {
        if id.0 >= self.n_pix() {
            return Err(Error::PixelOutOfRange {
                id: id.0,
                n_pix: self.n_pix(),
            });
        }
        Ok(())
    }

    /// Center of pixel `id` as (colatitude, azimuth) in radians.
    pub fn pixel_center(&self, id: PixelId) -> Result<(f64, f64)> {
        self.check(id)?;
        let n = self.n_side as usize;
        let npix = self.n_pix();
        let ncap = self.n_cap();
        let p = id.0;
        let (z, phi) = if p < ncap {
            let ring = (1 + isqrt(1 + 2 * p)) >> 1;
            let iphi = p + 1 - 2 * ring * (ring - 1);
            let z = 1.0 - (ring * ring) as f64 * 4.0 / npix as f64;
            (z, (iphi as f64 - 0.5) * FRAC_PI_2 / ring as f64)
        } else if p < npix - ncap {
            let ip = p - ncap;
            let ring = ip / (4 * n) + n;
            let iphi = ip % (4 * n) + 1;
            let fodd = if (ring + n) & 1 == 1 { 1.0 } else { 0.5 };
            let z = (2 * n) as f64 * 2.0 / (3.0 * n as f64) - ring as f64 * 2.0 / (3.0 * n as f64);
            (z, (iphi as f64 - fodd) * PI / (2 * n) as f64)
        } else {
            let ip = npix - p;
            let ring = (1 + isqrt(2 * ip - 1)) >> 1;
            let iphi = 4 * ring + 1 - (ip - 2 * ring * (ring - 1));
            let z = -1.0 + (ring * ring) as f64 * 4.0 / npix as f64;
            (z, (iphi as f64 - 0.5) * FRAC_PI_2 / ring as f64)
        };
        Ok((z.clamp(-1.0, 1.0).acos(), phi))
    }

    pub fn pixel_direction(&self, id: PixelId) -> Result<Vector3<f64>> {
        let (theta, phi) = self.pixel_center(id)?;
        Ok(direction(theta, phi))
    }

    /// Pixel containing the direction (colatitude `theta`, azimuth `phi`).
    pub fn ang_to_pixel(&self, theta: f64, phi: f64) -> PixelId {
        self.zphi_to_pixel(theta.cos(), phi)
    }

    pub fn vec_to_pixel(&self, v: &Vector3<f64>) -> PixelId {
        let v = v.normalize();
        let mut phi = v.y.atan2(v.x);
        if phi < 0.0 {
            phi += TAU;
        }
        self.zphi_to_pixel(v.z, phi)
    }

    fn zphi_to_pixel(&self, z: f64, phi: f64) -> PixelId {
        let n = self.n_side as i64;
        let npix = self.n_pix() as i64;
        let ncap = self.n_cap() as i64;
        let z = z.clamp(-1.0, 1.0);
        let za = z.abs();
        let mut tt = phi.rem_euclid(TAU) / FRAC_PI_2;
        // The azimuth is meaningless at the poles; pin it so each pole maps
        // to a single pixel.
        if tt >= 4.0 || za >= 1.0 {
            tt = 0.0;
        }
        let nf = n as f64;
        let pix = if za <= 2.0 / 3.0 {
            let temp1 = nf * (0.5 + tt);
            let temp2 = nf * z * 0.75;
            let jp = (temp1 - temp2).floor() as i64;
            let jm = (temp1 + temp2).floor() as i64;
            let ir = n + 1 + jp - jm;
            let kshift = 1 - (ir & 1);
            let ip = (jp + jm - n + kshift + 1).div_euclid(2);
            let ip = ip.rem_euclid(4 * n);
            ncap + (ir - 1) * 4 * n + ip
        } else {
            let tp = tt - tt.floor();
            let tmp = nf * (3.0 * (1.0 - za)).sqrt();
            let jp = (tp * tmp).floor() as i64;
            let jm = ((1.0 - tp) * tmp).floor() as i64;
            let ir = (jp + jm + 1).min(n);
            let ip = ((tt * ir as f64).floor() as i64).rem_euclid(4 * ir);
            if z > 0.0 {
                2 * ir * (ir - 1) + ip
            } else {
                npix - 2 * ir * (ir + 1) + ip
            }
        };
        PixelId(pix as usize)
    }

    /// Pixels whose centers lie within `radius_deg` degrees of `center`, plus
    /// the pixel containing `center`. Sorted by index.
    pub fn query_disc(&self, center: &Vector3<f64>, radius_deg: f64) -> Vec<PixelId> {
        let c = center.normalize();
        let radius = radius_deg.clamp(0.0, 180.0).to_radians();
        let cos_r = radius.cos();
        let (theta_c, _) = angles(&c);
        let lo = (theta_c - radius).max(0.0);
        let hi = (theta_c + radius).min(PI);
        let home = self.vec_to_pixel(&c);
        let mut out = vec![home];
        for ring in 1..=self.n_rings() {
            let (first, count, z) = self.ring_info(ring);
            let theta = z.clamp(-1.0, 1.0).acos();
            // small slack so that rounding in acos never drops a ring
            if theta < lo - 1e-9 || theta > hi + 1e-9 {
                continue;
            }
            for p in first..first + count {
                let id = PixelId(p);
                let d = self.pixel_direction(id).expect("pixel in range");
                if id != home && within_disc(&c, &d, cos_r) {
                    out.push(id);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Disc membership predicate shared by all disc queries.
pub fn within_disc(center: &Vector3<f64>, dir: &Vector3<f64>, cos_radius: f64) -> bool {
    center.dot(dir) >= cos_radius
}

fn isqrt(v: usize) -> usize {
    let mut r = (v as f64).sqrt() as usize;
    while r * r > v {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= v {
        r += 1;
    }
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PixelState {
    Untried,
    Unreachable,
    Failed,
    Acquired,
}

impl PixelState {
    pub fn as_str(&self) -> &'static str {
        match self {
            PixelState::Untried => "untried",
            PixelState::Unreachable => "unreachable",
            PixelState::Failed => "failed",
            PixelState::Acquired => "acquired",
        }
    }
}

impl fmt::Display for PixelState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PixelState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "untried" => Ok(PixelState::Untried),
            "unreachable" => Ok(PixelState::Unreachable),
            "failed" => Ok(PixelState::Failed),
            "acquired" => Ok(PixelState::Acquired),
            other => Err(Error::Parse(format!("unknown pixel state `{other}`"))),
        }
    }
}

/// Per-pixel pose state and L0 absorption score.
///
/// Only `Untried` and `Acquired` pixels may carry a score, and `Acquired`
/// pixels always do.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereScoreMap {
    partition: SpherePartition,
    states: Vec<PixelState>,
    scores: Vec<Option<u32>>,
}

impl SphereScoreMap {
    pub fn new(partition: SpherePartition) -> Self {
        let n = partition.n_pix();
        Self {
            partition,
            states: vec![PixelState::Untried; n],
            scores: vec![None; n],
        }
    }

    pub fn partition(&self) -> &SpherePartition {
        &self.partition
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, id: PixelId) -> PixelState {
        self.states[id.0]
    }

    pub fn score(&self, id: PixelId) -> Option<u32> {
        self.scores[id.0]
    }

    pub fn states(&self) -> &[PixelState] {
        &self.states
    }

    pub fn scores(&self) -> &[Option<u32>] {
        &self.scores
    }

    pub fn count(&self, state: PixelState) -> usize {
        self.states.iter().filter(|s| **s == state).count()
    }

    pub fn set_acquired(&mut self, id: PixelId, score: u32) {
        self.states[id.0] = PixelState::Acquired;
        self.scores[id.0] = Some(score);
    }

    /// Marks a pixel as unusable; its score is dropped.
    pub fn set_undefined(&mut self, id: PixelId, state: PixelState) {
        debug_assert!(matches!(state, PixelState::Unreachable | PixelState::Failed));
        self.states[id.0] = state;
        self.scores[id.0] = None;
    }

    /// Sets the score of an `Untried` or `Acquired` pixel. Returns false and
    /// leaves the map unchanged for `Unreachable`/`Failed` pixels.
    pub fn set_score(&mut self, id: PixelId, score: u32) -> bool {
        match self.states[id.0] {
            PixelState::Untried | PixelState::Acquired => {
                self.scores[id.0] = Some(score);
                true
            }
            _ => false,
        }
    }

    /// Transfers scores and states to a denser partition: every pixel of
    /// `high` takes the state and score of the low-density pixel containing
    /// its center. Acquired low pixels yield scored `Untried` high pixels,
    /// `Unreachable` stays `Unreachable`, and `Failed` yields unscored
    /// `Untried` pixels (weight zero until a neighbor update scores them).
    pub fn transfer_scores(&self, high: SpherePartition) -> Result<SphereScoreMap> {
        if high.n_side() <= self.partition.n_side() {
            return Err(Error::InvalidConfig(format!(
                "transfer target n_side {} must exceed source n_side {}",
                high.n_side(),
                self.partition.n_side()
            )));
        }
        let mut out = SphereScoreMap::new(high);
        for p in 0..high.n_pix() {
            let (theta, phi) = high.pixel_center(PixelId(p))?;
            let parent = self.partition.ang_to_pixel(theta, phi);
            match self.state(parent) {
                PixelState::Unreachable => out.set_undefined(PixelId(p), PixelState::Unreachable),
                PixelState::Failed => {}
                PixelState::Untried | PixelState::Acquired => {
                    out.scores[p] = self.score(parent);
                }
            }
        }
        Ok(out)
    }

    /// Indices of the high-density pixels whose centers fall in low pixel
    /// `parent` of `low`.
    pub fn children_of(low: &SpherePartition, high: &SpherePartition, parent: PixelId) -> Vec<PixelId> {
        (0..high.n_pix())
            .map(PixelId)
            .filter(|&p| {
                let (t, ph) = high.pixel_center(p).expect("pixel in range");
                low.ang_to_pixel(t, ph) == parent
            })
            .collect()
    }

    /// CSV with header `pixel_id,theta_rad,phi_rad,state,score`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "pixel_id,theta_rad,phi_rad,state,score")?;
        for p in 0..self.len() {
            let (theta, phi) = self.partition.pixel_center(PixelId(p))?;
            let score = self.scores[p].map(|s| s.to_string()).unwrap_or_default();
            writeln!(w, "{p},{theta},{phi},{},{score}", self.states[p])?;
        }
        Ok(())
    }

    /// Reads the format written by [`write_csv`](Self::write_csv). The
    /// partition is inferred from the row count.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            if lineno == 0 {
                if line.trim() != "pixel_id,theta_rad,phi_rad,state,score" {
                    return Err(Error::Parse(format!("unexpected score map header `{line}`")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::Parse(format!("line {}: expected 5 fields", lineno + 1)));
            }
            let id: usize = f[0]
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad pixel id", lineno + 1)))?;
            let state: PixelState = f[3].parse()?;
            let score = if f[4].is_empty() {
                None
            } else {
                Some(
                    f[4].parse::<u32>()
                        .map_err(|_| Error::Parse(format!("line {}: bad score", lineno + 1)))?,
                )
            };
            rows.push((id, state, score));
        }
        let n_side = ((rows.len() / 12) as f64).sqrt().round() as u32;
        if n_side == 0 || num_pixels(n_side) != rows.len() {
            return Err(Error::Parse(format!("{} rows is not a valid pixel count", rows.len())));
        }
        let mut map = SphereScoreMap::new(SpherePartition::new(n_side)?);
        for (id, state, score) in rows {
            if id >= map.len() {
                return Err(Error::Parse(format!("pixel id {id} out of range")));
            }
            match (state, score) {
                (PixelState::Acquired, None) => {
                    return Err(Error::Parse(format!("acquired pixel {id} has no score")))
                }
                (PixelState::Unreachable | PixelState::Failed, Some(_)) => {
                    return Err(Error::Parse(format!("{state} pixel {id} carries a score")))
                }
                _ => {}
            }
            map.states[id] = state;
            map.scores[id] = score;
        }
        Ok(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dir(rng: &mut impl Rng) -> Vector3<f64> {
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..TAU);
        let s = (1.0 - z * z).sqrt();
        Vector3::new(s * phi.cos(), s * phi.sin(), z)
    }

    #[test]
    fn pixel_counts() {
        for (n, expect) in [(1, 12), (2, 48), (3, 108), (9, 972), (18, 3888)] {
            assert_eq!(num_pixels(n), expect);
            assert_eq!(SpherePartition::new(n).unwrap().n_pix(), expect);
        }
        assert!(SpherePartition::new(0).is_err());
    }

    #[test]
    fn ring_of_matches_ring_table() {
        for n in [1, 2, 5, 8] {
            let p = SpherePartition::new(n).unwrap();
            for ring in 1..=p.n_rings() {
                let (first, count, _) = p.ring_info(ring);
                for id in first..first + count {
                    assert_eq!(p.ring_of(id), ring);
                }
            }
        }
    }

    #[test]
    fn first_pixel_center_nside1() {
        let p = SpherePartition::new(1).unwrap();
        let (t, ph) = p.pixel_center(PixelId(0)).unwrap();
        assert_relative_eq!(t, (2.0f64 / 3.0).acos(), epsilon = 1e-15);
        assert_relative_eq!(ph, PI / 4.0, epsilon = 1e-15);
        let (t, _) = p.pixel_center(PixelId(4)).unwrap();
        assert_relative_eq!(t, FRAC_PI_2, epsilon = 1e-15);
        assert!(p.pixel_center(PixelId(12)).is_err());
    }

    /// Independent ring-by-ring enumeration of the pixel centers.
    fn ring_oracle(n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let nf = n as f64;
        for ring in 1..4 * n {
            let (z, count, shift) = if ring < n {
                (1.0 - (ring * ring) as f64 / (3.0 * nf * nf), 4 * ring, 0.5)
            } else if ring <= 3 * n {
                let s = if (ring - n) % 2 == 0 { 0.5 } else { 0.0 };
                (4.0 / 3.0 - 2.0 * ring as f64 / (3.0 * nf), 4 * n, s)
            } else {
                let i = 4 * n - ring;
                (-1.0 + (i * i) as f64 / (3.0 * nf * nf), 4 * i, 0.5)
            };
            for j in 0..count {
                out.push((z.acos(), (j as f64 + shift) * TAU / count as f64));
            }
        }
        out
    }

    #[test]
    fn centers_match_ring_enumeration() {
        for n in [1usize, 2, 3, 4, 9] {
            let p = SpherePartition::new(n as u32).unwrap();
            for (i, (t, ph)) in ring_oracle(n).into_iter().enumerate() {
                let (ct, cph) = p.pixel_center(PixelId(i)).unwrap();
                assert!((ct - t).abs() < 1e-12, "n={n} id={i}");
                assert!((cph - ph).abs() < 1e-12, "n={n} id={i}");
            }
        }
    }

    #[test]
    fn monte_carlo_centroid_near_center() {
        // Area centroid of pixel 0 at n_side = 1, by rejection sampling.
        let p = SpherePartition::new(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut acc = Vector3::zeros();
        for _ in 0..200_000 {
            let d = random_dir(&mut rng);
            if p.vec_to_pixel(&d) == PixelId(0) {
                acc += d;
            }
        }
        let c = p.pixel_direction(PixelId(0)).unwrap();
        let ang = acc.normalize().dot(&c).clamp(-1.0, 1.0).acos().to_degrees();
        assert!(ang < 3.0, "centroid off by {ang} deg");
    }

    #[test]
    fn round_trip_all_pixels() {
        for n in 1..=9 {
            let p = SpherePartition::new(n).unwrap();
            for i in 0..p.n_pix() {
                let (t, ph) = p.pixel_center(PixelId(i)).unwrap();
                assert_eq!(p.ang_to_pixel(t, ph), PixelId(i), "n={n}");
            }
        }
    }

    #[test]
    fn poles() {
        let p = SpherePartition::new(1).unwrap();
        assert_eq!(p.ang_to_pixel(0.0, 0.0), PixelId(0));
        assert_eq!(p.ang_to_pixel(0.0, 5.0), PixelId(0));
        assert_eq!(p.ang_to_pixel(PI, 0.0), PixelId(8));
        let p = SpherePartition::new(4).unwrap();
        assert_eq!(p.ang_to_pixel(0.0, 0.0), PixelId(0));
    }

    #[test]
    fn disc_edge_cases() {
        let p = SpherePartition::new(3).unwrap();
        let c = direction(1.0, 2.0);
        assert_eq!(p.query_disc(&c, 180.0).len(), p.n_pix());
        assert_eq!(p.query_disc(&c, 0.0), vec![p.vec_to_pixel(&c)]);
    }

    #[test]
    fn disc_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2u32, 5, 18] {
            let p = SpherePartition::new(n).unwrap();
            for _ in 0..50 {
                let c = random_dir(&mut rng);
                let r: f64 = rng.random_range(0.0..60.0);
                let expect: Vec<PixelId> = (0..p.n_pix())
                    .map(PixelId)
                    .filter(|&id| {
                        let d = p.pixel_direction(id).unwrap();
                        let ang = c.cross(&d).norm().atan2(c.dot(&d)).to_degrees();
                        ang <= r || id == p.vec_to_pixel(&c)
                    })
                    .collect();
                assert_eq!(p.query_disc(&c, r), expect);
            }
        }
    }

    #[test]
    fn transfer_one_scored_pixel() {
        let low = SpherePartition::new(3).unwrap();
        let high = SpherePartition::new(18).unwrap();
        let mut m = SphereScoreMap::new(low);
        for i in 0..low.n_pix() {
            m.set_undefined(PixelId(i), PixelState::Unreachable);
        }
        m.states[40] = PixelState::Acquired;
        m.scores[40] = Some(118);
        let h = m.transfer_scores(high).unwrap();
        let carrying = h.scores().iter().filter(|s| **s == Some(118)).count();
        assert_eq!(carrying, SphereScoreMap::children_of(&low, &high, PixelId(40)).len());
        // equal area: 3888 / 108 = 36 children on average
        assert!((30..=42).contains(&carrying), "{carrying}");
        assert_eq!(h.count(PixelState::Unreachable), high.n_pix() - carrying);
        assert_eq!(h.transfer_scores(SpherePartition::new(19).unwrap()).is_ok(), true);
        assert_eq!(m.transfer_scores(high).unwrap(), h);
    }

    #[test]
    fn transfer_requires_denser_target() {
        let m = SphereScoreMap::new(SpherePartition::new(3).unwrap());
        assert!(m.transfer_scores(SpherePartition::new(3).unwrap()).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let mut m = SphereScoreMap::new(SpherePartition::new(2).unwrap());
        m.set_acquired(PixelId(3), 17);
        m.set_undefined(PixelId(4), PixelState::Failed);
        m.set_undefined(PixelId(5), PixelState::Unreachable);
        m.set_score(PixelId(6), 2);
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let back = SphereScoreMap::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        let bad = "pixel_id,theta_rad,phi_rad,state,score\n0,0,0,acquired,\n";
        assert!(SphereScoreMap::read_csv(bad.as_bytes()).is_err());
    }
}

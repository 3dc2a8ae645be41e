//! Scout scan, score initialization, the optimization loop and the two
//! baseline trajectories.
//!
//! Measurements are simulated by projecting the ground-truth phantom. The
//! loop reconstructs, segments and rescores from scratch after every
//! successful acquisition, so each draw sees the newest segmentation.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ReconStage};
use crate::error::{Error, Result};
use crate::geometry::{pose_from_pixel, ConeBeamPose, DetectorSpec};
use crate::phantom::build_phantom;
use crate::projector::{JosephProjector, Sinogram};
use crate::recon::{reconstruct, ProbeSet, ReconConfig, Reconstruction, Regularization, PROBE_SEED};
use crate::robot::Outcome;
use crate::sampler::{build_weights, sample_next};
use crate::scoring::{rescore_all, spread_to_neighbors};
use crate::segmentation::{segment_high_absorbers, Segmentation};
use crate::sphere::{PixelId, PixelState, SpherePartition, SphereScoreMap};
use crate::volume::{MaterialVolume, RegionTable};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Optimized,
    WholeSphere,
    Random,
}

impl Strategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Optimized => "optimized",
            Strategy::WholeSphere => "whole-sphere",
            Strategy::Random => "random",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimized" => Ok(Strategy::Optimized),
            "whole-sphere" | "whole_sphere" => Ok(Strategy::WholeSphere),
            "random" => Ok(Strategy::Random),
            other => Err(Error::Parse(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Scout,
    Loop,
    Baseline,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Scout => "scout",
            Phase::Loop => "loop",
            Phase::Baseline => "baseline",
        }
    }
}

/// One pose attempt.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    /// 0 for scout and baseline attempts, 1-based for loop attempts.
    pub iteration: usize,
    pub phase: Phase,
    pub n_side: u32,
    pub pixel_id: usize,
    pub theta: f64,
    pub phi: f64,
    pub outcome: Outcome,
    /// Score that drove the selection; for scout poses the score assigned
    /// at initialization.
    pub score: Option<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreLogEntry {
    pub iteration: usize,
    pub pixel_id: usize,
    pub score: u32,
    pub updated_neighbors: usize,
}

/// Acquired poses and their images, in acquisition order.
#[derive(Clone, Debug)]
pub struct ImagePool {
    pub poses: Vec<ConeBeamPose>,
    pub sinogram: Sinogram,
}

impl ImagePool {
    pub fn new(det: &DetectorSpec) -> Self {
        Self {
            poses: Vec::new(),
            sinogram: Sinogram::zeros(0, det.rows, det.cols),
        }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn push(&mut self, pose: ConeBeamPose, image: &[f64]) -> Result<()> {
        self.sinogram.push_view(image)?;
        self.poses.push(pose);
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BudgetExhausted,
    /// No candidate pose remained after `attempts` loop attempts.
    CandidatesExhausted { attempts: usize },
}

impl Termination {
    pub fn is_truncated(&self) -> bool {
        matches!(self, Termination::CandidatesExhausted { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub strategy: Strategy,
}

#[derive(Clone, Debug)]
pub struct TrajectoryRun {
    pub records: Vec<AttemptRecord>,
    pub pool: ImagePool,
    pub final_map: SphereScoreMap,
    /// Low-density scout map with its latest scores (optimized runs only).
    pub scout_map: Option<SphereScoreMap>,
    pub score_log: Vec<ScoreLogEntry>,
    /// Last coarse segmentation of the optimization loop.
    pub segmentation: Option<Segmentation>,
    pub termination: Termination,
    pub provenance: Provenance,
    /// Wall-clock seconds per stage.
    pub timings: Vec<(String, f64)>,
}

impl TrajectoryRun {
    pub fn ok_count(&self) -> usize {
        self.records.iter().filter(|r| r.outcome == Outcome::Ok).count()
    }

    /// CSV `iteration,phase,n_side,pixel_id,theta_rad,phi_rad,outcome,score`.
    pub fn write_records_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iteration,phase,n_side,pixel_id,theta_rad,phi_rad,outcome,score")?;
        for r in &self.records {
            let score = r.score.map(|s| s.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{score}",
                r.iteration,
                r.phase.as_str(),
                r.n_side,
                r.pixel_id,
                r.theta,
                r.phi,
                r.outcome
            )?;
        }
        Ok(())
    }

    /// CSV `iter,pixel_id,score,updated_neighbors`.
    pub fn write_score_log_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,pixel_id,score,updated_neighbors")?;
        for e in &self.score_log {
            writeln!(w, "{},{},{},{}", e.iteration, e.pixel_id, e.score, e.updated_neighbors)?;
        }
        Ok(())
    }

    /// Writes records, score log, score map, image pool and segmentation.
    /// Returns the written paths.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let mut csv = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> Result<()>| -> Result<()> {
            let mut buf = Vec::new();
            f(&mut buf)?;
            let p = dir.join(name);
            std::fs::write(&p, buf)?;
            out.push(p);
            Ok(())
        };
        csv("trajectory.csv", &|b| self.write_records_csv(b))?;
        csv("score_log.csv", &|b| self.write_score_log_csv(b))?;
        csv("score_map.csv", &|b| self.final_map.write_csv(b))?;
        let sino = self.pool.sinogram.save(dir, "sinogram", &self.pool.poses)?;
        out.push(dir.join("sinogram.raw"));
        out.push(sino);
        if let Some(seg) = &self.segmentation {
            out.push(seg.volume.save(dir, "segmentation")?);
            out.push(dir.join("segmentation.raw"));
            let p = dir.join("segmentation_log.json");
            std::fs::write(&p, serde_json::to_string_pretty(&seg.log)?)?;
            out.push(p);
        }
        Ok(out)
    }
}

/// Everything a loop iteration exposes to an observer.
pub struct LoopEvent<'a> {
    pub iteration: usize,
    pub weights: &'a [f64],
    pub record: &'a AttemptRecord,
    pub pool_size: usize,
}

/// Ground-truth phantom plus measurement simulation.
pub struct Experiment {
    pub cfg: ExperimentConfig,
    pub phantom: MaterialVolume,
    pub regions: RegionTable,
}

struct Rngs {
    robot: ChaCha8Rng,
    sampler: ChaCha8Rng,
    noise: ChaCha8Rng,
}

impl Rngs {
    fn new(seed: u64) -> Self {
        let stream = |s| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(s);
            r
        };
        Self { robot: stream(1), sampler: stream(2), noise: stream(3) }
    }
}

/// Averages `b x b` blocks of detector pixels.
pub fn bin_sinogram(sino: &Sinogram, b: usize) -> Sinogram {
    if b == 1 {
        return sino.clone();
    }
    let (rows, cols) = (sino.rows / b, sino.cols / b);
    let mut out = Sinogram::zeros(sino.n_views, rows, cols);
    let norm = 1.0 / (b * b) as f64;
    for v in 0..sino.n_views {
        let src = sino.view(v);
        let dst = out.view_mut(v);
        for r in 0..rows * b {
            for c in 0..cols * b {
                dst[(r / b) * cols + c / b] += norm * src[r * sino.cols + c];
            }
        }
    }
    out
}

pub fn binned_detector(det: &DetectorSpec, b: usize) -> DetectorSpec {
    DetectorSpec {
        rows: det.rows / b,
        cols: det.cols / b,
        pixel_pitch: det.pixel_pitch * b as f64,
        ..*det
    }
}

/// Reconstructs `pool` with the settings of one recon stage.
pub fn reconstruct_stage(pool: &ImagePool, det: &DetectorSpec, stage: &ReconStage) -> Result<Reconstruction> {
    reconstruct_stage_cached(pool, det, stage, None)
}

/// Probe energies of the views already in a growing pool, so automatic
/// regularization only projects the probes through new views.
pub struct LambdaCache {
    probes: ProbeSet,
    energies: Vec<f64>,
}

fn reconstruct_stage_cached(
    pool: &ImagePool,
    det: &DetectorSpec,
    stage: &ReconStage,
    cache: Option<&mut LambdaCache>,
) -> Result<Reconstruction> {
    let sino = bin_sinogram(&pool.sinogram, stage.detector_binning);
    let det = binned_detector(det, stage.detector_binning);
    let grid = stage.grid.grid()?;
    let regularization = match (stage.regularization, cache) {
        (Regularization::RelativeToDiagonal { scale, probes }, Some(cache)) => {
            if cache.probes.len() != probes || cache.energies.len() > pool.len() {
                *cache = LambdaCache { probes: ProbeSet::new(grid.len(), probes, PROBE_SEED), energies: Vec::new() };
            }
            let done = cache.energies.len();
            if done < pool.len() {
                let proj = JosephProjector::new(grid, det, &pool.poses[done..])?;
                cache.energies.extend(cache.probes.view_energies(&proj));
            }
            Regularization::Fixed { lambda: scale * cache.probes.mean_diagonal(&cache.energies) }
        }
        (r, _) => r,
    };
    let cfg = ReconConfig { grid, regularization, iterations: stage.iterations, weights: None };
    reconstruct(&sino, &pool.poses, &det, &cfg)
}

impl LambdaCache {
    pub fn new(stage: &ReconStage) -> Result<Self> {
        let probes = match stage.regularization {
            Regularization::RelativeToDiagonal { probes, .. } => probes,
            Regularization::Fixed { .. } => 0,
        };
        Ok(Self { probes: ProbeSet::new(stage.grid.grid()?.len(), probes, PROBE_SEED), energies: Vec::new() })
    }
}

/// Mean absorption score of `poses` under a segmentation.
pub fn mean_score(seg: &Segmentation, poses: &[ConeBeamPose], det: &DetectorSpec) -> Result<f64> {
    if poses.is_empty() {
        return Ok(0.0);
    }
    let b = rescore_all(&seg.volume, poses, det)?;
    Ok(b.scores.iter().map(|s| *s as f64).sum::<f64>() / poses.len() as f64)
}

struct Timer(Vec<(String, f64)>);

impl Timer {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let v = f();
        let dt = t.elapsed().as_secs_f64();
        match self.0.iter_mut().find(|(n, _)| n == name) {
            Some(e) => e.1 += dt,
            None => self.0.push((name.to_string(), dt)),
        }
        v
    }
}

/// Output of the scout scan.
pub struct ScoutScan {
    pub pool: ImagePool,
    pub map: SphereScoreMap,
    pub records: Vec<AttemptRecord>,
}

/// Output of score initialization.
pub struct ScoreInit {
    pub high_map: SphereScoreMap,
    pub coarse: Reconstruction,
    pub segmentation: Segmentation,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let spec = cfg.phantom.spec()?;
        let phantom = build_phantom(&spec)?;
        let regions = spec.regions();
        Ok(Self { cfg, phantom, regions })
    }

    pub fn detector(&self) -> &DetectorSpec {
        &self.cfg.detector
    }

    fn provenance(&self, strategy: Strategy) -> Result<Provenance> {
        Ok(Provenance { config_hash: self.cfg.hash()?, seed: self.cfg.seed, strategy })
    }

    /// Simulated detector image of the phantom at `pose`.
    fn measure(&self, pose: &ConeBeamPose, noise_rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let proj = JosephProjector::new(self.phantom.mu.grid, self.cfg.detector, std::slice::from_ref(pose))?;
        let mut img = proj.forward(&self.phantom.mu.data);
        let n = &self.cfg.noise;
        if n.enabled {
            for v in img.iter_mut() {
                let expected = n.i0 * (-n.attenuation_scale * *v).exp();
                let counts = if expected > 0.0 {
                    Poisson::new(expected).map(|d| d.sample(noise_rng)).unwrap_or(0.0)
                } else {
                    0.0
                };
                *v = (n.i0 / counts.max(1.0)).ln() / n.attenuation_scale;
            }
        }
        Ok(img)
    }

    fn scout_with(&self, rngs: &mut Rngs) -> Result<ScoutScan> {
        let part = SpherePartition::new(self.cfg.sphere.n_side_low)?;
        let mut map = SphereScoreMap::new(part);
        let mut pool = ImagePool::new(self.detector());
        let mut records = Vec::new();
        for p in 0..part.n_pix() {
            let id = PixelId(p);
            let pose = pose_from_pixel(&part, id, 0.0)?;
            let outcome = self.cfg.reachability.attempt_acquisition(&pose.direction(), &mut rngs.robot);
            if outcome == Outcome::Ok {
                let img = self.measure(&pose, &mut rngs.noise)?;
                pool.push(pose, &img)?;
                map.set_acquired(id, 0);
            } else {
                map.set_undefined(id, outcome.pixel_state());
            }
            records.push(AttemptRecord {
                iteration: 0,
                phase: Phase::Scout,
                n_side: part.n_side(),
                pixel_id: p,
                theta: pose.theta,
                phi: pose.phi,
                outcome,
                score: None,
            });
        }
        if pool.is_empty() {
            return Err(Error::EmptyScout);
        }
        Ok(ScoutScan { pool, map, records })
    }

    /// Attempts every pixel of the low-density grid in index order.
    pub fn scout_scan(&self) -> Result<ScoutScan> {
        self.scout_with(&mut Rngs::new(self.cfg.seed))
    }

    fn coarse_segmentation(&self, pool: &ImagePool, cache: &mut LambdaCache) -> Result<(Reconstruction, Segmentation)> {
        let rec = reconstruct_stage_cached(pool, self.detector(), &self.cfg.coarse, Some(cache))?;
        let seg = segment_high_absorbers(&rec.volume, &self.regions, &self.cfg.segmentation)?;
        Ok((rec, seg))
    }

    /// Coarse reconstruction and segmentation of the scout images, scores
    /// for every scout pose, and transfer to the high-density grid.
    pub fn score_init(&self, scout: &mut ScoutScan) -> Result<ScoreInit> {
        self.score_init_cached(scout, &mut LambdaCache::new(&self.cfg.coarse)?)
    }

    fn score_init_cached(&self, scout: &mut ScoutScan, cache: &mut LambdaCache) -> Result<ScoreInit> {
        let (coarse, segmentation) = self.coarse_segmentation(&scout.pool, cache)?;
        let scores = rescore_all(&segmentation.volume, &scout.pool.poses, self.detector())?.scores;
        let acquired: Vec<usize> = scout
            .records
            .iter()
            .filter(|r| r.outcome == Outcome::Ok)
            .map(|r| r.pixel_id)
            .collect();
        for (&p, &s) in acquired.iter().zip(&scores) {
            scout.map.set_acquired(PixelId(p), s);
        }
        for r in scout.records.iter_mut() {
            r.score = scout.map.score(PixelId(r.pixel_id));
        }
        let high_map = scout.map.transfer_scores(SpherePartition::new(self.cfg.sphere.n_side_high)?)?;
        Ok(ScoreInit { high_map, coarse, segmentation })
    }

    pub fn run_optimized(&self) -> Result<TrajectoryRun> {
        self.run_optimized_with(&mut |_| {})
    }

    /// Scout scan, score initialization and the loop, calling `observer`
    /// after every loop attempt.
    pub fn run_optimized_with(&self, observer: &mut dyn FnMut(&LoopEvent)) -> Result<TrajectoryRun> {
        let cfg = &self.cfg;
        let det = self.detector();
        let mut timer = Timer(Vec::new());
        let mut rngs = Rngs::new(cfg.seed);
        let mut scout = timer.time("scout_scan", || self.scout_with(&mut rngs))?;
        let mut cache = LambdaCache::new(&cfg.coarse)?;
        let init = timer.time("score_init", || self.score_init_cached(&mut scout, &mut cache))?;
        let mut map = init.high_map;
        let mut segmentation = init.segmentation;
        let mut pool = scout.pool;
        let mut records = scout.records;
        let n_scout_ok = pool.len();
        let scout_pixels: Vec<PixelId> = records
            .iter()
            .filter(|r| r.outcome == Outcome::Ok)
            .map(|r| PixelId(r.pixel_id))
            .collect();
        let high = *map.partition();
        // High-density pixels acquired in the loop, in pool order after the
        // scout images.
        let mut loop_pixels: Vec<PixelId> = Vec::new();
        let mut score_log = Vec::new();
        let mut termination = Termination::BudgetExhausted;

        for iteration in 1..=cfg.loop_.budget {
            let weights = match build_weights(&map, &cfg.sampler) {
                Ok(w) => w,
                Err(Error::NoCandidates) => {
                    termination = Termination::CandidatesExhausted { attempts: iteration - 1 };
                    break;
                }
                Err(e) => return Err(e),
            };
            let pick = sample_next(&weights, &mut rngs.sampler)?;
            let pose = pose_from_pixel(&high, pick, 0.0)?;
            let outcome = cfg.reachability.attempt_acquisition(&pose.direction(), &mut rngs.robot);
            let record = AttemptRecord {
                iteration,
                phase: Phase::Loop,
                n_side: high.n_side(),
                pixel_id: pick.0,
                theta: pose.theta,
                phi: pose.phi,
                outcome,
                score: map.score(pick),
            };
            if outcome == Outcome::Ok {
                let img = timer.time("measure", || self.measure(&pose, &mut rngs.noise))?;
                pool.push(pose, &img)?;
                map.set_acquired(pick, 0);
                loop_pixels.push(pick);
                let (_, seg) = timer.time("coarse_recon", || self.coarse_segmentation(&pool, &mut cache))?;
                segmentation = seg;
                let scores = timer.time("rescore", || rescore_all(&segmentation.volume, &pool.poses, det))?.scores;
                for (px, &s) in scout_pixels.iter().zip(&scores[..n_scout_ok]) {
                    scout.map.set_score(*px, s);
                }
                for (px, &s) in loop_pixels.iter().zip(&scores[n_scout_ok..]) {
                    map.set_score(*px, s);
                }
                let newest = *scores.last().expect("pool is nonempty");
                let updated = if cfg.loop_.spread_all_poses {
                    let mut n = 0;
                    for (px, &s) in loop_pixels.iter().zip(&scores[n_scout_ok..]) {
                        let k = spread_to_neighbors(&mut map, *px, s, cfg.sphere.r_deg)?;
                        if *px == pick {
                            n = k;
                        }
                    }
                    n
                } else {
                    spread_to_neighbors(&mut map, pick, newest, cfg.sphere.r_deg)?
                };
                score_log.push(ScoreLogEntry { iteration, pixel_id: pick.0, score: newest, updated_neighbors: updated });
            } else {
                map.set_undefined(pick, outcome.pixel_state());
            }
            records.push(record);
            observer(&LoopEvent { iteration, weights: &weights, record: &record, pool_size: pool.len() });
        }

        Ok(TrajectoryRun {
            records,
            pool,
            final_map: map,
            scout_map: Some(scout.map),
            score_log,
            segmentation: Some(segmentation),
            termination,
            provenance: self.provenance(Strategy::Optimized)?,
            timings: timer.0,
        })
    }

    /// Every reachable pixel of the whole-sphere grid, in index order.
    pub fn run_whole_sphere(&self) -> Result<TrajectoryRun> {
        let part = SpherePartition::new(self.cfg.baselines.whole_sphere_n_side)?;
        let order: Vec<usize> = (0..part.n_pix()).collect();
        self.run_baseline(Strategy::WholeSphere, part, &order, None)
    }

    /// Poses drawn without replacement from the dense grid until `target`
    /// acquisitions succeed. Without a target the configured one, or else
    /// the whole-sphere reachable count, is used.
    pub fn run_random(&self, target: Option<usize>) -> Result<TrajectoryRun> {
        let target = match target.or(self.cfg.baselines.random_target) {
            Some(t) => t,
            None => {
                let part = SpherePartition::new(self.cfg.baselines.whole_sphere_n_side)?;
                (0..part.n_pix())
                    .filter(|&p| {
                        let d = part.pixel_direction(PixelId(p)).expect("pixel in range");
                        self.cfg.reachability.is_reachable(&d)
                    })
                    .count()
            }
        };
        let part = SpherePartition::new(self.cfg.baselines.random_n_side)?;
        let mut order: Vec<usize> = (0..part.n_pix()).collect();
        order.shuffle(&mut Rngs::new(self.cfg.seed).sampler);
        self.run_baseline(Strategy::Random, part, &order, Some(target))
    }

    fn run_baseline(
        &self,
        strategy: Strategy,
        part: SpherePartition,
        order: &[usize],
        target: Option<usize>,
    ) -> Result<TrajectoryRun> {
        let mut timer = Timer(Vec::new());
        let mut rngs = Rngs::new(self.cfg.seed);
        let mut map = SphereScoreMap::new(part);
        let mut pool = ImagePool::new(self.detector());
        let mut records = Vec::new();
        let mut termination = Termination::Completed;
        timer.time("acquire", || -> Result<()> {
            for &p in order {
                if target.is_some_and(|t| pool.len() >= t) {
                    return Ok(());
                }
                let id = PixelId(p);
                let pose = pose_from_pixel(&part, id, 0.0)?;
                let outcome = self.cfg.reachability.attempt_acquisition(&pose.direction(), &mut rngs.robot);
                if outcome == Outcome::Ok {
                    pool.push(pose, &self.measure(&pose, &mut rngs.noise)?)?;
                    map.set_acquired(id, 0);
                } else {
                    map.set_undefined(id, outcome.pixel_state());
                }
                records.push(AttemptRecord {
                    iteration: 0,
                    phase: Phase::Baseline,
                    n_side: part.n_side(),
                    pixel_id: p,
                    theta: pose.theta,
                    phi: pose.phi,
                    outcome,
                    score: None,
                });
            }
            if target.is_some_and(|t| pool.len() < t) {
                termination = Termination::CandidatesExhausted { attempts: records.len() };
            }
            Ok(())
        })?;
        // Baseline maps carry states only.
        let mut final_map = SphereScoreMap::new(part);
        for (p, st) in map.states().iter().enumerate() {
            match st {
                PixelState::Acquired => final_map.set_acquired(PixelId(p), 0),
                PixelState::Unreachable | PixelState::Failed => final_map.set_undefined(PixelId(p), *st),
                PixelState::Untried => {}
            }
        }
        Ok(TrajectoryRun {
            records,
            pool,
            final_map,
            scout_map: None,
            score_log: Vec::new(),
            segmentation: None,
            termination,
            provenance: self.provenance(strategy)?,
            timings: timer.0,
        })
    }

    pub fn run(&self, strategy: Strategy, random_target: Option<usize>) -> Result<TrajectoryRun> {
        match strategy {
            Strategy::Optimized => self.run_optimized(),
            Strategy::WholeSphere => self.run_whole_sphere(),
            Strategy::Random => self.run_random(random_target),
        }
    }

    /// Full-resolution reconstruction of a run's image pool.
    pub fn final_reconstruction(&self, run: &TrajectoryRun) -> Result<Reconstruction> {
        reconstruct_stage(&run.pool, self.detector(), &self.cfg.final_recon)
    }
}

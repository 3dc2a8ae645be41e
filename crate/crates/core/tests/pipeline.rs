use std::collections::HashSet;

use ctrajopt::config::{ExperimentConfig, GridConfig};
use ctrajopt::geometry::DetectorSpec;
use ctrajopt::pipeline::{Experiment, Phase, Strategy, Termination};
use ctrajopt::robot::{Outcome, ReachabilitySpec};
use ctrajopt::sphere::{PixelId, PixelState, SpherePartition};

/// Same physical layout as the desk-scale setup, on coarse grids.
fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::desk_scale(1);
    cfg.phantom.grid = GridConfig { size: 36, spacing_mm: 2.7 };
    cfg.detector = DetectorSpec {
        rows: 24,
        cols: 24,
        pixel_pitch: 18.0,
        source_to_object: 500.0,
        source_to_detector: 1000.0,
    };
    cfg.coarse.grid = GridConfig { size: 16, spacing_mm: 6.0 };
    cfg.coarse.iterations = 5;
    cfg.final_recon.grid = GridConfig { size: 24, spacing_mm: 4.0 };
    cfg.final_recon.iterations = 5;
    cfg.sphere.n_side_low = 1;
    cfg.sphere.n_side_high = 3;
    cfg.loop_.budget = 6;
    cfg.baselines.whole_sphere_n_side = 1;
    cfg.baselines.random_n_side = 3;
    cfg
}

#[test]
fn scout_on_free_robot_acquires_twelve_images() {
    let mut cfg = small_config();
    cfg.reachability = ReachabilitySpec::unrestricted();
    let exp = Experiment::new(cfg).unwrap();
    let scout = exp.scout_scan().unwrap();
    assert_eq!(scout.pool.len(), 12);
    assert_eq!(scout.map.count(PixelState::Acquired), 12);
    assert!(scout.records.iter().all(|r| r.phase == Phase::Scout));
}

#[test]
fn noiseless_measurements_are_bit_exact_across_runs() {
    let exp = Experiment::new(small_config()).unwrap();
    let a = exp.scout_scan().unwrap();
    let b = exp.scout_scan().unwrap();
    assert_eq!(a.pool.sinogram.data, b.pool.sinogram.data);
}

#[test]
fn score_init_transfers_to_high_grid() {
    let exp = Experiment::new(small_config()).unwrap();
    let mut scout = exp.scout_scan().unwrap();
    let init = exp.score_init(&mut scout).unwrap();
    let low = *scout.map.partition();
    let high = *init.high_map.partition();
    assert_eq!(high.n_pix(), 108);
    for p in 0..high.n_pix() {
        let (t, ph) = high.pixel_center(PixelId(p)).unwrap();
        let parent = low.ang_to_pixel(t, ph);
        match scout.map.state(parent) {
            PixelState::Unreachable => assert_eq!(init.high_map.state(PixelId(p)), PixelState::Unreachable),
            PixelState::Acquired => {
                assert_eq!(init.high_map.state(PixelId(p)), PixelState::Untried);
                assert_eq!(init.high_map.score(PixelId(p)), scout.map.score(parent));
            }
            _ => assert_eq!(init.high_map.score(PixelId(p)), None),
        }
    }
}

#[test]
fn optimized_run_is_deterministic_and_never_repeats() {
    let exp = Experiment::new(small_config()).unwrap();
    let a = exp.run_optimized().unwrap();
    let b = exp.run_optimized().unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.pool.sinogram.data, b.pool.sinogram.data);
    assert_eq!(a.final_map, b.final_map);

    let loop_records: Vec<_> = a.records.iter().filter(|r| r.phase == Phase::Loop).collect();
    assert_eq!(loop_records.len(), 6);
    assert_eq!(a.termination, Termination::BudgetExhausted);
    let mut seen = HashSet::new();
    for r in &loop_records {
        assert!(seen.insert(r.pixel_id), "pixel {} attempted twice", r.pixel_id);
        assert_ne!(r.outcome, Outcome::Unreachable, "sampler picked an unreachable pixel");
        let st = a.final_map.state(PixelId(r.pixel_id));
        assert_eq!(st, r.outcome.pixel_state());
    }
    assert_eq!(a.score_log.len(), a.ok_count() - a.scout_map.as_ref().unwrap().count(PixelState::Acquired));
}

#[test]
fn budget_of_one_makes_one_loop_attempt() {
    let mut cfg = small_config();
    cfg.loop_.budget = 1;
    let run = Experiment::new(cfg).unwrap().run_optimized().unwrap();
    assert_eq!(run.records.iter().filter(|r| r.phase == Phase::Loop).count(), 1);
}

#[test]
fn exhausting_candidates_stops_early() {
    let mut cfg = small_config();
    cfg.sphere.n_side_high = 2;
    cfg.loop_.budget = 100;
    let run = Experiment::new(cfg).unwrap().run_optimized().unwrap();
    let Termination::CandidatesExhausted { attempts } = run.termination else {
        panic!("expected exhaustion, got {:?}", run.termination);
    };
    assert!(attempts < 48);
    assert_eq!(run.records.iter().filter(|r| r.phase == Phase::Loop).count(), attempts);
    assert!(run.termination.is_truncated());
}

#[test]
fn observer_sees_every_loop_attempt() {
    let exp = Experiment::new(small_config()).unwrap();
    let mut seen = Vec::new();
    let run = exp
        .run_optimized_with(&mut |e| {
            let total: f64 = e.weights.iter().sum();
            assert!(total > 0.0);
            assert!(e.weights[e.record.pixel_id] > 0.0);
            seen.push(e.iteration);
        })
        .unwrap();
    assert_eq!(seen, (1..=6).collect::<Vec<_>>());
    assert_eq!(run.pool.len(), run.ok_count());
}

#[test]
fn random_baseline_is_reproducible_and_hits_target() {
    let exp = Experiment::new(small_config()).unwrap();
    let a = exp.run_random(Some(9)).unwrap();
    let b = exp.run_random(Some(9)).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.pool.len(), 9);
    let mut other = small_config();
    other.seed += 1;
    let c = Experiment::new(other).unwrap().run_random(Some(9)).unwrap();
    assert_ne!(a.records, c.records);
}

#[test]
fn whole_sphere_attempts_every_pixel_in_order() {
    let exp = Experiment::new(small_config()).unwrap();
    let run = exp.run(Strategy::WholeSphere, None).unwrap();
    let ids: Vec<usize> = run.records.iter().map(|r| r.pixel_id).collect();
    assert_eq!(ids, (0..12).collect::<Vec<_>>());
    let part = SpherePartition::new(1).unwrap();
    let reachable = (0..12)
        .filter(|&p| exp.cfg.reachability.is_reachable(&part.pixel_direction(PixelId(p)).unwrap()))
        .count();
    assert!(run.pool.len() <= reachable);
    assert_eq!(run.termination, Termination::Completed);
}

#[test]
fn final_reconstruction_and_save() {
    let exp = Experiment::new(small_config()).unwrap();
    let run = exp.run_optimized().unwrap();
    let rec = exp.final_reconstruction(&run).unwrap();
    assert_eq!(rec.volume.grid.dims, [24, 24, 24]);
    assert!(rec.volume.is_finite());
    let dir = tempfile::tempdir().unwrap();
    let files = run.save(dir.path()).unwrap();
    assert!(files.iter().all(|f| f.exists()));
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("iteration,phase,n_side,pixel_id,theta_rad,phi_rad,outcome,score"));
    assert_eq!(traj.lines().count(), run.records.len() + 1);
}

#[test]
fn noise_is_seeded() {
    let mut cfg = small_config();
    cfg.noise.enabled = true;
    let exp = Experiment::new(cfg.clone()).unwrap();
    let a = exp.scout_scan().unwrap();
    let b = exp.scout_scan().unwrap();
    assert_eq!(a.pool.sinogram.data, b.pool.sinogram.data);
    let clean = {
        let mut c = cfg;
        c.noise.enabled = false;
        Experiment::new(c).unwrap().scout_scan().unwrap()
    };
    assert_ne!(a.pool.sinogram.data, clean.pool.sinogram.data);
}

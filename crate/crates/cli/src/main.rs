//! `ctrajopt`: phantom generation, trajectory runs and sharpness metrics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use ctrajopt::config::{ExperimentConfig, GridConfig, MetricsConfig, PhantomConfig};
use ctrajopt::metrics::compare_runs;
use ctrajopt::phantom::build_phantom;
use ctrajopt::pipeline::{Experiment, Strategy, TrajectoryRun};
use ctrajopt::sampler::write_probabilities_csv;
use ctrajopt::volume::Field;

#[derive(Parser)]
#[command(name = "ctrajopt", version, about = "Online acquisition-trajectory optimization for cone-beam CT (simulation)")]
struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Voxelize a sample with its holder.
    Phantom {
        #[arg(long)]
        sample: u8,
        /// Voxels per side.
        #[arg(long, default_value_t = 96)]
        grid: usize,
        /// Voxel size in mm; by default the field of view of the 96^3 grid
        /// is kept.
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one trajectory strategy end to end.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_parser = parse_strategy)]
        strategy: Strategy,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Earlier run whose acquired-image count the random strategy matches.
        #[arg(long)]
        match_run: Option<PathBuf>,
        /// Dump the sampling distribution of every loop iteration.
        #[arg(long)]
        verbose: bool,
    },
    /// Compare line-profile sharpness across run directories.
    Metrics {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        /// TOML file with `aggregation` and `[[profiles]]` entries.
        #[arg(long)]
        profiles: PathBuf,
        /// Also write the table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default desk-scale configuration.
    DefaultConfig {
        #[arg(long, default_value_t = 1)]
        sample: u8,
    },
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: ctrajopt::Error| e.to_string())
}

/// Errors the user can fix by changing arguments or inputs.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Candidate poses ran out before the budget was spent.
#[derive(Debug)]
struct Exhausted(String);

impl std::fmt::Display for Exhausted {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Exhausted {}

#[derive(Serialize, Deserialize)]
struct Manifest {
    argv: Vec<String>,
    version: String,
    git_commit: Option<String>,
    strategy: String,
    seed: u64,
    config_hash: String,
    config: toml::Value,
    acquired_images: usize,
    attempts: usize,
    termination: serde_json::Value,
    artifacts: Vec<PathBuf>,
    wall_clock_s: BTreeMap<String, f64>,
}

fn git_commit() -> Option<String> {
    let out = std::process::Command::new("git").args(["rev-parse", "HEAD"]).output().ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
        .filter(|s| !s.is_empty())
}

fn load_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    ExperimentConfig::from_toml_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

fn cmd_phantom(sample: u8, grid: usize, spacing: Option<f64>, out: &Path) -> anyhow::Result<()> {
    if !(sample == 1 || sample == 2) {
        return Err(usage(format!("unknown sample {sample}; expected 1 or 2")));
    }
    let mut pc = PhantomConfig::for_sample(sample);
    let default = pc.grid;
    pc.grid = GridConfig {
        size: grid,
        spacing_mm: spacing.unwrap_or(default.spacing_mm * default.size as f64 / grid.max(1) as f64),
    };
    let spec = pc.spec().map_err(|e| usage(e.to_string()))?;
    let volume = build_phantom(&spec).map_err(|e| usage(e.to_string()))?;
    let stem = format!("sample{sample}");
    let files = volume.save(out, &stem).with_context(|| format!("writing {}", out.display()))?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn write_run(
    dir: &Path,
    exp: &Experiment,
    run: &TrajectoryRun,
    stages: &mut BTreeMap<String, f64>,
) -> anyhow::Result<Vec<PathBuf>> {
    let mut artifacts = run.save(dir)?;
    let config = dir.join("config.toml");
    std::fs::write(&config, exp.cfg.to_toml_string()?)?;
    artifacts.push(config);
    if let Some(scout) = &run.scout_map {
        let p = dir.join("scout_map.csv");
        let mut buf = Vec::new();
        scout.write_csv(&mut buf)?;
        std::fs::write(&p, buf)?;
        artifacts.push(p);
    }
    let t = Instant::now();
    let rec = exp.final_reconstruction(run)?;
    stages.insert("final_recon".into(), t.elapsed().as_secs_f64());
    artifacts.push(rec.volume.save(dir, "recon")?);
    artifacts.push(dir.join("recon.raw"));
    let residuals = dir.join("residuals.csv");
    let mut buf = Vec::new();
    rec.write_residuals_csv(&mut buf)?;
    std::fs::write(&residuals, buf)?;
    artifacts.push(residuals);
    Ok(artifacts)
}

fn read_manifest(dir: &Path) -> anyhow::Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_run(
    config: &Path,
    strategy: Strategy,
    seed: Option<u64>,
    out: &Path,
    match_run: Option<&Path>,
    verbose: bool,
) -> anyhow::Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let target = match match_run {
        Some(dir) => Some(read_manifest(dir)?.acquired_images),
        None => None,
    };
    let t = Instant::now();
    let exp = Experiment::new(cfg).map_err(|e| usage(e.to_string()))?;
    let mut stages = BTreeMap::from([("phantom".to_string(), t.elapsed().as_secs_f64())]);
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let prob_dir = out.join("probabilities");
    if verbose && strategy == Strategy::Optimized {
        std::fs::create_dir_all(&prob_dir)?;
    }
    let mut dump_err = None;
    let run = match strategy {
        Strategy::Optimized => exp.run_optimized_with(&mut |ev| {
            if verbose {
                eprintln!(
                    "iter {:>4}  pixel {:>5}  {:<17} score {:>6}  pool {}",
                    ev.iteration,
                    ev.record.pixel_id,
                    ev.record.outcome.as_str(),
                    ev.record.score.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
                    ev.pool_size
                );
                let path = prob_dir.join(format!("iter_{:04}.csv", ev.iteration));
                let res = std::fs::File::create(&path)
                    .map_err(ctrajopt::Error::from)
                    .and_then(|f| write_probabilities_csv(ev.weights, std::io::BufWriter::new(f)));
                if let Err(e) = res {
                    dump_err.get_or_insert(e);
                }
            }
        })?,
        other => exp.run(other, target)?,
    };
    if let Some(e) = dump_err {
        return Err(e).context("writing probability dumps");
    }
    for (name, secs) in &run.timings {
        stages.insert(name.clone(), *secs);
    }
    let mut artifacts = write_run(out, &exp, &run, &mut stages)?;
    if verbose && strategy == Strategy::Optimized {
        artifacts.push(prob_dir);
    }
    let manifest_path = out.join("manifest.json");
    artifacts.push(manifest_path.clone());
    let manifest = Manifest {
        argv: std::env::args().collect(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        git_commit: git_commit(),
        strategy: strategy.to_string(),
        seed: exp.cfg.seed,
        config_hash: run.provenance.config_hash.clone(),
        config: toml::Value::try_from(&exp.cfg)?,
        acquired_images: run.pool.len(),
        attempts: run.records.len(),
        termination: serde_json::to_value(&run.termination)?,
        artifacts,
        wall_clock_s: stages,
    };
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    println!(
        "{strategy}: {} attempts, {} images, written to {}",
        run.records.len(),
        run.pool.len(),
        out.display()
    );
    if run.termination.is_truncated() {
        return Err(Exhausted(format!("candidate poses exhausted: {:?}", run.termination)).into());
    }
    Ok(())
}

fn cmd_metrics(runs: &[PathBuf], profiles: &Path, out: Option<&Path>) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(profiles)
        .map_err(|e| usage(format!("cannot read {}: {e}", profiles.display())))?;
    let mc: MetricsConfig = toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", profiles.display())))?;
    let mut volumes = Vec::new();
    for dir in runs {
        let sidecar = dir.join("recon.json");
        if !sidecar.is_file() {
            return Err(usage(format!("{} has no reconstruction (recon.json)", dir.display())));
        }
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        volumes.push((name, Field::load(&sidecar)?));
    }
    let refs: Vec<(String, &Field)> = volumes.iter().map(|(n, f)| (n.clone(), f)).collect();
    let table = compare_runs(&refs, &mc.profiles, mc.aggregation).map_err(|e| usage(e.to_string()))?;
    print!("{}", table.to_text());
    if let Some(path) = out {
        std::fs::write(path, table.to_csv())?;
    }
    Ok(())
}

fn real_main(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Phantom { sample, grid, spacing, out } => cmd_phantom(sample, grid, spacing, &out),
        Command::Run { config, strategy, seed, out, match_run, verbose } => {
            cmd_run(&config, strategy, seed, &out, match_run.as_deref(), verbose)
        }
        Command::Metrics { runs, profiles, out } => cmd_metrics(&runs, &profiles, out.as_deref()),
        Command::DefaultConfig { sample } => {
            if !(sample == 1 || sample == 2) {
                return Err(usage(format!("unknown sample {sample}; expected 1 or 2")));
            }
            print!("{}", ExperimentConfig::desk_scale(sample).to_toml_string()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

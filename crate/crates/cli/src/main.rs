use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use arcodo_cli::config::{
    self, apply_entries, parse_lengths, parse_methods, parse_trajectory, RunConfig, SimConfig,
    DEFAULT_MAX_RANGE, DEFAULT_STEP_PERIOD,
};
use arcodo_cli::files;
use arcodo_cli::pipeline::{run_odometry, run_pipeline};
use arcodo_cli::report::{emit_run, render_reports};
use arcodo_core::evaluation::accumulate;
use arcodo_core::simulator::{self, derive_seed, CorruptionSpec};
use arcodo_core::solvers::SolverMethod;

/// Ego-motion estimation from range-bearing landmark scans, with a
/// constant-curvature match filter.
#[derive(Parser)]
#[command(name = "arcodo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic world and write scan + ground-truth files.
    Simulate(RunArgs),
    /// Estimate relative poses from a scan file, one output per method.
    Odometry(RunArgs),
    /// Compare estimated relative poses against ground truth.
    Evaluate(EvaluateArgs),
    /// Rebuild the SVG plots from a previously written output directory.
    Report(ReportArgs),
    /// Simulate (or load), solve, evaluate, and emit all reports.
    Pipeline(RunArgs),
}

/// Options shared by the stages that consume a full run configuration.
/// Every config-file key has a flag of the same name; flags win.
#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Landmark scan CSV to read (file mode).
    #[arg(long)]
    scans: Option<PathBuf>,
    /// Ground-truth relative pose CSV (file mode).
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Comma-separated methods: full-svd, ransac, cc-svd, cc-means, or all.
    #[arg(long)]
    method: Option<String>,
    /// Master RNG seed; world, noise, corruption, and solver streams derive
    /// from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Lower quantile of the retained arc-angle band.
    #[arg(long)]
    q_lo: Option<f64>,
    /// Upper quantile of the retained arc-angle band.
    #[arg(long)]
    q_hi: Option<f64>,
    #[arg(long)]
    ransac_iters: Option<usize>,
    #[arg(long)]
    ransac_base_thresh: Option<f64>,
    #[arg(long)]
    ransac_range_coeff: Option<f64>,
    /// Association proximity gate, meters.
    #[arg(long)]
    gate_radius: Option<f64>,
    /// Pairwise distance-preservation tolerance, meters.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Eigenvector acceptance cutoff (fraction of the maximum weight).
    #[arg(long)]
    cutoff: Option<f64>,
    /// Comma-separated segment-length ladder, meters.
    #[arg(long)]
    segment_lengths: Option<String>,
    #[arg(long)]
    landmark_count: Option<usize>,
    /// World square half-width, meters.
    #[arg(long)]
    extent: Option<f64>,
    #[arg(long)]
    max_range: Option<f64>,
    /// Trajectory: `straight:<step_m>:<steps>` / `arc:<theta>:<r_icr>:<steps>`,
    /// comma separated.
    #[arg(long)]
    trajectory: Option<String>,
    #[arg(long)]
    step_period: Option<f64>,
    #[arg(long)]
    sigma_range: Option<f64>,
    #[arg(long)]
    sigma_bearing: Option<f64>,
    /// Fraction of each frame's matches replaced with outliers.
    #[arg(long)]
    outlier_fraction: Option<f64>,
    /// Moving-object count within the outlier budget (default: half of it).
    #[arg(long)]
    dynamic_count: Option<usize>,
    /// Moving-object displacement per scan, meters.
    #[arg(long)]
    dynamic_speed: Option<f64>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Estimated relative poses CSV.
    #[arg(long)]
    est: PathBuf,
    /// Ground-truth relative poses CSV.
    #[arg(long)]
    gt: PathBuf,
    /// Comma-separated segment-length ladder, meters.
    #[arg(long)]
    segment_lengths: Option<String>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding trajectory_gt.csv and per-method subdirectories.
    #[arg(long)]
    dir: PathBuf,
    /// Methods to plot (default: every method directory present).
    #[arg(long)]
    method: Option<String>,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let entries = config::read_config_file(path)?;
            apply_entries(&mut cfg, &entries)?;
        }
        if let Some(v) = self.scans {
            cfg.scans_path = Some(v);
        }
        if let Some(v) = self.ground_truth {
            cfg.ground_truth_path = Some(v);
        }
        if let Some(v) = self.out_dir {
            cfg.out_dir = v;
        }
        if let Some(v) = &self.method {
            cfg.methods = parse_methods(v)?;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.q_lo {
            cfg.q_lo = v;
        }
        if let Some(v) = self.q_hi {
            cfg.q_hi = v;
        }
        if let Some(v) = self.ransac_iters {
            cfg.ransac_iters = v;
        }
        if let Some(v) = self.ransac_base_thresh {
            cfg.ransac_base_thresh = v;
        }
        if let Some(v) = self.ransac_range_coeff {
            cfg.ransac_range_coeff = v;
        }
        if let Some(v) = self.gate_radius {
            cfg.association.gate_radius = v;
        }
        if let Some(v) = self.epsilon {
            cfg.association.epsilon = v;
        }
        if let Some(v) = self.cutoff {
            cfg.association.cutoff = v;
        }
        if let Some(v) = &self.segment_lengths {
            cfg.segment_lengths = parse_lengths(v)?;
        }
        if let Some(v) = self.outlier_fraction {
            cfg.outlier_fraction = v;
        }
        if let Some(v) = self.dynamic_count {
            cfg.dynamic_count = Some(v);
        }
        if let Some(v) = self.dynamic_speed {
            cfg.dynamic_speed = v;
        }

        let sim_touched = self.landmark_count.is_some()
            || self.extent.is_some()
            || self.max_range.is_some()
            || self.trajectory.is_some()
            || self.step_period.is_some()
            || self.sigma_range.is_some()
            || self.sigma_bearing.is_some();
        if sim_touched || cfg.sim.is_some() {
            let mut sim = cfg.sim.take().unwrap_or(SimConfig {
                landmark_count: 300,
                extent: 100.0,
                max_range: DEFAULT_MAX_RANGE,
                trajectory: Vec::new(),
                step_period: DEFAULT_STEP_PERIOD,
                sigma_range: 0.0,
                sigma_bearing: 0.0,
            });
            if let Some(v) = self.landmark_count {
                sim.landmark_count = v;
            }
            if let Some(v) = self.extent {
                sim.extent = v;
            }
            if let Some(v) = self.max_range {
                sim.max_range = v;
            }
            if let Some(v) = &self.trajectory {
                sim.trajectory = parse_trajectory(v)?;
            }
            if let Some(v) = self.step_period {
                sim.step_period = v;
            }
            if let Some(v) = self.sigma_range {
                sim.sigma_range = v;
            }
            if let Some(v) = self.sigma_bearing {
                sim.sigma_bearing = v;
            }
            cfg.sim = Some(sim);
        }
        Ok(cfg)
    }
}

fn cmd_simulate(args: RunArgs) -> Result<()> {
    let cfg = args.into_config()?;
    cfg.validate()?;
    let Some(sim) = &cfg.sim else {
        bail!("simulate needs a trajectory (config key `trajectory` or --trajectory)");
    };
    let world = simulator::generate_world(&simulator::WorldConfig {
        landmark_count: sim.landmark_count,
        extent: sim.extent,
        rng_seed: derive_seed(cfg.seed, 1),
    });
    let poses = simulator::generate_trajectory(&simulator::TrajectorySpec {
        segments: sim.trajectory.clone(),
        step_period: sim.step_period,
    });
    let noise = CorruptionSpec {
        sigma_range: sim.sigma_range,
        sigma_bearing: sim.sigma_bearing,
        rng_seed: derive_seed(cfg.seed, 2),
        ..Default::default()
    };
    let scans: Vec<_> = poses
        .iter()
        .enumerate()
        .map(|(k, p)| {
            simulator::observe(p, &world, sim.max_range, &noise, k, k as f64 * sim.step_period).landmarks
        })
        .collect();
    let gt_rel: Vec<_> = poses
        .windows(2)
        .map(|w| arcodo_core::geom::compose(&arcodo_core::geom::inverse(&w[0]), &w[1]))
        .collect();

    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    files::write_scans(&cfg.out_dir.join("scans.csv"), &scans)?;
    files::write_relative_poses(&cfg.out_dir.join("ground_truth.csv"), &gt_rel)?;
    println!(
        "simulated {} scans ({} landmarks) -> {}",
        scans.len(),
        world.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

fn cmd_odometry(args: RunArgs) -> Result<()> {
    let cfg = args.into_config()?;
    cfg.validate()?;
    let Some(scans_path) = &cfg.scans_path else {
        bail!("odometry needs --scans");
    };
    let scans = files::load_scans(scans_path, DEFAULT_STEP_PERIOD)?;
    if scans.len() < 2 {
        bail!("need at least two scans, found {}", scans.len());
    }
    let run = run_odometry(&cfg, &scans);
    fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let theta_dir = cfg.out_dir.join("thetas");
    fs::create_dir_all(&theta_dir)?;
    for frame in &run.frames {
        files::write_sorted_thetas(
            &theta_dir.join(format!("sorted_thetas_{:05}.csv", frame.frame)),
            &frame.sorted_thetas,
        )?;
    }
    for (method, rel, _, fallbacks) in &run.methods {
        let dir = cfg.out_dir.join(method.name());
        fs::create_dir_all(&dir)?;
        files::write_relative_poses(&dir.join("relative_poses.csv"), rel)?;
        println!(
            "{}: {} relative poses ({} fallback frames) -> {}",
            method.name(),
            rel.len(),
            fallbacks.len(),
            dir.display()
        );
    }
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let lengths = match &args.segment_lengths {
        Some(text) => parse_lengths(text)?,
        None => config::DEFAULT_SEGMENT_LENGTHS.to_vec(),
    };
    let est_rel = files::load_relative_poses(&args.est)?;
    let gt_rel = files::load_ground_truth(&args.gt)?;
    if est_rel.len() != gt_rel.len() {
        bail!("estimate has {} poses but ground truth has {}", est_rel.len(), gt_rel.len());
    }
    let est = accumulate(&est_rel);
    let gt = accumulate(&gt_rel);
    let report = arcodo_core::segment_errors(&gt, &est, &lengths)?;
    fs::create_dir_all(&args.out_dir)?;
    files::write_metrics(&args.out_dir.join("metrics.csv"), &report)?;
    files::write_trajectory(&args.out_dir.join("trajectory_est.csv"), &est)?;
    files::write_trajectory(&args.out_dir.join("trajectory_gt.csv"), &gt)?;
    println!(
        "overall: {:.4}% translational, {:.6} deg/m rotational ({} segments)",
        report.overall.tr_percent, report.overall.rot_deg_per_m, report.overall.segment_count
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let methods = match &args.method {
        Some(text) => parse_methods(text)?,
        None => SolverMethod::ALL
            .into_iter()
            .filter(|m| args.dir.join(m.name()).join("trajectory_est.csv").exists())
            .collect(),
    };
    if methods.is_empty() {
        bail!("no method directories found under {}", args.dir.display());
    }
    let outputs = render_reports(&args.dir, &methods)?;
    for path in outputs {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_pipeline(args: RunArgs) -> Result<()> {
    let cfg = args.into_config()?;
    let run = run_pipeline(&cfg)?;
    emit_run(&run, &cfg)?;
    for method in &run.methods {
        println!(
            "{:<9} overall: {:.4}% translational, {:.6} deg/m rotational, {} fallback frames",
            method.method.name(),
            method.report.overall.tr_percent,
            method.report.overall.rot_deg_per_m,
            method.fallback_frames.len()
        );
    }
    println!("reports -> {}", cfg.out_dir.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Odometry(args) => cmd_odometry(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Report(args) => cmd_report(args),
        Command::Pipeline(args) => cmd_pipeline(args),
    }
}

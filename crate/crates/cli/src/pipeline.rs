//! The end-to-end pipeline: acquire scans (simulate or load), associate,
//! optionally inject match outliers, solve per frame with each configured
//! method, accumulate, and evaluate against ground truth.
//!
//! Everything is single-threaded and seeded, so a configuration fully
//! determines every output byte.

use std::fmt;

use log::warn;
use thiserror::Error;

use arcodo_core::association::associate;
use arcodo_core::evaluation::{self, SegmentErrorReport, Trajectory};
use arcodo_core::geom::{compose, inverse};
use arcodo_core::simulator::{self, derive_seed, CorruptionSpec};
use arcodo_core::solvers::{solve, SolverMethod};
use arcodo_core::{estimate_single_match, LandmarkSet, MatchPair, Pose2};

use crate::config::{ConfigError, RunConfig, DEFAULT_STEP_PERIOD};
use crate::files::{self, FileError};

// Seed streams carved out of the master seed.
const STREAM_WORLD: u64 = 1;
const STREAM_OBSERVE: u64 = 2;
const STREAM_CORRUPT: u64 = 3;
const STREAM_SOLVE: u64 = 4;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    File(#[from] FileError),
    #[error("evaluation failed: {0}")]
    Eval(#[from] arcodo_core::evaluation::EvalError),
    #[error("ground truth has {gt} relative poses but the scans define {frames} frames")]
    GroundTruthMismatch { gt: usize, frames: usize },
}

/// Why a frame fell back to the previous relative pose.
#[derive(Debug, Clone)]
pub struct SolverFailure {
    pub frame: usize,
    pub method: SolverMethod,
    pub reason: String,
}

impl fmt::Display for SolverFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "frame {}: {} failed: {}", self.frame, self.method.name(), self.reason)
    }
}

/// Method-independent view of one solved frame pair.
#[derive(Debug, Clone)]
pub struct FrameDiagnostics {
    /// Destination scan index (frame `k` pairs scans `k-1` and `k`).
    pub frame: usize,
    pub n_matches: usize,
    pub n_injected_outliers: usize,
    /// `(match index, arc angle)` sorted ascending by angle.
    pub sorted_thetas: Vec<(usize, f64)>,
}

/// One method's odometry over the whole sequence.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: SolverMethod,
    pub rel_poses: Vec<Pose2>,
    pub trajectory: Trajectory,
    pub report: SegmentErrorReport,
    /// Matches used per frame (0 where the solver failed).
    pub inlier_counts: Vec<usize>,
    /// Frames that fell back to the previous relative pose.
    pub fallback_frames: Vec<usize>,
    pub failures: Vec<SolverFailure>,
}

/// Full pipeline output.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub scans: Vec<LandmarkSet>,
    pub gt_rel: Vec<Pose2>,
    pub gt_trajectory: Trajectory,
    pub frames: Vec<FrameDiagnostics>,
    pub methods: Vec<MethodRun>,
}

fn acquire_scans(cfg: &RunConfig) -> Result<(Vec<LandmarkSet>, Vec<Pose2>), PipelineError> {
    if let Some(sim) = &cfg.sim {
        let world = simulator::generate_world(&simulator::WorldConfig {
            landmark_count: sim.landmark_count,
            extent: sim.extent,
            rng_seed: derive_seed(cfg.seed, STREAM_WORLD),
        });
        let poses = simulator::generate_trajectory(&simulator::TrajectorySpec {
            segments: sim.trajectory.clone(),
            step_period: sim.step_period,
        });
        let noise = CorruptionSpec {
            sigma_range: sim.sigma_range,
            sigma_bearing: sim.sigma_bearing,
            rng_seed: derive_seed(cfg.seed, STREAM_OBSERVE),
            ..Default::default()
        };
        let scans = poses
            .iter()
            .enumerate()
            .map(|(k, pose)| {
                simulator::observe(pose, &world, sim.max_range, &noise, k, k as f64 * sim.step_period)
                    .landmarks
            })
            .collect();
        let gt_rel = poses
            .windows(2)
            .map(|w| compose(&inverse(&w[0]), &w[1]))
            .collect();
        return Ok((scans, gt_rel));
    }

    let scans_path = cfg
        .scans_path
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("no scans: provide a scans file or a simulation trajectory".into()))?;
    let gt_path = cfg.ground_truth_path.as_ref().ok_or_else(|| {
        ConfigError::Invalid("evaluation requires a ground_truth file in file mode".into())
    })?;
    let step_period = DEFAULT_STEP_PERIOD;
    let scans = files::load_scans(scans_path, step_period)?;
    let gt_rel = files::load_ground_truth(gt_path)?;
    if scans.len() != gt_rel.len() + 1 {
        return Err(PipelineError::GroundTruthMismatch { gt: gt_rel.len(), frames: scans.len().saturating_sub(1) });
    }
    Ok((scans, gt_rel))
}

/// Associate (and optionally corrupt) every consecutive scan pair.
fn match_frames(cfg: &RunConfig, scans: &[LandmarkSet]) -> (Vec<Vec<MatchPair>>, Vec<FrameDiagnostics>) {
    let corrupt_base = derive_seed(cfg.seed, STREAM_CORRUPT);
    let mut per_frame = Vec::new();
    let mut diagnostics = Vec::new();
    for k in 1..scans.len() {
        let mut matches = associate(&scans[k - 1], &scans[k], &cfg.association).unwrap_or_default();
        let mut n_injected = 0;
        if cfg.outlier_fraction > 0.0 && !matches.is_empty() {
            let spec = CorruptionSpec {
                outlier_fraction: cfg.outlier_fraction,
                dynamic_object_count: cfg.dynamic_count,
                dynamic_speed: cfg.dynamic_speed,
                rng_seed: derive_seed(corrupt_base, k as u64),
                ..Default::default()
            };
            let (corrupted, labels) = simulator::corrupt_matches(&matches, &spec);
            matches = corrupted;
            n_injected = labels.iter().filter(|l| !l.is_inlier()).count();
        }
        let mut sorted_thetas: Vec<(usize, f64)> = matches
            .iter()
            .enumerate()
            .filter_map(|(i, m)| estimate_single_match(m).ok().map(|e| (i, e.theta())))
            .collect();
        sorted_thetas.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        diagnostics.push(FrameDiagnostics {
            frame: k,
            n_matches: matches.len(),
            n_injected_outliers: n_injected,
            sorted_thetas,
        });
        per_frame.push(matches);
    }
    (per_frame, diagnostics)
}

fn run_method(
    cfg: &RunConfig,
    method: SolverMethod,
    frames: &[Vec<MatchPair>],
    gt_trajectory: &Trajectory,
) -> Result<MethodRun, PipelineError> {
    let solve_base = derive_seed(cfg.seed, STREAM_SOLVE);
    let mut rel_poses = Vec::with_capacity(frames.len());
    let mut inlier_counts = Vec::with_capacity(frames.len());
    let mut fallback_frames = Vec::new();
    let mut failures = Vec::new();
    let mut last_rel = Pose2::identity();
    for (i, matches) in frames.iter().enumerate() {
        let frame = i + 1;
        let solver = cfg.solver(method, derive_seed(solve_base, frame as u64));
        let outcome = if matches.is_empty() {
            Err("no matches for this frame".to_string())
        } else {
            solve(matches, &solver).map_err(|e| e.to_string())
        };
        match outcome {
            Ok(result) => {
                last_rel = result.pose;
                rel_poses.push(result.pose);
                inlier_counts.push(result.inlier_ids.len());
            }
            Err(reason) => {
                let failure = SolverFailure { frame, method, reason };
                warn!("{failure}; holding previous relative pose");
                failures.push(failure);
                fallback_frames.push(frame);
                rel_poses.push(last_rel);
                inlier_counts.push(0);
            }
        }
    }
    let trajectory = evaluation::accumulate(&rel_poses);
    let report = evaluation::segment_errors(gt_trajectory, &trajectory, &cfg.segment_lengths)?;
    Ok(MethodRun { method, rel_poses, trajectory, report, inlier_counts, fallback_frames, failures })
}

/// Run the configured pipeline end to end (no files are written; see
/// [`crate::report::emit_run`]).
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineRun, PipelineError> {
    cfg.validate()?;
    if cfg.sim.is_none() && cfg.ground_truth_path.is_none() {
        // Fail before any compute: evaluation cannot happen later.
        return Err(ConfigError::Invalid("evaluation requires ground truth".into()).into());
    }
    let (scans, gt_rel) = acquire_scans(cfg)?;
    let gt_trajectory = evaluation::accumulate(&gt_rel);
    let (frames, frame_diagnostics) = match_frames(cfg, &scans);
    let methods = cfg
        .methods
        .iter()
        .map(|&m| run_method(cfg, m, &frames, &gt_trajectory))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PipelineRun { scans, gt_rel, gt_trajectory, frames: frame_diagnostics, methods })
}

/// Odometry only: associate and solve, no ground truth involved.
pub struct OdometryRun {
    pub frames: Vec<FrameDiagnostics>,
    pub methods: Vec<(SolverMethod, Vec<Pose2>, Vec<usize>, Vec<usize>)>,
}

pub fn run_odometry(cfg: &RunConfig, scans: &[LandmarkSet]) -> OdometryRun {
    let (frames, diagnostics) = match_frames(cfg, scans);
    let methods = cfg
        .methods
        .iter()
        .map(|&method| {
            let solve_base = derive_seed(cfg.seed, STREAM_SOLVE);
            let mut rel = Vec::new();
            let mut inliers = Vec::new();
            let mut fallbacks = Vec::new();
            let mut last = Pose2::identity();
            for (i, matches) in frames.iter().enumerate() {
                let frame = i + 1;
                let solver = cfg.solver(method, derive_seed(solve_base, frame as u64));
                match (!matches.is_empty())
                    .then(|| solve(matches, &solver))
                    .and_then(Result::ok)
                {
                    Some(result) => {
                        last = result.pose;
                        rel.push(result.pose);
                        inliers.push(result.inlier_ids.len());
                    }
                    None => {
                        fallbacks.push(frame);
                        rel.push(last);
                        inliers.push(0);
                    }
                }
            }
            (method, rel, inliers, fallbacks)
        })
        .collect();
    OdometryRun { frames: diagnostics, methods }
}

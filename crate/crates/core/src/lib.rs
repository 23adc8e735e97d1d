//! Ego-motion estimation for range-bearing landmark odometry.
//!
//! The crate estimates SE(2) motion between successive landmark scans. Its
//! distinguishing piece is a constant-curvature motion model that resolves a
//! full relative pose from a *single* landmark association; sorting those
//! per-match solutions exposes bad associations, and an inter-quantile band
//! of them drives outlier-free pose estimation.
//!
//! Modules follow the pipeline: [`geom`] (pose algebra),
//! [`single_match`] (one-association motion solutions), [`association`]
//! (spectral landmark matching), [`solvers`] (full-set, RANSAC, and
//! quantile-trimmed estimators), [`simulator`] (synthetic data and ground
//! truth), and [`evaluation`] (segment error metrics).

pub mod association;
pub mod evaluation;
pub mod geom;
pub mod simulator;
pub mod single_match;
pub mod solvers;

pub use association::{associate, AssociationConfig, CandidateGraph, LandmarkSet};
pub use evaluation::{accumulate, segment_errors, SegmentErrorReport, Trajectory};
pub use geom::{MotionParams, Point2, PolarObservation, Pose2};
pub use simulator::{CorruptionSpec, MatchLabel, Segment, TrajectorySpec, WorldConfig};
pub use single_match::{estimate_single_match, MatchPair, SingleMatchEstimate};
pub use solvers::{solve, SolveResult, SolverConfig, SolverMethod};

//! Synthetic worlds, trajectories, observations, and match corruption.
//!
//! Everything here is a pure function of its seed and arguments, so the
//! same configuration always reproduces the same data. The simulator doubles
//! as the ground-truth oracle for the test suite: it knows which world
//! landmark produced every observation and which relative pose connects any
//! two scans.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::association::LandmarkSet;
use crate::geom::{apply, cc_to_pose, compose, inverse, wrap_angle, MotionParams, Point2, Pose2};
use crate::single_match::MatchPair;

/// Sightings closer than this to the sensor are dropped: zero ranges have no
/// polar form.
const MIN_RANGE: f64 = 1e-9;

/// Uniformly scattered landmarks in a square of the given half-width.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig {
    pub landmark_count: usize,
    /// Square half-width, meters.
    pub extent: f64,
    pub rng_seed: u64,
}

/// One leg of a piecewise constant-curvature trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub motion: MotionParams,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec {
    pub segments: Vec<Segment>,
    /// Seconds between successive scans.
    pub step_period: f64,
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        TrajectorySpec { segments: Vec::new(), step_period: 0.25 }
    }
}

/// Observation noise and match-level failure sources.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionSpec {
    /// Range noise, meters (standard deviation).
    pub sigma_range: f64,
    /// Bearing noise, radians (standard deviation).
    pub sigma_bearing: f64,
    /// Fraction of matches replaced with outliers, in `[0, 1)`.
    pub outlier_fraction: f64,
    /// How many of the corrupted matches mimic moving objects; `None` splits
    /// the outlier budget evenly between moving objects and mis-associations.
    pub dynamic_object_count: Option<usize>,
    /// Displacement of a moving object between two scans, meters.
    pub dynamic_speed: f64,
    pub rng_seed: u64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        CorruptionSpec {
            sigma_range: 0.0,
            sigma_bearing: 0.0,
            outlier_fraction: 0.0,
            dynamic_object_count: None,
            dynamic_speed: 1.0,
            rng_seed: 0,
        }
    }
}

/// Ground-truth provenance label attached by [`corrupt_matches`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchLabel {
    Inlier,
    /// Re-paired with another corrupted match's landmark.
    Shuffled,
    /// The observed landmark moved between the two scans.
    Dynamic,
}

impl MatchLabel {
    pub fn is_inlier(&self) -> bool {
        matches!(self, MatchLabel::Inlier)
    }
}

/// A scan plus the world-landmark index behind each point.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanObservation {
    pub landmarks: LandmarkSet,
    /// `world_ids[k]` is the world index of `landmarks.points[k]`.
    pub world_ids: Vec<usize>,
}

/// Mix a base seed with a stream index (splitmix64 finalizer) so per-scan and
/// per-frame generators never share a stream.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn generate_world(cfg: &WorldConfig) -> Vec<Point2> {
    debug_assert!(cfg.landmark_count >= 1 && cfg.extent > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    (0..cfg.landmark_count)
        .map(|_| {
            Point2::new(
                rng.gen_range(-cfg.extent..=cfg.extent),
                rng.gen_range(-cfg.extent..=cfg.extent),
            )
        })
        .collect()
}

/// World poses visited by the trajectory, starting at the identity. Each
/// consecutive relative pose is exactly the chord of its segment's motion.
pub fn generate_trajectory(spec: &TrajectorySpec) -> Vec<Pose2> {
    let mut poses = vec![Pose2::identity()];
    let mut current = Pose2::identity();
    for seg in &spec.segments {
        debug_assert!(seg.steps >= 1);
        let step = cc_to_pose(&seg.motion);
        for _ in 0..seg.steps {
            current = compose(&current, &step);
            poses.push(current);
        }
    }
    poses
}

/// Observe the world from one pose: range-gate, express in the sensor frame,
/// apply polar noise. Deterministic given the corruption seed and scan index.
pub fn observe(
    pose: &Pose2,
    world: &[Point2],
    max_range: f64,
    corruption: &CorruptionSpec,
    scan_index: usize,
    timestamp: f64,
) -> ScanObservation {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(corruption.rng_seed, scan_index as u64));
    let to_sensor = inverse(pose);
    let mut points = Vec::new();
    let mut world_ids = Vec::new();
    for (id, lm) in world.iter().enumerate() {
        let local = apply(&to_sensor, lm);
        let range = local.x.hypot(local.y);
        if range > max_range || range < MIN_RANGE {
            continue;
        }
        let bearing = local.y.atan2(local.x);
        let noise_r: f64 = rng.sample(StandardNormal);
        let noise_b: f64 = rng.sample(StandardNormal);
        let range = range + corruption.sigma_range * noise_r;
        let bearing = wrap_angle(bearing + corruption.sigma_bearing * noise_b);
        if range < MIN_RANGE {
            continue;
        }
        let (s, c) = bearing.sin_cos();
        points.push(Point2::new(range * c, range * s));
        world_ids.push(id);
    }
    ScanObservation {
        landmarks: LandmarkSet::new(scan_index, points, timestamp),
        world_ids,
    }
}

/// Ground-truth correspondences between two scans of the same world.
pub fn true_matches(prev: &ScanObservation, curr: &ScanObservation) -> Vec<MatchPair> {
    let mut out = Vec::new();
    for (i, &wid) in prev.world_ids.iter().enumerate() {
        if let Some(j) = curr.world_ids.iter().position(|&w| w == wid) {
            let p = prev.landmarks.points[i].to_polar();
            let q = curr.landmarks.points[j].to_polar();
            if p.range > 0.0 && q.range > 0.0 {
                out.push(MatchPair::new(p, q, i, j));
            }
        }
    }
    out
}

/// Replace `floor(outlier_fraction * n)` matches with outliers and label
/// every match.
///
/// Corrupted matches become either mis-associations (current-side
/// observations rotated among the corrupted set) or moving objects (the
/// current-side point displaced by `dynamic_speed` in a random direction).
/// A lone mis-association candidate has nothing to swap with and becomes a
/// moving object instead.
pub fn corrupt_matches(
    matches: &[MatchPair],
    spec: &CorruptionSpec,
) -> (Vec<MatchPair>, Vec<MatchLabel>) {
    let n = matches.len();
    let n_out = (spec.outlier_fraction * n as f64).floor() as usize;
    let mut out = matches.to_vec();
    let mut labels = vec![MatchLabel::Inlier; n];
    if n_out == 0 {
        return (out, labels);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let mut order: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        order.swap(k, rng.gen_range(0..=k));
    }
    let corrupted = &order[..n_out];
    let mut n_dyn = match spec.dynamic_object_count {
        None => n_out / 2,
        Some(c) => c.min(n_out),
    };
    if n_out - n_dyn == 1 {
        n_dyn = n_out;
    }
    let (dynamic_ids, shuffled_ids) = corrupted.split_at(n_dyn);

    for &k in dynamic_ids {
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let p = crate::geom::polar_to_point(&out[k].curr);
        let moved = Point2::new(
            p.x + spec.dynamic_speed * angle.cos(),
            p.y + spec.dynamic_speed * angle.sin(),
        );
        if moved.x.hypot(moved.y) > MIN_RANGE {
            out[k] = MatchPair::new(out[k].prev, moved.to_polar(), out[k].prev_id, out[k].curr_id);
        }
        labels[k] = MatchLabel::Dynamic;
    }
    if shuffled_ids.len() >= 2 {
        let first = (out[shuffled_ids[0]].curr, out[shuffled_ids[0]].curr_id);
        for w in 0..shuffled_ids.len() - 1 {
            let (a, b) = (shuffled_ids[w], shuffled_ids[w + 1]);
            out[a] = MatchPair::new(out[a].prev, out[b].curr, out[a].prev_id, out[b].curr_id);
        }
        let last = shuffled_ids[shuffled_ids.len() - 1];
        out[last] = MatchPair::new(out[last].prev, first.0, out[last].prev_id, first.1);
        for &k in shuffled_ids {
            labels[k] = MatchLabel::Shuffled;
        }
    }
    (out, labels)
}

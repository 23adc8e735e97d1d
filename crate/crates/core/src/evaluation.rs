//! Trajectory accumulation and distance-normalised segment error metrics.
//!
//! Errors are measured per fixed ground-truth segment length: for every
//! start pose and every length in the ladder, the relative motion the
//! estimate claims over that segment is compared against the ground truth.
//! Averaging over all starts keeps the metric insensitive to *when* in the
//! sequence an error occurs.

use thiserror::Error;

use crate::geom::{compose, inverse, Pose2};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    /// The ground-truth path is shorter than the smallest segment length.
    #[error("trajectory shorter than the smallest segment length")]
    TrajectoryTooShort,
}

/// World-frame poses, index-aligned with scan indices. Index 0 is the
/// identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub poses: Vec<Pose2>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }
}

/// Left-fold relative poses into a world-frame trajectory starting at the
/// identity.
pub fn accumulate(rel_poses: &[Pose2]) -> Trajectory {
    let mut poses = Vec::with_capacity(rel_poses.len() + 1);
    let mut current = Pose2::identity();
    poses.push(current);
    for rel in rel_poses {
        current = compose(&current, rel);
        poses.push(current);
    }
    Trajectory { poses }
}

/// Mean errors over all segments of one ladder length.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthBucket {
    pub length_m: f64,
    /// Mean translational error, percent of segment length.
    pub tr_percent: f64,
    /// Mean rotational error, degrees per meter.
    pub rot_deg_per_m: f64,
    pub tr_std_percent: f64,
    pub rot_std_deg_per_m: f64,
    pub segment_count: usize,
}

/// Distance-weighted means over every segment of every length.
#[derive(Debug, Clone, PartialEq)]
pub struct Overall {
    pub tr_percent: f64,
    pub rot_deg_per_m: f64,
    pub segment_count: usize,
    /// Total ground-truth distance covered by all evaluated segments.
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentErrorReport {
    pub per_length: Vec<LengthBucket>,
    pub overall: Overall,
}

struct SegmentSample {
    tr_percent: f64,
    rot_deg_per_m: f64,
    weight_m: f64,
}

fn mean_and_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let (sum, n) = values.clone().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        return (0.0, 0.0, 0);
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    (mean, var.sqrt(), n)
}

/// KITTI-style segment errors of `est` against `gt`.
///
/// For each start index and ladder length the end index is the first pose at
/// or past that ground-truth path length; errors are normalised by the
/// actual segment length reached, not the nominal one. Every pose is a
/// segment start.
pub fn segment_errors(
    gt: &Trajectory,
    est: &Trajectory,
    lengths: &[f64],
) -> Result<SegmentErrorReport, EvalError> {
    assert_eq!(gt.len(), est.len(), "trajectories must be index-aligned");
    assert!(gt.len() >= 2, "need at least two poses");
    let n = gt.len();

    // Cumulative ground-truth path length up to each pose.
    let mut cum = Vec::with_capacity(n);
    cum.push(0.0);
    for k in 1..n {
        let step = compose(&inverse(&gt.poses[k - 1]), &gt.poses[k]);
        cum.push(cum[k - 1] + step.translation_norm());
    }

    let mut per_length = Vec::new();
    let mut all_samples: Vec<SegmentSample> = Vec::new();
    for &length in lengths {
        debug_assert!(length > 0.0);
        let mut samples = Vec::new();
        let mut end = 0usize;
        for start in 0..n {
            if end <= start {
                end = start + 1;
            }
            while end < n && cum[end] - cum[start] < length {
                end += 1;
            }
            if end >= n || cum[end] - cum[start] < length {
                break;
            }
            let actual = cum[end] - cum[start];
            let gt_rel = compose(&inverse(&gt.poses[start]), &gt.poses[end]);
            let est_rel = compose(&inverse(&est.poses[start]), &est.poses[end]);
            let error = compose(&inverse(&gt_rel), &est_rel);
            samples.push(SegmentSample {
                tr_percent: error.translation_norm() / actual * 100.0,
                rot_deg_per_m: error.dtheta.abs().to_degrees() / actual,
                weight_m: actual,
            });
        }
        if samples.is_empty() {
            continue;
        }
        let (tr_mean, tr_std, count) = mean_and_std(samples.iter().map(|s| s.tr_percent));
        let (rot_mean, rot_std, _) = mean_and_std(samples.iter().map(|s| s.rot_deg_per_m));
        per_length.push(LengthBucket {
            length_m: length,
            tr_percent: tr_mean,
            rot_deg_per_m: rot_mean,
            tr_std_percent: tr_std,
            rot_std_deg_per_m: rot_std,
            segment_count: count,
        });
        all_samples.extend(samples);
    }

    if all_samples.is_empty() {
        return Err(EvalError::TrajectoryTooShort);
    }
    let total_weight: f64 = all_samples.iter().map(|s| s.weight_m).sum();
    let overall = Overall {
        tr_percent: all_samples.iter().map(|s| s.tr_percent * s.weight_m).sum::<f64>() / total_weight,
        rot_deg_per_m: all_samples.iter().map(|s| s.rot_deg_per_m * s.weight_m).sum::<f64>() / total_weight,
        segment_count: all_samples.len(),
        distance_m: total_weight,
    };
    Ok(SegmentErrorReport { per_length, overall })
}

/// Segment-count-weighted average of reports, e.g. across sequences.
pub fn aggregate(reports: &[SegmentErrorReport]) -> SegmentErrorReport {
    assert!(!reports.is_empty(), "nothing to aggregate");

    let mut lengths: Vec<f64> = reports
        .iter()
        .flat_map(|r| r.per_length.iter().map(|b| b.length_m))
        .collect();
    lengths.sort_by(f64::total_cmp);
    lengths.dedup();

    let mut per_length = Vec::new();
    for &length in &lengths {
        let buckets: Vec<&LengthBucket> = reports
            .iter()
            .filter_map(|r| r.per_length.iter().find(|b| b.length_m == length))
            .collect();
        let count: usize = buckets.iter().map(|b| b.segment_count).sum();
        let w = count as f64;
        let tr = buckets.iter().map(|b| b.tr_percent * b.segment_count as f64).sum::<f64>() / w;
        let rot = buckets.iter().map(|b| b.rot_deg_per_m * b.segment_count as f64).sum::<f64>() / w;
        // Pool second moments so the combined standard deviation is exact.
        let tr_m2 = buckets
            .iter()
            .map(|b| (b.tr_std_percent.powi(2) + b.tr_percent.powi(2)) * b.segment_count as f64)
            .sum::<f64>()
            / w;
        let rot_m2 = buckets
            .iter()
            .map(|b| (b.rot_std_deg_per_m.powi(2) + b.rot_deg_per_m.powi(2)) * b.segment_count as f64)
            .sum::<f64>()
            / w;
        per_length.push(LengthBucket {
            length_m: length,
            tr_percent: tr,
            rot_deg_per_m: rot,
            tr_std_percent: (tr_m2 - tr * tr).max(0.0).sqrt(),
            rot_std_deg_per_m: (rot_m2 - rot * rot).max(0.0).sqrt(),
            segment_count: count,
        });
    }

    let count: usize = reports.iter().map(|r| r.overall.segment_count).sum();
    let w = count as f64;
    let overall = Overall {
        tr_percent: reports.iter().map(|r| r.overall.tr_percent * r.overall.segment_count as f64).sum::<f64>() / w,
        rot_deg_per_m: reports.iter().map(|r| r.overall.rot_deg_per_m * r.overall.segment_count as f64).sum::<f64>() / w,
        segment_count: count,
        distance_m: reports.iter().map(|r| r.overall.distance_m).sum(),
    };
    SegmentErrorReport { per_length, overall }
}

//! Relative pose from a set of matches, four ways: least-squares over the
//! full set, RANSAC, and two variants that first trim matches to an
//! inter-quantile band of their single-match arc angles.

use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geom::{apply, polar_to_point, Point2, Pose2};
use crate::single_match::{estimate_single_match, MatchPair, SingleMatchEstimate};

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    /// Too few usable matches, or a point configuration without enough
    /// spread to constrain the transform.
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(&'static str),
}

/// Pose estimation strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverMethod {
    /// Least-squares alignment over every match.
    FullSvd,
    /// Two-point RANSAC with a range-compensated inlier gate.
    Ransac,
    /// Quantile-trimmed arc angles, then least-squares over the survivors.
    CcQuantileSvd,
    /// Quantile-trimmed arc angles, then component means of the per-match poses.
    CcQuantileMeans,
}

impl SolverMethod {
    pub const ALL: [SolverMethod; 4] = [
        SolverMethod::FullSvd,
        SolverMethod::Ransac,
        SolverMethod::CcQuantileSvd,
        SolverMethod::CcQuantileMeans,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SolverMethod::FullSvd => "full-svd",
            SolverMethod::Ransac => "ransac",
            SolverMethod::CcQuantileSvd => "cc-svd",
            SolverMethod::CcQuantileMeans => "cc-means",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: SolverMethod,
    /// Lower and upper rank quantiles of the retained arc-angle band.
    pub q_lo: f64,
    pub q_hi: f64,
    pub ransac_iters: usize,
    /// Inlier gate: residual <= base + coeff * range.
    pub ransac_base_thresh: f64,
    pub ransac_range_coeff: f64,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: SolverMethod::CcQuantileMeans,
            q_lo: 0.35,
            q_hi: 0.65,
            ransac_iters: 100,
            ransac_base_thresh: 0.5,
            ransac_range_coeff: 0.01,
            rng_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_method(method: SolverMethod) -> Self {
        SolverConfig { method, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.q_lo) || !(0.0..=1.0).contains(&self.q_hi) || self.q_lo >= self.q_hi {
            return Err(format!("quantiles must satisfy 0 <= q_lo < q_hi <= 1, got ({}, {})", self.q_lo, self.q_hi));
        }
        if self.ransac_iters == 0 {
            return Err("ransac_iters must be >= 1".into());
        }
        if self.ransac_base_thresh <= 0.0 || self.ransac_range_coeff <= 0.0 {
            return Err("ransac thresholds must be positive".into());
        }
        Ok(())
    }
}

/// A solved frame: the pose, which matches were used, and (for the
/// constant-curvature methods) the per-match estimates behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub pose: Pose2,
    /// Indices into the input match list that contributed to the pose.
    pub inlier_ids: Vec<usize>,
    /// Per-match motion estimates; empty for `FullSvd` and `Ransac`.
    pub per_match: Vec<SingleMatchEstimate>,
}

fn cartesian(pairs: &[MatchPair]) -> (Vec<Point2>, Vec<Point2>) {
    let prev = pairs.iter().map(|m| polar_to_point(&m.prev)).collect();
    let curr = pairs.iter().map(|m| polar_to_point(&m.curr)).collect();
    (prev, curr)
}

/// Least-squares rigid transform `g` minimizing
/// `sum_i || prev_i - g * curr_i ||^2` over the matched points.
///
/// The rotation comes from the SVD of the cross-covariance with the usual
/// sign correction on the smallest singular vector, so the result is always
/// a proper rotation (det +1), never a reflection.
pub fn svd_align(pairs: &[MatchPair]) -> Result<Pose2, SolveError> {
    if pairs.len() < 2 {
        return Err(SolveError::DegenerateConfiguration("need at least 2 matches"));
    }
    let (prev, curr) = cartesian(pairs);
    let n = pairs.len() as f64;
    let centroid = |pts: &[Point2]| {
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(ax, ay), p| (ax + p.x, ay + p.y));
        Vector2::new(sx / n, sy / n)
    };
    let c_prev = centroid(&prev);
    let c_curr = centroid(&curr);

    let mut h = Matrix2::zeros();
    for (p, q) in curr.iter().zip(&prev) {
        let x = Vector2::new(p.x, p.y) - c_curr;
        let y = Vector2::new(q.x, q.y) - c_prev;
        h += x * y.transpose();
    }
    let svd = h.svd(true, true);
    if svd.singular_values[0] < 1e-12 {
        return Err(SolveError::DegenerateConfiguration("matched points have no spread"));
    }
    let u = svd.u.expect("u requested");
    let v = svd.v_t.expect("v_t requested").transpose();
    let d = (v * u.transpose()).determinant().signum();
    let rot = v * Matrix2::new(1.0, 0.0, 0.0, d) * u.transpose();
    let dtheta = rot[(1, 0)].atan2(rot[(0, 0)]);
    let t = c_prev - rot * c_curr;
    Ok(Pose2::new(t.x, t.y, dtheta))
}

/// Two-point RANSAC: propose from minimal samples, gate the rest by a
/// range-compensated residual, refit on the best consensus set.
pub fn ransac_solve(pairs: &[MatchPair], cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    if pairs.len() < 2 {
        return Err(SolveError::DegenerateConfiguration("need at least 2 matches"));
    }
    let (prev, curr) = cartesian(pairs);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut best: Option<Vec<usize>> = None;
    for _ in 0..cfg.ransac_iters {
        let a = rng.gen_range(0..pairs.len());
        let mut b = rng.gen_range(0..pairs.len());
        while b == a {
            b = rng.gen_range(0..pairs.len());
        }
        let Ok(pose) = svd_align(&[pairs[a], pairs[b]]) else {
            continue;
        };
        let inliers: Vec<usize> = (0..pairs.len())
            .filter(|&k| {
                let gate = cfg.ransac_base_thresh + cfg.ransac_range_coeff * pairs[k].prev.range;
                prev[k].distance(&apply(&pose, &curr[k])) <= gate
            })
            .collect();
        if inliers.len() >= 2 && best.as_ref().is_none_or(|b| inliers.len() > b.len()) {
            best = Some(inliers);
        }
    }
    let inlier_ids = best.ok_or(SolveError::DegenerateConfiguration("no sample reached consensus"))?;
    let subset: Vec<MatchPair> = inlier_ids.iter().map(|&k| pairs[k]).collect();
    Ok(SolveResult { pose: svd_align(&subset)?, inlier_ids, per_match: Vec::new() })
}

/// Indices of the estimates whose arc angle falls in the `[q_lo, q_hi)` rank
/// band of the sorted angles.
///
/// Rank arithmetic uses `ceil(q_lo n) <= rank < max(ceil(q_lo n)+1, floor(q_hi n))`
/// with ties broken by original index; the band is clamped so it is never
/// empty. Returned indices are ascending.
pub fn quantile_subset(estimates: &[SingleMatchEstimate], q_lo: f64, q_hi: f64) -> Vec<usize> {
    assert!(!estimates.is_empty(), "quantile_subset needs at least one estimate");
    assert!((0.0..=1.0).contains(&q_lo) && (0.0..=1.0).contains(&q_hi) && q_lo < q_hi);
    let n = estimates.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        estimates[a]
            .theta()
            .partial_cmp(&estimates[b].theta())
            .unwrap()
            .then(a.cmp(&b))
    });
    // Nudge before rounding so exact real-valued products (e.g. 0.2 * 10)
    // round the way the rank formula intends despite f64 representation.
    let lo = ((q_lo * n as f64 - 1e-9).ceil() as usize).min(n - 1);
    let hi = ((q_hi * n as f64 + 1e-9).floor() as usize).clamp(lo + 1, n.max(lo + 1));
    let mut subset: Vec<usize> = order[lo..hi.min(n)].to_vec();
    subset.sort_unstable();
    subset
}

/// Circular mean of angles, immune to wrap-around at +/-pi.
fn circular_mean(angles: impl Iterator<Item = f64>) -> f64 {
    let (ss, sc, _n) = angles.fold((0.0, 0.0, 0usize), |(ss, sc, n), a| {
        (ss + a.sin(), sc + a.cos(), n + 1)
    });
    ss.atan2(sc)
}

/// Constant-curvature solve: estimate per-match motion, keep the
/// inter-quantile band of arc angles, and fuse the survivors.
///
/// The means variant averages `dx`, `dy` and (circularly) `dtheta` of the
/// per-match poses; the result is deliberately not projected back onto an
/// arc, so it can express motions the curvature model cannot.
pub fn cc_solve(pairs: &[MatchPair], cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    let mut estimates = Vec::with_capacity(pairs.len());
    let mut pair_ids = Vec::with_capacity(pairs.len());
    for (k, m) in pairs.iter().enumerate() {
        if let Ok(est) = estimate_single_match(m) {
            estimates.push(est);
            pair_ids.push(k);
        }
    }
    if estimates.is_empty() {
        return Err(SolveError::DegenerateConfiguration("no usable single-match estimates"));
    }
    let band = quantile_subset(&estimates, cfg.q_lo, cfg.q_hi);
    let inlier_ids: Vec<usize> = band.iter().map(|&e| pair_ids[e]).collect();

    let pose = match cfg.method {
        SolverMethod::CcQuantileMeans => {
            let n = band.len() as f64;
            let (sx, sy) = band
                .iter()
                .map(|&e| estimates[e].pose)
                .fold((0.0, 0.0), |(ax, ay), p| (ax + p.dx, ay + p.dy));
            let dtheta = circular_mean(band.iter().map(|&e| estimates[e].pose.dtheta));
            Pose2::new(sx / n, sy / n, dtheta)
        }
        SolverMethod::CcQuantileSvd => {
            if band.len() < 2 {
                return Err(SolveError::DegenerateConfiguration("quantile band too small for alignment"));
            }
            let subset: Vec<MatchPair> = band.iter().map(|&e| estimates[e].source).collect();
            svd_align(&subset)?
        }
        _ => unreachable!("cc_solve only serves the constant-curvature methods"),
    };
    Ok(SolveResult { pose, inlier_ids, per_match: estimates })
}

/// Dispatch a frame to the configured strategy.
pub fn solve(pairs: &[MatchPair], cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    match cfg.method {
        SolverMethod::FullSvd => Ok(SolveResult {
            pose: svd_align(pairs)?,
            inlier_ids: (0..pairs.len()).collect(),
            per_match: Vec::new(),
        }),
        SolverMethod::Ransac => ransac_solve(pairs, cfg),
        SolverMethod::CcQuantileSvd | SolverMethod::CcQuantileMeans => cc_solve(pairs, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{cc_to_pose, inverse, pose_to_cc, MotionParams, PolarObservation};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Matches generated by a known pose: `curr = g^-1 * prev`.
    fn pairs_under_pose(pose: &Pose2, prev_pts: &[(f64, f64)]) -> Vec<MatchPair> {
        let inv = inverse(pose);
        prev_pts
            .iter()
            .enumerate()
            .map(|(k, &(x, y))| {
                let p = Point2::new(x, y);
                let q = apply(&inv, &p);
                MatchPair::new(p.to_polar(), q.to_polar(), k, k)
            })
            .collect()
    }

    fn assert_pose_eq(a: &Pose2, b: &Pose2, eps: f64) {
        assert_relative_eq!(a.dx, b.dx, epsilon = eps);
        assert_relative_eq!(a.dy, b.dy, epsilon = eps);
        assert_relative_eq!(a.dtheta, b.dtheta, epsilon = eps);
    }

    /// Sum of squared residuals of `pose` over the matches.
    fn residual_sq(pairs: &[MatchPair], pose: &Pose2) -> f64 {
        pairs
            .iter()
            .map(|m| {
                let p = polar_to_point(&m.prev);
                let q = apply(pose, &polar_to_point(&m.curr));
                p.distance(&q).powi(2)
            })
            .sum()
    }

    #[test]
    fn identity_motion_aligns_to_identity() {
        let pairs = pairs_under_pose(&Pose2::identity(), &[(3.0, 1.0), (-2.0, 4.0), (7.0, -5.0)]);
        assert_pose_eq(&svd_align(&pairs).unwrap(), &Pose2::identity(), 1e-12);
    }

    #[test]
    fn two_noise_free_pairs_recover_the_pose_exactly() {
        let truth = Pose2::new(1.0, 0.2, 0.1);
        let pairs = pairs_under_pose(&truth, &[(10.0, 3.0), (-4.0, 8.0)]);
        assert_pose_eq(&svd_align(&pairs).unwrap(), &truth, 1e-9);
    }

    #[test]
    fn noisy_alignment_stays_within_statistical_bounds() {
        let truth = Pose2::new(0.9, -0.1, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let sigma = 0.05;
        let prev_pts: Vec<(f64, f64)> = (0..50)
            .map(|_| (rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0)))
            .collect();
        let mut pairs = pairs_under_pose(&truth, &prev_pts);
        for m in pairs.iter_mut() {
            let jitter = |rng: &mut ChaCha8Rng| {
                sigma * rng.sample::<f64, _>(rand_distr::StandardNormal)
            };
            let p = polar_to_point(&m.prev);
            let q = polar_to_point(&m.curr);
            let p = Point2::new(p.x + jitter(&mut rng), p.y + jitter(&mut rng));
            let q = Point2::new(q.x + jitter(&mut rng), q.y + jitter(&mut rng));
            *m = MatchPair::new(p.to_polar(), q.to_polar(), m.prev_id, m.curr_id);
        }
        let est = svd_align(&pairs).unwrap();
        let bound = 3.0 * sigma / (50.0f64).sqrt();
        assert!((est.dx - truth.dx).abs() < bound, "dx error {}", est.dx - truth.dx);
        assert!((est.dy - truth.dy).abs() < bound, "dy error {}", est.dy - truth.dy);
    }

    #[test]
    fn rotation_is_always_proper() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(2..12);
            let pairs: Vec<MatchPair> = (0..n)
                .map(|k| {
                    let p = Point2::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
                    let q = Point2::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
                    MatchPair::new(p.to_polar(), q.to_polar(), k, k)
                })
                .collect();
            if let Ok(pose) = svd_align(&pairs) {
                // A proper rotation wrapped into a pose keeps a finite angle;
                // reconstruct the matrix and check its determinant.
                let (s, c) = pose.dtheta.sin_cos();
                assert_relative_eq!(c * c + s * s, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn mirrored_points_still_produce_a_proper_rotation() {
        // curr is prev mirrored across the x axis; the best PROPER rotation
        // must win over the (forbidden) reflection.
        let prev_pts = [(3.0, 1.0), (-2.0, 4.0), (7.0, -5.0), (1.0, 9.0)];
        let pairs: Vec<MatchPair> = prev_pts
            .iter()
            .enumerate()
            .map(|(k, &(x, y))| {
                MatchPair::new(Point2::new(x, y).to_polar(), Point2::new(x, -y).to_polar(), k, k)
            })
            .collect();
        let pose = svd_align(&pairs).unwrap();
        assert!(pose.dtheta.is_finite());
        let perturbations = [(0.01, 0.0, 0.0), (0.0, 0.01, 0.0), (0.0, 0.0, 0.01)];
        let base = residual_sq(&pairs, &pose);
        for (dx, dy, dt) in perturbations {
            let alt = Pose2::new(pose.dx + dx, pose.dy + dy, pose.dtheta + dt);
            assert!(residual_sq(&pairs, &alt) >= base);
        }
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let one = pairs_under_pose(&Pose2::identity(), &[(1.0, 1.0)]);
        assert!(svd_align(&one).is_err());

        let coincident: Vec<MatchPair> = (0..3)
            .map(|k| {
                MatchPair::new(
                    PolarObservation::new(5.0, 0.2),
                    PolarObservation::new(5.0, 0.2),
                    k,
                    k,
                )
            })
            .collect();
        assert!(svd_align(&coincident).is_err());
    }

    #[test]
    fn svd_result_is_locally_optimal() {
        let truth = Pose2::new(1.2, -0.4, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let prev_pts: Vec<(f64, f64)> = (0..20)
            .map(|_| (rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0)))
            .collect();
        let mut pairs = pairs_under_pose(&truth, &prev_pts);
        // Break exactness so the optimum is interior.
        for m in pairs.iter_mut() {
            let q = polar_to_point(&m.curr);
            let q = Point2::new(q.x + rng.gen_range(-0.1..0.1), q.y + rng.gen_range(-0.1..0.1));
            *m = MatchPair::new(m.prev, q.to_polar(), m.prev_id, m.curr_id);
        }
        let pose = svd_align(&pairs).unwrap();
        let base = residual_sq(&pairs, &pose);
        for _ in 0..100 {
            let alt = Pose2::new(
                pose.dx + rng.gen_range(-0.05..0.05),
                pose.dy + rng.gen_range(-0.05..0.05),
                pose.dtheta + rng.gen_range(-0.01..0.01),
            );
            assert!(residual_sq(&pairs, &alt) >= base);
        }
    }

    #[test]
    fn ransac_on_clean_input_keeps_everything() {
        let truth = Pose2::new(0.8, 0.1, 0.04);
        let pairs = pairs_under_pose(&truth, &[(5.0, 2.0), (-3.0, 7.0), (10.0, -4.0), (2.0, 2.0)]);
        let cfg = SolverConfig::with_method(SolverMethod::Ransac);
        let res = ransac_solve(&pairs, &cfg).unwrap();
        assert_eq!(res.inlier_ids, vec![0, 1, 2, 3]);
        assert_pose_eq(&res.pose, &svd_align(&pairs).unwrap(), 1e-12);
        assert!(res.per_match.is_empty());
    }

    #[test]
    fn ransac_survives_thirty_percent_clutter() {
        let truth = Pose2::new(2.0, 0.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let prev_pts: Vec<(f64, f64)> = (0..30)
            .map(|_| (rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0)))
            .collect();
        let mut pairs = pairs_under_pose(&truth, &prev_pts);
        for k in 0..9 {
            // Replace the current-side observation with uniform clutter.
            let clutter = Point2::new(rng.gen_range(-40.0..40.0), rng.gen_range(-40.0..40.0));
            pairs[k * 3] = MatchPair::new(pairs[k * 3].prev, clutter.to_polar(), k * 3, k * 3);
        }
        let cfg = SolverConfig { ransac_iters: 100, rng_seed: 7, ..SolverConfig::with_method(SolverMethod::Ransac) };
        let res = ransac_solve(&pairs, &cfg).unwrap();
        assert!((res.pose.dx - truth.dx).abs() < 0.05);
        assert!((res.pose.dy - truth.dy).abs() < 0.05);
    }

    #[test]
    fn ransac_minimal_input_marks_both_inliers() {
        let truth = Pose2::new(1.0, -0.5, 0.2);
        let pairs = pairs_under_pose(&truth, &[(4.0, 1.0), (-6.0, 3.0)]);
        let cfg = SolverConfig::with_method(SolverMethod::Ransac);
        let res = ransac_solve(&pairs, &cfg).unwrap();
        assert_eq!(res.inlier_ids, vec![0, 1]);
        assert_pose_eq(&res.pose, &truth, 1e-9);
    }

    fn synthetic_estimate(theta: f64, r: f64, id: usize) -> SingleMatchEstimate {
        let m = MatchPair::new(
            PolarObservation::new(10.0 + id as f64, 0.1),
            PolarObservation::new(9.5 + id as f64, 0.1),
            id,
            id,
        );
        SingleMatchEstimate::from_params(MotionParams::arc(theta, r), m)
    }

    #[test]
    fn quantile_band_for_ten_items_keeps_the_middle_two() {
        let thetas = [0.9, 0.1, 0.5, 0.3, 0.7, 0.2, 0.8, 0.4, 0.6, 1.0];
        let estimates: Vec<_> = thetas
            .iter()
            .enumerate()
            .map(|(k, &t)| synthetic_estimate(t, 20.0, k))
            .collect();
        // Sorted ranks 4 and 5 hold thetas 0.5 and 0.6: original indices 2, 8.
        assert_eq!(quantile_subset(&estimates, 0.35, 0.65), vec![2, 8]);
    }

    #[test]
    fn quantile_band_with_equal_angles_is_positional() {
        let estimates: Vec<_> = (0..10).map(|k| synthetic_estimate(0.25, 20.0, k)).collect();
        assert_eq!(quantile_subset(&estimates, 0.35, 0.65), vec![4, 5]);
        assert_eq!(quantile_subset(&estimates, 0.0, 1.0), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn quantile_band_never_empties() {
        let single = vec![synthetic_estimate(0.4, 15.0, 0)];
        assert_eq!(quantile_subset(&single, 0.35, 0.65), vec![0]);
        for n in 1..40 {
            let estimates: Vec<_> = (0..n).map(|k| synthetic_estimate(0.01 * k as f64, 30.0, k)).collect();
            let band = quantile_subset(&estimates, 0.35, 0.65);
            assert!(!band.is_empty(), "empty band at n={n}");
            assert!(band.iter().all(|&i| i < n));
        }
    }

    #[test]
    fn quantile_band_is_a_contiguous_rank_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n = rng.gen_range(1..60);
            let estimates: Vec<_> = (0..n)
                .map(|k| synthetic_estimate(rng.gen_range(-3.0..3.0), 25.0, k))
                .collect();
            let band = quantile_subset(&estimates, 0.35, 0.65);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                estimates[a].theta().partial_cmp(&estimates[b].theta()).unwrap().then(a.cmp(&b))
            });
            let ranks: Vec<usize> = band
                .iter()
                .map(|&i| order.iter().position(|&o| o == i).unwrap())
                .collect();
            let lo = *ranks.iter().min().unwrap();
            let hi = *ranks.iter().max().unwrap();
            assert_eq!(hi - lo + 1, ranks.len(), "ranks not contiguous: {ranks:?}");
        }
    }

    /// Matches observed from two poses along one noise-free arc.
    fn arc_frame(theta: f64, r: f64, landmarks: &[(f64, f64)]) -> (Pose2, Vec<MatchPair>) {
        let pose = cc_to_pose(&MotionParams::arc(theta, r));
        let pairs = pairs_under_pose(&pose, landmarks);
        (pose, pairs)
    }

    #[test]
    fn cc_solve_recovers_a_clean_arc_with_both_variants() {
        let landmarks: Vec<(f64, f64)> = vec![
            (12.0, 4.0), (-8.0, 10.0), (20.0, -6.0), (5.0, 15.0), (-14.0, -3.0),
            (18.0, 9.0), (-4.0, -12.0), (7.0, -18.0), (25.0, 2.0), (-20.0, 6.0),
            (3.0, 8.0), (11.0, -11.0),
        ];
        let (truth, pairs) = arc_frame(0.1, 20.0, &landmarks);
        for method in [SolverMethod::CcQuantileSvd, SolverMethod::CcQuantileMeans] {
            let cfg = SolverConfig::with_method(method);
            let res = cc_solve(&pairs, &cfg).unwrap();
            assert_pose_eq(&res.pose, &truth, 1e-9);
            assert_eq!(res.per_match.len(), pairs.len());
        }
    }

    #[test]
    fn quantile_band_excludes_extreme_angle_clutter() {
        // 6 arc-consistent matches (identical theta) + 4 clutter matches with
        // extreme angles on both sides.
        let landmarks: Vec<(f64, f64)> = vec![
            (12.0, 4.0), (-8.0, 10.0), (20.0, -6.0), (5.0, 15.0), (-14.0, -3.0), (9.0, 9.0),
        ];
        let (_, mut pairs) = arc_frame(0.05, 40.0, &landmarks);
        let n_true = pairs.len();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for k in 0..4 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let motion = MotionParams::arc(sign * rng.gen_range(1.0..2.5), rng.gen_range(2.0..5.0) * sign);
            let pose = cc_to_pose(&motion);
            let p = Point2::new(rng.gen_range(5.0..25.0), rng.gen_range(-10.0..10.0));
            let q = apply(&inverse(&pose), &p);
            pairs.push(MatchPair::new(p.to_polar(), q.to_polar(), n_true + k, n_true + k));
        }
        let cfg = SolverConfig::with_method(SolverMethod::CcQuantileMeans);
        let res = cc_solve(&pairs, &cfg).unwrap();
        assert!(!res.inlier_ids.is_empty());
        assert!(res.inlier_ids.iter().all(|&k| k < n_true), "clutter leaked: {:?}", res.inlier_ids);
    }

    #[test]
    fn stationary_frame_solves_to_identity() {
        let pairs: Vec<MatchPair> = [(6.0, 0.4), (9.0, -1.2), (14.0, 2.0)]
            .iter()
            .enumerate()
            .map(|(k, &(r, b))| {
                let o = PolarObservation::new(r, b);
                MatchPair::new(o, o, k, k)
            })
            .collect();
        let cfg = SolverConfig::with_method(SolverMethod::CcQuantileMeans);
        let res = cc_solve(&pairs, &cfg).unwrap();
        assert_pose_eq(&res.pose, &Pose2::identity(), 1e-15);
    }

    #[test]
    fn means_pose_is_not_projected_back_onto_an_arc() {
        // Two matches implying different arcs: their mean violates the chord
        // condition, and the API must report exactly that mean.
        let (_, pairs_a) = arc_frame(0.2, 10.0, &[(15.0, 5.0)]);
        let (_, pairs_b) = arc_frame(0.1, 30.0, &[(10.0, -8.0)]);
        let pairs = vec![pairs_a[0], pairs_b[0]];
        let cfg = SolverConfig { q_lo: 0.0, q_hi: 1.0, ..SolverConfig::with_method(SolverMethod::CcQuantileMeans) };
        let res = cc_solve(&pairs, &cfg).unwrap();

        let pa = cc_to_pose(&MotionParams::arc(0.2, 10.0));
        let pb = cc_to_pose(&MotionParams::arc(0.1, 30.0));
        assert_relative_eq!(res.pose.dx, (pa.dx + pb.dx) / 2.0, epsilon = 1e-12);
        assert_relative_eq!(res.pose.dy, (pa.dy + pb.dy) / 2.0, epsilon = 1e-12);
        assert!(pose_to_cc(&res.pose).is_err(), "mean pose unexpectedly lies on an arc");
    }

    #[test]
    fn identical_inputs_and_seed_give_bit_identical_results() {
        let truth = Pose2::new(1.1, 0.05, 0.08);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let prev_pts: Vec<(f64, f64)> = (0..25)
            .map(|_| (rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0)))
            .collect();
        let pairs = pairs_under_pose(&truth, &prev_pts);
        for method in SolverMethod::ALL {
            let cfg = SolverConfig { rng_seed: 123, ..SolverConfig::with_method(method) };
            let a = solve(&pairs, &cfg).unwrap();
            let b = solve(&pairs, &cfg).unwrap();
            assert_eq!(a, b, "method {method:?} not deterministic");
        }
    }
}

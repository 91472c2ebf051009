//! Planar primitives used by every collision and deviation computation.
//!
//! Polygons are normalised to counter-clockwise order when constructed, so the
//! interior of every edge is on its left-hand side.

mod gjk;
mod polygon;
mod polyline;

use std::f64::consts::{PI, TAU};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gjk::{sdf_convex, SeparatorResult};
pub use polygon::{
    convex_overlap, footprint_inside_field, inflate_edge, polygon_polygon_collides, segment_intersects_polygon,
    segments_properly_intersect, Location, Polygon,
};
pub use polyline::{Polyline, Projection};

/// Absolute tolerance for geometric predicates, in metres.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("consecutive points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
    #[error("polygon is self-intersecting")]
    SelfIntersecting,
    #[error("polygon has zero area")]
    Degenerate,
    #[error("polygon is not convex")]
    NonConvex,
    #[error("edge index {index} out of range for polygon with {len} edges")]
    EdgeOutOfRange { index: usize, len: usize },
    #[error("edge offset collapses the polygon")]
    Collapse,
    #[error("invalid sensor fan: {0}")]
    InvalidFan(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        Point2::new(theta.cos(), theta.sin())
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Point2 {
        let n = self.norm();
        Point2::new(self.x / n, self.y / n)
    }

    pub fn rotated(self, theta: f64) -> Point2 {
        let (s, c) = theta.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        self + (other - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Point2 {
    fn add_assign(&mut self, rhs: Point2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(p: [f64; 2]) -> Self {
        Point2::new(p[0], p[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Position of the rear-axle centre plus heading.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Point2,
    pub heading: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose {
            position: Point2::new(x, y),
            heading,
        }
    }

    pub fn from_parts(position: Point2, heading: f64) -> Self {
        Pose { position, heading }
    }

    pub fn direction(&self) -> Point2 {
        Point2::from_angle(self.heading)
    }

    /// Maps a point expressed in this pose's body frame into the world frame.
    pub fn transform(&self, local: Point2) -> Point2 {
        self.position + local.rotated(self.heading)
    }

    /// Expresses a world point in this pose's body frame.
    pub fn inverse_transform(&self, world: Point2) -> Point2 {
        (world - self.position).rotated(-self.heading)
    }

    pub fn approx_eq(&self, other: &Pose, tol: f64) -> bool {
        self.position.distance(other.position) <= tol && wrap_to_pi(self.heading - other.heading).abs() <= tol
    }
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_to_2pi(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_to_pi(theta: f64) -> f64 {
    let w = wrap_to_2pi(theta + PI) - PI;
    if w < -PI {
        w + TAU
    } else {
        w
    }
}

/// Euclidean distance from `z` to the closed segment `a`–`b`.
pub fn point_segment_distance(z: Point2, a: Point2, b: Point2) -> f64 {
    z.distance(closest_point_on_segment(z, a, b).0)
}

/// Closest point on segment `a`–`b` to `z`, together with its parameter in `[0, 1]`.
pub fn closest_point_on_segment(z: Point2, a: Point2, b: Point2) -> (Point2, f64) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (a, 0.0);
    }
    let t = ((z - a).dot(ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

/// Sector-shaped detection region centred on the vehicle heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorFan {
    range: f64,
    fov: f64,
}

impl SensorFan {
    pub fn new(range: f64, fov: f64) -> Result<Self, GeometryError> {
        if !(range > 0.0) || !range.is_finite() {
            return Err(GeometryError::InvalidFan("range must be positive"));
        }
        if !(0.0..=PI).contains(&fov) {
            return Err(GeometryError::InvalidFan("field of view must lie in [0, π]"));
        }
        Ok(SensorFan { range, fov })
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn fov(&self) -> f64 {
        self.fov
    }

    pub fn contains(&self, pose: &Pose, q: Point2) -> bool {
        fan_contains(pose, self, q)
    }
}

pub fn fan_contains(pose: &Pose, fan: &SensorFan, q: Point2) -> bool {
    let rel = q - pose.position;
    let dist = rel.norm();
    if dist > fan.range + EPS {
        return false;
    }
    if dist <= EPS {
        return true;
    }
    let bearing = rel.y.atan2(rel.x);
    wrap_to_pi(bearing - pose.heading).abs() <= 0.5 * fan.fov + EPS
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn segment_distance_cases() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(2.0, 0.0);
        assert_eq!(point_segment_distance(Point2::new(0.0, 1.0), a, b), 1.0);
        assert_eq!(point_segment_distance(Point2::new(3.0, 0.0), a, b), 1.0);
        assert_eq!(point_segment_distance(Point2::new(1.0, 0.0), a, b), 0.0);
    }

    #[test]
    fn angle_wrapping() {
        assert!((wrap_to_2pi(-0.5) - (TAU - 0.5)).abs() < 1e-12);
        assert_eq!(wrap_to_2pi(TAU), 0.0);
        assert!((wrap_to_pi(3.0 * PI / 2.0) + FRAC_PI_2).abs() < 1e-12);
        assert!(wrap_to_pi(PI) < PI);
    }

    #[test]
    fn fan_membership() {
        let fan = SensorFan::new(15.0, FRAC_PI_2).unwrap();
        let pose = Pose::new(0.0, 0.0, 0.0);
        assert!(fan_contains(&pose, &fan, Point2::new(10.0, 0.0)));
        assert!(!fan_contains(&pose, &fan, Point2::new(0.0, 10.0)));
        assert!(!fan_contains(&pose, &fan, Point2::new(20.0, 0.0)));
    }

    #[test]
    fn half_plane_fan_accepts_forward_points() {
        let fan = SensorFan::new(10.0, PI).unwrap();
        let pose = Pose::new(1.0, -2.0, 0.7);
        for i in 0..200 {
            let ang = -FRAC_PI_2 + PI * (i as f64) / 199.0;
            let r = 9.99 * ((i * 37 % 101) as f64 + 1.0) / 102.0;
            let q = pose.position + Point2::from_angle(pose.heading + ang) * r;
            assert!(fan_contains(&pose, &fan, q), "angle {ang}");
        }
    }

    #[test]
    fn fan_rejects_bad_parameters() {
        assert!(SensorFan::new(0.0, 1.0).is_err());
        assert!(SensorFan::new(1.0, 4.0).is_err());
    }

    #[test]
    fn pose_transform_roundtrip() {
        let pose = Pose::new(3.0, -1.0, 1.1);
        let p = Point2::new(0.4, 2.5);
        let back = pose.inverse_transform(pose.transform(p));
        assert!(back.distance(p) < 1e-12);
    }
}

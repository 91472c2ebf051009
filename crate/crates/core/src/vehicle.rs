//! Kinematic bicycle model, body footprint and search motion primitives.
//!
//! Curvature always carries the steering sign (`tan δ / L`), so a reverse
//! primitive with positive curvature turns the heading clockwise.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap_to_2pi, Point2, Polygon, Pose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VehicleError {
    #[error("invalid vehicle parameter: {0}")]
    InvalidParams(&'static str),
    #[error("curvature count must be odd and at least 3, got {0}")]
    BadCurvatureCount(usize),
    #[error("primitive arc length must be positive")]
    BadArcLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub body_length: f64,
    pub body_width: f64,
    /// Rear bumper to rear axle.
    pub rear_overhang: f64,
    /// Radians.
    pub max_steer: f64,
    pub max_accel: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams::new(2.6, 4.7, 2.2, 30f64.to_radians(), 2.0).expect("default vehicle is valid")
    }
}

impl VehicleParams {
    /// Overhangs are split evenly front and rear.
    pub fn new(
        wheelbase: f64,
        body_length: f64,
        body_width: f64,
        max_steer: f64,
        max_accel: f64,
    ) -> Result<Self, VehicleError> {
        let params = VehicleParams {
            wheelbase,
            body_length,
            body_width,
            rear_overhang: (body_length - wheelbase) / 2.0,
            max_steer,
            max_accel,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), VehicleError> {
        let finite = [
            self.wheelbase,
            self.body_length,
            self.body_width,
            self.rear_overhang,
            self.max_steer,
            self.max_accel,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(VehicleError::InvalidParams("non-finite value"));
        }
        if self.wheelbase <= 0.0 {
            return Err(VehicleError::InvalidParams("wheelbase must be positive"));
        }
        if self.body_length < self.wheelbase {
            return Err(VehicleError::InvalidParams("body shorter than wheelbase"));
        }
        if self.body_width <= 0.0 {
            return Err(VehicleError::InvalidParams("body width must be positive"));
        }
        if self.rear_overhang < 0.0 || self.rear_overhang > self.body_length - self.wheelbase {
            return Err(VehicleError::InvalidParams("rear overhang out of range"));
        }
        if !(self.max_steer > 0.0 && self.max_steer < std::f64::consts::FRAC_PI_2) {
            return Err(VehicleError::InvalidParams("max steer must lie in (0, pi/2)"));
        }
        if self.max_accel <= 0.0 {
            return Err(VehicleError::InvalidParams("max acceleration must be positive"));
        }
        Ok(())
    }

    pub fn max_curvature(&self) -> f64 {
        self.max_steer.tan() / self.wheelbase
    }

    pub fn turning_radius(&self) -> f64 {
        1.0 / self.max_curvature()
    }

    /// Rear axle to front bumper.
    pub fn front_length(&self) -> f64 {
        self.body_length - self.rear_overhang
    }

    pub fn half_width(&self) -> f64 {
        self.body_width / 2.0
    }

    /// Body corners in the rear-axle frame, counter-clockwise from rear right.
    pub fn local_corners(&self) -> [Point2; 4] {
        let l = self.front_length();
        let r = self.rear_overhang;
        let w = self.half_width();
        [
            Point2::new(-r, -w),
            Point2::new(l, -w),
            Point2::new(l, w),
            Point2::new(-r, w),
        ]
    }

    /// Radius of the circle about the rear axle enclosing the body.
    pub fn bounding_radius(&self) -> f64 {
        self.front_length().max(self.rear_overhang).hypot(self.half_width())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, theta: f64, v: f64) -> Self {
        VehicleState {
            x,
            y,
            theta: wrap_to_2pi(theta),
            v,
        }
    }

    pub fn from_pose(pose: Pose, v: f64) -> Self {
        VehicleState::new(pose.position.x, pose.position.y, pose.heading, v)
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.theta)
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.theta.is_finite() && self.v.is_finite()
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x, self.y, self.theta, self.v]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlInput {
    /// Front wheel angle, radians.
    pub steer: f64,
    pub accel: f64,
}

impl ControlInput {
    pub fn new(steer: f64, accel: f64) -> Self {
        ControlInput { steer, accel }
    }

    pub fn within_bounds(&self, params: &VehicleParams) -> bool {
        self.steer.abs() <= params.max_steer + 1e-12 && self.accel.abs() <= params.max_accel + 1e-12
    }

    pub fn clamped(&self, params: &VehicleParams) -> ControlInput {
        ControlInput {
            steer: self.steer.clamp(-params.max_steer, params.max_steer),
            accel: self.accel.clamp(-params.max_accel, params.max_accel),
        }
    }
}

/// One forward-Euler step of the bicycle model.
pub fn step(x: &VehicleState, u: &ControlInput, params: &VehicleParams, dt: f64) -> VehicleState {
    let (s, c) = x.theta.sin_cos();
    VehicleState {
        x: x.x + x.v * c * dt,
        y: x.y + x.v * s * dt,
        theta: wrap_to_2pi(x.theta + x.v * u.steer.tan() / params.wheelbase * dt),
        v: x.v + u.accel * dt,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Reverse,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Reverse => -1.0,
        }
    }

    pub fn from_sign(s: f64) -> Self {
        if s < 0.0 {
            Direction::Reverse
        } else {
            Direction::Forward
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionPrimitive {
    pub curvature: f64,
    pub direction: Direction,
    pub arc_length: f64,
}

/// Pose after travelling signed distance `s` on a constant-curvature arc.
pub fn advance(pose: &Pose, curvature: f64, s: f64) -> Pose {
    let th0 = pose.heading;
    let th1 = th0 + curvature * s;
    let delta = if (curvature * s).abs() < 1e-9 {
        // second-order series keeps tiny arcs accurate
        let mid = th0 + 0.5 * curvature * s;
        Point2::new(mid.cos(), mid.sin()) * s
    } else {
        Point2::new((th1.sin() - th0.sin()) / curvature, (th0.cos() - th1.cos()) / curvature)
    };
    Pose::from_parts(pose.position + delta, wrap_to_2pi(th1))
}

pub fn apply_primitive(pose: &Pose, mp: &MotionPrimitive) -> Pose {
    advance(pose, mp.curvature, mp.direction.sign() * mp.arc_length)
}

pub fn footprint(pose: &Pose, params: &VehicleParams) -> Polygon {
    let corners = params.local_corners().map(|c| pose.transform(c)).to_vec();
    Polygon::from_ccw_unchecked(corners)
}

/// Uniformly spaced curvatures on `[-c_max, c_max]`, each driven forward and
/// in reverse.
pub fn primitive_set(
    params: &VehicleParams,
    n_curv: usize,
    arc_length: f64,
) -> Result<Vec<MotionPrimitive>, VehicleError> {
    if n_curv < 3 || n_curv.is_multiple_of(2) {
        return Err(VehicleError::BadCurvatureCount(n_curv));
    }
    if !(arc_length > 0.0) {
        return Err(VehicleError::BadArcLength);
    }
    let c_max = params.max_curvature();
    let half = (n_curv / 2) as f64;
    let mut out = Vec::with_capacity(2 * n_curv);
    for direction in [Direction::Forward, Direction::Reverse] {
        for i in 0..n_curv {
            let k = i as f64 - half;
            let curvature = if k == half {
                c_max
            } else if k == -half {
                -c_max
            } else {
                c_max * k / half
            };
            out.push(MotionPrimitive {
                curvature,
                direction,
                arc_length,
            });
        }
    }
    Ok(out)
}

use serde::{Deserialize, Serialize};

use crate::geometry::{Point2, Polyline, Pose};
use crate::vehicle::{advance, Direction, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub state: VehicleState,
    /// Curvature of the motion leaving this state; the last state repeats
    /// the incoming one.
    pub curvature: f64,
    pub direction: Direction,
}

/// Timed state sequence; state `n` is reached at `n * dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt: f64,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> &TrajectoryPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &TrajectoryPoint {
        &self.points[self.points.len() - 1]
    }

    pub fn positions(&self) -> Vec<Point2> {
        self.points.iter().map(|p| p.state.position()).collect()
    }

    pub fn poses(&self) -> Vec<Pose> {
        self.points.iter().map(|p| p.state.pose()).collect()
    }

    /// Sum of distances between consecutive positions.
    pub fn length(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[0].state.position().distance(w[1].state.position()))
            .sum()
    }

    pub fn max_abs_curvature(&self) -> f64 {
        self.points.iter().map(|p| p.curvature.abs()).fold(0.0, f64::max)
    }

    /// Appends `other`, dropping its first state when it coincides with our
    /// last one.
    pub fn extend(&mut self, other: &Trajectory) {
        let skip = match (self.points.last(), other.points.first()) {
            (Some(a), Some(b)) => a.state.pose().approx_eq(&b.state.pose(), 1e-9) as usize,
            _ => 0,
        };
        if skip == 1 {
            // the junction state now leaves along the appended motion
            let last = self.points.len() - 1;
            self.points[last] = other.points[0];
        }
        self.points.extend_from_slice(&other.points[skip..]);
    }

    /// Straight-line reference of the polyline sampled at `spacing`, every
    /// state marked with zero curvature.
    pub fn from_polyline(r: &Polyline, spacing: f64, v_ref: f64, dt: f64) -> Trajectory {
        let total = r.length();
        let n = (total / spacing).ceil().max(1.0) as usize;
        let mut points = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let s = total * i as f64 / n as f64;
            let seg = r.segment_at(s.min(total - 1e-9));
            points.push(TrajectoryPoint {
                state: VehicleState::new(r.point_at(s).x, r.point_at(s).y, r.orientation(seg), v_ref),
                curvature: 0.0,
                direction: Direction::Forward,
            });
        }
        Trajectory { dt, points }
    }
}

/// Accumulates constant-curvature motions into a trajectory.
pub(crate) struct TrajectoryBuilder {
    poses: Vec<Pose>,
    motions: Vec<(f64, Direction)>,
}

impl TrajectoryBuilder {
    pub fn new(start: Pose) -> Self {
        TrajectoryBuilder {
            poses: vec![start],
            motions: Vec::new(),
        }
    }

    pub fn last_pose(&self) -> Pose {
        self.poses[self.poses.len() - 1]
    }

    /// Drives `signed_length` metres at `curvature` from the current end.
    pub fn push(&mut self, curvature: f64, signed_length: f64) -> Pose {
        let next = advance(&self.last_pose(), curvature, signed_length);
        self.poses.push(next);
        self.motions.push((curvature, Direction::from_sign(signed_length)));
        next
    }

    /// Overwrites the final pose, used to remove round-off at the goal.
    pub fn snap_last(&mut self, pose: Pose) {
        let n = self.poses.len();
        self.poses[n - 1] = pose;
    }

    pub fn finish(self, v_ref: f64, dt: f64) -> Trajectory {
        let n = self.poses.len();
        let points = (0..n)
            .map(|i| {
                let (curvature, direction) = if self.motions.is_empty() {
                    (0.0, Direction::Forward)
                } else {
                    self.motions[i.min(self.motions.len() - 1)]
                };
                TrajectoryPoint {
                    state: VehicleState::from_pose(self.poses[i], direction.sign() * v_ref),
                    curvature,
                    direction,
                }
            })
            .collect();
        Trajectory { dt, points }
    }
}

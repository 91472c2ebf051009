use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::geometry::{wrap_to_pi, Point2, Polyline};
use crate::planner::dist_to_polyline;
use crate::vehicle::VehicleState;

/// Length-weighted mean distance of the positions to `r`.
pub fn deviation_degree_of(positions: &[Point2], r: &Polyline) -> Result<f64, HarnessError> {
    let mut num = 0.0;
    let mut len = 0.0;
    for w in positions.windows(2) {
        let step = w[0].distance(w[1]);
        num += step * dist_to_polyline(w[1], r);
        len += step;
    }
    if len <= 0.0 {
        return Err(HarnessError::ZeroLength);
    }
    Ok(num / len)
}

pub fn deviation_degree(traj: &crate::planner::Trajectory, r: &Polyline) -> Result<f64, HarnessError> {
    deviation_degree_of(&traj.positions(), r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    Collision,
    Distance,
    Angle,
    NoPlan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    Failure(FailureCause),
}

impl Outcome {
    pub fn is_success(self) -> bool {
        self == Outcome::Success
    }

    pub fn cause(self) -> Option<FailureCause> {
        match self {
            Outcome::Success => None,
            Outcome::Failure(c) => Some(c),
        }
    }
}

pub const FAIL_DISTANCE: f64 = 10.0;
pub const FAIL_ANGLE_DEG: f64 = 60.0;

/// Collision first, then distance, then heading.
pub fn classify_outcome(final_state: &VehicleState, end: (Point2, f64), collided: bool) -> Outcome {
    if collided {
        Outcome::Failure(FailureCause::Collision)
    } else if final_state.position().distance(end.0) > FAIL_DISTANCE {
        Outcome::Failure(FailureCause::Distance)
    } else if wrap_to_pi(final_state.theta - end.1).abs() > FAIL_ANGLE_DEG.to_radians() {
        Outcome::Failure(FailureCause::Angle)
    } else {
        Outcome::Success
    }
}

/// Sample mean and variance (divided by n).
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}

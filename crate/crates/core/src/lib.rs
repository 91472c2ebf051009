// `!(x > 0.0)` style checks reject NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod geometry;
pub mod harness;
pub mod planner;
pub mod reeds_shepp;
pub mod replanner;
pub mod tracker;
pub mod vehicle;

pub use geometry::{Point2, Polygon, Polyline, Pose};
pub use harness::{RunReport, Scenario, SimConfig, Smoother};
pub use planner::{PlanError, PlannerConfig, Trajectory, TrajectoryPoint};
pub use replanner::ReplanConfig;
pub use tracker::MpcConfig;
pub use vehicle::{ControlInput, Direction, VehicleParams, VehicleState};

//! Fixed inputs shared by the benchmarks.

use furrow_core::harness::{generate_field, FieldStyle};
use furrow_core::{Point2, Polygon, Polyline, Scenario, Trajectory, VehicleParams};

pub use furrow_core::PlannerConfig;

/// A headland turn from the first generated rectangular field.
pub fn turn_scenario() -> Scenario {
    generate_field(1, FieldStyle::Rectangular)
}

pub fn straight_reference() -> Polyline {
    Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(40.0, 0.0)]).expect("straight")
}

pub fn open_field() -> Polygon {
    Polygon::rectangle(-10.0, -15.0, 50.0, 15.0).expect("rectangle")
}

/// Planned trajectory along `straight_reference` to track against.
pub fn straight_trajectory() -> Trajectory {
    furrow_core::planner::plan(
        &straight_reference(),
        &open_field(),
        &[],
        &VehicleParams::default(),
        &PlannerConfig::default(),
    )
    .expect("open straight path plans")
}

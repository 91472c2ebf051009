//! Scenario I/O, synthetic fields, closed-loop simulation and metrics.

mod fields;
mod metrics;
mod scenario;
mod sim;
mod streams;
mod trial;

use thiserror::Error;

pub use fields::{generate_field, generated_paths, wide_field, FieldStyle};
pub use metrics::{
    classify_outcome, deviation_degree, deviation_degree_of, mean_var, FailureCause, Outcome, FAIL_ANGLE_DEG,
    FAIL_DISTANCE,
};
pub use scenario::{Scenario, ScenarioFile, VehicleFile};
pub use sim::{
    read_trace_csv, reference_end, simulate_closed_loop, smooth, smoothing_metrics, write_trace_csv, ReplanEvent,
    RunReport, SimConfig, SimOutput, Smoother, Timing, TraceMode, TraceRow,
};
pub use streams::stream;
pub use trial::{
    place_obstacles, random_obstacle_trial, summarize_trials, TrialSummary, CORRIDOR, ENDPOINT_CLEARANCE, MAX_REJECTS,
    OBSTACLE_LENGTH, OBSTACLE_WIDTH,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("scenario: {0}")]
    Schema(String),
    #[error("{0}")]
    Io(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("path index {0} out of range ({1} paths)")]
    PathIndex(usize, usize),
    #[error("trajectory has zero length")]
    ZeroLength,
    #[error("obstacle placement rejected {0} times in a row")]
    Placement(usize),
}

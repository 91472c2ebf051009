//! Random obstacle trials around one reference path.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::metrics::mean_var;
use super::sim::{simulate_closed_loop, SimConfig, SimOutput, Smoother};
use super::streams::stream;
use super::{HarnessError, Scenario};
use crate::geometry::{footprint_inside_field, sdf_convex, Point2, Polygon};
use crate::planner::{goal_pose, start_pose};
use crate::vehicle::footprint;

pub const OBSTACLE_WIDTH: f64 = 2.0;
pub const OBSTACLE_LENGTH: f64 = 4.0;
/// Lateral half-width of the placement corridor.
pub const CORRIDOR: f64 = 5.0;
pub const MAX_REJECTS: usize = 100;
/// An obstacle closer than this to the start or goal footprint blocks it.
pub const ENDPOINT_CLEARANCE: f64 = 1.0;

/// `n` rectangles placed along the middle 80% of the path, within the
/// corridor, inside the field and clear of the start and goal footprints.
pub fn place_obstacles(
    scenario: &Scenario,
    path_index: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<Polygon>, HarnessError> {
    let r = scenario
        .reference_paths
        .get(path_index)
        .ok_or(HarnessError::PathIndex(path_index, scenario.reference_paths.len()))?;
    let mut rng = stream(seed, "obstacles");
    let total = r.length();
    let ends = [
        footprint(&start_pose(r), &scenario.vehicle),
        footprint(&goal_pose(r), &scenario.vehicle),
    ];
    let base = Polygon::rectangle(
        -OBSTACLE_LENGTH / 2.0,
        -OBSTACLE_WIDTH / 2.0,
        OBSTACLE_LENGTH / 2.0,
        OBSTACLE_WIDTH / 2.0,
    )
    .expect("rectangle");
    let mut placed = Vec::with_capacity(n);
    for _ in 0..n {
        let mut rejects = 0;
        loop {
            let s = rng.random_range(0.1 * total..0.9 * total);
            let lateral = rng.random_range(-CORRIDOR..CORRIDOR);
            let yaw = rng.random_range(0.0..std::f64::consts::PI);
            let seg = r.segment_at(s);
            let normal = Point2::from_angle(r.orientation(seg)).perp();
            let centre = r.point_at(s) + normal * lateral;
            let rect = base.rotated(yaw).translated(centre);
            let clear_of_ends = ends.iter().all(|fp| {
                sdf_convex(fp, &rect)
                    .map(|d| d.signed_distance >= ENDPOINT_CLEARANCE)
                    .unwrap_or(false)
            });
            if clear_of_ends && footprint_inside_field(&rect, &scenario.field) {
                placed.push(rect);
                break;
            }
            rejects += 1;
            if rejects >= MAX_REJECTS {
                return Err(HarnessError::Placement(rejects));
            }
        }
    }
    Ok(placed)
}

/// Hybrid smoothing and tracking with `n` hidden obstacles revealed by the
/// sensor.
pub fn random_obstacle_trial(
    scenario: &Scenario,
    path_index: usize,
    n: usize,
    seed: u64,
    config: &SimConfig,
) -> Result<SimOutput, HarnessError> {
    let placed = place_obstacles(scenario, path_index, n, seed)?;
    let mut s = scenario.clone();
    s.obstacles.extend(placed);
    s.rng_seed = seed;
    let cfg = SimConfig {
        detect: true,
        ..config.clone()
    };
    simulate_closed_loop(&s, path_index, Smoother::HybridAStar, &cfg)
}

/// Success ratio and timing over a batch of trials with the same obstacle
/// count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub obstacles: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_ratio: f64,
    pub replans: usize,
    pub mean_replan_time_s: f64,
    pub mean_control_time_s: f64,
    pub control_time_var_s: f64,
}

pub fn summarize_trials(obstacles: usize, runs: &[SimOutput]) -> TrialSummary {
    let successes = runs.iter().filter(|r| r.report.success).count();
    let replan: Vec<f64> = runs
        .iter()
        .flat_map(|r| r.report.timing.replan_times_s.iter().copied())
        .collect();
    let control: Vec<f64> = runs
        .iter()
        .flat_map(|r| r.report.timing.control_times_s.iter().copied())
        .collect();
    let (mc, vc) = mean_var(&control);
    TrialSummary {
        obstacles,
        trials: runs.len(),
        successes,
        success_ratio: if runs.is_empty() {
            0.0
        } else {
            successes as f64 / runs.len() as f64
        },
        replans: replan.len(),
        mean_replan_time_s: mean_var(&replan).0,
        mean_control_time_s: mc,
        control_time_var_s: vc,
    }
}

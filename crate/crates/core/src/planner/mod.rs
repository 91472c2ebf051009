//! Reference-following Hybrid A*.
//!
//! Nodes are ranked by `f = α·e_cost + β·e_pred + γ·h`: accumulated deviation
//! from the reference, the deviation of a Reeds-Shepp continuation to the goal,
//! and total travelled plus predicted length.

mod collision;
mod search;
mod trajectory;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Point2, Polygon, Polyline, Pose, EPS};
use crate::reeds_shepp::{rs_sample, rs_shortest, RsPath};
use crate::vehicle::{Direction, VehicleParams};

pub use collision::{CollisionModel, FootprintModel};
pub(crate) use search::Search;
pub use search::{PlanOutcome, SearchNode, Trigger};
pub use trajectory::{Trajectory, TrajectoryPoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("no trajectory found after {expansions} expansions")]
    NotFound { expansions: usize },
    #[error("start or goal footprint is in collision")]
    BlockedEndpoint,
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerConfig {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub grid_cell: f64,
    /// Remaining reference length below which the goal connection is tried.
    pub d0: f64,
    pub n_curv: usize,
    pub arc_length: f64,
    pub v_ref: f64,
    pub dt: f64,
    pub max_expansions: usize,
    /// Optional heading discretisation added to the duplicate-detection key.
    pub heading_bins: Option<usize>,
    /// Sample spacing along the predicted continuation.
    pub pred_spacing: f64,
    /// Pose spacing for swept collision checks.
    pub check_spacing: f64,
    pub allow_reverse: bool,
    pub pruning: bool,
    /// References longer than this are planned piecewise.
    pub max_piece_length: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        let turning_radius = VehicleParams::default().turning_radius();
        PlannerConfig {
            alpha: 1.0,
            beta: 0.1,
            gamma: 0.1,
            grid_cell: 0.5,
            d0: 3.0 * turning_radius,
            n_curv: 5,
            arc_length: 1.0,
            v_ref: 2.0,
            dt: 0.5,
            max_expansions: 200_000,
            heading_bins: Some(72),
            pred_spacing: 1.0,
            check_spacing: 0.2,
            allow_reverse: true,
            pruning: true,
            max_piece_length: 50.0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        let bad = |m: &str| Err(PlanError::InvalidConfig(m.to_string()));
        if [self.alpha, self.beta, self.gamma]
            .iter()
            .any(|w| !(*w >= 0.0) || !w.is_finite())
        {
            return bad("weights must be finite and non-negative");
        }
        if self.alpha == 0.0 && self.beta == 0.0 && self.gamma == 0.0 {
            return bad("at least one weight must be positive");
        }
        if !(self.grid_cell > 0.0) || !(self.d0 > 0.0) {
            return bad("grid cell and trigger distance must be positive");
        }
        if !(self.arc_length > 0.0) || !(self.v_ref > 0.0) || !(self.dt > 0.0) {
            return bad("arc length, speed and time step must be positive");
        }
        if !(self.pred_spacing > 0.0) || !(self.check_spacing > 0.0) {
            return bad("sample spacings must be positive");
        }
        if !(self.max_piece_length > 0.0) {
            return bad("piece length must be positive");
        }
        if self.n_curv < 3 || self.n_curv.is_multiple_of(2) {
            return bad("curvature count must be odd and at least 3");
        }
        Ok(())
    }

    /// Evaluation function from its three components.
    pub fn total_f(&self, e_cost: f64, e_pred: f64, h: f64) -> f64 {
        self.alpha * e_cost + self.beta * e_pred + self.gamma * h
    }
}

/// Node evaluation recomputed from stored fields.
pub fn total_f(node: &SearchNode, config: &PlannerConfig) -> f64 {
    config.total_f(node.e_cost, node.e_pred, node.path_len + node.rs_len)
}

pub fn dist_to_polyline(z: Point2, r: &Polyline) -> f64 {
    r.distance(z)
}

/// One step of the recursive deviation cost.
pub fn e_cost_increment(prev: f64, z_prev: Point2, z_new: Point2, r: &Polyline) -> f64 {
    prev + r.distance(z_new) * z_new.distance(z_prev)
}

/// Deviation cost of a polyline of positions, summed directly.
pub fn e_cost_of(positions: &[Point2], r: &Polyline) -> f64 {
    positions
        .windows(2)
        .map(|w| r.distance(w[1]) * w[1].distance(w[0]))
        .sum()
}

pub(crate) fn e_pred_of(rs: &RsPath, start: &Pose, r: &Polyline, spacing: f64) -> f64 {
    let samples = rs_sample(rs, start, spacing);
    samples
        .windows(2)
        .map(|w| r.distance(w[1].position) * w[1].position.distance(w[0].position))
        .sum()
}

/// Deviation of the shortest Reeds-Shepp continuation from `pose` to `goal`.
pub fn e_pred(pose: &Pose, r: &Polyline, goal: &Pose, radius: f64, spacing: f64) -> f64 {
    e_pred_of(&rs_shortest(pose, goal, radius), pose, r, spacing)
}

/// Travelled length plus the Reeds-Shepp length still to go.
pub fn h_value(path_len: f64, pose: &Pose, goal: &Pose, radius: f64) -> f64 {
    path_len + rs_shortest(pose, goal, radius).length()
}

/// Arc length along `r` of the nearest point to `z`.
pub fn progress_along_reference(z: Point2, r: &Polyline) -> f64 {
    r.project(z).arc_length
}

pub fn start_pose(r: &Polyline) -> Pose {
    Pose::from_parts(r.first(), r.start_heading())
}

pub fn goal_pose(r: &Polyline) -> Pose {
    Pose::from_parts(r.last(), r.end_heading())
}

/// Children reachable from `parent` by one collision-free primitive, each
/// with updated costs.
pub fn valid_children(
    parent: &SearchNode,
    r: &Polyline,
    field: &Polygon,
    obstacles: &[Polygon],
    params: &VehicleParams,
    config: &PlannerConfig,
) -> Result<Vec<SearchNode>, PlanError> {
    config.validate()?;
    let model = FootprintModel::new(field, obstacles, params, config.check_spacing);
    let search = Search {
        reference: r,
        start: start_pose(r),
        goal: goal_pose(r),
        params,
        config,
        collision: &model,
        trigger: Trigger::ProgressGap(config.d0),
    };
    let prims = crate::vehicle::primitive_set(params, config.n_curv, config.arc_length)
        .map_err(|e| PlanError::InvalidConfig(e.to_string()))?;
    Ok(search.children(parent, 0, &prims))
}

/// Root node of a search over `r`, with its evaluation filled in.
pub fn root_node(r: &Polyline, params: &VehicleParams, config: &PlannerConfig) -> SearchNode {
    let pose = start_pose(r);
    let goal = goal_pose(r);
    let radius = params.turning_radius();
    let ep = e_pred(&pose, r, &goal, radius, config.pred_spacing);
    let rs_len = rs_shortest(&pose, &goal, radius).length();
    SearchNode {
        pose,
        direction: Direction::Forward,
        f: config.total_f(0.0, ep, rs_len),
        e_cost: 0.0,
        e_pred: ep,
        path_len: 0.0,
        rs_len,
        progress: 0.0,
        parent: None,
        via: search::Via::Start,
        is_target: false,
    }
}

/// Plans one reference piece and returns the trajectory with search
/// statistics.
pub fn plan_with_stats(
    r: &Polyline,
    field: &Polygon,
    obstacles: &[Polygon],
    params: &VehicleParams,
    config: &PlannerConfig,
) -> Result<PlanOutcome, PlanError> {
    config.validate()?;
    let model = FootprintModel::new(field, obstacles, params, config.check_spacing);
    let start = start_pose(r);
    let goal = goal_pose(r);
    if !model.pose_free(&start) || !model.pose_free(&goal) {
        return Err(PlanError::BlockedEndpoint);
    }
    Search {
        reference: r,
        start,
        goal,
        params,
        config,
        collision: &model,
        trigger: Trigger::ProgressGap(config.d0),
    }
    .run()
}

/// Smooths one reference piece into a kinematically feasible trajectory.
pub fn plan(
    r: &Polyline,
    field: &Polygon,
    obstacles: &[Polygon],
    params: &VehicleParams,
    config: &PlannerConfig,
) -> Result<Trajectory, PlanError> {
    plan_with_stats(r, field, obstacles, params, config).map(|o| o.trajectory)
}

/// Splits `r` into consecutive pieces no longer than `max_len`. Cuts fall in
/// the second half of each window, at the middle of the longest segment
/// there, so every junction lies inside a straight stretch and the heading
/// is continuous across pieces.
pub fn split_long_reference(r: &Polyline, max_len: f64) -> Vec<Polyline> {
    assert!(max_len > 0.0, "piece length must be positive");
    let total = r.length();
    if total <= max_len + EPS {
        return vec![r.clone()];
    }
    let cum = r.cumulative_lengths();
    let mut cuts = Vec::new();
    let mut s0 = 0.0;
    while total - s0 > max_len + EPS {
        let lo = s0 + 0.5 * max_len;
        let hi = s0 + max_len;
        let mut best = (f64::NEG_INFINITY, 0.5 * (lo + hi));
        for j in 0..r.segment_count() {
            let a = cum[j].max(lo);
            let b = cum[j + 1].min(hi);
            if b > a && b - a > best.0 {
                best = (b - a, 0.5 * (a + b));
            }
        }
        cuts.push(best.1);
        s0 = best.1;
    }
    let mut bounds = vec![0.0];
    bounds.extend(cuts);
    bounds.push(total);
    bounds
        .windows(2)
        .map(|w| r.slice(w[0], w[1]).expect("pieces have positive length"))
        .collect()
}

/// Plans every piece of a long reference and chains the results; each piece
/// starts where the previous one ended.
pub fn plan_chained(
    r: &Polyline,
    field: &Polygon,
    obstacles: &[Polygon],
    params: &VehicleParams,
    config: &PlannerConfig,
) -> Result<PlanOutcome, PlanError> {
    let mut out: Option<PlanOutcome> = None;
    for piece in split_long_reference(r, config.max_piece_length) {
        let o = plan_with_stats(&piece, field, obstacles, params, config)?;
        out = Some(match out {
            None => o,
            Some(mut acc) => {
                acc.trajectory.extend(&o.trajectory);
                acc.expansions += o.expansions;
                acc.f += o.f;
                acc.e_cost += o.e_cost;
                acc
            }
        });
    }
    Ok(out.expect("at least one piece"))
}

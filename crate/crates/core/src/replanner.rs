//! Online obstacle handling: detection through the sensor fan, extraction of
//! the colliding stretch of the nominal trajectory, local replanning with
//! iterative edge inflation, and splicing.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    point_segment_distance, polygon_polygon_collides, segment_intersects_polygon, Point2, Polygon, Polyline, Pose,
    SensorFan,
};
use crate::planner::{CollisionModel, FootprintModel, PlanError, PlannerConfig, Search, Trajectory, Trigger};
use crate::vehicle::{advance, footprint, VehicleParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReplanError {
    #[error("patch endpoints do not match the window ({0:.3e} m)")]
    EndpointMismatch(f64),
    #[error("window {start}..={end} is outside a trajectory of {len} states")]
    BadWindow { start: usize, end: usize, len: usize },
    #[error(transparent)]
    Plan(#[from] PlanError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplanConfig {
    /// States added on either side of the colliding stretch.
    pub expand: usize,
    pub inflation_init: f64,
    pub inflation_step: f64,
    pub max_rounds: usize,
    /// Heading discretisation used by the local search in place of the
    /// planner's; a coarser key keeps replanning fast.
    pub heading_bins: Option<usize>,
    /// Reverse primitives in the local search. Off by default: a patch with
    /// cusps asks the tracker for instant speed reversals it cannot follow.
    pub allow_reverse: bool,
}

impl Default for ReplanConfig {
    fn default() -> Self {
        ReplanConfig {
            expand: 12,
            inflation_init: 0.2,
            inflation_step: 0.1,
            max_rounds: 10,
            heading_bins: Some(36),
            allow_reverse: false,
        }
    }
}

/// Obstacles split into those the vehicle has fully seen and the rest.
/// Vertex sightings accumulate over time.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionState {
    pub known: Vec<Polygon>,
    pub undetected: Vec<Polygon>,
    seen: Vec<Vec<bool>>,
}

impl DetectionState {
    pub fn new(obstacles: Vec<Polygon>) -> Self {
        let seen = obstacles.iter().map(|o| vec![false; o.len()]).collect();
        DetectionState {
            known: Vec::new(),
            undetected: obstacles,
            seen,
        }
    }

    /// Marks vertices inside the fan; returns how many obstacles became known.
    pub fn update(&mut self, pose: &Pose, fan: &SensorFan) -> usize {
        let mut i = 0;
        let mut moved = 0;
        while i < self.undetected.len() {
            for (k, v) in self.undetected[i].vertices().iter().enumerate() {
                if fan.contains(pose, *v) {
                    self.seen[i][k] = true;
                }
            }
            if self.seen[i].iter().all(|s| *s) {
                self.known.push(self.undetected.remove(i));
                self.seen.remove(i);
                moved += 1;
            } else {
                i += 1;
            }
        }
        moved
    }
}

pub fn update_detection(state: &DetectionState, pose: &Pose, fan: &SensorFan) -> DetectionState {
    let mut next = state.clone();
    next.update(pose, fan);
    next
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplanWindow {
    pub first_bad: usize,
    pub last_bad: usize,
    pub expand: usize,
    /// Index of the first state replaced.
    pub start: usize,
    /// Index of the last state replaced.
    pub end: usize,
    pub start_pose: Pose,
    pub end_pose: Pose,
    pub reference_slice: Polyline,
}

fn pose_hits(pose: &Pose, obstacles: &[Polygon], params: &VehicleParams) -> bool {
    let fp = footprint(pose, params);
    obstacles.iter().any(|o| polygon_polygon_collides(&fp, o))
}

/// Poses along the motion leaving state `i`, endpoints excluded.
fn motion_poses(traj: &Trajectory, i: usize, spacing: f64) -> Vec<Pose> {
    let a = &traj.points[i];
    let b = &traj.points[i + 1];
    let chord = a.state.position().distance(b.state.position());
    let k = a.curvature;
    let half = 0.5 * k * chord;
    let arc = if half.abs() < 1e-12 || half.abs() >= 1.0 {
        chord
    } else {
        2.0 * half.asin() / k
    };
    let n = (arc / spacing).ceil().max(1.0) as usize;
    let from = a.state.pose();
    (1..n)
        .map(|j| advance(&from, k, a.direction.sign() * arc * j as f64 / n as f64))
        .collect()
}

/// Indices of colliding states. A motion that hits an obstacle while both
/// its end states are clear marks both ends.
fn colliding_states(
    traj: &Trajectory,
    from: usize,
    obstacles: &[Polygon],
    params: &VehicleParams,
    spacing: f64,
) -> Vec<usize> {
    let hits: Vec<bool> = (from..traj.len())
        .map(|i| pose_hits(&traj.points[i].state.pose(), obstacles, params))
        .collect();
    let mut bad = Vec::new();
    for i in from..traj.len() {
        let here = hits[i - from];
        let motion = !here
            && i + 1 < traj.len()
            && !hits[i + 1 - from]
            && motion_poses(traj, i, spacing)
                .iter()
                .any(|p| pose_hits(p, obstacles, params));
        let from_prev = bad.last() == Some(&i);
        if (here || motion) && !from_prev {
            bad.push(i);
        }
        if motion {
            bad.push(i + 1);
        }
    }
    bad
}

/// Window around the colliding stretch of `traj`, considering states from
/// `from` on. Endpoints are pushed outward until their footprints are clear.
pub fn collision_window_from(
    traj: &Trajectory,
    from: usize,
    obstacles: &[Polygon],
    params: &VehicleParams,
    expand: usize,
) -> Option<ReplanWindow> {
    if traj.len() < 2 || from >= traj.len() {
        return None;
    }
    let bad = colliding_states(traj, from, obstacles, params, 0.2);
    let (&first_bad, &last_bad) = (bad.first()?, bad.last()?);
    let last_index = traj.len() - 1;
    let mut start = first_bad.saturating_sub(expand).max(from);
    let mut end = (last_bad + expand).min(last_index);
    while start > from && pose_hits(&traj.points[start].state.pose(), obstacles, params) {
        start -= 1;
    }
    while end < last_index && pose_hits(&traj.points[end].state.pose(), obstacles, params) {
        end += 1;
    }
    if start >= end {
        return None;
    }
    let mut pts: Vec<Point2> = Vec::with_capacity(end - start + 1);
    for p in &traj.points[start..=end] {
        let z = p.state.position();
        if pts.last().is_none_or(|q| q.distance(z) > 1e-9) {
            pts.push(z);
        }
    }
    if pts.len() < 2 {
        return None;
    }
    Some(ReplanWindow {
        first_bad,
        last_bad,
        expand,
        start,
        end,
        start_pose: traj.points[start].state.pose(),
        end_pose: traj.points[end].state.pose(),
        reference_slice: Polyline::new(pts).ok()?,
    })
}

pub fn collision_window(
    traj: &Trajectory,
    obstacles: &[Polygon],
    params: &VehicleParams,
    expand: usize,
) -> Option<ReplanWindow> {
    collision_window_from(traj, 0, obstacles, params, expand)
}

/// Rear-axle point against inflated shapes.
struct PointModel<'a> {
    field: &'a Polygon,
    obstacles: &'a [Polygon],
    spacing: f64,
}

impl CollisionModel for PointModel<'_> {
    fn pose_free(&self, pose: &Pose) -> bool {
        self.field.contains(pose.position) && !self.obstacles.iter().any(|o| o.contains(pose.position))
    }

    fn check_spacing(&self) -> f64 {
        self.spacing
    }
}

/// Per-edge inflation widths for the field and each obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct Inflation {
    pub field: Vec<f64>,
    pub obstacles: Vec<Vec<f64>>,
}

impl Inflation {
    pub fn uniform(field: &Polygon, obstacles: &[Polygon], width: f64) -> Self {
        Inflation {
            field: vec![width; field.len()],
            obstacles: obstacles.iter().map(|o| vec![width; o.len()]).collect(),
        }
    }

    pub fn max_width(&self) -> f64 {
        self.field
            .iter()
            .chain(self.obstacles.iter().flatten())
            .fold(0.0, |a, &b| f64::max(a, b))
    }

    /// The field shrunk inward and the obstacles grown outward. Edges whose
    /// offset would collapse the shape keep their previous line.
    pub fn apply(&self, field: &Polygon, obstacles: &[Polygon]) -> (Polygon, Vec<Polygon>) {
        let mut f = field.clone();
        for (i, w) in self.field.iter().enumerate() {
            if let Ok(g) = f.offset_edge(i, -w) {
                f = g;
            }
        }
        let obs = obstacles
            .iter()
            .zip(&self.obstacles)
            .map(|(o, ws)| {
                let mut p = o.clone();
                for (i, w) in ws.iter().enumerate() {
                    if let Ok(q) = p.offset_edge(i, *w) {
                        p = q;
                    }
                }
                p
            })
            .collect();
        (f, obs)
    }
}

/// Edges touched by `fp`: field edges it crosses, and obstacle edges it
/// crosses. An obstacle swallowed whole has every edge
/// marked.
fn collided_edges(fp: &Polygon, field: &Polygon, obstacles: &[Polygon]) -> (Vec<usize>, Vec<(usize, usize)>) {
    let mut field_edges: Vec<usize> = field
        .edges()
        .enumerate()
        .filter(|(_, (a, b))| segment_intersects_polygon(*a, *b, fp))
        .map(|(i, _)| i)
        .collect();
    if field_edges.is_empty() {
        if let Some(v) = fp.vertices().iter().find(|v| !field.contains(**v)) {
            let nearest = field
                .edges()
                .enumerate()
                .map(|(i, (a, b))| (point_segment_distance(*v, a, b), i))
                .fold((f64::INFINITY, 0), |m, x| if x.0 < m.0 { x } else { m });
            field_edges.push(nearest.1);
        }
    }
    let mut obs_edges = Vec::new();
    for (j, o) in obstacles.iter().enumerate() {
        if !polygon_polygon_collides(fp, o) {
            continue;
        }
        let before = obs_edges.len();
        for (i, (a, b)) in o.edges().enumerate() {
            if segment_intersects_polygon(a, b, fp) {
                obs_edges.push((j, i));
            }
        }
        if obs_edges.len() == before {
            obs_edges.extend((0..o.len()).map(|i| (j, i)));
        }
    }
    (field_edges, obs_edges)
}

/// Replans the window with a straight-line-of-sight goal trigger and
/// rear-axle collision checks against inflated shapes, then validates the
/// whole body. Edges the body hits are inflated further and the search
/// reruns.
pub fn replan(
    window: &ReplanWindow,
    field: &Polygon,
    known: &[Polygon],
    params: &VehicleParams,
    config: &PlannerConfig,
    rcfg: &ReplanConfig,
) -> Result<Trajectory, ReplanError> {
    let config = &PlannerConfig {
        heading_bins: rcfg.heading_bins,
        allow_reverse: rcfg.allow_reverse,
        ..config.clone()
    };
    config.validate()?;
    let mut inflation = Inflation::uniform(field, known, rcfg.inflation_init);
    for ws in &mut inflation.obstacles {
        for w in ws.iter_mut() {
            *w += params.half_width();
        }
    }
    let full = FootprintModel::new(field, known, params, config.check_spacing);
    let mut last_err = PlanError::NotFound { expansions: 0 };
    for _ in 0..rcfg.max_rounds {
        let (f_inf, o_inf) = inflation.apply(field, known);
        let model = PointModel {
            field: &f_inf,
            obstacles: &o_inf,
            spacing: config.check_spacing,
        };
        let search = Search {
            reference: &window.reference_slice,
            start: window.start_pose,
            goal: window.end_pose,
            params,
            config,
            collision: &model,
            trigger: Trigger::LineOfSight(&o_inf),
        };
        let traj = match search.run() {
            Ok(o) => o.trajectory,
            Err(e) => {
                last_err = e;
                // a tighter shape set will not help once search fails
                break;
            }
        };
        let mut hit_field = BTreeSet::new();
        let mut hit_obstacles = BTreeSet::new();
        for i in 0..traj.len() {
            let mut poses = vec![traj.points[i].state.pose()];
            if i + 1 < traj.len() {
                poses.extend(motion_poses(&traj, i, config.check_spacing));
            }
            for p in poses.iter().filter(|p| !full.pose_free(p)) {
                let (fe, oe) = collided_edges(&footprint(p, params), field, known);
                hit_field.extend(fe);
                hit_obstacles.extend(oe);
            }
        }
        if hit_field.is_empty() && hit_obstacles.is_empty() {
            return Ok(traj);
        }
        for &e in &hit_field {
            inflation.field[e] += rcfg.inflation_step;
        }
        for &(j, e) in &hit_obstacles {
            inflation.obstacles[j][e] += rcfg.inflation_step;
        }
    }
    Err(ReplanError::Plan(last_err))
}

/// Replaces states `window.start..=window.end` of `traj` with `patch`.
/// The state at `window.end` is kept from `traj` so its outgoing motion is
/// preserved.
pub fn splice(traj: &Trajectory, window: &ReplanWindow, patch: &Trajectory) -> Result<Trajectory, ReplanError> {
    if window.end >= traj.len() || window.start >= window.end {
        return Err(ReplanError::BadWindow {
            start: window.start,
            end: window.end,
            len: traj.len(),
        });
    }
    if patch.is_empty() {
        return Err(ReplanError::EndpointMismatch(f64::INFINITY));
    }
    let a = traj.points[window.start].state.pose();
    let b = traj.points[window.end].state.pose();
    let pa = patch.first().state.pose();
    let pb = patch.last().state.pose();
    let mismatch = pose_gap(&a, &pa).max(pose_gap(&b, &pb));
    if mismatch > 1e-6 {
        return Err(ReplanError::EndpointMismatch(mismatch));
    }
    let mut points = Vec::with_capacity(traj.len() - (window.end - window.start) + patch.len());
    points.extend_from_slice(&traj.points[..window.start]);
    points.extend_from_slice(&patch.points[..patch.len() - 1]);
    points.extend_from_slice(&traj.points[window.end..]);
    Ok(Trajectory { dt: traj.dt, points })
}

fn pose_gap(a: &Pose, b: &Pose) -> f64 {
    let dpos = a.position.distance(b.position);
    let dth = crate::geometry::wrap_to_pi(a.heading - b.heading).abs();
    dpos.max(dth)
}

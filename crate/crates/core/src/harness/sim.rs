//! Closed-loop runs: smooth, then sense, replan, track and step the plant.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::metrics::{classify_outcome, deviation_degree, deviation_degree_of, mean_var, FailureCause, Outcome};
use super::{HarnessError, Scenario};
use crate::baseline::{bspline_smooth, curvature_violation_ratio, BSplineCurve};
use crate::geometry::{Point2, Polygon, Polyline, SensorFan};
use crate::planner::{goal_pose, plan_chained, PlanError, PlannerConfig, Trajectory};
use crate::replanner::{collision_window_from, replan, splice, DetectionState, ReplanConfig};
use crate::tracker::{g_eval, track_step, MpcConfig, TrackError};
use crate::vehicle::{step, ControlInput, VehicleParams, VehicleState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Smoother {
    #[serde(rename = "hybrid")]
    HybridAStar,
    #[serde(rename = "bspline")]
    BSpline,
    #[serde(rename = "raw")]
    Raw,
}

impl Smoother {
    pub fn name(self) -> &'static str {
        match self {
            Smoother::HybridAStar => "hybrid",
            Smoother::BSpline => "bspline",
            Smoother::Raw => "raw",
        }
    }
}

impl std::str::FromStr for Smoother {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hybrid" | "hybrid_astar" => Ok(Smoother::HybridAStar),
            "bspline" => Ok(Smoother::BSpline),
            "raw" => Ok(Smoother::Raw),
            other => Err(format!("unknown method {other:?} (hybrid, bspline, raw)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub planner: PlannerConfig,
    pub mpc: MpcConfig,
    pub replan: ReplanConfig,
    pub sensor_range: f64,
    pub sensor_fov_deg: f64,
    /// Obstacles stay hidden until the sensor has seen all their vertices.
    pub detect: bool,
    /// Control steps after the reference ends.
    pub settle_steps: usize,
    /// Plant integration steps per control step; 1 matches the MPC model.
    pub plant_substeps: usize,
    pub bspline_samples: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            planner: PlannerConfig::default(),
            mpc: MpcConfig::default(),
            replan: ReplanConfig::default(),
            sensor_range: 15.0,
            sensor_fov_deg: 90.0,
            detect: false,
            settle_steps: 20,
            plant_substeps: 1,
            bspline_samples: crate::baseline::DEFAULT_SAMPLES_PER_SPAN,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.planner
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.mpc.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if (self.planner.dt - self.mpc.dt).abs() > 1e-12 {
            return Err(HarnessError::Config("planner.dt and mpc.dt must match".into()));
        }
        if self.plant_substeps == 0 || self.bspline_samples == 0 {
            return Err(HarnessError::Config(
                "plant_substeps and bspline_samples must be >= 1".into(),
            ));
        }
        SensorFan::new(self.sensor_range, self.sensor_fov_deg.to_radians())
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceMode {
    Plan,
    Replan,
}

/// One row per control step; the last row holds the final state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub v: f64,
    pub delta: f64,
    pub a: f64,
    pub mode: TraceMode,
    pub g_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanEvent {
    pub step: usize,
    pub time: f64,
    pub success: bool,
    pub window_start: usize,
    pub window_end: usize,
}

/// Wall-clock measurements, kept apart so the rest of a report is
/// reproducible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub plan_time_s: f64,
    pub control_time_mean_s: f64,
    pub control_time_var_s: f64,
    pub control_times_s: Vec<f64>,
    pub replan_times_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub path_index: usize,
    pub method: Smoother,
    pub seed: u64,
    /// Smoothed trajectory against the reference, before tracking.
    pub deviation_degree: Option<f64>,
    pub curvature_violation_ratio: Option<f64>,
    /// Driven path against the reference.
    pub tracked_deviation_degree: Option<f64>,
    pub success: bool,
    pub failure_cause: Option<FailureCause>,
    pub steps: usize,
    pub final_distance: Option<f64>,
    pub final_heading_error_deg: Option<f64>,
    pub min_clearance: Option<f64>,
    /// Steps whose control came from a fallback: dropped rows, the best
    /// iterate of a failed refinement, or braking.
    pub fallback_steps: usize,
    pub replans: Vec<ReplanEvent>,
    pub obstacles: Vec<Vec<[f64; 2]>>,
    #[serde(skip)]
    pub timing: Timing,
}

impl RunReport {
    pub fn outcome(&self) -> Outcome {
        match self.failure_cause {
            None => Outcome::Success,
            Some(c) => Outcome::Failure(c),
        }
    }

    pub fn replan_count(&self) -> usize {
        self.replans.len()
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub report: RunReport,
    pub trace: Vec<TraceRow>,
    /// Reference as tracked at the end, including splices.
    pub trajectory: Option<Trajectory>,
}

pub fn write_trace_csv<W: std::io::Write>(rows: &[TraceRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

pub fn read_trace_csv<R: std::io::Read>(input: R) -> Result<Vec<TraceRow>, HarnessError> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(|e| HarnessError::Io(e.to_string())))
        .collect()
}

/// Reference end position and heading.
pub fn reference_end(r: &Polyline) -> (Point2, f64) {
    let g = goal_pose(r);
    (g.position, g.heading)
}

/// Trajectory for `smoother`, spaced `v_ref·dt` apart for tracking.
pub fn smooth(
    scenario: &Scenario,
    path_index: usize,
    smoother: Smoother,
    obstacles: &[Polygon],
    config: &SimConfig,
) -> Result<Trajectory, PlanError> {
    let r = &scenario.reference_paths[path_index];
    let pc = &config.planner;
    let spacing = pc.v_ref * pc.dt;
    match smoother {
        Smoother::HybridAStar => {
            plan_chained(r, &scenario.field, obstacles, &scenario.vehicle, pc).map(|o| o.trajectory)
        }
        Smoother::BSpline => Ok(BSplineCurve::from_reference(r).sample_by_arc_length(spacing, pc.v_ref, pc.dt)),
        Smoother::Raw => Ok(Trajectory::from_polyline(r, spacing, pc.v_ref, pc.dt)),
    }
}

/// Deviation degree and curvature violation ratio of a smoothed trajectory.
/// B-spline figures come from its parameter-uniform samples rather than the
/// arc-length resampling used for tracking.
pub fn smoothing_metrics(
    r: &Polyline,
    smoother: Smoother,
    traj: &Trajectory,
    params: &VehicleParams,
    config: &SimConfig,
) -> (Option<f64>, f64) {
    let sampled;
    let metric_traj = match smoother {
        Smoother::BSpline => {
            sampled = bspline_smooth(r, config.bspline_samples, config.planner.v_ref, config.planner.dt);
            &sampled
        }
        _ => traj,
    };
    let violation = match smoother {
        Smoother::Raw => corner_violation_ratio(traj, params.max_curvature()),
        _ => curvature_violation_ratio(metric_traj, params.max_curvature()),
    };
    (deviation_degree(metric_traj, r).ok(), violation)
}

/// The raw reference stores no curvature; a vertex bends it by the heading
/// change over the sample spacing.
fn corner_violation_ratio(traj: &Trajectory, c_max: f64) -> f64 {
    let pts = &traj.points;
    if pts.is_empty() {
        return 0.0;
    }
    let over = pts
        .windows(2)
        .filter(|w| {
            let ds = w[0].state.position().distance(w[1].state.position());
            ds > 0.0 && crate::geometry::wrap_to_pi(w[1].state.theta - w[0].state.theta).abs() / ds > c_max
        })
        .count();
    over as f64 / pts.len() as f64
}

fn brake(x: &VehicleState, params: &crate::vehicle::VehicleParams, dt: f64) -> ControlInput {
    let a = (-x.v / dt).clamp(-params.max_accel, params.max_accel);
    ControlInput::new(0.0, a)
}

pub fn simulate_closed_loop(
    scenario: &Scenario,
    path_index: usize,
    smoother: Smoother,
    config: &SimConfig,
) -> Result<SimOutput, HarnessError> {
    config.validate()?;
    let r = scenario
        .reference_paths
        .get(path_index)
        .ok_or(HarnessError::PathIndex(path_index, scenario.reference_paths.len()))?;
    let params = &scenario.vehicle;
    let field = &scenario.field;
    let dt = config.mpc.dt;
    let (static_known, hidden) = if config.detect {
        (Vec::new(), scenario.obstacles.clone())
    } else {
        (scenario.obstacles.clone(), Vec::new())
    };
    let mut report = RunReport {
        path_index,
        method: smoother,
        seed: scenario.rng_seed,
        deviation_degree: None,
        curvature_violation_ratio: None,
        tracked_deviation_degree: None,
        success: false,
        failure_cause: None,
        steps: 0,
        final_distance: None,
        final_heading_error_deg: None,
        min_clearance: None,
        fallback_steps: 0,
        replans: Vec::new(),
        obstacles: scenario
            .obstacles
            .iter()
            .map(|o| o.vertices().iter().map(|p| [p.x, p.y]).collect())
            .collect(),
        timing: Timing::default(),
    };

    let t0 = Instant::now();
    let smoothed = smooth(scenario, path_index, smoother, &static_known, config);
    report.timing.plan_time_s = t0.elapsed().as_secs_f64();
    let mut traj = match smoothed {
        Ok(t) => t,
        Err(_) => {
            report.failure_cause = Some(FailureCause::NoPlan);
            return Ok(SimOutput {
                report,
                trace: Vec::new(),
                trajectory: None,
            });
        }
    };
    let (dev, viol) = smoothing_metrics(r, smoother, &traj, params, config);
    report.deviation_degree = dev;
    report.curvature_violation_ratio = Some(viol);

    let mut mpc = config.mpc.clone();
    if smoother != Smoother::HybridAStar {
        mpc.refine = false;
        mpc.drop_infeasible_rows = true;
    }
    let fan = SensorFan::new(config.sensor_range, config.sensor_fov_deg.to_radians())
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut detection = DetectionState::new(hidden);
    let mut patches: Vec<(usize, usize)> = Vec::new();
    let mut trace = Vec::new();
    let mut x = traj.points[0].state;
    let mut collided = false;
    let mut min_g = g_eval(&x, field, &scenario.obstacles, params);
    let total = traj.len() - 1 + config.settle_steps;
    let mut k = 0;
    while k < total {
        if config.detect && detection.update(&x.pose(), &fan) > 0 && smoother == Smoother::HybridAStar {
            let mut known = static_known.clone();
            known.extend(detection.known.iter().cloned());
            if let Some(w) = collision_window_from(&traj, k + 1, &known, params, config.replan.expand) {
                let tr = Instant::now();
                let patched = replan(&w, field, &known, params, &config.planner, &config.replan)
                    .and_then(|patch| splice(&traj, &w, &patch).map(|t| (t, patch.len())));
                report.timing.replan_times_s.push(tr.elapsed().as_secs_f64());
                let success = patched.is_ok();
                if let Ok((t, n)) = patched {
                    let shift = t.len() as isize - traj.len() as isize;
                    traj = t;
                    patches.push((w.start, w.start + n - 1));
                    // patches after this one move with the splice
                    for p in patches.iter_mut().rev().skip(1) {
                        if p.0 > w.end {
                            p.0 = (p.0 as isize + shift) as usize;
                            p.1 = (p.1 as isize + shift) as usize;
                        }
                    }
                }
                report.replans.push(ReplanEvent {
                    step: k,
                    time: k as f64 * dt,
                    success,
                    window_start: w.start,
                    window_end: w.end,
                });
            }
        }
        let total_now = traj.len() - 1 + config.settle_steps;
        if k >= total_now {
            break;
        }
        let mut known = static_known.clone();
        known.extend(detection.known.iter().cloned());
        let tc = Instant::now();
        let u = match track_step(&x, &traj, k, field, &known, params, &mpc) {
            Ok((u, d)) => {
                if d.rows_dropped {
                    report.fallback_steps += 1;
                }
                u
            }
            Err(f) => {
                report.fallback_steps += 1;
                match (f.fallback, f.error) {
                    (Some(u), TrackError::RefineInfeasible { .. }) => u,
                    _ => brake(&x, params, dt),
                }
            }
        };
        report.timing.control_times_s.push(tc.elapsed().as_secs_f64());
        let mode = if patches.iter().any(|&(a, b)| k >= a && k <= b) {
            TraceMode::Replan
        } else {
            TraceMode::Plan
        };
        trace.push(row(
            k as f64 * dt,
            &x,
            &u,
            mode,
            g_eval(&x, field, &scenario.obstacles, params),
        ));
        let h = dt / config.plant_substeps as f64;
        for _ in 0..config.plant_substeps {
            x = step(&x, &u, params, h);
            let g = g_eval(&x, field, &scenario.obstacles, params);
            min_g = min_g.min(g);
            if g < 0.0 {
                collided = true;
            }
        }
        k += 1;
        if collided {
            break;
        }
    }
    let g_final = g_eval(&x, field, &scenario.obstacles, params);
    trace.push(row(
        k as f64 * dt,
        &x,
        &ControlInput::default(),
        TraceMode::Plan,
        g_final,
    ));
    report.steps = k;

    let end = reference_end(r);
    let outcome = classify_outcome(&x, end, collided);
    report.success = outcome.is_success();
    report.failure_cause = outcome.cause();
    report.final_distance = Some(x.position().distance(end.0));
    report.final_heading_error_deg = Some(crate::geometry::wrap_to_pi(x.theta - end.1).abs().to_degrees());
    report.min_clearance = Some(min_g);
    let driven: Vec<Point2> = trace.iter().map(|t| Point2::new(t.x, t.y)).collect();
    report.tracked_deviation_degree = deviation_degree_of(&driven, r).ok();
    let (m, v) = mean_var(&report.timing.control_times_s);
    report.timing.control_time_mean_s = m;
    report.timing.control_time_var_s = v;
    Ok(SimOutput {
        report,
        trace,
        trajectory: Some(traj),
    })
}

fn row(t: f64, x: &VehicleState, u: &ControlInput, mode: TraceMode, g_min: f64) -> TraceRow {
    TraceRow {
        t,
        x: x.x,
        y: x.y,
        theta: x.theta,
        v: x.v,
        delta: u.steer,
        a: u.accel,
        mode,
        g_min,
    }
}

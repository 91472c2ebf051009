//! Hierarchical MPC: a condensed QP over the linearized error dynamics with
//! stacked corner half-plane rows, followed by a short nonlinear refinement
//! warm-started from the QP controls.

mod linear;
pub mod qp;
mod separators;
mod sqp;

use std::time::Instant;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use linear::{
    control_from_vector, control_vector, linearize, linearize_step, state_error, LinearizedDynamics, ReferenceWindow,
};
pub use separators::{
    corner_offsets, corner_rows, field_clearance, g_eval, g_with_gradient, min_clearance, obstacle_clearance,
    relevance_radius, select_separators, Clearance, CornerRow, HalfPlane,
};
pub use sqp::{objective, refine_nonlinear, refine_outcome, rollout, RefineOutcome};

use crate::geometry::Polygon;
use crate::planner::Trajectory;
use crate::vehicle::{ControlInput, VehicleParams, VehicleState};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackError {
    #[error("invalid tracker configuration: {0}")]
    InvalidConfig(String),
    #[error("collision constraints of the linear stage are infeasible")]
    QpInfeasible,
    #[error("no refined iterate keeps the body clear (min clearance {min_g:.3} m)")]
    RefineInfeasible { min_g: f64 },
    #[error("QP solver failed: {0}")]
    Solver(qp::QpError),
    #[error("reference trajectory is empty")]
    EmptyReference,
}

/// Weights are given on states (x, y, θ, v) and controls (steer, accel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MpcConfig {
    pub horizon: usize,
    pub refine_horizon: usize,
    pub dt: f64,
    pub q: [[f64; 4]; 4],
    pub w: [[f64; 2]; 2],
    /// Run the nonlinear stage after the QP.
    pub refine: bool,
    /// On an infeasible QP, retry without the collision rows instead of failing.
    pub drop_infeasible_rows: bool,
    pub max_sqp_iter: usize,
    /// Clearance the refinement asks for, meters.
    pub constraint_tol: f64,
    /// Weight of clearance shortfall in the refinement merit.
    pub penalty: f64,
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig {
            horizon: 20,
            refine_horizon: 10,
            dt: 0.5,
            q: [
                [10.0, 0.0, 0.0, 0.0],
                [0.0, 10.0, 0.0, 0.0],
                [0.0, 0.0, 5.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
            ],
            w: [[1.0, 0.0], [0.0, 1.0]],
            refine: true,
            drop_infeasible_rows: false,
            max_sqp_iter: 50,
            constraint_tol: 1e-4,
            penalty: 1e5,
        }
    }
}

fn is_psd(eigs: impl Iterator<Item = f64>) -> bool {
    eigs.into_iter().all(|e| e >= -1e-12)
}

impl MpcConfig {
    pub fn validate(&self) -> Result<(), TrackError> {
        let bad = |m: &str| Err(TrackError::InvalidConfig(m.to_string()));
        if self.horizon == 0 || self.refine_horizon == 0 || self.refine_horizon > self.horizon {
            return bad("need horizon >= refine_horizon >= 1");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        let q = Matrix4::from_fn(|r, c| self.q[r][c]);
        let w = Matrix2::from_fn(|r, c| self.w[r][c]);
        if (q - q.transpose()).amax() > 1e-12 || !is_psd(q.symmetric_eigenvalues().iter().copied()) {
            return bad("q must be symmetric positive semidefinite");
        }
        if (w - w.transpose()).amax() > 1e-12 || !is_psd(w.symmetric_eigenvalues().iter().copied()) {
            return bad("w must be symmetric positive semidefinite");
        }
        if !(self.constraint_tol >= 0.0 && self.penalty > 0.0) {
            return bad("constraint_tol must be >= 0 and penalty > 0");
        }
        Ok(())
    }

    pub fn q_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|r, c| self.q[r][c])
    }

    /// Control weight in the internal (accel, steer) order.
    pub fn w_matrix(&self) -> Matrix2<f64> {
        let w = &self.w;
        Matrix2::new(w[1][1], w[1][0], w[0][1], w[0][0])
    }
}

/// One collision row of the condensed QP: `row · U ≥ bound`.
#[derive(Debug, Clone)]
pub struct StackedRow {
    /// Predicted step, 1-based.
    pub step: usize,
    pub row: DVector<f64>,
    pub bound: f64,
}

/// Linear-stage problem in the stacked control error `Ũ` (2N, accel first).
#[derive(Debug, Clone)]
pub struct CondensedQp {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub collision: Vec<StackedRow>,
    /// Box rows `c·Ũ ≥ d`.
    pub box_c: DMatrix<f64>,
    pub box_d: DVector<f64>,
}

impl CondensedQp {
    pub fn build(
        x_err: &nalgebra::Vector4<f64>,
        window: &ReferenceWindow,
        dynamics: &LinearizedDynamics,
        separators: &[Vec<HalfPlane>],
        params: &VehicleParams,
        config: &MpcConfig,
    ) -> CondensedQp {
        let n = window.horizon();
        let q = config.q_matrix();
        let w = config.w_matrix();
        let mut q_bar = DMatrix::zeros(4 * n, 4 * n);
        let mut w_bar = DMatrix::zeros(2 * n, 2 * n);
        for j in 0..n {
            q_bar.view_mut((4 * j, 4 * j), (4, 4)).copy_from(&q);
            w_bar.view_mut((2 * j, 2 * j), (2, 2)).copy_from(&w);
        }
        let bt_q = dynamics.b_bar.transpose() * &q_bar;
        let mut h = (&bt_q * &dynamics.b_bar + &w_bar) * 2.0;
        h = (&h + h.transpose()) * 0.5;
        let free = &dynamics.a_bar * x_err;
        let g = &bt_q * &free * 2.0;

        let mut collision = Vec::new();
        for (j, seps) in separators.iter().enumerate().take(n) {
            let x_ref = &window.states[j + 1];
            let xr = nalgebra::Vector4::new(x_ref.x, x_ref.y, x_ref.theta, x_ref.v);
            let bj = dynamics.b_bar.rows(4 * j, 4);
            let fj = free.rows(4 * j, 4);
            for sep in seps {
                for cr in corner_rows(sep, x_ref, params) {
                    let row = bj.transpose() * cr.row;
                    let bound = cr.bound - cr.row.dot(&xr) - cr.row.dot(&fj);
                    collision.push(StackedRow {
                        step: j + 1,
                        row,
                        bound,
                    });
                }
            }
        }

        let mut box_c = DMatrix::zeros(4 * n, 2 * n);
        let mut box_d = DVector::zeros(4 * n);
        for j in 0..n {
            let ur = control_vector(&window.controls[j]);
            let lim = [params.max_accel, params.max_steer];
            for k in 0..2 {
                let r = 4 * j + 2 * k;
                box_c[(r, 2 * j + k)] = 1.0;
                box_d[r] = -lim[k] - ur[k];
                box_c[(r + 1, 2 * j + k)] = -1.0;
                box_d[r + 1] = -(lim[k] - ur[k]);
            }
        }
        CondensedQp {
            h,
            g,
            collision,
            box_c,
            box_d,
        }
    }

    pub fn constraint_matrix(&self, with_collision: bool) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.h.nrows();
        let extra = if with_collision { self.collision.len() } else { 0 };
        let m = self.box_c.nrows() + extra;
        let mut c = DMatrix::zeros(m, n);
        let mut d = DVector::zeros(m);
        c.view_mut((0, 0), (self.box_c.nrows(), n)).copy_from(&self.box_c);
        d.rows_mut(0, self.box_d.len()).copy_from(&self.box_d);
        for (i, r) in self.collision.iter().take(extra).enumerate() {
            let at = self.box_c.nrows() + i;
            c.row_mut(at).copy_from(&r.row.transpose());
            d[at] = r.bound;
        }
        (c, d)
    }
}

/// Stacked control errors `Ũ` from the condensed QP, and the multipliers.
pub fn solve_condensed(qp_problem: &CondensedQp, with_collision: bool) -> Result<qp::QpSolution, TrackError> {
    let (c, d) = qp_problem.constraint_matrix(with_collision);
    qp::solve_qp(&qp_problem.h, &qp_problem.g, &c, &d).map_err(|e| match e {
        qp::QpError::Infeasible => TrackError::QpInfeasible,
        other => TrackError::Solver(other),
    })
}

/// Absolute controls from stacked errors.
pub fn controls_from_stacked(u_err: &DVector<f64>, window: &ReferenceWindow) -> Vec<ControlInput> {
    (0..window.horizon())
        .map(|j| {
            let ur = control_vector(&window.controls[j]);
            control_from_vector(&(ur + nalgebra::Vector2::new(u_err[2 * j], u_err[2 * j + 1])))
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackDiagnostics {
    pub qp_seconds: f64,
    pub refine_seconds: f64,
    pub total_seconds: f64,
    pub collision_rows: usize,
    /// The collision rows were dropped after an infeasible QP.
    pub rows_dropped: bool,
    pub refined: bool,
    pub refine_iterations: usize,
    /// Smallest predicted clearance after refinement, if it ran.
    pub min_g: Option<f64>,
    /// Controls the linear stage produced, first step.
    pub qp_control: ControlInput,
}

/// Error raised by `track_step` together with the best control available.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{error}")]
pub struct TrackFailure {
    pub error: TrackError,
    /// Best control found before the failing stage gave up.
    pub fallback: Option<ControlInput>,
    pub diagnostics: TrackDiagnostics,
}

/// One control step at time index `index` of `trajectory`.
#[allow(clippy::too_many_arguments, clippy::result_large_err)]
pub fn track_step(
    x: &VehicleState,
    trajectory: &Trajectory,
    index: usize,
    field: &Polygon,
    obstacles: &[Polygon],
    params: &VehicleParams,
    config: &MpcConfig,
) -> Result<(ControlInput, TrackDiagnostics), TrackFailure> {
    let t0 = Instant::now();
    let mut diag = TrackDiagnostics::default();
    let fail = |error, fallback, diagnostics| TrackFailure {
        error,
        fallback,
        diagnostics,
    };
    if let Err(e) = config.validate() {
        return Err(fail(e, None, diag));
    }
    if trajectory.is_empty() {
        return Err(fail(TrackError::EmptyReference, None, diag));
    }
    let window = ReferenceWindow::from_trajectory(trajectory, index, config.horizon, params, x.theta);
    let dynamics = linearize(&window, params, config.dt);
    let x_err = state_error(x, &window.states[0]);
    let seps: Vec<Vec<HalfPlane>> = window.states[1..]
        .iter()
        .map(|s| select_separators(s, field, obstacles, params))
        .collect();
    let problem = CondensedQp::build(&x_err, &window, &dynamics, &seps, params, config);
    diag.collision_rows = problem.collision.len();

    let mut solution = solve_condensed(&problem, true);
    if matches!(solution, Err(TrackError::QpInfeasible)) && config.drop_infeasible_rows {
        diag.rows_dropped = true;
        solution = solve_condensed(&problem, false);
    }
    diag.qp_seconds = t0.elapsed().as_secs_f64();
    let solution = match solution {
        Ok(s) => s,
        Err(e) => {
            diag.total_seconds = diag.qp_seconds;
            return Err(fail(e, None, diag));
        }
    };
    let controls: Vec<ControlInput> = controls_from_stacked(&solution.x, &window)
        .into_iter()
        .map(|u| u.clamped(params))
        .collect();
    diag.qp_control = controls[0];
    if !config.refine {
        diag.total_seconds = t0.elapsed().as_secs_f64();
        return Ok((controls[0], diag));
    }

    let t1 = Instant::now();
    let warm = &controls[..config.refine_horizon.min(controls.len())];
    let outcome = refine_outcome(warm, x, &window, field, obstacles, params, config);
    diag.refine_seconds = t1.elapsed().as_secs_f64();
    diag.total_seconds = t0.elapsed().as_secs_f64();
    diag.refined = true;
    diag.refine_iterations = outcome.iterations;
    diag.min_g = Some(outcome.min_g);
    if !outcome.feasible {
        // the least-violating refinement iterate
        let first = outcome.controls[0];
        return Err(fail(
            TrackError::RefineInfeasible { min_g: outcome.min_g },
            Some(first),
            diag,
        ));
    }
    Ok((outcome.controls[0], diag))
}

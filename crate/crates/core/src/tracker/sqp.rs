//! Local refinement of the first `N′` controls under exact dynamics and the
//! exact clearance constraint, warm-started from the linear stage.

use nalgebra::{DMatrix, DVector, Vector4};

use super::linear::{control_vector, linearize, state_error, ReferenceWindow};
use super::qp::solve_qp;
use super::separators::g_with_gradient;
use super::{MpcConfig, TrackError};
use crate::geometry::Polygon;
use crate::vehicle::{step, ControlInput, VehicleParams, VehicleState};

#[derive(Debug, Clone, PartialEq)]
pub struct RefineOutcome {
    pub controls: Vec<ControlInput>,
    pub objective: f64,
    /// Smallest clearance over the predicted states.
    pub min_g: f64,
    /// Total clearance shortfall below the tolerance.
    pub violation: f64,
    pub iterations: usize,
    pub feasible: bool,
    /// The warm start was returned as is.
    pub unchanged: bool,
}

pub fn rollout(x0: &VehicleState, controls: &[ControlInput], params: &VehicleParams, dt: f64) -> Vec<VehicleState> {
    let mut out = Vec::with_capacity(controls.len() + 1);
    out.push(*x0);
    for u in controls {
        let next = step(out.last().expect("non-empty"), u, params, dt);
        out.push(next);
    }
    out
}

/// Tracking cost of `controls` over the window under exact dynamics.
pub fn objective(
    x0: &VehicleState,
    controls: &[ControlInput],
    reference: &ReferenceWindow,
    params: &VehicleParams,
    config: &MpcConfig,
) -> f64 {
    let q = config.q_matrix();
    let w = config.w_matrix();
    let states = rollout(x0, controls, params, config.dt);
    let mut total = 0.0;
    for (j, u) in controls.iter().enumerate() {
        let e = state_error(&states[j + 1], &reference.states[j + 1]);
        let du = control_vector(u) - control_vector(&reference.controls[j]);
        total += (e.transpose() * q * e)[0] + (du.transpose() * w * du)[0];
    }
    total
}

struct Eval {
    states: Vec<VehicleState>,
    objective: f64,
    g: Vec<f64>,
    violation: f64,
}

fn evaluate(
    x0: &VehicleState,
    controls: &[ControlInput],
    reference: &ReferenceWindow,
    field: &Polygon,
    obstacles: &[Polygon],
    params: &VehicleParams,
    config: &MpcConfig,
) -> Eval {
    let states = rollout(x0, controls, params, config.dt);
    let g: Vec<f64> = states[1..]
        .iter()
        .map(|s| super::separators::g_eval(s, field, obstacles, params))
        .collect();
    let violation = g.iter().map(|v| (config.constraint_tol - v).max(0.0)).sum();
    Eval {
        objective: objective(x0, controls, reference, params, config),
        states,
        g,
        violation,
    }
}

fn clamp_all(controls: &[ControlInput], params: &VehicleParams) -> Vec<ControlInput> {
    controls.iter().map(|u| u.clamped(params)).collect()
}

/// Runs the refinement and reports the best iterate whether or not it is
/// feasible.
#[allow(clippy::too_many_arguments)]
pub fn refine_outcome(
    warm: &[ControlInput],
    x0: &VehicleState,
    reference: &ReferenceWindow,
    field: &Polygon,
    obstacles: &[Polygon],
    params: &VehicleParams,
    config: &MpcConfig,
) -> RefineOutcome {
    let n = warm.len().min(reference.horizon());
    let reference = reference.truncated(n);
    let q = config.q_matrix();
    let w = config.w_matrix();
    let mu = config.penalty;
    let tol = config.constraint_tol;

    let mut u = clamp_all(&warm[..n], params);
    let mut cur = evaluate(x0, &u, &reference, field, obstacles, params, config);
    let initial_violation = cur.violation;
    let mut best = (u.clone(), cur.objective, cur.violation, cur.g.clone());
    let mut iterations = 0;
    let mut unchanged = false;
    let merit = |e: &Eval| e.objective + mu * e.violation;

    for it in 0..config.max_sqp_iter {
        iterations = it + 1;
        // sensitivities of the rolled-out states to the controls
        let lin = linearize(
            &ReferenceWindow {
                states: cur.states.clone(),
                controls: u.clone(),
            },
            params,
            config.dt,
        );
        let s = &lin.b_bar;
        let nv = 2 * n;
        let nz = nv + n;
        let mut h = DMatrix::zeros(nz, nz);
        let mut grad = DVector::zeros(nz);
        for j in 0..n {
            let e = state_error(&cur.states[j + 1], &reference.states[j + 1]);
            let sj = s.rows(4 * j, 4);
            let qs = q * sj;
            let mut hv = h.view_mut((0, 0), (nv, nv));
            hv += sj.transpose() * &qs * 2.0;
            let ge = sj.transpose() * (q * e) * 2.0;
            let mut gv = grad.rows_mut(0, nv);
            gv += ge;
            let du = control_vector(&u[j]) - control_vector(&reference.controls[j]);
            let wdu = w * du * 2.0;
            grad[2 * j] += wdu[0];
            grad[2 * j + 1] += wdu[1];
            for a in 0..2 {
                for b in 0..2 {
                    h[(2 * j + a, 2 * j + b)] += 2.0 * w[(a, b)];
                }
            }
        }
        // elastic slacks on the clearance rows
        for j in 0..n {
            h[(nv + j, nv + j)] = 1e-4;
            grad[nv + j] = mu;
        }
        for i in 0..nv {
            h[(i, i)] += 1e-9;
        }
        let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
        for j in 0..n {
            let (gv, gg) = g_with_gradient(&cur.states[j + 1], field, obstacles, params);
            let g4 = Vector4::new(gg[0], gg[1], gg[2], 0.0);
            let sj = s.rows(4 * j, 4);
            let mut r = DVector::zeros(nz);
            r.rows_mut(0, nv).copy_from(&(sj.transpose() * g4));
            r[nv + j] = 1.0;
            rows.push((r, tol - gv));
            let mut slack = DVector::zeros(nz);
            slack[nv + j] = 1.0;
            rows.push((slack, 0.0));
        }
        for (j, uj) in u.iter().enumerate() {
            let cv = control_vector(uj);
            let lim = [params.max_accel, params.max_steer];
            for k in 0..2 {
                let mut up = DVector::zeros(nz);
                up[2 * j + k] = -1.0;
                rows.push((up, -(lim[k] - cv[k])));
                let mut lo = DVector::zeros(nz);
                lo[2 * j + k] = 1.0;
                rows.push((lo, -lim[k] - cv[k]));
            }
        }
        let c = DMatrix::from_fn(rows.len(), nz, |r, col| rows[r].0[col]);
        let d = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
        let Ok(sol) = solve_qp(&h, &grad, &c, &d) else { break };
        let step_u = sol.x.rows(0, nv).into_owned();
        if step_u.amax() < 1e-6 {
            if it == 0 && cur.violation == 0.0 {
                unchanged = true;
            }
            break;
        }
        // backtracking on the exact-penalty merit
        let m0 = merit(&cur);
        let mut alpha = 1.0;
        let mut accepted = None;
        while alpha > 1e-3 {
            let trial: Vec<ControlInput> = (0..n)
                .map(|j| {
                    ControlInput::new(
                        u[j].steer + alpha * step_u[2 * j + 1],
                        u[j].accel + alpha * step_u[2 * j],
                    )
                    .clamped(params)
                })
                .collect();
            let e = evaluate(x0, &trial, &reference, field, obstacles, params, config);
            if merit(&e) < m0 - 1e-12 {
                accepted = Some((trial, e));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, e)) = accepted else { break };
        u = trial;
        cur = e;
        let better = if cur.violation == 0.0 {
            best.2 > 0.0 || cur.objective < best.1
        } else {
            cur.violation < best.2
        };
        if better {
            best = (u.clone(), cur.objective, cur.violation, cur.g.clone());
        }
    }
    debug_assert!(best.2 <= initial_violation);
    if unchanged {
        best = (warm[..n].to_vec(), best.1, best.2, best.3);
    }
    let min_g = best.3.iter().copied().fold(f64::INFINITY, f64::min);
    RefineOutcome {
        controls: best.0,
        objective: best.1,
        min_g,
        violation: best.2,
        iterations,
        feasible: best.3.iter().all(|g| *g > 0.0),
        unchanged,
    }
}

/// Refined controls `u_k..u_{k+N′−1}`; fails when no iterate keeps every
/// predicted state clear.
#[allow(clippy::too_many_arguments)]
pub fn refine_nonlinear(
    warm: &[ControlInput],
    x0: &VehicleState,
    reference: &ReferenceWindow,
    field: &Polygon,
    obstacles: &[Polygon],
    params: &VehicleParams,
    config: &MpcConfig,
) -> Result<RefineOutcome, TrackError> {
    let out = refine_outcome(warm, x0, reference, field, obstacles, params, config);
    if out.feasible {
        Ok(out)
    } else {
        Err(TrackError::RefineInfeasible { min_g: out.min_g })
    }
}

//! Error dynamics of the Euler bicycle model about a reference and their
//! stacking over the horizon.
//!
//! Control vectors inside matrices are ordered (accel, steer).

use nalgebra::{DMatrix, Matrix4, Matrix4x2, Vector2, Vector4};

use crate::geometry::wrap_to_pi;
use crate::planner::Trajectory;
use crate::vehicle::{ControlInput, VehicleParams, VehicleState};

pub fn control_vector(u: &ControlInput) -> Vector2<f64> {
    Vector2::new(u.accel, u.steer)
}

pub fn control_from_vector(v: &Vector2<f64>) -> ControlInput {
    ControlInput::new(v[1], v[0])
}

/// Reference states `k..=k+N` and controls `k..k+N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceWindow {
    pub states: Vec<VehicleState>,
    pub controls: Vec<ControlInput>,
}

impl ReferenceWindow {
    /// Window of `horizon` steps starting at `index`. Past the end the last
    /// pose is held with zero speed. Headings are unwrapped so consecutive
    /// values differ by less than π, starting near `heading_anchor`.
    pub fn from_trajectory(
        traj: &Trajectory,
        index: usize,
        horizon: usize,
        params: &VehicleParams,
        heading_anchor: f64,
    ) -> Self {
        let last = traj.len() - 1;
        let mut states = Vec::with_capacity(horizon + 1);
        let mut controls = Vec::with_capacity(horizon);
        let mut prev = heading_anchor;
        for j in 0..=horizon {
            let i = index + j;
            let mut s = traj.points[i.min(last)].state;
            if i > last {
                s.v = 0.0;
            }
            s.theta = prev + wrap_to_pi(s.theta - prev);
            prev = s.theta;
            states.push(s);
            if j < horizon {
                let steer = if i < last {
                    (traj.points[i].curvature * params.wheelbase).atan()
                } else {
                    0.0
                };
                controls.push(ControlInput::new(steer, 0.0));
            }
        }
        ReferenceWindow { states, controls }
    }

    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    /// Truncated to `n` steps.
    pub fn truncated(&self, n: usize) -> ReferenceWindow {
        let n = n.min(self.horizon());
        ReferenceWindow {
            states: self.states[..=n].to_vec(),
            controls: self.controls[..n].to_vec(),
        }
    }
}

/// Jacobians of one Euler step with respect to state and (accel, steer).
pub fn linearize_step(
    x: &VehicleState,
    u: &ControlInput,
    params: &VehicleParams,
    dt: f64,
) -> (Matrix4<f64>, Matrix4x2<f64>) {
    let (s, c) = x.theta.sin_cos();
    let l = params.wheelbase;
    let a = Matrix4::new(
        1.0,
        0.0,
        -x.v * s * dt,
        c * dt, //
        0.0,
        1.0,
        x.v * c * dt,
        s * dt, //
        0.0,
        0.0,
        1.0,
        dt / l * u.steer.tan(), //
        0.0,
        0.0,
        0.0,
        1.0,
    );
    let cos_d = u.steer.cos();
    let b = Matrix4x2::new(
        0.0,
        0.0, //
        0.0,
        0.0, //
        0.0,
        dt * x.v / (l * cos_d * cos_d), //
        dt,
        0.0,
    );
    (a, b)
}

#[derive(Debug, Clone)]
pub struct LinearizedDynamics {
    pub a: Vec<Matrix4<f64>>,
    pub b: Vec<Matrix4x2<f64>>,
    /// 4N × 4: maps the initial error to stacked errors `k+1..=k+N`.
    pub a_bar: DMatrix<f64>,
    /// 4N × 2N: maps stacked control errors to stacked state errors.
    pub b_bar: DMatrix<f64>,
}

pub fn linearize(window: &ReferenceWindow, params: &VehicleParams, dt: f64) -> LinearizedDynamics {
    let n = window.horizon();
    let (a, b): (Vec<_>, Vec<_>) = (0..n)
        .map(|j| linearize_step(&window.states[j], &window.controls[j], params, dt))
        .unzip();
    let mut a_bar = DMatrix::zeros(4 * n, 4);
    let mut b_bar = DMatrix::zeros(4 * n, 2 * n);
    let mut prod = Matrix4::identity();
    for j in 0..n {
        prod = a[j] * prod;
        a_bar.view_mut((4 * j, 0), (4, 4)).copy_from(&prod);
        // column block i: A_j ⋯ A_{i+1} B_i
        let mut tail = Matrix4::identity();
        for i in (0..=j).rev() {
            let blk = tail * b[i];
            b_bar.view_mut((4 * j, 2 * i), (4, 2)).copy_from(&blk);
            tail *= a[i];
        }
    }
    LinearizedDynamics { a, b, a_bar, b_bar }
}

/// State minus reference with the heading difference wrapped.
pub fn state_error(x: &VehicleState, r: &VehicleState) -> Vector4<f64> {
    Vector4::new(x.x - r.x, x.y - r.y, wrap_to_pi(x.theta - r.theta), x.v - r.v)
}

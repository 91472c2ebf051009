//! Finite-difference and grid-search checks on the linear MPC pieces.

use furrow_core::geometry::wrap_to_pi;
use furrow_core::planner::{Trajectory, TrajectoryPoint};
use furrow_core::tracker::{linearize, linearize_step, solve_condensed, CondensedQp, MpcConfig, ReferenceWindow};
use furrow_core::vehicle::{step, ControlInput, Direction, VehicleParams, VehicleState};
use nalgebra::{DVector, Vector4};
use rand::{Rng, SeedableRng};

/// Largest entry gap between the analytic A_k, B_k and central differences
/// of the discrete model over `samples` random states and controls.
pub fn worst_jacobian_error(seed: u64, samples: usize) -> f64 {
    let params = VehicleParams::default();
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let h = 1e-5;
    let dt = 0.5;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = VehicleState::new(
            r.random_range(-50.0..50.0),
            r.random_range(-50.0..50.0),
            r.random_range(-3.1..3.1),
            r.random_range(-3.0..3.0),
        );
        let u = ControlInput::new(r.random_range(-0.5..0.5), r.random_range(-2.0..2.0));
        let (a, b) = linearize_step(&x, &u, &params, dt);
        let diff = |p: &VehicleState, m: &VehicleState| {
            Vector4::new(p.x - m.x, p.y - m.y, wrap_to_pi(p.theta - m.theta), p.v - m.v) / (2.0 * h)
        };
        for col in 0..4 {
            let mut xp = x;
            let mut xm = x;
            match col {
                0 => (xp.x += h, xm.x -= h),
                1 => (xp.y += h, xm.y -= h),
                2 => (xp.theta += h, xm.theta -= h),
                _ => (xp.v += h, xm.v -= h),
            };
            let fd = diff(&step(&xp, &u, &params, dt), &step(&xm, &u, &params, dt));
            worst = worst.max((fd - a.column(col)).amax());
        }
        // control columns in (accel, steer) order
        for col in 0..2 {
            let (mut up, mut um) = (u, u);
            if col == 0 {
                up.accel += h;
                um.accel -= h;
            } else {
                up.steer += h;
                um.steer -= h;
            }
            let fd = diff(&step(&x, &up, &params, dt), &step(&x, &um, &params, dt));
            worst = worst.max((fd - b.column(col)).amax());
        }
    }
    worst
}

#[derive(Debug)]
pub struct QpGridCheck {
    pub qp_u: [f64; 4],
    pub grid_u: [f64; 4],
    pub qp_cost: f64,
    pub grid_cost: f64,
    pub qp_feasible: bool,
    pub steer_bound_active: bool,
    /// Finest grid spacing used.
    pub resolution: f64,
}

/// Two-step box-constrained tracking QP against a coarse-then-fine grid.
pub fn two_step_qp_vs_grid() -> QpGridCheck {
    let params = VehicleParams::default();
    let cfg = MpcConfig {
        horizon: 2,
        refine_horizon: 1,
        ..MpcConfig::default()
    };
    let traj = Trajectory {
        dt: cfg.dt,
        points: (0..10)
            .map(|k| TrajectoryPoint {
                state: VehicleState::new(k as f64 * 2.0 * cfg.dt, 0.0, 0.0, 2.0),
                curvature: 0.0,
                direction: Direction::Forward,
            })
            .collect(),
    };
    let window = ReferenceWindow::from_trajectory(&traj, 0, 2, &params, 0.0);
    let dynm = linearize(&window, &params, cfg.dt);
    // a large lateral error saturates the steering bound
    let x_err = Vector4::new(-0.5, 3.0, 0.2, -0.4);
    let qp = CondensedQp::build(&x_err, &window, &dynm, &vec![Vec::new(); 2], &params, &cfg);
    let sol = solve_condensed(&qp, false).unwrap();
    let cost = |u: &[f64; 4]| {
        let v = DVector::from_row_slice(u);
        0.5 * (v.transpose() * &qp.h * &v)[0] + qp.g.dot(&v)
    };
    let (am, dm) = (params.max_accel, params.max_steer);
    let feasible = |u: &[f64; 4]| u[0].abs() <= am && u[2].abs() <= am && u[1].abs() <= dm && u[3].abs() <= dm;
    let grid = |lo: f64, hi: f64, h: f64| {
        let n = ((hi - lo) / h).round() as usize;
        (0..=n).map(move |i| lo + i as f64 * h)
    };
    let mut best = ([0.0; 4], f64::INFINITY);
    for a0 in grid(-am, am, 0.1) {
        for d0 in grid(-dm, dm, 0.05) {
            for a1 in grid(-am, am, 0.1) {
                for d1 in grid(-dm, dm, 0.05) {
                    let u = [a0, d0, a1, d1];
                    let c = cost(&u);
                    if c < best.1 {
                        best = (u, c);
                    }
                }
            }
        }
    }
    let centre = best.0;
    let fine = 0.01;
    for a0 in grid(centre[0] - 0.1, centre[0] + 0.1, fine) {
        for d0 in grid(centre[1] - 0.05, centre[1] + 0.05, fine) {
            for a1 in grid(centre[2] - 0.1, centre[2] + 0.1, fine) {
                for d1 in grid(centre[3] - 0.05, centre[3] + 0.05, fine) {
                    let u = [a0, d0, a1, d1];
                    if feasible(&u) {
                        let c = cost(&u);
                        if c < best.1 {
                            best = (u, c);
                        }
                    }
                }
            }
        }
    }
    let qp_u = [sol.x[0], sol.x[1], sol.x[2], sol.x[3]];
    QpGridCheck {
        qp_u,
        grid_u: best.0,
        qp_cost: cost(&qp_u),
        grid_cost: best.1,
        qp_feasible: feasible(&qp_u),
        steer_bound_active: sol.active.iter().any(|&i| i < 4),
        // the grid minimiser lies within two fine steps of the true one per axis
        resolution: 2.0 * fine,
    }
}

//! Shortest Reeds-Shepp paths.
//!
//! Closed-form solutions for the five word families, each tried under the
//! time-flip, reflection and reversal symmetries. Lengths inside the solver
//! are in turning-radius units.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::geometry::{footprint_inside_field, polygon_polygon_collides, Polygon, Pose};
use crate::vehicle::{advance, footprint, Direction, MotionPrimitive, VehicleParams};

const ZERO: f64 = 10.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Left,
    Straight,
    Right,
}

impl SegmentKind {
    /// Steering sign: +1 left, -1 right.
    pub fn turn_sign(self) -> f64 {
        match self {
            SegmentKind::Left => 1.0,
            SegmentKind::Straight => 0.0,
            SegmentKind::Right => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsSegment {
    pub kind: SegmentKind,
    pub direction: Direction,
    /// Metres, non-negative.
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsPath {
    pub segments: Vec<RsSegment>,
    pub turning_radius: f64,
}

impl RsPath {
    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length).sum()
    }

    pub fn curvature(&self, seg: &RsSegment) -> f64 {
        seg.kind.turn_sign() / self.turning_radius
    }

    pub fn primitives(&self) -> Vec<MotionPrimitive> {
        self.segments
            .iter()
            .map(|s| MotionPrimitive {
                curvature: self.curvature(s),
                direction: s.direction,
                arc_length: s.length,
            })
            .collect()
    }

    pub fn end_pose(&self, start: &Pose) -> Pose {
        self.pose_at(start, self.length())
    }

    /// Pose after travelling arc length `s` from `start` (clamped to the path).
    pub fn pose_at(&self, start: &Pose, s: f64) -> Pose {
        let mut pose = *start;
        let mut remaining = s.max(0.0);
        for seg in &self.segments {
            let take = remaining.min(seg.length);
            pose = advance(&pose, self.curvature(seg), seg.direction.sign() * take);
            remaining -= take;
            if remaining <= 0.0 {
                break;
            }
        }
        pose
    }

    /// Motion direction at arc length `s`; segment boundaries take the
    /// outgoing segment.
    pub fn direction_at(&self, s: f64) -> Direction {
        let mut acc = 0.0;
        for seg in &self.segments {
            acc += seg.length;
            if s < acc {
                return seg.direction;
            }
        }
        self.segments.last().map_or(Direction::Forward, |s| s.direction)
    }
}

fn mod2pi(x: f64) -> f64 {
    let v = x % TAU;
    if v < -PI {
        v + TAU
    } else if v > PI {
        v - TAU
    } else {
        v
    }
}

fn polar(x: f64, y: f64) -> (f64, f64) {
    (x.hypot(y), y.atan2(x))
}

fn tau_omega(u: f64, v: f64, xi: f64, eta: f64, phi: f64) -> (f64, f64) {
    let delta = mod2pi(u - v);
    let a = u.sin() - delta.sin();
    let b = u.cos() - delta.cos() - 1.0;
    let t1 = (eta * a - xi * b).atan2(xi * a + eta * b);
    let t2 = 2.0 * (delta.cos() - v.cos() - u.cos()) + 3.0;
    let tau = if t2 < 0.0 { mod2pi(t1 + PI) } else { mod2pi(t1) };
    (tau, mod2pi(tau - u + v - phi))
}

fn lp_sp_lp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (u, t) = polar(x - phi.sin(), y - 1.0 + phi.cos());
    if t >= -ZERO {
        let v = mod2pi(phi - t);
        if v >= -ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_sp_rp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let (u1, t1) = polar(x + phi.sin(), y - 1.0 - phi.cos());
    let u1 = u1 * u1;
    if u1 >= 4.0 {
        let u = (u1 - 4.0).sqrt();
        let theta = 2f64.atan2(u);
        let t = mod2pi(t1 + theta);
        let v = mod2pi(t - phi);
        if t >= -ZERO && v >= -ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rm_l(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x - phi.sin();
    let eta = y - 1.0 + phi.cos();
    let (u1, theta) = polar(xi, eta);
    if u1 <= 4.0 {
        let u = -2.0 * (0.25 * u1).asin();
        let t = mod2pi(theta + 0.5 * u + PI);
        let v = mod2pi(phi - t + u);
        if t >= -ZERO && u <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rup_lum_rm(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let rho = 0.25 * (2.0 + xi.hypot(eta));
    if rho <= 1.0 {
        let u = rho.acos();
        let (t, v) = tau_omega(u, -u, xi, eta, phi);
        if t >= -ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rum_lum_rp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let rho = (20.0 - xi * xi - eta * eta) / 16.0;
    if (0.0..=1.0).contains(&rho) {
        let u = -rho.acos();
        if u >= -0.5 * PI {
            let (t, v) = tau_omega(u, u, xi, eta, phi);
            if t >= -ZERO && v >= -ZERO {
                return Some((t, u, v));
            }
        }
    }
    None
}

fn lp_rm_sm_lm(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x - phi.sin();
    let eta = y - 1.0 + phi.cos();
    let (rho, theta) = polar(xi, eta);
    if rho >= 2.0 {
        let r = (rho * rho - 4.0).sqrt();
        let u = 2.0 - r;
        let t = mod2pi(theta + r.atan2(-2.0));
        let v = mod2pi(phi - 0.5 * PI - t);
        if t >= -ZERO && u <= ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rm_sm_rm(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let (rho, theta) = polar(-eta, xi);
    if rho >= 2.0 {
        let t = theta;
        let u = 2.0 - rho;
        let v = mod2pi(t + 0.5 * PI - phi);
        if t >= -ZERO && u <= ZERO && v <= ZERO {
            return Some((t, u, v));
        }
    }
    None
}

fn lp_rm_s_lm_rp(x: f64, y: f64, phi: f64) -> Option<(f64, f64, f64)> {
    let xi = x + phi.sin();
    let eta = y - 1.0 - phi.cos();
    let (rho, _) = polar(xi, eta);
    if rho >= 2.0 {
        let u = 4.0 - (rho * rho - 4.0).sqrt();
        if u <= ZERO {
            let t = mod2pi(((4.0 - u) * xi - 2.0 * eta).atan2(-2.0 * xi + (u - 4.0) * eta));
            let v = mod2pi(t - phi);
            if t >= -ZERO && v >= -ZERO {
                return Some((t, u, v));
            }
        }
    }
    None
}

use SegmentKind::{Left as L, Right as R, Straight as S};

const WORDS: [&[SegmentKind]; 18] = [
    &[L, R, L],
    &[R, L, R],
    &[L, R, L, R],
    &[R, L, R, L],
    &[L, R, S, L],
    &[R, L, S, R],
    &[L, S, R, L],
    &[R, S, L, R],
    &[L, R, S, R],
    &[R, L, S, L],
    &[R, S, R, L],
    &[L, S, L, R],
    &[L, S, R],
    &[R, S, L],
    &[L, S, L],
    &[R, S, R],
    &[L, R, S, L, R],
    &[R, L, S, R, L],
];

/// Best candidate so far: word index and signed unit-radius lengths.
struct Best {
    length: f64,
    word: usize,
    lengths: Vec<f64>,
}

impl Best {
    fn offer(&mut self, word: usize, lengths: &[f64]) {
        let l: f64 = lengths.iter().map(|v| v.abs()).sum();
        if self.length > l {
            self.length = l;
            self.word = word;
            self.lengths = lengths.to_vec();
        }
    }
}

type WordSolver = fn(f64, f64, f64) -> Option<(f64, f64, f64)>;

/// Applies `solver` under the four time-flip/reflection variants. `build`
/// maps the solver output and a sign (-1 for time-flipped) to lengths.
fn symmetric(
    best: &mut Best,
    x: f64,
    y: f64,
    phi: f64,
    words: (usize, usize),
    solver: WordSolver,
    build: &dyn Fn(f64, f64, f64, f64) -> Vec<f64>,
) {
    if let Some((t, u, v)) = solver(x, y, phi) {
        best.offer(words.0, &build(t, u, v, 1.0));
    }
    if let Some((t, u, v)) = solver(-x, y, -phi) {
        best.offer(words.0, &build(t, u, v, -1.0));
    }
    if let Some((t, u, v)) = solver(x, -y, -phi) {
        best.offer(words.1, &build(t, u, v, 1.0));
    }
    if let Some((t, u, v)) = solver(-x, -y, phi) {
        best.offer(words.1, &build(t, u, v, -1.0));
    }
}

fn solve_unit(x: f64, y: f64, phi: f64) -> Best {
    let mut best = Best {
        length: f64::INFINITY,
        word: 0,
        lengths: Vec::new(),
    };
    let fwd = |t: f64, u: f64, v: f64, s: f64| vec![s * t, s * u, s * v];
    let back = |t: f64, u: f64, v: f64, s: f64| vec![s * v, s * u, s * t];
    let (xb, yb) = (x * phi.cos() + y * phi.sin(), x * phi.sin() - y * phi.cos());

    // CSC
    symmetric(&mut best, x, y, phi, (14, 15), lp_sp_lp, &fwd);
    symmetric(&mut best, x, y, phi, (12, 13), lp_sp_rp, &fwd);
    // CCC
    symmetric(&mut best, x, y, phi, (0, 1), lp_rm_l, &fwd);
    symmetric(&mut best, xb, yb, phi, (0, 1), lp_rm_l, &back);
    // CCCC
    symmetric(&mut best, x, y, phi, (2, 3), lp_rup_lum_rm, &|t, u, v, s| {
        vec![s * t, s * u, -s * u, s * v]
    });
    symmetric(&mut best, x, y, phi, (2, 3), lp_rum_lum_rp, &|t, u, v, s| {
        vec![s * t, s * u, s * u, s * v]
    });
    // CCSC and its reversal
    let ccsc = |t: f64, u: f64, v: f64, s: f64| vec![s * t, -s * FRAC_PI_2, s * u, s * v];
    let cscc = |t: f64, u: f64, v: f64, s: f64| vec![s * v, s * u, -s * FRAC_PI_2, s * t];
    symmetric(&mut best, x, y, phi, (4, 5), lp_rm_sm_lm, &ccsc);
    symmetric(&mut best, x, y, phi, (8, 9), lp_rm_sm_rm, &ccsc);
    symmetric(&mut best, xb, yb, phi, (6, 7), lp_rm_sm_lm, &cscc);
    symmetric(&mut best, xb, yb, phi, (10, 11), lp_rm_sm_rm, &cscc);
    // CCSCC
    symmetric(&mut best, x, y, phi, (16, 17), lp_rm_s_lm_rp, &|t, u, v, s| {
        vec![s * t, -s * FRAC_PI_2, s * u, -s * FRAC_PI_2, s * v]
    });
    best
}

/// Shortest Reeds-Shepp path from `start` to `goal` with arcs of `radius`.
/// Among equal-length candidates the first one tried wins.
pub fn rs_shortest(start: &Pose, goal: &Pose, radius: f64) -> RsPath {
    assert!(radius > 0.0, "turning radius must be positive");
    let local = start.inverse_transform(goal.position);
    let best = solve_unit(local.x / radius, local.y / radius, goal.heading - start.heading);
    let segments = WORDS[best.word]
        .iter()
        .zip(&best.lengths)
        .filter(|(_, &l)| l.abs() > 1e-12)
        .map(|(&kind, &l)| RsSegment {
            kind,
            direction: Direction::from_sign(l),
            length: l.abs() * radius,
        })
        .collect();
    RsPath {
        segments,
        turning_radius: radius,
    }
}

/// Poses at arc length 0, `spacing`, `2·spacing`, … plus the end pose.
pub fn rs_sample(path: &RsPath, start: &Pose, spacing: f64) -> Vec<Pose> {
    assert!(spacing > 0.0, "sample spacing must be positive");
    let total = path.length();
    let mut out = vec![*start];
    let mut pose = *start;
    let mut next = spacing;
    let mut travelled = 0.0;
    for seg in &path.segments {
        let k = path.curvature(seg);
        let sign = seg.direction.sign();
        let seg_start_pose = pose;
        let seg_start = travelled;
        while next < seg_start + seg.length && next < total {
            out.push(advance(&seg_start_pose, k, sign * (next - seg_start)));
            next += spacing;
        }
        pose = advance(&seg_start_pose, k, sign * seg.length);
        travelled += seg.length;
    }
    if total > 0.0 {
        out.push(pose);
    }
    out
}

/// Footprint check at poses spaced at most `check_spacing` apart.
pub fn rs_collision_free(
    path: &RsPath,
    start: &Pose,
    field: &Polygon,
    obstacles: &[Polygon],
    params: &VehicleParams,
    check_spacing: f64,
) -> bool {
    rs_sample(path, start, check_spacing).iter().all(|pose| {
        let fp = footprint(pose, params);
        footprint_inside_field(&fp, field) && !obstacles.iter().any(|o| polygon_polygon_collides(&fp, o))
    })
}

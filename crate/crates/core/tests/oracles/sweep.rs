//! Post-hoc footprint sweep by boundary sampling and ray casting.

use furrow_core::geometry::{Point2, Polygon, Pose};
use furrow_core::planner::Trajectory;
use furrow_core::vehicle::{advance, VehicleParams};

pub fn point_in_polygon(p: Point2, poly: &[Point2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn body_outline(pose: &Pose, params: &VehicleParams, step: f64) -> Vec<Point2> {
    let rear = params.rear_overhang;
    let front = params.body_length - rear;
    let w = params.body_width / 2.0;
    let corners = [(-rear, -w), (front, -w), (front, w), (-rear, w)];
    let mut out = Vec::new();
    for i in 0..4 {
        let (a, b) = (corners[i], corners[(i + 1) % 4]);
        let len = (b.0 - a.0).hypot(b.1 - a.1);
        let n = (len / step).ceil() as usize;
        for k in 0..n {
            let t = k as f64 / n as f64;
            let lx = a.0 + t * (b.0 - a.0);
            let ly = a.1 + t * (b.1 - a.1);
            let (s, c) = pose.heading.sin_cos();
            out.push(Point2::new(
                pose.position.x + c * lx - s * ly,
                pose.position.y + s * lx + c * ly,
            ));
        }
    }
    out
}

/// True when the sampled body outline stays inside `field` and away from
/// every obstacle at this pose.
pub fn pose_clear(pose: &Pose, field: &Polygon, obstacles: &[Polygon], params: &VehicleParams) -> bool {
    let outline = body_outline(pose, params, 0.05);
    if !outline.iter().all(|p| point_in_polygon(*p, field.vertices())) {
        return false;
    }
    for o in obstacles {
        if outline.iter().any(|p| point_in_polygon(*p, o.vertices())) {
            return false;
        }
        let hull: Vec<Point2> = body_outline(pose, params, 10.0);
        if o.vertices().iter().any(|v| point_in_polygon(*v, &hull)) {
            return false;
        }
    }
    true
}

/// Replays every motion of `traj` at `spacing` and checks each pose.
pub fn trajectory_clear(
    traj: &Trajectory,
    field: &Polygon,
    obstacles: &[Polygon],
    params: &VehicleParams,
    spacing: f64,
) -> bool {
    for w in traj.points.windows(2) {
        let from = w[0].state.pose();
        let to = w[1].state.position();
        let len = from.position.distance(to);
        let k = w[0].curvature;
        // chord length to arc length
        let arc = if (k * len / 2.0).abs() < 1e-12 {
            len
        } else {
            2.0 * (k * len / 2.0).asin() / k
        };
        let signed = w[0].direction.sign() * arc;
        let n = (arc / spacing).ceil().max(1.0) as usize;
        for i in 0..=n {
            let pose = advance(&from, k, signed * i as f64 / n as f64);
            if !pose_clear(&pose, field, obstacles, params) {
                return false;
            }
        }
    }
    true
}

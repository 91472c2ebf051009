//! Half-plane separators between the vehicle body and the field boundary or
//! obstacles, their corner-wise linearisation, and the exact clearance `g`.

use nalgebra::{Vector3, Vector4};

use crate::geometry::{
    closest_point_on_segment, footprint_inside_field, point_segment_distance, sdf_convex, Point2, Polygon,
};
use crate::vehicle::{footprint, VehicleParams, VehicleState};

/// `a·x + b·y + c ≥ 0` on the safe side; `(a, b)` is a unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HalfPlane {
    /// Line through `p` with safe-side normal `n` (normalised here).
    pub fn through(p: Point2, n: Point2) -> Self {
        let n = n.normalized();
        HalfPlane {
            a: n.x,
            b: n.y,
            c: -(n.x * p.x + n.y * p.y),
        }
    }

    pub fn value(&self, p: Point2) -> f64 {
        self.a * p.x + self.b * p.y + self.c
    }
}

/// Linear constraint `row · [x, y, θ, v] ≥ bound` for one body corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerRow {
    pub row: Vector4<f64>,
    pub bound: f64,
}

impl CornerRow {
    pub fn slack(&self, x: &Vector4<f64>) -> f64 {
        self.row.dot(x) - self.bound
    }
}

/// Body corners in the rear-axle frame: right-front, left-front,
/// right-rear, left-rear.
pub fn corner_offsets(params: &VehicleParams) -> [(f64, f64); 4] {
    let l = params.front_length();
    let w = params.half_width();
    let r = params.rear_overhang;
    [(l, -w), (l, w), (-r, -w), (-r, w)]
}

/// Safe-side condition of each corner, with sin θ and cos θ expanded to first
/// order about the reference heading.
pub fn corner_rows(sep: &HalfPlane, x_ref: &VehicleState, params: &VehicleParams) -> [CornerRow; 4] {
    let th = x_ref.theta;
    let (s, c) = th.sin_cos();
    corner_offsets(params).map(|(lx, ly)| {
        // corner offset rotated by θ, and its derivative
        let gx = lx * c - ly * s;
        let gy = lx * s + ly * c;
        let c3 = sep.a * (-lx * s - ly * c) + sep.b * (lx * c - ly * s);
        let g0 = sep.a * gx + sep.b * gy;
        CornerRow {
            row: Vector4::new(sep.a, sep.b, c3, 0.0),
            bound: -(g0 - c3 * th) - sep.c,
        }
    })
}

fn nearest_edge(field: &Polygon, p: Point2) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, (a, b)) in field.edges().enumerate() {
        let d = point_segment_distance(p, a, b);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

fn edge_line(field: &Polygon, i: usize) -> HalfPlane {
    let (a, _) = field.edge(i);
    HalfPlane::through(a, field.inward_normal(i))
}

/// Separator through the obstacle-side witness point with the normal from
/// the obstacle toward the body.
fn sdf_separator(body: &Polygon, shape: &Polygon) -> Option<HalfPlane> {
    let r = sdf_convex(body, shape).ok()?;
    if r.normal.norm() < 0.5 {
        return None;
    }
    Some(HalfPlane::through(r.nearest_on_b, r.normal))
}

/// Distance within which a corner or an obstacle contributes separators.
pub fn relevance_radius(params: &VehicleParams) -> f64 {
    2.0 * (params.front_length() + params.half_width())
}

/// Separators for one predicted reference state.
pub fn select_separators(
    x_ref: &VehicleState,
    field: &Polygon,
    obstacles: &[Polygon],
    params: &VehicleParams,
) -> Vec<HalfPlane> {
    let pos = x_ref.position();
    let body = footprint(&x_ref.pose(), params);
    let reach = relevance_radius(params);
    let n = field.len();
    let i = nearest_edge(field, pos);
    let (a, b) = field.edge(i);
    let travel = Point2::from_angle(x_ref.theta) * if x_ref.v < 0.0 { -1.0 } else { 1.0 };
    let (next, shared) = if (b - a).dot(travel) >= 0.0 {
        ((i + 1) % n, (i + 1) % n)
    } else {
        ((i + n - 1) % n, i)
    };
    let corner = field.vertex(shared);
    let mut out = Vec::new();
    if corner.distance(pos) > reach {
        out.push(edge_line(field, i));
    } else if !field.is_reflex(shared) {
        out.push(edge_line(field, i));
        out.push(edge_line(field, next));
    } else {
        // the boundary bulges into the field here
        let (p, q) = (field.edge(i), field.edge(next));
        let far_i = if p.0 == corner { p.1 } else { p.0 };
        let far_next = if q.0 == corner { q.1 } else { q.0 };
        match Polygon::new(vec![far_i, corner, far_next])
            .ok()
            .and_then(|t| sdf_separator(&body, &t))
        {
            Some(h) => out.push(h),
            None => out.push(edge_line(field, i)),
        }
    }
    for o in obstacles {
        let near = sdf_convex(&body, o).map(|r| r.signed_distance < reach).unwrap_or(true);
        if near {
            if let Some(h) = sdf_separator(&body, o) {
                out.push(h);
            }
        }
    }
    out
}

/// Clearance of `body` to one shape and the data for its gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Clearance {
    pub value: f64,
    /// Witness on the body.
    pub body_point: Point2,
    /// Unit direction in which moving the body increases the clearance.
    pub normal: Point2,
}

fn segment_pair(p: Point2, q: Point2, r: Point2, s: Point2) -> (f64, Point2, Point2) {
    let cands = [
        (p, closest_point_on_segment(p, r, s).0),
        (q, closest_point_on_segment(q, r, s).0),
        (closest_point_on_segment(r, p, q).0, r),
        (closest_point_on_segment(s, p, q).0, s),
    ];
    cands
        .iter()
        .map(|&(x, y)| (x.distance(y), x, y))
        .fold((f64::INFINITY, p, r), |m, c| if c.0 < m.0 { c } else { m })
}

fn nearest_on_boundary(poly: &Polygon, p: Point2) -> Point2 {
    poly.edges()
        .map(|(a, b)| closest_point_on_segment(p, a, b).0)
        .fold((f64::INFINITY, p), |m, c| {
            let d = c.distance(p);
            if d < m.0 {
                (d, c)
            } else {
                m
            }
        })
        .1
}

fn boundary_gap(body: &Polygon, shape: &Polygon) -> (f64, Point2, Point2) {
    let mut best = (f64::INFINITY, body.vertex(0), shape.vertex(0));
    for (p, q) in body.edges() {
        for (r, s) in shape.edges() {
            let c = segment_pair(p, q, r, s);
            if c.0 < best.0 {
                best = c;
            }
        }
    }
    best
}

/// Signed clearance of the body to the outside of the field: distance to the
/// boundary when inside, minus the deepest excursion otherwise.
pub fn field_clearance(body: &Polygon, field: &Polygon) -> Clearance {
    if footprint_inside_field(body, field) {
        let (d, p1, p2) = boundary_gap(body, field);
        let normal = if d > 1e-12 {
            (p1 - p2) * (1.0 / d)
        } else {
            field.inward_normal(nearest_edge(field, p2))
        };
        return Clearance {
            value: d,
            body_point: p1,
            normal,
        };
    }
    let mut worst = Clearance {
        value: 0.0,
        body_point: body.vertex(0),
        normal: field.inward_normal(nearest_edge(field, body.vertex(0))),
    };
    for &v in body.vertices() {
        if !field.contains(v) {
            let q = nearest_on_boundary(field, v);
            let d = v.distance(q);
            if -d < worst.value {
                worst = Clearance {
                    value: -d,
                    body_point: v,
                    normal: (q - v) * (1.0 / d.max(1e-300)),
                };
            }
        }
    }
    for &v in field.vertices() {
        if body.contains_strictly(v) {
            let q = nearest_on_boundary(body, v);
            let d = v.distance(q);
            if -d < worst.value {
                worst = Clearance {
                    value: -d,
                    body_point: q,
                    normal: (v - q) * (1.0 / d.max(1e-300)),
                };
            }
        }
    }
    worst
}

/// Signed distance of the body to a convex obstacle.
pub fn obstacle_clearance(body: &Polygon, obstacle: &Polygon) -> Clearance {
    match sdf_convex(body, obstacle) {
        Ok(r) => Clearance {
            value: r.signed_distance,
            body_point: r.nearest_on_a,
            normal: r.normal,
        },
        Err(_) => {
            // non-convex obstacle: boundary gap, or deepest vertex overlap
            let (d, p1, p2) = boundary_gap(body, obstacle);
            let overlapping = crate::geometry::polygon_polygon_collides(body, obstacle);
            if !overlapping {
                let n = if d > 1e-12 {
                    (p1 - p2) * (1.0 / d)
                } else {
                    Point2::new(0.0, 0.0)
                };
                return Clearance {
                    value: d,
                    body_point: p1,
                    normal: n,
                };
            }
            let mut worst = Clearance {
                value: 0.0,
                body_point: p1,
                normal: Point2::new(0.0, 0.0),
            };
            for &v in body.vertices() {
                if obstacle.contains_strictly(v) {
                    let q = nearest_on_boundary(obstacle, v);
                    let d = v.distance(q);
                    if -d < worst.value {
                        worst = Clearance {
                            value: -d,
                            body_point: v,
                            normal: (q - v) * (1.0 / d),
                        };
                    }
                }
            }
            for &v in obstacle.vertices() {
                if body.contains_strictly(v) {
                    let q = nearest_on_boundary(body, v);
                    let d = v.distance(q);
                    if -d < worst.value {
                        worst = Clearance {
                            value: -d,
                            body_point: q,
                            normal: (v - q) * (1.0 / d),
                        };
                    }
                }
            }
            worst
        }
    }
}

/// Smallest clearance over the field boundary and all obstacles.
pub fn min_clearance(x: &VehicleState, field: &Polygon, obstacles: &[Polygon], params: &VehicleParams) -> Clearance {
    let body = footprint(&x.pose(), params);
    let mut best = field_clearance(&body, field);
    for o in obstacles {
        let c = obstacle_clearance(&body, o);
        if c.value < best.value {
            best = c;
        }
    }
    best
}

/// Minimum signed distance of the exact footprint to every boundary edge and
/// obstacle; positive iff collision-free.
pub fn g_eval(x: &VehicleState, field: &Polygon, obstacles: &[Polygon], params: &VehicleParams) -> f64 {
    min_clearance(x, field, obstacles, params).value
}

/// `g` with its gradient in (x, y, θ), treating the witness as fixed on the
/// body.
pub fn g_with_gradient(
    x: &VehicleState,
    field: &Polygon,
    obstacles: &[Polygon],
    params: &VehicleParams,
) -> (f64, Vector3<f64>) {
    let c = min_clearance(x, field, obstacles, params);
    let arm = c.body_point - x.position();
    let dtheta = c.normal.dot(arm.perp());
    (c.value, Vector3::new(c.normal.x, c.normal.y, dtheta))
}

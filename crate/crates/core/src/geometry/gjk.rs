//! Signed distance between convex polygons: GJK for the separated case and
//! EPA for penetration.

use super::{GeometryError, Point2, Polygon, EPS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparatorResult {
    /// Positive gap when disjoint, negated penetration depth when overlapping.
    pub signed_distance: f64,
    pub nearest_on_a: Point2,
    pub nearest_on_b: Point2,
    /// Unit normal pointing from B toward A.
    pub normal: Point2,
}

#[derive(Debug, Clone, Copy)]
struct Vertex {
    w: Point2,
    a: Point2,
    b: Point2,
}

fn support_point(poly: &Polygon, dir: Point2) -> Point2 {
    let mut best = poly.vertex(0);
    let mut best_dot = best.dot(dir);
    for &v in &poly.vertices()[1..] {
        let d = v.dot(dir);
        if d > best_dot {
            best = v;
            best_dot = d;
        }
    }
    best
}

fn support(a: &Polygon, b: &Polygon, dir: Point2) -> Vertex {
    let pa = support_point(a, dir);
    let pb = support_point(b, -dir);
    Vertex {
        w: pa - pb,
        a: pa,
        b: pb,
    }
}

/// Closest point of the Minkowski difference and its witnesses on A and B.
type Closest = (Point2, Point2, Point2);

/// Closest point to the origin on the simplex, reducing the simplex to the
/// supporting feature. Returns `None` when a triangle contains the origin.
fn reduce(simplex: &mut Vec<Vertex>) -> Option<Closest> {
    match simplex.len() {
        1 => {
            let s = simplex[0];
            Some((s.w, s.a, s.b))
        }
        2 => {
            let (p, q) = (simplex[0], simplex[1]);
            let e = q.w - p.w;
            let t = (-p.w.dot(e) / e.norm_squared()).clamp(0.0, 1.0);
            if t <= 0.0 {
                simplex.truncate(1);
            } else if t >= 1.0 {
                simplex.swap(0, 1);
                simplex.truncate(1);
            }
            Some((p.w.lerp(q.w, t), p.a.lerp(q.a, t), p.b.lerp(q.b, t)))
        }
        _ => {
            let (p, q, r) = (simplex[0], simplex[1], simplex[2]);
            let c1 = (q.w - p.w).cross(-p.w);
            let c2 = (r.w - q.w).cross(-q.w);
            let c3 = (p.w - r.w).cross(-r.w);
            if (c1 >= 0.0 && c2 >= 0.0 && c3 >= 0.0) || (c1 <= 0.0 && c2 <= 0.0 && c3 <= 0.0) {
                return None;
            }
            let mut best: Option<(f64, Vec<Vertex>, Closest)> = None;
            for pair in [[p, q], [q, r], [r, p]] {
                let mut sub = pair.to_vec();
                let res = reduce(&mut sub).expect("segments never contain the origin test");
                let d = res.0.norm_squared();
                if best.as_ref().is_none_or(|b| d < b.0) {
                    best = Some((d, sub, res));
                }
            }
            let (_, sub, res) = best.expect("three candidate edges");
            *simplex = sub;
            Some(res)
        }
    }
}

enum Gjk {
    Separated { p1: Point2, p2: Point2 },
    Overlapping(Vec<Vertex>),
}

fn gjk(a: &Polygon, b: &Polygon) -> Gjk {
    let mut dir = a.centroid() - b.centroid();
    if dir.norm_squared() < 1e-24 {
        dir = Point2::new(1.0, 0.0);
    }
    let mut simplex = vec![support(a, b, -dir)];
    let mut closest = (simplex[0].w, simplex[0].a, simplex[0].b);
    for _ in 0..64 {
        let v = closest.0;
        let vv = v.norm_squared();
        if vv <= EPS * EPS {
            return Gjk::Overlapping(simplex);
        }
        let w = support(a, b, -v);
        // no further progress toward the origin
        if vv - v.dot(w.w) <= 1e-12 * vv.max(1.0) || simplex.iter().any(|s| s.w.distance(w.w) <= 1e-14) {
            break;
        }
        simplex.push(w);
        match reduce(&mut simplex) {
            Some(c) => {
                if c.0.norm_squared() >= vv {
                    break;
                }
                closest = c;
            }
            None => return Gjk::Overlapping(simplex),
        }
    }
    Gjk::Separated {
        p1: closest.1,
        p2: closest.2,
    }
}

fn hull(mut pts: Vec<Vertex>) -> Vec<Vertex> {
    pts.sort_by(|p, q| {
        p.w.x
            .partial_cmp(&q.w.x)
            .unwrap()
            .then(p.w.y.partial_cmp(&q.w.y).unwrap())
    });
    pts.dedup_by(|p, q| p.w.distance(q.w) <= 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<Vertex> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 {
            let n = lower.len();
            if (lower[n - 1].w - lower[n - 2].w).cross(p.w - lower[n - 2].w) <= 1e-14 {
                lower.pop();
            } else {
                break;
            }
        }
        lower.push(p);
    }
    let mut upper: Vec<Vertex> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 {
            let n = upper.len();
            if (upper[n - 1].w - upper[n - 2].w).cross(p.w - upper[n - 2].w) <= 1e-14 {
                upper.pop();
            } else {
                break;
            }
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Expands an inner approximation of the Minkowski difference until the
/// boundary feature nearest the origin is found. Returns (depth, outward
/// normal, witness on A, witness on B).
fn epa(a: &Polygon, b: &Polygon, seed: Vec<Vertex>) -> (f64, Point2, Point2, Point2) {
    let mut points = seed;
    for k in 0..8 {
        let ang = k as f64 * std::f64::consts::FRAC_PI_4;
        points.push(support(a, b, Point2::from_angle(ang)));
    }
    let mut poly = hull(points);
    let mut result = (0.0, Point2::new(1.0, 0.0), a.vertex(0), b.vertex(0));
    for _ in 0..128 {
        let n = poly.len();
        let mut best = (f64::INFINITY, 0usize, Point2::ORIGIN);
        for i in 0..n {
            let (p, q) = (poly[i].w, poly[(i + 1) % n].w);
            let e = q - p;
            let normal = Point2::new(e.y, -e.x).normalized();
            let d = normal.dot(p);
            if d < best.0 {
                best = (d, i, normal);
            }
        }
        let (dist, i, normal) = best;
        let (p, q) = (poly[i], poly[(i + 1) % n]);
        let e = q.w - p.w;
        let t = (-p.w.dot(e) / e.norm_squared()).clamp(0.0, 1.0);
        result = (dist, normal, p.a.lerp(q.a, t), p.b.lerp(q.b, t));
        let s = support(a, b, normal);
        if s.w.dot(normal) - dist <= 1e-10 {
            break;
        }
        let before = poly.len();
        poly.push(s);
        poly = hull(poly);
        if poly.len() <= before && !poly.iter().any(|v| v.w.distance(s.w) <= 1e-12) {
            break;
        }
    }
    result
}

/// Signed distance between two convex polygons with witness points and the
/// separating normal.
pub fn sdf_convex(a: &Polygon, b: &Polygon) -> Result<SeparatorResult, GeometryError> {
    if !a.is_convex() || !b.is_convex() {
        return Err(GeometryError::NonConvex);
    }
    match gjk(a, b) {
        Gjk::Separated { p1, p2 } => {
            let d = p1.distance(p2);
            if d > EPS {
                return Ok(SeparatorResult {
                    signed_distance: d,
                    nearest_on_a: p1,
                    nearest_on_b: p2,
                    normal: (p1 - p2) * (1.0 / d),
                });
            }
            Ok(penetration(a, b, Vec::new()))
        }
        Gjk::Overlapping(simplex) => Ok(penetration(a, b, simplex)),
    }
}

fn penetration(a: &Polygon, b: &Polygon, seed: Vec<Vertex>) -> SeparatorResult {
    let (depth, outward, p1, p2) = epa(a, b, seed);
    let signed_distance = if depth <= EPS { 0.0 } else { -depth };
    SeparatorResult {
        signed_distance,
        nearest_on_a: p1,
        nearest_on_b: p2,
        normal: -outward,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Polygon {
        Polygon::rectangle(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn separated_unit_squares() {
        let r = sdf_convex(&rect(0.0, 0.0, 1.0, 1.0), &rect(2.0, 0.0, 3.0, 1.0)).unwrap();
        assert!((r.signed_distance - 1.0).abs() < 1e-12);
        assert!(r.normal.distance(Point2::new(-1.0, 0.0)) < 1e-12);
        assert!((r.nearest_on_a.x - 1.0).abs() < 1e-12);
        assert!((r.nearest_on_b.x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn shared_edge_is_touching() {
        let r = sdf_convex(&rect(0.0, 0.0, 1.0, 1.0), &rect(1.0, 0.0, 2.0, 1.0)).unwrap();
        assert_eq!(r.signed_distance, 0.0);
        assert!((r.normal.norm() - 1.0).abs() < 1e-12);
        assert!(r.normal.x < 0.0);
    }

    #[test]
    fn identical_squares_penetrate_by_full_width() {
        let a = rect(0.0, 0.0, 1.0, 1.0);
        let r = sdf_convex(&a, &a).unwrap();
        assert!((r.signed_distance + 1.0).abs() < 1e-9);
    }

    #[test]
    fn shallow_overlap_depth_and_direction() {
        let r = sdf_convex(&rect(0.0, 0.0, 1.0, 1.0), &rect(0.9, 0.2, 2.0, 0.8)).unwrap();
        assert!((r.signed_distance + 0.1).abs() < 1e-9);
        // pushing A along the normal separates it
        assert!(r.normal.distance(Point2::new(-1.0, 0.0)) < 1e-9);
        assert!(((r.nearest_on_a - r.nearest_on_b).norm() - 0.1).abs() < 1e-9);
    }

    #[test]
    fn rejects_non_convex() {
        let l_shape = Polygon::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(2.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 2.0),
            Point2::new(0.0, 2.0),
        ])
        .unwrap();
        assert_eq!(
            sdf_convex(&l_shape, &rect(5.0, 5.0, 6.0, 6.0)),
            Err(GeometryError::NonConvex)
        );
    }
}

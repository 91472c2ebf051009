use serde::{Deserialize, Serialize};

use super::{point_segment_distance, GeometryError, Point2, EPS};

/// Simple polygon with counter-clockwise vertex order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct Polygon {
    vertices: Vec<Point2>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

impl Polygon {
    /// Builds a polygon, rejecting degenerate or self-intersecting input and
    /// reordering clockwise input to counter-clockwise.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if vertices.len() > 1 && vertices[0].distance(vertices[vertices.len() - 1]) <= EPS {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewPoints {
                needed: 3,
                got: vertices.len(),
            });
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i].distance(vertices[(i + 1) % n]) <= EPS {
                return Err(GeometryError::DuplicatePoint(i, (i + 1) % n));
            }
        }
        let area = signed_area(&vertices);
        if area.abs() <= EPS {
            return Err(GeometryError::Degenerate);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let poly = Polygon { vertices };
        if !poly.is_simple() {
            return Err(GeometryError::SelfIntersecting);
        }
        Ok(poly)
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Polygon::new(vec![
            Point2::new(x0, y0),
            Point2::new(x1, y0),
            Point2::new(x1, y1),
            Point2::new(x0, y1),
        ])
    }

    /// Skips validation; callers guarantee a simple CCW ring.
    pub(crate) fn from_ccw_unchecked(vertices: Vec<Point2>) -> Self {
        debug_assert!(signed_area(&vertices) > 0.0);
        Polygon { vertices }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i % self.vertices.len()]
    }

    /// Edge `i` runs from vertex `i` to vertex `i + 1`.
    pub fn edge(&self, i: usize) -> (Point2, Point2) {
        (self.vertex(i), self.vertex(i + 1))
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        (0..self.len()).map(move |i| self.edge(i))
    }

    /// Unit normal of edge `i` pointing into the polygon.
    pub fn inward_normal(&self, i: usize) -> Point2 {
        let (a, b) = self.edge(i);
        (b - a).perp().normalized()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point2 {
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut a2 = 0.0;
        for (p, q) in self.edges() {
            let c = p.cross(q);
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
            a2 += c;
        }
        Point2::new(cx / (3.0 * a2), cy / (3.0 * a2))
    }

    pub fn is_convex(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            let a = self.vertex(i);
            let b = self.vertex(i + 1);
            let c = self.vertex(i + 2);
            (b - a).cross(c - b) >= -EPS * (b - a).norm().max(1.0)
        })
    }

    /// Interior angle at vertex `i` is larger than π.
    pub fn is_reflex(&self, i: usize) -> bool {
        let n = self.len();
        let prev = self.vertex(i + n - 1);
        let cur = self.vertex(i);
        let next = self.vertex(i + 1);
        (cur - prev).cross(next - cur) < -EPS
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for p in &self.vertices[1..] {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// Smallest circle around the centroid containing every vertex.
    pub fn bounding_circle(&self) -> (Point2, f64) {
        let c = self.centroid();
        let r = self.vertices.iter().map(|p| p.distance(c)).fold(0.0, f64::max);
        (c, r)
    }

    pub fn locate(&self, p: Point2) -> Location {
        if self.edges().any(|(a, b)| point_segment_distance(p, a, b) <= EPS) {
            return Location::Boundary;
        }
        // crossing number
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if x > p.x {
                    inside = !inside;
                }
            }
        }
        if inside {
            Location::Inside
        } else {
            Location::Outside
        }
    }

    /// Inside or on the boundary.
    pub fn contains(&self, p: Point2) -> bool {
        self.locate(p) != Location::Outside
    }

    pub fn contains_strictly(&self, p: Point2) -> bool {
        self.locate(p) == Location::Inside
    }

    /// Distance from `p` to the polygon boundary.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn translated(&self, by: Point2) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|&p| p + by).collect(),
        }
    }

    /// Rigid rotation about the origin.
    pub fn rotated(&self, theta: f64) -> Polygon {
        Polygon {
            vertices: self.vertices.iter().map(|p| p.rotated(theta)).collect(),
        }
    }

    /// Moves edge `index` along its normal by `offset` (positive = outward)
    /// while every other edge stays on its original supporting line.
    pub fn offset_edge(&self, index: usize, offset: f64) -> Result<Polygon, GeometryError> {
        let n = self.len();
        if index >= n {
            return Err(GeometryError::EdgeOutOfRange { index, len: n });
        }
        if offset == 0.0 {
            return Ok(self.clone());
        }
        let (a, b) = self.edge(index);
        let dir = b - a;
        let outward = -(dir.perp().normalized());
        let shift = outward * offset;
        let (na, nb) = (a + shift, b + shift);
        let prev = self.edge(index + n - 1);
        let next = self.edge(index + 1);
        let new_a = line_intersection(prev.0, prev.1, na, nb).ok_or(GeometryError::Collapse)?;
        let new_b = line_intersection(next.0, next.1, na, nb).ok_or(GeometryError::Collapse)?;
        let mut vertices = self.vertices.clone();
        vertices[index] = new_a;
        vertices[(index + 1) % n] = new_b;
        let poly = Polygon { vertices };
        if poly.area() <= EPS || !poly.is_simple() {
            return Err(GeometryError::Collapse);
        }
        // an edge that flipped direction means the offset swallowed a neighbour
        for i in 0..n {
            let (p, q) = poly.edge(i);
            let (op, oq) = self.edge(i);
            if (q - p).dot(oq - op) <= 0.0 {
                return Err(GeometryError::Collapse);
            }
        }
        Ok(poly)
    }

    fn is_simple(&self) -> bool {
        let n = self.len();
        for i in 0..n {
            let (a, b) = self.edge(i);
            for j in (i + 1)..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (c, d) = self.edge(j);
                if adjacent {
                    // adjacent edges may only share their common vertex
                    let shared = if j == i + 1 { b } else { a };
                    let other_i = if j == i + 1 { a } else { b };
                    let other_j = if j == i + 1 { d } else { c };
                    if point_segment_distance(other_j, a, b) <= EPS && other_j.distance(shared) > EPS
                        || point_segment_distance(other_i, c, d) <= EPS && other_i.distance(shared) > EPS
                    {
                        return false;
                    }
                } else if segments_touch(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }
}

impl TryFrom<Vec<Point2>> for Polygon {
    type Error = GeometryError;
    fn try_from(v: Vec<Point2>) -> Result<Self, Self::Error> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point2> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    0.5 * (0..n).map(|i| vertices[i].cross(vertices[(i + 1) % n])).sum::<f64>()
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn line_intersection(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> Option<Point2> {
    let r = p2 - p1;
    let s = q2 - q1;
    let denom = r.cross(s);
    if denom.abs() <= 1e-12 * r.norm() * s.norm() {
        return None;
    }
    let t = (q1 - p1).cross(s) / denom;
    Some(p1 + r * t)
}

/// Segments cross at a single point interior to both.
pub fn segments_properly_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let scale_ab = (b - a).norm().max(1.0);
    let scale_cd = (d - c).norm().max(1.0);
    let o1 = orient(a, b, c) / scale_ab;
    let o2 = orient(a, b, d) / scale_ab;
    let o3 = orient(c, d, a) / scale_cd;
    let o4 = orient(c, d, b) / scale_cd;
    ((o1 > EPS && o2 < -EPS) || (o1 < -EPS && o2 > EPS)) && ((o3 > EPS && o4 < -EPS) || (o3 < -EPS && o4 > EPS))
}

/// Segments share at least one point (within tolerance).
fn segments_touch(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    segments_properly_intersect(a, b, c, d)
        || point_segment_distance(a, c, d) <= EPS
        || point_segment_distance(b, c, d) <= EPS
        || point_segment_distance(c, a, b) <= EPS
        || point_segment_distance(d, a, b) <= EPS
}

/// The closed segment `a`–`b` meets the closed polygon.
pub fn segment_intersects_polygon(a: Point2, b: Point2, poly: &Polygon) -> bool {
    if poly.contains(a) || poly.contains(b) {
        return true;
    }
    poly.edges().any(|(c, d)| segments_touch(a, b, c, d))
}

/// Interiors intersect, or one polygon contains the other. Boundary contact
/// alone is not a collision.
pub fn polygon_polygon_collides(a: &Polygon, b: &Polygon) -> bool {
    let (alo, ahi) = a.bounding_box();
    let (blo, bhi) = b.bounding_box();
    if alo.x > bhi.x + EPS || blo.x > ahi.x + EPS || alo.y > bhi.y + EPS || blo.y > ahi.y + EPS {
        return false;
    }
    for (p, q) in a.edges() {
        for (r, s) in b.edges() {
            if segments_properly_intersect(p, q, r, s) {
                return true;
            }
        }
    }
    if a.vertices().iter().any(|&v| b.contains_strictly(v)) || b.vertices().iter().any(|&v| a.contains_strictly(v)) {
        return true;
    }
    // overlapping collinear boundaries: probe just inside each edge midpoint
    let probe = |p: &Polygon, other: &Polygon| {
        (0..p.len()).any(|i| {
            let (s, e) = p.edge(i);
            let m = s.lerp(e, 0.5) + p.inward_normal(i) * 1e-7;
            other.contains_strictly(m)
        })
    };
    probe(a, b) || probe(b, a)
}

/// Separating-axis overlap test for convex polygons; touching is not overlap.
pub fn convex_overlap(a: &Polygon, b: &Polygon) -> bool {
    let axes = (0..a.len())
        .map(|i| a.inward_normal(i))
        .chain((0..b.len()).map(|i| b.inward_normal(i)));
    for axis in axes {
        let (amin, amax) = project(a, axis);
        let (bmin, bmax) = project(b, axis);
        if amax <= bmin + EPS || bmax <= amin + EPS {
            return false;
        }
    }
    true
}

fn project(p: &Polygon, axis: Point2) -> (f64, f64) {
    p.vertices()
        .iter()
        .map(|v| v.dot(axis))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)))
}

/// Every footprint vertex lies in the field (boundary contact allowed) and no
/// footprint edge crosses a field edge.
pub fn footprint_inside_field(fp: &Polygon, field: &Polygon) -> bool {
    if fp.vertices().iter().any(|&v| !field.contains(v)) {
        return false;
    }
    for (p, q) in fp.edges() {
        if !field.contains(p.lerp(q, 0.5)) {
            return false;
        }
        for (r, s) in field.edges() {
            if segments_properly_intersect(p, q, r, s) {
                return false;
            }
        }
    }
    !field.vertices().iter().any(|&v| fp.contains_strictly(v))
}

/// Pushes edge `edge_index` outward by `width`; the other edges keep their
/// supporting lines.
pub fn inflate_edge(poly: &Polygon, edge_index: usize, width: f64) -> Result<Polygon, GeometryError> {
    if !(width >= 0.0) {
        return Err(GeometryError::Collapse);
    }
    poly.offset_edge(edge_index, width)
}

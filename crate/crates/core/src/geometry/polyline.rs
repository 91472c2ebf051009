use serde::{Deserialize, Serialize};

use super::{closest_point_on_segment, wrap_to_2pi, GeometryError, Point2, EPS};

/// Ordered open chain of at least two distinct consecutive points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2>", into = "Vec<Point2>")]
pub struct Polyline {
    points: Vec<Point2>,
    cumulative: Vec<f64>,
}

/// Nearest point on a polyline to a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub point: Point2,
    pub distance: f64,
    pub segment: usize,
    /// Arc length from the first vertex to `point`.
    pub arc_length: f64,
}

impl Polyline {
    pub fn new(points: Vec<Point2>) -> Result<Self, GeometryError> {
        if points.len() < 2 {
            return Err(GeometryError::TooFewPoints {
                needed: 2,
                got: points.len(),
            });
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let mut cumulative = Vec::with_capacity(points.len());
        cumulative.push(0.0);
        for i in 1..points.len() {
            let d = points[i].distance(points[i - 1]);
            if d <= EPS {
                return Err(GeometryError::DuplicatePoint(i - 1, i));
            }
            cumulative.push(cumulative[i - 1] + d);
        }
        Ok(Polyline { points, cumulative })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn first(&self) -> Point2 {
        self.points[0]
    }

    pub fn last(&self) -> Point2 {
        self.points[self.points.len() - 1]
    }

    pub fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    pub fn segment(&self, j: usize) -> (Point2, Point2) {
        (self.points[j], self.points[j + 1])
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    /// Direction of segment `j` in `[0, 2π)`.
    pub fn orientation(&self, j: usize) -> f64 {
        let d = self.points[j + 1] - self.points[j];
        wrap_to_2pi(d.y.atan2(d.x))
    }

    pub fn start_heading(&self) -> f64 {
        self.orientation(0)
    }

    pub fn end_heading(&self) -> f64 {
        self.orientation(self.segment_count() - 1)
    }

    pub fn length(&self) -> f64 {
        self.cumulative[self.cumulative.len() - 1]
    }

    /// Arc length at each vertex.
    pub fn cumulative_lengths(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn distance(&self, z: Point2) -> f64 {
        let mut best = f64::INFINITY;
        for (a, b) in self.segments() {
            let d2 = (closest_point_on_segment(z, a, b).0 - z).norm_squared();
            if d2 < best {
                best = d2;
            }
        }
        best.sqrt()
    }

    /// Nearest point; ties go to the earliest segment.
    pub fn project(&self, z: Point2) -> Projection {
        let mut best = Projection {
            point: self.points[0],
            distance: f64::INFINITY,
            segment: 0,
            arc_length: 0.0,
        };
        for (j, (a, b)) in self.segments().enumerate() {
            let (p, t) = closest_point_on_segment(z, a, b);
            let d = p.distance(z);
            if d < best.distance {
                best = Projection {
                    point: p,
                    distance: d,
                    segment: j,
                    arc_length: self.cumulative[j] + t * (self.cumulative[j + 1] - self.cumulative[j]),
                };
            }
        }
        best
    }

    /// Nearest point among the stretch between arc lengths `lo` and `hi`.
    pub fn project_within(&self, z: Point2, lo: f64, hi: f64) -> Projection {
        let lo = lo.clamp(0.0, self.length());
        let hi = hi.clamp(lo, self.length());
        let mut best = Projection {
            point: self.point_at(lo),
            distance: f64::INFINITY,
            segment: self.segment_at(lo),
            arc_length: lo,
        };
        for j in 0..self.segment_count() {
            let (c0, c1) = (self.cumulative[j], self.cumulative[j + 1]);
            let (s0, s1) = (c0.max(lo), c1.min(hi));
            if s1 < s0 {
                continue;
            }
            let a = self.point_at(s0);
            let b = self.point_at(s1);
            let (p, t) = closest_point_on_segment(z, a, b);
            let d = p.distance(z);
            if d < best.distance {
                best = Projection {
                    point: p,
                    distance: d,
                    segment: j,
                    arc_length: s0 + t * (s1 - s0),
                };
            }
        }
        best
    }

    /// Point at arc length `s`, clamped to the ends.
    pub fn point_at(&self, s: f64) -> Point2 {
        let s = s.clamp(0.0, self.length());
        let j = self.segment_at(s);
        let (a, b) = self.segment(j);
        let seg_len = self.cumulative[j + 1] - self.cumulative[j];
        a.lerp(b, (s - self.cumulative[j]) / seg_len)
    }

    /// Index of the segment containing arc length `s`.
    pub fn segment_at(&self, s: f64) -> usize {
        let n = self.segment_count();
        match self
            .cumulative
            .binary_search_by(|c| c.partial_cmp(&s).unwrap_or(std::cmp::Ordering::Less))
        {
            Ok(i) => i.min(n - 1),
            Err(i) => (i.max(1) - 1).min(n - 1),
        }
    }

    /// Vertex-preserving piece between arc lengths `s0 < s1`.
    pub fn slice(&self, s0: f64, s1: f64) -> Result<Polyline, GeometryError> {
        let mut pts = vec![self.point_at(s0)];
        for (i, &c) in self.cumulative.iter().enumerate() {
            if c > s0 + EPS && c < s1 - EPS {
                pts.push(self.points[i]);
            }
        }
        let end = self.point_at(s1);
        if end.distance(pts[pts.len() - 1]) > EPS {
            pts.push(end);
        }
        Polyline::new(pts)
    }

    /// Same geometry with the vertex order reversed.
    pub fn reversed(&self) -> Polyline {
        let mut pts = self.points.clone();
        pts.reverse();
        Polyline::new(pts).expect("reversal keeps consecutive points distinct")
    }
}

impl TryFrom<Vec<Point2>> for Polyline {
    type Error = GeometryError;
    fn try_from(v: Vec<Point2>) -> Result<Self, Self::Error> {
        Polyline::new(v)
    }
}

impl From<Polyline> for Vec<Point2> {
    fn from(p: Polyline) -> Self {
        p.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::point_segment_distance;

    fn pl(pts: &[(f64, f64)]) -> Polyline {
        Polyline::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn distance_examples() {
        let r = pl(&[(0.0, 0.0), (2.0, 0.0)]);
        assert_eq!(r.distance(Point2::new(0.0, 1.0)), 1.0);
        assert_eq!(r.distance(Point2::new(2.0, 0.0)), 0.0);
    }

    #[test]
    fn distance_against_dense_sampling() {
        let r = pl(&[(0.0, 0.0), (2.0, 0.0), (2.0, 4.0)]);
        let queries = [Point2::new(2.0, 2.0), Point2::new(0.7, 1.3), Point2::new(-1.0, 5.0)];
        for z in queries {
            let mut brute = f64::INFINITY;
            for (a, b) in r.segments() {
                for k in 0..=10_000 {
                    brute = brute.min(z.distance(a.lerp(b, k as f64 / 10_000.0)));
                }
            }
            assert!((r.distance(z) - brute).abs() < 1e-3, "{z:?}");
        }
        assert_eq!(r.distance(Point2::new(2.0, 2.0)), 0.0);
    }

    #[test]
    fn projection_arc_length() {
        let r = pl(&[(0.0, 0.0), (2.0, 0.0), (2.0, 4.0)]);
        assert_eq!(r.project(r.first()).arc_length, 0.0);
        assert_eq!(r.project(r.last()).arc_length, r.length());
        let p = r.project(Point2::new(3.0, 1.0));
        assert!((p.arc_length - 3.0).abs() < 1e-12);
        // sampling oracle for an off-path query
        let z = Point2::new(0.5, -2.0);
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=60_000 {
            let s = r.length() * k as f64 / 60_000.0;
            let d = r.point_at(s).distance(z);
            if d < best.0 {
                best = (d, s);
            }
        }
        assert!((r.project(z).arc_length - best.1).abs() < 1e-3);
    }

    #[test]
    fn orientations_in_range() {
        let r = pl(&[(0.0, 0.0), (0.0, -1.0), (-1.0, -1.0)]);
        assert!((r.orientation(0) - 1.5 * std::f64::consts::PI).abs() < 1e-12);
        assert!((r.orientation(1) - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn rejects_repeated_points() {
        assert!(Polyline::new(vec![Point2::new(1.0, 1.0), Point2::new(1.0, 1.0)]).is_err());
        assert!(Polyline::new(vec![Point2::new(1.0, 1.0)]).is_err());
    }

    #[test]
    fn slice_keeps_interior_vertices() {
        let r = pl(&[(0.0, 0.0), (2.0, 0.0), (2.0, 4.0)]);
        let s = r.slice(1.0, 4.0).unwrap();
        assert_eq!(
            s.points(),
            &[Point2::new(1.0, 0.0), Point2::new(2.0, 0.0), Point2::new(2.0, 2.0)]
        );
    }

    #[test]
    fn distance_bounded_by_each_segment() {
        let r = pl(&[(0.0, 0.0), (3.0, 1.0), (5.0, -2.0), (6.0, 4.0)]);
        for k in 0..50 {
            let z = Point2::new(k as f64 * 0.17 - 1.0, (k as f64 * 0.7).sin() * 4.0);
            let d = r.distance(z);
            for (a, b) in r.segments() {
                assert!(d <= point_segment_distance(z, a, b) + 1e-15);
            }
        }
    }
}

//! Clamped B-spline smoothing of a reference polyline, used as the comparison
//! smoother. No curvature or collision handling.

use crate::geometry::{Point2, Polyline};
use crate::planner::{Trajectory, TrajectoryPoint};
use crate::vehicle::{Direction, VehicleState};

pub const DEFAULT_SAMPLES_PER_SPAN: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct BSplineCurve {
    degree: usize,
    control_points: Vec<Point2>,
    knots: Vec<f64>,
}

impl BSplineCurve {
    /// Clamped uniform B-spline. The degree drops below `degree` when there
    /// are too few control points.
    pub fn clamped(control_points: Vec<Point2>, degree: usize) -> BSplineCurve {
        assert!(control_points.len() >= 2, "need at least two control points");
        let n = control_points.len();
        let p = degree.min(n - 1).max(1);
        let spans = n - p;
        let mut knots = vec![0.0; p + 1];
        knots.extend((1..spans).map(|i| i as f64 / spans as f64));
        knots.extend(std::iter::repeat_n(1.0, p + 1));
        BSplineCurve {
            degree: p,
            control_points,
            knots,
        }
    }

    /// Cubic curve over the vertices of `r` with every segment midpoint
    /// inserted as an extra control point.
    pub fn from_reference(r: &Polyline) -> BSplineCurve {
        let pts = r.points();
        let mut ctrl = Vec::with_capacity(2 * pts.len() - 1);
        for w in pts.windows(2) {
            ctrl.push(w[0]);
            ctrl.push(w[0].lerp(w[1], 0.5));
        }
        ctrl.push(pts[pts.len() - 1]);
        BSplineCurve::clamped(ctrl, 3)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn control_points(&self) -> &[Point2] {
        &self.control_points
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of non-empty knot spans.
    pub fn span_count(&self) -> usize {
        self.control_points.len() - self.degree
    }

    fn find_span(&self, u: f64) -> usize {
        let n = self.control_points.len() - 1;
        if u >= self.knots[n + 1] {
            return n;
        }
        let mut lo = self.degree;
        let mut hi = n + 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if u < self.knots[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo
    }

    /// Nonzero basis functions at `u` and their derivatives up to order 2;
    /// `out[k][j]` is the k-th derivative of N_{span−p+j}.
    #[allow(clippy::needless_range_loop)]
    fn basis_derivs(&self, span: usize, u: f64) -> [Vec<f64>; 3] {
        let p = self.degree;
        let k = &self.knots;
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = u - k[span + 1 - j];
            right[j] = k[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }
        let mut ders = [vec![0.0; p + 1], vec![0.0; p + 1], vec![0.0; p + 1]];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let nd = 2.min(p);
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for kk in 1..=nd {
                let mut d = 0.0;
                let rk = r as isize - kk as isize;
                let pk = p - kk;
                if r >= kk {
                    let rk = rk as usize;
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                    d = a[s2][0] * ndu[rk][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize - 1) <= pk as isize { kk - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][kk] = -a[s1][kk - 1] / ndu[pk + 1][r];
                    d += a[s2][kk] * ndu[r][pk];
                }
                ders[kk][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut fac = p as f64;
        for kk in 1..=nd {
            for v in ders[kk].iter_mut() {
                *v *= fac;
            }
            fac *= (p - kk) as f64;
        }
        ders
    }

    /// Position and first two derivatives at parameter `u ∈ [0, 1]`.
    pub fn eval_derivs(&self, u: f64) -> [Point2; 3] {
        let u = u.clamp(0.0, 1.0);
        let span = self.find_span(u);
        let ders = self.basis_derivs(span, u);
        let mut out = [Point2::new(0.0, 0.0); 3];
        for (k, row) in ders.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                out[k] += self.control_points[span - self.degree + j] * *w;
            }
        }
        out
    }

    pub fn point(&self, u: f64) -> Point2 {
        self.eval_derivs(u)[0]
    }

    /// Signed curvature from the first and second derivatives.
    pub fn curvature(&self, u: f64) -> f64 {
        let [_, d1, d2] = self.eval_derivs(u);
        let speed = d1.norm();
        if speed < 1e-12 {
            return 0.0;
        }
        d1.cross(d2) / speed.powi(3)
    }

    pub fn heading(&self, u: f64) -> f64 {
        let d1 = self.eval_derivs(u)[1];
        d1.y.atan2(d1.x)
    }

    fn state_at(&self, u: f64, v_ref: f64) -> TrajectoryPoint {
        let p = self.point(u);
        TrajectoryPoint {
            state: VehicleState::new(p.x, p.y, self.heading(u), v_ref),
            curvature: self.curvature(u),
            direction: Direction::Forward,
        }
    }

    /// `samples_per_span` uniform parameter steps per knot span.
    pub fn sample_uniform(&self, samples_per_span: usize, v_ref: f64, dt: f64) -> Trajectory {
        let n = (self.span_count() * samples_per_span.max(1)).max(1);
        Trajectory {
            dt,
            points: (0..=n).map(|i| self.state_at(i as f64 / n as f64, v_ref)).collect(),
        }
    }

    /// Resampled at equal arc-length steps of about `spacing`, for tracking
    /// at constant speed.
    pub fn sample_by_arc_length(&self, spacing: f64, v_ref: f64, dt: f64) -> Trajectory {
        let dense = 200 * self.span_count().max(1);
        let us: Vec<f64> = (0..=dense).map(|i| i as f64 / dense as f64).collect();
        let mut s = vec![0.0; us.len()];
        let mut prev = self.point(0.0);
        for i in 1..us.len() {
            let p = self.point(us[i]);
            s[i] = s[i - 1] + p.distance(prev);
            prev = p;
        }
        let total = s[s.len() - 1];
        let n = (total / spacing).ceil().max(1.0) as usize;
        let mut points = Vec::with_capacity(n + 1);
        let mut j = 0;
        for i in 0..=n {
            let target = total * i as f64 / n as f64;
            while j + 2 < s.len() && s[j + 1] < target {
                j += 1;
            }
            let span = (s[j + 1] - s[j]).max(1e-15);
            let t = ((target - s[j]) / span).clamp(0.0, 1.0);
            points.push(self.state_at(us[j] + t * (us[j + 1] - us[j]), v_ref));
        }
        Trajectory { dt, points }
    }
}

/// Parameter-uniform samples of the midpoint-augmented cubic B-spline of `r`.
pub fn bspline_smooth(r: &Polyline, samples_per_span: usize, v_ref: f64, dt: f64) -> Trajectory {
    BSplineCurve::from_reference(r).sample_uniform(samples_per_span, v_ref, dt)
}

/// Fraction of states whose curvature magnitude exceeds `c_max`.
pub fn curvature_violation_ratio(traj: &Trajectory, c_max: f64) -> f64 {
    if traj.is_empty() {
        return 0.0;
    }
    let over = traj.points.iter().filter(|p| p.curvature.abs() > c_max).count();
    over as f64 / traj.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(pts: &[(f64, f64)]) -> Polyline {
        Polyline::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    #[test]
    fn basis_partition_of_unity() {
        let c = BSplineCurve::from_reference(&line(&[(0.0, 0.0), (5.0, 3.0), (9.0, -1.0), (12.0, 4.0)]));
        for i in 0..=50 {
            let u = i as f64 / 50.0;
            let span = c.find_span(u);
            let d = c.basis_derivs(span, u);
            assert!((d[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d[1].iter().sum::<f64>().abs() < 1e-9);
            assert!(d[2].iter().sum::<f64>().abs() < 1e-9);
        }
    }

    #[test]
    fn derivatives_match_differences() {
        let c = BSplineCurve::from_reference(&line(&[(0.0, 0.0), (5.0, 3.0), (9.0, -1.0), (12.0, 4.0)]));
        let h = 1e-6;
        for i in 1..40 {
            let u = i as f64 / 40.0 + 0.003;
            let [_, d1, d2] = c.eval_derivs(u);
            let fd1 = (c.point(u + h) - c.point(u - h)) * (0.5 / h);
            let fd2 = (c.eval_derivs(u + h)[1] - c.eval_derivs(u - h)[1]) * (0.5 / h);
            assert!((d1 - fd1).norm() < 1e-5, "{u}");
            assert!((d2 - fd2).norm() < 1e-3 * d2.norm().max(1.0), "{u}");
        }
    }

    #[test]
    fn two_point_reference_degrades_degree() {
        let c = BSplineCurve::from_reference(&line(&[(0.0, 0.0), (4.0, 0.0)]));
        assert_eq!(c.degree(), 2);
        assert_eq!(c.point(1.0), Point2::new(4.0, 0.0));
    }
}

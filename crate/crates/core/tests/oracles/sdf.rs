//! Signed distance of convex polygons from their boundaries alone.

use super::deviation::seg_dist;

fn ring(p: &[[f64; 2]]) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
    (0..p.len()).map(move |i| (p[i], p[(i + 1) % p.len()]))
}

fn inside(q: [f64; 2], p: &[[f64; 2]]) -> bool {
    // counter-clockwise convex ring
    ring(p).all(|(a, b)| (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) >= 0.0)
}

fn edges_cross(a: &[[f64; 2]], b: &[[f64; 2]]) -> bool {
    let orient = |p: [f64; 2], q: [f64; 2], r: [f64; 2]| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    ring(a).any(|(p, q)| {
        ring(b).any(|(r, s)| orient(p, q, r) * orient(p, q, s) < 0.0 && orient(r, s, p) * orient(r, s, q) < 0.0)
    })
}

/// Gap between disjoint rings (nearest vertex-edge pair), or minus the
/// smallest projection overlap over all edge normals when they meet.
pub fn signed_distance(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let overlap = a.iter().any(|v| inside(*v, b)) || b.iter().any(|v| inside(*v, a)) || edges_cross(a, b);
    if !overlap {
        let one = |p: &[[f64; 2]], q: &[[f64; 2]]| {
            p.iter()
                .flat_map(|v| ring(q).map(move |(s, t)| seg_dist(*v, s, t)))
                .fold(f64::INFINITY, f64::min)
        };
        return one(a, b).min(one(b, a));
    }
    let mut depth = f64::INFINITY;
    for (s, t) in ring(a).chain(ring(b)) {
        let (nx, ny) = (t[1] - s[1], s[0] - t[0]);
        let len = nx.hypot(ny);
        let proj = |p: &[[f64; 2]]| {
            p.iter()
                .map(|v| (v[0] * nx + v[1] * ny) / len)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
        };
        let ((a0, a1), (b0, b1)) = (proj(a), proj(b));
        depth = depth.min((a1 - b0).min(b1 - a0));
    }
    -depth
}

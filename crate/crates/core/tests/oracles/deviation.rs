//! Direct evaluations of reference deviation, independent of the library's
//! polyline code.

pub fn seg_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let t = if l2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0)
    };
    let (qx, qy) = (a[0] + t * dx, a[1] + t * dy);
    ((p[0] - qx).powi(2) + (p[1] - qy).powi(2)).sqrt()
}

pub fn dist_to_ref(p: [f64; 2], r: &[[f64; 2]]) -> f64 {
    r.windows(2)
        .map(|w| seg_dist(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Σ dis(z_i, R)·‖z_i − z_{i−1}‖ over consecutive samples.
pub fn deviation_sum(z: &[[f64; 2]], r: &[[f64; 2]]) -> f64 {
    z.windows(2)
        .map(|w| dist_to_ref(w[1], r) * ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
        .sum()
}

pub fn path_length(z: &[[f64; 2]]) -> f64 {
    z.windows(2)
        .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
        .sum()
}

/// Length-weighted mean distance to the reference.
pub fn average_deviation(z: &[[f64; 2]], r: &[[f64; 2]]) -> f64 {
    deviation_sum(z, r) / path_length(z)
}

/// Arc length of the nearest of `n` uniform samples along `r`.
pub fn sampled_progress(p: [f64; 2], r: &[[f64; 2]], n: usize) -> f64 {
    let total = path_length(r);
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=n {
        let s = total * i as f64 / n as f64;
        let q = point_at(r, s);
        let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        if d < best.0 {
            best = (d, s);
        }
    }
    best.1
}

pub fn point_at(r: &[[f64; 2]], s: f64) -> [f64; 2] {
    let mut acc = 0.0;
    for w in r.windows(2) {
        let l = ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt();
        if acc + l >= s {
            let t = ((s - acc) / l).clamp(0.0, 1.0);
            return [w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])];
        }
        acc += l;
    }
    r[r.len() - 1]
}

//! Reeds-Shepp lengths by brute force: every word of the 48-word family is
//! solved numerically (Newton from a grid of starts) and the shortest valid
//! solution wins. Shares nothing with the closed-form solver.

use std::f64::consts::{FRAC_PI_2, PI};

#[derive(Clone, Copy, PartialEq)]
enum Turn {
    L,
    S,
    R,
}

#[derive(Clone, Copy)]
enum Len {
    /// Free magnitude number k.
    Free(usize),
    Fixed(f64),
}

#[derive(Clone)]
struct Word {
    turns: Vec<Turn>,
    gears: Vec<f64>,
    lens: Vec<Len>,
}

fn parse(pattern: &str, lens: &[Len]) -> Word {
    let mut turns = Vec::new();
    let mut gears = Vec::new();
    let chars: Vec<char> = pattern.chars().collect();
    for pair in chars.chunks(2) {
        turns.push(match pair[0] {
            'L' => Turn::L,
            'R' => Turn::R,
            _ => Turn::S,
        });
        gears.push(if pair[1] == '+' { 1.0 } else { -1.0 });
    }
    Word {
        turns,
        gears,
        lens: lens.to_vec(),
    }
}

fn all_words() -> Vec<Word> {
    use Len::{Fixed, Free};
    let h = FRAC_PI_2;
    let base = vec![
        parse("L+R-L+", &[Free(0), Free(1), Free(2)]),
        parse("L+R+L-", &[Free(0), Free(1), Free(2)]),
        parse("L+R-L-", &[Free(0), Free(1), Free(2)]),
        parse("L+S+L+", &[Free(0), Free(1), Free(2)]),
        parse("L+S+R+", &[Free(0), Free(1), Free(2)]),
        parse("L+R+L-R-", &[Free(0), Free(1), Free(1), Free(2)]),
        parse("L+R-L-R+", &[Free(0), Free(1), Free(1), Free(2)]),
        parse("L+R-S-L-", &[Free(0), Fixed(h), Free(1), Free(2)]),
        parse("L+R-S-R-", &[Free(0), Fixed(h), Free(1), Free(2)]),
        parse("L+S+R+L-", &[Free(0), Free(1), Fixed(h), Free(2)]),
        parse("L+S+L+R-", &[Free(0), Free(1), Fixed(h), Free(2)]),
        parse("L+R-S-L-R+", &[Free(0), Fixed(h), Free(1), Fixed(h), Free(2)]),
    ];
    let mut out = Vec::new();
    for w in base {
        for reflect in [false, true] {
            for flip in [false, true] {
                let mut v = w.clone();
                if reflect {
                    for t in &mut v.turns {
                        *t = match *t {
                            Turn::L => Turn::R,
                            Turn::R => Turn::L,
                            Turn::S => Turn::S,
                        };
                    }
                }
                if flip {
                    for g in &mut v.gears {
                        *g = -*g;
                    }
                }
                out.push(v);
            }
        }
    }
    out
}

/// Replays the word with magnitudes `m`; returns end pose and, for each free
/// variable, d(end)/d(m_k).
fn evaluate(w: &Word, m: &[f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut x = 0.0;
    let mut y = 0.0;
    let mut th: f64 = 0.0;
    // (point, heading, curvature, gear, free index) at each segment end
    let mut marks = Vec::with_capacity(w.turns.len());
    for i in 0..w.turns.len() {
        let (mag, free) = match w.lens[i] {
            Len::Free(k) => (m[k], Some(k)),
            Len::Fixed(v) => (v, None),
        };
        let s = w.gears[i] * mag;
        let k = match w.turns[i] {
            Turn::L => 1.0,
            Turn::R => -1.0,
            Turn::S => 0.0,
        };
        if k == 0.0 {
            x += s * th.cos();
            y += s * th.sin();
        } else {
            let th1 = th + k * s;
            x += (th1.sin() - th.sin()) / k;
            y += (th.cos() - th1.cos()) / k;
            th = th1;
        }
        marks.push((x, y, th, k, w.gears[i], free));
    }
    let mut jac = [[0.0; 3]; 3];
    for &(px, py, pth, k, g, free) in &marks {
        if let Some(j) = free {
            // lengthening a segment moves its end along the tangent and swings
            // the rest of the path about that end
            let dx = pth.cos() - k * (y - py);
            let dy = pth.sin() + k * (x - px);
            jac[0][j] += g * dx;
            jac[1][j] += g * dy;
            jac[2][j] += g * k;
        }
    }
    ([x, y, th], jac)
}

fn wrap(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if det.abs() < 1e-14 {
        return None;
    }
    let mut out = [0.0; 3];
    for c in 0..3 {
        let mut m = a;
        for r in 0..3 {
            m[r][c] = b[r];
        }
        out[c] = (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]))
            / det;
    }
    Some(out)
}

fn newton(w: &Word, goal: [f64; 3], mut m: [f64; 3]) -> Option<[f64; 3]> {
    for _ in 0..60 {
        let (end, jac) = evaluate(w, &m);
        let r = [end[0] - goal[0], end[1] - goal[1], wrap(end[2] - goal[2])];
        let norm = r.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if norm < 1e-13 {
            return Some(m);
        }
        let step = solve3(jac, r)?;
        let big = step.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let scale = if big > 1.0 { 1.0 / big } else { 1.0 };
        for k in 0..3 {
            m[k] -= scale * step[k];
        }
        if m.iter().any(|v| !v.is_finite() || v.abs() > 1e3) {
            return None;
        }
    }
    let (end, _) = evaluate(w, &m);
    let r = [end[0] - goal[0], end[1] - goal[1], wrap(end[2] - goal[2])];
    (r.iter().map(|v| v.abs()).fold(0.0, f64::max) < 1e-11).then_some(m)
}

fn word_length(w: &Word, m: &[f64; 3]) -> f64 {
    w.lens
        .iter()
        .map(|l| match l {
            Len::Free(k) => m[*k],
            Len::Fixed(v) => *v,
        })
        .sum()
}

/// Shortest RS length, unit turning radius, start at the origin facing +x.
pub fn brute_force_length(goal: [f64; 3]) -> f64 {
    let words = all_words();
    let d = goal[0].hypot(goal[1]);
    let arc_seeds = [0.15, 0.8, 1.6, 2.5, 3.4, 4.6];
    let straight_seeds = [0.05, 0.5 * d + 0.1, d + 0.5, d + 3.0];
    let mut best = f64::INFINITY;
    for w in &words {
        // which free slots are straight segments
        let mut is_straight = [false; 3];
        for (t, l) in w.turns.iter().zip(&w.lens) {
            if let (Turn::S, Len::Free(k)) = (t, l) {
                is_straight[*k] = true;
            }
        }
        let seeds = |k: usize| -> &[f64] {
            if is_straight[k] {
                &straight_seeds
            } else {
                &arc_seeds
            }
        };
        for &a in seeds(0) {
            for &b in seeds(1) {
                for &c in seeds(2) {
                    if let Some(m) = newton(w, goal, [a, b, c]) {
                        if m.iter().all(|&v| v >= -1e-10) {
                            let m = [m[0].max(0.0), m[1].max(0.0), m[2].max(0.0)];
                            best = best.min(word_length(w, &m));
                        }
                    }
                }
            }
        }
    }
    best
}

#[allow(dead_code)]
pub fn word_count() -> usize {
    all_words().len()
}

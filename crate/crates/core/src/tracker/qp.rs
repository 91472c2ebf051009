//! Dense strictly convex QP, dual active-set (Goldfarb-Idnani).
//!
//! Solves `min ½xᵀHx + gᵀx  s.t.  Cx ≥ d` with `H` positive definite.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("Hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("constraints are infeasible")]
    Infeasible,
    #[error("active-set iteration limit reached")]
    IterationLimit,
    #[error("dimension mismatch")]
    Dimension,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// One multiplier per constraint row, zero for inactive rows.
    pub multipliers: DVector<f64>,
    pub active: Vec<usize>,
    pub iterations: usize,
}

const FEAS_TOL: f64 = 1e-10;
const ZERO: f64 = 1e-14;

fn givens(a: f64, b: f64) -> (f64, f64, f64) {
    let h = a.hypot(b);
    if h < ZERO {
        (1.0, 0.0, 0.0)
    } else {
        (a / h, b / h, h)
    }
}

/// Rotates columns `i` and `j` of `m`: (m_i, m_j) ← (c·m_i + s·m_j, −s·m_i + c·m_j).
fn rotate_cols(m: &mut DMatrix<f64>, i: usize, j: usize, c: f64, s: f64) {
    for r in 0..m.nrows() {
        let (a, b) = (m[(r, i)], m[(r, j)]);
        m[(r, i)] = c * a + s * b;
        m[(r, j)] = -s * a + c * b;
    }
}

struct Factor {
    n: usize,
    j: DMatrix<f64>,
    r: DMatrix<f64>,
    q: usize,
}

impl Factor {
    /// Appends a constraint whose transformed normal is `d = Jᵀn`.
    fn add(&mut self, mut d: DVector<f64>) {
        for k in (self.q + 1..self.n).rev() {
            let (c, s, h) = givens(d[k - 1], d[k]);
            if d[k].abs() < ZERO {
                continue;
            }
            d[k - 1] = h;
            d[k] = 0.0;
            rotate_cols(&mut self.j, k - 1, k, c, s);
        }
        for row in 0..=self.q {
            self.r[(row, self.q)] = d[row];
        }
        self.q += 1;
    }

    fn drop(&mut self, l: usize) {
        let q = self.q;
        for col in l..q - 1 {
            for row in 0..q {
                self.r[(row, col)] = self.r[(row, col + 1)];
            }
        }
        for row in 0..q {
            self.r[(row, q - 1)] = 0.0;
        }
        for k in l..q - 1 {
            let (c, s, h) = givens(self.r[(k, k)], self.r[(k + 1, k)]);
            self.r[(k, k)] = h;
            self.r[(k + 1, k)] = 0.0;
            for col in k + 1..q - 1 {
                let (a, b) = (self.r[(k, col)], self.r[(k + 1, col)]);
                self.r[(k, col)] = c * a + s * b;
                self.r[(k + 1, col)] = -s * a + c * b;
            }
            rotate_cols(&mut self.j, k, k + 1, c, s);
        }
        self.q -= 1;
    }

    #[allow(clippy::needless_range_loop)]
    fn solve_r(&self, rhs: &[f64]) -> Vec<f64> {
        let q = self.q;
        let mut out = vec![0.0; q];
        for i in (0..q).rev() {
            let mut s = rhs[i];
            for k in i + 1..q {
                s -= self.r[(i, k)] * out[k];
            }
            out[i] = s / self.r[(i, i)];
        }
        out
    }
}

pub fn solve_qp(h: &DMatrix<f64>, g: &DVector<f64>, c: &DMatrix<f64>, d: &DVector<f64>) -> Result<QpSolution, QpError> {
    let n = h.nrows();
    let m = c.nrows();
    if h.ncols() != n || g.len() != n || (m > 0 && c.ncols() != n) || d.len() != m {
        return Err(QpError::Dimension);
    }
    let chol = h.clone().cholesky().ok_or(QpError::NotPositiveDefinite)?;
    let l_inv = chol
        .l()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(QpError::NotPositiveDefinite)?;
    let mut f = Factor {
        n,
        j: l_inv.transpose(),
        r: DMatrix::zeros(n, n),
        q: 0,
    };
    let mut x = -chol.solve(g);
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let row_norm: Vec<f64> = (0..m).map(|i| c.row(i).norm().max(1e-300)).collect();
    let max_iter = 10 * (n + m) + 50;
    let mut iterations = 0;

    loop {
        // most violated inactive row, scaled by its norm
        let mut p = None;
        let mut worst = -FEAS_TOL;
        for i in 0..m {
            if active.contains(&i) {
                continue;
            }
            let s = (c.row(i) * &x)[0] - d[i];
            let scaled = s / row_norm[i];
            if scaled < worst {
                worst = scaled;
                p = Some(i);
            }
        }
        let Some(p) = p else { break };
        let np: DVector<f64> = c.row(p).transpose();
        let mut u_plus = u.clone();
        u_plus.push(0.0);

        loop {
            iterations += 1;
            if iterations > max_iter {
                return Err(QpError::IterationLimit);
            }
            let q = f.q;
            let dvec = f.j.transpose() * &np;
            let z = f.j.columns(q, n - q) * dvec.rows(q, n - q);
            let r = f.solve_r(&dvec.as_slice()[..q]);

            let mut t1 = f64::INFINITY;
            let mut drop_at = None;
            for (k, rk) in r.iter().enumerate() {
                if *rk > ZERO {
                    let t = u_plus[k] / rk;
                    if t < t1 {
                        t1 = t;
                        drop_at = Some(k);
                    }
                }
            }
            let zn = z.dot(&np);
            let t2 = if z.norm() > 1e-12 * np.norm().max(1.0) && zn > ZERO {
                -((np.dot(&x)) - d[p]) / zn
            } else {
                f64::INFINITY
            };
            let t = t1.min(t2);
            if !t.is_finite() {
                return Err(QpError::Infeasible);
            }
            for k in 0..q {
                u_plus[k] -= t * r[k];
            }
            u_plus[q] += t;
            if t2.is_finite() {
                x += &z * t;
                if t2 <= t1 {
                    f.add(dvec);
                    active.push(p);
                    u = u_plus;
                    break;
                }
            }
            let l = drop_at.expect("partial step has a blocking row");
            f.drop(l);
            active.remove(l);
            u_plus.remove(l);
        }
    }

    let mut multipliers = DVector::zeros(m);
    for (k, &i) in active.iter().enumerate() {
        multipliers[i] = u[k];
    }
    Ok(QpSolution {
        x,
        multipliers,
        active,
        iterations,
    })
}

#![allow(clippy::needless_range_loop)]
//! Bounded primal revised simplex over `A x - s = 0` with bounds on `x` and
//! on the row activities `s`.
//!
//! Phase one minimizes the sum of bound violations of the basic variables,
//! rebuilding the piecewise cost every iteration; phase two minimizes the true
//! cost. Pricing is Dantzig's rule with a switch to Bland's rule after a long
//! stall. The ratio test is Harris' two-pass test with bound flips for
//! boxed entering variables.

use super::lu::Lu;

/// Refactor after this many eta updates.
const REFACTOR_EVERY: usize = 100;
/// Smallest usable entry of the entering column in the ratio test.
const PIVOT_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Status {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable held at zero.
    Zero,
}

/// A scaled problem in computational form. Columns `0..n` are structural,
/// columns `n..n + m` are row activities with coefficient `-1`.
pub(crate) struct StdForm {
    pub n: usize,
    pub m: usize,
    pub col_start: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub val: Vec<f64>,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

pub(crate) enum Outcome {
    Optimal,
    /// Phase one stalled with positive infeasibility; `y` are the final
    /// phase-one row multipliers.
    Infeasible {
        y: Vec<f64>,
    },
    /// Column along which the cost decreases without limit.
    Unbounded {
        column: usize,
    },
    IterationLimit,
}

pub(crate) struct Simplex<'a> {
    lp: &'a StdForm,
    pub x: Vec<f64>,
    pub status: Vec<Status>,
    basis: Vec<usize>,
    lu: Lu,
    slack_idx: Vec<usize>,
    slack_val: Vec<f64>,
    feas_tol: f64,
    opt_tol: f64,
    pub iterations: usize,
    pub refactorizations: usize,
}

impl<'a> Simplex<'a> {
    pub fn new(lp: &'a StdForm, feas_tol: f64, opt_tol: f64) -> Self {
        let total = lp.n + lp.m;
        let mut x = vec![0.0; total];
        let mut status = vec![Status::Basic; total];
        for j in 0..lp.n {
            let (l, u) = (lp.lower[j], lp.upper[j]);
            (x[j], status[j]) = if l.is_finite() {
                (l, Status::Lower)
            } else if u.is_finite() {
                (u, Status::Upper)
            } else {
                (0.0, Status::Zero)
            };
        }
        let slack_idx: Vec<usize> = (0..lp.m).collect();
        let slack_val = vec![-1.0; lp.m];
        let lu =
            Lu::factor(lp.m, |p| (&slack_idx[p..p + 1], &slack_val[p..p + 1])).expect("slack basis is nonsingular");
        let mut s = Simplex {
            lp,
            x,
            status,
            basis: (lp.n..total).collect(),
            lu,
            slack_idx,
            slack_val,
            feas_tol,
            opt_tol,
            iterations: 0,
            refactorizations: 0,
        };
        s.recompute_basics();
        s
    }

    fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let lp = self.lp;
        if j < lp.n {
            let (a, b) = (lp.col_start[j], lp.col_start[j + 1]);
            (&lp.row_idx[a..b], &lp.val[a..b])
        } else {
            let i = j - lp.n;
            (&self.slack_idx[i..i + 1], &self.slack_val[i..i + 1])
        }
    }

    fn col_dot(&self, j: usize, y: &[f64]) -> f64 {
        let (idx, val) = self.column(j);
        idx.iter().zip(val).map(|(&i, &a)| a * y[i]).sum()
    }

    fn nonbasic_position(&self, j: usize) -> (f64, Status) {
        let (l, u) = (self.lp.lower[j], self.lp.upper[j]);
        match (l.is_finite(), u.is_finite()) {
            (true, true) => {
                if (self.x[j] - l).abs() <= (u - self.x[j]).abs() {
                    (l, Status::Lower)
                } else {
                    (u, Status::Upper)
                }
            }
            (true, false) => (l, Status::Lower),
            (false, true) => (u, Status::Upper),
            (false, false) => (0.0, Status::Zero),
        }
    }

    /// Factor the current basis, swapping dependent columns for the slacks
    /// of unpivoted rows, then recompute the basic values.
    fn refactor(&mut self) {
        self.refactorizations += 1;
        loop {
            let result = {
                let this = &*self;
                Lu::factor(this.lp.m, |p| this.column(this.basis[p]))
            };
            match result {
                Ok(lu) => {
                    self.lu = lu;
                    break;
                }
                Err(singular) => {
                    log::debug!(
                        "basis repair: replacing {} dependent columns with slacks",
                        singular.positions.len()
                    );
                    for (&p, &r) in singular.positions.iter().zip(&singular.rows) {
                        let j = self.basis[p];
                        let (v, st) = self.nonbasic_position(j);
                        self.x[j] = v;
                        self.status[j] = st;
                        let slack = self.lp.n + r;
                        self.basis[p] = slack;
                        self.status[slack] = Status::Basic;
                    }
                }
            }
        }
        self.recompute_basics();
    }

    fn recompute_basics(&mut self) {
        let m = self.lp.m;
        let mut rhs = vec![0.0; m];
        for j in 0..self.lp.n + m {
            if self.status[j] == Status::Basic || self.x[j] == 0.0 {
                continue;
            }
            let (idx, val) = self.column(j);
            for (&i, &a) in idx.iter().zip(val) {
                rhs[i] -= a * self.x[j];
            }
        }
        self.lu.ftran(&mut rhs);
        for (p, &j) in self.basis.iter().enumerate() {
            self.x[j] = rhs[p];
        }
    }

    /// Sum of bound violations of basic variables and the phase-one cost.
    fn infeasibility(&self, cb: &mut [f64]) -> f64 {
        let mut total = 0.0;
        for (p, &j) in self.basis.iter().enumerate() {
            let v = self.x[j];
            let (l, u) = (self.lp.lower[j], self.lp.upper[j]);
            cb[p] = if v < l - self.feas_tol {
                total += l - v;
                -1.0
            } else if v > u + self.feas_tol {
                total += v - u;
                1.0
            } else {
                0.0
            };
        }
        total
    }

    pub fn run(&mut self, max_iter: usize) -> Outcome {
        let lp = self.lp;
        let (n, m) = (lp.n, lp.m);
        let total = n + m;
        let stall_limit = 2 * total;
        let mut cb = vec![0.0; m];
        let mut y = vec![0.0; m];
        let mut alpha = vec![0.0; m];
        let mut best_obj = f64::INFINITY;
        let mut last_phase_one = true;
        let mut stall = 0usize;
        let mut bland = false;

        loop {
            if self.iterations >= max_iter {
                return Outcome::IterationLimit;
            }
            if self.lu.updates() >= REFACTOR_EVERY || self.lu.eta_nnz() > 2 * self.lu.factor_nnz() + 10 * m {
                self.refactor();
            }

            let infeasibility = self.infeasibility(&mut cb);
            let phase_one = infeasibility > 0.0;
            if !phase_one {
                for (p, &j) in self.basis.iter().enumerate() {
                    cb[p] = lp.cost[j];
                }
            }
            let obj = if phase_one {
                infeasibility
            } else {
                (0..total).map(|j| lp.cost[j] * self.x[j]).sum()
            };
            if phase_one != last_phase_one {
                best_obj = f64::INFINITY;
                last_phase_one = phase_one;
            }
            if obj < best_obj - 1e-12 * (1.0 + obj.abs()) {
                best_obj = obj;
                stall = 0;
                bland = false;
            } else {
                stall += 1;
                if stall > stall_limit && !bland {
                    log::debug!("simplex stalled for {stall} iterations; switching to Bland's rule");
                    bland = true;
                }
            }

            y.copy_from_slice(&cb);
            self.lu.btran(&mut y);

            // Pricing.
            let mut entering = None;
            let mut best = 0.0;
            for j in 0..total {
                let st = self.status[j];
                if st == Status::Basic || lp.lower[j] == lp.upper[j] {
                    continue;
                }
                let c = if phase_one { 0.0 } else { lp.cost[j] };
                let d = c - self.col_dot(j, &y);
                let eligible = match st {
                    Status::Lower => d < -self.opt_tol,
                    Status::Upper => d > self.opt_tol,
                    Status::Zero => d.abs() > self.opt_tol,
                    Status::Basic => false,
                };
                if !eligible {
                    continue;
                }
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if d.abs() > best {
                    best = d.abs();
                    entering = Some((j, d));
                }
            }
            let Some((q, d)) = entering else {
                if self.lu.updates() > 0 {
                    // Confirm on a fresh factorization before stopping.
                    self.refactor();
                    continue;
                }
                return if phase_one {
                    Outcome::Infeasible { y }
                } else {
                    Outcome::Optimal
                };
            };
            let dir = if d < 0.0 { 1.0 } else { -1.0 };

            alpha.iter_mut().for_each(|a| *a = 0.0);
            {
                let (idx, val) = self.column(q);
                for (&i, &a) in idx.iter().zip(val) {
                    alpha[i] = a;
                }
            }
            self.lu.ftran(&mut alpha);

            // Ratio test. Each candidate is (position, exact ratio, bound hit).
            let tol = self.feas_tol;
            let mut theta = f64::INFINITY;
            let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
            for p in 0..m {
                let a = alpha[p];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let delta = -dir * a;
                let j = self.basis[p];
                let v = self.x[j];
                let (l, u) = (lp.lower[j], lp.upper[j]);
                let (relaxed, exact, hit) = if v < l - tol {
                    if delta > 0.0 {
                        ((l - v) / delta, (l - v) / delta, l)
                    } else {
                        continue;
                    }
                } else if v > u + tol {
                    if delta < 0.0 {
                        ((u - v) / delta, (u - v) / delta, u)
                    } else {
                        continue;
                    }
                } else if delta > 0.0 && u.is_finite() {
                    ((u + tol - v) / delta, (u - v) / delta, u)
                } else if delta < 0.0 && l.is_finite() {
                    ((l - tol - v) / delta, (l - v) / delta, l)
                } else {
                    continue;
                };
                theta = theta.min(relaxed);
                candidates.push((p, exact, hit));
            }
            let range = lp.upper[q] - lp.lower[q];
            let mut leave: Option<(usize, f64, f64)> = None;
            if bland {
                for &(p, exact, hit) in &candidates {
                    let better = match leave {
                        None => true,
                        Some((lp_, le, _)) => {
                            exact < le - 1e-12 || (exact <= le + 1e-12 && self.basis[p] < self.basis[lp_])
                        }
                    };
                    if better {
                        leave = Some((p, exact, hit));
                    }
                }
            } else {
                let mut best_pivot = 0.0;
                for &(p, exact, hit) in &candidates {
                    if exact <= theta && alpha[p].abs() > best_pivot {
                        best_pivot = alpha[p].abs();
                        leave = Some((p, exact, hit));
                    }
                }
            }
            let step = leave.map_or(f64::INFINITY, |(_, e, _)| e.max(0.0));
            if range.is_finite() && range <= step {
                // Bound flip of the entering variable.
                for p in 0..m {
                    if alpha[p] != 0.0 {
                        self.x[self.basis[p]] -= dir * range * alpha[p];
                    }
                }
                if self.status[q] == Status::Lower {
                    self.x[q] = lp.upper[q];
                    self.status[q] = Status::Upper;
                } else {
                    self.x[q] = lp.lower[q];
                    self.status[q] = Status::Lower;
                }
                self.iterations += 1;
                continue;
            }
            let Some((pl, _, hit)) = leave else {
                if phase_one {
                    // Cannot happen in exact arithmetic; retry from a fresh basis.
                    if self.lu.updates() > 0 {
                        self.refactor();
                        continue;
                    }
                    return Outcome::Infeasible { y };
                }
                return Outcome::Unbounded { column: q };
            };
            for p in 0..m {
                if alpha[p] != 0.0 {
                    self.x[self.basis[p]] -= dir * step * alpha[p];
                }
            }
            self.x[q] += dir * step;
            let out = self.basis[pl];
            self.x[out] = hit;
            self.status[out] = if hit == lp.lower[out] {
                Status::Lower
            } else {
                Status::Upper
            };
            self.basis[pl] = q;
            self.status[q] = Status::Basic;
            self.lu.update(pl, &alpha);
            self.iterations += 1;
        }
    }
}

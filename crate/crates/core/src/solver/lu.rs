//! Sparse LU factorization of simplex bases with product-form updates.
//!
//! The factorization is left-looking (one column at a time, each column
//! solved against the partial `L` through a depth-first reach), with
//! threshold partial pivoting. Columns are processed sparsest first, which
//! takes the many slack and singleton columns of a typical basis without any
//! fill. Basis changes after factorization are kept as a file of eta columns.

/// Relative threshold for acceptable pivots within a column.
const PIVOT_THRESHOLD: f64 = 0.1;
/// Absolute floor below which a column is treated as dependent.
const SINGULAR_TOL: f64 = 1e-9;
/// Entries below this are dropped from the factors.
const DROP_TOL: f64 = 1e-14;

const NONE: usize = usize::MAX;

/// Basis positions that could not be pivoted and rows left without a pivot.
#[derive(Debug)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub rows: Vec<usize>,
}

struct Eta {
    position: usize,
    pivot: f64,
    start: usize,
    end: usize,
}

pub(crate) struct Lu {
    m: usize,
    /// Row pivoted at step `k`.
    pivot_row: Vec<usize>,
    /// Basis position factored at step `k`.
    pivot_pos: Vec<usize>,
    l_start: Vec<usize>,
    l_idx: Vec<usize>,
    l_val: Vec<f64>,
    u_start: Vec<usize>,
    u_idx: Vec<usize>,
    u_val: Vec<f64>,
    u_diag: Vec<f64>,
    etas: Vec<Eta>,
    eta_idx: Vec<usize>,
    eta_val: Vec<f64>,
    work: Vec<f64>,
}

impl Lu {
    /// Factor the basis whose column at position `p` is `column(p)`.
    pub fn factor<'a, F>(m: usize, column: F) -> Result<Lu, Singular>
    where
        F: Fn(usize) -> (&'a [usize], &'a [f64]),
    {
        let mut row_count = vec![0usize; m];
        let mut col_nnz = Vec::with_capacity(m);
        for p in 0..m {
            let (idx, _) = column(p);
            for &i in idx {
                row_count[i] += 1;
            }
            col_nnz.push(idx.len());
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by_key(|&p| (col_nnz[p], p));

        let mut lu = Lu {
            m,
            pivot_row: Vec::with_capacity(m),
            pivot_pos: Vec::with_capacity(m),
            l_start: vec![0],
            l_idx: Vec::new(),
            l_val: Vec::new(),
            u_start: vec![0],
            u_idx: Vec::new(),
            u_val: Vec::new(),
            u_diag: Vec::with_capacity(m),
            etas: Vec::new(),
            eta_idx: Vec::new(),
            eta_val: Vec::new(),
            work: vec![0.0; m],
        };
        let mut row_pivot = vec![NONE; m];
        let mut x = vec![0.0; m];
        let mut mark = vec![NONE; m];
        let mut reach: Vec<usize> = Vec::new();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        let mut deficient = Vec::new();

        for (step, &p) in order.iter().enumerate() {
            let (idx, val) = column(p);
            // Reach of the column's pattern through L, in postorder.
            reach.clear();
            for &start in idx {
                if mark[start] == step {
                    continue;
                }
                mark[start] = step;
                stack.push((start, 0));
                while let Some(top) = stack.last_mut() {
                    let (r, child) = *top;
                    let k = row_pivot[r];
                    let (lo, hi) = if k == NONE {
                        (0, 0)
                    } else {
                        (lu.l_start[k], lu.l_start[k + 1])
                    };
                    if lo + child < hi {
                        top.1 += 1;
                        let next = lu.l_idx[lo + child];
                        if mark[next] != step {
                            mark[next] = step;
                            stack.push((next, 0));
                        }
                    } else {
                        reach.push(r);
                        stack.pop();
                    }
                }
            }
            for (&i, &v) in idx.iter().zip(val) {
                x[i] = v;
            }
            // Reverse postorder is a topological order of the pivoted rows.
            for &r in reach.iter().rev() {
                let k = row_pivot[r];
                if k == NONE || x[r] == 0.0 {
                    continue;
                }
                let xr = x[r];
                for t in lu.l_start[k]..lu.l_start[k + 1] {
                    x[lu.l_idx[t]] -= lu.l_val[t] * xr;
                }
            }
            let mut amax: f64 = 0.0;
            for &r in &reach {
                if row_pivot[r] == NONE {
                    amax = amax.max(x[r].abs());
                }
            }
            let mut piv = NONE;
            if amax >= SINGULAR_TOL {
                for &r in &reach {
                    if row_pivot[r] != NONE || x[r].abs() < PIVOT_THRESHOLD * amax {
                        continue;
                    }
                    let better =
                        piv == NONE || row_count[r] < row_count[piv] || (row_count[r] == row_count[piv] && r < piv);
                    if better {
                        piv = r;
                    }
                }
            }
            if piv == NONE {
                deficient.push(p);
            } else {
                let k = lu.pivot_row.len();
                for &r in &reach {
                    let kr = row_pivot[r];
                    if kr != NONE && x[r].abs() > DROP_TOL {
                        lu.u_idx.push(kr);
                        lu.u_val.push(x[r]);
                    }
                }
                lu.u_start.push(lu.u_idx.len());
                lu.u_diag.push(x[piv]);
                for &r in &reach {
                    if row_pivot[r] == NONE && r != piv && x[r].abs() > DROP_TOL {
                        lu.l_idx.push(r);
                        lu.l_val.push(x[r] / x[piv]);
                    }
                }
                lu.l_start.push(lu.l_idx.len());
                lu.pivot_row.push(piv);
                lu.pivot_pos.push(p);
                row_pivot[piv] = k;
            }
            for &r in &reach {
                x[r] = 0.0;
            }
        }
        if !deficient.is_empty() {
            let rows = (0..m).filter(|&r| row_pivot[r] == NONE).collect();
            return Err(Singular {
                positions: deficient,
                rows,
            });
        }
        Ok(lu)
    }

    pub fn updates(&self) -> usize {
        self.etas.len()
    }

    pub fn eta_nnz(&self) -> usize {
        self.eta_idx.len()
    }

    pub fn factor_nnz(&self) -> usize {
        self.l_idx.len() + self.u_idx.len() + self.m
    }

    /// Solve `B z = rhs`; `rhs` is indexed by row and overwritten with `z`
    /// indexed by basis position.
    pub fn ftran(&mut self, rhs: &mut [f64]) {
        let w = &mut self.work;
        w.copy_from_slice(rhs);
        for k in 0..self.m {
            let wk = w[self.pivot_row[k]];
            rhs[k] = wk;
            if wk != 0.0 {
                for t in self.l_start[k]..self.l_start[k + 1] {
                    w[self.l_idx[t]] -= self.l_val[t] * wk;
                }
            }
        }
        // `rhs` now holds the forward result indexed by step.
        for k in (0..self.m).rev() {
            let vk = rhs[k] / self.u_diag[k];
            rhs[k] = vk;
            if vk != 0.0 {
                for t in self.u_start[k]..self.u_start[k + 1] {
                    rhs[self.u_idx[t]] -= self.u_val[t] * vk;
                }
            }
        }
        for k in 0..self.m {
            w[self.pivot_pos[k]] = rhs[k];
        }
        rhs.copy_from_slice(w);
        for eta in &self.etas {
            let zp = rhs[eta.position] / eta.pivot;
            rhs[eta.position] = zp;
            if zp != 0.0 {
                for t in eta.start..eta.end {
                    rhs[self.eta_idx[t]] -= self.eta_val[t] * zp;
                }
            }
        }
    }

    /// Solve `B^T y = rhs`; `rhs` is indexed by basis position and
    /// overwritten with `y` indexed by row.
    pub fn btran(&mut self, rhs: &mut [f64]) {
        for eta in self.etas.iter().rev() {
            let mut s = rhs[eta.position];
            for t in eta.start..eta.end {
                s -= self.eta_val[t] * rhs[self.eta_idx[t]];
            }
            rhs[eta.position] = s / eta.pivot;
        }
        let v = &mut self.work;
        for k in 0..self.m {
            let mut s = rhs[self.pivot_pos[k]];
            for t in self.u_start[k]..self.u_start[k + 1] {
                s -= self.u_val[t] * v[self.u_idx[t]];
            }
            v[k] = s / self.u_diag[k];
        }
        for k in (0..self.m).rev() {
            let mut s = v[k];
            for t in self.l_start[k]..self.l_start[k + 1] {
                s -= self.l_val[t] * rhs[self.l_idx[t]];
            }
            rhs[self.pivot_row[k]] = s;
        }
    }

    /// Record that basis position `position` now holds a column whose
    /// FTRAN image (against the current basis) is `alpha`.
    pub fn update(&mut self, position: usize, alpha: &[f64]) {
        let start = self.eta_idx.len();
        for (i, &a) in alpha.iter().enumerate() {
            if i != position && a.abs() > DROP_TOL {
                self.eta_idx.push(i);
                self.eta_val.push(a);
            }
        }
        self.etas.push(Eta {
            position,
            pivot: alpha[position],
            start,
            end: self.eta_idx.len(),
        });
    }
}

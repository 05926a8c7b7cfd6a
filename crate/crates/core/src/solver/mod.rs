//! Embedded LP solver, independent solution verification and MPS exchange.

mod lu;
mod mps;
mod simplex;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Entity, ModelInstance, RowFamily, VarKind};
use simplex::{Outcome, Simplex, StdForm};

pub use mps::{export_mps, parse_mps, read_mps, write_mps};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Primal feasibility tolerance on scaled rows and bounds.
    pub feas_tol: f64,
    /// Reduced-cost tolerance for optimality.
    pub opt_tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            feas_tol: 1e-7,
            opt_tol: 1e-7,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::IterationLimit => "iteration-limit",
        })
    }
}

/// Evidence for a non-optimal status.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Certificate {
    /// Phase-one multipliers; `row` has the largest multiplier magnitude and
    /// is the most implicated in the infeasibility.
    Infeasible { row: usize, multipliers: Vec<f64> },
    /// The objective decreases without limit along this column.
    Unbounded { column: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    /// Value of every model column.
    pub x: Vec<f64>,
    /// Objective including the constant term.
    pub objective: f64,
    /// Largest row or bound violation of `x` in model units.
    pub max_residual: f64,
    pub iterations: usize,
    pub wall_time: Duration,
    pub certificate: Option<Certificate>,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

fn pow2(s: f64) -> f64 {
    if s.is_finite() && s > 0.0 {
        2f64.powi(s.log2().round() as i32)
    } else {
        1.0
    }
}

struct Scaled {
    lp: StdForm,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
}

/// Build the computational form with geometric-mean scaling followed by
/// column equilibration. All factors are powers of two so unscaling is exact.
fn scale(model: &ModelInstance) -> Scaled {
    let (n, m) = (model.n_cols(), model.n_rows());
    let mut counts = vec![0usize; n + 1];
    for r in &model.rows {
        for &(j, _) in &r.terms {
            counts[j + 1] += 1;
        }
    }
    for j in 0..n {
        counts[j + 1] += counts[j];
    }
    let col_start = counts.clone();
    let mut fill = counts;
    let nnz = col_start[n];
    let mut row_idx = vec![0usize; nnz];
    let mut raw = vec![0.0; nnz];
    for (i, r) in model.rows.iter().enumerate() {
        for &(j, a) in &r.terms {
            row_idx[fill[j]] = i;
            raw[fill[j]] = a;
            fill[j] += 1;
        }
    }

    let mut row_scale = vec![1.0; m];
    let mut col_scale = vec![1.0; n];
    for _ in 0..6 {
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![0.0f64; m];
        for j in 0..n {
            for t in col_start[j]..col_start[j + 1] {
                let v = raw[t].abs() * col_scale[j];
                let i = row_idx[t];
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        for i in 0..m {
            if hi[i] > 0.0 {
                row_scale[i] = 1.0 / (lo[i] * hi[i]).sqrt();
            }
        }
        for j in 0..n {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for t in col_start[j]..col_start[j + 1] {
                let v = raw[t].abs() * row_scale[row_idx[t]];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi > 0.0 {
                col_scale[j] = 1.0 / (lo * hi).sqrt();
            }
        }
    }
    for s in row_scale.iter_mut() {
        *s = pow2(*s);
    }
    for j in 0..n {
        let hi = (col_start[j]..col_start[j + 1])
            .map(|t| raw[t].abs() * row_scale[row_idx[t]])
            .fold(0.0, f64::max);
        col_scale[j] = if hi > 0.0 { pow2(1.0 / hi) } else { 1.0 };
    }

    let val: Vec<f64> = (0..n)
        .flat_map(|j| (col_start[j]..col_start[j + 1]).map(move |t| (j, t)))
        .map(|(j, t)| raw[t] * row_scale[row_idx[t]] * col_scale[j])
        .collect();
    let cmax = model
        .columns
        .iter()
        .zip(&col_scale)
        .map(|(c, s)| (c.cost * s).abs())
        .fold(0.0, f64::max);
    let cost_scale = if cmax > 0.0 { pow2(1.0 / cmax) } else { 1.0 };

    let mut cost = vec![0.0; n + m];
    let mut lower = vec![0.0; n + m];
    let mut upper = vec![0.0; n + m];
    for (j, c) in model.columns.iter().enumerate() {
        cost[j] = c.cost * col_scale[j] * cost_scale;
        lower[j] = c.lower / col_scale[j];
        upper[j] = c.upper / col_scale[j];
    }
    for (i, r) in model.rows.iter().enumerate() {
        let rhs = r.rhs * row_scale[i];
        let (l, u) = match r.sense {
            crate::model::Sense::Le => (f64::NEG_INFINITY, rhs),
            crate::model::Sense::Ge => (rhs, f64::INFINITY),
            crate::model::Sense::Eq => (rhs, rhs),
        };
        lower[n + i] = l;
        upper[n + i] = u;
    }
    Scaled {
        lp: StdForm {
            n,
            m,
            col_start,
            row_idx,
            val,
            cost,
            lower,
            upper,
        },
        row_scale,
        col_scale,
    }
}

/// Largest row or bound violation of `x`.
pub fn max_residual(model: &ModelInstance, x: &[f64]) -> f64 {
    let rows = model.rows.iter().map(|r| r.violation(x)).fold(0.0, f64::max);
    let bounds = model
        .columns
        .iter()
        .zip(x)
        .map(|(c, &v)| (c.lower - v).max(v - c.upper).max(0.0))
        .fold(0.0, f64::max);
    rows.max(bounds)
}

/// Solve `model` with the embedded bounded revised simplex.
pub fn solve(model: &ModelInstance, options: &SolveOptions) -> Result<Solution> {
    model.validate()?;
    let started = Instant::now();
    let scaled = scale(model);
    let mut simplex = Simplex::new(&scaled.lp, options.feas_tol, options.opt_tol);
    let outcome = simplex.run(options.max_iter);
    let n = model.n_cols();
    let mut x: Vec<f64> = (0..n).map(|j| simplex.x[j] * scaled.col_scale[j]).collect();
    // Basic values may sit within tolerance outside their bounds.
    for (v, c) in x.iter_mut().zip(&model.columns) {
        *v = v.clamp(c.lower, c.upper);
    }
    let (status, certificate) = match outcome {
        Outcome::Optimal => (SolveStatus::Optimal, None),
        Outcome::Infeasible { y } => {
            let multipliers: Vec<f64> = y.iter().zip(&scaled.row_scale).map(|(v, s)| v * s).collect();
            let row = multipliers
                .iter()
                .enumerate()
                .fold(
                    (0, 0.0f64),
                    |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) },
                )
                .0;
            (
                SolveStatus::Infeasible,
                Some(Certificate::Infeasible { row, multipliers }),
            )
        }
        Outcome::Unbounded { column } => (SolveStatus::Unbounded, Some(Certificate::Unbounded { column })),
        Outcome::IterationLimit => (SolveStatus::IterationLimit, None),
    };
    let solution = Solution {
        status,
        objective: model.objective_value(&x),
        max_residual: max_residual(model, &x),
        iterations: simplex.iterations,
        wall_time: started.elapsed(),
        certificate,
        x,
    };
    log::info!(
        "simplex: {} after {} iterations ({} refactorizations) in {:.2?}, objective {:.6}, residual {:.2e}",
        solution.status,
        solution.iterations,
        simplex.refactorizations,
        solution.wall_time,
        solution.objective,
        solution.max_residual
    );
    Ok(solution)
}

/// Like [`solve`] but an error unless the status is optimal.
pub fn solve_optimal(model: &ModelInstance, options: &SolveOptions) -> Result<Solution> {
    let s = solve(model, options)?;
    if !s.is_optimal() {
        let detail = match &s.certificate {
            Some(Certificate::Infeasible { row, .. }) => format!(" (row `{}`)", model.rows[*row].name),
            Some(Certificate::Unbounded { column }) => format!(" (column `{}`)", model.columns[*column].name),
            None => String::new(),
        };
        return Err(Error::Solver(format!("model `{}` is {}{detail}", model.name, s.status)));
    }
    Ok(s)
}

/// Largest violation within one constraint family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyViolation {
    pub max: f64,
    pub row: usize,
    pub row_name: String,
}

/// Product of a paired positive and negative flow at one step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplementarityEntry {
    pub step: usize,
    pub entity: Entity,
    pub product: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub families: BTreeMap<RowFamily, FamilyViolation>,
    /// Largest violation of a column bound.
    pub bound_violation: f64,
    pub complementarity: Vec<ComplementarityEntry>,
}

impl VerifyReport {
    pub fn max_violation(&self) -> f64 {
        self.families
            .values()
            .map(|f| f.max)
            .fold(self.bound_violation, f64::max)
    }

    pub fn family(&self, family: RowFamily) -> f64 {
        self.families.get(&family).map_or(0.0, |f| f.max)
    }

    pub fn max_grid_product(&self) -> f64 {
        self.complementarity
            .iter()
            .filter(|c| c.entity == Entity::Grid)
            .map(|c| c.product)
            .fold(0.0, f64::max)
    }

    pub fn max_storage_product(&self) -> f64 {
        self.complementarity
            .iter()
            .filter(|c| matches!(c.entity, Entity::Ess(_)))
            .map(|c| c.product)
            .fold(0.0, f64::max)
    }
}

/// Recompute every row activity of `x` and report violations per family,
/// plus the complementarity products of grid import/export and storage
/// charge/discharge at each step.
pub fn verify(model: &ModelInstance, x: &[f64]) -> VerifyReport {
    let mut families: BTreeMap<RowFamily, FamilyViolation> = BTreeMap::new();
    for (i, r) in model.rows.iter().enumerate() {
        let v = r.violation(x);
        let entry = families.entry(r.family).or_insert_with(|| FamilyViolation {
            max: -1.0,
            row: i,
            row_name: r.name.clone(),
        });
        if v > entry.max {
            *entry = FamilyViolation {
                max: v,
                row: i,
                row_name: r.name.clone(),
            };
        }
    }
    let bound_violation = model
        .columns
        .iter()
        .zip(x)
        .map(|(c, &v)| (c.lower - v).max(v - c.upper).max(0.0))
        .fold(0.0, f64::max);
    let mut complementarity = Vec::new();
    for k in 0.. {
        let (Some(imp), Some(exp)) = (
            model.col(VarKind::GridImport, Entity::Grid, Some(k)),
            model.col(VarKind::GridExport, Entity::Grid, Some(k)),
        ) else {
            break;
        };
        complementarity.push(ComplementarityEntry {
            step: k,
            entity: Entity::Grid,
            product: x[imp] * x[exp],
        });
        for e in 0.. {
            let ent = Entity::Ess(e);
            let (Some(dis), Some(ch)) = (
                model.col(VarKind::EssDischarge, ent, Some(k)),
                model.col(VarKind::EssCharge, ent, Some(k)),
            ) else {
                break;
            };
            complementarity.push(ComplementarityEntry {
                step: k,
                entity: ent,
                product: x[dis] * x[ch],
            });
        }
    }
    VerifyReport {
        families,
        bound_violation,
        complementarity,
    }
}

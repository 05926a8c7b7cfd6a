use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Role of a column in the co-design program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarKind {
    /// Grid-side import P_G,k^+.
    GridImport,
    /// Grid-side export P_G,k^-.
    GridExport,
    /// PV power delivered to the bus, p_PV,k.
    PvBus,
    /// Storage discharge delivered to the bus, p_e,k^+.
    EssDischarge,
    /// Storage charge drawn from the bus, p_e,k^-.
    EssCharge,
    /// State of energy E_e,k, k = 0..=K.
    Soe,
    /// Installed energy capacity E_e^max.
    EnergyCap,
    /// Installed storage power P_e^max.
    EssPowerCap,
    /// Installed or contracted source power P_s^max.
    SourceCap,
    /// C-rate R_e,k.
    CRate,
    /// Energy swing q_e,k.
    Swing,
    /// Throughput Q_e over the synthetic period.
    Throughput,
    /// Peak grid offtake P_G^peak.
    GridPeak,
    /// Epigraph of the max-form storage capital cost.
    CapexEpigraph,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Entity {
    Grid,
    Pv,
    /// Index into the configured storage list.
    Ess(usize),
}

/// Identity of a model column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VariableRef {
    pub kind: VarKind,
    pub entity: Entity,
    pub step: Option<usize>,
}

impl VariableRef {
    pub fn new(kind: VarKind, entity: Entity, step: Option<usize>) -> Self {
        VariableRef { kind, entity, step }
    }
}

/// Constraint family, used for verification reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RowFamily {
    Balance,
    SourceFlow,
    Bounds,
    Dynamics,
    Periodicity,
    Swing,
    McCormick,
    Throughput,
    Peak,
    Capex,
    Other,
}

impl fmt::Display for RowFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    /// Objective coefficient.
    pub cost: f64,
    pub var: Option<VariableRef>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub name: String,
    pub family: RowFamily,
    /// Sparse `(column, coefficient)` terms, one per column.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// A sparse linear program: minimize `cost·x + objective_constant` subject to
/// rows and column bounds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModelInstance {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Row>,
    pub objective_constant: f64,
    index: HashMap<VariableRef, usize>,
}

impl ModelInstance {
    pub fn new(name: impl Into<String>) -> Self {
        ModelInstance {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.terms.len()).sum()
    }

    pub fn add_column(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        self.columns.push(Column {
            name: name.into(),
            lower,
            upper,
            cost: 0.0,
            var: None,
        });
        self.columns.len() - 1
    }

    /// Register a typed column. Panics if `var` is already registered.
    pub fn add_var(&mut self, var: VariableRef, name: impl Into<String>, lower: f64, upper: f64) -> usize {
        let j = self.add_column(name, lower, upper);
        self.columns[j].var = Some(var);
        let prev = self.index.insert(var, j);
        assert!(prev.is_none(), "variable {var:?} registered twice");
        j
    }

    pub fn col(&self, kind: VarKind, entity: Entity, step: Option<usize>) -> Option<usize> {
        self.index.get(&VariableRef::new(kind, entity, step)).copied()
    }

    /// Like [`col`](Self::col) but for columns the builder always creates.
    pub fn expect_col(&self, kind: VarKind, entity: Entity, step: Option<usize>) -> usize {
        self.col(kind, entity, step)
            .unwrap_or_else(|| panic!("no column for {kind:?} {entity:?} {step:?}"))
    }

    /// Append a row; terms on the same column are merged and exact zeros dropped.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        family: RowFamily,
        terms: impl IntoIterator<Item = (usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (j, a) in terms {
            match merged.iter_mut().find(|(k, _)| *k == j) {
                Some(t) => t.1 += a,
                None => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.rows.push(Row {
            name: name.into(),
            family,
            terms: merged,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn add_cost(&mut self, j: usize, c: f64) {
        self.columns[j].cost += c;
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.columns.iter().zip(x).map(|(c, v)| c.cost * v).sum::<f64>()
    }

    /// Check structural invariants: finite data and consistent bounds. Empty
    /// rows are allowed; they constrain only the constant zero.
    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| {
            Err(Error::Build {
                stage: "validate",
                reason,
            })
        };
        if !self.objective_constant.is_finite() {
            return fail("objective constant is not finite".into());
        }
        for c in &self.columns {
            if !c.cost.is_finite() {
                return fail(format!("column {} has a non-finite cost", c.name));
            }
            if c.lower.is_nan() || c.upper.is_nan() || c.lower > c.upper {
                return fail(format!("column {} has bounds [{}, {}]", c.name, c.lower, c.upper));
            }
            if c.lower == f64::INFINITY || c.upper == f64::NEG_INFINITY {
                return fail(format!("column {} has an infinite fixed bound", c.name));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return fail(format!("row {} has a non-finite right-hand side", r.name));
            }
            for &(j, a) in &r.terms {
                if j >= self.columns.len() || !a.is_finite() {
                    return fail(format!("row {} has a bad term ({j}, {a})", r.name));
                }
            }
        }
        Ok(())
    }

    /// Structural equality ignoring the typed-variable registry.
    pub fn same_structure(&self, other: &ModelInstance) -> bool {
        let strip = |cols: &[Column]| -> Vec<(String, f64, f64, f64)> {
            cols.iter()
                .map(|c| (c.name.clone(), c.lower, c.upper, c.cost))
                .collect()
        };
        type RowKey = (String, Vec<(usize, f64)>, Sense, f64);
        let rows = |m: &ModelInstance| -> Vec<RowKey> {
            m.rows
                .iter()
                .map(|r| {
                    let mut t = r.terms.clone();
                    t.sort_by_key(|&(j, _)| j);
                    (r.name.clone(), t, r.sense, r.rhs)
                })
                .collect()
        };
        strip(&self.columns) == strip(&other.columns)
            && rows(self) == rows(other)
            && self.objective_constant == other.objective_constant
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_merge_duplicate_terms() {
        let mut m = ModelInstance::new("t");
        let x = m.add_column("x", 0.0, 1.0);
        let y = m.add_column("y", 0.0, 1.0);
        let r = m.add_row("r", RowFamily::Other, [(x, 1.0), (y, 2.0), (x, -1.0)], Sense::Le, 1.0);
        assert_eq!(m.rows[r].terms, vec![(y, 2.0)]);
        assert_eq!(m.rows[r].violation(&[0.0, 1.0]), 1.0);
    }

    #[test]
    fn validation_catches_bad_data() {
        let mut m = ModelInstance::new("t");
        let x = m.add_column("x", 1.0, 0.0);
        assert!(m.validate().is_err());
        m.columns[x].upper = 2.0;
        m.add_row("r", RowFamily::Other, [(x, f64::NAN)], Sense::Le, 1.0);
        assert!(m.validate().is_err());
        m.rows[0].terms[0].1 = 1.0;
        assert!(m.validate().is_ok());
        // An empty row is legal; it only constrains the constant zero.
        m.add_row("e", RowFamily::Other, [(x, 0.0)], Sense::Le, 1.0);
        assert!(m.validate().is_ok());
        m.rows[1].terms.push((7, 1.0));
        assert!(m.validate().is_err());
    }

    #[test]
    fn typed_lookup() {
        let mut m = ModelInstance::new("t");
        let v = VariableRef::new(VarKind::Soe, Entity::Ess(1), Some(3));
        let j = m.add_var(v, "soe", 0.0, 1.0);
        assert_eq!(m.col(VarKind::Soe, Entity::Ess(1), Some(3)), Some(j));
        assert_eq!(m.col(VarKind::Soe, Entity::Ess(0), Some(3)), None);
    }
}

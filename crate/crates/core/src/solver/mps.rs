//! Free-format MPS writer and reader.
//!
//! The objective row is named `COST`. Its right-hand side holds the negated
//! objective constant, the usual convention for objective offsets. Numbers
//! are printed in shortest round-trip form, so a written model parses back
//! bit-identically.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ModelInstance, RowFamily, Sense};

const OBJ: &str = "COST";

/// Render `model` as free-format MPS.
pub fn write_mps(model: &ModelInstance) -> String {
    let mut out = String::new();
    let name = if model.name.is_empty() { "model" } else { &model.name };
    let _ = writeln!(out, "NAME {name}");
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N {OBJ}");
    for r in &model.rows {
        let tag = match r.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        let _ = writeln!(out, " {tag} {}", r.name);
    }

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.n_cols()];
    for (i, r) in model.rows.iter().enumerate() {
        for &(j, a) in &r.terms {
            by_col[j].push((i, a));
        }
    }
    out.push_str("COLUMNS\n");
    for (j, c) in model.columns.iter().enumerate() {
        if c.cost != 0.0 {
            let _ = writeln!(out, " {} {OBJ} {}", c.name, c.cost);
        }
        for &(i, a) in &by_col[j] {
            let _ = writeln!(out, " {} {} {a}", c.name, model.rows[i].name);
        }
        if c.cost == 0.0 && by_col[j].is_empty() {
            // Keep otherwise invisible columns in the file.
            let _ = writeln!(out, " {} {OBJ} 0", c.name);
        }
    }

    out.push_str("RHS\n");
    if model.objective_constant != 0.0 {
        let _ = writeln!(out, " RHS {OBJ} {}", -model.objective_constant);
    }
    for r in &model.rows {
        if r.rhs != 0.0 {
            let _ = writeln!(out, " RHS {} {}", r.name, r.rhs);
        }
    }

    out.push_str("BOUNDS\n");
    for c in &model.columns {
        let (l, u) = (c.lower, c.upper);
        if l == u {
            let _ = writeln!(out, " FX BND {} {l}", c.name);
        } else if l == f64::NEG_INFINITY && u == f64::INFINITY {
            let _ = writeln!(out, " FR BND {}", c.name);
        } else {
            if l == f64::NEG_INFINITY {
                let _ = writeln!(out, " MI BND {}", c.name);
            } else if l != 0.0 {
                let _ = writeln!(out, " LO BND {} {l}", c.name);
            }
            if u != f64::INFINITY {
                let _ = writeln!(out, " UP BND {} {u}", c.name);
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

/// Write `model` to `path` as free-format MPS.
pub fn export_mps(model: &ModelInstance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_mps(model)).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

pub fn read_mps(path: impl AsRef<Path>) -> Result<ModelInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    parse_mps(&text)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
}

/// Parse free-format MPS. Ranged rows are split into their defining row and
/// an extra opposite-sense row named `<row>_range`. Parsed rows carry no
/// family and parsed columns no typed variable.
pub fn parse_mps(text: &str) -> Result<ModelInstance> {
    let mut model = ModelInstance::new("");
    let mut section = Section::None;
    let mut obj_name: Option<String> = None;
    let mut rows: HashMap<String, usize> = HashMap::new();
    let mut cols: HashMap<String, usize> = HashMap::new();
    let mut terms: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut ranges: Vec<(usize, f64)> = Vec::new();
    let mut seen_end = false;

    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let fail = |reason: String| Error::Mps { line: line_no, reason };
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !line.starts_with(' ') && !line.starts_with('\t') {
            section = match fields[0] {
                "NAME" => {
                    model.name = fields.get(1).copied().unwrap_or("").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => {
                    seen_end = true;
                    break;
                }
                other => return Err(fail(format!("unknown section `{other}`"))),
            };
            continue;
        }
        let number = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Mps {
                line: line_no,
                reason: format!("bad number `{s}`"),
            })
        };
        match section {
            Section::None => return Err(fail("data line outside a section".into())),
            Section::Rows => {
                let [kind, name] = fields[..] else {
                    return Err(fail("ROWS line needs a type and a name".into()));
                };
                let sense = match kind {
                    "N" => {
                        if obj_name.is_none() {
                            obj_name = Some(name.to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    other => return Err(fail(format!("unknown row type `{other}`"))),
                };
                if rows.contains_key(name) {
                    return Err(fail(format!("duplicate row `{name}`")));
                }
                rows.insert(name.to_string(), model.rows.len());
                model.rows.push(crate::model::Row {
                    name: name.to_string(),
                    family: RowFamily::Other,
                    terms: Vec::new(),
                    sense,
                    rhs: 0.0,
                });
                terms.push(Vec::new());
            }
            Section::Columns => {
                if fields.len() < 3 || fields.len().is_multiple_of(2) {
                    return Err(fail("COLUMNS line needs a column and row/value pairs".into()));
                }
                if fields.contains(&"'MARKER'") {
                    return Err(fail("integer markers are not supported".into()));
                }
                let j = match cols.get(fields[0]) {
                    Some(&j) => j,
                    None => {
                        let j = model.add_column(fields[0], 0.0, f64::INFINITY);
                        cols.insert(fields[0].to_string(), j);
                        j
                    }
                };
                for pair in fields[1..].chunks(2) {
                    let v = number(pair[1])?;
                    if Some(pair[0]) == obj_name.as_deref() {
                        model.columns[j].cost += v;
                    } else {
                        let i = *rows
                            .get(pair[0])
                            .ok_or_else(|| fail(format!("unknown row `{}`", pair[0])))?;
                        terms[i].push((j, v));
                    }
                }
            }
            Section::Rhs | Section::Ranges => {
                // The set name is optional in free format.
                let pairs = if fields.len() % 2 == 1 {
                    &fields[1..]
                } else {
                    &fields[..]
                };
                if pairs.is_empty() {
                    return Err(fail("missing row/value pairs".into()));
                }
                for pair in pairs.chunks(2) {
                    let v = number(pair[1])?;
                    if section == Section::Rhs && Some(pair[0]) == obj_name.as_deref() {
                        model.objective_constant = -v;
                        continue;
                    }
                    let i = *rows
                        .get(pair[0])
                        .ok_or_else(|| fail(format!("unknown row `{}`", pair[0])))?;
                    if section == Section::Rhs {
                        model.rows[i].rhs = v;
                    } else {
                        ranges.push((i, v));
                    }
                }
            }
            Section::Bounds => {
                let kind = fields[0];
                let (col, value) = match (kind, fields.len()) {
                    ("FR" | "MI" | "PL" | "BV", 3) => (fields[2], None),
                    ("FR" | "MI" | "PL" | "BV", 2) => (fields[1], None),
                    (_, 4) => (fields[2], Some(number(fields[3])?)),
                    (_, 3) => (fields[1], Some(number(fields[2])?)),
                    _ => return Err(fail("malformed BOUNDS line".into())),
                };
                let j = *cols.get(col).ok_or_else(|| fail(format!("unknown column `{col}`")))?;
                let c = &mut model.columns[j];
                match (kind, value) {
                    ("UP", Some(v)) => c.upper = v,
                    ("LO", Some(v)) => c.lower = v,
                    ("FX", Some(v)) => {
                        c.lower = v;
                        c.upper = v;
                    }
                    ("FR", None) => {
                        c.lower = f64::NEG_INFINITY;
                        c.upper = f64::INFINITY;
                    }
                    ("MI", None) => c.lower = f64::NEG_INFINITY,
                    ("PL", None) => c.upper = f64::INFINITY,
                    (other, _) => return Err(fail(format!("unsupported bound type `{other}`"))),
                }
            }
        }
    }
    if !seen_end {
        return Err(Error::Mps {
            line: text.lines().count(),
            reason: "missing ENDATA".into(),
        });
    }
    for (row, t) in model.rows.iter_mut().zip(terms) {
        row.terms = t;
    }
    for (i, r) in ranges {
        let row = model.rows[i].clone();
        let (lo, hi) = match row.sense {
            Sense::Le => (row.rhs - r.abs(), row.rhs),
            Sense::Ge => (row.rhs, row.rhs + r.abs()),
            Sense::Eq if r >= 0.0 => (row.rhs, row.rhs + r),
            Sense::Eq => (row.rhs + r, row.rhs),
        };
        model.rows[i].sense = Sense::Ge;
        model.rows[i].rhs = lo;
        model.add_row(format!("{}_range", row.name), row.family, row.terms, Sense::Le, hi);
    }
    Ok(model)
}

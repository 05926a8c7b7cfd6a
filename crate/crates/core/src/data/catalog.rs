//! Storage technology catalog in a flat `[record]` / `key = value unit` format.
//!
//! ```text
//! # comment
//! [B]
//! eta_c = 0.83
//! cost_energy = 400 EUR/kWh
//! energy_ceiling = 5 MWh
//! dod_min = 15 %
//! ```
//!
//! Values without a unit are taken in internal units (k€, MW, MWh).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::EssSpec;
use crate::error::{Error, Result};

pub type Catalog = BTreeMap<String, EssSpec>;

const CASE_STUDY: &str = include_str!("../../data/case_study.cat");
const APPENDIX: &str = include_str!("../../data/appendix.cat");

#[derive(Clone, Copy, Debug)]
enum Quantity {
    Fraction,
    Plain,
    EnergyCost,
    PowerCost,
    Energy,
    Power,
}

const FIELDS: [(&str, Quantity); 12] = [
    ("eta_c", Quantity::Fraction),
    ("eta_d", Quantity::Fraction),
    ("cost_energy", Quantity::EnergyCost),
    ("cost_power", Quantity::PowerCost),
    ("om_energy", Quantity::EnergyCost),
    ("om_power", Quantity::PowerCost),
    ("energy_ceiling", Quantity::Energy),
    ("power_ceiling", Quantity::Power),
    ("crate_ceiling", Quantity::Plain),
    ("dod_min", Quantity::Fraction),
    ("cycle_life", Quantity::Plain),
    ("resale_factor", Quantity::Fraction),
];

fn unit_factor(q: Quantity, unit: &str) -> Option<f64> {
    let unit = unit.trim_end_matches("/yr");
    match (q, unit) {
        (_, "") => Some(1.0),
        (Quantity::Fraction | Quantity::Plain, "-") => Some(1.0),
        (Quantity::Fraction, "%") => Some(0.01),
        // 1 €/kWh == 1 k€/MWh.
        (Quantity::EnergyCost, "kEUR/MWh" | "EUR/kWh") => Some(1.0),
        (Quantity::EnergyCost, "EUR/MWh") => Some(1e-3),
        (Quantity::PowerCost, "kEUR/MW" | "EUR/kW") => Some(1.0),
        (Quantity::PowerCost, "EUR/MW") => Some(1e-3),
        (Quantity::Energy, "MWh") => Some(1.0),
        (Quantity::Energy, "kWh") => Some(1e-3),
        (Quantity::Power, "MW") => Some(1.0),
        (Quantity::Power, "kW") => Some(1e-3),
        _ => None,
    }
}

pub fn load_catalog(path: impl AsRef<Path>) -> Result<Catalog> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading catalog {}", path.display()), e))?;
    parse_catalog(&text)
}

/// The B/S/F technologies of the case study.
pub fn case_study_catalog() -> Catalog {
    parse_catalog(CASE_STUDY).expect("bundled catalog is valid")
}

/// Five-technology survey catalog.
pub fn appendix_catalog() -> Catalog {
    parse_catalog(APPENDIX).expect("bundled catalog is valid")
}

pub fn parse_catalog(text: &str) -> Result<Catalog> {
    let mut records: Vec<(String, BTreeMap<&'static str, f64>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if name.is_empty() {
                return Err(Error::config(format!("catalog line {line_no}: empty record name")));
            }
            if records.iter().any(|(n, _)| n == name) {
                return Err(Error::config(format!(
                    "catalog line {line_no}: duplicate record `{name}`"
                )));
            }
            records.push((name.to_string(), BTreeMap::new()));
            continue;
        }
        let Some((record, fields)) = records.last_mut() else {
            return Err(Error::config(format!(
                "catalog line {line_no}: field outside of a [record]"
            )));
        };
        let (key, rest) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("catalog line {line_no}: expected `key = value`")))?;
        let key = key.trim();
        let invalid = |reason: String| Error::InvalidField {
            record: record.clone(),
            field: key.to_string(),
            reason,
        };
        let (field, quantity) = FIELDS
            .iter()
            .find(|(f, _)| *f == key)
            .copied()
            .ok_or_else(|| invalid("is not a known field".into()))?;
        let mut parts = rest.split_whitespace();
        let value_str = parts.next().ok_or_else(|| invalid("has no value".into()))?;
        let unit = parts.next().unwrap_or("");
        if parts.next().is_some() {
            return Err(invalid("has trailing text".into()));
        }
        let value: f64 = value_str
            .parse()
            .map_err(|_| invalid(format!("value `{value_str}` is not a number")))?;
        let factor = unit_factor(quantity, unit).ok_or_else(|| invalid(format!("unit `{unit}` not accepted")))?;
        if fields.insert(field, value * factor).is_some() {
            return Err(invalid("given twice".into()));
        }
    }

    let mut catalog = Catalog::new();
    for (name, fields) in records {
        let get = |field: &'static str| {
            fields.get(field).copied().ok_or_else(|| Error::MissingField {
                record: name.clone(),
                field,
            })
        };
        let spec = EssSpec {
            name: name.clone(),
            eta_c: get("eta_c")?,
            eta_d: get("eta_d")?,
            cost_energy: get("cost_energy")?,
            cost_power: get("cost_power")?,
            om_energy: get("om_energy")?,
            om_power: get("om_power")?,
            energy_ceiling: get("energy_ceiling")?,
            power_ceiling: get("power_ceiling")?,
            crate_ceiling: get("crate_ceiling")?,
            dod_min_frac: get("dod_min")?,
            cycle_life: get("cycle_life")?,
            resale_factor: get("resale_factor")?,
        };
        spec.validate()?;
        catalog.insert(name, spec);
    }
    Ok(catalog)
}

/// Render a catalog in internal units; `parse_catalog` reads it back exactly.
pub fn write_catalog(catalog: &Catalog) -> String {
    let mut out = String::new();
    for spec in catalog.values() {
        let _ = writeln!(out, "[{}]", spec.name);
        for (key, value) in [
            ("eta_c", spec.eta_c),
            ("eta_d", spec.eta_d),
            ("cost_energy", spec.cost_energy),
            ("cost_power", spec.cost_power),
            ("om_energy", spec.om_energy),
            ("om_power", spec.om_power),
            ("energy_ceiling", spec.energy_ceiling),
            ("power_ceiling", spec.power_ceiling),
            ("crate_ceiling", spec.crate_ceiling),
            ("dod_min", spec.dod_min_frac),
            ("cycle_life", spec.cycle_life),
            ("resale_factor", spec.resale_factor),
        ] {
            let _ = writeln!(out, "{key} = {value}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn appendix_li_ion_converts_to_internal_units() {
        let cat = appendix_catalog();
        let li = &cat["li-ion"];
        assert_eq!(li.eta_c, 0.83);
        assert_eq!(li.eta_d, 0.88);
        assert_eq!(li.cost_energy, 400.0);
        assert_eq!(li.cost_power, 800.0);
        assert_eq!(li.energy_ceiling, 40.0);
        assert_eq!(li.power_ceiling, 40.0);
        let sc = &cat["supercap"];
        assert_eq!((sc.eta_c, sc.eta_d), (0.95, 0.97));
        assert_eq!(cat.len(), 5);
    }

    #[test]
    fn case_study_values() {
        let cat = case_study_catalog();
        let b = &cat["B"];
        assert_eq!(b.cost_energy, 900.0);
        assert_eq!(b.cost_power, 1590.0);
        assert_eq!(b.crate_ceiling, 3.0);
        assert!((b.dod_min_frac - 0.15).abs() < 1e-15);
        assert_eq!(cat["S"].energy_ceiling, 0.2);
        assert_eq!(cat["F"].eta_d, 0.93);
        assert_eq!(
            [&cat["B"], &cat["S"], &cat["F"]].map(|e| e.power_ceiling),
            [10.0, 30.0, 20.0]
        );
    }

    #[test]
    fn zero_efficiency_is_rejected() {
        let text = CASE_STUDY.replacen("eta_c = 0.83", "eta_c = 0", 1);
        match parse_catalog(&text) {
            Err(Error::InvalidField { record, field, .. }) => {
                assert_eq!(record, "B");
                assert_eq!(field, "eta_c");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_named() {
        let text = "[x]\neta_c = 0.9\n";
        match parse_catalog(text) {
            Err(Error::MissingField { record, field }) => {
                assert_eq!(record, "x");
                assert_eq!(field, "eta_d");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_unit_is_rejected() {
        let text = CASE_STUDY.replacen("5 MWh", "5 GJ", 1);
        assert!(matches!(parse_catalog(&text), Err(Error::InvalidField { .. })));
    }

    #[test]
    fn written_catalog_reads_back() {
        let cat = appendix_catalog();
        assert_eq!(parse_catalog(&write_catalog(&cat)).unwrap(), cat);
    }
}

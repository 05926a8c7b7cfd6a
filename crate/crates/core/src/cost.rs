//! Total-cost-of-ownership objective and the post-solve cost audit.
//!
//! All money is in k€, power in MW and energy in MWh. Costs accrued over the
//! synthetic period are scaled to a year by `365 / T_syn`; yearly costs are
//! discounted over the project life with the annuity factor
//! `N = sum_{y=1..Y} (1 + r)^-y`. Fixed OM rates and grid charges are already
//! yearly and are discounted without annualization.

use serde::{Deserialize, Serialize};

use crate::data::{Horizon, SystemConfig};
use crate::error::{Error, Result};
use crate::model::{Entity, ModelInstance, RowFamily, Sense, Series, VarKind};
use crate::scenario::ScenarioModel;

/// Present value of one unit paid at the end of each year for `years` years.
pub fn npv_factor(discount_rate: f64, years: u32) -> f64 {
    (1..=years).map(|y| (1.0 + discount_rate).powi(-(y as i32))).sum()
}

/// Scalar factors shared by objective construction and the audit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostFactors {
    /// Annuity factor for yearly costs.
    pub npv: f64,
    /// Discount applied to the end-of-life resale value.
    pub end_of_life: f64,
    /// Synthetic period to year.
    pub annualization: f64,
    pub tau_hours: f64,
    pub years: f64,
}

impl CostFactors {
    pub fn new(horizon: &Horizon) -> Self {
        CostFactors {
            npv: npv_factor(horizon.discount_rate, horizon.years),
            end_of_life: (1.0 + horizon.discount_rate).powi(-(horizon.years as i32)),
            annualization: 365.0 / horizon.synthetic_days as f64,
            tau_hours: horizon.tau_hours(),
            years: horizon.years as f64,
        }
    }
}

/// Energy cost, OM and grid charges.
pub fn objective_opex(model: &mut ModelInstance, series: &Series, config: &SystemConfig) {
    let f = CostFactors::new(&config.horizon);
    let grid = &config.sources.grid;
    let energy = f.npv * f.annualization * f.tau_hours;
    for (k, &price) in series.price.iter().enumerate() {
        let imp = model.expect_col(VarKind::GridImport, Entity::Grid, Some(k));
        let exp = model.expect_col(VarKind::GridExport, Entity::Grid, Some(k));
        model.add_cost(imp, energy * price);
        model.add_cost(exp, -energy * grid.f_sell * price);
    }
    for (i, e) in config.storage.iter().enumerate() {
        let ent = Entity::Ess(i);
        let pcap = model.expect_col(VarKind::EssPowerCap, ent, None);
        let thru = model.expect_col(VarKind::Throughput, ent, None);
        model.add_cost(pcap, f.npv * e.om_power);
        model.add_cost(thru, f.npv * f.annualization * e.om_energy);
    }
    let pv = model.expect_col(VarKind::SourceCap, Entity::Pv, None);
    model.add_cost(pv, f.npv * config.sources.pv.om_per_mw_yr);
    let gcap = model.expect_col(VarKind::SourceCap, Entity::Grid, None);
    model.add_cost(gcap, f.npv * grid.var_per_mw);
    let peak = model.expect_col(VarKind::GridPeak, Entity::Grid, None);
    model.add_cost(peak, f.npv * grid.peak_per_mw);
    model.objective_constant += f.npv * (grid.conn_fixed + grid.tran_fixed);
}

/// Storage capital cost in max form through an epigraph column, plus PV.
pub fn objective_capex(model: &mut ModelInstance, config: &SystemConfig) {
    for (i, e) in config.storage.iter().enumerate() {
        let ent = Entity::Ess(i);
        let cap = model.expect_col(VarKind::CapexEpigraph, ent, None);
        let ecap = model.expect_col(VarKind::EnergyCap, ent, None);
        let pcap = model.expect_col(VarKind::EssPowerCap, ent, None);
        let name = e.name.split_whitespace().collect::<Vec<_>>().join("_");
        model.add_row(
            format!("capex_e[{name}]"),
            RowFamily::Capex,
            [(cap, 1.0), (ecap, -e.cost_energy)],
            Sense::Ge,
            0.0,
        );
        model.add_row(
            format!("capex_p[{name}]"),
            RowFamily::Capex,
            [(cap, 1.0), (pcap, -e.cost_power)],
            Sense::Ge,
            0.0,
        );
        model.add_cost(cap, 1.0);
    }
    let pv = model.expect_col(VarKind::SourceCap, Entity::Pv, None);
    model.add_cost(pv, config.sources.pv.cost_per_mw);
}

/// Discounted end-of-life value, subtracted from the objective.
///
/// Storage keeps the share of its energy capital matching its unused cycle
/// life; lifetime throughput is the synthetic-period throughput scaled to
/// the full project life.
pub fn objective_resale(model: &mut ModelInstance, config: &SystemConfig) {
    let f = CostFactors::new(&config.horizon);
    for (i, e) in config.storage.iter().enumerate() {
        let ent = Entity::Ess(i);
        let ecap = model.expect_col(VarKind::EnergyCap, ent, None);
        let thru = model.expect_col(VarKind::Throughput, ent, None);
        let value = f.end_of_life * e.resale_factor * e.cost_energy;
        model.add_cost(ecap, -value);
        model.add_cost(thru, value * f.years * f.annualization / e.cycle_life);
    }
    let pv = &config.sources.pv;
    let col = model.expect_col(VarKind::SourceCap, Entity::Pv, None);
    model.add_cost(col, -f.end_of_life * pv.resale_factor * pv.cost_per_mw);
}

/// Per-storage entries of a [`CostBreakdown`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssCosts {
    pub name: String,
    /// k€.
    pub capex: f64,
    /// Discounted end-of-life value, k€.
    pub resale: f64,
    /// Energy throughput over the synthetic period, MWh.
    pub throughput: f64,
}

/// Discounted grid connection charges, k€.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GridCharges {
    pub conn: f64,
    pub tran: f64,
    pub var: f64,
    pub peak: f64,
}

impl GridCharges {
    pub fn sum(&self) -> f64 {
        self.conn + self.tran + self.var + self.peak
    }
}

/// Cost and energy report of one design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// k€; equals `capex + opex_npv - eol_value`.
    pub total: f64,
    pub capex: f64,
    pub opex_npv: f64,
    pub eol_value: f64,
    /// Grid-side export over the synthetic period, MWh.
    pub energy_sold: f64,
    /// Grid-side import over the synthetic period, MWh.
    pub energy_purchased: f64,
    pub ess: Vec<EssCosts>,
    pub pv_capex: f64,
    pub pv_resale: f64,
    /// Discounted net energy cost, k€.
    pub energy_cost: f64,
    /// Discounted fixed OM of storage power and PV, k€.
    pub om_fixed: f64,
    /// Discounted throughput OM, k€.
    pub om_throughput: f64,
    pub grid: GridCharges,
    /// Peak grid offtake, MW.
    pub peak_power: f64,
}

impl CostBreakdown {
    pub const CSV_HEADER: [&'static str; 6] = [
        "total_keur",
        "capex_keur",
        "opex_keur",
        "eol_keur",
        "e_sold_mwh",
        "e_purchased_mwh",
    ];

    /// Cost and energy columns in results-table order.
    pub fn csv_fields(&self) -> [f64; 6] {
        [
            self.total,
            self.capex,
            self.opex_npv,
            self.eol_value,
            self.energy_sold,
            self.energy_purchased,
        ]
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn labelled(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("capex", self.capex),
            ("energy", self.energy_cost),
            ("om_fixed", self.om_fixed),
            ("om_throughput", self.om_throughput),
            ("grid", self.grid.sum()),
            ("eol", self.eol_value),
            ("total", self.total),
        ]
    }
}

/// Where the audit takes the quantities the model represents by epigraphs.
#[derive(Clone, Copy, PartialEq)]
enum Epigraphs {
    /// Recompute from dispatch: `max` capex, peak import, summed `|dE|`.
    FromDispatch,
    /// Read the epigraph columns.
    FromColumns,
}

fn value(model: &ModelInstance, x: &[f64], kind: VarKind, ent: Entity, step: Option<usize>) -> f64 {
    model.col(kind, ent, step).map_or(0.0, |j| x[j])
}

fn evaluate(
    model: &ModelInstance,
    x: &[f64],
    series: &Series,
    config: &SystemConfig,
    source: Epigraphs,
) -> CostBreakdown {
    let f = CostFactors::new(&config.horizon);
    let grid = &config.sources.grid;
    let pv = &config.sources.pv;
    let steps = series.len();

    let mut energy_yearly = 0.0;
    let mut sold = 0.0;
    let mut bought = 0.0;
    let mut peak_dispatch: f64 = 0.0;
    for (k, &price) in series.price.iter().enumerate() {
        let imp = value(model, x, VarKind::GridImport, Entity::Grid, Some(k));
        let exp = value(model, x, VarKind::GridExport, Entity::Grid, Some(k));
        energy_yearly += f.tau_hours * (price * imp - grid.f_sell * price * exp);
        bought += f.tau_hours * imp;
        sold += f.tau_hours * exp;
        peak_dispatch = peak_dispatch.max(grid.eta_c * imp);
    }
    energy_yearly *= f.annualization;
    let peak_power = match source {
        Epigraphs::FromDispatch => peak_dispatch,
        Epigraphs::FromColumns => value(model, x, VarKind::GridPeak, Entity::Grid, None),
    };

    let p_grid = value(model, x, VarKind::SourceCap, Entity::Grid, None);
    let p_pv = value(model, x, VarKind::SourceCap, Entity::Pv, None);
    let mut om_fixed_yearly = pv.om_per_mw_yr * p_pv;
    let mut om_thru_yearly = 0.0;
    let mut ess = Vec::with_capacity(config.storage.len());
    for (i, e) in config.storage.iter().enumerate() {
        let ent = Entity::Ess(i);
        let e_max = value(model, x, VarKind::EnergyCap, ent, None);
        let p_max = value(model, x, VarKind::EssPowerCap, ent, None);
        let (capex, throughput) = match source {
            Epigraphs::FromDispatch => {
                let swing: f64 = (0..steps)
                    .map(|k| {
                        let a = value(model, x, VarKind::Soe, ent, Some(k));
                        let b = value(model, x, VarKind::Soe, ent, Some(k + 1));
                        (b - a).abs()
                    })
                    .sum();
                ((e.cost_energy * e_max).max(e.cost_power * p_max), swing)
            }
            Epigraphs::FromColumns => (
                value(model, x, VarKind::CapexEpigraph, ent, None),
                value(model, x, VarKind::Throughput, ent, None),
            ),
        };
        om_fixed_yearly += e.om_power * p_max;
        om_thru_yearly += e.om_energy * f.annualization * throughput;
        let lifetime_throughput = f.years * f.annualization * throughput;
        let resale = f.end_of_life
            * e.resale_factor
            * (e.cost_energy * e_max - e.cost_energy * lifetime_throughput / e.cycle_life);
        ess.push(EssCosts {
            name: e.name.clone(),
            capex,
            resale,
            throughput,
        });
    }

    let charges = GridCharges {
        conn: f.npv * grid.conn_fixed,
        tran: f.npv * grid.tran_fixed,
        var: f.npv * grid.var_per_mw * p_grid,
        peak: f.npv * grid.peak_per_mw * peak_power,
    };
    let energy_cost = f.npv * energy_yearly;
    let om_fixed = f.npv * om_fixed_yearly;
    let om_throughput = f.npv * om_thru_yearly;
    let pv_capex = pv.cost_per_mw * p_pv;
    let pv_resale = f.end_of_life * pv.resale_factor * pv.cost_per_mw * p_pv;
    let capex = ess.iter().map(|c| c.capex).sum::<f64>() + pv_capex;
    let opex_npv = energy_cost + om_fixed + om_throughput + charges.sum();
    let eol_value = ess.iter().map(|c| c.resale).sum::<f64>() + pv_resale;
    CostBreakdown {
        total: capex + opex_npv - eol_value,
        capex,
        opex_npv,
        eol_value,
        energy_sold: sold,
        energy_purchased: bought,
        ess,
        pv_capex,
        pv_resale,
        energy_cost,
        om_fixed,
        om_throughput,
        grid: charges,
        peak_power,
    }
}

/// Cost report of the primal point `x`, computed from dispatch and capacities
/// without reference to the objective coefficients.
pub fn breakdown(model: &ModelInstance, x: &[f64], series: &Series, config: &SystemConfig) -> CostBreakdown {
    evaluate(model, x, series, config, Epigraphs::FromDispatch)
}

/// Recompute every cost term of `x` and check it against the solver's
/// objective value. Fails with per-term deltas against the epigraph columns
/// when the two disagree by more than `1e-6` relative.
pub fn audit(
    model: &ModelInstance,
    x: &[f64],
    solver_objective: f64,
    scenario: &ScenarioModel,
    config: &SystemConfig,
) -> Result<CostBreakdown> {
    let series = Series::from_scenario(scenario);
    audit_series(model, x, solver_objective, &series, config)
}

/// [`audit`] over already flattened series.
pub fn audit_series(
    model: &ModelInstance,
    x: &[f64],
    solver_objective: f64,
    series: &Series,
    config: &SystemConfig,
) -> Result<CostBreakdown> {
    let report = evaluate(model, x, series, config, Epigraphs::FromDispatch);
    let tol = 1e-6 * solver_objective.abs().max(1.0);
    if (report.total - solver_objective).abs() <= tol {
        return Ok(report);
    }
    let linear = evaluate(model, x, series, config, Epigraphs::FromColumns);
    let deltas = report
        .labelled()
        .into_iter()
        .zip(linear.labelled())
        .filter(|((_, a), (_, b))| a != b)
        .map(|((name, a), (_, b))| format!("{name} {:+.6e}", a - b))
        .collect::<Vec<_>>()
        .join(", ");
    Err(Error::AuditMismatch {
        recomputed: report.total,
        solver: solver_objective,
        deltas: if deltas.is_empty() {
            "no epigraph slack; objective coefficients disagree with the cost terms".into()
        } else {
            format!("dispatch minus epigraph: {deltas}")
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{case_study_catalog, make_demo_dataset};

    #[test]
    fn annuity_factor() {
        assert_eq!(npv_factor(0.0, 20), 20.0);
        assert!((100.0 * npv_factor(0.04, 2) - 188.6095).abs() < 1e-4);
        assert_eq!(npv_factor(0.04, 0), 0.0);
    }

    fn setup(names: &[&str], days: usize) -> (SystemConfig, ScenarioModel, ModelInstance) {
        let cat = case_study_catalog();
        let mut c = SystemConfig::case_study(names.iter().map(|n| cat[*n].clone()).collect());
        c.horizon = Horizon::new(60, days, 20, 0.04).unwrap();
        let s = ScenarioModel::verbatim(make_demo_dataset(11, days)).unwrap();
        let m = crate::model::build(&c, &s).unwrap();
        (c, s, m)
    }

    #[test]
    fn storage_capex_takes_the_larger_rate() {
        let (c, s, m) = setup(&["B"], 1);
        let mut x = vec![0.0; m.n_cols()];
        let e = Entity::Ess(0);
        x[m.expect_col(VarKind::EnergyCap, e, None)] = 1.0;
        x[m.expect_col(VarKind::EssPowerCap, e, None)] = 0.5;
        let b = breakdown(&m, &x, &Series::from_scenario(&s), &c);
        assert_eq!(b.ess[0].capex, 900.0);
        x.iter_mut().for_each(|v| *v = 0.0);
        let b = breakdown(&m, &x, &Series::from_scenario(&s), &c);
        assert_eq!(b.ess[0].capex, 0.0);
    }

    #[test]
    fn unused_battery_resale() {
        let (c, s, m) = setup(&["B"], 1);
        let mut x = vec![0.0; m.n_cols()];
        x[m.expect_col(VarKind::EnergyCap, Entity::Ess(0), None)] = 1.0;
        let b = breakdown(&m, &x, &Series::from_scenario(&s), &c);
        let expected = 0.85 * 900.0 / 1.04f64.powi(20);
        assert!((b.ess[0].resale - expected).abs() < 1e-9);
        assert!((b.ess[0].resale - 349.136).abs() < 5e-4);
    }

    #[test]
    fn exhausted_cycle_life_has_no_resale() {
        let (mut c, s, m) = setup(&["B"], 1);
        c.storage[0].cycle_life = 10.0;
        let mut x = vec![0.0; m.n_cols()];
        let e = Entity::Ess(0);
        x[m.expect_col(VarKind::EnergyCap, e, None)] = 2.0;
        // One up-and-down swing of `daily` per synthetic day.
        let daily = 20.0 / (20.0 * 365.0);
        x[m.expect_col(VarKind::Soe, e, Some(1))] = daily;
        let b = breakdown(&m, &x, &Series::from_scenario(&s), &c);
        assert!((b.ess[0].throughput - 2.0 * daily).abs() < 1e-15);
        let expected = 0.85 * 900.0 * (2.0 - 20.0 * 365.0 * 2.0 * daily / 10.0) / 1.04f64.powi(20);
        assert!((b.ess[0].resale - expected).abs() < 1e-9);
        // Halving the swing makes lifetime throughput 20 MWh = N_c * E^max.
        x[m.expect_col(VarKind::Soe, e, Some(1))] = daily / 2.0;
        let b = breakdown(&m, &x, &Series::from_scenario(&s), &c);
        assert!(b.ess[0].resale.abs() < 1e-9);
    }

    #[test]
    fn zero_point_costs_only_fixed_grid_charges() {
        let (c, s, m) = setup(&[], 2);
        let x = vec![0.0; m.n_cols()];
        let b = audit(&m, &x, m.objective_value(&x), &s, &c).unwrap();
        assert!((b.total - npv_factor(0.04, 20) * 8.0).abs() < 1e-9);
        assert_eq!(b.capex, 0.0);
        assert_eq!(b.eol_value, 0.0);
    }

    #[test]
    fn objective_coefficients_match_the_breakdown() {
        // For a point where every epigraph is tight, the linear objective and
        // the recomputed total coincide.
        let (c, s, m) = setup(&["B", "S"], 1);
        let series = Series::from_scenario(&s);
        let mut x = vec![0.0; m.n_cols()];
        let col = |k, e, t| m.expect_col(k, e, t);
        for k in 0..24 {
            x[col(VarKind::GridImport, Entity::Grid, Some(k))] = 0.1 * (k % 5) as f64;
            x[col(VarKind::GridExport, Entity::Grid, Some(k))] = 0.05 * (k % 3) as f64;
        }
        x[col(VarKind::GridPeak, Entity::Grid, None)] = 0.95 * 0.4;
        x[col(VarKind::SourceCap, Entity::Grid, None)] = 1.2;
        x[col(VarKind::SourceCap, Entity::Pv, None)] = 0.7;
        for (i, soe) in [(0usize, [1.0, 1.5, 0.8]), (1, [0.1, 0.0, 0.05])] {
            let e = Entity::Ess(i);
            for (k, v) in soe.iter().enumerate() {
                x[col(VarKind::Soe, e, Some(k))] = *v;
            }
            for k in 3..=24 {
                x[col(VarKind::Soe, e, Some(k))] = soe[2];
            }
            let q: f64 = (0..2).map(|k| (soe[k + 1] - soe[k]).abs()).sum();
            x[col(VarKind::Throughput, e, None)] = q;
            x[col(VarKind::EnergyCap, e, None)] = 2.0;
            x[col(VarKind::EssPowerCap, e, None)] = 3.0;
            let spec = &c.storage[i];
            x[col(VarKind::CapexEpigraph, e, None)] = (2.0 * spec.cost_energy).max(3.0 * spec.cost_power);
        }
        let b = audit(&m, &x, m.objective_value(&x), &s, &c).unwrap();
        assert!((b.total - m.objective_value(&x)).abs() < 1e-9 * b.total.abs());
        assert!((b.total - (b.capex + b.opex_npv - b.eol_value)).abs() < 1e-9 * b.total.abs());
        let _ = series;
    }

    #[test]
    fn audit_flags_slack_epigraphs() {
        let (c, s, m) = setup(&["B"], 1);
        let mut x = vec![0.0; m.n_cols()];
        x[m.expect_col(VarKind::CapexEpigraph, Entity::Ess(0), None)] = 10.0;
        let err = audit(&m, &x, m.objective_value(&x), &s, &c).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("objective audit failure"), "{msg}");
        assert!(msg.contains("capex"), "{msg}");
    }

    #[test]
    fn energy_cost_scales_with_prices() {
        let (c, mut s, m) = setup(&[], 1);
        let mut x = vec![0.0; m.n_cols()];
        for k in 0..24 {
            x[m.expect_col(VarKind::GridImport, Entity::Grid, Some(k))] = 1.0 + (k % 4) as f64;
            x[m.expect_col(VarKind::GridExport, Entity::Grid, Some(k))] = 0.5 * (k % 2) as f64;
        }
        let base = breakdown(&m, &x, &Series::from_scenario(&s), &c);
        for p in s.representatives[0].price.iter_mut() {
            *p *= 2.5;
        }
        let scaled = breakdown(&m, &x, &Series::from_scenario(&s), &c);
        assert!((scaled.energy_cost - 2.5 * base.energy_cost).abs() < 1e-9 * base.energy_cost.abs());
        assert_eq!(scaled.energy_purchased, base.energy_purchased);
    }

    #[test]
    fn undiscounted_opex_is_years_times_yearly() {
        let (mut c, s, _) = setup(&[], 1);
        c.horizon.discount_rate = 0.0;
        let m = crate::model::build(&c, &s).unwrap();
        let mut x = vec![0.0; m.n_cols()];
        for k in 0..24 {
            x[m.expect_col(VarKind::GridImport, Entity::Grid, Some(k))] = 0.3;
        }
        x[m.expect_col(VarKind::SourceCap, Entity::Grid, None)] = 0.3;
        let b = breakdown(&m, &x, &Series::from_scenario(&s), &c);
        let price: f64 = s.price().iter().sum();
        let yearly = 365.0 * 0.3 * price + 6.0 + 2.0 + 20.0 * 0.3 + 9.03 * 0.95 * 0.3;
        assert!((b.opex_npv - 20.0 * yearly).abs() < 1e-9 * yearly);
    }
}

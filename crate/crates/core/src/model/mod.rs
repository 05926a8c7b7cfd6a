//! Assembly of the joint sizing and dispatch linear program.
//!
//! Power variables on the storage side are bus-side quantities (`p_e^+`,
//! `p_e^-`); grid variables are grid-side (`P_G^+`, `P_G^-`) and enter the
//! bus balance through the converter efficiencies. PV is modelled by its bus
//! injection, bounded by the capacity factor times installed capacity, so
//! curtailment is free.

mod instance;

use log::info;

use crate::cost;
use crate::data::{EssSpec, SystemConfig};
use crate::error::{Error, Result};
use crate::scenario::ScenarioModel;

pub use instance::{Column, Entity, ModelInstance, Row, RowFamily, Sense, VarKind, VariableRef};

/// Scenario profiles flattened over the synthetic period.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    /// k€/MWh.
    pub price: Vec<f64>,
    /// MW.
    pub demand_ch: Vec<f64>,
    /// MW.
    pub demand_wh: Vec<f64>,
    pub pv_cf: Vec<f64>,
}

impl Series {
    pub fn from_scenario(scenario: &ScenarioModel) -> Self {
        Series {
            price: scenario.price(),
            demand_ch: scenario.demand_ch(),
            demand_wh: scenario.demand_wh(),
            pv_cf: scenario.pv_cf(),
        }
    }

    pub fn len(&self) -> usize {
        self.price.len()
    }

    pub fn is_empty(&self) -> bool {
        self.price.is_empty()
    }
}

fn tag(name: &str) -> String {
    name.split_whitespace().collect::<Vec<_>>().join("_")
}

fn check_inputs(config: &SystemConfig, scenario: &ScenarioModel) -> Result<()> {
    config.validate()?;
    let h = &config.horizon;
    let err = |reason: String| {
        Err(Error::Build {
            stage: "inputs",
            reason,
        })
    };
    if scenario.steps_per_day() != h.steps_per_day() {
        return err(format!(
            "scenario has {} steps per day, horizon expects {}",
            scenario.steps_per_day(),
            h.steps_per_day()
        ));
    }
    if scenario.synthetic_len() != h.synthetic_days {
        return err(format!(
            "scenario spans {} days, horizon expects {}",
            scenario.synthetic_len(),
            h.synthetic_days
        ));
    }
    Ok(())
}

/// Build the full program for `config` over the scenario's synthetic period.
pub fn build(config: &SystemConfig, scenario: &ScenarioModel) -> Result<ModelInstance> {
    check_inputs(config, scenario)?;
    let series = Series::from_scenario(scenario);
    let started = std::time::Instant::now();
    let mut model = ModelInstance::new("mg_codesign");
    register_variables(&mut model, config, series.len());
    add_source_flows(&mut model, &series, config);
    add_balance(&mut model, &series, config);
    add_capacity_bounds(&mut model, config, series.len());
    add_ess_dynamics(&mut model, &config.storage, &config.horizon);
    add_crate_mccormick(&mut model, &config.storage, series.len())?;
    add_throughput(&mut model, &config.storage, series.len());
    add_peak(&mut model, config, series.len());
    cost::objective_opex(&mut model, &series, config);
    cost::objective_capex(&mut model, config);
    cost::objective_resale(&mut model, config);
    model.validate()?;
    info!(
        "built model: K={} steps, {} storage, {} columns, {} rows, {} nonzeros in {:.2?}",
        series.len(),
        config.storage.len(),
        model.n_cols(),
        model.n_rows(),
        model.nnz(),
        started.elapsed()
    );
    Ok(model)
}

/// Register every column. Design variables get their ceilings as bounds.
pub fn register_variables(model: &mut ModelInstance, config: &SystemConfig, steps: usize) {
    let inf = f64::INFINITY;
    let src = &config.sources;
    model.add_var(
        VariableRef::new(VarKind::SourceCap, Entity::Grid, None),
        "pmax[G]",
        0.0,
        src.grid.power_ceiling,
    );
    model.add_var(
        VariableRef::new(VarKind::SourceCap, Entity::Pv, None),
        "pmax[PV]",
        0.0,
        src.pv.power_ceiling,
    );
    model.add_var(
        VariableRef::new(VarKind::GridPeak, Entity::Grid, None),
        "ppeak",
        0.0,
        inf,
    );
    for (i, e) in config.storage.iter().enumerate() {
        let ent = Entity::Ess(i);
        let t = tag(&e.name);
        model.add_var(
            VariableRef::new(VarKind::EnergyCap, ent, None),
            format!("emax[{t}]"),
            0.0,
            e.energy_ceiling,
        );
        model.add_var(
            VariableRef::new(VarKind::EssPowerCap, ent, None),
            format!("pmax[{t}]"),
            0.0,
            e.power_ceiling,
        );
        model.add_var(
            VariableRef::new(VarKind::Throughput, ent, None),
            format!("thru[{t}]"),
            0.0,
            inf,
        );
        model.add_var(
            VariableRef::new(VarKind::CapexEpigraph, ent, None),
            format!("capex[{t}]"),
            0.0,
            inf,
        );
    }
    for k in 0..steps {
        let s = Some(k);
        model.add_var(
            VariableRef::new(VarKind::GridImport, Entity::Grid, s),
            format!("pg_imp[{k}]"),
            0.0,
            inf,
        );
        model.add_var(
            VariableRef::new(VarKind::GridExport, Entity::Grid, s),
            format!("pg_exp[{k}]"),
            0.0,
            inf,
        );
        model.add_var(
            VariableRef::new(VarKind::PvBus, Entity::Pv, s),
            format!("ppv[{k}]"),
            0.0,
            inf,
        );
        for (i, e) in config.storage.iter().enumerate() {
            let ent = Entity::Ess(i);
            let t = tag(&e.name);
            model.add_var(
                VariableRef::new(VarKind::EssDischarge, ent, s),
                format!("pdis[{t}][{k}]"),
                0.0,
                inf,
            );
            model.add_var(
                VariableRef::new(VarKind::EssCharge, ent, s),
                format!("pch[{t}][{k}]"),
                0.0,
                inf,
            );
            model.add_var(
                VariableRef::new(VarKind::Soe, ent, s),
                format!("soe[{t}][{k}]"),
                0.0,
                inf,
            );
            model.add_var(
                VariableRef::new(VarKind::CRate, ent, s),
                format!("rate[{t}][{k}]"),
                0.0,
                e.crate_ceiling,
            );
            model.add_var(
                VariableRef::new(VarKind::Swing, ent, s),
                format!("swing[{t}][{k}]"),
                0.0,
                inf,
            );
        }
    }
    for (i, e) in config.storage.iter().enumerate() {
        model.add_var(
            VariableRef::new(VarKind::Soe, Entity::Ess(i), Some(steps)),
            format!("soe[{}][{steps}]", tag(&e.name)),
            0.0,
            inf,
        );
    }
}

/// PV injection limited by availability: `p_PV,k <= eta_PV * cf_k * P_PV^max`.
pub fn add_source_flows(model: &mut ModelInstance, series: &Series, config: &SystemConfig) {
    let eta = config.sources.pv.eta;
    let cap = model.expect_col(VarKind::SourceCap, Entity::Pv, None);
    for (k, &cf) in series.pv_cf.iter().enumerate() {
        let p = model.expect_col(VarKind::PvBus, Entity::Pv, Some(k));
        model.add_row(
            format!("pv_avail[{k}]"),
            RowFamily::SourceFlow,
            [(p, 1.0), (cap, -eta * cf)],
            Sense::Le,
            0.0,
        );
    }
}

/// Bus power balance at every step.
pub fn add_balance(model: &mut ModelInstance, series: &Series, config: &SystemConfig) {
    let grid = &config.sources.grid;
    let d = config.demand_eta;
    for k in 0..series.len() {
        let s = Some(k);
        let mut terms = vec![
            (model.expect_col(VarKind::GridImport, Entity::Grid, s), grid.eta_c),
            (
                model.expect_col(VarKind::GridExport, Entity::Grid, s),
                -1.0 / grid.eta_d,
            ),
            (model.expect_col(VarKind::PvBus, Entity::Pv, s), 1.0),
        ];
        for i in 0..config.storage.len() {
            terms.push((model.expect_col(VarKind::EssDischarge, Entity::Ess(i), s), 1.0));
            terms.push((model.expect_col(VarKind::EssCharge, Entity::Ess(i), s), -1.0));
        }
        let demand = series.demand_ch[k] / d.ch + series.demand_wh[k] / d.wh;
        model.add_row(format!("bal[{k}]"), RowFamily::Balance, terms, Sense::Eq, demand);
    }
}

/// Operational limits coupled to installed capacities.
pub fn add_capacity_bounds(model: &mut ModelInstance, config: &SystemConfig, steps: usize) {
    let grid = &config.sources.grid;
    let gcap = model.expect_col(VarKind::SourceCap, Entity::Grid, None);
    for k in 0..steps {
        let s = Some(k);
        let imp = model.expect_col(VarKind::GridImport, Entity::Grid, s);
        let exp = model.expect_col(VarKind::GridExport, Entity::Grid, s);
        model.add_row(
            format!("grid_imp_cap[{k}]"),
            RowFamily::Bounds,
            [(imp, grid.eta_c), (gcap, -1.0)],
            Sense::Le,
            0.0,
        );
        model.add_row(
            format!("grid_exp_cap[{k}]"),
            RowFamily::Bounds,
            [(exp, 1.0 / grid.eta_d), (gcap, -1.0)],
            Sense::Le,
            0.0,
        );
    }
    for (i, e) in config.storage.iter().enumerate() {
        let ent = Entity::Ess(i);
        let t = tag(&e.name);
        let pcap = model.expect_col(VarKind::EssPowerCap, ent, None);
        let ecap = model.expect_col(VarKind::EnergyCap, ent, None);
        for k in 0..steps {
            let s = Some(k);
            let dis = model.expect_col(VarKind::EssDischarge, ent, s);
            let ch = model.expect_col(VarKind::EssCharge, ent, s);
            model.add_row(
                format!("dis_cap[{t}][{k}]"),
                RowFamily::Bounds,
                [(dis, 1.0), (pcap, -1.0)],
                Sense::Le,
                0.0,
            );
            model.add_row(
                format!("ch_cap[{t}][{k}]"),
                RowFamily::Bounds,
                [(ch, 1.0), (pcap, -1.0)],
                Sense::Le,
                0.0,
            );
        }
        for k in 0..=steps {
            let soe = model.expect_col(VarKind::Soe, ent, Some(k));
            model.add_row(
                format!("soe_cap[{t}][{k}]"),
                RowFamily::Bounds,
                [(soe, 1.0), (ecap, -1.0)],
                Sense::Le,
                0.0,
            );
        }
    }
}

/// State-of-energy recursion, depth-of-discharge floor and periodicity.
pub fn add_ess_dynamics(model: &mut ModelInstance, storage: &[EssSpec], horizon: &crate::data::Horizon) {
    let tau = horizon.tau_hours();
    for (i, e) in storage.iter().enumerate() {
        let ent = Entity::Ess(i);
        let t = tag(&e.name);
        let discharge_coeff = tau / e.eta_d;
        let charge_coeff = tau * e.eta_c;
        let steps = (0..)
            .take_while(|&k| model.col(VarKind::Soe, ent, Some(k + 1)).is_some())
            .count();
        for k in 0..steps {
            let s = Some(k);
            let now = model.expect_col(VarKind::Soe, ent, s);
            let next = model.expect_col(VarKind::Soe, ent, Some(k + 1));
            let dis = model.expect_col(VarKind::EssDischarge, ent, s);
            let ch = model.expect_col(VarKind::EssCharge, ent, s);
            model.add_row(
                format!("dyn[{t}][{k}]"),
                RowFamily::Dynamics,
                [(next, 1.0), (now, -1.0), (dis, discharge_coeff), (ch, -charge_coeff)],
                Sense::Eq,
                0.0,
            );
        }
        if e.dod_min_frac > 0.0 {
            let ecap = model.expect_col(VarKind::EnergyCap, ent, None);
            for k in 0..=steps {
                let soe = model.expect_col(VarKind::Soe, ent, Some(k));
                model.add_row(
                    format!("dod[{t}][{k}]"),
                    RowFamily::Bounds,
                    [(soe, 1.0), (ecap, -e.dod_min_frac)],
                    Sense::Ge,
                    0.0,
                );
            }
        }
        let first = model.expect_col(VarKind::Soe, ent, Some(0));
        let last = model.expect_col(VarKind::Soe, ent, Some(steps));
        model.add_row(
            format!("period[{t}]"),
            RowFamily::Periodicity,
            [(last, 1.0), (first, -1.0)],
            Sense::Ge,
            0.0,
        );
    }
}

/// Swing epigraph `q >= |E_{k+1} - E_k|` and the McCormick envelope of
/// `q = E^max * R` over `[0, E^M] x [0, R^M]`.
pub fn add_crate_mccormick(model: &mut ModelInstance, storage: &[EssSpec], steps: usize) -> Result<()> {
    for (i, e) in storage.iter().enumerate() {
        if !(e.energy_ceiling > 0.0 && e.crate_ceiling > 0.0) {
            return Err(Error::Build {
                stage: "c-rate envelope",
                reason: format!(
                    "storage `{}` needs positive energy and C-rate ceilings (got {} and {})",
                    e.name, e.energy_ceiling, e.crate_ceiling
                ),
            });
        }
        let ent = Entity::Ess(i);
        let t = tag(&e.name);
        let ecap = model.expect_col(VarKind::EnergyCap, ent, None);
        let (em, rm) = (e.energy_ceiling, e.crate_ceiling);
        for k in 0..steps {
            let s = Some(k);
            let q = model.expect_col(VarKind::Swing, ent, s);
            let r = model.expect_col(VarKind::CRate, ent, s);
            let now = model.expect_col(VarKind::Soe, ent, s);
            let next = model.expect_col(VarKind::Soe, ent, Some(k + 1));
            model.add_row(
                format!("swing_up[{t}][{k}]"),
                RowFamily::Swing,
                [(q, 1.0), (next, -1.0), (now, 1.0)],
                Sense::Ge,
                0.0,
            );
            model.add_row(
                format!("swing_dn[{t}][{k}]"),
                RowFamily::Swing,
                [(q, 1.0), (next, 1.0), (now, -1.0)],
                Sense::Ge,
                0.0,
            );
            model.add_row(
                format!("mcc_lo[{t}][{k}]"),
                RowFamily::McCormick,
                [(q, 1.0), (r, -em), (ecap, -rm)],
                Sense::Ge,
                -em * rm,
            );
            model.add_row(
                format!("mcc_r[{t}][{k}]"),
                RowFamily::McCormick,
                [(q, 1.0), (r, -em)],
                Sense::Le,
                0.0,
            );
            model.add_row(
                format!("mcc_e[{t}][{k}]"),
                RowFamily::McCormick,
                [(q, 1.0), (ecap, -rm)],
                Sense::Le,
                0.0,
            );
        }
    }
    Ok(())
}

/// `Q_e = sum_k q_e,k`.
pub fn add_throughput(model: &mut ModelInstance, storage: &[EssSpec], steps: usize) {
    for (i, e) in storage.iter().enumerate() {
        let ent = Entity::Ess(i);
        let mut terms = vec![(model.expect_col(VarKind::Throughput, ent, None), 1.0)];
        terms.extend((0..steps).map(|k| (model.expect_col(VarKind::Swing, ent, Some(k)), -1.0)));
        model.add_row(
            format!("thru[{}]", tag(&e.name)),
            RowFamily::Throughput,
            terms,
            Sense::Eq,
            0.0,
        );
    }
}

/// Peak offtake epigraph on the import delivered through the grid converter.
pub fn add_peak(model: &mut ModelInstance, config: &SystemConfig, steps: usize) {
    let eta = config.sources.grid.eta_c;
    let peak = model.expect_col(VarKind::GridPeak, Entity::Grid, None);
    for k in 0..steps {
        let imp = model.expect_col(VarKind::GridImport, Entity::Grid, Some(k));
        model.add_row(
            format!("peak[{k}]"),
            RowFamily::Peak,
            [(peak, 1.0), (imp, -eta)],
            Sense::Ge,
            0.0,
        );
    }
}

/// Outcome of [`polish_complementarity`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PolishReport {
    /// Storage steps where simultaneous charge and discharge was removed.
    pub resolved: usize,
    /// Steps left with both flows positive (no curtailable PV to absorb the
    /// recovered power).
    pub unresolved: usize,
}

/// Remove simultaneous charge and discharge of the same storage unit.
///
/// Cancelling matched amounts of charge and discharge keeps the state of
/// energy unchanged and frees bus power, which is absorbed by curtailing PV.
/// None of the touched columns carries cost, so the objective is unchanged;
/// the result is an alternative optimum whenever `x` was optimal.
pub fn polish_complementarity(model: &ModelInstance, config: &SystemConfig, x: &mut [f64]) -> PolishReport {
    const EPS: f64 = 1e-9;
    let tau = config.horizon.tau_hours();
    let mut report = PolishReport::default();
    for k in 0.. {
        let Some(pv) = model.col(VarKind::PvBus, Entity::Pv, Some(k)) else {
            break;
        };
        for (i, e) in config.storage.iter().enumerate() {
            let ent = Entity::Ess(i);
            let dis = model.expect_col(VarKind::EssDischarge, ent, Some(k));
            let ch = model.expect_col(VarKind::EssCharge, ent, Some(k));
            if x[dis] <= EPS || x[ch] <= EPS {
                continue;
            }
            let gain = tau * e.eta_c;
            let loss = tau / e.eta_d;
            // Cancel `y` of discharge against `y * loss / gain` of charge.
            let mut y = x[dis].min(x[ch] * gain / loss);
            let freed = y * (loss / gain - 1.0);
            if freed > x[pv] {
                y *= x[pv] / freed;
            }
            let freed = y * (loss / gain - 1.0);
            x[dis] -= y;
            x[ch] -= y * loss / gain;
            x[pv] -= freed;
            for j in [dis, ch, pv] {
                if x[j] < 0.0 {
                    x[j] = 0.0;
                }
            }
            if x[dis] * x[ch] <= 1e-12 {
                report.resolved += 1;
            } else {
                report.unresolved += 1;
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{case_study_catalog, make_demo_dataset, Horizon};

    fn config(names: &[&str], days: usize) -> SystemConfig {
        let cat = case_study_catalog();
        let mut c = SystemConfig::case_study(names.iter().map(|n| cat[*n].clone()).collect());
        c.horizon = Horizon::new(60, days, 20, 0.04).unwrap();
        c
    }

    fn scenario(days: usize) -> ScenarioModel {
        ScenarioModel::verbatim(make_demo_dataset(1, days)).unwrap()
    }

    #[test]
    fn dimensions_for_full_hybrid_day() {
        let m = build(&config(&["B", "S", "F"], 1), &scenario(1)).unwrap();
        let k = 24;
        // 3 design + 4 per ESS + per step (3 + 5 per ESS) + final SoE per ESS.
        assert_eq!(m.n_cols(), 3 + 3 * 4 + k * (3 + 15) + 3);
        // balance, pv, 2 grid caps, peak per step; per ESS per step: 2 power caps,
        // dynamics, 2 swing, 3 McCormick; per ESS per SoE: cap (+ dod for B);
        // per ESS: period, throughput, 2 capex.
        let expected = k * 5 + 3 * k * 8 + 3 * (k + 1) + (k + 1) + 3 * 4;
        assert_eq!(m.n_rows(), expected);
    }

    #[test]
    fn empty_storage_set_builds() {
        let m = build(&config(&[], 1), &scenario(1)).unwrap();
        assert!(m.col(VarKind::Soe, Entity::Ess(0), Some(0)).is_none());
        assert_eq!(m.n_rows(), 24 * 5);
    }

    #[test]
    fn build_is_deterministic() {
        let a = build(&config(&["B", "S"], 2), &scenario(2)).unwrap();
        let b = build(&config(&["B", "S"], 2), &scenario(2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn horizon_mismatch_is_rejected() {
        assert!(matches!(
            build(&config(&["B"], 2), &scenario(1)),
            Err(Error::Build { stage: "inputs", .. })
        ));
    }

    #[test]
    fn dynamics_coefficients() {
        let m = build(&config(&["B"], 1), &scenario(1)).unwrap();
        let row = m.rows.iter().find(|r| r.name == "dyn[B][0]").unwrap();
        let mut x = vec![0.0; m.n_cols()];
        let soe0 = m.expect_col(VarKind::Soe, Entity::Ess(0), Some(0));
        let soe1 = m.expect_col(VarKind::Soe, Entity::Ess(0), Some(1));
        let ch = m.expect_col(VarKind::EssCharge, Entity::Ess(0), Some(0));
        let dis = m.expect_col(VarKind::EssDischarge, Entity::Ess(0), Some(0));
        // Charging 0.1 MW from the bus for an hour stores 0.083 MWh.
        x[soe0] = 1.0;
        x[ch] = 0.1;
        x[soe1] = 1.083;
        assert!(row.violation(&x) < 1e-12);
        // Delivering 0.088 MW to the bus for an hour drains 0.1 MWh.
        x[ch] = 0.0;
        x[dis] = 0.088;
        x[soe1] = 0.9;
        assert!(row.violation(&x) < 1e-12);
        // Idle storage keeps its energy.
        x[dis] = 0.0;
        x[soe1] = 1.0;
        assert_eq!(row.violation(&x), 0.0);
    }

    #[test]
    fn pv_availability_row() {
        let mut c = config(&[], 1);
        let mut s = scenario(1);
        s.representatives[0].pv_cf = vec![0.5; 24];
        c.sources.pv.eta = 0.9;
        let m = build(&c, &s).unwrap();
        let row = m.rows.iter().find(|r| r.name == "pv_avail[3]").unwrap();
        let mut x = vec![0.0; m.n_cols()];
        x[m.expect_col(VarKind::SourceCap, Entity::Pv, None)] = 5.0;
        x[m.expect_col(VarKind::PvBus, Entity::Pv, Some(3))] = 2.25;
        assert!(row.violation(&x) < 1e-12);
        x[m.expect_col(VarKind::PvBus, Entity::Pv, Some(3))] = 2.26;
        assert!(row.violation(&x) > 0.0);
    }

    #[test]
    fn grid_import_reaches_bus_through_efficiency() {
        let mut s = scenario(1);
        let day = &mut s.representatives[0];
        day.demand_ch = vec![1.0; 24];
        day.demand_wh = vec![0.0; 24];
        day.pv_cf = vec![0.0; 24];
        let m = build(&config(&[], 1), &s).unwrap();
        let row = m.rows.iter().find(|r| r.name == "bal[0]").unwrap();
        assert_eq!(row.rhs, 1.0);
        let mut x = vec![0.0; m.n_cols()];
        x[m.expect_col(VarKind::GridImport, Entity::Grid, Some(0))] = 1.0 / 0.95;
        assert!(row.violation(&x) < 1e-12);
    }

    #[test]
    fn crate_envelope_requires_positive_ceilings() {
        let mut c = config(&["B"], 1);
        c.storage[0].crate_ceiling = 0.0;
        assert!(matches!(
            build(&c, &scenario(1)),
            Err(Error::Build {
                stage: "c-rate envelope",
                ..
            })
        ));
    }

    #[test]
    fn mccormick_is_tight_at_the_energy_ceiling() {
        let m = build(&config(&["B"], 1), &scenario(1)).unwrap();
        let e = Entity::Ess(0);
        let mut x = vec![0.0; m.n_cols()];
        x[m.expect_col(VarKind::EnergyCap, e, None)] = 5.0;
        x[m.expect_col(VarKind::CRate, e, Some(0))] = 0.5;
        let rows: Vec<&Row> = m
            .rows
            .iter()
            .filter(|r| r.name == "mcc_lo[B][0]" || r.name == "mcc_r[B][0]")
            .collect();
        let q = m.expect_col(VarKind::Swing, e, Some(0));
        for (value, feasible) in [(2.5, true), (2.4, false), (2.6, false)] {
            x[q] = value;
            let ok = rows.iter().all(|r| r.violation(&x) < 1e-12);
            assert_eq!(ok, feasible, "q = {value}");
        }
        // R = 0 forces q = 0 through the upper envelope.
        x[m.expect_col(VarKind::CRate, e, Some(0))] = 0.0;
        x[q] = 1e-3;
        assert!(rows[1].violation(&x) > 0.0);
    }

    #[test]
    fn throughput_sums_swings() {
        let m = build(&config(&["S"], 1), &scenario(1)).unwrap();
        let e = Entity::Ess(0);
        let row = m.rows.iter().find(|r| r.name == "thru[S]").unwrap();
        let mut x = vec![0.0; m.n_cols()];
        assert_eq!(row.violation(&x), 0.0);
        for k in 0..10 {
            x[m.expect_col(VarKind::Swing, e, Some(k))] = 0.1;
        }
        x[m.expect_col(VarKind::Throughput, e, None)] = 1.0;
        assert!(row.violation(&x) < 1e-12);
    }

    #[test]
    fn polish_cancels_simultaneous_flows() {
        let c = config(&["B"], 1);
        let m = build(&c, &scenario(1)).unwrap();
        let e = Entity::Ess(0);
        let mut x = vec![0.0; m.n_cols()];
        let dis = m.expect_col(VarKind::EssDischarge, e, Some(5));
        let ch = m.expect_col(VarKind::EssCharge, e, Some(5));
        let pv = m.expect_col(VarKind::PvBus, Entity::Pv, Some(5));
        x[dis] = 0.2;
        x[ch] = 0.5;
        x[pv] = 1.0;
        let net_soe = |x: &[f64]| 0.83 * x[ch] - x[dis] / 0.88;
        let bus = |x: &[f64]| x[dis] - x[ch] + x[pv];
        let (soe0, bus0) = (net_soe(&x), bus(&x));
        let r = polish_complementarity(&m, &c, &mut x);
        assert_eq!(r.resolved, 1);
        assert_eq!(x[dis], 0.0);
        assert!((net_soe(&x) - soe0).abs() < 1e-12);
        assert!((bus(&x) - bus0).abs() < 1e-12);
    }
}

//! Input data model: planning horizon, technology and tariff parameters, and
//! historical day profiles.
//!
//! Internal units are fixed: power in MW, energy in MWh, money in k€.
//! Loaders convert at the file boundary.

mod catalog;
mod demo;
mod series;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use catalog::{appendix_catalog, case_study_catalog, load_catalog, parse_catalog, write_catalog, Catalog};
pub use demo::{make_demo_dataset, DEMO_START_DATE};
pub use series::{load_dataset, write_dataset, LoadedDataset, DEMAND_FILE, PRICE_FILE, PV_FILE};

const MINUTES_PER_DAY: u32 = 1440;

/// Time discretization and economic horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Horizon {
    /// Step length in minutes; must divide a day.
    pub tau_minutes: u32,
    /// Number of synthetic days optimized over.
    pub synthetic_days: usize,
    /// Analysis years for discounting.
    pub years: u32,
    /// Yearly discount rate.
    pub discount_rate: f64,
}

impl Default for Horizon {
    fn default() -> Self {
        Horizon {
            tau_minutes: 60,
            synthetic_days: 30,
            years: 20,
            discount_rate: 0.04,
        }
    }
}

impl Horizon {
    pub fn new(tau_minutes: u32, synthetic_days: usize, years: u32, discount_rate: f64) -> Result<Self> {
        let h = Horizon {
            tau_minutes,
            synthetic_days,
            years,
            discount_rate,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_minutes == 0 || !MINUTES_PER_DAY.is_multiple_of(self.tau_minutes) {
            return Err(Error::config(format!(
                "step length {} min does not divide a day",
                self.tau_minutes
            )));
        }
        if self.synthetic_days == 0 {
            return Err(Error::config("synthetic period must span at least one day"));
        }
        if self.years < 1 {
            return Err(Error::config("analysis horizon must be at least one year"));
        }
        if !(0.0..1.0).contains(&self.discount_rate) {
            return Err(Error::config(format!(
                "discount rate {} outside [0, 1)",
                self.discount_rate
            )));
        }
        Ok(())
    }

    pub fn steps_per_day(&self) -> usize {
        (MINUTES_PER_DAY / self.tau_minutes) as usize
    }

    /// Total number of optimization steps K.
    pub fn total_steps(&self) -> usize {
        self.synthetic_days * self.steps_per_day()
    }

    /// Step length in hours (the τ multiplying power to get energy).
    pub fn tau_hours(&self) -> f64 {
        f64::from(self.tau_minutes) / 60.0
    }
}

/// One storage technology.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssSpec {
    pub name: String,
    /// Charging efficiency.
    pub eta_c: f64,
    /// Discharging efficiency.
    pub eta_d: f64,
    /// k€/MWh of installed energy capacity.
    pub cost_energy: f64,
    /// k€/MW of installed power capacity.
    pub cost_power: f64,
    /// k€/MWh of energy throughput.
    pub om_energy: f64,
    /// k€/MW/yr.
    pub om_power: f64,
    /// Installable energy ceiling, MWh.
    pub energy_ceiling: f64,
    /// Installable power ceiling, MW.
    pub power_ceiling: f64,
    /// Ceiling on per-step energy swing relative to capacity.
    pub crate_ceiling: f64,
    /// Minimum state of energy as a fraction of capacity.
    pub dod_min_frac: f64,
    /// Rated full cycles.
    pub cycle_life: f64,
    pub resale_factor: f64,
}

impl EssSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| Error::InvalidField {
            record: self.name.clone(),
            field: field.to_string(),
            reason: reason.to_string(),
        };
        for (field, v) in [
            ("eta_c", self.eta_c),
            ("eta_d", self.eta_d),
            ("cost_energy", self.cost_energy),
            ("cost_power", self.cost_power),
            ("om_energy", self.om_energy),
            ("om_power", self.om_power),
            ("energy_ceiling", self.energy_ceiling),
            ("power_ceiling", self.power_ceiling),
            ("crate_ceiling", self.crate_ceiling),
            ("dod_min", self.dod_min_frac),
            ("cycle_life", self.cycle_life),
            ("resale_factor", self.resale_factor),
        ] {
            if !v.is_finite() {
                return Err(bad(field, "must be finite"));
            }
        }
        if !(self.eta_c > 0.0 && self.eta_c <= 1.0) {
            return Err(bad("eta_c", "must lie in (0, 1]"));
        }
        if !(self.eta_d > 0.0 && self.eta_d <= 1.0) {
            return Err(bad("eta_d", "must lie in (0, 1]"));
        }
        for (field, v) in [
            ("cost_energy", self.cost_energy),
            ("cost_power", self.cost_power),
            ("om_energy", self.om_energy),
            ("om_power", self.om_power),
            ("energy_ceiling", self.energy_ceiling),
            ("power_ceiling", self.power_ceiling),
            ("crate_ceiling", self.crate_ceiling),
        ] {
            if v < 0.0 {
                return Err(bad(field, "must be nonnegative"));
            }
        }
        if !(0.0..1.0).contains(&self.dod_min_frac) {
            return Err(bad("dod_min", "must lie in [0, 1)"));
        }
        if self.cycle_life <= 0.0 {
            return Err(bad("cycle_life", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.resale_factor) {
            return Err(bad("resale_factor", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Utility grid connection and tariff.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Import conversion efficiency (grid to bus).
    pub eta_c: f64,
    /// Export conversion efficiency (bus to grid).
    pub eta_d: f64,
    /// Contractable connection ceiling, MW.
    pub power_ceiling: f64,
    /// Fixed connection cost, k€/yr.
    pub conn_fixed: f64,
    /// Fixed transmission cost, k€/yr.
    pub tran_fixed: f64,
    /// Contracted-capacity cost, k€/MW/yr.
    pub var_per_mw: f64,
    /// Peak offtake charge, k€/MW/yr.
    pub peak_per_mw: f64,
    /// Fraction of the market price paid for exported energy.
    pub f_sell: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            eta_c: 0.95,
            eta_d: 0.95,
            power_ceiling: 2.8,
            conn_fixed: 6.0,
            tran_fixed: 2.0,
            var_per_mw: 20.0,
            peak_per_mw: 9.03,
            f_sell: 0.9,
        }
    }
}

/// Photovoltaic plant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PvSpec {
    /// DC/DC conversion efficiency.
    pub eta: f64,
    /// k€/MW installed.
    pub cost_per_mw: f64,
    /// k€/MW/yr.
    pub om_per_mw_yr: f64,
    /// Installable ceiling, MW.
    pub power_ceiling: f64,
    pub resale_factor: f64,
}

impl Default for PvSpec {
    fn default() -> Self {
        PvSpec {
            eta: 0.9,
            cost_per_mw: 300.0,
            om_per_mw_yr: 15.0,
            power_ceiling: 5.0,
            resale_factor: 0.75,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    pub grid: GridSpec,
    pub pv: PvSpec,
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        let p = &self.pv;
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::config(format!("{name} = {v} must lie in (0, 1]")))
            }
        };
        unit("grid.eta_c", g.eta_c)?;
        unit("grid.eta_d", g.eta_d)?;
        unit("grid.f_sell", g.f_sell)?;
        unit("pv.eta", p.eta)?;
        for (name, v) in [
            ("grid.power_ceiling", g.power_ceiling),
            ("grid.conn_fixed", g.conn_fixed),
            ("grid.tran_fixed", g.tran_fixed),
            ("grid.var_per_mw", g.var_per_mw),
            ("grid.peak_per_mw", g.peak_per_mw),
            ("pv.cost_per_mw", p.cost_per_mw),
            ("pv.om_per_mw_yr", p.om_per_mw_yr),
            ("pv.power_ceiling", p.power_ceiling),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(format!("{name} = {v} must be finite and nonnegative")));
            }
        }
        if !(0.0..=1.0).contains(&p.resale_factor) {
            return Err(Error::config("pv.resale_factor must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Conversion efficiency from the DC bus to each demand category.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandEfficiency {
    pub ch: f64,
    pub wh: f64,
}

impl Default for DemandEfficiency {
    fn default() -> Self {
        DemandEfficiency { ch: 1.0, wh: 1.0 }
    }
}

/// Everything the model builder and cost model need besides the scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub horizon: Horizon,
    pub sources: SourceSpec,
    /// Storage technologies available to the design, in model order.
    pub storage: Vec<EssSpec>,
    #[serde(default)]
    pub demand_eta: DemandEfficiency,
}

impl SystemConfig {
    /// Case-study parameters with the given storage subset.
    pub fn case_study(storage: Vec<EssSpec>) -> Self {
        SystemConfig {
            horizon: Horizon::default(),
            sources: SourceSpec::default(),
            storage,
            demand_eta: DemandEfficiency::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.horizon.validate()?;
        self.sources.validate()?;
        for e in &self.storage {
            e.validate()?;
        }
        for (i, e) in self.storage.iter().enumerate() {
            if self.storage[..i].iter().any(|o| o.name == e.name) {
                return Err(Error::config(format!("storage `{}` listed twice", e.name)));
            }
        }
        let d = self.demand_eta;
        if !(d.ch > 0.0 && d.ch <= 1.0 && d.wh > 0.0 && d.wh <= 1.0) {
            return Err(Error::config("demand efficiencies must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// One calendar day of hourly (or τ-step) profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoricalDay {
    pub date: NaiveDate,
    /// Day-ahead price, k€/MWh. May be negative.
    pub price: Vec<f64>,
    /// Truck charging demand, MW.
    pub demand_ch: Vec<f64>,
    /// Warehouse demand, MW.
    pub demand_wh: Vec<f64>,
    /// PV availability as a fraction of installed capacity.
    pub pv_cf: Vec<f64>,
}

impl HistoricalDay {
    pub fn steps(&self) -> usize {
        self.price.len()
    }

    /// Aggregate demand P_CH + P_WH per step.
    pub fn total_demand(&self) -> Vec<f64> {
        self.demand_ch.iter().zip(&self.demand_wh).map(|(a, b)| a + b).collect()
    }

    pub fn validate(&self, steps_per_day: usize) -> Result<()> {
        let ctx = |reason: String| Error::Config(format!("day {}: {reason}", self.date));
        for (name, v) in [
            ("price", &self.price),
            ("demand_ch", &self.demand_ch),
            ("demand_wh", &self.demand_wh),
            ("pv_cf", &self.pv_cf),
        ] {
            if v.len() != steps_per_day {
                return Err(ctx(format!("{name} has {} entries, expected {steps_per_day}", v.len())));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(ctx(format!("{name} has a non-finite entry")));
            }
        }
        if self.demand_ch.iter().chain(&self.demand_wh).any(|&x| x < 0.0) {
            return Err(ctx("negative demand".into()));
        }
        if self.pv_cf.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(ctx("capacity factor out of range".into()));
        }
        Ok(())
    }
}

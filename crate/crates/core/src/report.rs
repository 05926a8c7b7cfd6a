//! End-to-end runs: scenario caching, experiment matrices, result tables and
//! dispatch traces.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cost::{self, CostBreakdown};
use crate::data::{
    case_study_catalog, load_catalog, load_dataset, make_demo_dataset, Catalog, DemandEfficiency, HistoricalDay,
    Horizon, SourceSpec, SystemConfig,
};
use crate::error::{Error, Result};
use crate::model::{self, Entity, ModelInstance, PolishReport, RowFamily, Series, VarKind};
use crate::par::Execution;
use crate::scenario::{build_scenario_with, ScenarioModel};
use crate::solver::{self, SolveOptions};

/// Where the historical days come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    /// The bundled synthetic generator.
    Demo { seed: u64, days: usize },
    /// Price, demand and PV CSV files.
    Files {
        prices: PathBuf,
        demand: PathBuf,
        pv: PathBuf,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Demo { seed: 1, days: 365 }
    }
}

impl DataSource {
    /// Load the days; file paths are resolved against `base`.
    pub fn load(&self, horizon: &Horizon, base: &Path) -> Result<Vec<HistoricalDay>> {
        match self {
            DataSource::Demo { seed, days } => {
                if horizon.steps_per_day() != 24 {
                    return Err(Error::config("the demo dataset is hourly; set tau_minutes to 60"));
                }
                Ok(make_demo_dataset(*seed, *days))
            }
            DataSource::Files { prices, demand, pv } => {
                let loaded = load_dataset(base.join(prices), base.join(demand), base.join(pv), horizon)?;
                for w in &loaded.warnings {
                    log::warn!("{w}");
                }
                Ok(loaded.days)
            }
        }
    }
}

/// Optional replacements for single parameters of an experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParameterOverrides {
    pub grid_power_ceiling: Option<f64>,
    pub pv_power_ceiling: Option<f64>,
    pub f_sell: Option<f64>,
    pub discount_rate: Option<f64>,
    pub years: Option<u32>,
}

impl ParameterOverrides {
    pub fn apply(&self, config: &mut SystemConfig) {
        if let Some(v) = self.grid_power_ceiling {
            config.sources.grid.power_ceiling = v;
        }
        if let Some(v) = self.pv_power_ceiling {
            config.sources.pv.power_ceiling = v;
        }
        if let Some(v) = self.f_sell {
            config.sources.grid.f_sell = v;
        }
        if let Some(v) = self.discount_rate {
            config.horizon.discount_rate = v;
        }
        if let Some(v) = self.years {
            config.horizon.years = v;
        }
    }
}

/// One design run of an experiment matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub id: String,
    /// Catalog record names, in model order.
    pub ess_subset: Vec<String>,
    #[serde(default)]
    pub overrides: ParameterOverrides,
}

impl ExperimentConfig {
    pub fn new(id: impl Into<String>, subset: &[&str]) -> Self {
        ExperimentConfig {
            id: id.into(),
            ess_subset: subset.iter().map(|s| s.to_string()).collect(),
            overrides: ParameterOverrides::default(),
        }
    }

    /// The four storage combinations of the case study.
    pub fn case_study_matrix() -> Vec<ExperimentConfig> {
        vec![
            ExperimentConfig::new("1", &["B"]),
            ExperimentConfig::new("2", &["B", "S"]),
            ExperimentConfig::new("3", &["B", "F"]),
            ExperimentConfig::new("4", &["B", "S", "F"]),
        ]
    }

    /// System configuration of this experiment.
    pub fn system(&self, base: &RunConfig, catalog: &Catalog) -> Result<SystemConfig> {
        let mut storage = Vec::with_capacity(self.ess_subset.len());
        for name in &self.ess_subset {
            let spec = catalog
                .get(name)
                .ok_or_else(|| Error::config(format!("experiment `{}`: `{name}` is not in the catalog", self.id)))?;
            storage.push(spec.clone());
        }
        let mut config = SystemConfig {
            horizon: base.horizon.clone(),
            sources: base.sources.clone(),
            storage,
            demand_eta: base.demand_eta,
        };
        self.overrides.apply(&mut config);
        config.validate()?;
        Ok(config)
    }
}

/// A complete run description, read from one JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    /// Storage catalog file; the case-study catalog when absent.
    pub catalog: Option<PathBuf>,
    pub horizon: Horizon,
    pub sources: SourceSpec,
    pub demand_eta: DemandEfficiency,
    /// Number of clusters W.
    pub clusters: usize,
    pub seed: u64,
    pub experiments: Vec<ExperimentConfig>,
    pub solver: SolveOptions,
    /// Directory for cached scenarios; caching is off when absent.
    pub cache_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: DataSource::default(),
            catalog: None,
            // One week keeps the run within reach of the embedded solver.
            horizon: Horizon {
                synthetic_days: 7,
                ..Horizon::default()
            },
            sources: SourceSpec::default(),
            demand_eta: DemandEfficiency::default(),
            clusters: 5,
            seed: 42,
            experiments: ExperimentConfig::case_study_matrix(),
            solver: SolveOptions::default(),
            cache_dir: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.horizon.validate()?;
        self.sources.validate()?;
        if self.clusters == 0 {
            return Err(Error::config("clusters must be at least 1"));
        }
        let mut ids = BTreeSet::new();
        for e in &self.experiments {
            if !ids.insert(e.id.as_str()) {
                return Err(Error::config(format!("experiment id `{}` used twice", e.id)));
            }
        }
        Ok(())
    }

    /// The configured catalog, with relative paths resolved against `base`.
    pub fn load_catalog(&self, base: &Path) -> Result<Catalog> {
        match &self.catalog {
            Some(path) => load_catalog(base.join(path)),
            None => Ok(case_study_catalog()),
        }
    }
}

/// Cache key of a scenario: SHA-256 over the historical data and the
/// synthesis parameters, hex encoded.
pub fn scenario_cache_key(days: &[HistoricalDay], clusters: usize, synthetic_days: usize, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(b"mgdesign-scenario-v1");
    h.update((days.len() as u64).to_le_bytes());
    for d in days {
        h.update(d.date.to_string().as_bytes());
        for series in [&d.price, &d.demand_ch, &d.demand_wh, &d.pv_cf] {
            h.update((series.len() as u64).to_le_bytes());
            for v in series.iter() {
                h.update(v.to_bits().to_le_bytes());
            }
        }
    }
    h.update((clusters as u64).to_le_bytes());
    h.update((synthetic_days as u64).to_le_bytes());
    h.update(seed.to_le_bytes());
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Build the scenario, or reuse the copy cached under `cache_dir`.
pub fn load_or_build_scenario(
    days: &[HistoricalDay],
    clusters: usize,
    synthetic_days: usize,
    seed: u64,
    cache_dir: Option<&Path>,
    exec: Execution,
) -> Result<ScenarioModel> {
    let Some(dir) = cache_dir else {
        return build_scenario_with(days, clusters, synthetic_days, seed, exec);
    };
    let key = scenario_cache_key(days, clusters, synthetic_days, seed);
    let path = dir.join(format!("scenario-{key}.json"));
    if path.exists() {
        match ScenarioModel::load(&path) {
            Ok(s) => {
                log::info!("reusing cached scenario {}", path.display());
                return Ok(s);
            }
            Err(e) => log::warn!("ignoring unreadable cached scenario {}: {e}", path.display()),
        }
    }
    let scenario = build_scenario_with(days, clusters, synthetic_days, seed, exec)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    scenario.save(&path)?;
    Ok(scenario)
}

/// Installed capacity of one storage unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EssDesign {
    pub name: String,
    pub energy_mwh: f64,
    pub power_mw: f64,
}

/// Per-step dispatch over the synthetic period, all in MW except SoE (MWh).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Traces {
    pub demand_ch: Vec<f64>,
    pub demand_wh: Vec<f64>,
    /// Net grid contribution at the bus, import positive.
    pub grid: Vec<f64>,
    /// PV injection at the bus.
    pub pv: Vec<f64>,
    /// Net bus-side storage power per unit, discharge positive.
    pub storage_power: Vec<(String, Vec<f64>)>,
    /// State of energy at the start of each step.
    pub storage_energy: Vec<(String, Vec<f64>)>,
}

impl Traces {
    pub fn steps(&self) -> usize {
        self.demand_ch.len()
    }

    /// Named series in emission order.
    pub fn series(&self) -> Vec<(String, &[f64])> {
        let mut out: Vec<(String, &[f64])> = vec![
            ("P_CH".into(), &self.demand_ch),
            ("P_WH".into(), &self.demand_wh),
            ("P_G".into(), &self.grid),
            ("P_PV".into(), &self.pv),
        ];
        for (name, s) in &self.storage_power {
            out.push((format!("P_{name}"), s));
        }
        for (name, s) in &self.storage_energy {
            out.push((format!("E_{name}"), s));
        }
        out
    }
}

/// Outcome of one design run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub id: String,
    pub storage: Vec<EssDesign>,
    pub p_grid_mw: f64,
    pub p_pv_mw: f64,
    pub costs: CostBreakdown,
    pub objective: f64,
    pub iterations: usize,
    pub solve_time: Duration,
    pub max_residual: f64,
    /// Largest violation of balance and storage dynamics rows.
    pub balance_residual: f64,
    pub dynamics_residual: f64,
    pub max_grid_product: f64,
    pub max_storage_product: f64,
    pub polish: PolishStats,
    pub traces: Traces,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PolishStats {
    pub resolved: usize,
    pub unresolved: usize,
}

impl From<PolishReport> for PolishStats {
    fn from(r: PolishReport) -> Self {
        PolishStats {
            resolved: r.resolved,
            unresolved: r.unresolved,
        }
    }
}

fn extract_traces(m: &ModelInstance, x: &[f64], series: &Series, config: &SystemConfig) -> Traces {
    let k = series.len();
    let g = &config.sources.grid;
    let at = |kind, ent, step| m.col(kind, ent, step).map_or(0.0, |j| x[j]);
    let mut t = Traces {
        demand_ch: series.demand_ch.clone(),
        demand_wh: series.demand_wh.clone(),
        grid: (0..k)
            .map(|s| {
                g.eta_c * at(VarKind::GridImport, Entity::Grid, Some(s))
                    - at(VarKind::GridExport, Entity::Grid, Some(s)) / g.eta_d
            })
            .collect(),
        pv: (0..k).map(|s| at(VarKind::PvBus, Entity::Pv, Some(s))).collect(),
        ..Default::default()
    };
    for (i, e) in config.storage.iter().enumerate() {
        let ent = Entity::Ess(i);
        t.storage_power.push((
            e.name.clone(),
            (0..k)
                .map(|s| at(VarKind::EssDischarge, ent, Some(s)) - at(VarKind::EssCharge, ent, Some(s)))
                .collect(),
        ));
        t.storage_energy
            .push((e.name.clone(), (0..k).map(|s| at(VarKind::Soe, ent, Some(s))).collect()));
    }
    t
}

/// Solved, polished, verified and audited design point of a built model.
pub struct Optimized {
    pub model: ModelInstance,
    pub solution: solver::Solution,
    pub result: DesignResult,
}

/// Build, solve, polish, verify and audit one configuration.
pub fn optimize(
    id: &str,
    config: &SystemConfig,
    scenario: &ScenarioModel,
    options: &SolveOptions,
) -> Result<Optimized> {
    let m = model::build(config, scenario)?;
    let mut solution = solver::solve_optimal(&m, options)?;
    let polish = model::polish_complementarity(&m, config, &mut solution.x);
    if polish.resolved + polish.unresolved > 0 {
        log::debug!(
            "{id}: removed simultaneous charge and discharge at {} steps ({} left)",
            polish.resolved,
            polish.unresolved
        );
    }
    let check = solver::verify(&m, &solution.x);
    let tol = 10.0 * options.feas_tol.max(1e-9);
    if check.max_violation() > tol.max(1e-6) {
        return Err(Error::Solver(format!(
            "{id}: solution violates its constraints by {:.3e}",
            check.max_violation()
        )));
    }
    let series = Series::from_scenario(scenario);
    let costs = cost::audit_series(&m, &solution.x, solution.objective, &series, config)?;
    let at = |kind, ent| m.col(kind, ent, None).map_or(0.0, |j| solution.x[j]);
    let storage = config
        .storage
        .iter()
        .enumerate()
        .map(|(i, e)| EssDesign {
            name: e.name.clone(),
            energy_mwh: at(VarKind::EnergyCap, Entity::Ess(i)),
            power_mw: at(VarKind::EssPowerCap, Entity::Ess(i)),
        })
        .collect();
    let result = DesignResult {
        id: id.to_string(),
        storage,
        p_grid_mw: at(VarKind::SourceCap, Entity::Grid),
        p_pv_mw: at(VarKind::SourceCap, Entity::Pv),
        objective: solution.objective,
        iterations: solution.iterations,
        solve_time: solution.wall_time,
        max_residual: solver::max_residual(&m, &solution.x),
        balance_residual: check.family(RowFamily::Balance),
        dynamics_residual: check.family(RowFamily::Dynamics),
        max_grid_product: check.max_grid_product(),
        max_storage_product: check.max_storage_product(),
        polish: polish.into(),
        traces: extract_traces(&m, &solution.x, &series, config),
        costs,
    };
    Ok(Optimized {
        model: m,
        solution,
        result,
    })
}

/// Result of one experiment; failures are kept as messages so that one bad
/// configuration does not stop the others.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub id: String,
    pub ess_subset: Vec<String>,
    pub result: std::result::Result<DesignResult, String>,
}

/// Run every experiment against the shared scenario with at most `jobs`
/// concurrent solves. Outcomes are sorted by id.
pub fn run_experiments(
    run: &RunConfig,
    catalog: &Catalog,
    scenario: &ScenarioModel,
    jobs: usize,
    exec: Execution,
) -> Vec<ExperimentOutcome> {
    let mut outcomes = exec.with_jobs(jobs, || {
        exec.map(&run.experiments, |e| {
            let result = e
                .system(run, catalog)
                .and_then(|config| optimize(&e.id, &config, scenario, &run.solver))
                .map(|o| o.result)
                .map_err(|err| err.to_string());
            match &result {
                Ok(r) => log::info!("experiment {}: total {:.3} k€", e.id, r.costs.total),
                Err(msg) => log::error!("experiment {} failed: {msg}", e.id),
            }
            ExperimentOutcome {
                id: e.id.clone(),
                ess_subset: e.ess_subset.clone(),
                result,
            }
        })
    });
    outcomes.sort_by(|a, b| a.id.cmp(&b.id));
    outcomes
}

/// Pairs `(smaller, larger)` of experiments whose storage sets are nested but
/// whose optimal costs are not ordered accordingly.
pub fn subset_monotonicity_violations(outcomes: &[ExperimentOutcome]) -> Vec<(String, String)> {
    let mut bad = Vec::new();
    for a in outcomes {
        for b in outcomes {
            if a.id == b.id {
                continue;
            }
            let (Ok(ra), Ok(rb)) = (&a.result, &b.result) else {
                continue;
            };
            let nested = a.ess_subset.iter().all(|n| b.ess_subset.contains(n));
            if nested && rb.costs.total > ra.costs.total + 1e-6 * ra.costs.total.abs() {
                bad.push((a.id.clone(), b.id.clone()));
            }
        }
    }
    bad
}

/// Header of the summary table.
pub const SUMMARY_HEADER: [&str; 13] = [
    "id",
    "ess",
    "e_max_mwh",
    "p_max_mw",
    "p_grid_mw",
    "p_pv_mw",
    "total_keur",
    "capex_keur",
    "opex_keur",
    "eol_keur",
    "e_sold_mwh",
    "e_purchased_mwh",
    "status",
];

/// Summary table with one row per experiment. Per-storage capacities are
/// `;`-separated in the order of the `ess` column.
pub fn summary_csv(outcomes: &[ExperimentOutcome]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Config(format!("writing summary: {e}"));
    w.write_record(SUMMARY_HEADER).map_err(csv_err)?;
    for o in outcomes {
        let ess = o.ess_subset.join(";");
        let row: Vec<String> = match &o.result {
            Ok(r) => {
                let join =
                    |f: fn(&EssDesign) -> f64| r.storage.iter().map(|d| fixed(f(d))).collect::<Vec<_>>().join(";");
                let mut row = vec![
                    o.id.clone(),
                    ess,
                    join(|d| d.energy_mwh),
                    join(|d| d.power_mw),
                    fixed(r.p_grid_mw),
                    fixed(r.p_pv_mw),
                ];
                row.extend(r.costs.csv_fields().iter().map(|&v| fixed(v)));
                row.push("optimal".into());
                row
            }
            Err(msg) => {
                let mut row = vec![o.id.clone(), ess];
                row.extend(std::iter::repeat_n(String::new(), 10));
                row.push(format!("failed: {msg}"));
                row
            }
        };
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("writing summary: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Six decimals, without the sign of values that round to zero.
fn fixed(v: f64) -> String {
    let s = format!("{v:.6}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

/// Long-format `step,series,value` rendering of a result's traces.
pub fn traces_csv(result: &DesignResult) -> String {
    let mut out = String::from("step,series,value\n");
    for (name, values) in result.traces.series() {
        for (k, v) in values.iter().enumerate() {
            let _ = writeln!(out, "{k},{name},{v}");
        }
    }
    out
}

pub fn emit_traces(result: &DesignResult, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, traces_csv(result)).map_err(|e| Error::io(format!("writing {}", path.display()), e))
}

/// Write `summary.csv`, `results.json` and one trace file per successful
/// experiment into `dir`. Returns the written paths.
pub fn write_outputs(outcomes: &[ExperimentOutcome], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let mut written = Vec::new();
    let write = |name: String, body: String, written: &mut Vec<PathBuf>| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        written.push(path);
        Ok(())
    };
    write("summary.csv".into(), summary_csv(outcomes)?, &mut written)?;
    write(
        "results.json".into(),
        serde_json::to_string_pretty(outcomes)?,
        &mut written,
    )?;
    for o in outcomes {
        if let Ok(r) = &o.result {
            write(format!("traces_{}.csv", sanitize(&o.id)), traces_csv(r), &mut written)?;
        }
    }
    Ok(written)
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

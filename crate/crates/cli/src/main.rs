use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use mgdesign::data::{make_demo_dataset, write_dataset, HistoricalDay};
use mgdesign::report::{
    load_or_build_scenario, optimize, run_experiments, subset_monotonicity_violations, write_outputs, DataSource,
    ExperimentConfig, ExperimentOutcome, RunConfig,
};
use mgdesign::scenario::ScenarioModel;
use mgdesign::{model, solver, Execution};

#[derive(Parser)]
#[command(name = "mgdesign", version, about = "Microgrid storage co-design optimizer")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand. Flags override the config file.
#[derive(Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for clustering and sequence sampling.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Maximum concurrent solves.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Price CSV; requires --demand and --pv as well.
    #[arg(long, global = true, requires_all = ["demand", "pv"])]
    prices: Option<PathBuf>,
    #[arg(long, global = true, requires = "prices")]
    demand: Option<PathBuf>,
    #[arg(long, global = true, requires = "prices")]
    pv: Option<PathBuf>,
    /// Storage catalog file.
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// Number of representative-day clusters.
    #[arg(long, global = true)]
    clusters: Option<usize>,
    /// Length of the synthetic period in days.
    #[arg(long, global = true)]
    days: Option<usize>,
    /// Directory for cached scenarios.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the bundled synthetic dataset as CSV files.
    DemoData {
        #[arg(long, default_value_t = 1)]
        demo_seed: u64,
        /// Number of historical days to generate.
        #[arg(long, default_value_t = 365)]
        history_days: usize,
    },
    /// Cluster the history and sample a synthetic period.
    Synth {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Size one storage combination.
    Optimize {
        #[command(flatten)]
        design: Design,
        #[arg(long, value_enum, default_value_t = SolverKind::Embedded)]
        solver: SolverKind,
        /// MPS destination for the external path.
        #[arg(long)]
        mps_out: Option<PathBuf>,
    },
    /// Run the experiment matrix of the configuration.
    Experiments,
    /// Write the model of one storage combination as MPS.
    ExportMps {
        #[command(flatten)]
        design: Design,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Design {
    /// Comma-separated catalog names, e.g. `B,S`. Empty for no storage.
    #[arg(long, value_delimiter = ',', default_value = "B,S,F")]
    ess: Vec<String>,
    /// Reuse a scenario written by `synth`.
    #[arg(long)]
    scenario: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverKind {
    Embedded,
    /// Export MPS for an external solver instead of solving.
    External,
}

impl Common {
    /// Config file merged with command-line overrides, plus the directory
    /// relative paths are resolved against.
    fn run_config(&self) -> Result<(RunConfig, PathBuf)> {
        let (mut run, base) = match &self.config {
            Some(path) => (
                RunConfig::load(path)?,
                path.parent().map(Path::to_path_buf).unwrap_or_default(),
            ),
            None => (RunConfig::default(), PathBuf::new()),
        };
        if let Some(seed) = self.seed {
            run.seed = seed;
        }
        if let (Some(prices), Some(demand), Some(pv)) = (&self.prices, &self.demand, &self.pv) {
            run.data = DataSource::Files {
                prices: absolute(prices)?,
                demand: absolute(demand)?,
                pv: absolute(pv)?,
            };
        }
        if let Some(c) = &self.catalog {
            run.catalog = Some(absolute(c)?);
        }
        if let Some(w) = self.clusters {
            run.clusters = w;
        }
        if let Some(d) = self.days {
            run.horizon.synthetic_days = d;
        }
        if let Some(dir) = &self.cache_dir {
            run.cache_dir = Some(absolute(dir)?);
        }
        run.validate()?;
        Ok((run, base))
    }

    fn jobs(&self) -> usize {
        self.jobs
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from))
    }
}

fn absolute(p: &Path) -> Result<PathBuf> {
    Ok(std::path::absolute(p)?)
}

fn load_days(run: &RunConfig, base: &Path) -> Result<Vec<HistoricalDay>> {
    run.data.load(&run.horizon, base).context("loading historical data")
}

/// Build (or load) the scenario. A scenario read from disk fixes the length
/// of the synthetic period.
fn scenario(run: &mut RunConfig, base: &Path, from: Option<&Path>) -> Result<ScenarioModel> {
    if let Some(path) = from {
        let s = ScenarioModel::load(path)?;
        run.horizon.synthetic_days = s.synthetic_len();
        return Ok(s);
    }
    let days = load_days(run, base)?;
    let cache = run.cache_dir.as_ref().map(|d| base.join(d));
    Ok(load_or_build_scenario(
        &days,
        run.clusters,
        run.horizon.synthetic_days,
        run.seed,
        cache.as_deref(),
        Execution::default(),
    )?)
}

fn single(design: &Design) -> ExperimentConfig {
    let names: Vec<&str> = design
        .ess
        .iter()
        .map(String::as_str)
        .filter(|s| !s.is_empty())
        .collect();
    let id = if names.is_empty() {
        "none".to_string()
    } else {
        names.join("+")
    };
    ExperimentConfig::new(id, &names)
}

fn report_outcomes(outcomes: &[ExperimentOutcome], out_dir: &Path) -> Result<bool> {
    write_outputs(outcomes, out_dir)?;
    let mut ok = true;
    for o in outcomes {
        match &o.result {
            Ok(r) => println!(
                "{:>6}  total {:>12.3} k€  capex {:>10.3}  opex {:>10.3}  eol {:>9.3}  [{} it, {:.2} s]",
                o.id,
                r.costs.total,
                r.costs.capex,
                r.costs.opex_npv,
                r.costs.eol_value,
                r.iterations,
                r.solve_time.as_secs_f64()
            ),
            Err(msg) => {
                ok = false;
                println!("{:>6}  FAILED: {msg}", o.id);
            }
        }
    }
    for (small, large) in subset_monotonicity_violations(outcomes) {
        log::warn!("experiment {large} costs more than its storage subset {small}");
    }
    println!("results written to {}", out_dir.display());
    Ok(ok)
}

fn run(cli: Cli) -> Result<bool> {
    let common = &cli.common;
    match &cli.command {
        Command::DemoData {
            demo_seed,
            history_days,
        } => {
            let days = make_demo_dataset(*demo_seed, *history_days);
            for p in write_dataset(&days, &common.out_dir)? {
                println!("{}", p.display());
            }
            Ok(true)
        }
        Command::Synth { out } => {
            let (mut run, base) = common.run_config()?;
            let s = scenario(&mut run, &base, None)?;
            let out = out.clone().unwrap_or_else(|| common.out_dir.join("scenario.json"));
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            s.save(&out)?;
            println!(
                "{} clusters over {} days, weights {:?}; wrote {}",
                s.clusters,
                s.historical_dates.len(),
                s.weights.iter().map(|w| (w * 1e4).round() / 1e4).collect::<Vec<_>>(),
                out.display()
            );
            Ok(true)
        }
        Command::Optimize {
            design,
            solver: kind,
            mps_out,
        } => {
            let (mut run, base) = common.run_config()?;
            let catalog = run.load_catalog(&base)?;
            let s = scenario(&mut run, &base, design.scenario.as_deref())?;
            let exp = single(design);
            if *kind == SolverKind::External {
                let Some(path) = mps_out else {
                    bail!("--solver external needs --mps-out");
                };
                let m = model::build(&exp.system(&run, &catalog)?, &s)?;
                solver::export_mps(&m, path)?;
                println!("wrote {} ({} rows, {} columns)", path.display(), m.n_rows(), m.n_cols());
                return Ok(true);
            }
            let optimized = exp
                .system(&run, &catalog)
                .and_then(|config| optimize(&exp.id, &config, &s, &run.solver));
            if let (Some(path), Ok(o)) = (mps_out, &optimized) {
                solver::export_mps(&o.model, path)?;
            }
            let outcome = ExperimentOutcome {
                id: exp.id.clone(),
                ess_subset: exp.ess_subset.clone(),
                result: optimized.map(|o| o.result).map_err(|e| e.to_string()),
            };
            report_outcomes(&[outcome], &common.out_dir)
        }
        Command::Experiments => {
            let (mut run, base) = common.run_config()?;
            let catalog = run.load_catalog(&base)?;
            let s = scenario(&mut run, &base, None)?;
            let outcomes = run_experiments(&run, &catalog, &s, common.jobs(), Execution::default());
            report_outcomes(&outcomes, &common.out_dir)
        }
        Command::ExportMps { design, out } => {
            let (mut run, base) = common.run_config()?;
            let catalog = run.load_catalog(&base)?;
            let s = scenario(&mut run, &base, design.scenario.as_deref())?;
            let m = model::build(&single(design).system(&run, &catalog)?, &s)?;
            solver::export_mps(&m, out)?;
            println!("wrote {} ({} rows, {} columns)", out.display(), m.n_rows(), m.n_cols());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

use chrono::NaiveDate;
use mgdesign::cost::{self, npv_factor};
use mgdesign::data::{
    case_study_catalog, load_dataset, parse_catalog, write_catalog, write_dataset, HistoricalDay, Horizon, SystemConfig,
};
use mgdesign::model::{self, ModelInstance, RowFamily, Sense, Series};
use mgdesign::scenario::{build_scenario_with, ScenarioModel};
use mgdesign::solver::{self, SolveOptions, SolveStatus};
use mgdesign::Execution;
use proptest::prelude::*;

// ---------------------------------------------------------------------------
// Random LPs

#[derive(Clone, Debug)]
struct RandomLp {
    n: usize,
    cost: Vec<f64>,
    upper: Vec<f64>,
    rows: Vec<(Vec<f64>, Sense, f64)>,
}

impl RandomLp {
    fn model(&self) -> ModelInstance {
        let mut m = ModelInstance::new("random");
        for j in 0..self.n {
            let c = m.add_column(format!("x{j}"), 0.0, self.upper[j]);
            m.add_cost(c, self.cost[j]);
        }
        for (i, (a, sense, b)) in self.rows.iter().enumerate() {
            let terms = a.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v));
            m.add_row(format!("r{i}"), RowFamily::Other, terms, *sense, *b);
        }
        m
    }
}

fn small_int() -> impl Strategy<Value = f64> {
    (-5i32..=5).prop_map(f64::from)
}

fn random_lp(max_vars: usize, max_rows: usize) -> impl Strategy<Value = RandomLp> {
    (1..=max_vars, 0..=max_rows).prop_flat_map(|(n, m)| {
        let row = (
            prop::collection::vec(small_int(), n),
            prop::sample::select(vec![Sense::Le, Sense::Ge, Sense::Eq]),
            (-10i32..=10).prop_map(f64::from),
        );
        (
            prop::collection::vec(small_int(), n),
            prop::collection::vec((1i32..=6).prop_map(f64::from), n),
            prop::collection::vec(row, m),
        )
            .prop_map(move |(cost, upper, rows)| RandomLp { n, cost, upper, rows })
    })
}

/// Solve the square system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` when singular.
#[allow(clippy::needless_range_loop)]
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum over all vertices of the box-bounded polytope; `None` if it is
/// empty. Every constraint and bound is an `(a, b)` hyperplane candidate.
fn vertex_enumeration(lp: &RandomLp) -> Option<f64> {
    let n = lp.n;
    let mut planes: Vec<(Vec<f64>, f64)> = lp.rows.iter().map(|(a, _, b)| (a.clone(), *b)).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), 0.0));
        planes.push((e, lp.upper[j]));
    }
    let feasible = |x: &[f64]| {
        let tol = 1e-7;
        x.iter().zip(&lp.upper).all(|(v, u)| *v >= -tol && *v <= u + tol)
            && lp.rows.iter().all(|(a, s, b)| {
                let lhs: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
                match s {
                    Sense::Le => lhs <= b + tol,
                    Sense::Ge => lhs >= b - tol,
                    Sense::Eq => (lhs - b).abs() <= tol,
                }
            })
    };
    let mut best: Option<f64> = None;
    let mut pick = vec![0usize; n];
    // Enumerate n-subsets of the hyperplanes in lexicographic order.
    fn next(pick: &mut [usize], total: usize) -> bool {
        let n = pick.len();
        for i in (0..n).rev() {
            if pick[i] < total - (n - i) {
                pick[i] += 1;
                for k in i + 1..n {
                    pick[k] = pick[k - 1] + 1;
                }
                return true;
            }
        }
        false
    }
    for (i, p) in pick.iter_mut().enumerate() {
        *p = i;
    }
    loop {
        let a: Vec<Vec<f64>> = pick.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = pick.iter().map(|&i| planes[i].1).collect();
        if let Some(x) = solve_dense(a, b) {
            if feasible(&x) {
                let v: f64 = x.iter().zip(&lp.cost).map(|(p, q)| p * q).sum();
                best = Some(best.map_or(v, |cur: f64| cur.min(v)));
            }
        }
        if !next(&mut pick, planes.len()) {
            break;
        }
    }
    best
}

fn minilp_objective(lp: &RandomLp) -> Option<f64> {
    use minilp::{ComparisonOp, OptimizationDirection, Problem};
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = (0..lp.n).map(|j| p.add_var(lp.cost[j], (0.0, lp.upper[j]))).collect();
    for (a, s, b) in &lp.rows {
        let terms: Vec<_> = a.iter().enumerate().map(|(j, v)| (vars[j], *v)).collect();
        let op = match s {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        p.add_constraint(terms.as_slice(), op, *b);
    }
    p.solve().ok().map(|s| s.objective())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn simplex_matches_vertex_enumeration(lp in random_lp(4, 4)) {
        let m = lp.model();
        let sol = solver::solve(&m, &SolveOptions::default()).unwrap();
        match vertex_enumeration(&lp) {
            Some(best) => {
                prop_assert_eq!(sol.status, SolveStatus::Optimal);
                prop_assert!((sol.objective - best).abs() <= 1e-6 * best.abs().max(1.0),
                    "simplex {} vs vertices {}", sol.objective, best);
                prop_assert!(solver::max_residual(&m, &sol.x) <= 1e-7);
            }
            None => prop_assert_eq!(sol.status, SolveStatus::Infeasible),
        }
    }

    #[test]
    fn simplex_matches_reference_solver(lp in random_lp(50, 30)) {
        let m = lp.model();
        let sol = solver::solve(&m, &SolveOptions::default()).unwrap();
        match minilp_objective(&lp) {
            Some(reference) => {
                prop_assert_eq!(sol.status, SolveStatus::Optimal);
                prop_assert!((sol.objective - reference).abs() <= 1e-6 * reference.abs().max(1.0),
                    "simplex {} vs reference {}", sol.objective, reference);
            }
            None => prop_assert_eq!(sol.status, SolveStatus::Infeasible),
        }
    }

    #[test]
    fn solves_are_deterministic(lp in random_lp(20, 15)) {
        let m = lp.model();
        let a = solver::solve(&m, &SolveOptions::default()).unwrap();
        let b = solver::solve(&m, &SolveOptions::default()).unwrap();
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.iterations, b.iterations);
        prop_assert_eq!(a.x, b.x);
    }

    #[test]
    fn mps_round_trip_preserves_structure(lp in random_lp(12, 10)) {
        let m = lp.model();
        let back = solver::parse_mps(&solver::write_mps(&m)).unwrap();
        prop_assert!(back.same_structure(&m));
    }
}

// ---------------------------------------------------------------------------
// Data and scenario

fn random_days() -> impl Strategy<Value = Vec<HistoricalDay>> {
    let steps = prop::sample::select(vec![1usize, 4, 24, 96]);
    (steps, 1usize..6).prop_flat_map(|(steps, n)| {
        let day = (
            prop::collection::vec(-0.5f64..0.5, steps),
            prop::collection::vec(0.0f64..5.0, steps),
            prop::collection::vec(0.0f64..2.0, steps),
            prop::collection::vec(0.0f64..=1.0, steps),
        );
        prop::collection::vec(day, n).prop_map(|days| {
            let start = NaiveDate::from_ymd_opt(2023, 1, 1).unwrap();
            days.into_iter()
                .enumerate()
                .map(|(i, (price, demand_ch, demand_wh, pv_cf))| HistoricalDay {
                    date: start + chrono::Days::new(i as u64),
                    price,
                    demand_ch,
                    demand_wh,
                    pv_cf,
                })
                .collect()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn dataset_round_trips_bit_for_bit(days in random_days()) {
        let dir = tempfile::tempdir().unwrap();
        let [p, d, v] = write_dataset(&days, dir.path()).unwrap();
        let steps = days[0].steps();
        let horizon = Horizon { tau_minutes: (1440 / steps) as u32, ..Horizon::default() };
        let loaded = load_dataset(p, d, v, &horizon).unwrap();
        prop_assert!(loaded.warnings.is_empty());
        prop_assert_eq!(loaded.days, days);
    }

    #[test]
    fn scenario_invariants(seed in 0u64..1000, clusters in 1usize..6, extra in 0usize..10) {
        let days = mgdesign::data::make_demo_dataset(seed, 40);
        let t = clusters + extra;
        let s = build_scenario_with(&days, clusters, t, seed, Execution::default()).unwrap();
        prop_assert_eq!(s.weights.iter().sum::<f64>(), 1.0);
        for row in &s.transition {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        prop_assert_eq!(s.sequence.len(), t);
        for w in 0..clusters {
            prop_assert!(s.sequence.contains(&w));
            prop_assert_eq!(s.labels[s.rep_days[w]], w);
        }
        let again = ScenarioModel::from_json(&s.to_json().unwrap()).unwrap();
        prop_assert_eq!(again, s);
    }

    #[test]
    fn catalog_round_trips(scale in 0.1f64..10.0) {
        let mut cat = case_study_catalog();
        for e in cat.values_mut() {
            e.cost_energy *= scale;
            e.energy_ceiling *= scale;
        }
        prop_assert_eq!(parse_catalog(&write_catalog(&cat)).unwrap(), cat);
    }
}

// ---------------------------------------------------------------------------
// Cost model

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn annuity_factor_is_a_discounted_sum(r in 0.0f64..0.2, years in 1u32..40) {
        let n = npv_factor(r, years);
        prop_assert!(n <= f64::from(years) + 1e-12);
        prop_assert!(n > 0.0);
        let closed = if r == 0.0 { f64::from(years) } else { (1.0 - (1.0 + r).powi(-(years as i32))) / r };
        prop_assert!((n - closed).abs() <= 1e-9 * closed);
    }

    #[test]
    fn audit_agrees_with_solver(seed in 0u64..200, mask in 1usize..8) {
        let names: Vec<&str> = ["B", "S", "F"].iter().enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0).map(|(_, n)| *n).collect();
        let cat = case_study_catalog();
        let mut cfg = SystemConfig::case_study(names.iter().map(|n| cat[*n].clone()).collect());
        cfg.horizon.synthetic_days = 1;
        cfg.sources.grid.power_ceiling = 5.0;
        let s = ScenarioModel::verbatim(mgdesign::data::make_demo_dataset(seed, 1)).unwrap();
        let m = model::build(&cfg, &s).unwrap();
        let sol = solver::solve_optimal(&m, &SolveOptions::default()).unwrap();
        let series = Series::from_scenario(&s);
        let b = cost::audit_series(&m, &sol.x, sol.objective, &series, &cfg).unwrap();
        prop_assert!((b.total - sol.objective).abs() <= 1e-6 * sol.objective.abs().max(1.0));
        prop_assert!((b.total - (b.capex + b.opex_npv - b.eol_value)).abs() <= 1e-9 * b.total.abs().max(1.0));
    }
}

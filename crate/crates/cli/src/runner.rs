//! Dispatches a config to the solvers and writes `results.csv` and
//! `summary.txt`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use riskeq_core::{
    analytic_equilibria, construct_raad, social_welfare, solve_rasp_with, solve_rnsp, tatonnement_with_tol,
    verify_equilibrium, verify_raad, EquilibriumRecord, MarketInstance, PlannerConfig, PlannerSolution, ProbabilityVector,
};

use crate::config::{ExperimentConfig, Grid, Mode};
use crate::error::{CliError, Result};
use crate::field::{vector_field, write_field};
use crate::report::{num, short, Table};
use crate::sweep::{multistart_sweep, Method, SweepSettings};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

const CENSUS_TOL: f64 = 1e-6;
const TATONNEMENT_TOL: f64 = 1e-6;
const TATONNEMENT_MAX_ITER: usize = 100;
const SWEEP_TOL: f64 = 1e-10;
const SWEEP_MAX_ITER: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub mode: Mode,
    pub results: String,
    pub summary: String,
    pub results_path: PathBuf,
    pub summary_path: PathBuf,
}

struct Output {
    results: String,
    summary: String,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Runs `mode` on `cfg` and writes both report files into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, mode: Mode, out_dir: &Path) -> Result<RunReport> {
    let out = match mode {
        Mode::Rnsp => run_rnsp(cfg)?,
        Mode::Rasp => run_rasp(cfg)?,
        Mode::RaeqCensus => run_census(cfg)?,
        Mode::Raad => run_raad(cfg)?,
        Mode::Tatonnement => run_tatonnement(cfg)?,
        Mode::VectorField => run_field(cfg)?,
        Mode::Sweep => run_sweep(cfg)?,
    };
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    let results_path = out_dir.join(RESULTS_FILE);
    let summary_path = out_dir.join(SUMMARY_FILE);
    write_file(&results_path, &out.results)?;
    write_file(&summary_path, &out.summary)?;
    Ok(RunReport {
        mode,
        results: out.results,
        summary: out.summary,
        results_path,
        summary_path,
    })
}

fn allocation_table(inst: &MarketInstance, sol: &PlannerSolution, measure: &ProbabilityVector) -> Result<Table> {
    let mut t = Table::new(["scenario", "probability", "x", "x_r", "y", "price", "welfare"]);
    let w = social_welfare(inst, &sol.alloc)?;
    for s in 0..inst.scenarios() {
        t.push(vec![
            s.to_string(),
            num(measure.as_slice()[s]),
            num(sol.alloc.x),
            num(sol.alloc.x_r[s]),
            num(sol.alloc.y[s]),
            num(sol.support_prices.as_slice()[s]),
            num(w[s]),
        ]);
    }
    Ok(t)
}

fn run_rnsp(cfg: &ExperimentConfig) -> Result<Output> {
    let measure = match (&cfg.measure, cfg.risk_set.extremes()) {
        (Some(m), _) => m.clone(),
        (None, [only]) => only.clone(),
        (None, _) => return Err(CliError::config("measure", "required unless the risk set has one extreme")),
    };
    let sol = solve_rnsp(&cfg.instance, &measure)?;
    let table = allocation_table(&cfg.instance, &sol, &measure)?;
    let mut summary = String::new();
    writeln!(summary, "mode: rnsp").unwrap();
    writeln!(summary, "measure: {}", short(measure.as_slice())).unwrap();
    writeln!(summary, "expected social welfare: {:.10}", sol.value).unwrap();
    writeln!(summary, "first stage x: {:.10}", sol.alloc.x).unwrap();
    writeln!(summary, "prices: {}", short(sol.support_prices.as_slice())).unwrap();
    Ok(Output {
        results: table.to_csv(),
        summary,
    })
}

fn run_rasp(cfg: &ExperimentConfig) -> Result<Output> {
    let mut planner = PlannerConfig::default();
    if let Some(n) = cfg.max_iter {
        planner.max_iter = n;
    }
    if let Some(tol) = cfg.tol {
        planner.gap_tol = tol;
    }
    let sol = solve_rasp_with(&cfg.instance, &cfg.risk_set, &planner)?;
    let table = allocation_table(&cfg.instance, &sol, &sol.worst_case)?;
    let mut summary = String::new();
    writeln!(summary, "mode: rasp").unwrap();
    writeln!(summary, "theta: {:.10}", sol.value).unwrap();
    writeln!(summary, "worst-case measure: {}", short(sol.worst_case.as_slice())).unwrap();
    writeln!(summary, "dual weights: {}", short(&sol.dual_weights)).unwrap();
    if sol.weights_ambiguous {
        writeln!(summary, "note: more than two extremes tie; dual weights are not unique").unwrap();
    }
    writeln!(summary, "first stage x: {:.10}", sol.alloc.x).unwrap();
    writeln!(summary, "support prices: {}", short(sol.support_prices.as_slice())).unwrap();
    writeln!(summary, "master iterations: {}", sol.incumbent_history.len()).unwrap();
    Ok(Output {
        results: table.to_csv(),
        summary,
    })
}

fn label<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn run_census(cfg: &ExperimentConfig) -> Result<Output> {
    let (inst, rs) = (&cfg.instance, &cfg.risk_set);
    let tol = cfg.tol.unwrap_or(CENSUS_TOL);
    let census = analytic_equilibria(inst, rs)?;
    let mut table = Table::new([
        "kind",
        "index",
        "pi_0",
        "pi_1",
        "regime",
        "stability",
        "producer_welfare",
        "consumer_welfare",
        "q_0",
        "x",
        "residual",
        "verified",
    ]);
    let mut summary = String::new();
    writeln!(summary, "mode: raeq-census").unwrap();
    writeln!(
        summary,
        "{} interior equilibria, {} boundary candidates",
        census.interior.len(),
        census.boundary.len()
    )
    .unwrap();
    for (kind, recs) in [("interior", &census.interior), ("boundary", &census.boundary)] {
        for (i, rec) in recs.iter().enumerate() {
            let verified = verify_equilibrium(inst, rs, &rec.prices, tol)?.pass;
            let p = rec.prices.as_slice();
            table.push(vec![
                kind.to_string(),
                i.to_string(),
                num(p[0]),
                num(p[1]),
                label(rec.regime),
                label(rec.stability),
                num(rec.welfare.producer),
                num(rec.welfare.consumer),
                num(rec.equalizing_measure.as_slice()[0]),
                num(rec.alloc.x),
                num(rec.residual),
                verified.to_string(),
            ]);
            writeln!(
                summary,
                "{kind} {i}: prices {} regime {} {} welfare (producer {:.6}, consumer {:.6})",
                short(p),
                label(rec.regime),
                label(rec.stability),
                rec.welfare.producer,
                rec.welfare.consumer
            )
            .unwrap();
        }
    }
    Ok(Output {
        results: table.to_csv(),
        summary,
    })
}

fn run_raad(cfg: &ExperimentConfig) -> Result<Output> {
    let (inst, rs) = (&cfg.instance, &cfg.risk_set);
    let rec = construct_raad(inst, rs)?;
    let check = verify_raad(inst, rs, &rec)?;
    let mut table = Table::new(["scenario", "pi", "mu", "x", "x_r", "y", "a", "b"]);
    for s in 0..inst.scenarios() {
        let (a, b) = rec
            .positions
            .as_ref()
            .map_or((f64::NAN, f64::NAN), |p| (p.a[s], p.b[s]));
        table.push(vec![
            s.to_string(),
            num(rec.prices.as_slice()[s]),
            num(rec.security_prices.as_slice()[s]),
            num(rec.alloc.x),
            num(rec.alloc.x_r[s]),
            num(rec.alloc.y[s]),
            num(a),
            num(b),
        ]);
    }
    let mut summary = String::new();
    writeln!(summary, "mode: raad").unwrap();
    writeln!(summary, "energy prices: {}", short(rec.prices.as_slice())).unwrap();
    writeln!(summary, "security prices: {}", short(rec.security_prices.as_slice())).unwrap();
    writeln!(summary, "theta: {:.10}", rec.theta).unwrap();
    writeln!(summary, "phi: {:.10}", rec.phi).unwrap();
    if rec.positions_omitted {
        writeln!(summary, "positions omitted: hedge failed the equilibrium checks").unwrap();
    }
    writeln!(summary, "checks pass: {}", check.pass).unwrap();
    writeln!(summary, "  hull residual {:.3e}", check.hull_residual).unwrap();
    writeln!(summary, "  planner gap {:.3e}", check.rnsp_gap).unwrap();
    writeln!(summary, "  market clears {}", check.market_clears).unwrap();
    writeln!(summary, "  security residual {:.3e}", check.security_residual).unwrap();
    writeln!(summary, "  optimality gap {:.3e}", check.optimality_gap).unwrap();
    writeln!(summary, "  theta + phi identity gap {:.3e}", check.identity_gap).unwrap();
    if inst.scenarios() == 2 && rs.len() == 2 {
        if let Ok(census) = analytic_equilibria(inst, rs) {
            let near = census.interior.iter().find(|e| {
                e.prices
                    .as_slice()
                    .iter()
                    .zip(rec.prices.as_slice())
                    .all(|(a, b)| (a - b).abs() < 1e-6)
            });
            match near {
                Some(e) => writeln!(
                    summary,
                    "coincides with the risk-averse equilibrium at {} (regime {})",
                    short(e.prices.as_slice()),
                    label(e.regime)
                )
                .unwrap(),
                None => writeln!(summary, "differs from every risk-averse equilibrium").unwrap(),
            }
        }
    }
    Ok(Output {
        results: table.to_csv(),
        summary,
    })
}

fn run_tatonnement(cfg: &ExperimentConfig) -> Result<Output> {
    let start = cfg
        .start
        .as_ref()
        .ok_or_else(|| CliError::config("start", "required for tatonnement"))?;
    let tol = cfg.tol.unwrap_or(TATONNEMENT_TOL);
    let max_iter = cfg.max_iter.unwrap_or(TATONNEMENT_MAX_ITER);
    let trace = tatonnement_with_tol(&cfg.instance, &cfg.risk_set, start, cfg.tau, max_iter, tol)?;
    let n = cfg.instance.scenarios();
    let header: Vec<String> = std::iter::once("iter".to_string())
        .chain((0..n).map(|i| format!("pi_{i}")))
        .chain((0..n).map(|i| format!("z_{i}")))
        .collect();
    let mut table = Table::new(header);
    for (k, (p, z)) in trace.iterates.iter().zip(&trace.residuals).enumerate() {
        let mut row = vec![k.to_string()];
        row.extend(p.as_slice().iter().map(|v| num(*v)));
        row.extend(z.iter().map(|v| num(*v)));
        table.push(row);
    }
    let mut summary = String::new();
    writeln!(summary, "mode: tatonnement").unwrap();
    writeln!(summary, "start: {} step {}", short(start.as_slice()), cfg.tau).unwrap();
    writeln!(summary, "iterations: {}", trace.iterates.len() - 1).unwrap();
    writeln!(summary, "converged: {}", trace.converged).unwrap();
    writeln!(summary, "final prices: {}", short(trace.final_prices.as_slice())).unwrap();
    writeln!(summary, "final residual: {:.3e}", trace.final_residual()).unwrap();
    if n == 2 {
        if let Ok(rec) = EquilibriumRecord::at(&cfg.instance, &cfg.risk_set, trace.final_prices.clone(), tol) {
            writeln!(summary, "regime at final prices: {}", label(rec.regime)).unwrap();
        }
    }
    Ok(Output {
        results: table.to_csv(),
        summary,
    })
}

fn grid(cfg: &ExperimentConfig) -> Result<Grid> {
    cfg.grid
        .ok_or_else(|| CliError::config("grid_box", "a grid is required for this mode"))
}

fn run_field(cfg: &ExperimentConfig) -> Result<Output> {
    let g = grid(cfg)?;
    let rows = vector_field(&cfg.instance, &cfg.risk_set, &g.nodes())?;
    let mut buf = Vec::new();
    write_field(&rows, &mut buf).expect("writing to memory");
    let mut summary = String::new();
    writeln!(summary, "mode: vector-field").unwrap();
    writeln!(summary, "nodes: {} x {}", g.nx, g.ny).unwrap();
    Ok(Output {
        results: String::from_utf8(buf).expect("ascii"),
        summary,
    })
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<Output> {
    let g = grid(cfg)?;
    let settings = SweepSettings {
        tol: cfg.tol.unwrap_or(SWEEP_TOL),
        max_iter: cfg.max_iter.unwrap_or(SWEEP_MAX_ITER),
        tau: cfg.tau,
    };
    let mut table = Table::new(["method", "index", "pi_0", "pi_1", "seeds", "regime", "stability", "verified"]);
    let mut summary = String::new();
    writeln!(summary, "mode: sweep").unwrap();
    writeln!(summary, "nodes: {} x {}", g.nx, g.ny).unwrap();
    for method in Method::from_choice(cfg.sweep_method) {
        let census = multistart_sweep(&cfg.instance, &cfg.risk_set, &g, method, &settings);
        writeln!(
            summary,
            "{}: {} clusters, {} failed seeds",
            method.name(),
            census.clusters.len(),
            census.failures
        )
        .unwrap();
        for (i, c) in census.clusters.iter().enumerate() {
            table.push(vec![
                method.name().to_string(),
                i.to_string(),
                num(c.representative[0]),
                num(c.representative[1]),
                c.seeds.to_string(),
                label(c.regime),
                label(c.stability),
                c.verified.to_string(),
            ]);
            writeln!(
                summary,
                "  {} seeds -> {} regime {} {}",
                c.seeds,
                short(&c.representative),
                label(c.regime),
                label(c.stability)
            )
            .unwrap();
        }
    }
    Ok(Output {
        results: table.to_csv(),
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse;

    fn bundled() -> ExperimentConfig {
        parse(include_str!("../../../configs/three_equilibria.json")).unwrap()
    }

    #[test]
    fn census_mode() {
        let dir = tempfile::tempdir().unwrap();
        let rep = run_experiment(&bundled(), Mode::RaeqCensus, dir.path()).unwrap();
        let rows: Vec<&str> = rep.results.lines().skip(1).collect();
        assert_eq!(rows.len(), 3);
        let cols: Vec<(&str, &str)> = rows
            .iter()
            .map(|r| {
                let f: Vec<&str> = r.split(',').collect();
                (f[4], f[5])
            })
            .collect();
        assert_eq!(cols, [("C", "Stable"), ("B", "Unstable"), ("A", "Stable")]);
        assert_eq!(std::fs::read_to_string(&rep.results_path).unwrap(), rep.results);
    }

    #[test]
    fn tatonnement_mode() {
        let dir = tempfile::tempdir().unwrap();
        let rep = run_experiment(&bundled(), Mode::Tatonnement, dir.path()).unwrap();
        let last: Vec<f64> = rep
            .results
            .lines()
            .last()
            .unwrap()
            .split(',')
            .skip(1)
            .take(2)
            .map(|s| s.parse().unwrap())
            .collect();
        assert!((last[0] - 1.2256).abs() < 1e-3 && (last[1] - 2.0698).abs() < 1e-3, "{last:?}");
    }

    #[test]
    fn rnsp_with_single_extreme() {
        let text = r#"{"c": 1, "c_r": [1], "v": [3], "r": [1], "risk_extremes": [[1]]}"#;
        let cfg = parse(text).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let rep = run_experiment(&cfg, Mode::Rnsp, dir.path()).unwrap();
        let row: Vec<f64> = rep.results.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(&row[2..6], &[1.0, 1.0, 2.0, 1.0]);
    }

    #[test]
    fn rnsp_needs_a_measure() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_experiment(&bundled(), Mode::Rnsp, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}

//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach stdout.

use std::path::PathBuf;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use riskeq::{load_config, multistart_sweep, run_experiment, ExperimentConfig, Method, Mode, SweepSettings};
use riskeq_core::{
    analytic_equilibria, classify_stability, construct_raad, consumer_best_response, excess_supply, jacobian,
    newton_search, producer_best_response, risk_evaluate, social_welfare, solve_rasp, solve_rnsp, tatonnement,
    verify_raad, verify_risk_neutral, MarketInstance, PriceVector, ProbabilityVector, RiskSet, StabilityClass,
};

const GREEN: [f64; 2] = [1.2256, 2.0698];
const BLUE: [f64; 2] = [1.23578, 2.10953];
const RED: [f64; 2] = [1.2478, 2.1564];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn(&ExperimentConfig) -> Outcome);

fn config() -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/three_equilibria.json");
    load_config(path).expect("bundled config loads")
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn pv(p: &[f64]) -> PriceVector {
    PriceVector::new(p.to_vec()).unwrap()
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn census_prices(cfg: &ExperimentConfig) -> Result<Vec<[f64; 2]>, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let rep = run_experiment(cfg, Mode::RaeqCensus, dir.path()).map_err(|e| e.to_string())?;
    Ok(rep
        .results
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("interior"))
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            [f[2].parse().unwrap(), f[3].parse().unwrap()]
        })
        .collect())
}

fn three_equilibria(cfg: &ExperimentConfig) -> Outcome {
    let prices = census_prices(cfg)?;
    ensure(prices.len() == 3, format!("{} equilibria", prices.len()))?;
    for (p, want) in prices.iter().zip([GREEN, BLUE, RED]) {
        ensure(p.iter().all(|v| *v > 0.0), "nonpositive price")?;
        ensure(dist(p, &want) <= 1e-3, format!("{p:?} vs {want:?}"))?;
    }
    let worst = prices.iter().zip([GREEN, BLUE, RED]).map(|(p, w)| dist(p, &w)).fold(0.0, f64::max);
    Ok(format!("3 equilibria, max deviation {worst:.1e}"))
}

fn welfare_pairs(cfg: &ExperimentConfig) -> Outcome {
    let census = analytic_equilibria(&cfg.instance, &cfg.risk_set).map_err(|e| e.to_string())?;
    let mut expected = vec![[2.152, 0.798], [2.134, 0.821], [2.113, 0.845]];
    let mut worst: f64 = 0.0;
    for rec in &census.interior {
        let got = [rec.welfare.producer, rec.welfare.consumer];
        let err = |e: &[f64; 2]| {
            let direct = dist(&got, e);
            let swapped = dist(&[got[1], got[0]], e);
            direct.min(swapped)
        };
        let (k, e) = expected
            .iter()
            .enumerate()
            .map(|(k, e)| (k, err(e)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or("more records than pairs")?;
        ensure(e <= 2e-3, format!("pair {got:?} unmatched (best error {e:.1e})"))?;
        worst = worst.max(e);
        expected.remove(k);
    }
    ensure(expected.is_empty(), format!("unmatched pairs {expected:?}"))?;
    Ok(format!("all pairs matched, max error {worst:.1e}"))
}

fn tatonnement_runs(cfg: &ExperimentConfig) -> Outcome {
    let mut notes = Vec::new();
    for (start, want) in [([1.25, 2.06], GREEN), ([1.22, 2.18], RED)] {
        let t = tatonnement(&cfg.instance, &cfg.risk_set, &pv(&start), 0.1, 100).map_err(|e| e.to_string())?;
        let end = t.final_prices.as_slice();
        let d = dist(end, &want);
        ensure(d <= 1e-3, format!("from {start:?} reached {end:?}"))?;
        notes.push(format!("{d:.1e}"));
    }
    Ok(format!("deviations {}", notes.join(", ")))
}

fn stability(cfg: &ExperimentConfig) -> Outcome {
    let (inst, rs) = (&cfg.instance, &cfg.risk_set);
    let census = analytic_equilibria(inst, rs).map_err(|e| e.to_string())?;
    let want = [StabilityClass::Stable, StabilityClass::Unstable, StabilityClass::Stable];
    ensure(census.interior.len() == 3, "census size")?;
    let mut worst: f64 = 0.0;
    for (rec, w) in census.interior.iter().zip(want) {
        let a = classify_stability(inst, rs, rec).map_err(|e| e.to_string())?;
        ensure(a.class == w, format!("{:?} classified {}", rec.prices, a.class))?;
        let est = jacobian(inst, rs, &rec.prices, None).map_err(|e| e.to_string())?;
        ensure(
            est.max_rel_discrepancy <= 1e-5,
            format!("jacobian discrepancy {:.1e}", est.max_rel_discrepancy),
        )?;
        worst = worst.max(est.max_rel_discrepancy);
    }
    Ok(format!("Stable/Unstable/Stable, jacobian discrepancy {worst:.1e}"))
}

fn newton(cfg: &ExperimentConfig) -> Outcome {
    let (inst, rs) = (&cfg.instance, &cfg.risk_set);
    let p = newton_search(inst, rs, &pv(&[1.2375, 2.11]), 1e-6, 100).map_err(|e| e.to_string())?;
    let res = excess_supply(inst, rs, &p)
        .map_err(|e| e.to_string())?
        .iter()
        .fold(0.0f64, |m, z| m.max(z.abs()));
    ensure(res < 1e-6, format!("residual {res:.1e}"))?;
    // The reference point is printed to five decimals.
    let d = dist(p.as_slice(), &BLUE);
    ensure(d <= 5e-6, format!("{:?} is {d:.1e} from the reference", p.as_slice()))?;
    Ok(format!("residual {res:.1e}, distance to reference {d:.1e}"))
}

fn collinearity(cfg: &ExperimentConfig) -> Outcome {
    let prices = census_prices(cfg)?;
    ensure(prices.len() == 3, "census size")?;
    let (g, b, r) = (prices[0], prices[1], prices[2]);
    let t: Vec<f64> = (0..2).map(|i| (b[i] - g[i]) / (r[i] - g[i])).collect();
    ensure((t[0] - t[1]).abs() <= 1e-2, format!("t = {t:?}"))?;
    ensure((0.0..=1.0).contains(&t[0]), format!("t = {t:?} outside the segment"))?;
    Ok(format!("t = ({:.6}, {:.6})", t[0], t[1]))
}

fn simplex(n: usize) -> impl Strategy<Value = ProbabilityVector> {
    prop::collection::vec(0.01..1.0f64, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        ProbabilityVector::new(w.iter().map(|v| v / s).collect()).unwrap()
    })
}

fn risk_set(n: usize) -> impl Strategy<Value = RiskSet> {
    prop::collection::vec(simplex(n), 1..=4).prop_map(|e| RiskSet::new(e).unwrap())
}

fn instance(n: usize) -> impl Strategy<Value = MarketInstance> {
    (
        0.5..15.0f64,
        prop::collection::vec(0.5..5.0f64, n),
        prop::collection::vec(0.5..10.0f64, n),
        prop::collection::vec(0.5..10.0f64, n),
    )
        .prop_map(|(c, cr, v, r)| MarketInstance::new(c, cr, v, r).unwrap())
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        failure_persistence: None,
        ..Config::with_cases(cases)
    })
}

fn fail(msg: String) -> TestCaseError {
    TestCaseError::fail(msg)
}

fn coherence() -> Result<(), String> {
    let case = (2usize..=4).prop_flat_map(|n| {
        (
            risk_set(n),
            prop::collection::vec(-10.0..10.0f64, n),
            prop::collection::vec(-10.0..10.0f64, n),
            prop::collection::vec(0.0..5.0f64, n),
            -10.0..10.0f64,
            0.0..10.0f64,
        )
    });
    let mut runner = runner(1000);
    runner
        .run(&case, |(rs, z, z2, d, m, lam)| {
            let f = |v: &[f64]| risk_evaluate(&rs, v).unwrap();
            let fz = f(&z);
            let up: Vec<f64> = z.iter().zip(&d).map(|(a, b)| a + b).collect();
            let shift: Vec<f64> = z.iter().map(|a| a + m).collect();
            let scaled: Vec<f64> = z.iter().map(|a| a * lam).collect();
            let sum: Vec<f64> = z.iter().zip(&z2).map(|(a, b)| a + b).collect();
            let tol = 1e-9 * (1.0 + fz.abs() + lam * fz.abs());
            if f(&up) < fz - tol {
                return Err(fail("monotonicity".into()));
            }
            if (f(&shift) - fz - m).abs() > tol {
                return Err(fail("translation".into()));
            }
            if (f(&scaled) - lam * fz).abs() > tol {
                return Err(fail("homogeneity".into()));
            }
            if f(&sum) < fz + f(&z2) - 1e-9 * (1.0 + fz.abs() + f(&z2).abs()) {
                return Err(fail("superadditivity".into()));
            }
            Ok(())
        })
        .map_err(|e| format!("coherence: {e}"))
}

fn best_response_oracles() -> Result<(), String> {
    let case = (instance(2), risk_set(2), 0.0..10.0f64, 0.0..10.0f64);
    let mut runner = runner(200);
    runner
        .run(&case, |(inst, rs, p0, p1)| {
            let prices = pv(&[p0, p1]);
            let br = producer_best_response(&inst, &rs, &prices).unwrap();
            let obj = |x: f64| {
                let w: Vec<f64> = (0..2)
                    .map(|s| {
                        let xr = br.x_r[s];
                        -0.5 * inst.c() * x * x - 0.5 * inst.c_r()[s] * xr * xr + prices.as_slice()[s] * (x + xr)
                    })
                    .collect();
                risk_evaluate(&rs, &w).unwrap()
            };
            let x_max = 2.0 * p0.max(p1) / inst.c() + 1.0;
            let best = (0..=20_000)
                .map(|i| obj(x_max * i as f64 / 20_000.0))
                .fold(f64::NEG_INFINITY, f64::max);
            if obj(br.x) < best - 1e-9 {
                return Err(fail(format!("producer {} below grid {best}", obj(br.x))));
            }
            let y = consumer_best_response(&inst, &prices).unwrap();
            for s in 0..2 {
                let (v, r, p) = (inst.v()[s], inst.r()[s], prices.as_slice()[s]);
                let u = |y: f64| v * y - 0.5 * r * y * y - p * y;
                let best = (0..=20_000)
                    .map(|i| u(2.0 * v / r * i as f64 / 20_000.0))
                    .fold(f64::NEG_INFINITY, f64::max);
                if u(y[s]) < best - 1e-9 {
                    return Err(fail(format!("consumer scenario {s}")));
                }
            }
            Ok(())
        })
        .map_err(|e| format!("best responses: {e}"))
}

fn risk_neutral_round_trip() -> Result<(), String> {
    let case = (2usize..=4).prop_flat_map(|n| (instance(n), simplex(n)));
    let mut runner = runner(200);
    runner
        .run(&case, |(inst, p)| {
            let sol = solve_rnsp(&inst, &p).unwrap();
            let rep = verify_risk_neutral(&inst, &p, &sol.support_prices, 1e-6).unwrap();
            if !rep.pass {
                return Err(fail(format!("{rep:?}")));
            }
            Ok(())
        })
        .map_err(|e| format!("risk-neutral round trip: {e}"))
}

fn raad_checks() -> Result<(), String> {
    let case = (2usize..=3).prop_flat_map(|n| (instance(n), risk_set(n)));
    let mut runner = runner(200);
    runner
        .run(&case, |(inst, rs)| {
            let rec = construct_raad(&inst, &rs).unwrap();
            let chk = verify_raad(&inst, &rs, &rec).unwrap();
            if chk.hull_residual > 1e-6 || chk.rnsp_gap > 1e-6 || chk.identity_gap > 1e-6 || !chk.pass {
                return Err(fail(format!("{chk:?}")));
            }
            Ok(())
        })
        .map_err(|e| format!("risk trading: {e}"))
}

fn planner_dominance(cfg: &ExperimentConfig) -> Result<(), String> {
    let (inst, rs) = (&cfg.instance, &cfg.risk_set);
    let sol = solve_rasp(inst, rs).map_err(|e| e.to_string())?;
    let census = analytic_equilibria(inst, rs).map_err(|e| e.to_string())?;
    for rec in &census.interior {
        let f = risk_evaluate(rs, &social_welfare(inst, &rec.alloc).unwrap()).unwrap();
        ensure(sol.value >= f - 1e-8, format!("planner {} below equilibrium {f}", sol.value))?;
    }
    Ok(())
}

fn properties(cfg: &ExperimentConfig) -> Outcome {
    coherence()?;
    best_response_oracles()?;
    risk_neutral_round_trip()?;
    raad_checks()?;
    planner_dominance(cfg)?;
    Ok("coherence x1000, best responses x200, round trip x200, risk trading x200, planner dominance".into())
}

fn sweeps(cfg: &ExperimentConfig) -> Outcome {
    let grid = cfg.grid.ok_or("bundled config has no grid")?;
    let settings = SweepSettings {
        tol: 1e-10,
        max_iter: 20_000,
        tau: 0.1,
    };
    let near = |p: &[f64; 2], q: &[f64; 2]| dist(p, q) <= 1e-3;
    let t = multistart_sweep(&cfg.instance, &cfg.risk_set, &grid, Method::Tatonnement, &settings);
    let reps: Vec<[f64; 2]> = t.clusters.iter().map(|c| c.representative).collect();
    ensure(reps.len() == 2, format!("tatonnement clusters {reps:?}"))?;
    ensure(
        reps.iter().any(|p| near(p, &GREEN)) && reps.iter().any(|p| near(p, &RED)),
        format!("tatonnement clusters {reps:?}"),
    )?;
    let n = multistart_sweep(&cfg.instance, &cfg.risk_set, &grid, Method::Newton, &settings);
    let blue = n.clusters.iter().find(|c| near(&c.representative, &BLUE));
    let blue = blue.ok_or_else(|| format!("newton clusters {:?}", n.clusters))?;
    Ok(format!(
        "tatonnement: green {} + red {} seeds, {} failed; newton: {} clusters, blue {} seeds",
        t.clusters.iter().find(|c| near(&c.representative, &GREEN)).map_or(0, |c| c.seeds),
        t.clusters.iter().find(|c| near(&c.representative, &RED)).map_or(0, |c| c.seeds),
        t.failures,
        n.clusters.len(),
        blue.seeds
    ))
}

fn main() {
    let cfg = config();
    let criteria: [Criterion; 8] = [
        ("1 three equilibria", three_equilibria),
        ("2 welfare pairs", welfare_pairs),
        ("3 tatonnement", tatonnement_runs),
        ("4 stability", stability),
        ("5 newton", newton),
        ("6 collinearity", collinearity),
        ("7 property suites", properties),
        ("8 sweeps", sweeps),
    ];
    let clock = Instant::now();
    let mut failed = 0;
    for (name, check) in criteria {
        let t = Instant::now();
        let outcome = check(&cfg);
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(note) => println!("PASS criterion {name}: {note} [{secs:.2}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why} [{secs:.2}s]");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed in {:.2}s",
        8 - failed,
        clock.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

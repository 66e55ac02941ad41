//! Risk-neutral and risk-averse social planner problems.
//!
//! The risk-neutral planner maximises `E_p[W_p + W_c]` subject to
//! `x + x_r[ω] ≥ y[ω]`. Its KKT system is solved by an active set over the
//! scenarios whose market clears at a positive price.
//!
//! The risk-averse planner maximises `min_k E_{Q_k}[W_p + W_c]`. By minimax
//! duality this equals `min_{μ ∈ conv Q} v(μ)` where `v(μ)` is the
//! risk-neutral optimum under `μ`; `v` is convex in the mixture weights and
//! its partial derivatives are the extreme expectations of the risk-neutral
//! optimal welfare. The master problem over mixtures is solved by bisection
//! for two extremes and by pairwise coordinate search otherwise.

use crate::error::{check_len, Error, Result};
use crate::market::{social_welfare, Allocation, MarketInstance, PriceVector, ProbabilityVector};
use crate::risk::{extreme_expectations, expected_value, RiskSet, TIE_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerSolution {
    pub alloc: Allocation,
    /// Optimal objective: `E_p[W_sp]` or `θ = min_k E_{Q_k}[W_sp]`.
    pub value: f64,
    /// Scenario multipliers of the supply constraints, per unit probability.
    pub support_prices: PriceVector,
    /// The planning measure for the risk-neutral problem, the worst-case
    /// mixture `μ = Σ λ_k Q_k` for the risk-averse one.
    pub worst_case: ProbabilityVector,
    /// Mixture weights `λ_k`; empty for the risk-neutral problem.
    pub dual_weights: Vec<f64>,
    /// More than two extremes tie at the optimum, so `λ` is not unique.
    pub weights_ambiguous: bool,
    /// Best primal value found after each master iteration.
    pub incumbent_history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    /// Stop when `max_{k ∈ supp λ} E_{Q_k}[W] − min_k E_{Q_k}[W]` drops below this.
    pub gap_tol: f64,
    /// Stop when a line search moves the mixture by less than this.
    pub stationarity_tol: f64,
    pub max_iter: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            stationarity_tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

/// Price clearing scenario `ω` when the first stage is `x`, with the
/// consumer and recourse at their best responses.
fn clearing_price(inst: &MarketInstance, w: usize, x: f64) -> f64 {
    let (cr, v, r) = (inst.c_r()[w], inst.v()[w], inst.r()[w]);
    ((v / r - x) / (1.0 / cr + 1.0 / r)).max(0.0)
}

pub fn solve_rnsp(inst: &MarketInstance, p: &ProbabilityVector) -> Result<PlannerSolution> {
    check_len(inst.scenarios(), p.len())?;
    let n = inst.scenarios();
    let probs = p.as_slice();

    // Scenarios assumed to clear at a positive price.
    let mut active: Vec<bool> = probs.iter().map(|&q| q > 0.0).collect();
    let x = loop {
        // c x = Σ_active p (V/r − x) / s,  s = 1/c_r + 1/r.
        let mut num = 0.0;
        let mut den = inst.c();
        for w in (0..n).filter(|&w| active[w]) {
            let s = 1.0 / inst.c_r()[w] + 1.0 / inst.r()[w];
            num += probs[w] * inst.v()[w] / inst.r()[w] / s;
            den += probs[w] / s;
        }
        let x = num / den;
        let worst = (0..n)
            .filter(|&w| active[w])
            .map(|w| (w, inst.v()[w] / inst.r()[w] - x))
            .filter(|(_, slack)| *slack < 0.0)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match worst {
            Some((w, _)) => active[w] = false,
            None => break x,
        }
    };

    let prices: Vec<f64> = (0..n).map(|w| clearing_price(inst, w, x)).collect();
    let x_r: Vec<f64> = prices.iter().zip(inst.c_r()).map(|(pi, c)| pi / c).collect();
    let y: Vec<f64> = (0..n)
        .map(|w| ((inst.v()[w] - prices[w]) / inst.r()[w]).max(0.0))
        .collect();
    let alloc = Allocation::new(x, x_r, y)?;
    let value = expected_value(p, &social_welfare(inst, &alloc)?)?;
    Ok(PlannerSolution {
        alloc,
        value,
        support_prices: PriceVector::new(prices)?,
        worst_case: p.clone(),
        dual_weights: Vec::new(),
        weights_ambiguous: false,
        incumbent_history: Vec::new(),
    })
}

pub fn solve_rasp(inst: &MarketInstance, rs: &RiskSet) -> Result<PlannerSolution> {
    solve_rasp_with(inst, rs, &PlannerConfig::default())
}

/// Risk-neutral solve under a mixture plus the extreme expectations of the
/// resulting social welfare.
struct Probe {
    sol: PlannerSolution,
    grads: Vec<f64>,
}

fn probe(inst: &MarketInstance, rs: &RiskSet, weights: &[f64]) -> Result<Probe> {
    let mu = ProbabilityVector::mixture(weights, rs.extremes())?;
    let sol = solve_rnsp(inst, &mu)?;
    let grads = extreme_expectations(rs, &social_welfare(inst, &sol.alloc)?)?;
    Ok(Probe { sol, grads })
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

struct Master<'a> {
    inst: &'a MarketInstance,
    rs: &'a RiskSet,
    cfg: &'a PlannerConfig,
    iterations: usize,
    history: Vec<f64>,
    best: f64,
}

impl Master<'_> {
    fn evaluate(&mut self, weights: &[f64]) -> Result<Probe> {
        let pr = probe(self.inst, self.rs, weights)?;
        self.iterations += 1;
        self.best = self.best.max(min_of(&pr.grads));
        self.history.push(self.best);
        Ok(pr)
    }

    fn exhausted(&self) -> bool {
        self.iterations >= self.cfg.max_iter
    }

    /// Minimises `v` along `weights + δ (e_to − e_from)`, `δ ∈ [0, λ_from]`.
    /// The directional derivative `g_to − g_from` is nondecreasing in `δ`.
    fn line_search(&mut self, weights: &[f64], from: usize, to: usize) -> Result<(Vec<f64>, Probe)> {
        let shifted = |d: f64| {
            let mut w = weights.to_vec();
            w[from] -= d;
            w[to] += d;
            w[from] = w[from].max(0.0);
            w
        };
        let far = weights[from];
        let end = self.evaluate(&shifted(far))?;
        if end.grads[to] - end.grads[from] <= 0.0 {
            return Ok((shifted(far), end));
        }
        let (mut lo, mut hi) = (0.0, far);
        let mut last: Option<(Vec<f64>, Probe)> = None;
        while hi - lo > self.cfg.stationarity_tol * 1e-3 && !self.exhausted() {
            let mid = 0.5 * (lo + hi);
            let w = shifted(mid);
            let pr = self.evaluate(&w)?;
            let slope = pr.grads[to] - pr.grads[from];
            let gap = (slope).abs();
            last = Some((w, pr));
            if gap < self.cfg.gap_tol * 1e-2 {
                break;
            }
            if slope > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        match last {
            Some(found) => Ok(found),
            None => {
                let w = shifted(0.5 * (lo + hi));
                let pr = self.evaluate(&w)?;
                Ok((w, pr))
            }
        }
    }
}

/// Support of `λ` and optimality gap at a probe.
fn support_gap(weights: &[f64], grads: &[f64]) -> (usize, usize, f64) {
    let lowest = (0..grads.len())
        .min_by(|&a, &b| grads[a].total_cmp(&grads[b]))
        .expect("nonempty");
    let highest = (0..grads.len())
        .filter(|&k| weights[k] > 0.0)
        .max_by(|&a, &b| grads[a].total_cmp(&grads[b]))
        .expect("weights sum to one");
    (highest, lowest, grads[highest] - grads[lowest])
}

pub fn solve_rasp_with(inst: &MarketInstance, rs: &RiskSet, cfg: &PlannerConfig) -> Result<PlannerSolution> {
    check_len(inst.scenarios(), rs.scenarios())?;
    if cfg.gap_tol <= 0.0 || cfg.stationarity_tol <= 0.0 || cfg.max_iter == 0 {
        return Err(Error::invalid("planner config", "tolerances and iteration limit must be positive"));
    }
    let k = rs.len();
    let mut master = Master {
        inst,
        rs,
        cfg,
        iterations: 0,
        history: Vec::new(),
        best: f64::NEG_INFINITY,
    };

    let (weights, pr) = if k == 1 {
        let w = vec![1.0];
        let pr = master.evaluate(&w)?;
        (w, pr)
    } else if k == 2 {
        // v(t Q₀ + (1−t) Q₁) is convex in t; its slope g₀ − g₁ crosses zero once.
        let mut w = vec![0.0, 1.0];
        let mut pr = master.evaluate(&w)?;
        if pr.grads[0] - pr.grads[1] < 0.0 {
            let (w2, pr2) = master.line_search(&w, 1, 0)?;
            w = w2;
            pr = pr2;
        }
        (w, pr)
    } else {
        let mut w = vec![1.0 / k as f64; k];
        let mut pr = master.evaluate(&w)?;
        loop {
            let (from, to, gap) = support_gap(&w, &pr.grads);
            if gap < cfg.gap_tol || from == to || master.exhausted() {
                break;
            }
            let (w2, pr2) = master.line_search(&w, from, to)?;
            let moved: f64 = w.iter().zip(&w2).map(|(a, b)| (a - b).abs()).sum();
            w = w2;
            pr = pr2;
            if moved < cfg.stationarity_tol {
                break;
            }
        }
        (w, pr)
    };

    let (_, _, gap) = support_gap(&weights, &pr.grads);
    let theta = min_of(&pr.grads);
    let band = TIE_TOL * theta.abs().max(1.0);
    let tied = pr.grads.iter().filter(|g| **g - theta <= band).count();
    let failed = gap >= cfg.gap_tol && master.exhausted();
    let iterations = master.iterations;
    let solution = PlannerSolution {
        alloc: pr.sol.alloc,
        value: theta,
        support_prices: pr.sol.support_prices,
        worst_case: pr.sol.worst_case,
        dual_weights: weights,
        weights_ambiguous: tied > 2,
        incumbent_history: master.history,
    };
    if failed {
        return Err(Error::PlannerNonConvergence {
            iterations,
            gap,
            incumbent: Box::new(solution),
        });
    }
    Ok(solution)
}

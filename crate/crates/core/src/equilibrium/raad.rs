//! Risk-trading equilibrium: the energy market completed by Arrow-Debreu
//! securities, one per scenario, each paying 1 in its scenario and costing
//! `μ[ω]` up front.

use super::{max_norm, verify_risk_neutral};
use crate::error::Result;
use crate::market::{social_welfare, traded_welfares, Allocation, MarketInstance, PriceVector, ProbabilityVector};
use crate::planner::{solve_rasp, solve_rnsp};
use crate::risk::{expected_value, risk_evaluate, RiskSet};

/// Tolerance for the equilibrium conditions of the completed market.
const RAAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SecurityPositions {
    /// Producer holdings.
    pub a: Vec<f64>,
    /// Consumer holdings.
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaadRecord {
    pub prices: PriceVector,
    /// Security prices `μ`.
    pub security_prices: ProbabilityVector,
    pub alloc: Allocation,
    /// Producer risk-adjusted value after trading securities.
    pub theta: f64,
    /// Consumer risk-adjusted value after trading securities.
    pub phi: f64,
    pub positions: Option<SecurityPositions>,
    /// Set when the hedging positions failed the equilibrium checks and
    /// were dropped; `theta` and `phi` are then unhedged values.
    pub positions_omitted: bool,
    /// Mixture weights with `μ = Σ λ_k Q_k`.
    pub dual_weights: Vec<f64>,
}

/// Producer and consumer values of holding `pos` at security prices `mu`.
fn hedged_values(
    rs: &RiskSet,
    mu: &ProbabilityVector,
    wp: &[f64],
    wc: &[f64],
    pos: &SecurityPositions,
) -> Result<(f64, f64)> {
    let cost_a = expected_value(mu, &pos.a)?;
    let cost_b = expected_value(mu, &pos.b)?;
    let hp: Vec<f64> = wp.iter().zip(&pos.a).map(|(w, a)| w + a - cost_a).collect();
    let hc: Vec<f64> = wc.iter().zip(&pos.b).map(|(w, b)| w + b - cost_b).collect();
    Ok((risk_evaluate(rs, &hp)?, risk_evaluate(rs, &hc)?))
}

/// Builds the risk-trading equilibrium from the risk-averse planner: `μ` is
/// its worst-case mixture and `π` the risk-neutral support prices under `μ`.
pub fn construct_raad(inst: &MarketInstance, rs: &RiskSet) -> Result<RaadRecord> {
    let rasp = solve_rasp(inst, rs)?;
    let mu = rasp.worst_case.clone();
    let prices = solve_rnsp(inst, &mu)?.support_prices;
    let alloc = rasp.alloc;
    let (wp, wc) = traded_welfares(inst, &alloc, &prices)?;

    let mean_wp = expected_value(&mu, &wp)?;
    let a: Vec<f64> = wp.iter().map(|w| mean_wp - w).collect();
    let b: Vec<f64> = a.iter().map(|v| -v).collect();
    let pos = SecurityPositions { a, b };
    let (theta, phi) = hedged_values(rs, &mu, &wp, &wc, &pos)?;

    let mut rec = RaadRecord {
        prices,
        security_prices: mu,
        alloc,
        theta,
        phi,
        positions: Some(pos),
        positions_omitted: false,
        dual_weights: rasp.dual_weights,
    };
    if !verify_raad(inst, rs, &rec)?.pass {
        rec.theta = risk_evaluate(rs, &wp)?;
        rec.phi = risk_evaluate(rs, &wc)?;
        rec.positions = None;
        rec.positions_omitted = true;
    }
    Ok(rec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaadCheck {
    pub pass: bool,
    /// `‖Σ λ_k Q_k − μ‖∞`.
    pub hull_residual: f64,
    /// Largest allocation difference from the risk-neutral planner under `μ`.
    pub rnsp_gap: f64,
    /// Energy market clears under `μ` in risk-neutral mode.
    pub market_clears: bool,
    /// `max_ω max(a + b, |μ (a + b)|)`; zero without positions.
    pub security_residual: f64,
    /// Largest deviation of the allocation from the agents' best responses
    /// once risk is traded at `μ`.
    pub optimality_gap: f64,
    /// `|θ + φ − E_μ[W_sp]|`.
    pub identity_gap: f64,
}

/// Checks every equilibrium condition of `rec` at `1e-6`.
pub fn verify_raad(inst: &MarketInstance, rs: &RiskSet, rec: &RaadRecord) -> Result<RaadCheck> {
    let mu = &rec.security_prices;
    let recon = ProbabilityVector::mixture(&rec.dual_weights, rs.extremes())?;
    let hull_residual = max_norm(
        &recon
            .as_slice()
            .iter()
            .zip(mu.as_slice())
            .map(|(a, b)| a - b)
            .collect::<Vec<_>>(),
    );

    let rn = solve_rnsp(inst, mu)?;
    let mut rnsp_gap = (rn.alloc.x - rec.alloc.x).abs();
    for (u, v) in rn.alloc.x_r.iter().zip(&rec.alloc.x_r).chain(rn.alloc.y.iter().zip(&rec.alloc.y)) {
        rnsp_gap = rnsp_gap.max((u - v).abs());
    }

    let market_clears = verify_risk_neutral(inst, mu, &rec.prices, RAAD_TOL)?.pass;

    let security_residual = match &rec.positions {
        Some(pos) => pos
            .a
            .iter()
            .zip(&pos.b)
            .zip(mu.as_slice())
            .fold(0.0f64, |m, ((a, b), q)| m.max(a + b).max((q * (a + b)).abs())),
        None => 0.0,
    };

    // With complete risk markets each agent is risk-neutral under μ.
    let p = rec.prices.as_slice();
    let mean_price = expected_value(mu, p)?;
    let mut optimality_gap = (rec.alloc.x - (mean_price / inst.c()).max(0.0)).abs();
    for w in 0..inst.scenarios() {
        let xr = p[w] / inst.c_r()[w];
        let y = ((inst.v()[w] - p[w]) / inst.r()[w]).max(0.0);
        optimality_gap = optimality_gap
            .max((rec.alloc.x_r[w] - xr).abs())
            .max((rec.alloc.y[w] - y).abs());
    }

    let total = expected_value(mu, &social_welfare(inst, &rec.alloc)?)?;
    let identity_gap = (rec.theta + rec.phi - total).abs();

    let pass = hull_residual <= RAAD_TOL
        && rnsp_gap <= RAAD_TOL
        && market_clears
        && security_residual <= RAAD_TOL
        && optimality_gap <= RAAD_TOL
        && identity_gap <= RAAD_TOL;
    Ok(RaadCheck {
        pass,
        hull_residual,
        rnsp_gap,
        market_clears,
        security_residual,
        optimality_gap,
        identity_gap,
    })
}

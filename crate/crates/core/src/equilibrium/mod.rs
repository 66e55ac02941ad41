//! Competitive equilibria of the two-stage market.
//!
//! Prices `π ≥ 0` form an equilibrium when, with both agents at their best
//! responses, `0 ≤ x + x_r[ω] − y[ω] ⊥ π[ω] ≥ 0` for every scenario. The
//! excess supply `z(π) = x♯ + x_r♯ − y♯` is the central object: equilibria
//! with strictly positive prices are its roots.

mod analytic;
mod raad;
mod search;

pub use analytic::{analytic_equilibria, EquilibriumCensus};
pub use raad::{construct_raad, verify_raad, RaadCheck, RaadRecord, SecurityPositions};
pub use search::{newton_search, tatonnement, tatonnement_with_tol, TatonnementTrace, TATONNEMENT_TOL};

use crate::agents::{best_response_raw, consumer_raw, critical_raw, recourse_raw, regime_first_stage, Regime};
use crate::error::{check_len, Result};
use crate::market::{traded_welfares, Allocation, MarketInstance, PriceVector, ProbabilityVector};
use crate::risk::{risk_evaluate, worst_case_measures, RiskSet};
use crate::stability::{classify_prices, StabilityClass};

pub(crate) fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub(crate) fn excess_raw(inst: &MarketInstance, rs: &RiskSet, p: &[f64]) -> Result<Vec<f64>> {
    let br = best_response_raw(inst, rs, p)?;
    let y = consumer_raw(inst, p);
    Ok(br.x_r.iter().zip(&y).map(|(xr, y)| br.x + xr - y).collect())
}

pub(crate) fn regime_excess_raw(inst: &MarketInstance, rs: &RiskSet, p: &[f64], regime: Regime) -> Result<Vec<f64>> {
    let x = regime_first_stage(inst, rs, p, regime)?;
    let xr = recourse_raw(inst, p);
    let y = consumer_raw(inst, p);
    Ok(xr.iter().zip(&y).map(|(xr, y)| x + xr - y).collect())
}

/// `z[ω] = x♯ + x_r♯[ω] − y♯[ω]` at the agents' best responses.
pub fn excess_supply(inst: &MarketInstance, rs: &RiskSet, prices: &PriceVector) -> Result<Vec<f64>> {
    check_len(inst.scenarios(), prices.len())?;
    check_len(inst.scenarios(), rs.scenarios())?;
    excess_raw(inst, rs, prices.as_slice())
}

/// Excess supply with the producer's first stage fixed to `regime`'s formula.
pub fn regime_excess(inst: &MarketInstance, rs: &RiskSet, prices: &PriceVector, regime: Regime) -> Result<Vec<f64>> {
    inst.require_two()?;
    check_len(2, prices.len())?;
    check_len(2, rs.scenarios())?;
    regime_excess_raw(inst, rs, prices.as_slice(), regime)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub pass: bool,
    /// `x + x_r[ω] − y[ω]` at the recomputed best responses.
    pub surplus: Vec<f64>,
    /// `π[ω] · surplus[ω]`.
    pub complementarity: Vec<f64>,
}

/// Checks `surplus ≥ −tol` and `|π · surplus| ≤ tol` per scenario, with the
/// producer evaluating risk through `rs`.
pub fn verify_equilibrium(inst: &MarketInstance, rs: &RiskSet, prices: &PriceVector, tol: f64) -> Result<VerificationReport> {
    let surplus = excess_supply(inst, rs, prices)?;
    let complementarity: Vec<f64> = surplus
        .iter()
        .zip(prices.as_slice())
        .map(|(s, p)| s * p)
        .collect();
    let pass = surplus.iter().all(|s| *s >= -tol) && complementarity.iter().all(|c| c.abs() <= tol);
    Ok(VerificationReport {
        pass,
        surplus,
        complementarity,
    })
}

/// [`verify_equilibrium`] for a risk-neutral producer under `p`.
pub fn verify_risk_neutral(
    inst: &MarketInstance,
    p: &ProbabilityVector,
    prices: &PriceVector,
    tol: f64,
) -> Result<VerificationReport> {
    verify_equilibrium(inst, &RiskSet::singleton(p.clone()), prices, tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfarePair {
    pub producer: f64,
    pub consumer: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumRecord {
    pub prices: PriceVector,
    pub alloc: Allocation,
    pub regime: Option<Regime>,
    /// Risk-adjusted traded welfares of both agents.
    pub welfare: WelfarePair,
    /// Measure under which the producer's first stage is risk-neutral optimal.
    pub equalizing_measure: ProbabilityVector,
    pub stability: Option<StabilityClass>,
    /// `max |z|` at `prices`.
    pub residual: f64,
    /// Tolerance the record was accepted at.
    pub tolerance: f64,
}

impl EquilibriumRecord {
    /// Builds the record for `prices`: best responses, welfares, measure and
    /// stability class.
    pub fn at(inst: &MarketInstance, rs: &RiskSet, prices: PriceVector, tol: f64) -> Result<Self> {
        check_len(inst.scenarios(), prices.len())?;
        check_len(inst.scenarios(), rs.scenarios())?;
        let p = prices.as_slice();
        let br = best_response_raw(inst, rs, p)?;
        let y = consumer_raw(inst, p);
        let alloc = Allocation::new(br.x.max(0.0), br.x_r.clone(), y)?;
        let residual = max_norm(&excess_raw(inst, rs, p)?);
        let (wp, wc) = traded_welfares(inst, &alloc, &prices)?;
        let welfare = WelfarePair {
            producer: risk_evaluate(rs, &wp)?,
            consumer: risk_evaluate(rs, &wc)?,
        };
        let equalizing_measure = match (br.regime, crate::agents::regime_measures(rs, p)) {
            (Some(Regime::A), Some((qa, _))) => ProbabilityVector::two_point(qa)?,
            (Some(Regime::C), Some((_, qc))) => ProbabilityVector::two_point(qc)?,
            (Some(Regime::B), Some(_)) => {
                // c x_c = q π₀ + (1 − q) π₁.
                let (lo, hi) = rs.interval_view().expect("two scenarios");
                let q = (inst.c() * critical_raw(inst, p)? - p[1]) / (p[0] - p[1]);
                ProbabilityVector::two_point(q.clamp(lo, hi))?
            }
            _ => worst_case_measures(rs, &wp)?.mixture,
        };
        let stability = if inst.scenarios() == 2 {
            Some(classify_prices(inst, rs, &prices)?.class)
        } else {
            None
        };
        Ok(Self {
            prices,
            alloc,
            regime: br.regime,
            welfare,
            equalizing_measure,
            stability,
            residual,
            tolerance: tol,
        })
    }
}

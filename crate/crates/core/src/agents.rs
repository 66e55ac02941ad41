//! Price-taking best responses of the producer and the consumer.
//!
//! The consumer and the recourse decisions are solved scenario by scenario.
//! The producer's first-stage quantity maximises the concave
//! piecewise-quadratic
//!
//! ```text
//! f(x) = −c x²/2 + min_k ( E_{Q_k}[π] x + E_{Q_k}[π² / (2 c_r)] )
//! ```
//!
//! For two scenarios the maximiser falls in one of three regimes (A, B, C)
//! depending on where the critical quantity `x_c`, at which both extreme
//! measures value the producer equally, sits relative to the two
//! risk-neutral optima.

use std::fmt;

use crate::error::{check_len, Error, Result};
use crate::market::{MarketInstance, PriceVector, SOLVE_TOL};
use crate::risk::RiskSet;

/// Price gap below which the critical quantity is treated as singular.
pub const EQUAL_PRICE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    /// First stage at the optimum of the measure with the lowest expected price.
    A,
    /// First stage at the critical quantity; both extremes tie.
    B,
    /// First stage at the optimum of the measure with the highest expected price.
    C,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::A, Regime::B, Regime::C];

    pub fn label(self) -> &'static str {
        match self {
            Regime::A => "A",
            Regime::B => "B",
            Regime::C => "C",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    pub x: f64,
    pub x_r: Vec<f64>,
    pub regime: Option<Regime>,
    /// Risk-adjusted producer value including revenue.
    pub objective: f64,
}

pub fn consumer_best_response(inst: &MarketInstance, prices: &PriceVector) -> Result<Vec<f64>> {
    check_len(inst.scenarios(), prices.len())?;
    Ok(consumer_raw(inst, prices.as_slice()))
}

pub fn producer_recourse(inst: &MarketInstance, prices: &PriceVector) -> Result<Vec<f64>> {
    check_len(inst.scenarios(), prices.len())?;
    Ok(recourse_raw(inst, prices.as_slice()))
}

pub(crate) fn consumer_raw(inst: &MarketInstance, prices: &[f64]) -> Vec<f64> {
    prices
        .iter()
        .zip(inst.v().iter().zip(inst.r()))
        .map(|(p, (v, r))| ((v - p) / r).max(0.0))
        .collect()
}

pub(crate) fn recourse_raw(inst: &MarketInstance, prices: &[f64]) -> Vec<f64> {
    prices.iter().zip(inst.c_r()).map(|(p, c)| p / c).collect()
}

/// First-stage quantity at which the two extreme measures of an interval
/// risk set value the producer identically:
/// `x_c = (π₁²/c_r₁ − π₀²/c_r₀) / (2 (π₀ − π₁))`.
pub fn critical_first_stage(inst: &MarketInstance, prices: &PriceVector) -> Result<f64> {
    inst.require_two()?;
    check_len(2, prices.len())?;
    critical_raw(inst, prices.as_slice())
}

pub(crate) fn critical_raw(inst: &MarketInstance, p: &[f64]) -> Result<f64> {
    let gap = p[0] - p[1];
    if gap.abs() < EQUAL_PRICE_TOL {
        return Err(Error::EqualPrices(p[0], p[1]));
    }
    let c = inst.c_r();
    Ok((p[1] * p[1] / c[1] - p[0] * p[0] / c[0]) / (2.0 * gap))
}

/// Scenario-0 weights of the two interval ends, ordered so that the first
/// gives the lower expected price (regime A) and the second the higher
/// (regime C). `None` for equal prices, where the ordering is undefined.
pub(crate) fn regime_measures(rs: &RiskSet, p: &[f64]) -> Option<(f64, f64)> {
    let (lo, hi) = rs.interval_view()?;
    if (p[0] - p[1]).abs() < EQUAL_PRICE_TOL {
        return None;
    }
    // More weight on the cheaper scenario lowers the expected price.
    if p[0] < p[1] {
        Some((hi, lo))
    } else {
        Some((lo, hi))
    }
}

fn two_point_mean(q: f64, p: &[f64]) -> f64 {
    q * p[0] + (1.0 - q) * p[1]
}

/// First-stage thresholds `(x_c, E_A[π]/c, E_C[π]/c)`.
pub(crate) fn regime_thresholds(inst: &MarketInstance, rs: &RiskSet, p: &[f64]) -> Result<(f64, f64, f64)> {
    let xc = critical_raw(inst, p)?;
    let (qa, qc) = regime_measures(rs, p).ok_or(Error::EqualPrices(p[0], p[1]))?;
    Ok((xc, two_point_mean(qa, p) / inst.c(), two_point_mean(qc, p) / inst.c()))
}

pub(crate) fn boundary_band(xc: f64) -> f64 {
    SOLVE_TOL * xc.abs().max(1.0)
}

pub(crate) fn classify_raw(inst: &MarketInstance, rs: &RiskSet, p: &[f64]) -> Result<Regime> {
    let (xc, xa, xcc) = regime_thresholds(inst, rs, p)?;
    let band = boundary_band(xc);
    Ok(if xc < xa - band {
        Regime::A
    } else if xc > xcc + band {
        Regime::C
    } else {
        Regime::B
    })
}

/// Distance from `x_c` to the nearest regime threshold; zero or negative
/// values mean the prices sit on a regime boundary.
pub(crate) fn boundary_margin(inst: &MarketInstance, rs: &RiskSet, p: &[f64]) -> Result<f64> {
    let (xc, xa, xcc) = regime_thresholds(inst, rs, p)?;
    Ok((xc - xa).abs().min((xc - xcc).abs()) - boundary_band(xc))
}

/// Regime of the two-scenario producer best response at `prices`.
///
/// Scenarios are relabelled internally so the cheaper one plays the role of
/// the first scenario; ties within 1e-9 resolve toward `B`.
pub fn classify_regime(inst: &MarketInstance, rs: &RiskSet, prices: &PriceVector) -> Result<Regime> {
    inst.require_two()?;
    check_len(2, prices.len())?;
    check_len(2, rs.scenarios())?;
    classify_raw(inst, rs, prices.as_slice())
}

/// First-stage quantity prescribed by a fixed regime, whether or not the
/// regime holds at `p`.
pub(crate) fn regime_first_stage(inst: &MarketInstance, rs: &RiskSet, p: &[f64], regime: Regime) -> Result<f64> {
    match regime {
        Regime::B => critical_raw(inst, p),
        Regime::A | Regime::C => {
            let (lo, hi) = rs.interval_view().ok_or(Error::NotTwoScenarios(rs.scenarios()))?;
            let q = match regime_measures(rs, p) {
                Some((qa, qc)) => {
                    if regime == Regime::A {
                        qa
                    } else {
                        qc
                    }
                }
                // Equal prices: both ends give the same mean.
                None => {
                    if regime == Regime::A {
                        hi
                    } else {
                        lo
                    }
                }
            };
            Ok(two_point_mean(q, p) / inst.c())
        }
    }
}

/// Producer objective `f(x)` for the recourse-optimised problem.
fn first_stage_objective(inst: &MarketInstance, slopes: &[(f64, f64)], x: f64) -> f64 {
    let worst = slopes
        .iter()
        .map(|(m, k)| m * x + k)
        .fold(f64::INFINITY, f64::min);
    -0.5 * inst.c() * x * x + worst
}

/// `(E_Q[π], E_Q[π²/(2 c_r)])` for every extreme point.
fn affine_pieces(inst: &MarketInstance, rs: &RiskSet, p: &[f64]) -> Vec<(f64, f64)> {
    rs.extremes()
        .iter()
        .map(|q| {
            let q = q.as_slice();
            let mean: f64 = q.iter().zip(p).map(|(w, pi)| w * pi).sum();
            let rent: f64 = q
                .iter()
                .zip(p.iter().zip(inst.c_r()))
                .map(|(w, (pi, c))| w * pi * pi / (2.0 * c))
                .sum();
            (mean, rent)
        })
        .collect()
}

/// Producer best response by enumerating every candidate maximiser of the
/// concave piecewise-quadratic first-stage objective: `0`, each piece's
/// stationary point, and each pairwise breakpoint. Works for any scenario
/// count and risk set.
pub fn producer_best_response_enumerated(
    inst: &MarketInstance,
    rs: &RiskSet,
    prices: &PriceVector,
) -> Result<BestResponse> {
    check_len(inst.scenarios(), prices.len())?;
    check_len(inst.scenarios(), rs.scenarios())?;
    Ok(enumerated_raw(inst, rs, prices.as_slice()))
}

pub(crate) fn enumerated_raw(inst: &MarketInstance, rs: &RiskSet, p: &[f64]) -> BestResponse {
    let pieces = affine_pieces(inst, rs, p);
    let mut candidates = vec![0.0];
    for (i, &(mi, ki)) in pieces.iter().enumerate() {
        candidates.push(mi / inst.c());
        for &(mj, kj) in &pieces[i + 1..] {
            if (mi - mj).abs() > f64::EPSILON * mi.abs().max(mj.abs()) {
                candidates.push((kj - ki) / (mi - mj));
            }
        }
    }
    let mut best_x = 0.0;
    let mut best = f64::NEG_INFINITY;
    for x in candidates.into_iter().filter(|x| x.is_finite() && *x >= 0.0) {
        let f = first_stage_objective(inst, &pieces, x);
        if f > best {
            best = f;
            best_x = x;
        }
    }
    BestResponse {
        x: best_x,
        x_r: recourse_raw(inst, p),
        regime: None,
        objective: best,
    }
}

pub(crate) fn best_response_raw(inst: &MarketInstance, rs: &RiskSet, p: &[f64]) -> Result<BestResponse> {
    if inst.scenarios() == 2 && regime_measures(rs, p).is_some() {
        let regime = classify_raw(inst, rs, p)?;
        let x = regime_first_stage(inst, rs, p, regime)?;
        let pieces = affine_pieces(inst, rs, p);
        Ok(BestResponse {
            x,
            x_r: recourse_raw(inst, p),
            regime: Some(regime),
            objective: first_stage_objective(inst, &pieces, x),
        })
    } else {
        Ok(enumerated_raw(inst, rs, p))
    }
}

/// Producer best response to `prices` under the risk set `rs`.
///
/// Two-scenario instances with distinct prices use the closed-form regime
/// solution; every other case falls back to candidate enumeration.
pub fn producer_best_response(inst: &MarketInstance, rs: &RiskSet, prices: &PriceVector) -> Result<BestResponse> {
    check_len(inst.scenarios(), prices.len())?;
    check_len(inst.scenarios(), rs.scenarios())?;
    best_response_raw(inst, rs, prices.as_slice())
}

//! Iterative price searches: projected tâtonnement and damped Newton.

use super::{excess_raw, max_norm};
use crate::agents::{boundary_margin, classify_raw, regime_measures};
use crate::error::{check_len, Error, Result};
use crate::market::{MarketInstance, PriceVector};
use crate::risk::RiskSet;
use crate::stability::{excess_fd_jacobian, regime_jacobian_raw, Jacobian2};

/// Residual at which tâtonnement stops early.
pub const TATONNEMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TatonnementTrace {
    /// Visited prices, starting point first.
    pub iterates: Vec<PriceVector>,
    /// Excess supply at each iterate.
    pub residuals: Vec<Vec<f64>>,
    pub converged: bool,
    pub final_prices: PriceVector,
}

impl TatonnementTrace {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().map_or(f64::INFINITY, |z| max_norm(z))
    }
}

/// Walrasian tâtonnement `π ← max(0, π + τ (y♯ − x♯ − x_r♯))`, stopping
/// early once `‖z‖∞ < 1e-6`.
pub fn tatonnement(
    inst: &MarketInstance,
    rs: &RiskSet,
    start: &PriceVector,
    step: f64,
    max_iter: usize,
) -> Result<TatonnementTrace> {
    tatonnement_with_tol(inst, rs, start, step, max_iter, TATONNEMENT_TOL)
}

pub fn tatonnement_with_tol(
    inst: &MarketInstance,
    rs: &RiskSet,
    start: &PriceVector,
    step: f64,
    max_iter: usize,
    tol: f64,
) -> Result<TatonnementTrace> {
    check_len(inst.scenarios(), start.len())?;
    check_len(inst.scenarios(), rs.scenarios())?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("step", format!("must be > 0, got {step}")));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter", "must be >= 1"));
    }
    let mut iterates = vec![start.clone()];
    let mut residuals = Vec::new();
    let mut prices = start.as_slice().to_vec();
    let mut converged = false;
    for k in 0..=max_iter {
        let z = excess_raw(inst, rs, &prices)?;
        let done = max_norm(&z) < tol;
        residuals.push(z.clone());
        if done {
            converged = true;
            break;
        }
        if k == max_iter {
            break;
        }
        for (p, zi) in prices.iter_mut().zip(&z) {
            *p = (*p - step * zi).max(0.0);
        }
        iterates.push(PriceVector::new(prices.clone())?);
    }
    Ok(TatonnementTrace {
        final_prices: iterates.last().expect("start is recorded").clone(),
        iterates,
        residuals,
        converged,
    })
}

fn newton_jacobian(inst: &MarketInstance, rs: &RiskSet, p: &[f64]) -> Result<Jacobian2> {
    if regime_measures(rs, p).is_none() {
        return excess_fd_jacobian(inst, rs, p);
    }
    let regime = classify_raw(inst, rs, p)?;
    if boundary_margin(inst, rs, p)? <= 0.0 {
        // Kink: a one-sided derivative is as good as any.
        return excess_fd_jacobian(inst, rs, p);
    }
    regime_jacobian_raw(inst, rs, p, regime)
}

/// Damped Newton on the piecewise-smooth excess supply using the Jacobian
/// of the active regime. Steps are projected onto `π ≥ 0` and halved until
/// `‖z‖∞` decreases.
pub fn newton_search(
    inst: &MarketInstance,
    rs: &RiskSet,
    start: &PriceVector,
    tol: f64,
    max_iter: usize,
) -> Result<PriceVector> {
    inst.require_two()?;
    check_len(2, start.len())?;
    check_len(2, rs.scenarios())?;
    let mut p = start.as_slice().to_vec();
    let mut z = excess_raw(inst, rs, &p)?;
    let mut norm = max_norm(&z);
    for _ in 0..max_iter {
        if norm < tol {
            return PriceVector::new(p);
        }
        let jac = newton_jacobian(inst, rs, &p)?;
        let d = jac.solve([-z[0], -z[1]]).ok_or(Error::SingularJacobian(p[0], p[1]))?;
        let mut t = 1.0;
        loop {
            let cand = [(p[0] + t * d[0]).max(0.0), (p[1] + t * d[1]).max(0.0)];
            let zc = excess_raw(inst, rs, &cand)?;
            let nc = max_norm(&zc);
            if nc < norm {
                p = cand.to_vec();
                z = zc;
                norm = nc;
                break;
            }
            t *= 0.5;
            if t < 1e-12 {
                return Err(Error::NonConvergence {
                    method: "newton line search",
                    iterations: max_iter,
                    residual: norm,
                });
            }
        }
    }
    if norm < tol {
        return PriceVector::new(p);
    }
    Err(Error::NonConvergence {
        method: "newton search",
        iterations: max_iter,
        residual: norm,
    })
}

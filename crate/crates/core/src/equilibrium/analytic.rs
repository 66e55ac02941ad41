//! Enumeration of every two-scenario equilibrium.
//!
//! Regimes A and C make the excess supply affine in the prices, so their
//! candidate roots come from a 2×2 linear solve. Regime B is a pair of
//! conics, solved by Newton multistart. A candidate is an equilibrium only
//! if the regime that generated it is the one active at its prices.

use super::{excess_raw, max_norm, regime_excess_raw, EquilibriumRecord};
use crate::agents::{classify_raw, regime_measures, Regime};
use crate::error::{Error, Result};
use crate::market::{MarketInstance, PriceVector, SOLVE_TOL};
use crate::risk::RiskSet;
use crate::stability::regime_jacobian_raw;

/// Seeds per axis of the regime-B multistart.
const SEEDS_PER_AXIS: usize = 11;
/// Roots closer than this in the max norm are merged.
const DEDUP_RADIUS: f64 = 1e-7;
const CONIC_TOL: f64 = 1e-12;
const CONIC_MAX_ITER: usize = 100;
/// Points scanned along each price axis for boundary equilibria.
const BOUNDARY_SCAN: usize = 400;

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumCensus {
    /// Equilibria with strictly positive prices, sorted by price.
    pub interior: Vec<EquilibriumRecord>,
    /// Equilibria with some zero price.
    pub boundary: Vec<EquilibriumRecord>,
}

/// Affine roots of `z_i = E_q[π]/c + π_i/c_r_i − (V_i − π_i)/r_i`.
fn affine_root(inst: &MarketInstance, q: f64) -> Result<[f64; 2]> {
    let c = inst.c();
    let diag = |i: usize| 1.0 / inst.c_r()[i] + 1.0 / inst.r()[i];
    let m = [[q / c + diag(0), (1.0 - q) / c], [q / c, (1.0 - q) / c + diag(1)]];
    let rhs = [inst.v()[0] / inst.r()[0], inst.v()[1] / inst.r()[1]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.abs() <= SOLVE_TOL * (m[0][0] * m[1][1]).abs() {
        return Err(Error::SingularSystem);
    }
    Ok([
        (m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det,
        (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det,
    ])
}

/// Newton on the fixed regime-B map from `seed`; `None` if it fails.
fn conic_newton(inst: &MarketInstance, rs: &RiskSet, seed: [f64; 2]) -> Option<[f64; 2]> {
    let mut p = seed;
    let mut z = regime_excess_raw(inst, rs, &p, Regime::B).ok()?;
    let mut norm = max_norm(&z);
    for _ in 0..CONIC_MAX_ITER {
        if norm < CONIC_TOL {
            return Some(p);
        }
        let jac = regime_jacobian_raw(inst, rs, &p, Regime::B).ok()?;
        let d = jac.solve([-z[0], -z[1]])?;
        let mut t = 1.0;
        loop {
            let cand = [p[0] + t * d[0], p[1] + t * d[1]];
            if let Ok(zc) = regime_excess_raw(inst, rs, &cand, Regime::B) {
                let nc = max_norm(&zc);
                if nc < norm {
                    p = cand;
                    z = zc;
                    norm = nc;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-12 {
                return None;
            }
        }
    }
    (norm < CONIC_TOL).then_some(p)
}

fn push_unique(roots: &mut Vec<[f64; 2]>, p: [f64; 2]) {
    let near = |r: &[f64; 2]| (r[0] - p[0]).abs().max((r[1] - p[1]).abs()) <= DEDUP_RADIUS;
    if !roots.iter().any(near) {
        roots.push(p);
    }
}

fn residual_ok(inst: &MarketInstance, rs: &RiskSet, p: &[f64], tol: f64) -> bool {
    excess_raw(inst, rs, p).is_ok_and(|z| max_norm(&z) <= tol)
}

/// Roots along the face `π_fixed = 0`: the other price clears its market
/// and the fixed scenario is weakly oversupplied.
fn boundary_roots(inst: &MarketInstance, rs: &RiskSet, tol: f64) -> Result<Vec<[f64; 2]>> {
    let mut roots = Vec::new();
    if excess_raw(inst, rs, &[0.0, 0.0])?.iter().all(|z| *z >= -tol) {
        roots.push([0.0, 0.0]);
    }
    let top = inst.v().iter().cloned().fold(0.0, f64::max).max(1.0);
    for free in 0..2 {
        let point = |t: f64| {
            let mut p = [0.0; 2];
            p[free] = t;
            p
        };
        let f = |t: f64| excess_raw(inst, rs, &point(t)).map(|z| z[free]);
        let grid: Vec<f64> = (1..=BOUNDARY_SCAN).map(|i| top * i as f64 / BOUNDARY_SCAN as f64).collect();
        let mut prev = (grid[0], f(grid[0])?);
        for &t in &grid[1..] {
            let cur = (t, f(t)?);
            if prev.1 == 0.0 || prev.1.signum() != cur.1.signum() {
                let (mut lo, mut hi) = (prev.0, cur.0);
                let lo_sign = prev.1.signum();
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid)?.signum() == lo_sign {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let root = point(0.5 * (lo + hi));
                let z = excess_raw(inst, rs, &root)?;
                if z[1 - free] >= -tol && z[free].abs() <= tol {
                    push_unique(&mut roots, root);
                }
            }
            prev = cur;
        }
    }
    Ok(roots)
}

/// All equilibria of a two-scenario instance, with strictly positive
/// prices in `interior` and zero-price ones in `boundary`.
pub fn analytic_equilibria(inst: &MarketInstance, rs: &RiskSet) -> Result<EquilibriumCensus> {
    inst.require_two()?;
    if rs.scenarios() != 2 {
        return Err(Error::NotTwoScenarios(rs.scenarios()));
    }
    let (lo, hi) = rs.interval_view().expect("two scenarios");
    let degenerate = hi - lo <= SOLVE_TOL;
    // Accept roots whose full excess supply vanishes to this level.
    let accept = 1e-9;

    let mut roots: Vec<[f64; 2]> = Vec::new();

    let mut ends = vec![hi];
    if !degenerate {
        ends.push(lo);
    }
    for q in ends {
        let p = affine_root(inst, q)?;
        if !(p[0] > 0.0 && p[1] > 0.0) {
            continue;
        }
        let consistent = match regime_measures(rs, &p) {
            _ if degenerate => true,
            None => true,
            Some((qa, _)) => {
                let generating = if q == qa { Regime::A } else { Regime::C };
                classify_raw(inst, rs, &p)? == generating
            }
        };
        if consistent && residual_ok(inst, rs, &p, accept) {
            push_unique(&mut roots, p);
        }
    }

    let top = inst.v().iter().cloned().fold(0.0, f64::max);
    let axis: Vec<f64> = (0..SEEDS_PER_AXIS)
        .map(|i| top * i as f64 / (SEEDS_PER_AXIS - 1) as f64)
        .collect();
    for &a in &axis {
        for &b in &axis {
            if (a - b).abs() < 1e-12 {
                continue;
            }
            let Some(p) = conic_newton(inst, rs, [a, b]) else {
                continue;
            };
            if p[0] > 0.0
                && p[1] > 0.0
                && classify_raw(inst, rs, &p).ok() == Some(Regime::B)
                && residual_ok(inst, rs, &p, accept)
            {
                push_unique(&mut roots, p);
            }
        }
    }

    let mut interior = roots
        .into_iter()
        .map(|p| EquilibriumRecord::at(inst, rs, PriceVector::new(p.to_vec())?, accept))
        .collect::<Result<Vec<_>>>()?;
    interior.sort_by(|a, b| {
        let (pa, pb) = (a.prices.as_slice(), b.prices.as_slice());
        pa[0].total_cmp(&pb[0]).then(pa[1].total_cmp(&pb[1]))
    });

    let boundary = boundary_roots(inst, rs, accept)?
        .into_iter()
        .map(|p| EquilibriumRecord::at(inst, rs, PriceVector::new(p.to_vec())?, accept))
        .collect::<Result<Vec<_>>>()?;

    Ok(EquilibriumCensus { interior, boundary })
}

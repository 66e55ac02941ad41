//! Multistart sweeps over a price grid.

use rayon::prelude::*;
use riskeq_core::{
    classify_regime, classify_stability, newton_search, tatonnement_with_tol, EquilibriumRecord, MarketInstance,
    PriceVector, Regime, RiskSet, StabilityClass,
};

use crate::config::{Grid, SweepMethod};

/// Endpoints closer than this in the max norm share a cluster.
pub const CLUSTER_RADIUS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Newton,
    Tatonnement,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Newton => "newton",
            Method::Tatonnement => "tatonnement",
        }
    }

    pub fn from_choice(choice: SweepMethod) -> Vec<Method> {
        match choice {
            SweepMethod::Newton => vec![Method::Newton],
            SweepMethod::Tatonnement => vec![Method::Tatonnement],
            SweepMethod::Both => vec![Method::Newton, Method::Tatonnement],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    /// First endpoint that founded the cluster, in seed order.
    pub representative: [f64; 2],
    /// Seeds whose endpoint fell in this cluster.
    pub seeds: usize,
    pub regime: Option<Regime>,
    pub stability: Option<StabilityClass>,
    /// Passes the equilibrium check at the sweep tolerance.
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCensus {
    pub method: Method,
    pub clusters: Vec<Cluster>,
    /// Seeds that did not converge.
    pub failures: usize,
}

fn endpoint(inst: &MarketInstance, rs: &RiskSet, seed: [f64; 2], method: Method, s: &SweepSettings) -> Option<[f64; 2]> {
    let start = PriceVector::new(seed.to_vec()).ok()?;
    let end = match method {
        Method::Newton => newton_search(inst, rs, &start, s.tol, s.max_iter).ok()?,
        Method::Tatonnement => {
            let trace = tatonnement_with_tol(inst, rs, &start, s.tau, s.max_iter, s.tol).ok()?;
            if !trace.converged {
                return None;
            }
            trace.final_prices
        }
    };
    let p = end.as_slice();
    Some([p[0], p[1]])
}

/// Runs `method` from every grid node and clusters the converged endpoints
/// greedily in seed order.
pub fn multistart_sweep(
    inst: &MarketInstance,
    rs: &RiskSet,
    grid: &Grid,
    method: Method,
    settings: &SweepSettings,
) -> SweepCensus {
    let endpoints: Vec<Option<[f64; 2]>> = grid
        .nodes()
        .par_iter()
        .map(|&seed| endpoint(inst, rs, seed, method, settings))
        .collect();

    let mut found: Vec<([f64; 2], usize)> = Vec::new();
    let mut failures = 0;
    for e in endpoints {
        let Some(p) = e else {
            failures += 1;
            continue;
        };
        match found
            .iter_mut()
            .find(|(q, _)| (q[0] - p[0]).abs().max((q[1] - p[1]).abs()) <= CLUSTER_RADIUS)
        {
            Some((_, n)) => *n += 1,
            None => found.push((p, 1)),
        }
    }

    let clusters = found
        .into_iter()
        .map(|(p, seeds)| {
            let prices = PriceVector::new(p.to_vec()).expect("endpoints are nonnegative");
            let regime = classify_regime(inst, rs, &prices).ok();
            let rec = EquilibriumRecord::at(inst, rs, prices, settings.tol).ok();
            let stability = rec
                .as_ref()
                .and_then(|r| classify_stability(inst, rs, r).ok())
                .map(|a| a.class);
            let verified = rec.is_some_and(|r| r.residual <= settings.tol);
            Cluster {
                representative: p,
                seeds,
                regime,
                stability,
                verified,
            }
        })
        .collect();

    SweepCensus {
        method,
        clusters,
        failures,
    }
}

//! Local stability of two-scenario equilibria.
//!
//! An equilibrium is classified from the eigenvalues of the Jacobian of the
//! excess-supply map `z(π)`: stable when both real parts are strictly
//! positive. This is the linearisation criterion for the price flow
//! `π' = −z(π)` (prices rise under excess demand), which is also the flow
//! the discrete tâtonnement follows.

use std::fmt;

use num_complex::Complex64;

use crate::agents::{boundary_margin, classify_raw, critical_raw, regime_measures, Regime};
use crate::equilibrium::{excess_raw, regime_excess_raw, EquilibriumRecord};
use crate::error::{check_len, Error, Result};
use crate::market::{MarketInstance, PriceVector};
use crate::risk::RiskSet;

/// Real parts within this distance of zero are treated as zero.
pub const EIGEN_ZERO_TOL: f64 = 1e-9;
/// Step of the central finite-difference Jacobian.
pub const FD_STEP: f64 = 1e-6;

/// `entries[i][j] = ∂z_i/∂π_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian2 {
    pub entries: [[f64; 2]; 2],
}

impl Jacobian2 {
    pub fn new(entries: [[f64; 2]; 2]) -> Self {
        Self { entries }
    }

    pub fn trace(&self) -> f64 {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn det(&self) -> f64 {
        self.entries[0][0] * self.entries[1][1] - self.entries[0][1] * self.entries[1][0]
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut e = self.entries;
        e.iter_mut().flatten().for_each(|v| *v *= factor);
        Self::new(e)
    }

    fn max_abs(&self) -> f64 {
        self.entries.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Solves `J d = rhs`; `None` when singular.
    pub fn solve(&self, rhs: [f64; 2]) -> Option<[f64; 2]> {
        let det = self.det();
        let scale = self.max_abs().powi(2);
        if det == 0.0 || !det.is_finite() || det.abs() <= 1e-14 * scale {
            return None;
        }
        let [[a, b], [c, d]] = self.entries;
        Some([(d * rhs[0] - b * rhs[1]) / det, (a * rhs[1] - c * rhs[0]) / det])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianEstimate {
    pub regime: Regime,
    pub analytic: Jacobian2,
    pub finite_difference: Jacobian2,
    /// `max |analytic − fd| / max |analytic|`.
    pub max_rel_discrepancy: f64,
}

/// Analytic Jacobian of the fixed-regime excess supply at `p`.
pub(crate) fn regime_jacobian_raw(inst: &MarketInstance, rs: &RiskSet, p: &[f64], regime: Regime) -> Result<Jacobian2> {
    let c = inst.c();
    let dx: [f64; 2] = match regime {
        Regime::A | Regime::C => {
            let (lo, hi) = rs.interval_view().ok_or(Error::NotTwoScenarios(rs.scenarios()))?;
            let q = match (regime_measures(rs, p), regime) {
                (Some((qa, _)), Regime::A) => qa,
                (Some((_, qc)), _) => qc,
                (None, Regime::A) => hi,
                (None, _) => lo,
            };
            [q / c, (1.0 - q) / c]
        }
        Regime::B => {
            // x_c = N / (2D), N = π₁²/c_r₁ − π₀²/c_r₀, D = π₀ − π₁.
            critical_raw(inst, p)?;
            let cr = inst.c_r();
            let n = p[1] * p[1] / cr[1] - p[0] * p[0] / cr[0];
            let d = p[0] - p[1];
            let spill = n / (2.0 * d * d);
            [-p[0] / cr[0] / d - spill, p[1] / cr[1] / d + spill]
        }
    };
    let mut entries = [[dx[0], dx[1]], [dx[0], dx[1]]];
    for i in 0..2 {
        let demand_slope = if p[i] < inst.v()[i] { 1.0 / inst.r()[i] } else { 0.0 };
        entries[i][i] += 1.0 / inst.c_r()[i] + demand_slope;
    }
    Ok(Jacobian2::new(entries))
}

fn central_difference(f: impl Fn(&[f64]) -> Result<Vec<f64>>, p: &[f64]) -> Result<Jacobian2> {
    let mut entries = [[0.0; 2]; 2];
    for j in 0..2 {
        let mut up = p.to_vec();
        let mut down = p.to_vec();
        up[j] += FD_STEP;
        down[j] -= FD_STEP;
        let (zu, zd) = (f(&up)?, f(&down)?);
        for i in 0..2 {
            entries[i][j] = (zu[i] - zd[i]) / (2.0 * FD_STEP);
        }
    }
    Ok(Jacobian2::new(entries))
}

pub(crate) fn excess_fd_jacobian(inst: &MarketInstance, rs: &RiskSet, p: &[f64]) -> Result<Jacobian2> {
    central_difference(|q| excess_raw(inst, rs, q), p)
}

/// Jacobian of the excess supply at `prices`, analytically and by central
/// differences.
///
/// Without a forced regime the active one is used and prices on a regime
/// boundary are rejected. With a forced regime the fixed-regime formula is
/// differentiated wherever it is defined.
pub fn jacobian(
    inst: &MarketInstance,
    rs: &RiskSet,
    prices: &PriceVector,
    regime: Option<Regime>,
) -> Result<JacobianEstimate> {
    inst.require_two()?;
    check_len(2, prices.len())?;
    check_len(2, rs.scenarios())?;
    let p = prices.as_slice();
    let (regime, fd) = match regime {
        Some(r) => (r, central_difference(|q| regime_excess_raw(inst, rs, q, r), p)?),
        None => {
            let r = classify_raw(inst, rs, p)?;
            if boundary_margin(inst, rs, p)? <= 0.0 {
                return Err(Error::RegimeBoundary(p[0], p[1]));
            }
            (r, excess_fd_jacobian(inst, rs, p)?)
        }
    };
    let analytic = regime_jacobian_raw(inst, rs, p, regime)?;
    let mut diff: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            diff = diff.max((analytic.entries[i][j] - fd.entries[i][j]).abs());
        }
    }
    Ok(JacobianEstimate {
        regime,
        analytic,
        finite_difference: fd,
        max_rel_discrepancy: diff / analytic.max_abs().max(f64::MIN_POSITIVE),
    })
}

/// Roots of `λ² − tr λ + det`, real roots in decreasing order, complex
/// roots with the positive imaginary part first.
pub fn eig2(m: &Jacobian2) -> (Complex64, Complex64) {
    let half = 0.5 * m.trace();
    let det = m.det();
    let disc = half * half - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        // Add with the sign of the trace to avoid cancellation.
        let big = if half >= 0.0 { half + s } else { half - s };
        let small = if big != 0.0 { det / big } else { 0.0 };
        let (hi, lo) = if big >= small { (big, small) } else { (small, big) };
        (Complex64::new(hi, 0.0), Complex64::new(lo, 0.0))
    } else {
        let s = (-disc).sqrt();
        (Complex64::new(half, s), Complex64::new(half, -s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StabilityClass {
    Stable,
    Unstable,
    Marginal,
}

impl StabilityClass {
    pub fn label(self) -> &'static str {
        match self {
            StabilityClass::Stable => "Stable",
            StabilityClass::Unstable => "Unstable",
            StabilityClass::Marginal => "Marginal",
        }
    }
}

impl fmt::Display for StabilityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn classify_eigenvalues(eigs: (Complex64, Complex64)) -> StabilityClass {
    let re = [eigs.0.re, eigs.1.re];
    if re.iter().any(|r| *r < -EIGEN_ZERO_TOL) {
        StabilityClass::Unstable
    } else if re.iter().all(|r| *r > EIGEN_ZERO_TOL) {
        StabilityClass::Stable
    } else {
        StabilityClass::Marginal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityAssessment {
    pub class: StabilityClass,
    pub eigenvalues: Option<(Complex64, Complex64)>,
    pub jacobian: Option<JacobianEstimate>,
    /// Set when no one-sided Jacobian was trusted, e.g. on a regime boundary.
    pub diagnostic: Option<String>,
}

pub fn classify_stability(inst: &MarketInstance, rs: &RiskSet, eq: &EquilibriumRecord) -> Result<StabilityAssessment> {
    classify_prices(inst, rs, &eq.prices)
}

pub(crate) fn classify_prices(inst: &MarketInstance, rs: &RiskSet, prices: &PriceVector) -> Result<StabilityAssessment> {
    match jacobian(inst, rs, prices, None) {
        Ok(est) => {
            let eigs = eig2(&est.analytic);
            Ok(StabilityAssessment {
                class: classify_eigenvalues(eigs),
                eigenvalues: Some(eigs),
                jacobian: Some(est),
                diagnostic: None,
            })
        }
        Err(e @ (Error::RegimeBoundary(..) | Error::EqualPrices(..))) => Ok(StabilityAssessment {
            class: StabilityClass::Marginal,
            eigenvalues: None,
            jacobian: None,
            diagnostic: Some(e.to_string()),
        }),
        Err(e) => Err(e),
    }
}

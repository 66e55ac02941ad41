//! Polyhedral coherent risk measures in dual form.
//!
//! A risk set is stored by its extreme points `Q_1..Q_K`; the risk-adjusted
//! value of a random outcome `z` is `min_k E_{Q_k}[z]`.

use crate::error::{check_len, Error, Result};
use crate::market::ProbabilityVector;

/// Relative tolerance for declaring two extreme expectations tied.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RiskSet {
    extremes: Vec<ProbabilityVector>,
}

impl RiskSet {
    pub fn new(extremes: Vec<ProbabilityVector>) -> Result<Self> {
        let n = extremes.first().ok_or(Error::EmptyRiskSet)?.len();
        for q in &extremes {
            check_len(n, q.len())?;
        }
        Ok(Self { extremes })
    }

    /// Risk-neutral measure viewed as a one-point risk set.
    pub fn singleton(p: ProbabilityVector) -> Self {
        Self { extremes: vec![p] }
    }

    /// Two-scenario interval set with extremes `(lo, 1−lo)` and `(hi, 1−hi)`.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if lo > hi {
            return Err(Error::invalid("interval", format!("lower end {lo} exceeds upper end {hi}")));
        }
        Self::new(vec![ProbabilityVector::two_point(lo)?, ProbabilityVector::two_point(hi)?])
    }

    /// `conv{(1/4, 3/4), (3/4, 1/4)}`.
    pub fn quarter_interval() -> Self {
        Self::interval(0.25, 0.75).expect("valid interval")
    }

    pub fn extremes(&self) -> &[ProbabilityVector] {
        &self.extremes
    }

    pub fn len(&self) -> usize {
        self.extremes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.extremes.is_empty()
    }

    pub fn scenarios(&self) -> usize {
        self.extremes[0].len()
    }

    /// For two scenarios, the range `(p_lo, p_hi)` of probabilities the set
    /// assigns to scenario 0.
    pub fn interval_view(&self) -> Option<(f64, f64)> {
        if self.scenarios() != 2 {
            return None;
        }
        let first = self.extremes.iter().map(|q| q.as_slice()[0]);
        let lo = first.clone().fold(f64::INFINITY, f64::min);
        let hi = first.fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }
}

pub fn expected_value(p: &ProbabilityVector, z: &[f64]) -> Result<f64> {
    check_len(p.len(), z.len())?;
    Ok(p.as_slice().iter().zip(z).map(|(pi, zi)| pi * zi).sum())
}

/// Expectations of `z` under every extreme point.
pub fn extreme_expectations(rs: &RiskSet, z: &[f64]) -> Result<Vec<f64>> {
    if rs.is_empty() {
        return Err(Error::EmptyRiskSet);
    }
    rs.extremes().iter().map(|q| expected_value(q, z)).collect()
}

pub fn risk_evaluate(rs: &RiskSet, z: &[f64]) -> Result<f64> {
    Ok(extreme_expectations(rs, z)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCase {
    pub value: f64,
    /// Indices of extremes attaining the minimum within [`TIE_TOL`].
    pub active: Vec<usize>,
    /// Uniform average of the active extremes.
    pub mixture: ProbabilityVector,
}

pub fn worst_case_measures(rs: &RiskSet, z: &[f64]) -> Result<WorstCase> {
    let values = extreme_expectations(rs, z)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let band = TIE_TOL * min.abs().max(1.0);
    let active: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v - min <= band)
        .map(|(k, _)| k)
        .collect();
    let mut weights = vec![0.0; rs.len()];
    for &k in &active {
        weights[k] = 1.0 / active.len() as f64;
    }
    let mixture = ProbabilityVector::mixture(&weights, rs.extremes())?;
    Ok(WorstCase {
        value: min,
        active,
        mixture,
    })
}

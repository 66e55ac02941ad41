//! Market data and scenario-wise welfares.
//!
//! A producer commits to a first-stage quantity `x` at quadratic cost
//! `c x² / 2` and adds recourse production `x_r[ω]` at cost
//! `c_r[ω] x_r[ω]² / 2` once the scenario is known. A consumer buys `y[ω]`
//! with concave utility `V[ω] y − r[ω] y² / 2`. Welfares below exclude the
//! payment for the good unless prices are supplied explicitly.

use crate::error::{check_len, Error, Result};

/// Default tolerance for linear solves and tie detection.
pub const SOLVE_TOL: f64 = 1e-9;
/// Default tolerance for equilibrium residuals.
pub const EQUILIBRIUM_TOL: f64 = 1e-6;
/// Tolerance on the total mass of a probability vector.
pub const PROBABILITY_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MarketInstance {
    first_stage_cost: f64,
    recourse_cost: Vec<f64>,
    choke_value: Vec<f64>,
    curvature: Vec<f64>,
}

impl MarketInstance {
    /// Builds an instance from the first-stage cost slope `c` and the
    /// per-scenario recourse cost slopes, choke values and utility curvatures.
    pub fn new(
        first_stage_cost: f64,
        recourse_cost: Vec<f64>,
        choke_value: Vec<f64>,
        curvature: Vec<f64>,
    ) -> Result<Self> {
        let n = recourse_cost.len();
        if n == 0 {
            return Err(Error::invalid("c_r", "at least one scenario is required"));
        }
        check_len(n, choke_value.len())?;
        check_len(n, curvature.len())?;
        if !(first_stage_cost.is_finite() && first_stage_cost > 0.0) {
            return Err(Error::invalid("c", format!("must be > 0, got {first_stage_cost}")));
        }
        for (i, &v) in recourse_cost.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("c_r[{i}]"), format!("must be > 0, got {v}")));
            }
        }
        for (i, &v) in curvature.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("r[{i}]"), format!("must be > 0, got {v}")));
            }
        }
        for (i, &v) in choke_value.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("v[{i}]"), format!("must be >= 0, got {v}")));
            }
        }
        Ok(Self {
            first_stage_cost,
            recourse_cost,
            choke_value,
            curvature,
        })
    }

    /// Two-scenario instance with three risk-averse equilibria under the
    /// risk set `conv{(1/4, 3/4), (3/4, 1/4)}`.
    pub fn three_equilibria_example() -> Self {
        Self::new(23.0 / 2.0, vec![1.0, 7.0 / 2.0], vec![4.0, 48.0 / 5.0], vec![2.0, 10.0])
            .expect("example parameters are valid")
    }

    pub fn scenarios(&self) -> usize {
        self.recourse_cost.len()
    }

    /// First-stage cost slope `c`.
    pub fn c(&self) -> f64 {
        self.first_stage_cost
    }

    pub fn c_r(&self) -> &[f64] {
        &self.recourse_cost
    }

    pub fn v(&self) -> &[f64] {
        &self.choke_value
    }

    pub fn r(&self) -> &[f64] {
        &self.curvature
    }

    pub(crate) fn check_scenario(&self, index: usize) -> Result<()> {
        if index < self.scenarios() {
            Ok(())
        } else {
            Err(Error::ScenarioOutOfRange {
                index,
                len: self.scenarios(),
            })
        }
    }

    pub(crate) fn require_two(&self) -> Result<()> {
        if self.scenarios() == 2 {
            Ok(())
        } else {
            Err(Error::NotTwoScenarios(self.scenarios()))
        }
    }
}

/// Nonnegative weights over scenarios summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("probability", "empty vector"));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid(
                    format!("probability[{i}]"),
                    format!("must be >= 0, got {w}"),
                ));
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
            return Err(Error::invalid(
                "probability",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        Ok(Self(weights))
    }

    /// Two-scenario measure putting `p` on scenario 0.
    pub fn two_point(p: f64) -> Result<Self> {
        Self::new(vec![p, 1.0 - p])
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n.max(1)])
    }

    /// Convex combination `Σ_k λ_k Q_k`, renormalised against rounding.
    pub fn mixture(weights: &[f64], measures: &[ProbabilityVector]) -> Result<Self> {
        check_len(measures.len(), weights.len())?;
        let n = measures.first().ok_or(Error::EmptyRiskSet)?.len();
        let mut out = vec![0.0; n];
        for (w, q) in weights.iter().zip(measures) {
            check_len(n, q.len())?;
            for (o, qi) in out.iter_mut().zip(q.as_slice()) {
                *o += w * qi;
            }
        }
        let total: f64 = out.iter().sum();
        if total > 0.0 {
            out.iter_mut().for_each(|o| *o /= total);
        }
        Self::new(out)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Nonnegative spot prices, one per scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceVector(Vec<f64>);

impl PriceVector {
    pub fn new(prices: Vec<f64>) -> Result<Self> {
        for (i, &p) in prices.iter().enumerate() {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::invalid(format!("price[{i}]"), format!("must be >= 0, got {p}")));
            }
        }
        Ok(Self(prices))
    }

    /// Componentwise projection onto the nonnegative orthant.
    pub fn projected(prices: Vec<f64>) -> Result<Self> {
        Self::new(prices.into_iter().map(|p| p.max(0.0)).collect())
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub x: f64,
    pub x_r: Vec<f64>,
    pub y: Vec<f64>,
}

impl Allocation {
    pub fn new(x: f64, x_r: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_len(x_r.len(), y.len())?;
        if !(x.is_finite() && x >= 0.0) {
            return Err(Error::invalid("x", format!("must be >= 0, got {x}")));
        }
        for (name, values) in [("x_r", &x_r), ("y", &y)] {
            for (i, &v) in values.iter().enumerate() {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::invalid(format!("{name}[{i}]"), format!("must be >= 0, got {v}")));
                }
            }
        }
        Ok(Self { x, x_r, y })
    }

    pub fn scenarios(&self) -> usize {
        self.x_r.len()
    }

    /// `x + x_r[ω] − y[ω]`, the per-scenario supply surplus.
    pub fn surplus(&self) -> Vec<f64> {
        self.x_r
            .iter()
            .zip(&self.y)
            .map(|(xr, y)| self.x + xr - y)
            .collect()
    }
}

/// Producer welfare `−c x²/2 − c_r[ω] x_r[ω]²/2`, excluding revenue.
pub fn producer_welfare(inst: &MarketInstance, alloc: &Allocation, scenario: usize) -> Result<f64> {
    inst.check_scenario(scenario)?;
    alloc_matches(inst, alloc)?;
    let xr = alloc.x_r[scenario];
    Ok(-0.5 * inst.c() * alloc.x * alloc.x - 0.5 * inst.c_r()[scenario] * xr * xr)
}

/// Consumer welfare `V[ω] y[ω] − r[ω] y[ω]²/2`, excluding payment.
pub fn consumer_welfare(inst: &MarketInstance, alloc: &Allocation, scenario: usize) -> Result<f64> {
    inst.check_scenario(scenario)?;
    alloc_matches(inst, alloc)?;
    let y = alloc.y[scenario];
    Ok(inst.v()[scenario] * y - 0.5 * inst.r()[scenario] * y * y)
}

/// Social welfare per scenario, producer plus consumer.
pub fn social_welfare(inst: &MarketInstance, alloc: &Allocation) -> Result<Vec<f64>> {
    (0..inst.scenarios())
        .map(|w| Ok(producer_welfare(inst, alloc, w)? + consumer_welfare(inst, alloc, w)?))
        .collect()
}

/// Per-scenario welfares after trading at `prices`:
/// the producer gains `π (x + x_r)`, the consumer pays `π y`.
pub fn traded_welfares(
    inst: &MarketInstance,
    alloc: &Allocation,
    prices: &PriceVector,
) -> Result<(Vec<f64>, Vec<f64>)> {
    alloc_matches(inst, alloc)?;
    check_len(inst.scenarios(), prices.len())?;
    let n = inst.scenarios();
    let mut wp = Vec::with_capacity(n);
    let mut wc = Vec::with_capacity(n);
    for w in 0..n {
        let pi = prices.as_slice()[w];
        wp.push(producer_welfare(inst, alloc, w)? + pi * (alloc.x + alloc.x_r[w]));
        wc.push(consumer_welfare(inst, alloc, w)? - pi * alloc.y[w]);
    }
    Ok((wp, wc))
}

fn alloc_matches(inst: &MarketInstance, alloc: &Allocation) -> Result<()> {
    check_len(inst.scenarios(), alloc.x_r.len())?;
    check_len(inst.scenarios(), alloc.y.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example() -> MarketInstance {
        MarketInstance::three_equilibria_example()
    }

    fn blue_alloc() -> Allocation {
        // Table-1 allocation at the regime-b equilibrium prices.
        let prices = [1.23578, 2.10953];
        let inst = example();
        let x_r: Vec<f64> = prices.iter().zip(inst.c_r()).map(|(p, c)| p / c).collect();
        let y: Vec<f64> = (0..2).map(|i| (inst.v()[i] - prices[i]) / inst.r()[i]).collect();
        let x = (prices[1] * prices[1] / inst.c_r()[1] - prices[0] * prices[0] / inst.c_r()[0])
            / (2.0 * (prices[0] - prices[1]));
        Allocation::new(x, x_r, y).unwrap()
    }

    #[test]
    fn producer_welfare_examples() {
        let inst = example();
        let zero = Allocation::new(0.0, vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert_eq!(producer_welfare(&inst, &zero, 0).unwrap(), 0.0);

        let a = Allocation::new(0.14632, vec![1.23578, 0.0], vec![0.0, 0.0]).unwrap();
        assert!((producer_welfare(&inst, &a, 0).unwrap() + 0.88668).abs() < 1e-4);

        let small = MarketInstance::new(2.0, vec![4.0], vec![1.0], vec![1.0]).unwrap();
        let a = Allocation::new(1.0, vec![1.0], vec![0.0]).unwrap();
        assert_eq!(producer_welfare(&small, &a, 0).unwrap(), -3.0);
    }

    #[test]
    fn consumer_welfare_examples() {
        let inst = example();
        let a = Allocation::new(0.0, vec![0.0, 0.0], vec![1.38211, 0.0]).unwrap();
        assert!((consumer_welfare(&inst, &a, 0).unwrap() - 3.61822).abs() < 1e-4);
        assert_eq!(consumer_welfare(&inst, &a, 1).unwrap(), 0.0);

        let small = MarketInstance::new(1.0, vec![1.0], vec![2.0], vec![2.0]).unwrap();
        let a = Allocation::new(0.0, vec![0.0], vec![1.0]).unwrap();
        assert_eq!(consumer_welfare(&small, &a, 0).unwrap(), 1.0);
    }

    #[test]
    fn scenario_out_of_range() {
        let inst = example();
        let a = Allocation::new(0.0, vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        assert!(matches!(
            producer_welfare(&inst, &a, 2),
            Err(Error::ScenarioOutOfRange { index: 2, len: 2 })
        ));
        assert!(consumer_welfare(&inst, &a, 5).is_err());
    }

    #[test]
    fn traded_welfares_at_blue_and_green() {
        let inst = example();
        let a = blue_alloc();
        let zero = PriceVector::zeros(2);
        let (wp0, wc0) = traded_welfares(&inst, &a, &zero).unwrap();
        for w in 0..2 {
            assert_eq!(wp0[w], producer_welfare(&inst, &a, w).unwrap());
            assert_eq!(wc0[w], consumer_welfare(&inst, &a, w).unwrap());
        }

        let blue = PriceVector::new(vec![1.23578, 2.10953]).unwrap();
        let (wp, wc) = traded_welfares(&inst, &a, &blue).unwrap();
        for (got, want) in wp.iter().zip([0.8213, 0.8213]) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
        for (got, want) in wc.iter().zip([1.9102, 2.8054]) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }

        let green = [1.2256, 2.0698];
        let y: Vec<f64> = (0..2).map(|i| (inst.v()[i] - green[i]) / inst.r()[i]).collect();
        let a = Allocation::new(0.16163, vec![green[0], green[1] / 3.5], y).unwrap();
        let (_, wc) = traded_welfares(&inst, &a, &PriceVector::new(green.to_vec()).unwrap()).unwrap();
        for (got, want) in wc.iter().zip([1.9243, 2.8350]) {
            assert!((got - want).abs() < 1e-3, "{got} vs {want}");
        }
    }

    #[test]
    fn dimension_mismatch() {
        let inst = example();
        let a = Allocation::new(0.0, vec![0.0], vec![0.0]).unwrap();
        assert!(matches!(
            traded_welfares(&inst, &a, &PriceVector::zeros(1)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn instance_invariants() {
        assert!(MarketInstance::new(0.0, vec![1.0], vec![1.0], vec![1.0]).is_err());
        assert!(MarketInstance::new(1.0, vec![1.0], vec![-1.0], vec![1.0]).is_err());
        let err = MarketInstance::new(1.0, vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("r[1]"), "{err}");
        assert!(ProbabilityVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbabilityVector::new(vec![-0.1, 1.1]).is_err());
        assert!(PriceVector::new(vec![-1.0]).is_err());
    }

    proptest! {
        #[test]
        fn producer_welfare_nonpositive(x in 0.0..10.0f64, xr in 0.0..10.0f64) {
            let inst = example();
            let a = Allocation::new(x, vec![xr, xr], vec![0.0, 0.0]).unwrap();
            prop_assert!(producer_welfare(&inst, &a, 0).unwrap() <= 0.0);
            prop_assert!(producer_welfare(&inst, &a, 1).unwrap() <= 0.0);
        }

        #[test]
        fn consumer_welfare_bounded_by_peak(y in 0.0..20.0f64, w in 0usize..2) {
            let inst = example();
            let a = Allocation::new(0.0, vec![0.0, 0.0], vec![y, y]).unwrap();
            let (v, r) = (inst.v()[w], inst.r()[w]);
            prop_assert!(consumer_welfare(&inst, &a, w).unwrap() <= v * v / (2.0 * r) + 1e-12);
        }

        #[test]
        fn traded_welfares_affine_in_price(
            p0 in 0.0..5.0f64, p1 in 0.0..5.0f64, alpha in 0.0..4.0f64,
            x in 0.0..2.0f64, y0 in 0.0..2.0f64,
        ) {
            let inst = example();
            let a = Allocation::new(x, vec![0.3, 0.7], vec![y0, 0.5]).unwrap();
            let base = traded_welfares(&inst, &a, &PriceVector::zeros(2)).unwrap();
            let full = traded_welfares(&inst, &a, &PriceVector::new(vec![p0, p1]).unwrap()).unwrap();
            let scaled = traded_welfares(&inst, &a, &PriceVector::new(vec![alpha * p0, alpha * p1]).unwrap()).unwrap();
            for w in 0..2 {
                prop_assert!(((scaled.0[w] - base.0[w]) - alpha * (full.0[w] - base.0[w])).abs() < 1e-9);
                prop_assert!(((scaled.1[w] - base.1[w]) - alpha * (full.1[w] - base.1[w])).abs() < 1e-9);
            }
        }
    }
}

//! Equilibria of a two-stage single-good market with risk-averse agents.
//!
//! A producer commits to a first-stage quantity before the scenario is
//! known and adds recourse production afterwards; a consumer buys in each
//! scenario. Risk is evaluated with a polyhedral coherent risk measure, the
//! minimum expectation over a finite set of probability measures.
//!
//! The crate covers agents' best responses, the risk-neutral and
//! risk-averse planners, competitive equilibria (analytic enumeration,
//! tâtonnement and Newton search), the risk-trading equilibrium with
//! Arrow-Debreu securities, and local stability of equilibria.

pub mod agents;
pub mod equilibrium;
pub mod error;
pub mod market;
pub mod planner;
pub mod risk;
pub mod stability;

pub use agents::{
    classify_regime, consumer_best_response, critical_first_stage, producer_best_response,
    producer_best_response_enumerated, producer_recourse, BestResponse, Regime,
};
pub use equilibrium::{
    analytic_equilibria, construct_raad, excess_supply, newton_search, regime_excess, tatonnement, tatonnement_with_tol,
    verify_equilibrium, verify_raad, verify_risk_neutral, EquilibriumCensus, EquilibriumRecord, RaadCheck,
    RaadRecord, SecurityPositions, TatonnementTrace, VerificationReport, WelfarePair,
};
pub use error::{Error, Result};
pub use market::{
    consumer_welfare, producer_welfare, social_welfare, traded_welfares, Allocation, MarketInstance, PriceVector,
    ProbabilityVector,
};
pub use planner::{solve_rasp, solve_rasp_with, solve_rnsp, PlannerConfig, PlannerSolution};
pub use risk::{expected_value, extreme_expectations, risk_evaluate, worst_case_measures, RiskSet, WorstCase};
pub use stability::{
    classify_eigenvalues, classify_stability, eig2, jacobian, Jacobian2, JacobianEstimate, StabilityAssessment,
    StabilityClass,
};

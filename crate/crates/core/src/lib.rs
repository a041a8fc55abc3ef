//! Quantile-based and expectile-based tail risk measures for parametric,
//! empirical, and finite-atom loss distributions: value at risk, expected
//! shortfall, tail conditional expectations, expectiles and the
//! expectile-based expected shortfall, together with its concave distortion
//! upper bound, its expected-shortfall-mixture lower bounds, dual
//! verification on finite spaces, and extreme-value limit diagnostics.

pub mod asymptotics;
pub mod distortion;
pub mod distributions;
pub mod dual;
pub mod error;
pub mod expectile;
pub mod measures;
pub mod numerics;

pub use distributions::{Atom, FiniteLossModel, LossDistribution};
pub use error::{Result, RiskError};
pub use expectile::{
    exceedance_beta, expectile, expectile_curve, expectile_density, ExpectileCurve, RiskLevel,
};
pub use measures::{
    closed_form_es, expectile_es, expectile_es_quadrature, expectile_tce, expected_shortfall,
    risk_report, tail_conditional_expectation, value_at_risk, MeasureValue, RiskReport,
};

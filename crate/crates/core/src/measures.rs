//! The six tail risk measures (quantile-based and expectile-based), the
//! closed-form registry for the distributions with known expressions, and
//! per-level risk reports.

use serde_json::{json, Map, Value};

use crate::distortion;
use crate::distributions::LossDistribution;
use crate::error::{Result, RiskError};
use crate::expectile::{exceedance_beta, expectile, RiskLevel};
use crate::numerics::{self, TailIntegral};

/// Value at risk q_alpha = inf { m : F(m) >= 1 - alpha }, evaluated through
/// the tail-mass parameterization (exact for small alpha).
pub fn value_at_risk(dist: &LossDistribution, alpha: f64) -> f64 {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    dist.tail_quantile(alpha)
}

/// Expected shortfall (1/alpha) * integral of q_u over (0, alpha].
///
/// Exact closed forms for the parametric kinds, exact top-mass averaging for
/// atom models.
pub fn expected_shortfall(dist: &LossDistribution, alpha: f64) -> Result<f64> {
    assert!(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    match dist {
        LossDistribution::Bernoulli { p } => Ok(alpha.min(*p) / alpha),
        LossDistribution::Uniform01 => Ok(1.0 - alpha / 2.0),
        LossDistribution::BetaPower { a } => {
            Ok(a * (1.0 - (1.0 - alpha).powf(1.0 / a + 1.0)) / (alpha * (a + 1.0)))
        }
        LossDistribution::Exponential1 => Ok(1.0 - alpha.ln()),
        LossDistribution::Koenker => Ok(2.0 * ((1.0 - alpha) / alpha).sqrt()),
        LossDistribution::Pareto { a } => {
            if *a > 1.0 {
                Ok(a / (a - 1.0) * alpha.powf(-1.0 / a) - 1.0)
            } else {
                Err(RiskError::NonIntegrable)
            }
        }
        LossDistribution::Empirical(m) | LossDistribution::Finite(m) => {
            Ok(m.expected_shortfall(alpha))
        }
    }
}

/// Tail conditional expectation E[L | L > q_alpha(L)] with the strict
/// exceedance convention. When the strict tail above the quantile carries no
/// mass, the quantile is the essential supremum atom and the conditional
/// expectation collapses to it; a constant loss is degenerate outright.
pub fn tail_conditional_expectation(dist: &LossDistribution, alpha: f64) -> Result<f64> {
    if dist.is_constant() {
        return Err(RiskError::DegenerateTail);
    }
    let q = value_at_risk(dist, alpha);
    let tail = 1.0 - dist.cdf(q);
    if tail > 0.0 {
        Ok((dist.upper_partial(q) + q * tail) / tail)
    } else {
        Ok(q)
    }
}

/// Expectile-based tail conditional expectation E[L | L > e_alpha(L)],
/// computed through the identity tce_alpha = ES at the exceedance level.
pub fn expectile_tce(dist: &LossDistribution, alpha: RiskLevel) -> Result<f64> {
    let beta = exceedance_beta(dist, alpha)?;
    expected_shortfall(dist, beta)
}

/// Expectile-based expected shortfall (1/alpha) * integral of e_u over
/// (0, alpha]. Uses the registered closed form when one exists, otherwise
/// quadrature of the expectile curve. `+inf` is returned when the tail
/// integral diverges.
pub fn expectile_es(dist: &LossDistribution, alpha: RiskLevel) -> Result<f64> {
    match dist {
        LossDistribution::Uniform01 => Ok(uniform_es_closed(alpha.get())),
        LossDistribution::Bernoulli { p } => distortion::phi(alpha, *p),
        LossDistribution::Koenker => Ok(koenker_es_closed(alpha.get())),
        LossDistribution::Pareto { a } if *a == 2.0 => Ok(pareto2_es_closed(alpha.get())),
        _ => expectile_es_quadrature(dist, alpha),
    }
}

/// Quadrature route for the expectile-based expected shortfall, independent
/// of the closed-form registry.
///
/// Substitutes u = alpha * exp(-s), turning the level integral into
/// `integral of e_{alpha e^{-s}} e^{-s} ds` over [0, inf); power growth of
/// e_u as u -> 0 then decays exponentially. Panel doubling declares
/// divergence when contributions stop shrinking.
pub fn expectile_es_quadrature(dist: &LossDistribution, alpha: RiskLevel) -> Result<f64> {
    dist.mean()?;
    let a = alpha.get();
    let integrand = |s: f64| {
        let w = (-s).exp();
        let u = (a * w).max(1e-315);
        let lvl = RiskLevel::new(u).expect("clamped level is positive");
        expectile(dist, lvl).expect("finite mean checked above") * w
    };
    match numerics::integrate_exp_tail(integrand, 1e-12) {
        TailIntegral::Converged(v) => Ok(v),
        TailIntegral::Divergent => Ok(f64::INFINITY),
    }
}

fn uniform_es_closed(a: f64) -> f64 {
    let s = (a * (1.0 - a)).sqrt();
    // ln(1+2s) equals ln((1-2a) sqrt((1+2s)/(1-2s))) because
    // (1-2a)^2 = (1-2s)(1+2s); this arrangement stays finite at a = 1/2.
    0.5 - (2.0 * s).ln_1p() / (4.0 * a) + s / (2.0 * a)
}

fn koenker_es_closed(a: f64) -> f64 {
    2.0 * ((1.0 - a) / a).sqrt()
}

fn pareto2_es_closed(a: f64) -> f64 {
    ((1.0 - a) / a).sqrt() + a.sqrt().asin() / a
}

/// Closed-form (or reduced-to-one-integral) expectile-based expected
/// shortfall where the registry has an expression: uniform, Bernoulli,
/// Pareto(2) and the Koenker distribution have explicit formulas; the beta
/// and exponential kinds reduce to a tail integral of the expectile density
/// transform. Returns `None` for unregistered kinds.
pub fn closed_form_es(dist: &LossDistribution, alpha: RiskLevel) -> Option<f64> {
    match dist {
        LossDistribution::Uniform01 => Some(uniform_es_closed(alpha.get())),
        LossDistribution::Bernoulli { p } => {
            Some(distortion::phi(alpha, *p).expect("p lies in (0,1)"))
        }
        LossDistribution::Koenker => Some(koenker_es_closed(alpha.get())),
        LossDistribution::Pareto { a } if *a == 2.0 => Some(pareto2_es_closed(alpha.get())),
        LossDistribution::BetaPower { a } => Some(beta_es_gdensity(*a, alpha.get())),
        LossDistribution::Exponential1 => Some(exponential_es_gdensity(alpha.get())),
        _ => None,
    }
}

/// Beta kind: solve the exceedance level from
/// `(1-a)/(1-2a) = (1-b)^{1/k} (1 + b/k + a(k+1)/(k(1-2a)))`,
/// then integrate the density transform above the implied expectile. This
/// route never touches the first-order-condition solver.
fn beta_es_gdensity(k: f64, a: f64) -> f64 {
    let dist = LossDistribution::BetaPower { a: k };
    let e = if (1.0 - 2.0 * a).abs() < 1e-12 {
        // At a = 1/2 the expectile is the mean.
        k / (k + 1.0)
    } else {
        let lhs = (1.0 - a) / (1.0 - 2.0 * a);
        let f = |b: f64| {
            (1.0 - b).powf(1.0 / k) * (1.0 + b / k + a * (k + 1.0) / (k * (1.0 - 2.0 * a))) - lhs
        };
        let b_star = numerics::bisect_secant(f, 1e-15, 1.0 - 1e-15, 1e-15, 200);
        (1.0 - b_star).powf(1.0 / k)
    };
    let g = |x: f64| crate::expectile::expectile_density(&dist, x).expect("continuous kind");
    numerics::integrate(|x| x * g(x), e, 1.0, 1e-12, 1e-15) / a
}

/// Exponential kind: lower limit `1 + W((1-2a)/(a e))` from the Lambert W
/// function, then the tail integral of x * g(x).
fn exponential_es_gdensity(a: f64) -> f64 {
    let dist = LossDistribution::Exponential1;
    let e0 = 1.0 + numerics::lambert_w0((1.0 - 2.0 * a) / (a * std::f64::consts::E));
    let g = |x: f64| crate::expectile::expectile_density(&dist, x).expect("continuous kind");
    match numerics::integrate_exp_tail(|s| (e0 + s) * g(e0 + s), 1e-12) {
        TailIntegral::Converged(v) => v / a,
        TailIntegral::Divergent => f64::INFINITY,
    }
}

/// A report field: a finite value, a divergent (+inf) marker, or the error
/// code of a degenerate computation.
#[derive(Debug, Clone, PartialEq)]
pub enum MeasureValue {
    Finite(f64),
    Infinite,
    Degenerate(&'static str),
}

impl MeasureValue {
    pub fn from_result(r: Result<f64>) -> Self {
        match r {
            Ok(v) if v.is_infinite() && v > 0.0 => MeasureValue::Infinite,
            Ok(v) => MeasureValue::Finite(v),
            Err(e) => MeasureValue::Degenerate(e.code()),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            MeasureValue::Finite(v) => Some(*v),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            MeasureValue::Finite(v) => json!(v),
            MeasureValue::Infinite => json!("inf"),
            MeasureValue::Degenerate(code) => json!({ "error": code }),
        }
    }

    pub fn to_csv_cell(&self) -> String {
        match self {
            MeasureValue::Finite(v) => format!("{v}"),
            MeasureValue::Infinite => "inf".to_string(),
            MeasureValue::Degenerate(code) => (*code).to_string(),
        }
    }
}

/// All six measures (plus the mean and the exceedance probability) at one
/// level. Degenerate fields carry error markers instead of aborting the
/// report.
#[derive(Debug, Clone)]
pub struct RiskReport {
    pub alpha: f64,
    pub mean: f64,
    pub var: f64,
    pub es_quantile: f64,
    pub tce_quantile: MeasureValue,
    pub expectile: f64,
    pub tce_expectile: MeasureValue,
    pub es_expectile: MeasureValue,
    pub beta_star: MeasureValue,
}

pub fn risk_report(dist: &LossDistribution, alpha: RiskLevel) -> Result<RiskReport> {
    let mean = dist.mean()?;
    let a = alpha.get();
    Ok(RiskReport {
        alpha: a,
        mean,
        var: value_at_risk(dist, a),
        es_quantile: expected_shortfall(dist, a).expect("finite mean checked"),
        tce_quantile: MeasureValue::from_result(tail_conditional_expectation(dist, a)),
        expectile: expectile(dist, alpha)?,
        tce_expectile: MeasureValue::from_result(expectile_tce(dist, alpha)),
        es_expectile: MeasureValue::from_result(expectile_es(dist, alpha)),
        beta_star: MeasureValue::from_result(exceedance_beta(dist, alpha)),
    })
}

impl RiskReport {
    pub const CSV_HEADER: &'static str =
        "alpha,mean,var,es_quantile,tce_quantile,expectile,tce_expectile,es_expectile,beta_star";

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("alpha".into(), json!(self.alpha));
        map.insert("mean".into(), json!(self.mean));
        map.insert("var".into(), json!(self.var));
        map.insert("es_quantile".into(), json!(self.es_quantile));
        map.insert("tce_quantile".into(), self.tce_quantile.to_json());
        map.insert("expectile".into(), json!(self.expectile));
        map.insert("tce_expectile".into(), self.tce_expectile.to_json());
        map.insert("es_expectile".into(), self.es_expectile.to_json());
        map.insert("beta_star".into(), self.beta_star.to_json());
        Value::Object(map)
    }

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.alpha,
            self.mean,
            self.var,
            self.es_quantile,
            self.tce_quantile.to_csv_cell(),
            self.expectile,
            self.tce_expectile.to_csv_cell(),
            self.es_expectile.to_csv_cell(),
            self.beta_star.to_csv_cell()
        )
    }
}

//! Expectile computation: the asymmetric first-order condition and its root,
//! sampled expectile curves, the exceedance probability of the expectile, and
//! the density transform mapping expectiles to quantiles of an auxiliary
//! distribution.

use crate::distributions::LossDistribution;
use crate::error::{Result, RiskError};
use crate::numerics;

/// A risk level in (0, 1/2], the range on which the expectile is coherent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskLevel(f64);

impl RiskLevel {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 0.5 && alpha.is_finite() {
            Ok(Self(alpha))
        } else {
            Err(RiskError::InvalidLevel(alpha))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// First-order-condition residual at `x`:
/// `(1-u) E[(L-x)^+] - u E[(L-x)^-]`, using
/// `E[(L-x)^-] = x - E[L] + E[(L-x)^+]`. Strictly decreasing in `x`.
pub fn foc_residual(dist: &LossDistribution, u: f64, mean: f64, x: f64) -> f64 {
    let up = dist.upper_partial(x);
    (1.0 - u) * up - u * (x - mean + up)
}

/// The expectile e_u(L): unique root of the first-order condition.
///
/// Brackets from the mean upward (the root is never below the mean for
/// u <= 1/2), then runs safeguarded bisection/secant to relative tolerance
/// 1e-13 within 80 iterations.
pub fn expectile(dist: &LossDistribution, u: RiskLevel) -> Result<f64> {
    let mean = dist.mean()?;
    let u = u.get();
    let (_, sup) = dist.essential_bounds();
    if mean >= sup {
        // Constant loss.
        return Ok(mean);
    }
    let h = |x: f64| foc_residual(dist, u, mean, x);
    if h(mean) <= 0.0 {
        // u = 1/2, or rounding already places the root at the mean.
        return Ok(mean);
    }
    let hi = if sup.is_finite() {
        sup
    } else {
        match numerics::expand_bracket_decreasing(h, mean, 1.0) {
            Some(hi) => hi,
            None => return Ok(f64::INFINITY),
        }
    };
    Ok(numerics::bisect_secant(h, mean, hi, 1e-13, 80))
}

/// Sampled expectile curve with the residual of the defining condition at
/// each grid point.
#[derive(Debug, Clone)]
pub struct ExpectileCurve {
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// Evaluates the expectile on a strictly increasing grid of levels,
/// warm-starting each bracket at the previous value (e_u is nonincreasing in
/// u) and falling back to an independent bracket if that fails.
pub fn expectile_curve(dist: &LossDistribution, grid: &[RiskLevel]) -> Result<ExpectileCurve> {
    for pair in grid.windows(2) {
        if pair[1].get() <= pair[0].get() {
            return Err(RiskError::DomainError(format!(
                "grid must be strictly increasing, got {} then {}",
                pair[0].get(),
                pair[1].get()
            )));
        }
    }
    let mean = dist.mean()?;
    let (_, sup) = dist.essential_bounds();
    let mut values = Vec::with_capacity(grid.len());
    let mut residuals = Vec::with_capacity(grid.len());
    let mut prev: Option<f64> = None;
    for &level in grid {
        let u = level.get();
        let h = |x: f64| foc_residual(dist, u, mean, x);
        let e = if mean >= sup || h(mean) <= 0.0 {
            mean
        } else {
            let warm = prev
                .map(|p| p + 1e-9 * (1.0 + p.abs()))
                .filter(|&hi| hi > mean && h(hi) < 0.0);
            let hi = match warm {
                Some(hi) => Some(hi),
                None if sup.is_finite() => Some(sup),
                None => numerics::expand_bracket_decreasing(h, mean, 1.0),
            };
            match hi {
                Some(hi) => numerics::bisect_secant(h, mean, hi, 1e-13, 80),
                None => return Ok(curve_with_infinity(grid)),
            }
        };
        residuals.push(h(e));
        values.push(e);
        prev = Some(e);
    }
    Ok(ExpectileCurve {
        levels: grid.iter().map(|l| l.get()).collect(),
        values,
        residuals,
    })
}

fn curve_with_infinity(grid: &[RiskLevel]) -> ExpectileCurve {
    ExpectileCurve {
        levels: grid.iter().map(|l| l.get()).collect(),
        values: vec![f64::INFINITY; grid.len()],
        residuals: vec![f64::NAN; grid.len()],
    }
}

/// Exceedance probability of the expectile: P[L > e_alpha(L)], computed with
/// the right-continuous cdf so an atom sitting exactly at the expectile is
/// excluded.
pub fn exceedance_beta(dist: &LossDistribution, alpha: RiskLevel) -> Result<f64> {
    let e = expectile(dist, alpha)?;
    let beta = 1.0 - dist.cdf(e);
    if beta <= 0.0 {
        return Err(RiskError::DegenerateTail);
    }
    Ok(beta)
}

/// Density of the auxiliary variable whose quantile curve matches the
/// expectile curve:
///
/// `g(x) = (F(x) E[L] - E[L 1_{L<=x}]) / (2 (x F(x) - E[L 1_{L<=x}]) + E[L] - x)^2`
///
/// with `E[L 1_{L<=x}] = E[L] - E[(L-x)^+] - x (1 - F(x))`. Defined for
/// continuous kinds only; atomic distributions are rejected.
pub fn expectile_density(dist: &LossDistribution, x: f64) -> Result<f64> {
    if !dist.is_continuous() {
        return Err(RiskError::UnsupportedKind("expectile_density"));
    }
    let mean = dist.mean()?;
    let eval = |x: f64| -> (f64, f64) {
        let f = dist.cdf(x);
        let lower_mass = mean - dist.upper_partial(x) - x * (1.0 - f);
        let num = f * mean - lower_mass;
        let den = 2.0 * (x * f - lower_mass) + mean - x;
        (num, den)
    };
    let (num, den) = eval(x);
    if den == 0.0 {
        // Isolated degeneracy of the formula; take a one-sided limit. The
        // value only ever enters integrals.
        let offset = 1e-9 * (1.0 + x.abs());
        for probe in [x + offset, x - offset] {
            let (n, d) = eval(probe);
            if d != 0.0 {
                return Ok(n / (d * d));
            }
        }
        return Ok(0.0);
    }
    Ok(num / (den * den))
}

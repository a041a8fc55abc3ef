//! The concave distortion attached to the expectile-based expected
//! shortfall: the distortion function and its right derivative, the
//! comonotonic upper bound R_phi, the expected-shortfall-mixture lower bound
//! family with its supremum R_alpha, and the witness showing no finite
//! two-term shortfall mixture dominates uniformly.

use crate::distributions::LossDistribution;
use crate::error::{Result, RiskError};
use crate::expectile::RiskLevel;
use crate::measures;
use crate::numerics::{self, TailIntegral};

/// Radius of `|1 - 2t|` below which the closed forms are replaced by the
/// power-series evaluation: the closed forms cancel catastrophically at the
/// removable pole t = 1/2, while the series converges geometrically with
/// ratio |1-2t| alpha / t.
const POLE_SERIES_RADIUS: f64 = 0.05;

/// Distortion function: 0 at t=0, `1 - alpha/2` at t=1/2, otherwise
/// `-t/(1-2t) [1 - (1-t)/(alpha(1-2t)) ln(1 - 2 alpha + alpha/t)]`.
///
/// Near t = 1/2 the level-averaged representation
/// `phi(t) = sum_k (-(1-2t) alpha / t)^k (1/(k+1) - alpha/(k+2))`
/// is used instead; it agrees with the closed form and is exact at the pole.
pub fn phi(alpha: RiskLevel, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(RiskError::DomainError(format!(
            "distortion argument must lie in [0, 1], got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let a = alpha.get();
    let w = 1.0 - 2.0 * t;
    if w.abs() < POLE_SERIES_RADIUS {
        let q = -w * a / t;
        let mut sum = 0.0;
        let mut pow = 1.0;
        for k in 0..64 {
            let term = pow * (1.0 / (k as f64 + 1.0) - a / (k as f64 + 2.0));
            sum += term;
            pow *= q;
            if pow.abs() < 1e-18 {
                break;
            }
        }
        Ok(sum)
    } else {
        Ok(-t / w * (1.0 - (1.0 - t) / (a * w) * (1.0 - 2.0 * a + a / t).ln()))
    }
}

/// Right derivative of the distortion: `2 alpha (1 - 2 alpha / 3)` at t=1/2,
/// otherwise
/// `-1/(1-2t)^2 [(1 + (1-2t) alpha)/(t + (1-2t) alpha) - ln(1-2alpha+alpha/t)/(alpha(1-2t))]`.
/// Diverges at t = 0 (the tangent at the origin is vertical).
pub fn phi_prime(alpha: RiskLevel, t: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(RiskError::DomainError(format!(
            "distortion derivative is defined on (0, 1], got {t}"
        )));
    }
    let a = alpha.get();
    let w = 1.0 - 2.0 * t;
    if w.abs() < POLE_SERIES_RADIUS {
        let q = -w * a / t;
        let mut sum = 0.0;
        let mut pow = 1.0;
        for k in 0..64 {
            let term = (k as f64 + 1.0) * pow * (1.0 / (k as f64 + 2.0) - a / (k as f64 + 3.0));
            sum += term;
            pow *= q;
            if pow.abs() < 1e-18 {
                break;
            }
        }
        Ok(sum * a / (t * t))
    } else {
        Ok(-1.0 / (w * w) * ((1.0 + w * a) / (t + w * a) - (1.0 - 2.0 * a + a / t).ln() / (a * w)))
    }
}

/// Comonotonic upper bound `R_phi(L) = integral of phi'(t) q_t(L) dt` over
/// (0, 1]. Exact for atomic kinds (the quantile curve is a step function, so
/// the integral telescopes through phi); quadrature with exponential
/// endpoint substitutions otherwise. `+inf` signals a divergent tail.
pub fn r_phi(dist: &LossDistribution, alpha: RiskLevel) -> Result<f64> {
    dist.mean()?;
    if let Some(model) = dist.atom_model() {
        let mut total = 0.0;
        let mut c_prev = 0.0;
        let mut phi_prev = 0.0;
        for atom in model.atoms().iter().rev() {
            let c = (c_prev + atom.prob).min(1.0);
            let phi_c = phi(alpha, c)?;
            total += atom.value * (phi_c - phi_prev);
            c_prev = c;
            phi_prev = phi_c;
        }
        return Ok(total);
    }
    let half = std::f64::consts::LN_2;
    // t in (0, 1/2]: t = exp(-(half + s)); q_t through the tail mass.
    let low = numerics::integrate_exp_tail(
        |s| {
            let t = (-(half + s)).exp();
            phi_prime(alpha, t).expect("t in (0, 1/2]") * dist.tail_quantile(t) * t
        },
        1e-12,
    );
    // t in (1/2, 1): t = 1 - w with w = exp(-(half + r)); q_t is the plain
    // quantile at level w, which stays accurate as w -> 0.
    let high = numerics::integrate_exp_tail(
        |r| {
            let w = (-(half + r)).exp();
            let t = 1.0 - w;
            if t >= 1.0 || w <= 0.0 {
                return 0.0;
            }
            phi_prime(alpha, t).expect("t in (1/2, 1)") * dist.quantile_level(w) * w
        },
        1e-12,
    );
    match (low, high) {
        (TailIntegral::Converged(a), TailIntegral::Converged(b)) => Ok(a + b),
        _ => Ok(f64::INFINITY),
    }
}

/// Mixture coefficient of the lower-bound family: alpha at beta = 1/2,
/// otherwise `1/(1-2b) - b/(alpha (1-2b)^2) ln(1 - 2 alpha + alpha/b)`.
/// Same series treatment at the removable pole beta = 1/2.
pub fn gamma_beta(alpha: RiskLevel, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(RiskError::DomainError(format!(
            "mixture level must lie in (0, 1), got {beta}"
        )));
    }
    let a = alpha.get();
    let w = 1.0 - 2.0 * beta;
    if w.abs() < POLE_SERIES_RADIUS {
        let q = -w * a / beta;
        let mut sum = 0.0;
        let mut pow = 1.0;
        for k in 0..64 {
            sum += pow / (k as f64 + 2.0);
            pow *= q;
            if pow.abs() < 1e-18 {
                break;
            }
        }
        Ok(sum * a / beta)
    } else {
        Ok(1.0 / w - beta / (a * w * w) * (1.0 - 2.0 * a + a / beta).ln())
    }
}

/// One member of the lower-bound family:
/// `(1 - gamma_beta) ES_beta(L) + gamma_beta E[L]`.
pub fn lower_bound_at(dist: &LossDistribution, alpha: RiskLevel, beta: f64) -> Result<f64> {
    let g = gamma_beta(alpha, beta)?;
    let es = measures::expected_shortfall(dist, beta)?;
    let mean = dist.mean()?;
    Ok((1.0 - g) * es + g * mean)
}

/// Supremum of the lower-bound family over beta in (0, 1). Returns the value
/// and the maximizing beta.
///
/// Unimodality in beta is not assumed: a 64-point log-symmetric grid locates
/// the best region and golden-section refines around it (well past the
/// |d beta| <= 1e-6 requirement; indicator losses put the maximum at a kink
/// of the shortfall, where the value is linearly sensitive to beta).
pub fn r_alpha(dist: &LossDistribution, alpha: RiskLevel) -> Result<(f64, f64)> {
    dist.mean()?;
    let eval = |b: f64| lower_bound_at(dist, alpha, b).expect("beta inside (0,1)");
    let mut grid = Vec::with_capacity(64);
    let (lo, hi) = (1e-6f64, 0.5f64);
    for i in 0..32 {
        let f = i as f64 / 31.0;
        let b = lo * (hi / lo).powf(f);
        grid.push(b);
        grid.push(1.0 - b);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let mut best_idx = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &b) in grid.iter().enumerate() {
        let v = eval(b);
        if v > best_val {
            best_val = v;
            best_idx = i;
        }
    }
    let left = if best_idx == 0 { grid[0] } else { grid[best_idx - 1] };
    let right = if best_idx + 1 == grid.len() {
        grid[best_idx]
    } else {
        grid[best_idx + 1]
    };
    let (b_star, v_star) = numerics::golden_max(eval, left, right, 1e-10);
    if v_star >= best_val {
        Ok((v_star, b_star))
    } else {
        Ok((best_val, grid[best_idx]))
    }
}

/// Distortion of a two-term expected-shortfall mixture:
/// `(1-lambda)(t/beta ^ 1) + lambda (t/delta ^ 1)`.
pub fn mixture_distortion(lambda: f64, beta: f64, delta: f64, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(RiskError::DomainError(format!(
            "mixture weight must lie in [0, 1], got {lambda}"
        )));
    }
    if !(beta > 0.0 && beta <= 1.0) || !(delta > 0.0 && delta <= 1.0) {
        return Err(RiskError::DomainError(format!(
            "mixture levels must lie in (0, 1], got beta={beta}, delta={delta}"
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(RiskError::DomainError(format!(
            "distortion argument must lie in [0, 1], got {t}"
        )));
    }
    Ok((1.0 - lambda) * (t / beta).min(1.0) + lambda * (t / delta).min(1.0))
}

/// Finds t in (0, 1) where the distortion strictly exceeds the mixture
/// distortion, by geometric search t = 2^{-k}. Such a point always exists
/// because the distortion's slope at the origin is infinite while the
/// mixture's is finite; failure after 500 halvings indicates numeric range
/// exhaustion rather than a mathematical obstruction.
pub fn non_domination_witness(
    alpha: RiskLevel,
    lambda: f64,
    beta: f64,
    delta: f64,
) -> Result<f64> {
    for k in 1..=500u32 {
        let t = 2f64.powi(-(k as i32));
        let p = phi(alpha, t)?;
        let m = mixture_distortion(lambda, beta, delta, t)?;
        if p > m + 1e-12 {
            return Ok(t);
        }
    }
    Err(RiskError::WitnessNotFound)
}

/// Sampled distortion curve on a knot grid in [0, 1]. The derivative at
/// t = 0 is recorded as +inf.
#[derive(Debug, Clone)]
pub struct DistortionCurve {
    pub alpha: f64,
    pub knots: Vec<f64>,
    pub phi_values: Vec<f64>,
    pub phi_prime_values: Vec<f64>,
}

pub fn distortion_curve(alpha: RiskLevel, knots: usize) -> Result<DistortionCurve> {
    if knots < 2 {
        return Err(RiskError::DomainError(format!(
            "need at least 2 knots, got {knots}"
        )));
    }
    let mut ts = Vec::with_capacity(knots);
    let mut phis = Vec::with_capacity(knots);
    let mut primes = Vec::with_capacity(knots);
    for i in 0..knots {
        let t = i as f64 / (knots - 1) as f64;
        ts.push(t);
        phis.push(phi(alpha, t)?);
        primes.push(if t == 0.0 {
            f64::INFINITY
        } else {
            phi_prime(alpha, t)?
        });
    }
    Ok(DistortionCurve {
        alpha: alpha.get(),
        knots: ts,
        phi_values: phis,
        phi_prime_values: primes,
    })
}

impl DistortionCurve {
    pub const CSV_HEADER: &'static str = "t,phi,phi_prime";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for i in 0..self.knots.len() {
            let pp = self.phi_prime_values[i];
            let pp_cell = if pp.is_infinite() {
                "inf".to_string()
            } else {
                format!("{pp}")
            };
            out.push_str(&format!("{},{},{}\n", self.knots[i], self.phi_values[i], pp_cell));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::FiniteLossModel;
    use crate::expectile::RiskLevel;

    fn level(a: f64) -> RiskLevel {
        RiskLevel::new(a).unwrap()
    }

    #[test]
    fn phi_special_points() {
        assert_eq!(phi(level(0.34), 0.0).unwrap(), 0.0);
        assert!((phi(level(0.34), 0.5).unwrap() - 0.83).abs() < 1e-15);
        for a in [0.05, 0.34, 0.5] {
            assert!((phi(level(a), 1.0).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(phi(level(0.1), -0.1).is_err());
        assert!(phi(level(0.1), 1.1).is_err());
    }

    #[test]
    fn phi_matches_bernoulli_closed_form() {
        // phi(P[A]) is the expectile shortfall of the indicator of A.
        for p in [0.2, 0.7] {
            let d = LossDistribution::bernoulli(p).unwrap();
            let es = measures::closed_form_es(&d, level(0.1)).unwrap();
            let ph = phi(level(0.1), p).unwrap();
            assert!((es - ph).abs() < 1e-14);
        }
        assert!((phi(level(0.1), 0.3).unwrap() - 0.892_766_251_271_329).abs() < 1e-12);
    }

    #[test]
    fn phi_series_continuous_across_switchover() {
        for a in [0.05, 0.34, 0.5] {
            let l = level(a);
            for eps in [0.049, 0.0501] {
                let inside = phi(l, 0.5 - 0.024).unwrap();
                assert!(inside.is_finite());
                let below = phi(l, (1.0 - eps) / 2.0).unwrap();
                let above = phi(l, (1.0 + eps) / 2.0).unwrap();
                assert!(below.is_finite() && above.is_finite());
            }
            // closed form vs series at both sides of the radius
            for t in [0.4, 0.476, 0.524, 0.6] {
                let direct = phi(l, t).unwrap();
                let series_widened = {
                    let w = 1.0 - 2.0 * t;
                    let q = -w * a / t;
                    let mut sum = 0.0;
                    let mut pow = 1.0f64;
                    for k in 0..200 {
                        sum += pow * (1.0 / (k as f64 + 1.0) - a / (k as f64 + 2.0));
                        pow *= q;
                        if pow.abs() < 1e-20 {
                            break;
                        }
                    }
                    sum
                };
                assert!(
                    (direct - series_widened).abs() < 1e-13,
                    "a={a} t={t}: {direct} vs {series_widened}"
                );
            }
        }
    }

    #[test]
    fn phi_prime_special_points() {
        let v = phi_prime(level(0.34), 0.5).unwrap();
        assert!((v - 2.0 * 0.34 * (1.0 - 2.0 * 0.34 / 3.0)).abs() < 1e-15);
        assert!((v - 0.525_866_666_666_667).abs() < 1e-12);
        assert!(phi_prime(level(0.2), 0.0).is_err());
        let at_one = phi_prime(level(0.2), 1.0).unwrap();
        assert!(at_one.is_finite() && at_one > 0.0);
        assert!((phi_prime(level(0.1), 0.3).unwrap() - 0.439_094_027_739_91).abs() < 1e-12);
    }

    #[test]
    fn gamma_beta_examples() {
        for a in [0.05, 0.2, 0.5] {
            assert_eq!(gamma_beta(level(a), 0.5).unwrap(), a);
        }
        assert!((gamma_beta(level(0.1), 0.25).unwrap() - 0.176_784_432_060_454).abs() < 1e-12);
        assert!(gamma_beta(level(0.1), 0.0).is_err());
        assert!(gamma_beta(level(0.1), 1.0).is_err());
        // range sweep on a 20x20 grid
        for i in 1..=20 {
            for j in 1..20 {
                let a = 0.5 * i as f64 / 20.0;
                let b = j as f64 / 20.0;
                let g = gamma_beta(level(a), b).unwrap();
                assert!(g > 0.0 && g < 1.0, "gamma({a},{b}) = {g}");
            }
        }
    }

    #[test]
    fn lower_bound_examples() {
        let c = LossDistribution::finite(FiniteLossModel::new([(7.0, 1.0)]).unwrap());
        for (a, b) in [(0.1, 0.3), (0.34, 0.2), (0.5, 0.9)] {
            let v = lower_bound_at(&c, level(a), b).unwrap();
            assert!((v - 7.0).abs() < 1e-12);
        }
        // Indicator identity at beta = p: the bound is exactly phi(p).
        let d = LossDistribution::bernoulli(0.3).unwrap();
        let v = lower_bound_at(&d, level(0.1), 0.3).unwrap();
        let ph = phi(level(0.1), 0.3).unwrap();
        assert!((v - ph).abs() < 1e-12);
        // uniform bound sits below the expectile shortfall
        let u = lower_bound_at(&LossDistribution::Uniform01, level(0.34), 0.2).unwrap();
        assert!((u - 0.692_874_190_466).abs() < 1e-9);
        assert!(u <= 0.706_553_959_452 + 1e-9);
    }

    #[test]
    fn r_alpha_examples() {
        let d = LossDistribution::bernoulli(0.3).unwrap();
        let (v, b) = r_alpha(&d, level(0.1)).unwrap();
        let ph = phi(level(0.1), 0.3).unwrap();
        assert!((v - ph).abs() < 1e-9, "{v} vs {ph}");
        assert!((b - 0.3).abs() < 1e-3, "argmax {b}");

        let (v, _) = r_alpha(&LossDistribution::Koenker, level(0.25)).unwrap();
        assert!((v - 2.702_071_285_27).abs() < 1e-6, "{v}");
        assert!(v < 3.464_102 - 0.5, "strict gap to the expectile shortfall");

        let c = LossDistribution::finite(FiniteLossModel::new([(3.0, 1.0)]).unwrap());
        let (v, _) = r_alpha(&c, level(0.2)).unwrap();
        assert!((v - 3.0).abs() < 1e-12);
    }

    #[test]
    fn r_phi_examples() {
        let c = LossDistribution::finite(FiniteLossModel::new([(4.0, 1.0)]).unwrap());
        assert!((r_phi(&c, level(0.2)).unwrap() - 4.0).abs() < 1e-12);

        let d = LossDistribution::bernoulli(0.3).unwrap();
        let v = r_phi(&d, level(0.1)).unwrap();
        let ph = phi(level(0.1), 0.3).unwrap();
        assert!((v - ph).abs() < 1e-14);

        let u = r_phi(&LossDistribution::Uniform01, level(0.34)).unwrap();
        assert!((u - 0.758_677_070_474).abs() < 1e-8, "{u}");
    }

    #[test]
    fn mixture_examples() {
        assert!((mixture_distortion(0.0, 1.0, 1.0, 0.3).unwrap() - 0.3).abs() < 1e-15);
        let v = mixture_distortion(0.2, 0.1, 1.0, 0.05).unwrap();
        assert!((v - 0.41).abs() < 1e-15);
        assert!(mixture_distortion(0.7, 0.4, 0.9, 0.0).unwrap().abs() < 1e-15);
        assert!((mixture_distortion(0.7, 0.4, 0.9, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(mixture_distortion(1.5, 0.1, 1.0, 0.5).is_err());
        assert!(mixture_distortion(0.5, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn witness_examples() {
        // Figure-style parameters
        let t = non_domination_witness(level(0.1), 0.2, 0.1, 1.0).unwrap();
        let p = phi(level(0.1), t).unwrap();
        let m = mixture_distortion(0.2, 0.1, 1.0, t).unwrap();
        assert!(p > m + 1e-12, "t={t}: {p} <= {m}");

        // identity mixture
        let t = non_domination_witness(level(0.34), 1.0, 1.0, 1.0).unwrap();
        let p = phi(level(0.34), t).unwrap();
        assert!(p > t + 1e-12);

        // alpha = 1/2 still admits a witness
        let t = non_domination_witness(level(0.5), 0.5, 0.2, 0.8).unwrap();
        let p = phi(level(0.5), t).unwrap();
        let m = mixture_distortion(0.5, 0.2, 0.8, t).unwrap();
        assert!(p > m + 1e-12);
    }

    #[test]
    fn curve_invariants() {
        let curve = distortion_curve(level(0.34), 1001).unwrap();
        assert_eq!(curve.phi_values[0], 0.0);
        assert!((curve.phi_values[1000] - 1.0).abs() < 1e-12);
        for w in curve.phi_values.windows(2) {
            assert!(w[1] >= w[0] - 1e-14);
        }
        for w in curve.phi_values.windows(3) {
            let second_diff = w[2] - 2.0 * w[1] + w[0];
            assert!(second_diff <= 1e-10, "convexity violation {second_diff}");
        }
        for w in curve.phi_prime_values[1..].windows(2) {
            assert!(w[1] <= w[0] + 1e-10);
        }
        assert!(curve.phi_prime_values[0].is_infinite());
        let csv = curve.to_csv();
        assert!(csv.starts_with("t,phi,phi_prime\n0,0,inf\n"));
    }
}

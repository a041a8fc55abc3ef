//! Property-based and cross-route invariants. Oracles in this file are
//! test-local (closed forms evaluated directly, adaptive Simpson quadrature)
//! and never call the library path they check.

use estail::distributions::{FiniteLossModel, LossDistribution};
use estail::expectile::{exceedance_beta, expectile, expectile_curve, expectile_density, RiskLevel};
use estail::measures::{
    expectile_es, expectile_tce, expected_shortfall, tail_conditional_expectation, value_at_risk,
};
use proptest::prelude::*;

fn level(a: f64) -> RiskLevel {
    RiskLevel::new(a).unwrap()
}

/// Test-local adaptive Simpson integration.
fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn rule<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = rule(f, a, m);
        let right = rule(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, m, left, tol / 2.0, depth - 1) + rec(f, m, b, right, tol / 2.0, depth - 1)
        }
    }
    rec(f, a, b, rule(f, a, b), tol, depth)
}

fn parametric_kinds() -> Vec<LossDistribution> {
    vec![
        LossDistribution::bernoulli(0.3).unwrap(),
        LossDistribution::Uniform01,
        LossDistribution::beta_power(2.0).unwrap(),
        LossDistribution::beta_power(0.5).unwrap(),
        LossDistribution::Exponential1,
        LossDistribution::Koenker,
        LossDistribution::pareto(2.0).unwrap(),
        LossDistribution::pareto(3.5).unwrap(),
    ]
}

fn continuous_kinds() -> Vec<LossDistribution> {
    vec![
        LossDistribution::Uniform01,
        LossDistribution::beta_power(2.0).unwrap(),
        LossDistribution::Exponential1,
        LossDistribution::Koenker,
        LossDistribution::pareto(2.0).unwrap(),
    ]
}

/// Interior probe window of the support, clipped for unbounded kinds.
fn probe_window(dist: &LossDistribution) -> (f64, f64) {
    let (lo, hi) = dist.essential_bounds();
    let lo = if lo.is_finite() { lo } else { -20.0 };
    let hi = if hi.is_finite() { hi } else { 20.0 };
    (lo, hi)
}

fn finite_model_strategy() -> impl Strategy<Value = FiniteLossModel> {
    (2usize..=10)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(-5.0f64..10.0, n),
                proptest::collection::vec(0.2f64..1.0, n),
            )
        })
        .prop_map(|(values, raw_probs)| {
            let total: f64 = raw_probs.iter().sum();
            let mut pairs: Vec<(f64, f64)> = values
                .iter()
                .zip(&raw_probs)
                .map(|(&v, &p)| (v, p / total))
                .collect();
            // renormalize exactly enough for the 1e-12 sum gate
            let s: f64 = pairs.iter().map(|p| p.1).sum();
            let k = pairs.len();
            pairs[k - 1].1 += 1.0 - s;
            FiniteLossModel::new(pairs).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // E[(L-x)^+] - E[(L-y)^+] = integral of (1 - F) over [x, y]
    #[test]
    fn upper_partial_is_survival_integral(kind_idx in 0usize..8, fa in 0.0f64..1.0, fb in 0.0f64..1.0) {
        let dist = parametric_kinds()[kind_idx].clone();
        let (lo, hi) = probe_window(&dist);
        let (fa, fb) = if fa <= fb { (fa, fb) } else { (fb, fa) };
        let x = lo + fa * (hi - lo);
        let y = lo + fb * (hi - lo);
        let diff = dist.upper_partial(x) - dist.upper_partial(y);
        let integral = simpson(&|t| 1.0 - dist.cdf(t), x, y, 1e-13, 48);
        prop_assert!((diff - integral).abs() <= 1e-9 * (1.0 + diff.abs()),
            "kind {kind_idx}: {diff} vs {integral}");
    }

    // Galois inequalities between the cdf and its generalized inverse.
    // The slack scales with |x| because inverting the cdf near the tails
    // amplifies one ulp of the probability argument.
    #[test]
    fn quantile_cdf_galois(kind_idx in 0usize..8, fx in 0.001f64..0.999, p in 0.001f64..0.999) {
        let dist = parametric_kinds()[kind_idx].clone();
        let x = dist.quantile_level(0.001 + 0.998 * fx);
        let fx_val = dist.cdf(x);
        if fx_val > 0.0 && fx_val < 1.0 {
            prop_assert!(dist.quantile_level(fx_val) <= x + 1e-9 * (1.0 + x.abs()));
        }
        prop_assert!(dist.cdf(dist.quantile_level(p)) >= p - 1e-12);
    }

    // Cash invariance and positive homogeneity of the expectile on finite
    // models.
    #[test]
    fn expectile_cash_and_homogeneity(model in finite_model_strategy(), a in 0.01f64..0.5) {
        let lvl = level(a);
        let base = LossDistribution::finite(model.clone());
        let e = expectile(&base, lvl).unwrap();
        for m in [-3.0, 0.7] {
            let shifted = LossDistribution::finite(
                FiniteLossModel::new(model.atoms().iter().map(|at| (at.value + m, at.prob))).unwrap(),
            );
            let es = expectile(&shifted, lvl).unwrap();
            prop_assert!((es - (e + m)).abs() <= 1e-10 * (1.0 + e.abs()), "shift {m}: {es} vs {}", e + m);
        }
        for lam in [0.5, 2.0, 10.0] {
            let scaled = LossDistribution::finite(
                FiniteLossModel::new(model.atoms().iter().map(|at| (lam * at.value, at.prob))).unwrap(),
            );
            let es = expectile(&scaled, lvl).unwrap();
            prop_assert!((es - lam * e).abs() <= 1e-10 * (1.0 + (lam * e).abs()));
        }
    }

    // The first-order condition is decreasing and the root straddles a sign
    // change.
    #[test]
    fn foc_brackets_sign_change(model in finite_model_strategy(), a in 0.01f64..=0.49) {
        let dist = LossDistribution::finite(model);
        let lvl = level(a);
        let mean = dist.mean().unwrap();
        let e = expectile(&dist, lvl).unwrap();
        let h = |x: f64| estail::expectile::foc_residual(&dist, a, mean, x);
        let delta = 1e-6 * (1.0 + e.abs());
        prop_assert!(h(e - delta) >= 0.0);
        prop_assert!(h(e + delta) <= 0.0);
        // strictly decreasing across the root neighborhood
        prop_assert!(h(e - delta) > h(e + delta));
    }

    // The mean never exceeds the expectile for levels up to one half.
    #[test]
    fn expectile_dominates_mean(kind_idx in 0usize..8, a in 0.005f64..=0.5) {
        let dist = parametric_kinds()[kind_idx].clone();
        let mean = dist.mean().unwrap();
        let e = expectile(&dist, level(a)).unwrap();
        prop_assert!(e >= mean - 1e-12 * (1.0 + mean.abs()));
    }
}

#[test]
fn mean_triangle_identity_at_median() {
    // mean = c + E[(L-c)^+] - E[(c-L)^+] at c = median, with the lower
    // partial moment computed from kind-specific antiderivatives.
    let lower_partial = |dist: &LossDistribution, c: f64| -> f64 {
        match dist {
            LossDistribution::Bernoulli { p } => (1.0 - p) * c.max(0.0) + p * (c - 1.0).max(0.0),
            LossDistribution::Uniform01 => {
                if c <= 0.0 {
                    0.0
                } else if c >= 1.0 {
                    c - 0.5
                } else {
                    c * c / 2.0
                }
            }
            LossDistribution::BetaPower { a } => c.clamp(0.0, 1.0).powf(a + 1.0) / (a + 1.0)
                + (c - 1.0).max(0.0),
            LossDistribution::Exponential1 => {
                if c <= 0.0 {
                    0.0
                } else {
                    c - 1.0 + (-c).exp()
                }
            }
            LossDistribution::Koenker => 0.5 * (c + (c * c + 4.0).sqrt()),
            LossDistribution::Pareto { a } => {
                if c <= 0.0 {
                    0.0
                } else {
                    c - (1.0 - (c + 1.0).powf(1.0 - a)) / (a - 1.0)
                }
            }
            LossDistribution::Empirical(m) | LossDistribution::Finite(m) => m
                .atoms()
                .iter()
                .map(|at| at.prob * (c - at.value).max(0.0))
                .sum(),
        }
    };
    let mut dists = parametric_kinds();
    dists.push(LossDistribution::finite(
        FiniteLossModel::new([(-1.0, 0.25), (0.5, 0.5), (2.0, 0.25)]).unwrap(),
    ));
    for dist in &dists {
        let mean = dist.mean().unwrap();
        let c = dist.quantile_level(0.5);
        let identity = c + dist.upper_partial(c) - lower_partial(dist, c);
        assert!(
            (identity - mean).abs() <= 1e-10 * (1.0 + mean.abs()),
            "{dist:?}: {identity} vs {mean}"
        );
    }
}

#[test]
fn point_mass_sample_has_equal_measures() {
    let d = LossDistribution::from_sample(&[2.5, 2.5, 2.5, 2.5]).unwrap();
    let lvl = level(0.2);
    assert_eq!(value_at_risk(&d, 0.2), 2.5);
    assert_eq!(expected_shortfall(&d, 0.2).unwrap(), 2.5);
    assert_eq!(expectile(&d, lvl).unwrap(), 2.5);
    assert!((expectile_es(&d, lvl).unwrap() - 2.5).abs() < 1e-9);
    // both conditional expectations degenerate to the atom
    assert!(tail_conditional_expectation(&d, 0.2).is_err());
    assert!(expectile_tce(&d, lvl).is_err());
}

#[test]
fn curve_invariants_on_uniform_grid() {
    let grid: Vec<RiskLevel> = (1..=40).map(|i| level(i as f64 / 80.0)).collect();
    for dist in [
        LossDistribution::Uniform01,
        LossDistribution::Exponential1,
        LossDistribution::pareto(2.0).unwrap(),
    ] {
        let mean = dist.mean().unwrap();
        let curve = expectile_curve(&dist, &grid).unwrap();
        for w in curve.values.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        let last = *curve.values.last().unwrap();
        assert!((last - mean).abs() <= 1e-9 * (1.0 + mean.abs()));
        for (r, v) in curve.residuals.iter().zip(&curve.values) {
            assert!(r.abs() <= 1e-10 * (1.0 + v.abs()));
        }
    }
}

fn simpson_panels<F: Fn(f64) -> f64>(f: &F, breaks: &[f64], tol: f64) -> f64 {
    breaks
        .windows(2)
        .map(|w| simpson(f, w[0], w[1], tol, 48))
        .sum()
}

/// Geometric break sequence from `from` out to `to`, starting with `step`.
fn geometric_breaks(from: f64, to: f64, step: f64) -> Vec<f64> {
    let mut breaks = vec![from];
    let mut offset = step;
    loop {
        let next = from + offset;
        if next >= to {
            breaks.push(to);
            return breaks;
        }
        breaks.push(next);
        offset *= 2.0;
    }
}

#[test]
fn density_transform_integrates_to_one() {
    // integral of g over the support, test-side quadrature with panel
    // sequences dense where the mass sits (a single wide adaptive pass is
    // blind to localized humps).
    let koenker_breaks: Vec<f64> = {
        let right = geometric_breaks(0.0, 3e4, 0.5);
        let mut b: Vec<f64> = right.iter().map(|x| -x).rev().collect();
        b.extend(&right[1..]);
        b
    };
    for (dist, breaks, tol) in [
        (LossDistribution::Uniform01, vec![0.0, 0.25, 0.5, 0.75, 1.0], 1e-8),
        (
            LossDistribution::beta_power(2.0).unwrap(),
            vec![0.0, 0.25, 0.5, 0.75, 1.0],
            1e-8,
        ),
        (LossDistribution::Exponential1, geometric_breaks(0.0, 120.0, 0.5), 1e-8),
        // 1/x^3 tail: truncation at 3e4 leaves ~1e-9
        (LossDistribution::Koenker, koenker_breaks, 1e-7),
    ] {
        let g = |x: f64| expectile_density(&dist, x).unwrap();
        let mass = simpson_panels(&g, &breaks, 1e-13);
        assert!((mass - 1.0).abs() <= tol, "{dist:?}: mass {mass}");
    }
}

#[test]
fn density_transform_quantile_matches_expectile() {
    // Inverting the tail integral of g at level alpha recovers e_alpha.
    for dist in continuous_kinds() {
        for a in [0.1, 0.34] {
            let e = expectile(&dist, level(a)).unwrap();
            let g = |x: f64| expectile_density(&dist, x).unwrap();
            let (_, sup) = dist.essential_bounds();
            let upper = if sup.is_finite() { sup } else { e + 2e4 };
            let tail_from = |x: f64| simpson_panels(&g, &geometric_breaks(x, upper, 0.5), 1e-13);
            // bisect tail_from(x) = a; tail mass decreases in x
            let (mut lo, mut hi) = (dist.quantile_level(0.05), upper);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if tail_from(mid) > a {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let x_star = 0.5 * (lo + hi);
            assert!(
                (x_star - e).abs() <= 1e-6 * (1.0 + e.abs()),
                "{dist:?} at {a}: {x_star} vs {e}"
            );
        }
    }
}

#[test]
fn ordering_chain_mean_expectile_shortfall() {
    for dist in parametric_kinds() {
        let mean = dist.mean().unwrap();
        for a in [0.05, 0.1, 0.25, 0.34, 0.5] {
            let lvl = level(a);
            let e = expectile(&dist, lvl).unwrap();
            let es = expectile_es(&dist, lvl).unwrap();
            assert!(mean <= e + 1e-10 * (1.0 + e.abs()), "{dist:?} at {a}");
            assert!(e <= es + 1e-9 * (1.0 + es.abs()), "{dist:?} at {a}: e {e} es {es}");
        }
    }
}

#[test]
fn report_field_orderings() {
    // var <= ES always; TCE <= ES for continuous kinds (where the two
    // coincide). Under the strict-exceedance convention an atom at the
    // quantile can push TCE above ES, so no ordering is asserted there.
    let mut dists = parametric_kinds();
    dists.push(LossDistribution::finite(
        FiniteLossModel::new([(0.0, 0.6), (0.7, 0.3), (4.0, 0.1)]).unwrap(),
    ));
    for dist in &dists {
        for a in [0.05, 0.1, 0.25, 0.34, 0.5] {
            let r = estail::measures::risk_report(dist, level(a)).unwrap();
            assert!(r.var <= r.es_quantile + 1e-12, "{dist:?} at {a}");
            if dist.is_continuous() {
                if let Some(tce) = r.tce_quantile.as_f64() {
                    assert!(tce <= r.es_quantile + 1e-9, "{dist:?} at {a}");
                }
            }
            assert!(r.mean <= r.expectile + 1e-10 * (1.0 + r.expectile.abs()));
            if let Some(es) = r.es_expectile.as_f64() {
                assert!(r.expectile <= es + 1e-9 * (1.0 + es.abs()), "{dist:?} at {a}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // The tail-mass parameterization agrees with the generalized inverse
    // away from the floating-point collapse region.
    #[test]
    fn tail_quantile_matches_generalized_inverse(model in finite_model_strategy(), a in 0.01f64..0.99) {
        let dist = LossDistribution::finite(model);
        prop_assert_eq!(dist.tail_quantile(a), dist.quantile_level(1.0 - a));
    }
}

#[test]
fn expectile_tce_equals_direct_conditional_expectation() {
    // tce = ES at the exceedance level must agree with E[L | L > e] computed
    // directly from the tail moment, for continuous kinds.
    for dist in continuous_kinds() {
        for a in [0.05, 0.25, 0.5] {
            let lvl = level(a);
            let e = expectile(&dist, lvl).unwrap();
            let beta = exceedance_beta(&dist, lvl).unwrap();
            let direct = (dist.upper_partial(e) + e * beta) / beta;
            let via_es = expectile_tce(&dist, lvl).unwrap();
            assert!(
                (direct - via_es).abs() <= 1e-9 * (1.0 + direct.abs()),
                "{dist:?} at {a}: {direct} vs {via_es}"
            );
        }
    }
}

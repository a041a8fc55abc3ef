//! Numeric kernels shared by the risk-measure modules: adaptive
//! Gauss-Kronrod quadrature, a panel-doubling integrator for exponentially
//! substituted tail integrals, a safeguarded scalar root finder, the Lambert
//! W function, and golden-section maximization.

/// 15-point Kronrod abscissae on [0, 1] (positive half; symmetric).
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];

/// 7-point Gauss weights for the embedded rule (odd Kronrod indices + center).
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// One Gauss-Kronrod 15(7) panel. Returns (kronrod value, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = half * XGK[j];
        let fsum = f(center - x) + f(center + x);
        kronrod += WGK[j] * fsum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    kronrod *= half;
    gauss *= half;
    // The raw Gauss/Kronrod difference overestimates the Kronrod error,
    // which keeps the adaptive loop honest.
    (kronrod, (kronrod - gauss).abs().max(1e-300))
}

/// Adaptive Gauss-Kronrod integration of `f` over [a, b].
///
/// Splits the interval with the largest error estimate until the summed
/// estimate falls below `abs_tol + rel_tol * |value|` or the subdivision
/// budget is exhausted.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    let (v, e) = gk15(&f, a, b);
    panels.push((a, b, v, e));
    for _ in 0..2000 {
        let value: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol + rel_tol * value.abs() {
            break;
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty panel list");
        let (pa, pb, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            // Interval at floating-point resolution; keep its estimate.
            let (v, _) = gk15(&f, pa, pb);
            panels.push((pa, pb, v, 0.0));
            continue;
        }
        let (v1, e1) = gk15(&f, pa, mid);
        let (v2, e2) = gk15(&f, mid, pb);
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
    panels.iter().map(|p| p.2).sum()
}

/// Outcome of a semi-infinite tail integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailIntegral {
    Converged(f64),
    Divergent,
}

/// Largest admissible coordinate for the exponential substitutions: beyond
/// this, `exp(-s)` underflows f64 and levels like `alpha * exp(-s)` are no
/// longer representable.
pub const TAIL_S_MAX: f64 = 700.0;

/// Integrates `f` over [0, infinity) where `f` is the integrand *after* an
/// exponential substitution (so genuine power singularities at the original
/// endpoint decay exponentially here).
///
/// Panels are [0,1], [1,2], [2,4], ... with doubling right ends. Truncates
/// once a panel contributes less than `1e-12` of the running total. Declares
/// divergence when the per-width panel contribution is nondecreasing across
/// 40 consecutive doublings, or when the representable range is exhausted
/// while the contribution level is still not shrinking.
pub fn integrate_exp_tail<F: Fn(f64) -> f64>(f: F, rel_tol: f64) -> TailIntegral {
    let mut total = 0.0f64;
    let mut s_lo = 0.0f64;
    let mut s_hi = 1.0f64;
    let mut prev_density = f64::INFINITY;
    let mut nondecreasing_streak = 0usize;
    loop {
        let panel = integrate(&f, s_lo, s_hi, rel_tol, 1e-300);
        total += panel;
        let contribution = panel.abs();
        // Per-width level, so the final range-capped (shorter) panel compares
        // fairly against its doubled predecessors.
        let density = contribution / (s_hi - s_lo);
        if contribution <= 1e-12 * total.abs().max(1e-300) {
            return TailIntegral::Converged(total);
        }
        if density >= prev_density * (1.0 - 1e-12) {
            nondecreasing_streak += 1;
            if nondecreasing_streak >= 40 {
                return TailIntegral::Divergent;
            }
        } else {
            nondecreasing_streak = 0;
        }
        prev_density = density;
        if s_hi >= TAIL_S_MAX {
            // f64 range exhausted before the stopping rule fired. A shrinking
            // integrand is treated as converged (the truncated tail is below
            // any tolerance used by callers); otherwise report divergence.
            if nondecreasing_streak == 0 {
                return TailIntegral::Converged(total);
            }
            return TailIntegral::Divergent;
        }
        s_lo = s_hi;
        s_hi = (2.0 * s_hi).min(TAIL_S_MAX);
    }
}

/// Expands the upper end of a bracket for a decreasing function until
/// `h(hi) < 0`, doubling the offset from `lo` each step.
///
/// Returns `None` if no sign change is found within the f64 range.
pub fn expand_bracket_decreasing<F: Fn(f64) -> f64>(h: F, lo: f64, first_offset: f64) -> Option<f64> {
    let mut offset = first_offset.max(f64::MIN_POSITIVE);
    for _ in 0..1100 {
        let hi = lo + offset;
        if !hi.is_finite() {
            return None;
        }
        if h(hi) < 0.0 {
            return Some(hi);
        }
        offset *= 2.0;
    }
    None
}

/// Safeguarded bisection/secant root finder for a continuous decreasing
/// function with `h(lo) >= 0 >= h(hi)`.
///
/// Secant and bisection steps strictly alternate, so the bracket halves at
/// least every other iteration regardless of how one-sided the secant
/// updates are. Runs up to `max_iter` iterations or until the bracket width
/// drops below `rel_tol * (1 + |x|)`; returns the evaluated point with the
/// smallest residual once the bracket is tight.
pub fn bisect_secant<F: Fn(f64) -> f64>(
    h: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> f64 {
    let mut flo = h(lo);
    if flo <= 0.0 {
        return lo;
    }
    let mut fhi = h(hi);
    if fhi >= 0.0 {
        return hi;
    }
    let mut best = if flo.abs() <= fhi.abs() { (lo, flo) } else { (hi, fhi) };
    for iter in 0..max_iter {
        if (hi - lo).abs() <= rel_tol * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let secant = lo - flo * (hi - lo) / (fhi - flo);
        let x = if iter % 2 == 0 && secant.is_finite() && secant > lo && secant < hi {
            secant
        } else {
            mid
        };
        if x <= lo || x >= hi {
            break;
        }
        let fx = h(x);
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx == 0.0 {
            return x;
        }
        if fx > 0.0 {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
    }
    best.0.clamp(lo, hi)
}

/// Principal branch of the Lambert W function (`w e^w = x`) for `x >= -1/e`.
///
/// Halley iteration from an asymptotic initial guess; accurate to machine
/// precision over the domain used here (nonnegative arguments in practice).
pub fn lambert_w0(x: f64) -> f64 {
    assert!(
        x >= -1.0 / std::f64::consts::E - 1e-12,
        "lambert_w0 domain is [-1/e, inf), got {x}"
    );
    if x == 0.0 {
        return 0.0;
    }
    let mut w = if x > std::f64::consts::E {
        let l = x.ln();
        l - l.ln()
    } else if x > 0.0 {
        // For small positive x, w ~ x (1 - x + ...); ln(1+x) is a stable start.
        x.ln_1p()
    } else {
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0
    };
    for _ in 0..100 {
        let ew = w.exp();
        let wew = w * ew;
        let diff = wew - x;
        if diff == 0.0 {
            break;
        }
        let denom = ew * (w + 1.0) - (w + 2.0) * diff / (2.0 * w + 2.0);
        let step = diff / denom;
        w -= step;
        if step.abs() <= 1e-16 * (1.0 + w.abs()) {
            break;
        }
    }
    w
}

/// Golden-section maximization of a unimodal (or locally unimodal) function
/// on [lo, hi]. Returns the abscissa and value of the best point seen.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, x_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (hi - lo).abs() > x_tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk_integrates_polynomials_exactly() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-13, 1e-15);
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn gk_handles_mild_endpoint_steepness() {
        let v = integrate(|x| x.sqrt(), 0.0, 1.0, 1e-12, 1e-14);
        assert!((v - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn exp_tail_converges_on_decaying_integrand() {
        // integral of e^{-s} ds over [0, inf) = 1
        match integrate_exp_tail(|s| (-s).exp(), 1e-13) {
            TailIntegral::Converged(v) => assert!((v - 1.0).abs() < 1e-11),
            TailIntegral::Divergent => panic!("unexpected divergence"),
        }
    }

    #[test]
    fn exp_tail_flags_constant_integrand_as_divergent() {
        assert_eq!(integrate_exp_tail(|_| 1.0, 1e-13), TailIntegral::Divergent);
    }

    #[test]
    fn root_finder_hits_relative_tolerance() {
        let h = |x: f64| 2.0 - x * x; // decreasing on [0, inf), root sqrt(2)
        let hi = expand_bracket_decreasing(h, 0.0, 1.0).unwrap();
        let r = bisect_secant(h, 0.0, hi, 1e-13, 80);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lambert_w_inverts_w_exp_w() {
        for &x in &[1e-9, 0.1, 1.0, 2.5, 36787.9, 1e12] {
            let w = lambert_w0(x);
            assert!(
                (w * w.exp() - x).abs() <= 1e-12 * x,
                "w e^w mismatch at x={x}"
            );
        }
        assert!((lambert_w0(0.0)).abs() == 0.0);
        assert!((lambert_w0(1.0) - 0.567_143_290_409_783_8).abs() < 1e-14);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_max(|x| 1.0 - (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-12);
    }
}

//! Dual verification on finite probability spaces: the expectile's maximal
//! expectation over its box-constrained density set, solved exactly by
//! water-filling inside a one-dimensional search over the box parameter, and
//! the step-family discretization whose cell averages converge to the
//! expectile-based expected shortfall from below.

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::distributions::{FiniteLossModel, LossDistribution};
use crate::error::{Result, RiskError};
use crate::expectile::RiskLevel;
use crate::measures;
use crate::numerics;

/// A feasible density for the expectile's dual set at some level u:
/// nonnegative weights with unit expectation, boxed between `gamma` and
/// `(1-u) gamma / u`.
#[derive(Debug, Clone)]
pub struct DualDensity {
    /// One weight per atom, in the model's canonical (ascending value) order.
    pub weights: Vec<f64>,
    pub gamma: f64,
}

impl DualDensity {
    /// Expectation of the density under the model's probabilities.
    pub fn expectation(&self, model: &FiniteLossModel) -> f64 {
        self.weights
            .iter()
            .zip(model.atoms())
            .map(|(w, a)| w * a.prob)
            .sum()
    }

    /// E[L Y] for the model's loss values.
    pub fn objective(&self, model: &FiniteLossModel) -> f64 {
        self.weights
            .iter()
            .zip(model.atoms())
            .map(|(w, a)| w * a.prob * a.value)
            .sum()
    }
}

/// Exact inner linear program for a fixed box parameter: maximize E[LY]
/// subject to E[Y] = 1 and gamma <= Y <= (1-u) gamma / u, by saturating the
/// upper bound on the largest loss atoms first (fractional knapsack).
fn water_fill(model: &FiniteLossModel, u: f64, gamma: f64) -> (f64, Vec<f64>) {
    let atoms = model.atoms();
    let cap = (1.0 - u) * gamma / u;
    let mut weights = vec![gamma; atoms.len()];
    let mut budget = 1.0 - gamma;
    for (i, atom) in atoms.iter().enumerate().rev() {
        if budget <= 0.0 {
            break;
        }
        let room = atom.prob * (cap - gamma);
        if budget >= room {
            weights[i] = cap;
            budget -= room;
        } else {
            weights[i] = gamma + budget / atom.prob;
            budget = 0.0;
        }
    }
    let value = weights
        .iter()
        .zip(atoms)
        .map(|(w, a)| w * a.prob * a.value)
        .sum();
    (value, weights)
}

/// Maximizes E[LY] over the expectile's dual set at level `u`.
///
/// The inner problem is solved exactly per box parameter; the outer value is
/// concave in the parameter, so golden-section plus a final local sweep
/// locates the maximum. The returned value equals the primal expectile
/// (root of the first-order condition) up to solver tolerance.
pub fn expectile_dual_max(
    model: &FiniteLossModel,
    u: RiskLevel,
) -> Result<(f64, DualDensity)> {
    let u = u.get();
    let lo = u / (1.0 - u);
    let hi = 1.0;
    let inner = |g: f64| water_fill(model, u, g).0;
    let best_gamma = if hi - lo <= 1e-14 {
        hi
    } else {
        let (g0, _) = numerics::golden_max(inner, lo, hi, (hi - lo) * 3e-13);
        // local sweep around the golden-section point
        let span = (hi - lo) * 1e-9;
        let mut best = (g0, inner(g0));
        for k in -20..=20 {
            let g = (g0 + k as f64 * span / 20.0).clamp(lo, hi);
            let v = inner(g);
            if v > best.1 {
                best = (g, v);
            }
        }
        best.0
    };
    let (value, weights) = water_fill(model, u, best_gamma);
    let density = DualDensity {
        weights,
        gamma: best_gamma,
    };
    let cap = (1.0 - u) * best_gamma / u;
    let feasible = (density.expectation(model) - 1.0).abs() <= 1e-12
        && density
            .weights
            .iter()
            .all(|&w| w >= best_gamma - 1e-12 && w <= cap + 1e-12);
    if !feasible {
        return Err(RiskError::InfeasibleDensity);
    }
    Ok((value, density))
}

/// The optimal step family on the n-cell uniform partition of (0, alpha]:
/// cell k carries the dual-optimal density of the expectile at the cell's
/// right endpoint.
#[derive(Debug, Clone)]
pub struct StepDualFamily {
    pub n: usize,
    /// Right endpoints k * alpha / n, k = 1..=n.
    pub levels: Vec<f64>,
    pub values: Vec<f64>,
    pub densities: Vec<DualDensity>,
}

impl StepDualFamily {
    /// The level-averaged density (equal cell widths), whose expectation
    /// against the loss lower-bounds the expectile-based expected shortfall.
    pub fn bochner_average(&self) -> Vec<f64> {
        let n = self.n as f64;
        let dim = self.densities[0].weights.len();
        let mut avg = vec![0.0; dim];
        for d in &self.densities {
            for (s, w) in avg.iter_mut().zip(&d.weights) {
                *s += w / n;
            }
        }
        avg
    }
}

pub fn step_dual_family(
    model: &FiniteLossModel,
    alpha: RiskLevel,
    n: usize,
) -> Result<StepDualFamily> {
    if n == 0 {
        return Err(RiskError::DomainError("partition count must be >= 1".into()));
    }
    let a = alpha.get();
    let mut levels = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    let mut densities = Vec::with_capacity(n);
    for k in 1..=n {
        let t = (k as f64 * a / n as f64).min(0.5);
        let lvl = RiskLevel::new(t)?;
        let (v, d) = expectile_dual_max(model, lvl)?;
        levels.push(t);
        values.push(v);
        densities.push(d);
    }
    Ok(StepDualFamily {
        n,
        levels,
        values,
        densities,
    })
}

/// Discretized dual value: the average of per-cell dual maxima over the
/// n-cell partition. Nondecreasing under partition refinement and converging
/// to the expectile-based expected shortfall from below.
pub fn es_dual_discretized(model: &FiniteLossModel, alpha: RiskLevel, n: usize) -> Result<f64> {
    let family = step_dual_family(model, alpha, n)?;
    Ok(family.values.iter().sum::<f64>() / n as f64)
}

/// Per-cell summary of the optimal step family at the finest partition.
#[derive(Debug, Clone)]
pub struct CellSummary {
    pub level: f64,
    pub value: f64,
    pub gamma: f64,
}

/// Outcome of a duality verification run.
#[derive(Debug, Clone)]
pub struct DualityReport {
    pub model_hash: String,
    pub alpha: f64,
    pub n_values: Vec<usize>,
    pub dual_values: Vec<f64>,
    pub primal_value: f64,
    pub monotone: bool,
    pub final_gap: f64,
    pub passes: bool,
    pub cells: Vec<CellSummary>,
}

fn model_hash(model: &FiniteLossModel) -> String {
    let mut hasher = Sha256::new();
    for atom in model.atoms() {
        hasher.update(atom.value.to_bits().to_le_bytes());
        hasher.update(atom.prob.to_bits().to_le_bytes());
    }
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs the discretized dual values for n = 1, 2, 4, ..., n_max against the
/// quadrature primal, checking monotonicity under refinement and the final
/// gap. Failures are encoded in the report, not raised.
pub fn verify_duality(
    model: &FiniteLossModel,
    alpha: RiskLevel,
    n_max: usize,
    tol: f64,
) -> Result<DualityReport> {
    if n_max == 0 || !n_max.is_power_of_two() {
        return Err(RiskError::DomainError(format!(
            "n_max must be a power of two, got {n_max}"
        )));
    }
    let mut n_values = Vec::new();
    let mut n = 1;
    while n <= n_max {
        n_values.push(n);
        n *= 2;
    }
    let mut dual_values = Vec::with_capacity(n_values.len());
    let mut cells = Vec::new();
    for &n in &n_values {
        let family = step_dual_family(model, alpha, n)?;
        dual_values.push(family.values.iter().sum::<f64>() / n as f64);
        if n == n_max {
            cells = family
                .levels
                .iter()
                .zip(&family.values)
                .zip(&family.densities)
                .map(|((&level, &value), d)| CellSummary {
                    level,
                    value,
                    gamma: d.gamma,
                })
                .collect();
        }
    }
    let dist = LossDistribution::finite(model.clone());
    let primal_value = measures::expectile_es_quadrature(&dist, alpha)?;
    let monotone = dual_values.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let final_gap = primal_value - dual_values.last().expect("nonempty");
    Ok(DualityReport {
        model_hash: model_hash(model),
        alpha: alpha.get(),
        n_values,
        dual_values,
        primal_value,
        monotone,
        final_gap,
        passes: monotone && final_gap <= tol,
        cells,
    })
}

impl DualityReport {
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("model_hash".into(), json!(self.model_hash));
        map.insert("alpha".into(), json!(self.alpha));
        map.insert("n_values".into(), json!(self.n_values));
        map.insert("dual_values".into(), json!(self.dual_values));
        map.insert("primal_value".into(), json!(self.primal_value));
        map.insert("monotone".into(), json!(self.monotone));
        map.insert("final_gap".into(), json!(self.final_gap));
        Value::Object(map)
    }
}

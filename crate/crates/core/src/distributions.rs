//! Loss distributions behind one interface: the parametric families used
//! throughout (fixed normalizations), empirical samples, and explicit
//! finite-atom models. Every other module consumes only the primitives
//! exposed here (cdf, generalized inverse, mean, upper partial moment,
//! essential bounds).

use std::path::Path;

use crate::error::{Result, RiskError};

/// One atom of a finite loss model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

/// Explicit finite-support loss model with canonical (strictly increasing)
/// atom values. Duplicated input values are merged by summing probability;
/// probabilities must sum to one within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteLossModel {
    atoms: Vec<Atom>,
    /// cum[i] = P[L <= value_i]
    cum: Vec<f64>,
    /// suffix_prob[i] = P[L >= value_i]; one extra trailing 0 entry.
    suffix_prob: Vec<f64>,
    /// suffix_vp[i] = E[L 1_{L >= value_i}]; one extra trailing 0 entry.
    suffix_vp: Vec<f64>,
    mean: f64,
}

impl FiniteLossModel {
    pub fn new(pairs: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut pairs: Vec<(f64, f64)> = pairs.into_iter().collect();
        if pairs.is_empty() {
            return Err(RiskError::InvalidModel("no atoms".into()));
        }
        for &(v, p) in &pairs {
            if !v.is_finite() {
                return Err(RiskError::InvalidModel(format!("non-finite value {v}")));
            }
            if !(p > 0.0 && p <= 1.0) || !p.is_finite() {
                return Err(RiskError::InvalidModel(format!(
                    "probability {p} outside (0, 1]"
                )));
            }
        }
        let total: f64 = pairs.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(RiskError::InvalidModel(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut atoms: Vec<Atom> = Vec::with_capacity(pairs.len());
        for (v, p) in pairs {
            match atoms.last_mut() {
                Some(last) if last.value == v => last.prob += p,
                _ => atoms.push(Atom { value: v, prob: p }),
            }
        }
        let n = atoms.len();
        let mut cum = Vec::with_capacity(n);
        let mut acc = 0.0;
        for a in &atoms {
            acc += a.prob;
            cum.push(acc);
        }
        let mut suffix_prob = vec![0.0; n + 1];
        let mut suffix_vp = vec![0.0; n + 1];
        for i in (0..n).rev() {
            suffix_prob[i] = suffix_prob[i + 1] + atoms[i].prob;
            suffix_vp[i] = suffix_vp[i + 1] + atoms[i].prob * atoms[i].value;
        }
        let mean = suffix_vp[0];
        Ok(Self {
            atoms,
            cum,
            suffix_prob,
            suffix_vp,
            mean,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Index of the first atom with value strictly greater than `x`.
    fn first_above(&self, x: f64) -> usize {
        self.atoms.partition_point(|a| a.value <= x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.first_above(x);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1].min(1.0)
        }
    }

    /// Left-continuous generalized inverse of the cdf.
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!(p > 0.0 && p < 1.0);
        let k = self.cum.partition_point(|&c| c < p);
        self.atoms[k.min(self.atoms.len() - 1)].value
    }

    /// E[(L - x)^+], exact.
    pub fn upper_partial(&self, x: f64) -> f64 {
        let k = self.first_above(x);
        self.suffix_vp[k] - x * self.suffix_prob[k]
    }

    /// Upper quantile parameterized by tail mass: the smallest atom whose
    /// strictly-above probability is at most `tail`. Equals
    /// `quantile(1 - tail)` without forming `1 - tail`.
    pub fn tail_quantile(&self, tail: f64) -> f64 {
        debug_assert!(tail > 0.0 && tail < 1.0);
        let n = self.atoms.len();
        // suffix_prob[1..] is nonincreasing; suffix_prob[n] = 0 bounds k < n.
        let k = self.suffix_prob[1..].partition_point(|&s| s > tail).min(n - 1);
        self.atoms[k].value
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.atoms[0].value, self.atoms[self.atoms.len() - 1].value)
    }

    pub fn is_constant(&self) -> bool {
        self.atoms.len() == 1
    }

    /// Exact expected shortfall at level `alpha`: averages the top `alpha`
    /// probability mass of atom values.
    pub fn expected_shortfall(&self, alpha: f64) -> f64 {
        debug_assert!(alpha > 0.0 && alpha < 1.0);
        let mut remaining = alpha;
        let mut acc = 0.0;
        for a in self.atoms.iter().rev() {
            let w = a.prob.min(remaining);
            acc += w * a.value;
            remaining -= w;
            if remaining <= 0.0 {
                break;
            }
        }
        acc / alpha
    }
}

/// A loss profile exposing the distributional primitives used by every risk
/// measure. Parametric kinds use the fixed normalizations of the closed-form
/// registry; `Empirical` and `Finite` share one exact piecewise
/// implementation.
#[derive(Debug, Clone, PartialEq)]
pub enum LossDistribution {
    /// P[L = 1] = p, P[L = 0] = 1 - p, with p in (0, 1).
    Bernoulli { p: f64 },
    /// Uniform on [0, 1].
    Uniform01,
    /// F(x) = x^a on [0, 1], a > 0.
    BetaPower { a: f64 },
    /// Unit-rate exponential.
    Exponential1,
    /// F(x) = (4 + x^2 + x sqrt(x^2 + 4)) / (2 (x^2 + 4)); the distribution
    /// whose expectile and quantile curves coincide.
    Koenker,
    /// F(x) = 1 - (x + 1)^{-a} for x >= 0; integrable only for a > 1.
    Pareto { a: f64 },
    /// Equal-weight atoms from an observed sample.
    Empirical(FiniteLossModel),
    /// Explicit atoms.
    Finite(FiniteLossModel),
}

impl LossDistribution {
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(RiskError::DomainError(format!(
                "bernoulli parameter p must lie in (0, 1), got {p}"
            )));
        }
        Ok(Self::Bernoulli { p })
    }

    pub fn beta_power(a: f64) -> Result<Self> {
        if a <= 0.0 || !a.is_finite() {
            return Err(RiskError::DomainError(format!(
                "beta exponent must be positive, got {a}"
            )));
        }
        Ok(Self::BetaPower { a })
    }

    pub fn pareto(a: f64) -> Result<Self> {
        if a <= 0.0 || !a.is_finite() {
            return Err(RiskError::DomainError(format!(
                "pareto index must be positive, got {a}"
            )));
        }
        Ok(Self::Pareto { a })
    }

    /// Empirical distribution with equal weights over `values`.
    pub fn from_sample(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(RiskError::EmptySample);
        }
        for &v in values {
            if !v.is_finite() {
                return Err(RiskError::InvalidModel(format!(
                    "non-finite sample value {v}"
                )));
            }
        }
        let w = 1.0 / values.len() as f64;
        let model = FiniteLossModel::new(values.iter().map(|&v| (v, w)))?;
        Ok(Self::Empirical(model))
    }

    pub fn finite(model: FiniteLossModel) -> Self {
        Self::Finite(model)
    }

    /// The underlying atom model for atomic kinds (including Bernoulli).
    pub fn atom_model(&self) -> Option<FiniteLossModel> {
        match self {
            Self::Bernoulli { p } => {
                Some(FiniteLossModel::new([(0.0, 1.0 - p), (1.0, *p)]).expect("valid bernoulli"))
            }
            Self::Empirical(m) | Self::Finite(m) => Some(m.clone()),
            _ => None,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(
            self,
            Self::Uniform01 | Self::BetaPower { .. } | Self::Exponential1 | Self::Koenker | Self::Pareto { .. }
        )
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Self::Empirical(m) | Self::Finite(m) => m.is_constant(),
            _ => false,
        }
    }

    /// Right-continuous cumulative distribution function.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Bernoulli { p } => {
                if x < 0.0 {
                    0.0
                } else if x < 1.0 {
                    1.0 - p
                } else {
                    1.0
                }
            }
            Self::Uniform01 => x.clamp(0.0, 1.0),
            Self::BetaPower { a } => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    1.0
                } else {
                    x.powf(*a)
                }
            }
            Self::Exponential1 => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x).exp_m1()
                }
            }
            Self::Koenker => 0.5 * (1.0 + x / (x * x + 4.0).sqrt()),
            Self::Pareto { a } => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - (x + 1.0).powf(-a)
                }
            }
            Self::Empirical(m) | Self::Finite(m) => m.cdf(x),
        }
    }

    /// Left-continuous generalized inverse: inf { m : F(m) >= p }.
    pub fn quantile_level(&self, p: f64) -> f64 {
        assert!(p > 0.0 && p < 1.0, "quantile level must lie in (0, 1)");
        match self {
            Self::Bernoulli { p: pp } => {
                if 1.0 - pp >= p {
                    0.0
                } else {
                    1.0
                }
            }
            Self::Uniform01 => p,
            Self::BetaPower { a } => p.powf(1.0 / a),
            Self::Exponential1 => -(-p).ln_1p(),
            Self::Koenker => (2.0 * p - 1.0) / (p * (1.0 - p)).sqrt(),
            Self::Pareto { a } => (1.0 - p).powf(-1.0 / a) - 1.0,
            Self::Empirical(m) | Self::Finite(m) => m.quantile(p),
        }
    }

    /// Upper quantile parameterized by tail mass: q with P[L > q] <= tail <=
    /// P[L >= q]. Mathematically `quantile_level(1 - tail)`, but evaluated
    /// without forming `1 - tail`, which collapses to 1.0 in floating point
    /// for the deep-tail levels the integrators probe.
    pub fn tail_quantile(&self, tail: f64) -> f64 {
        assert!(tail > 0.0 && tail < 1.0, "tail mass must lie in (0, 1)");
        match self {
            Self::Bernoulli { p } => {
                if tail >= *p {
                    0.0
                } else {
                    1.0
                }
            }
            Self::Uniform01 => 1.0 - tail,
            Self::BetaPower { a } => (1.0 - tail).powf(1.0 / a),
            Self::Exponential1 => -tail.ln(),
            Self::Koenker => (1.0 - 2.0 * tail) / (tail * (1.0 - tail)).sqrt(),
            Self::Pareto { a } => tail.powf(-1.0 / a) - 1.0,
            Self::Empirical(m) | Self::Finite(m) => m.tail_quantile(tail),
        }
    }

    /// E[L]. Errors for parametric kinds with an infinite mean.
    pub fn mean(&self) -> Result<f64> {
        match self {
            Self::Bernoulli { p } => Ok(*p),
            Self::Uniform01 => Ok(0.5),
            Self::BetaPower { a } => Ok(a / (a + 1.0)),
            Self::Exponential1 => Ok(1.0),
            Self::Koenker => Ok(0.0),
            Self::Pareto { a } => {
                if *a > 1.0 {
                    Ok(1.0 / (a - 1.0))
                } else {
                    Err(RiskError::NonIntegrable)
                }
            }
            Self::Empirical(m) | Self::Finite(m) => Ok(m.mean()),
        }
    }

    /// Upper partial moment E[(L - x)^+]. Infinite for non-integrable kinds.
    pub fn upper_partial(&self, x: f64) -> f64 {
        match self {
            Self::Bernoulli { p } => (1.0 - p) * (-x).max(0.0) + p * (1.0 - x).max(0.0),
            Self::Uniform01 => {
                if x <= 0.0 {
                    0.5 - x
                } else if x >= 1.0 {
                    0.0
                } else {
                    0.5 * (1.0 - x) * (1.0 - x)
                }
            }
            Self::BetaPower { a } => {
                if x <= 0.0 {
                    a / (a + 1.0) - x
                } else if x >= 1.0 {
                    0.0
                } else {
                    (1.0 - x) - (1.0 - x.powf(a + 1.0)) / (a + 1.0)
                }
            }
            Self::Exponential1 => {
                if x <= 0.0 {
                    1.0 - x
                } else {
                    (-x).exp()
                }
            }
            Self::Koenker => {
                // (sqrt(x^2+4) - x)/2, rationalized for large positive x.
                if x > 0.0 {
                    2.0 / ((x * x + 4.0).sqrt() + x)
                } else {
                    0.5 * ((x * x + 4.0).sqrt() - x)
                }
            }
            Self::Pareto { a } => {
                if *a <= 1.0 {
                    f64::INFINITY
                } else if x <= 0.0 {
                    1.0 / (a - 1.0) - x
                } else {
                    (x + 1.0).powf(1.0 - a) / (a - 1.0)
                }
            }
            Self::Empirical(m) | Self::Finite(m) => m.upper_partial(x),
        }
    }

    /// (essential infimum, essential supremum); infinite ends allowed.
    pub fn essential_bounds(&self) -> (f64, f64) {
        match self {
            Self::Bernoulli { .. } => (0.0, 1.0),
            Self::Uniform01 | Self::BetaPower { .. } => (0.0, 1.0),
            Self::Exponential1 | Self::Pareto { .. } => (0.0, f64::INFINITY),
            Self::Koenker => (f64::NEG_INFINITY, f64::INFINITY),
            Self::Empirical(m) | Self::Finite(m) => m.bounds(),
        }
    }
}

fn normalize_header(field: &str) -> String {
    field.trim().trim_start_matches('\u{feff}').to_ascii_lowercase()
}

fn parse_field(raw: &str, line: u64, what: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| {
        RiskError::Parse(format!("row {line}: cannot parse {what} from `{raw}`"))
    })
}

/// Reads a finite-atom model from CSV with header `value,prob`.
pub fn read_finite_csv(path: &Path) -> Result<FiniteLossModel> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| RiskError::Io(e.to_string()))?;
    let headers = reader.headers().map_err(|e| RiskError::Parse(e.to_string()))?;
    let names: Vec<String> = headers.iter().map(normalize_header).collect();
    if names != ["value", "prob"] {
        return Err(RiskError::Parse(format!(
            "expected header `value,prob`, got `{}`",
            names.join(",")
        )));
    }
    let mut pairs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| RiskError::Parse(e.to_string()))?;
        let line = i as u64 + 2;
        if record.len() != 2 {
            return Err(RiskError::Parse(format!(
                "row {line}: expected 2 fields, got {}",
                record.len()
            )));
        }
        let value = parse_field(&record[0], line, "value")?;
        let prob = parse_field(&record[1], line, "prob")?;
        pairs.push((value, prob));
    }
    FiniteLossModel::new(pairs)
}

/// Reads an empirical sample from CSV with header `value`.
pub fn read_empirical_csv(path: &Path) -> Result<Vec<f64>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| RiskError::Io(e.to_string()))?;
    let headers = reader.headers().map_err(|e| RiskError::Parse(e.to_string()))?;
    let names: Vec<String> = headers.iter().map(normalize_header).collect();
    if names != ["value"] {
        return Err(RiskError::Parse(format!(
            "expected header `value`, got `{}`",
            names.join(",")
        )));
    }
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| RiskError::Parse(e.to_string()))?;
        let line = i as u64 + 2;
        if record.len() != 1 {
            return Err(RiskError::Parse(format!(
                "row {line}: expected 1 field, got {}",
                record.len()
            )));
        }
        values.push(parse_field(&record[0], line, "value")?);
    }
    if values.is_empty() {
        return Err(RiskError::EmptySample);
    }
    Ok(values)
}

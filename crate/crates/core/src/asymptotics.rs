//! Small-level limit diagnostics: theoretical ratio limits per declared
//! extreme-value class and empirical ratio curves over a decreasing level
//! grid. The class is declared by the caller, never estimated.

use serde_json::{json, Map, Value};

use crate::distributions::LossDistribution;
use crate::error::{Result, RiskError};
use crate::expectile::{exceedance_beta, expectile, RiskLevel};
use crate::measures;

/// Declared maximum domain of attraction driving the theoretical limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MdaSpec {
    /// Heavy tail with index eta; ratio limits require eta > 1.
    Frechet { eta: f64 },
    /// Bounded upper endpoint `xhat`.
    Weibull { eta: f64, xhat: f64 },
    /// Light tail; `weibull_tail` asserts the Weibull-type tail condition
    /// under which all three shortfall measures are asymptotically equal.
    Gumbel { xhat: f64, weibull_tail: bool },
}

impl MdaSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MdaSpec::Frechet { eta } => {
                if eta > 1.0 && eta.is_finite() {
                    Ok(())
                } else {
                    Err(RiskError::DomainError(format!(
                        "frechet limits require eta > 1, got {eta}"
                    )))
                }
            }
            MdaSpec::Weibull { eta, xhat } => {
                if eta <= 0.0 || !eta.is_finite() {
                    return Err(RiskError::DomainError(format!(
                        "weibull requires eta > 0, got {eta}"
                    )));
                }
                if !xhat.is_finite() {
                    return Err(RiskError::DomainError(
                        "weibull requires a finite upper endpoint".into(),
                    ));
                }
                Ok(())
            }
            MdaSpec::Gumbel { xhat, weibull_tail } => {
                if xhat.is_nan() {
                    return Err(RiskError::DomainError("gumbel endpoint is NaN".into()));
                }
                if weibull_tail && xhat.is_finite() {
                    return Err(RiskError::DomainError(
                        "the weibull-type tail condition implies an unbounded support".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

pub const COL_ES_OVER_ES: &str = "es/ES";
pub const COL_TCE_OVER_E: &str = "tce/e";
pub const COL_ES_OVER_Q: &str = "ES/q";
pub const COL_TCE_OVER_ES_EXPECTILE: &str = "tce/es";
pub const COL_TCE_OVER_ES_QUANTILE: &str = "tce/ES";
pub const COL_END_ES: &str = "(xhat-ES)/(xhat-es)";
pub const COL_END_TCE: &str = "(xhat-tce)/(xhat-e)";
pub const COL_END_Q: &str = "(xhat-ES)/(xhat-q)";

/// A theoretical limit for one ratio column. `asserted = false` marks a
/// column the theory leaves open for the declared class (reported but never
/// tested).
#[derive(Debug, Clone)]
pub struct LimitEntry {
    pub column: &'static str,
    pub limit: Option<f64>,
    pub asserted: bool,
}

fn entry(column: &'static str, limit: f64) -> LimitEntry {
    LimitEntry {
        column,
        limit: Some(limit),
        asserted: true,
    }
}

/// Theoretical small-level limits for the declared class.
pub fn theoretical_limits(mda: &MdaSpec) -> Result<Vec<LimitEntry>> {
    mda.validate()?;
    Ok(match *mda {
        MdaSpec::Frechet { eta } => vec![
            entry(COL_ES_OVER_ES, (eta - 1.0).powf(-1.0 / eta)),
            entry(COL_TCE_OVER_ES_EXPECTILE, 1.0),
            entry(COL_TCE_OVER_E, eta / (eta - 1.0)),
            entry(COL_ES_OVER_Q, eta / (eta - 1.0)),
        ],
        MdaSpec::Weibull { eta, .. } => vec![
            entry(COL_END_ES, 0.0),
            entry(COL_END_TCE, eta / (eta + 1.0)),
            entry(COL_END_Q, eta / (eta + 1.0)),
        ],
        MdaSpec::Gumbel { xhat, weibull_tail } => {
            if xhat.is_infinite() {
                let mut v = vec![entry(COL_TCE_OVER_E, 1.0), entry(COL_ES_OVER_Q, 1.0)];
                if weibull_tail {
                    v.push(entry(COL_ES_OVER_ES, 1.0));
                    v.push(entry(COL_TCE_OVER_ES_QUANTILE, 1.0));
                }
                v
            } else {
                vec![
                    entry(COL_END_TCE, 1.0),
                    entry(COL_END_Q, 1.0),
                    // No equivalence between the shortfall measures is
                    // asserted at a finite endpoint without the extra tail
                    // condition.
                    LimitEntry {
                        column: COL_ES_OVER_ES,
                        limit: None,
                        asserted: false,
                    },
                ]
            }
        }
    })
}

/// Ratio columns evaluated on a decreasing level grid. Cells are `None`
/// where a constituent measure is degenerate, infinite, or the denominator
/// vanishes.
#[derive(Debug, Clone)]
pub struct RatioTable {
    pub alphas: Vec<f64>,
    pub xhat: Option<f64>,
    pub columns: Vec<(String, Vec<Option<f64>>)>,
}

fn ratio(num: Option<f64>, den: Option<f64>) -> Option<f64> {
    match (num, den) {
        (Some(n), Some(d)) if d.abs() > 1e-300 => {
            let r = n / d;
            (r.is_finite() && r > 0.0).then_some(r)
        }
        _ => None,
    }
}

pub fn ratio_curve(dist: &LossDistribution, alphas: &[f64]) -> Result<RatioTable> {
    if alphas.is_empty() {
        return Err(RiskError::DomainError("empty level grid".into()));
    }
    for pair in alphas.windows(2) {
        if pair[1] >= pair[0] {
            return Err(RiskError::DomainError(
                "level grid must be strictly decreasing".into(),
            ));
        }
    }
    dist.mean()?;
    let (_, sup) = dist.essential_bounds();
    let xhat = sup.is_finite().then_some(sup);
    let mut names: Vec<&str> = vec![
        COL_ES_OVER_ES,
        COL_TCE_OVER_E,
        COL_ES_OVER_Q,
        COL_TCE_OVER_ES_EXPECTILE,
        COL_TCE_OVER_ES_QUANTILE,
    ];
    if xhat.is_some() {
        names.extend([COL_END_ES, COL_END_TCE, COL_END_Q]);
    }
    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(alphas.len()); names.len()];
    for &a in alphas {
        let lvl = RiskLevel::new(a)?;
        let q = Some(measures::value_at_risk(dist, a));
        let es_q = Some(measures::expected_shortfall(dist, a).expect("mean checked"));
        let e = Some(expectile(dist, lvl)?);
        let beta = exceedance_beta(dist, lvl).ok();
        let tce = beta.map(|b| measures::expected_shortfall(dist, b).expect("mean checked"));
        let es_e = measures::expectile_es(dist, lvl)
            .ok()
            .filter(|v| v.is_finite());
        let mut row: Vec<Option<f64>> = vec![
            ratio(es_e, es_q),
            ratio(tce, e),
            ratio(es_q, q),
            ratio(tce, es_e),
            ratio(tce, es_q),
        ];
        if let Some(x) = xhat {
            let flip = |v: Option<f64>| v.map(|v| x - v);
            row.push(ratio(flip(es_q), flip(es_e)));
            row.push(ratio(flip(tce), flip(e)));
            row.push(ratio(flip(es_q), flip(q)));
        }
        for (col, value) in cells.iter_mut().zip(row) {
            col.push(value);
        }
    }
    Ok(RatioTable {
        alphas: alphas.to_vec(),
        xhat,
        columns: names
            .into_iter()
            .map(str::to_string)
            .zip(cells)
            .collect(),
    })
}

impl RatioTable {
    pub fn column(&self, name: &str) -> Option<&[Option<f64>]> {
        self.columns
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha");
        for (name, _) in &self.columns {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (i, a) in self.alphas.iter().enumerate() {
            out.push_str(&format!("{a}"));
            for (_, col) in &self.columns {
                out.push(',');
                match col[i] {
                    Some(v) => out.push_str(&format!("{v}")),
                    None => out.push_str("degenerate"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Pass/fail of one ratio column against its theoretical limit at the
/// smallest grid level. `pass = None` for columns the theory does not
/// assert.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub column: String,
    pub limit: Option<f64>,
    pub observed: Option<f64>,
    pub pass: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub alpha_at: f64,
    pub tolerance: f64,
    pub rows: Vec<ConvergenceRow>,
    pub all_pass: bool,
}

impl ConvergenceReport {
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("alpha_at".into(), json!(self.alpha_at));
        map.insert("tolerance".into(), json!(self.tolerance));
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                m.insert("column".into(), json!(r.column));
                m.insert("limit".into(), json!(r.limit));
                m.insert("observed".into(), json!(r.observed));
                m.insert("pass".into(), json!(r.pass));
                Value::Object(m)
            })
            .collect();
        map.insert("columns".into(), Value::Array(rows));
        map.insert("all_pass".into(), json!(self.all_pass));
        Value::Object(map)
    }
}

/// Compares the last (smallest-level) entry of each asserted ratio column to
/// its theoretical limit at the supplied tolerance. The declared endpoint
/// must agree with the distribution's essential supremum.
pub fn convergence_report(
    dist: &LossDistribution,
    mda: &MdaSpec,
    alphas: &[f64],
    tolerance_at_last: f64,
) -> Result<ConvergenceReport> {
    mda.validate()?;
    let (_, sup) = dist.essential_bounds();
    let declared_xhat = match *mda {
        MdaSpec::Weibull { xhat, .. } => Some(xhat),
        MdaSpec::Gumbel { xhat, .. } if xhat.is_finite() => Some(xhat),
        _ => None,
    };
    match declared_xhat {
        Some(x) if !sup.is_finite() => {
            return Err(RiskError::ClassMismatch(format!(
                "declared endpoint {x} but the distribution is unbounded above"
            )));
        }
        Some(x) if (x - sup).abs() > 1e-9 * (1.0 + sup.abs()) => {
            return Err(RiskError::ClassMismatch(format!(
                "declared endpoint {x} differs from the essential supremum {sup}"
            )));
        }
        _ => {}
    }
    let table = ratio_curve(dist, alphas)?;
    let limits = theoretical_limits(mda)?;
    let mut rows = Vec::with_capacity(limits.len());
    let mut all_pass = true;
    for lim in limits {
        let col = table.column(lim.column).ok_or_else(|| {
            RiskError::ClassMismatch(format!(
                "ratio column `{}` is undefined for this distribution",
                lim.column
            ))
        })?;
        let observed = *col.last().expect("nonempty grid");
        let pass = match (lim.asserted, lim.limit, observed) {
            (false, _, _) => None,
            (true, Some(l), Some(o)) => Some((o - l).abs() <= tolerance_at_last),
            (true, _, None) => Some(false),
            (true, None, _) => None,
        };
        if pass == Some(false) {
            all_pass = false;
        }
        rows.push(ConvergenceRow {
            column: lim.column.to_string(),
            limit: lim.limit,
            observed,
            pass,
        });
    }
    Ok(ConvergenceReport {
        alpha_at: *alphas.last().expect("nonempty grid"),
        tolerance: tolerance_at_last,
        rows,
        all_pass,
    })
}

//! Argument grammars: distribution specs `name[:key=value,...]`, declared
//! extreme-value classes, and level grids `lo:hi:count:lin|log`.

use std::collections::BTreeMap;
use std::path::Path;

use estail::asymptotics::MdaSpec;
use estail::distributions::{read_empirical_csv, read_finite_csv, LossDistribution};

/// Failures split by exit-code class: grammar problems are usage errors,
/// value/file problems are validation errors.
#[derive(Debug)]
pub enum SpecError {
    /// Malformed spec string; carries the byte offset of the offending token.
    Parse { offset: usize, msg: String },
    /// Well-formed spec with inadmissible values or unreadable file contents.
    Validation(String),
}

impl std::fmt::Display for SpecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpecError::Parse { offset, msg } => write!(f, "{msg} (at byte {offset})"),
            SpecError::Validation(msg) => write!(f, "{msg}"),
        }
    }
}

pub const DIST_GRAMMAR: &str = "distribution spec: name[:key=value,...] where name is one of \
uniform, exponential, koenker, bernoulli:p=<prob>, beta:a=<exp>, pareto:a=<index>, \
empirical:file=<csv with header `value`>, finite:file=<csv with header `value,prob`>";

pub const GRID_GRAMMAR: &str = "level grid: lo:hi:count:lin|log with 0 < lo <= hi < 1";

pub const MDA_GRAMMAR: &str = "mda spec: frechet:eta=<v> | weibull:eta=<v>,xhat=<v> | \
gumbel[:xhat=<v|inf>][,weibull_tail]";

fn split_keys(spec: &str, body: &str, base: usize) -> Result<BTreeMap<String, String>, SpecError> {
    let mut map = BTreeMap::new();
    let mut offset = base;
    for part in body.split(',') {
        if part.is_empty() {
            return Err(SpecError::Parse {
                offset,
                msg: "empty key=value entry".into(),
            });
        }
        match part.split_once('=') {
            Some((k, v)) if !k.is_empty() && !v.is_empty() => {
                map.insert(k.to_string(), v.to_string());
            }
            // bare keys act as boolean flags
            None => {
                map.insert(part.to_string(), "true".to_string());
            }
            _ => {
                return Err(SpecError::Parse {
                    offset,
                    msg: format!("malformed key=value `{part}` in `{spec}`"),
                });
            }
        }
        offset += part.len() + 1;
    }
    Ok(map)
}

fn take_f64(keys: &mut BTreeMap<String, String>, key: &str, spec: &str) -> Result<f64, SpecError> {
    let raw = keys.remove(key).ok_or_else(|| SpecError::Parse {
        offset: spec.len(),
        msg: format!("`{spec}` requires key `{key}`"),
    })?;
    if raw == "inf" {
        return Ok(f64::INFINITY);
    }
    raw.parse::<f64>().map_err(|_| SpecError::Parse {
        offset: spec.find(&raw).unwrap_or(0),
        msg: format!("cannot parse `{raw}` as a number for key `{key}`"),
    })
}

fn no_leftovers(keys: BTreeMap<String, String>, spec: &str) -> Result<(), SpecError> {
    if let Some((k, _)) = keys.into_iter().next() {
        return Err(SpecError::Parse {
            offset: spec.find(&k).unwrap_or(0),
            msg: format!("unknown key `{k}` in `{spec}`"),
        });
    }
    Ok(())
}

pub fn parse_dist(spec: &str) -> Result<LossDistribution, SpecError> {
    let (name, body) = match spec.split_once(':') {
        Some((n, b)) => (n, Some(b)),
        None => (spec, None),
    };
    let mut keys = match body {
        Some(b) => split_keys(spec, b, name.len() + 1)?,
        None => BTreeMap::new(),
    };
    let dist = match name {
        "uniform" | "uniform01" => LossDistribution::Uniform01,
        "exponential" | "exponential1" => LossDistribution::Exponential1,
        "koenker" => LossDistribution::Koenker,
        "bernoulli" => {
            let p = take_f64(&mut keys, "p", spec)?;
            LossDistribution::bernoulli(p).map_err(|e| SpecError::Validation(e.to_string()))?
        }
        "beta" | "beta_power" => {
            let a = take_f64(&mut keys, "a", spec)?;
            LossDistribution::beta_power(a).map_err(|e| SpecError::Validation(e.to_string()))?
        }
        "pareto" => {
            let a = take_f64(&mut keys, "a", spec)?;
            let d = LossDistribution::pareto(a).map_err(|e| SpecError::Validation(e.to_string()))?;
            if d.mean().is_err() {
                return Err(SpecError::Validation(format!(
                    "pareto index {a} yields an infinite mean (requires a > 1)"
                )));
            }
            d
        }
        "empirical" => {
            let file = keys.remove("file").ok_or_else(|| SpecError::Parse {
                offset: spec.len(),
                msg: "`empirical` requires key `file`".into(),
            })?;
            let values = read_empirical_csv(Path::new(&file))
                .map_err(|e| SpecError::Validation(format!("{file}: {e}")))?;
            LossDistribution::from_sample(&values)
                .map_err(|e| SpecError::Validation(e.to_string()))?
        }
        "finite" => {
            let file = keys.remove("file").ok_or_else(|| SpecError::Parse {
                offset: spec.len(),
                msg: "`finite` requires key `file`".into(),
            })?;
            let model = read_finite_csv(Path::new(&file))
                .map_err(|e| SpecError::Validation(format!("{file}: {e}")))?;
            LossDistribution::finite(model)
        }
        other => {
            return Err(SpecError::Parse {
                offset: 0,
                msg: format!("unknown distribution `{other}`"),
            });
        }
    };
    no_leftovers(keys, spec)?;
    Ok(dist)
}

pub fn parse_mda(spec: &str) -> Result<MdaSpec, SpecError> {
    let (name, body) = match spec.split_once(':') {
        Some((n, b)) => (n, Some(b)),
        None => (spec, None),
    };
    let mut keys = match body {
        Some(b) => split_keys(spec, b, name.len() + 1)?,
        None => BTreeMap::new(),
    };
    let mda = match name {
        "frechet" => MdaSpec::Frechet {
            eta: take_f64(&mut keys, "eta", spec)?,
        },
        "weibull" => MdaSpec::Weibull {
            eta: take_f64(&mut keys, "eta", spec)?,
            xhat: take_f64(&mut keys, "xhat", spec)?,
        },
        "gumbel" => {
            let xhat = match keys.remove("xhat") {
                Some(raw) if raw == "inf" => f64::INFINITY,
                Some(raw) => raw.parse::<f64>().map_err(|_| SpecError::Parse {
                    offset: spec.find(&raw).unwrap_or(0),
                    msg: format!("cannot parse `{raw}` as the endpoint"),
                })?,
                None => f64::INFINITY,
            };
            let weibull_tail = keys.remove("weibull_tail").is_some();
            MdaSpec::Gumbel { xhat, weibull_tail }
        }
        other => {
            return Err(SpecError::Parse {
                offset: 0,
                msg: format!("unknown extreme-value class `{other}`"),
            });
        }
    };
    no_leftovers(keys, spec)?;
    mda.validate()
        .map_err(|e| SpecError::Validation(e.to_string()))?;
    Ok(mda)
}

/// Ascending grid parsed from `lo:hi:count:lin|log`.
pub fn parse_alpha_grid(spec: &str) -> Result<Vec<f64>, SpecError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        return Err(SpecError::Parse {
            offset: 0,
            msg: format!("expected lo:hi:count:lin|log, got `{spec}`"),
        });
    }
    let lo: f64 = parts[0].parse().map_err(|_| SpecError::Parse {
        offset: 0,
        msg: format!("cannot parse grid low end `{}`", parts[0]),
    })?;
    let hi: f64 = parts[1].parse().map_err(|_| SpecError::Parse {
        offset: parts[0].len() + 1,
        msg: format!("cannot parse grid high end `{}`", parts[1]),
    })?;
    let count: usize = parts[2].parse().map_err(|_| SpecError::Parse {
        offset: parts[0].len() + parts[1].len() + 2,
        msg: format!("cannot parse grid count `{}`", parts[2]),
    })?;
    if !(lo > 0.0 && lo <= hi && hi < 1.0) {
        return Err(SpecError::Validation(format!(
            "grid endpoints must satisfy 0 < lo <= hi < 1, got {lo}:{hi}"
        )));
    }
    if count == 0 {
        return Err(SpecError::Validation("grid count must be positive".into()));
    }
    let scale = parts[3];
    let grid = match scale {
        "lin" => (0..count)
            .map(|i| {
                if count == 1 {
                    lo
                } else {
                    lo + (hi - lo) * i as f64 / (count - 1) as f64
                }
            })
            .collect(),
        "log" => (0..count)
            .map(|i| {
                if count == 1 {
                    lo
                } else {
                    lo * (hi / lo).powf(i as f64 / (count - 1) as f64)
                }
            })
            .collect(),
        other => {
            return Err(SpecError::Parse {
                offset: spec.len() - other.len(),
                msg: format!("grid scale must be lin or log, got `{other}`"),
            });
        }
    };
    Ok(grid)
}

//! Drift families `p_i`, step probabilities `E_i`, step-odds ratios `U_i`,
//! and the iterated-logarithm ladder `log_k` / `λ(k,i)` / `Λ(K,i,B)`.

use thiserror::Error;

/// Intermediate iterated-log arguments must stay above this floor so every
/// `λ(k,i)` appearing in a denominator is strictly positive.
const LOG_FLOOR: f64 = 1.0 + 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("iterated log undefined: argument {value} at stage {stage} is <= 1")]
    LogDomain { stage: u32, value: f64 },
    #[error("invalid model parameter: {0}")]
    InvalidParam(String),
    #[error("table index {index} out of range 1..={len}")]
    TableIndex { index: u64, len: usize },
    #[error("bad model spec `{0}` (expected lambda:K=..,B=.. | power:alpha=..,B=.. | logpow:alpha=..,B=.. | const:p=.. | table:@file)")]
    BadSpec(String),
}

/// `log_k x`: the natural logarithm applied `k` times; `log_0 x = x`.
///
/// Errors when any intermediate argument drops to 1 or below (the next log
/// would be zero or negative).
pub fn iterated_log(k: u32, x: f64) -> Result<f64, ModelError> {
    let mut v = x;
    for stage in 0..k {
        if v <= LOG_FLOOR {
            return Err(ModelError::LogDomain { stage, value: v });
        }
        v = v.ln();
    }
    Ok(v)
}

/// `λ(k,i)`: `λ(0,i) = 1`, `λ(1,i) = i`, `λ(k,i) = λ(k−1,i)·log_{k−1} i`.
pub fn lambda_fn(k: u32, i: f64) -> Result<f64, ModelError> {
    let mut acc = 1.0;
    let mut log = i; // log_0 i
    for stage in 0..k {
        acc *= log;
        if stage + 1 < k {
            if log <= LOG_FLOOR {
                return Err(ModelError::LogDomain { stage, value: log });
            }
            log = log.ln();
        }
    }
    Ok(acc)
}

/// `Λ(K,i,B) = Σ_{k=1}^{K−1} 1/λ(k,i) + B/λ(K,i)`; zero when `K = 0`.
///
/// `Λ(K,i) = Λ(K,i,1)`.
pub fn big_lambda(k_max: u32, i: f64, b: f64) -> Result<f64, ModelError> {
    let mut acc = 0.0;
    let mut lambda = 1.0; // λ(0,i)
    let mut log = i; // log_0 i
    for k in 1..=k_max {
        lambda *= log;
        acc += if k == k_max { b / lambda } else { 1.0 / lambda };
        if k < k_max {
            if log <= LOG_FLOOR {
                return Err(ModelError::LogDomain {
                    stage: k - 1,
                    value: log,
                });
            }
            log = log.ln();
        }
    }
    Ok(acc)
}

/// A drift family for the walk's up-step bonus `p_i`.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `p_i = Λ(K,i,B)/4`, clamped below its validity index.
    Lambda { k: u32, b: f64 },
    /// `p_i = B/(4 i^α)` with `α ∈ (0,1)`, clamped.
    Power { alpha: f64, b: f64 },
    /// `p_i = B/(4 (log i)^α)` with `α > 0`, clamped.
    LogPower { alpha: f64, b: f64 },
    /// `p_i ≡ p` for a fixed `p ∈ [0, 1/2)`.
    Constant { p: f64 },
    /// Explicit per-site values, 1-based; not clamped.
    Table { values: Vec<f64> },
}

/// A validated drift model: the family plus its clamping index `i0`.
///
/// For the parametric families, `i0` is the smallest site where the raw
/// formula falls below 1/2; every site at or below `i0` uses `p_{i0}`.
/// Immutable after construction, so shared references are freely sendable
/// across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct StepModel {
    family: Family,
    i0: u64,
}

impl StepModel {
    pub fn new(family: Family) -> Result<Self, ModelError> {
        match &family {
            Family::Lambda { k, b } => {
                if *k == 0 {
                    return Err(ModelError::InvalidParam("lambda family needs K >= 1".into()));
                }
                if !(*b > 0.0) || !b.is_finite() {
                    return Err(ModelError::InvalidParam(format!("lambda family needs B > 0, got {b}")));
                }
            }
            Family::Power { alpha, b } => {
                if !(*alpha > 0.0 && *alpha < 1.0) {
                    return Err(ModelError::InvalidParam(format!(
                        "power family needs alpha in (0,1), got {alpha}"
                    )));
                }
                if !(*b > 0.0) || !b.is_finite() {
                    return Err(ModelError::InvalidParam(format!("power family needs B > 0, got {b}")));
                }
            }
            Family::LogPower { alpha, b } => {
                if !(*alpha > 0.0) || !alpha.is_finite() {
                    return Err(ModelError::InvalidParam(format!(
                        "log-power family needs alpha > 0, got {alpha}"
                    )));
                }
                if !(*b > 0.0) || !b.is_finite() {
                    return Err(ModelError::InvalidParam(format!(
                        "log-power family needs B > 0, got {b}"
                    )));
                }
            }
            Family::Constant { p } => {
                if !(*p >= 0.0 && *p < 0.5) {
                    return Err(ModelError::InvalidParam(format!(
                        "constant family needs p in [0, 1/2), got {p}"
                    )));
                }
            }
            Family::Table { values } => {
                if values.is_empty() {
                    return Err(ModelError::InvalidParam("table family needs at least one value".into()));
                }
                for (idx, v) in values.iter().enumerate() {
                    if !(*v >= 0.0 && *v < 0.5) {
                        return Err(ModelError::InvalidParam(format!(
                            "table entry {} = {v} outside [0, 1/2)",
                            idx + 1
                        )));
                    }
                }
            }
        }
        let i0 = Self::scan_i0(&family)?;
        Ok(Self { family, i0 })
    }

    /// Linear scan for the clamping index: the first site where the raw
    /// formula is defined and below 1/2. The families decrease eventually,
    /// so the scan terminates (a generous cap guards pathological inputs).
    fn scan_i0(family: &Family) -> Result<u64, ModelError> {
        match family {
            Family::Constant { .. } | Family::Table { .. } => Ok(1),
            _ => {
                for i in 1..=1_000_000_u64 {
                    match Self::raw_p(family, i) {
                        Ok(p) if p < 0.5 => return Ok(i),
                        _ => continue,
                    }
                }
                Err(ModelError::InvalidParam(
                    "no clamping index below 10^6; parameters give p >= 1/2 everywhere tested".into(),
                ))
            }
        }
    }

    fn raw_p(family: &Family, i: u64) -> Result<f64, ModelError> {
        let x = i as f64;
        match family {
            Family::Lambda { k, b } => Ok(big_lambda(*k, x, *b)? / 4.0),
            Family::Power { alpha, b } => Ok(b / (4.0 * x.powf(*alpha))),
            Family::LogPower { alpha, b } => {
                let l = x.ln();
                if l <= 0.0 {
                    return Err(ModelError::LogDomain { stage: 0, value: x });
                }
                Ok(b / (4.0 * l.powf(*alpha)))
            }
            Family::Constant { p } => Ok(*p),
            Family::Table { values } => values
                .get(i as usize - 1)
                .copied()
                .ok_or(ModelError::TableIndex {
                    index: i,
                    len: values.len(),
                }),
        }
    }

    /// The drift `p_i` at site `i >= 1`, with the clamp applied.
    pub fn p_at(&self, i: u64) -> Result<f64, ModelError> {
        debug_assert!(i >= 1);
        match &self.family {
            Family::Constant { p } => Ok(*p),
            Family::Table { .. } => Self::raw_p(&self.family, i),
            _ => Self::raw_p(&self.family, i.max(self.i0)),
        }
    }

    /// Up-step probability `E_i = 1/2 + p_i` for `i >= 1`; `E_0 = 1`.
    pub fn e_at(&self, i: u64) -> Result<f64, ModelError> {
        if i == 0 {
            Ok(1.0)
        } else {
            Ok(0.5 + self.p_at(i)?)
        }
    }

    /// Step-odds ratio `U_i = (1/2 − p_i)/(1/2 + p_i) ∈ (0, 1]`.
    pub fn u_at(&self, i: u64) -> Result<f64, ModelError> {
        let p = self.p_at(i)?;
        Ok((0.5 - p) / (0.5 + p))
    }

    /// `log U_i`, evaluated as `log1p(−2 p_i) − log1p(2 p_i)`.
    ///
    /// Stable for small `p_i`, where the direct quotient loses the leading
    /// `−4 p_i` behavior to rounding.
    pub fn log_u_at(&self, i: u64) -> Result<f64, ModelError> {
        let p = self.p_at(i)?;
        Ok((-2.0 * p).ln_1p() - (2.0 * p).ln_1p())
    }

    /// Clamping index of the model (1 for constant and table families).
    pub fn i0(&self) -> u64 {
        self.i0
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Parse a model spec string:
    /// `lambda:K=1,B=3` | `power:alpha=0.5,B=1` | `logpow:alpha=1,B=2` |
    /// `const:p=0.1` | `table:@file.csv` (one p_i per line, 1-based).
    pub fn parse_spec(spec: &str) -> Result<Self, ModelError> {
        let (name, rest) = spec
            .split_once(':')
            .ok_or_else(|| ModelError::BadSpec(spec.into()))?;
        let kv = |rest: &str| -> Result<Vec<(String, String)>, ModelError> {
            rest.split(',')
                .map(|pair| {
                    pair.split_once('=')
                        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                        .ok_or_else(|| ModelError::BadSpec(spec.into()))
                })
                .collect()
        };
        let lookup = |pairs: &[(String, String)], key: &str| -> Result<f64, ModelError> {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .ok_or_else(|| ModelError::BadSpec(format!("{spec} (missing {key})")))?
                .1
                .parse::<f64>()
                .map_err(|_| ModelError::BadSpec(spec.into()))
        };
        let family = match name {
            "lambda" => {
                let pairs = kv(rest)?;
                let k = lookup(&pairs, "K")?;
                if k.fract() != 0.0 || k < 1.0 || k > u32::MAX as f64 {
                    return Err(ModelError::BadSpec(spec.into()));
                }
                Family::Lambda {
                    k: k as u32,
                    b: lookup(&pairs, "B")?,
                }
            }
            "power" => {
                let pairs = kv(rest)?;
                Family::Power {
                    alpha: lookup(&pairs, "alpha")?,
                    b: lookup(&pairs, "B")?,
                }
            }
            "logpow" => {
                let pairs = kv(rest)?;
                Family::LogPower {
                    alpha: lookup(&pairs, "alpha")?,
                    b: lookup(&pairs, "B")?,
                }
            }
            "const" => {
                let pairs = kv(rest)?;
                Family::Constant {
                    p: lookup(&pairs, "p")?,
                }
            }
            "table" => {
                let path = rest
                    .strip_prefix('@')
                    .ok_or_else(|| ModelError::BadSpec(spec.into()))?;
                let text = std::fs::read_to_string(path)
                    .map_err(|e| ModelError::BadSpec(format!("{spec}: {e}")))?;
                let values = text
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(|l| {
                        l.parse::<f64>()
                            .map_err(|_| ModelError::BadSpec(format!("{spec}: bad value `{l}`")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Family::Table { values }
            }
            _ => return Err(ModelError::BadSpec(spec.into())),
        };
        Self::new(family)
    }

    /// Canonical spec string for the model (inverse of [`Self::parse_spec`]
    /// up to formatting; table models render inline lengths only).
    pub fn spec_string(&self) -> String {
        match &self.family {
            Family::Lambda { k, b } => format!("lambda:K={k},B={b}"),
            Family::Power { alpha, b } => format!("power:alpha={alpha},B={b}"),
            Family::LogPower { alpha, b } => format!("logpow:alpha={alpha},B={b}"),
            Family::Constant { p } => format!("const:p={p}"),
            Family::Table { values } => format!("table:<{} values>", values.len()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn iterated_log_examples() {
        assert_eq!(iterated_log(0, 5.0).unwrap(), 5.0);
        assert_relative_eq!(
            iterated_log(1, std::f64::consts::E).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        let ee = std::f64::consts::E.exp();
        assert_relative_eq!(iterated_log(2, ee).unwrap(), 1.0, max_relative = 1e-12);
        assert!(matches!(
            iterated_log(2, 2.0),
            Err(ModelError::LogDomain { stage: 1, .. })
        ));
    }

    #[test]
    fn lambda_fn_examples() {
        assert_eq!(lambda_fn(0, 17.0).unwrap(), 1.0);
        assert_eq!(lambda_fn(1, 7.0).unwrap(), 7.0);
        assert_relative_eq!(
            lambda_fn(2, 100.0).unwrap(),
            100.0 * 100.0f64.ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn lambda_recursion_holds() {
        for k in 1..=4u32 {
            for &i in &[100.0f64, 1e4, 1e8] {
                let lhs = lambda_fn(k, i).unwrap();
                let rhs = lambda_fn(k - 1, i).unwrap() * iterated_log(k - 1, i).unwrap();
                assert_relative_eq!(lhs, rhs, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn big_lambda_examples() {
        assert_eq!(big_lambda(0, 10.0, 1.0).unwrap(), 0.0);
        assert_relative_eq!(big_lambda(1, 8.0, 2.0).unwrap(), 0.25, max_relative = 1e-15);
        let want = 0.01 + 2.0 / (100.0 * 100.0f64.ln());
        assert_relative_eq!(big_lambda(2, 100.0, 2.0).unwrap(), want, max_relative = 1e-14);
    }

    #[test]
    fn big_lambda_telescopes() {
        // Λ(K,i,1) = Σ_{k=1}^K 1/λ(k,i)
        for k_max in 1..=4u32 {
            let i = 1.0e6;
            let direct: f64 = (1..=k_max).map(|k| 1.0 / lambda_fn(k, i).unwrap()).sum();
            assert_relative_eq!(
                big_lambda(k_max, i, 1.0).unwrap(),
                direct,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn clamp_lambda_k1_b3() {
        // raw p_i = 3/(4i): p_1 = 0.75 >= 1/2, p_2 = 0.375 < 1/2 => i0 = 2.
        let m = StepModel::new(Family::Lambda { k: 1, b: 3.0 }).unwrap();
        assert_eq!(m.i0(), 2);
        assert_relative_eq!(m.p_at(1).unwrap(), 0.375, max_relative = 1e-15);
        assert_relative_eq!(m.p_at(2).unwrap(), 0.375, max_relative = 1e-15);
        assert_relative_eq!(m.p_at(10).unwrap(), 0.075, max_relative = 1e-15);
    }

    #[test]
    fn clamp_power_half() {
        let m = StepModel::new(Family::Power { alpha: 0.5, b: 1.0 }).unwrap();
        assert_eq!(m.i0(), 1);
        assert_relative_eq!(m.p_at(16).unwrap(), 0.0625, max_relative = 1e-15);
    }

    #[test]
    fn log_power_skips_undefined_sites() {
        // B/(4 ln i): infinite at i=1, 0.72 at i=2, 0.455 at i=3 => i0 = 3.
        let m = StepModel::new(Family::LogPower { alpha: 1.0, b: 2.0 }).unwrap();
        assert_eq!(m.i0(), 3);
        assert_relative_eq!(
            m.p_at(1).unwrap(),
            2.0 / (4.0 * 3.0f64.ln()),
            max_relative = 1e-15
        );
    }

    #[test]
    fn constant_and_table() {
        let m = StepModel::new(Family::Constant { p: 0.1 }).unwrap();
        assert_eq!(m.p_at(1).unwrap(), 0.1);
        assert_eq!(m.p_at(1_000_000).unwrap(), 0.1);
        assert!(StepModel::new(Family::Constant { p: 0.5 }).is_err());

        let t = StepModel::new(Family::Table {
            values: vec![0.1, 0.2, 0.3],
        })
        .unwrap();
        assert_eq!(t.p_at(2).unwrap(), 0.2);
        assert!(matches!(
            t.p_at(4),
            Err(ModelError::TableIndex { index: 4, len: 3 })
        ));
        assert!(StepModel::new(Family::Table {
            values: vec![0.1, 0.6],
        })
        .is_err());
    }

    #[test]
    fn u_examples() {
        let m = StepModel::new(Family::Constant { p: 0.1 }).unwrap();
        assert_relative_eq!(m.u_at(5).unwrap(), 2.0 / 3.0, max_relative = 1e-15);

        let z = StepModel::new(Family::Constant { p: 0.0 }).unwrap();
        assert_eq!(z.u_at(5).unwrap(), 1.0);
        assert_eq!(z.log_u_at(5).unwrap(), 0.0);
    }

    #[test]
    fn log_u_consistency() {
        // exp(log U) = U to a few ulps, and log U = −4p + O(p²).
        let t = StepModel::new(Family::Table {
            values: vec![1e-4, 0.25, 0.4999, 0.0, 0.1],
        })
        .unwrap();
        for i in 1..=5u64 {
            let u = t.u_at(i).unwrap();
            let lu = t.log_u_at(i).unwrap();
            assert_relative_eq!(lu.exp(), u, max_relative = 1e-15);
        }
        let p = 1e-4;
        let lu = t.log_u_at(1).unwrap();
        assert!((lu + 4.0 * p).abs() <= 1e-7);
    }

    #[test]
    fn spec_round_trip() {
        for spec in ["lambda:K=1,B=3", "power:alpha=0.5,B=1", "logpow:alpha=1,B=2", "const:p=0.1"] {
            let m = StepModel::parse_spec(spec).unwrap();
            let again = StepModel::parse_spec(&m.spec_string()).unwrap();
            assert_eq!(m, again);
        }
        assert!(StepModel::parse_spec("bogus:x=1").is_err());
        assert!(StepModel::parse_spec("lambda:K=0,B=3").is_err());
    }
}

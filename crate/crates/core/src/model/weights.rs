//! Weight schemes `a_{n,i}` and the coefficients `c_{n,i}` they come from.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::array::{expand, runs_len, Run};

pub type WeightRowFn = Arc<dyn Fn(usize, usize) -> Vec<Run<f64>> + Send + Sync>;

/// Where the coefficients `c_{n,i}` come from.
#[derive(Clone)]
pub enum CoefficientSource {
    Explicit(BTreeMap<usize, Vec<f64>>),
    /// `(n, k_n) -> run-encoded row`.
    Runs(WeightRowFn),
}

impl CoefficientSource {
    fn row(&self, n: usize, k: usize) -> Result<Vec<Run<f64>>> {
        match self {
            CoefficientSource::Explicit(map) => explicit_row(map, n, k),
            CoefficientSource::Runs(f) => checked_runs(f(n, k), n, k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizerFlavor {
    /// `A_n = sum_i |c_{n,i}|`, `a_{n,i} = |c_{n,i}| / A_n`.
    Sum,
    /// `A_n = sum_i c_{n,i}^2`, `a_{n,i} = c_{n,i}^2 / A_n`.
    SumOfSquares,
}

#[derive(Clone)]
pub enum WeightScheme {
    /// `a_{n,i} = 1/k_n` (Cesaro averaging).
    Uniform,
    Explicit(BTreeMap<usize, Vec<f64>>),
    Runs { label: String, rows: WeightRowFn },
    /// Weights derived from coefficients through a normalizer `A_n`.
    CNormalized { c: CoefficientSource, flavor: NormalizerFlavor },
}

impl fmt::Debug for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::Uniform => f.write_str("Uniform"),
            WeightScheme::Explicit(m) => write!(f, "Explicit({} rows)", m.len()),
            WeightScheme::Runs { label, .. } => write!(f, "Runs({label})"),
            WeightScheme::CNormalized { flavor, .. } => write!(f, "CNormalized({flavor:?})"),
        }
    }
}

fn explicit_row(map: &BTreeMap<usize, Vec<f64>>, n: usize, k: usize) -> Result<Vec<Run<f64>>> {
    let row = map.get(&n).ok_or_else(|| Error::Weights(format!("no weights given for row {n}")))?;
    if row.len() != k {
        return Err(Error::WeightLengthMismatch { n, weights: row.len(), cells: k });
    }
    for &w in row {
        if !w.is_finite() {
            return Err(Error::Weights(format!("non-finite weight in row {n}")));
        }
    }
    Ok(row.iter().map(|&w| Run::new(1, w)).collect())
}

fn checked_runs(runs: Vec<Run<f64>>, n: usize, k: usize) -> Result<Vec<Run<f64>>> {
    let len = runs_len(&runs);
    if len != k {
        return Err(Error::WeightLengthMismatch { n, weights: len, cells: k });
    }
    Ok(runs)
}

impl WeightScheme {
    pub fn runs(label: impl Into<String>, f: impl Fn(usize, usize) -> Vec<Run<f64>> + Send + Sync + 'static) -> Self {
        WeightScheme::Runs { label: label.into(), rows: Arc::new(f) }
    }

    pub fn c_normalized(flavor: NormalizerFlavor, f: impl Fn(usize, usize) -> Vec<Run<f64>> + Send + Sync + 'static) -> Self {
        WeightScheme::CNormalized { c: CoefficientSource::Runs(Arc::new(f)), flavor }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, WeightScheme::Uniform)
    }

    /// Nonnegative weights `a_{n,i}` of row `n` with `k_n = k` cells.
    pub fn row(&self, n: usize, k: usize) -> Result<Vec<Run<f64>>> {
        let raw = match self {
            WeightScheme::Uniform => return Ok(vec![Run::new(k, 1.0 / k as f64)]),
            WeightScheme::Explicit(map) => explicit_row(map, n, k)?,
            WeightScheme::Runs { rows, .. } => checked_runs(rows(n, k), n, k)?,
            WeightScheme::CNormalized { c, flavor } => {
                let c = c.row(n, k)?;
                let a = normalizer_of(&c, *flavor);
                if a == 0.0 {
                    return Err(Error::Weights(format!("coefficients of row {n} are all zero")));
                }
                c.into_iter()
                    .map(|r| {
                        let v = match flavor {
                            NormalizerFlavor::Sum => r.value.abs(),
                            NormalizerFlavor::SumOfSquares => r.value * r.value,
                        };
                        Run::new(r.len, v / a)
                    })
                    .collect()
            }
        };
        if let Some(bad) = raw.iter().find(|r| r.value < 0.0) {
            return Err(Error::Weights(format!("negative weight {} in row {n}", bad.value)));
        }
        Ok(raw)
    }

    /// Coefficients used in weighted partial sums `sum_i c_{n,i} X_{n,i}`.
    /// For plain weight schemes the weights themselves serve as coefficients.
    pub fn coefficients(&self, n: usize, k: usize) -> Result<Vec<Run<f64>>> {
        match self {
            WeightScheme::CNormalized { c, .. } => c.row(n, k),
            WeightScheme::Uniform => Ok(vec![Run::new(k, 1.0)]),
            other => other.row(n, k),
        }
    }

    /// Dense coefficient row.
    pub fn coefficient_vec(&self, n: usize, k: usize) -> Result<Vec<f64>> {
        Ok(expand(&self.coefficients(n, k)?))
    }

    /// `A_n` for coefficient-normalized schemes.
    pub fn normalizer(&self, n: usize, k: usize) -> Result<Option<f64>> {
        match self {
            WeightScheme::CNormalized { c, flavor } => Ok(Some(normalizer_of(&c.row(n, k)?, *flavor))),
            _ => Ok(None),
        }
    }

    /// `sum_i a_{n,i}`.
    pub fn row_weight_sum(&self, n: usize, k: usize) -> Result<f64> {
        Ok(self.row(n, k)?.iter().map(|r| r.len as f64 * r.value).sum())
    }
}

fn normalizer_of(c: &[Run<f64>], flavor: NormalizerFlavor) -> f64 {
    c.iter()
        .map(|r| {
            r.len as f64
                * match flavor {
                    NormalizerFlavor::Sum => r.value.abs(),
                    NormalizerFlavor::SumOfSquares => r.value * r.value,
                }
        })
        .sum()
}

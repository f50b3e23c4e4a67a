//! Row-wise arrays `{X_{n,i} : 1 <= i <= k_n, n >= 1}`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::dist::DistSpec;

/// Run-length encoded stretch of identical entries within a row.
#[derive(Debug, Clone, PartialEq)]
pub struct Run<T> {
    pub len: usize,
    pub value: T,
}

impl<T> Run<T> {
    pub fn new(len: usize, value: T) -> Self {
        Run { len, value }
    }
}

/// Total length of a run-encoded row.
pub fn runs_len<T>(runs: &[Run<T>]) -> usize {
    runs.iter().map(|r| r.len).sum()
}

/// Expands runs into one entry per cell.
pub fn expand<T: Clone>(runs: &[Run<T>]) -> Vec<T> {
    let mut out = Vec::with_capacity(runs_len(runs));
    for r in runs {
        out.extend(std::iter::repeat_n(r.value.clone(), r.len));
    }
    out
}

/// Triangular arrays: row `n` is given directly.
pub trait RowModel: Send + Sync {
    fn row_len(&self, n: usize) -> usize;
    fn row(&self, n: usize) -> Vec<Run<DistSpec>>;
    /// Number of rows when the array is finite.
    fn declared_rows(&self) -> Option<usize> {
        None
    }
    fn describe(&self) -> String;
}

/// Sequences `X_1, X_2, ...` viewed as arrays with `k_n = n`.
pub trait SequenceModel: Send + Sync {
    fn cell(&self, i: usize) -> DistSpec;
    fn declared_len(&self) -> Option<usize> {
        None
    }
    fn describe(&self) -> String;
}

#[derive(Clone)]
pub enum Layout {
    Triangular(Arc<dyn RowModel>),
    Sequence(Arc<dyn SequenceModel>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum RowDependence {
    #[default]
    Independent,
    /// Gaussian copula whose correlation matrix is tridiagonal with the
    /// given (nonpositive) neighbour correlation. Monotone transforms of
    /// negatively correlated Gaussians are negatively associated.
    GaussianNa { correlation: f64 },
}

#[derive(Clone)]
pub struct ArraySpec {
    pub layout: Layout,
    pub mean_zero: bool,
    pub row_dependence: RowDependence,
    pub label: String,
}

impl fmt::Debug for ArraySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let layout = match &self.layout {
            Layout::Triangular(m) => format!("triangular({})", m.describe()),
            Layout::Sequence(m) => format!("sequence({})", m.describe()),
        };
        f.debug_struct("ArraySpec")
            .field("label", &self.label)
            .field("layout", &layout)
            .field("mean_zero", &self.mean_zero)
            .field("row_dependence", &self.row_dependence)
            .finish()
    }
}

/// Row length rule for identically distributed arrays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowLength {
    /// `k_n = n`.
    Linear,
    /// `k_n = k` for all rows.
    Constant(usize),
}

struct IdenticalRows {
    dist: DistSpec,
    len: RowLength,
}

impl RowModel for IdenticalRows {
    fn row_len(&self, n: usize) -> usize {
        match self.len {
            RowLength::Linear => n,
            RowLength::Constant(k) => k,
        }
    }
    fn row(&self, n: usize) -> Vec<Run<DistSpec>> {
        vec![Run::new(self.row_len(n), self.dist.clone())]
    }
    fn describe(&self) -> String {
        format!("identical {:?}", self.dist)
    }
}

struct ExplicitRows {
    rows: Vec<Vec<Run<DistSpec>>>,
}

impl RowModel for ExplicitRows {
    fn row_len(&self, n: usize) -> usize {
        runs_len(&self.rows[n - 1])
    }
    fn row(&self, n: usize) -> Vec<Run<DistSpec>> {
        self.rows[n - 1].clone()
    }
    fn declared_rows(&self) -> Option<usize> {
        Some(self.rows.len())
    }
    fn describe(&self) -> String {
        format!("{} explicit rows", self.rows.len())
    }
}

type RowFn = Arc<dyn Fn(usize) -> Vec<Run<DistSpec>> + Send + Sync>;

struct FnRows {
    label: String,
    f: RowFn,
}

impl RowModel for FnRows {
    fn row_len(&self, n: usize) -> usize {
        runs_len(&(self.f)(n))
    }
    fn row(&self, n: usize) -> Vec<Run<DistSpec>> {
        (self.f)(n)
    }
    fn describe(&self) -> String {
        self.label.clone()
    }
}

type CellFn = Arc<dyn Fn(usize) -> DistSpec + Send + Sync>;

struct FnSequence {
    label: String,
    f: CellFn,
}

impl SequenceModel for FnSequence {
    fn cell(&self, i: usize) -> DistSpec {
        (self.f)(i)
    }
    fn describe(&self) -> String {
        self.label.clone()
    }
}

struct ExplicitSequence {
    cells: Vec<DistSpec>,
}

impl SequenceModel for ExplicitSequence {
    fn cell(&self, i: usize) -> DistSpec {
        self.cells[i - 1].clone()
    }
    fn declared_len(&self) -> Option<usize> {
        Some(self.cells.len())
    }
    fn describe(&self) -> String {
        format!("explicit sequence of {}", self.cells.len())
    }
}

/// Merges consecutive equal laws into runs.
pub fn compress(cells: impl IntoIterator<Item = DistSpec>) -> Vec<Run<DistSpec>> {
    let mut out: Vec<Run<DistSpec>> = Vec::new();
    for d in cells {
        match out.last_mut() {
            Some(r) if r.value.same_as(&d) => r.len += 1,
            _ => out.push(Run::new(1, d)),
        }
    }
    out
}

impl ArraySpec {
    fn with_layout(layout: Layout, label: impl Into<String>) -> Self {
        ArraySpec { layout, mean_zero: true, row_dependence: RowDependence::Independent, label: label.into() }
    }

    /// Every cell has law `dist`.
    pub fn identical(dist: DistSpec, len: RowLength) -> Result<Self> {
        dist.validate()?;
        let mean_zero = dist.is_mean_zero();
        let label = format!("identical {dist:?}");
        let mut a = Self::with_layout(Layout::Triangular(Arc::new(IdenticalRows { dist, len })), label);
        a.mean_zero = mean_zero;
        Ok(a)
    }

    /// Finite array listing rows `1..=N` cell by cell.
    pub fn explicit(rows: Vec<Vec<DistSpec>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Spec("explicit array needs at least one row".into()));
        }
        for (k, r) in rows.iter().enumerate() {
            if r.is_empty() {
                return Err(Error::Spec(format!("row {} is empty", k + 1)));
            }
            for d in r {
                d.validate()?;
            }
        }
        let mean_zero = rows.iter().flatten().all(DistSpec::is_mean_zero);
        let rows = rows.into_iter().map(compress).collect();
        let mut a = Self::with_layout(Layout::Triangular(Arc::new(ExplicitRows { rows })), "explicit");
        a.mean_zero = mean_zero;
        Ok(a)
    }

    /// Finite sequence `X_1..X_N`.
    pub fn explicit_sequence(cells: Vec<DistSpec>) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::Spec("explicit sequence needs at least one cell".into()));
        }
        for d in &cells {
            d.validate()?;
        }
        let mean_zero = cells.iter().all(DistSpec::is_mean_zero);
        let mut a = Self::with_layout(Layout::Sequence(Arc::new(ExplicitSequence { cells })), "explicit sequence");
        a.mean_zero = mean_zero;
        Ok(a)
    }

    /// Rows generated by a closure returning run-encoded laws.
    pub fn from_rows(label: impl Into<String>, f: impl Fn(usize) -> Vec<Run<DistSpec>> + Send + Sync + 'static) -> Self {
        let label = label.into();
        Self::with_layout(Layout::Triangular(Arc::new(FnRows { label: label.clone(), f: Arc::new(f) })), label)
    }

    /// Sequence generated by a closure `i -> law of X_i`.
    pub fn from_sequence(label: impl Into<String>, f: impl Fn(usize) -> DistSpec + Send + Sync + 'static) -> Self {
        let label = label.into();
        Self::with_layout(Layout::Sequence(Arc::new(FnSequence { label: label.clone(), f: Arc::new(f) })), label)
    }

    pub fn with_dependence(mut self, dep: RowDependence) -> Result<Self> {
        if let RowDependence::GaussianNa { correlation } = dep {
            if !(-0.5..=0.0).contains(&correlation) {
                return Err(Error::UnsupportedDependence(format!(
                    "neighbour correlation {correlation} must lie in [-0.5, 0] for a valid tridiagonal Gaussian copula"
                )));
            }
        }
        self.row_dependence = dep;
        Ok(self)
    }

    pub fn with_mean_zero(mut self, flag: bool) -> Self {
        self.mean_zero = flag;
        self
    }

    pub fn is_sequence(&self) -> bool {
        matches!(self.layout, Layout::Sequence(_))
    }

    /// Number of rows for finite arrays.
    pub fn declared_rows(&self) -> Option<usize> {
        match &self.layout {
            Layout::Triangular(m) => m.declared_rows(),
            Layout::Sequence(m) => m.declared_len(),
        }
    }

    fn check_row(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::ZeroRow);
        }
        if let Some(max) = self.declared_rows() {
            if n > max {
                return Err(Error::RowOutOfRange { n, max });
            }
        }
        Ok(())
    }

    pub fn row_len(&self, n: usize) -> Result<usize> {
        self.check_row(n)?;
        Ok(match &self.layout {
            Layout::Triangular(m) => m.row_len(n),
            Layout::Sequence(_) => n,
        })
    }

    pub fn row(&self, n: usize) -> Result<Vec<Run<DistSpec>>> {
        self.check_row(n)?;
        Ok(match &self.layout {
            Layout::Triangular(m) => m.row(n),
            Layout::Sequence(m) => compress((1..=n).map(|i| m.cell(i))),
        })
    }

    /// Law of `X_{n,i}` (1-based indices).
    pub fn cell(&self, n: usize, i: usize) -> Result<DistSpec> {
        let k = self.row_len(n)?;
        if i == 0 || i > k {
            return Err(Error::Spec(format!("cell index {i} outside row {n} of length {k}")));
        }
        Ok(match &self.layout {
            Layout::Sequence(m) => m.cell(i),
            Layout::Triangular(m) => {
                let mut left = i;
                for r in m.row(n) {
                    if left <= r.len {
                        return Ok(r.value);
                    }
                    left -= r.len;
                }
                unreachable!("index checked against row length")
            }
        })
    }

    /// Law of `X_i` for sequences.
    pub fn sequence_cell(&self, i: usize) -> Option<DistSpec> {
        match &self.layout {
            Layout::Sequence(m) => Some(m.cell(i)),
            Layout::Triangular(_) => None,
        }
    }

    /// Checks the declared mean-zero flag against each cell in rows `1..=n_max`.
    pub fn validate_rows(&self, n_max: usize) -> Result<()> {
        let n_max = self.declared_rows().map_or(n_max, |d| d.min(n_max));
        for n in 1..=n_max {
            for r in self.row(n)? {
                r.value.validate()?;
                if self.mean_zero && !r.value.is_mean_zero() {
                    return Err(Error::InvalidDist(format!(
                        "array `{}` is flagged mean-zero but row {n} has law {:?}",
                        self.label, r.value
                    )));
                }
            }
        }
        Ok(())
    }

    /// One realization of row `n` drawn from `rng`.
    pub fn sample_row(&self, n: usize, rng: &mut impl RngCore) -> Result<Vec<f64>> {
        self.sample_runs(n, &self.row(n)?, rng)
    }

    /// One realization of a row whose laws were fetched beforehand.
    pub fn sample_runs(&self, n: usize, runs: &[Run<DistSpec>], rng: &mut impl RngCore) -> Result<Vec<f64>> {
        let k = runs_len(runs);
        let mut out = Vec::with_capacity(k);
        match self.row_dependence {
            RowDependence::Independent => {
                for r in runs {
                    if !r.value.can_sample() {
                        return Err(Error::MissingQuantile { n, i: out.len() + 1 });
                    }
                    for _ in 0..r.len {
                        out.push(r.value.quantile(open_unit(rng))?);
                    }
                }
            }
            RowDependence::GaussianNa { correlation } => {
                let z = ma1_gaussians(k, correlation, rng);
                let mut idx = 0;
                for r in runs {
                    if !r.value.can_sample() {
                        return Err(Error::MissingQuantile { n, i: idx + 1 });
                    }
                    for _ in 0..r.len {
                        let u = std_normal_cdf(z[idx]).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
                        out.push(r.value.quantile(u)?);
                        idx += 1;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Uniform draw from the open interval (0, 1).
pub fn open_unit(rng: &mut impl RngCore) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard Gaussians with correlation `rho` between neighbours and 0
/// otherwise, via the moving average `(e_i - theta e_{i-1}) / sqrt(1 + theta^2)`.
pub fn ma1_gaussians(k: usize, rho: f64, rng: &mut impl RngCore) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let theta = if rho == 0.0 { 0.0 } else { (-1.0 + (1.0 - 4.0 * rho * rho).max(0.0).sqrt()) / (2.0 * rho) };
    let scale = 1.0 / (1.0 + theta * theta).sqrt();
    let mut prev: f64 = StandardNormal.sample(rng);
    (0..k)
        .map(|_| {
            let e: f64 = StandardNormal.sample(rng);
            let z = (e - theta * prev) * scale;
            prev = e;
            z
        })
        .collect()
}

/// Convenience: rows given as an ordered map from row index to laws.
pub fn rows_from_map(map: BTreeMap<usize, Vec<DistSpec>>) -> Result<Vec<Vec<DistSpec>>> {
    let mut out = Vec::with_capacity(map.len());
    for (k, (n, row)) in map.into_iter().enumerate() {
        if n != k + 1 {
            return Err(Error::Spec(format!("rows must be numbered 1..N without gaps; found row {n} at position {}", k + 1)));
        }
        out.push(row);
    }
    Ok(out)
}

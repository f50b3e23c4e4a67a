//! Domination functionals `G`, `G^`, the dominating law built from them,
//! and the truncated moment inequalities that follow from domination.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::gate::{self, Decision, Verdict};
use crate::model::scan::{c0, scan_rows, weighted_row, ScanConfig};
use crate::model::tail::TailFunction;
use crate::model::{ArraySpec, WeightScheme};
use crate::moments::{lower_part, upper_part, MomentFunction};

/// Largest exponent of the default grid `x = 2^j`.
pub const GRID_MAX_EXP: i32 = 60;
/// Atom budget for materializing `G` as an exact step function.
pub const MATERIALIZE_BUDGET: usize = 4_000_000;
/// Tolerance of the identity `G^(x) = C0 P(X > x)`.
pub const IDENTITY_TOL: f64 = 1e-9;

/// `2^0, 2^1, ..., 2^j_max`.
pub fn dyadic_grid(j_max: i32) -> Vec<f64> {
    (0..=j_max).map(|j| 2f64.powi(j)).collect()
}

/// `sup_n sum_i a_{n,i} P(|X_{n,i}| > x)` over the scan range.
pub fn weighted_g(arr: &ArraySpec, w: &WeightScheme, x: f64, cfg: &ScanConfig) -> Result<f64> {
    Ok(profile(arr, w, &[x], cfg)?.values[0])
}

/// `sup_n (1/k_n) sum_i P(|X_{n,i}| > x)` over the scan range.
pub fn cesaro_g(arr: &ArraySpec, x: f64, cfg: &ScanConfig) -> Result<f64> {
    if x < 0.0 {
        return Ok(1.0);
    }
    weighted_g(arr, &WeightScheme::Uniform, x, cfg)
}

/// Weighted tail sums evaluated on a grid in one pass over the rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub scan_n: usize,
    /// Largest magnitude among positively weighted scanned cells; beyond it
    /// the truncated scan reads 0 regardless of the full array.
    pub resolved_to: f64,
}

pub fn profile(arr: &ArraySpec, w: &WeightScheme, grid: &[f64], cfg: &ScanConfig) -> Result<Profile> {
    let scan = scan_rows(arr, w, cfg, grid.len(), |d| grid.iter().map(|&x| d.tail_at(x)).collect())?;
    Ok(Profile { grid: grid.to_vec(), values: scan.sup(), scan_n: scan.n_rows(), resolved_to: scan.resolved_to })
}

/// A domination functional `x -> G^(x)` together with its normalizing
/// constant, either scanned from an array or given in closed form.
#[derive(Clone)]
pub struct Functional {
    pub label: String,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub c0: f64,
    pub resolved_to: f64,
    pub scan_n: Option<usize>,
    /// Exact normalized tail `G^/C0` as a step function, when available.
    step: Option<TailFunction>,
    /// `lim_{x -> inf} G^(x)`, when known exactly.
    pub limit: Option<f64>,
    /// Jump locations of a closed form, used by quadrature.
    kinks: Vec<f64>,
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Functional")
            .field("label", &self.label)
            .field("c0", &self.c0)
            .field("resolved_to", &self.resolved_to)
            .field("scan_n", &self.scan_n)
            .field("materialized", &self.step.is_some())
            .field("limit", &self.limit)
            .finish()
    }
}

impl Functional {
    /// Closed form `x -> G^(x)` valid for every `x`.
    pub fn closed_form(label: impl Into<String>, c0: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Functional {
            label: label.into(),
            eval: Arc::new(f),
            c0,
            resolved_to: f64::INFINITY,
            scan_n: None,
            step: None,
            limit: None,
            kinks: Vec::new(),
        }
    }

    pub fn with_kinks(mut self, kinks: Vec<f64>) -> Self {
        self.kinks = kinks;
        self
    }

    pub fn with_limit(mut self, limit: f64) -> Self {
        self.limit = Some(limit);
        self
    }

    /// Attaches an exact step representation of `G^/C0`.
    pub fn with_step(mut self, step: TailFunction) -> Self {
        self.step = Some(step);
        self
    }

    /// Scans rows `n <= N_sup`. Atomic arrays are materialized as an exact
    /// step function; others are evaluated by rescanning per point.
    pub fn scanned(arr: &ArraySpec, w: &WeightScheme, cfg: &ScanConfig) -> Result<Self> {
        let c0r = c0(arr, w, cfg)?;
        let (resolved, step) = match materialize(arr, w, cfg)? {
            Some(m) => {
                let values: Vec<f64> = m.values.iter().map(|v| (v / c0r.c0).min(1.0)).collect();
                (m.resolved_to, Some(TailFunction::step(m.breaks, values)?))
            }
            None => (profile(arr, w, &[0.0], cfg)?.resolved_to, None),
        };
        let eval: Arc<dyn Fn(f64) -> f64 + Send + Sync> = match &step {
            Some(t) => {
                let t = t.clone();
                let c = c0r.c0;
                Arc::new(move |x| if x < 0.0 { c } else { c * t.eval(x) })
            }
            None => {
                let (arr, w, cfg) = (arr.clone(), w.clone(), *cfg);
                Arc::new(move |x| weighted_g(&arr, &w, x, &cfg).unwrap_or(f64::NAN))
            }
        };
        Ok(Functional {
            label: format!("scan of {} (n <= {})", arr.label, c0r.scan_n),
            eval,
            c0: c0r.c0,
            resolved_to: resolved,
            scan_n: Some(c0r.scan_n),
            step,
            limit: None,
            kinks: Vec::new(),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn is_materialized(&self) -> bool {
        self.step.is_some()
    }

    /// `x -> G^(x)/C0` as a tail function, resolved up to `resolved_to`.
    pub fn normalized_tail(&self) -> TailFunction {
        match &self.step {
            Some(t) => t.clone().with_resolved_to(self.resolved_to),
            None => {
                let f = self.eval.clone();
                let c = self.c0;
                TailFunction::analytic(Arc::new(move |x| (f(x) / c).clamp(0.0, 1.0)), self.kinks.clone(), None)
                    .with_resolved_to(self.resolved_to)
            }
        }
    }
}

struct Materialized {
    breaks: Vec<f64>,
    values: Vec<f64>,
    resolved_to: f64,
}

/// Lazy range-max segment tree over breakpoint intervals.
struct MaxTree {
    size: usize,
    tag: Vec<f64>,
}

impl MaxTree {
    fn new(len: usize) -> Self {
        let size = len.next_power_of_two().max(1);
        MaxTree { size, tag: vec![0.0; 2 * size] }
    }

    fn chmax(&mut self, lo: usize, hi: usize, v: f64) {
        let (mut l, mut r) = (lo + self.size, hi + self.size);
        while l < r {
            if l & 1 == 1 {
                self.tag[l] = self.tag[l].max(v);
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                self.tag[r] = self.tag[r].max(v);
            }
            l >>= 1;
            r >>= 1;
        }
    }

    fn leaves(mut self, len: usize) -> Vec<f64> {
        for i in 1..self.size {
            let t = self.tag[i];
            self.tag[2 * i] = self.tag[2 * i].max(t);
            self.tag[2 * i + 1] = self.tag[2 * i + 1].max(t);
        }
        self.tag[self.size..self.size + len].to_vec()
    }
}

/// Per-row weighted atoms `(magnitude, sum of a * mass)`, sorted.
fn row_atoms(arr: &ArraySpec, w: &WeightScheme, n: usize) -> Result<Option<(Vec<(f64, f64)>, f64)>> {
    let mut out = Vec::new();
    let mut resolved: f64 = 0.0;
    for r in weighted_row(arr, w, n)? {
        if r.weight <= 0.0 {
            continue;
        }
        let Some(atoms) = r.dist.atoms() else { return Ok(None) };
        resolved = resolved.max(r.dist.max_magnitude());
        let scale = r.weight * r.len as f64;
        out.extend(atoms.into_iter().map(|(m, p)| (m, p * scale)));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(out.len());
    for (m, p) in out {
        match merged.last_mut() {
            Some(last) if last.0 == m => last.1 += p,
            _ => merged.push((m, p)),
        }
    }
    Ok(Some((merged, resolved)))
}

fn materialize(arr: &ArraySpec, w: &WeightScheme, cfg: &ScanConfig) -> Result<Option<Materialized>> {
    let n_rows = cfg.rows_for(arr);
    const CHUNK: usize = 512;
    let mut rows: Vec<Vec<(f64, f64)>> = Vec::with_capacity(n_rows);
    let mut row_max: Vec<f64> = Vec::with_capacity(n_rows);
    let mut budget = 0usize;
    let mut start = 1;
    while start <= n_rows {
        let end = (start + CHUNK - 1).min(n_rows);
        let chunk = map_indexed(cfg.exec, end - start + 1, |k| row_atoms(arr, w, start + k));
        for r in chunk {
            let Some((atoms, m)) = r? else { return Ok(None) };
            budget += atoms.len();
            if budget > MATERIALIZE_BUDGET {
                return Ok(None);
            }
            row_max.push(m);
            rows.push(atoms);
        }
        start = end + 1;
    }
    let mut breaks: Vec<f64> = rows.iter().flatten().map(|a| a.0).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let mut tree = MaxTree::new(breaks.len());
    for atoms in &rows {
        // Suffix sums: weighted tail strictly above each atom.
        let mut suffix = vec![0.0; atoms.len() + 1];
        for k in (0..atoms.len()).rev() {
            suffix[k] = suffix[k + 1] + atoms[k].1;
        }
        let mut lo = 0;
        for (k, (m, _)) in atoms.iter().enumerate() {
            let idx = breaks.partition_point(|b| b < m);
            tree.chmax(lo, idx, suffix[k]);
            lo = idx;
        }
    }
    let values = tree.leaves(breaks.len());
    Ok(Some(Materialized { breaks, values, resolved_to: crate::model::scan::resolution(&row_max) }))
}

/// Outcome of building the dominating law `P(X > x) = G^(x) / C0`.
#[derive(Debug, Clone, Serialize)]
pub struct DominationReport {
    pub source: String,
    pub grid: Vec<f64>,
    /// `G^(x)` before normalization.
    pub values: Vec<f64>,
    pub valid: bool,
    pub c0: f64,
    pub scan_n: Option<usize>,
    pub resolved_to: f64,
    pub limit_at_infinity: f64,
    pub decision: Decision,
    #[serde(skip)]
    pub cdf: Option<TailFunction>,
}

impl DominationReport {
    /// `F(x) = 1 - G^(x)/C0` of the constructed `X`, when valid.
    pub fn cdf_at(&self, x: f64) -> Option<f64> {
        self.cdf.as_ref().map(|t| 1.0 - t.eval(x))
    }

    /// Tail `P(|X| > x)` of the constructed `X`, when valid.
    pub fn tail(&self) -> Option<&TailFunction> {
        self.cdf.as_ref()
    }
}

/// Evaluates the functional on `grid` and decides whether it vanishes at
/// infinity, i.e. whether `1 - G^/C0` is a distribution function.
pub fn report_from_functional(f: &Functional, grid: &[f64]) -> DominationReport {
    let values: Vec<f64> = grid.iter().map(|&x| f.eval(x)).collect();
    let decision = match f.limit {
        Some(0.0) => Decision { verdict: Verdict::Holds, rule: "closed form: limit is 0".into(), rate: None },
        Some(l) => Decision { verdict: Verdict::Fails, rule: format!("closed form: limit is {l}"), rate: None },
        None => {
            let (g, v): (Vec<f64>, Vec<f64>) =
                grid.iter().zip(&values).filter(|(x, _)| **x < f.resolved_to).map(|(x, v)| (*x, *v)).unzip();
            gate::decay(&g, &v)
        }
    };
    let last_resolved = grid
        .iter()
        .zip(&values)
        .rfind(|(x, _)| **x < f.resolved_to)
        .map_or(f64::NAN, |(_, v)| *v);
    let valid = decision.verdict == Verdict::Holds;
    DominationReport {
        source: f.label.clone(),
        grid: grid.to_vec(),
        values,
        valid,
        c0: f.c0,
        scan_n: f.scan_n,
        resolved_to: f.resolved_to,
        limit_at_infinity: f.limit.unwrap_or(last_resolved),
        decision,
        cdf: valid.then(|| f.normalized_tail()),
    }
}

/// Builds `F(x) = 1 - G^(x)/C0` from a row scan on the grid `2^0..2^60`.
pub fn construct_dominating_cdf(arr: &ArraySpec, w: &WeightScheme, cfg: &ScanConfig) -> Result<DominationReport> {
    let f = Functional::scanned(arr, w, cfg)?;
    Ok(report_from_functional(&f, &dyadic_grid(GRID_MAX_EXP)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferReport {
    /// `G^(x) <= C P(|Y| > x)` on the grid.
    pub hypothesis_holds: bool,
    pub violation: Option<Violation>,
    pub constructed: Option<DominationReport>,
    /// `max |G^(x) - C0 P(X > x)|` over the grid, with `G^` rescanned.
    pub identity_max_error: Option<f64>,
    /// `max |P(X > x) - P(|Y| > x)|` over the grid.
    pub max_diff_from_y: Option<f64>,
}

impl TransferReport {
    pub fn transfer_holds(&self) -> bool {
        self.hypothesis_holds
            && self.constructed.as_ref().is_some_and(|c| c.valid)
            && self.identity_max_error.is_some_and(|e| e <= IDENTITY_TOL)
    }
}

/// Checks `G^(x) <= C P(|Y| > x)` on the grid; when it holds, constructs
/// `X` and verifies `G^(x) = C0 P(X > x)` pointwise.
pub fn check_equivalence_transfer(
    arr: &ArraySpec,
    w: &WeightScheme,
    y: &TailFunction,
    c: f64,
    cfg: &ScanConfig,
) -> Result<TransferReport> {
    if !(c > 0.0) {
        return Err(Error::Spec(format!("domination constant must be positive, got {c}")));
    }
    let grid = dyadic_grid(GRID_MAX_EXP);
    let direct = profile(arr, w, &grid, cfg)?;
    let violation = grid.iter().zip(&direct.values).find_map(|(&x, &g)| {
        let rhs = c * y.eval(x);
        (g > rhs * (1.0 + 1e-12) + 1e-15).then_some(Violation { x, lhs: g, rhs })
    });
    if violation.is_some() {
        return Ok(TransferReport {
            hypothesis_holds: false,
            violation,
            constructed: None,
            identity_max_error: None,
            max_diff_from_y: None,
        });
    }
    let f = Functional::scanned(arr, w, cfg)?;
    let report = report_from_functional(&f, &grid);
    let (identity, diff) = match report.tail() {
        Some(t) => {
            let id = grid
                .iter()
                .zip(&direct.values)
                .map(|(&x, &g)| (g - f.c0 * t.eval(x)).abs())
                .fold(0.0, f64::max);
            let d = grid.iter().map(|&x| (t.eval(x) - y.eval(x)).abs()).fold(0.0, f64::max);
            (Some(id), Some(d))
        }
        None => (None, None),
    };
    Ok(TransferReport {
        hypothesis_holds: true,
        violation: None,
        constructed: Some(report),
        identity_max_error: identity,
        max_diff_from_y: diff,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Bound {
    /// Either side may come from quadrature, so equality is judged to
    /// its tolerance.
    fn new(lhs: f64, rhs: f64) -> Self {
        let holds = lhs <= rhs * (1.0 + 1e-12) + crate::moments::QUAD_TOL;
        Bound { lhs, rhs, holds }
    }
}

/// Truncated moment inequalities implied by Cesaro domination by `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedBounds {
    pub r: f64,
    pub x: f64,
    /// `sup_n (1/k_n) sum E|X|^r 1(|X| <= x)` against
    /// `E|Y|^r 1(|Y| <= x) + x^r P(|Y| > x)`.
    pub below: Bound,
    /// `sup_n (1/k_n) sum E|X|^r 1(|X| > x)` against `E|Y|^r 1(|Y| > x)`.
    pub above: Bound,
}

/// Verifies Cesaro domination by `y` on the dyadic grid (and at `x`).
pub fn cesaro_precheck(arr: &ArraySpec, y: &TailFunction, extra: &[f64], cfg: &ScanConfig) -> Result<()> {
    if y.mass_at_infinity().is_some_and(|m| m > 0.0) {
        return Err(Error::InvalidDist("dominating variable puts mass at infinity".into()));
    }
    let mut grid = dyadic_grid(GRID_MAX_EXP);
    grid.extend_from_slice(extra);
    grid.push(0.0);
    let p = profile(arr, &WeightScheme::Uniform, &grid, cfg)?;
    for (&x, &g) in grid.iter().zip(&p.values) {
        let bound = y.eval(x);
        if g > bound * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::DominationPrecheck { x, lhs: g, bound });
        }
    }
    Ok(())
}

pub fn truncated_moment_bounds(arr: &ArraySpec, y: &TailFunction, r: f64, x: f64, cfg: &ScanConfig) -> Result<TruncatedBounds> {
    cesaro_precheck(arr, y, &[x], cfg)?;
    let h = MomentFunction::power(r);
    let scan = scan_rows(arr, &WeightScheme::Uniform, cfg, 2, |d| {
        let t = d.tail();
        vec![lower_part(&t, &h, x), upper_part(&t, &h, x).or_infinite()]
    })?;
    let sup = scan.sup();
    let y_lower = lower_part(y, &h, x);
    let y_upper = upper_part(y, &h, x).or_infinite();
    Ok(TruncatedBounds {
        r,
        x,
        below: Bound::new(sup[0], y_lower + x.powf(r) * y.eval(x)),
        above: Bound::new(sup[1], y_upper),
    })
}

//! Row scans: per-row weighted sums `sum_i a_{n,i} f(X_{n,i})` over
//! `n <= N_sup`, plus the derived constant `C0`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::model::array::{runs_len, ArraySpec, Layout};
use crate::model::dist::{DistKey, DistSpec};
use crate::model::weights::WeightScheme;

pub const DEFAULT_N_SUP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Largest row index included in suprema over `n`.
    pub n_sup: usize,
    #[serde(default)]
    pub exec: Execution,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { n_sup: DEFAULT_N_SUP, exec: Execution::default() }
    }
}

impl ScanConfig {
    pub fn with_n_sup(n_sup: usize) -> Self {
        ScanConfig { n_sup, ..Default::default() }
    }

    /// Rows actually scanned for `arr`.
    pub fn rows_for(&self, arr: &ArraySpec) -> usize {
        arr.declared_rows().map_or(self.n_sup, |d| d.min(self.n_sup))
    }
}

/// A stretch of `len` cells sharing law `dist` and per-cell weight `weight`.
#[derive(Debug, Clone)]
pub struct WeightedRun {
    pub dist: DistSpec,
    pub weight: f64,
    pub len: usize,
}

/// Row `n` with law runs and weight runs merged.
pub fn weighted_row(arr: &ArraySpec, w: &WeightScheme, n: usize) -> Result<Vec<WeightedRun>> {
    let dists = arr.row(n)?;
    let k = runs_len(&dists);
    let weights = w.row(n, k)?;
    let mut out = Vec::with_capacity(dists.len().max(weights.len()));
    let (mut di, mut wi) = (0, 0);
    let (mut dleft, mut wleft) = (dists[0].len, weights.first().map_or(0, |r| r.len));
    while di < dists.len() && wi < weights.len() {
        let take = dleft.min(wleft);
        if take > 0 {
            out.push(WeightedRun { dist: dists[di].value.clone(), weight: weights[wi].value, len: take });
        }
        dleft -= take;
        wleft -= take;
        if dleft == 0 {
            di += 1;
            dleft = dists.get(di).map_or(0, |r| r.len);
        }
        if wleft == 0 {
            wi += 1;
            wleft = weights.get(wi).map_or(0, |r| r.len);
        }
    }
    Ok(out)
}

/// Per-row results of a scan.
#[derive(Debug, Clone)]
pub struct RowScan {
    /// `rows[n-1][d]` = `sum_i a_{n,i} f_d(X_{n,i})`.
    pub rows: Vec<Vec<f64>>,
    /// Largest `|X|` magnitude carried by a positively weighted cell, or
    /// infinity when magnitudes stop growing over the second half of the
    /// scan (the array then looks bounded and the scan misses nothing).
    pub resolved_to: f64,
}

impl RowScan {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// Supremum over scanned rows, per component.
    pub fn sup(&self) -> Vec<f64> {
        let dim = self.rows.first().map_or(0, Vec::len);
        let mut out = vec![f64::NEG_INFINITY; dim];
        for r in &self.rows {
            for (o, v) in out.iter_mut().zip(r) {
                *o = o.max(*v);
            }
        }
        out
    }
}

type Memo = Mutex<HashMap<DistKey, Arc<Vec<f64>>>>;

fn memo_eval<F>(memo: &Memo, d: &DistSpec, f: &F) -> Arc<Vec<f64>>
where
    F: Fn(&DistSpec) -> Vec<f64>,
{
    let Some(key) = d.key() else { return Arc::new(f(d)) };
    if let Some(v) = memo.lock().expect("memo lock").get(&key) {
        return v.clone();
    }
    let v = Arc::new(f(d));
    memo.lock().expect("memo lock").insert(key, v.clone());
    v
}

/// Computes `sum_i a_{n,i} f(X_{n,i})` (vector-valued, `dim` components)
/// for every scanned row. `f` is evaluated once per distinct built-in law.
pub fn scan_rows<F>(arr: &ArraySpec, w: &WeightScheme, cfg: &ScanConfig, dim: usize, f: F) -> Result<RowScan>
where
    F: Fn(&DistSpec) -> Vec<f64> + Sync + Send,
{
    let n_rows = cfg.rows_for(arr);
    if n_rows == 0 {
        return Err(Error::Plan("scan range is empty".into()));
    }
    let memo: Memo = Mutex::new(HashMap::new());

    // Sequences under Cesaro weights: row n is the running mean of cells 1..=n.
    if let (Layout::Sequence(seq), true) = (&arr.layout, w.is_uniform()) {
        let mut acc = vec![0.0; dim];
        let mut rows = Vec::with_capacity(n_rows);
        let mut resolved: f64 = 0.0;
        let mut row_max = Vec::with_capacity(n_rows);
        for n in 1..=n_rows {
            let d = seq.cell(n);
            resolved = resolved.max(d.max_magnitude());
            row_max.push(resolved);
            let v = memo_eval(&memo, &d, &f);
            for (a, x) in acc.iter_mut().zip(v.iter()) {
                *a += x;
            }
            rows.push(acc.iter().map(|a| a / n as f64).collect());
        }
        return Ok(RowScan { rows, resolved_to: resolution(&row_max) });
    }

    let per_row: Vec<Result<(Vec<f64>, f64)>> = map_indexed(cfg.exec, n_rows, |idx| {
        let runs = weighted_row(arr, w, idx + 1)?;
        let mut acc = vec![0.0; dim];
        let mut resolved: f64 = 0.0;
        for r in &runs {
            if r.weight <= 0.0 {
                continue;
            }
            resolved = resolved.max(r.dist.max_magnitude());
            let v = memo_eval(&memo, &r.dist, &f);
            let scale = r.weight * r.len as f64;
            for (a, x) in acc.iter_mut().zip(v.iter()) {
                *a += scale * x;
            }
        }
        Ok((acc, resolved))
    });
    let mut rows = Vec::with_capacity(n_rows);
    let mut row_max = Vec::with_capacity(n_rows);
    for r in per_row {
        let (v, m) = r?;
        rows.push(v);
        row_max.push(m);
    }
    Ok(RowScan { rows, resolved_to: resolution(&row_max) })
}

/// Resolved range from per-row maximal magnitudes: infinite when the
/// second half of the scan adds nothing beyond the first half.
pub fn resolution(row_max: &[f64]) -> f64 {
    let half = row_max.len() / 2;
    let first = row_max[..half].iter().copied().fold(0.0, f64::max);
    let all = row_max[half..].iter().copied().fold(first, f64::max);
    if half >= 1 && all <= first {
        f64::INFINITY
    } else {
        all
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct C0Report {
    pub c0: f64,
    pub argmax_n: usize,
    pub scan_n: usize,
}

/// `sum_i a_{n,i}` for row `n`.
pub fn row_weight_sum(arr: &ArraySpec, w: &WeightScheme, n: usize) -> Result<f64> {
    w.row_weight_sum(n, arr.row_len(n)?)
}

/// `C0 = sup_n sum_i a_{n,i}` over the scan range.
pub fn c0(arr: &ArraySpec, w: &WeightScheme, cfg: &ScanConfig) -> Result<C0Report> {
    let n_rows = cfg.rows_for(arr);
    let sums: Vec<Result<f64>> = map_indexed(cfg.exec, n_rows, |idx| row_weight_sum(arr, w, idx + 1));
    let mut best = C0Report { c0: f64::NEG_INFINITY, argmax_n: 0, scan_n: n_rows };
    for (idx, s) in sums.into_iter().enumerate() {
        let s = s?;
        if s > best.c0 {
            best.c0 = s;
            best.argmax_n = idx + 1;
        }
    }
    if !(best.c0 > 0.0) || !best.c0.is_finite() {
        return Err(Error::Weights(format!("C0 = {} must lie in (0, inf)", best.c0)));
    }
    Ok(best)
}

/// Checks `0 < A_n <= C n` over the scan range; returns `max_n A_n / n`.
pub fn normalizer_growth(arr: &ArraySpec, w: &WeightScheme, c: f64, cfg: &ScanConfig) -> Result<f64> {
    let n_rows = cfg.rows_for(arr);
    let mut worst: f64 = 0.0;
    for n in 1..=n_rows {
        let a = w
            .normalizer(n, arr.row_len(n)?)?
            .ok_or_else(|| Error::Weights("weight scheme has no normalizer A_n".into()))?;
        if !(a > 0.0) {
            return Err(Error::Weights(format!("A_{n} = {a} is not positive")));
        }
        worst = worst.max(a / n as f64);
        if a > c * n as f64 * (1.0 + 1e-12) {
            return Err(Error::Weights(format!("A_{n} = {a} exceeds {c} * n")));
        }
    }
    Ok(worst)
}

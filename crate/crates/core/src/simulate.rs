//! Monte Carlo estimates of weak and strong laws of large numbers for
//! arrays, including the truncations used in their proofs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::gate::{self, Decision};
use crate::model::array::{expand, runs_len};
use crate::model::normalizing::SvfForm;
use crate::model::{ArraySpec, NormalizingSequence, WeightScheme};
use crate::rng::stream;
use crate::svf::SlowlyVarying;

/// Stream index used for single long paths (rows start at 1).
const PATH_STREAM: u64 = 0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Truncation {
    #[default]
    None,
    /// `X^(a) = max(-a, min(a, X))`.
    SymmetricClamp { level: f64 },
    /// Clamp at `+-b_n`.
    ClampAtB,
    /// `X 1(|X| <= b_n)`.
    IndicatorAtB,
}


impl Truncation {
    fn level(&self, b_n: f64) -> Option<f64> {
        match self {
            Truncation::None => None,
            Truncation::SymmetricClamp { level } => Some(*level),
            Truncation::ClampAtB | Truncation::IndicatorAtB => Some(b_n),
        }
    }
}

/// Applies a truncation at `level` in place; `None` leaves values alone.
pub fn truncate(values: &mut [f64], flavor: Truncation, level: f64) {
    match flavor {
        Truncation::None => {}
        Truncation::SymmetricClamp { .. } | Truncation::ClampAtB => {
            for v in values.iter_mut() {
                *v = v.clamp(-level, level);
            }
        }
        Truncation::IndicatorAtB => {
            for v in values.iter_mut() {
                if v.abs() > level {
                    *v = 0.0;
                }
            }
        }
    }
}

/// `max_j |sum_{i<=j} c_i x_i|` (unit coefficients when `c` is absent).
pub fn max_partial_sums(row: &[f64], c: Option<&[f64]>) -> Result<f64> {
    if let Some(c) = c {
        if c.len() != row.len() {
            return Err(Error::LengthMismatch { left: row.len(), right: c.len() });
        }
    }
    let mut s = 0.0;
    let mut m: f64 = 0.0;
    for (i, x) in row.iter().enumerate() {
        s += c.map_or(1.0, |c| c[i]) * x;
        m = m.max(s.abs());
    }
    Ok(m)
}

#[derive(Clone, Debug)]
pub struct SimPlan {
    pub array: ArraySpec,
    /// Coefficients `c_{n,i}` of the weighted sums; unit weights when absent.
    pub weights: Option<WeightScheme>,
    pub b: NormalizingSequence,
    pub rows: Vec<usize>,
    pub reps: usize,
    pub epsilons: Vec<f64>,
    pub seed: u64,
    pub truncation: Truncation,
    /// Subtract `E X 1(|X| <= b_n)` cell by cell.
    pub centering: bool,
    pub exec: Execution,
}

/// Default row grid `2^6..=2^16`.
pub fn default_rows() -> Vec<usize> {
    (6..=16).map(|k| 1usize << k).collect()
}

pub fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.5, 1.0]
}

impl SimPlan {
    pub fn new(array: ArraySpec, b: NormalizingSequence) -> Self {
        SimPlan {
            array,
            weights: None,
            b,
            rows: default_rows(),
            reps: 1000,
            epsilons: default_epsilons(),
            seed: 0,
            truncation: Truncation::None,
            centering: false,
            exec: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::Plan("at least one replication is required".into()));
        }
        if self.rows.is_empty() || self.rows[0] == 0 {
            return Err(Error::Plan("rows must be a nonempty list of positive integers".into()));
        }
        if self.rows.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Plan("rows must be strictly increasing".into()));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(Error::Plan("epsilon levels must be positive".into()));
        }
        if let Truncation::SymmetricClamp { level } = self.truncation {
            if !(level > 0.0) {
                return Err(Error::Plan("truncation level must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exceedance {
    pub epsilon: f64,
    pub p_hat: f64,
    pub se: f64,
}

impl Exceedance {
    fn from_count(epsilon: f64, count: usize, reps: usize) -> Self {
        let p = count as f64 / reps as f64;
        Exceedance { epsilon, p_hat: p, se: (p * (1.0 - p) / reps as f64).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowEstimate {
    pub n: usize,
    pub b_n: f64,
    /// Mean over replications of `max_j |S_j| / b_n`.
    pub mean_ratio: f64,
    pub exceedances: Vec<Exceedance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesEstimate {
    pub epsilon: f64,
    /// Block contributions `sum_{m in block} m^{-1} P^(n_block)`.
    pub blocks: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub diagnostic: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeBlock {
    pub lo: usize,
    pub hi: usize,
    /// Mean number of `n` in the block with `|X_n| > b_n`, across paths.
    pub mean_count: f64,
    pub se: f64,
    /// `sum_{n in block} P(|X_n| > b_n)`.
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDiagnostic {
    pub grid: Vec<usize>,
    /// Mean over paths of `sup_{m >= n, m in grid} max_{j<=m} |S_j| / b_m`.
    pub mean_tail_sup: Vec<f64>,
    /// Per epsilon, fraction of paths whose tail supremum from the largest
    /// grid point stays below epsilon. A proxy for almost sure convergence.
    pub proxy_fraction: Vec<(f64, f64)>,
    pub spikes: Vec<SpikeBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub mode: String,
    pub seed: u64,
    pub reps: usize,
    pub rows: Vec<RowEstimate>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub series: Vec<SeriesEstimate>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path: Option<PathDiagnostic>,
}

impl SimReport {
    /// CSV with columns `n,epsilon,p_hat,se,R,seed`.
    pub fn csv_records(&self) -> Vec<[String; 6]> {
        let mut out = Vec::new();
        for r in &self.rows {
            for e in &r.exceedances {
                out.push([
                    r.n.to_string(),
                    format!("{}", e.epsilon),
                    e.p_hat.to_string(),
                    e.se.to_string(),
                    self.reps.to_string(),
                    self.seed.to_string(),
                ]);
            }
        }
        out
    }

    /// `p_hat` at row `n` and level `epsilon`.
    pub fn p_hat(&self, n: usize, epsilon: f64) -> Option<Exceedance> {
        self.rows.iter().find(|r| r.n == n)?.exceedances.iter().find(|e| e.epsilon == epsilon).copied()
    }
}

/// Per-row simulation: statistics `max_j |S_j| / b_n` for every replication.
fn row_statistics(plan: &SimPlan, n: usize) -> Result<(f64, Vec<f64>)> {
    let arr = &plan.array;
    let runs = arr.row(n)?;
    let k = runs_len(&runs);
    let b_n = plan.b.b(n)?;
    let coeffs = match &plan.weights {
        Some(w) => Some(w.coefficient_vec(n, k)?),
        None => None,
    };
    let level = plan.truncation.level(b_n);
    let centers: Option<Vec<f64>> = if plan.centering {
        let mut per_run = Vec::with_capacity(runs.len());
        for r in &runs {
            per_run.push(crate::model::Run::new(r.len, r.value.truncated_mean(b_n)?));
        }
        Some(expand(&per_run))
    } else {
        None
    };
    let stats: Vec<Result<f64>> = map_indexed(plan.exec, plan.reps, |rep| {
        let mut rng = stream(plan.seed, n as u64, rep as u64);
        let mut x = arr.sample_runs(n, &runs, &mut rng)?;
        if let Some(l) = level {
            truncate(&mut x, plan.truncation, l);
        }
        if let Some(c) = &centers {
            for (v, m) in x.iter_mut().zip(c) {
                *v -= m;
            }
        }
        Ok(max_partial_sums(&x, coeffs.as_deref())? / b_n)
    });
    Ok((b_n, stats.into_iter().collect::<Result<Vec<f64>>>()?))
}

/// Exceedance frequencies of `max_j |S_j| > epsilon b_n` per row and level.
pub fn wlln_estimate(plan: &SimPlan) -> Result<SimReport> {
    wlln_estimate_with(plan, &mut |_, _| {})
}

/// As [`wlln_estimate`], reporting each finished row to `progress`.
pub fn wlln_estimate_with(plan: &SimPlan, progress: &mut dyn FnMut(usize, usize)) -> Result<SimReport> {
    plan.validate()?;
    let mut rows = Vec::with_capacity(plan.rows.len());
    for (idx, &n) in plan.rows.iter().enumerate() {
        let (b_n, stats) = row_statistics(plan, n)?;
        let mean_ratio = stats.iter().sum::<f64>() / stats.len() as f64;
        let exceedances = plan
            .epsilons
            .iter()
            .map(|&e| Exceedance::from_count(e, stats.iter().filter(|&&s| s > e).count(), plan.reps))
            .collect();
        rows.push(RowEstimate { n, b_n, mean_ratio, exceedances });
        progress(idx + 1, plan.rows.len());
    }
    Ok(SimReport { mode: "wlln".into(), seed: plan.seed, reps: plan.reps, rows, series: Vec::new(), path: None })
}

fn harmonic(n: usize) -> f64 {
    (1..=n).map(|i| 1.0 / i as f64).sum()
}

/// Estimates the series `sum_n n^{-1} P(max_k |S_k| > eps n^{1/p} L~(n^{1/p}))`
/// from rows on a geometric grid: block `[n_k, n_{k+1})` contributes
/// `(H(n_{k+1} - 1) - H(n_k - 1)) P^(n_k)`.
pub fn slln_series_estimate(plan: &SimPlan, l: &SlowlyVarying, p: f64) -> Result<SimReport> {
    let mut plan = plan.clone();
    plan.b = NormalizingSequence::PowerSvf { p, svf: l.clone(), form: SvfForm::Composed };
    let mut report = wlln_estimate(&plan)?;
    report.mode = "slln-series".into();
    let rows = &plan.rows;
    let mut edges: Vec<usize> = rows.clone();
    edges.push(2 * rows[rows.len() - 1]);
    for (ei, &eps) in plan.epsilons.iter().enumerate() {
        let mut blocks = Vec::with_capacity(rows.len());
        let mut partial = Vec::with_capacity(rows.len());
        let mut acc = 0.0;
        for (k, r) in report.rows.iter().enumerate() {
            let weight = harmonic(edges[k + 1] - 1) - harmonic(edges[k] - 1);
            let c = weight * r.exceedances[ei].p_hat;
            acc += c;
            blocks.push(c);
            partial.push(acc);
        }
        let diagnostic = gate::block_series(&blocks);
        report.series.push(SeriesEstimate { epsilon: eps, blocks, partial_sums: partial, diagnostic });
    }
    Ok(report)
}

/// One long path per replication: `max_{j<=m} |S_j| / b_m` on the row
/// grid, its tail suprema, and counts of `|X_n| > b_n` per dyadic block.
pub fn slln_path_diagnostic(plan: &SimPlan) -> Result<SimReport> {
    plan.validate()?;
    let arr = &plan.array;
    if !arr.is_sequence() {
        return Err(Error::Plan("path diagnostics need a sequence-shaped array".into()));
    }
    let grid = plan.rows.clone();
    let n_max = grid[grid.len() - 1];
    let runs = arr.row(n_max)?;
    let bs = plan.b.nondecreasing_prefix(n_max)?;
    // Complete dyadic blocks [2^k, 2^{k+1}) inside 1..=n_max.
    let mut block_edges = vec![1usize];
    while block_edges.last().unwrap() * 2 <= n_max + 1 {
        let e = block_edges.last().unwrap() * 2;
        block_edges.push(e);
    }
    let n_blocks = block_edges.len() - 1;

    struct PathOut {
        ratios: Vec<f64>,
        spikes: Vec<usize>,
    }
    let paths: Vec<Result<PathOut>> = map_indexed(plan.exec, plan.reps, |rep| {
        let mut rng = stream(plan.seed, PATH_STREAM, rep as u64);
        let x = arr.sample_runs(n_max, &runs, &mut rng)?;
        let mut ratios = Vec::with_capacity(grid.len());
        let mut spikes = vec![0usize; n_blocks];
        let (mut s, mut m) = (0.0_f64, 0.0_f64);
        let mut gi = 0;
        let mut block = 0;
        for (i, v) in x.iter().enumerate() {
            let n = i + 1;
            s += v;
            m = m.max(s.abs());
            while block < n_blocks && n >= block_edges[block + 1] {
                block += 1;
            }
            if block < n_blocks && v.abs() > bs[i] {
                spikes[block] += 1;
            }
            if gi < grid.len() && n == grid[gi] {
                ratios.push(m / bs[i]);
                gi += 1;
            }
        }
        Ok(PathOut { ratios, spikes })
    });
    let paths: Vec<PathOut> = paths.into_iter().collect::<Result<_>>()?;
    let r = plan.reps as f64;

    // Tail suprema per path, then averages.
    let mut mean_tail_sup = vec![0.0; grid.len()];
    let mut last_sup = Vec::with_capacity(paths.len());
    for p in &paths {
        let mut sup: f64 = 0.0;
        let mut tails = vec![0.0; grid.len()];
        for k in (0..grid.len()).rev() {
            sup = sup.max(p.ratios[k]);
            tails[k] = sup;
        }
        for (a, t) in mean_tail_sup.iter_mut().zip(&tails) {
            *a += t / r;
        }
        last_sup.push(tails[grid.len() - 1]);
    }
    let proxy_fraction =
        plan.epsilons.iter().map(|&e| (e, last_sup.iter().filter(|&&s| s < e).count() as f64 / r)).collect();

    let mut spikes = Vec::with_capacity(n_blocks);
    for bi in 0..n_blocks {
        let (lo, hi) = (block_edges[bi], block_edges[bi + 1] - 1);
        let counts: Vec<f64> = paths.iter().map(|p| p.spikes[bi] as f64).collect();
        let mean = counts.iter().sum::<f64>() / r;
        let var = if paths.len() > 1 { counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (r - 1.0) } else { 0.0 };
        let expected = (lo..=hi)
            .map(|n| arr.sequence_cell(n).expect("sequence layout").tail_at(bs[n - 1]))
            .sum();
        spikes.push(SpikeBlock { lo, hi, mean_count: mean, se: (var / r).sqrt(), expected });
    }
    Ok(SimReport {
        mode: "slln-path".into(),
        seed: plan.seed,
        reps: plan.reps,
        rows: Vec::new(),
        series: Vec::new(),
        path: Some(PathDiagnostic { grid, mean_tail_sup, proxy_fraction, spikes }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HProbe {
    /// Estimated `E max_j |sum_{i<=j} (X_i^(a) - E X_i^(a))|^2`.
    pub lhs: f64,
    /// `sum_i E (X_i^(a))^2`, exact.
    pub rhs: f64,
    pub c_hat: f64,
}

/// Monte Carlo estimate of the constant in the maximal inequality for
/// clamped, centered partial sums of row `n`.
pub fn condition_h_probe(arr: &ArraySpec, a: f64, n: usize, reps: usize, seed: u64, exec: Execution) -> Result<HProbe> {
    if !(a > 0.0) || reps == 0 {
        return Err(Error::Plan("clamp level must be positive and reps >= 1".into()));
    }
    let runs = arr.row(n)?;
    let mut centers = Vec::with_capacity(runs.len());
    let mut rhs = 0.0;
    for r in &runs {
        centers.push(crate::model::Run::new(r.len, r.value.clamped_mean(a)?));
        rhs += r.len as f64 * r.value.clamped_second_moment(a);
    }
    if rhs == 0.0 {
        return Err(Error::ZeroReference("all clamped cells are degenerate at 0".into()));
    }
    let centers = expand(&centers);
    let sq: Vec<Result<f64>> = map_indexed(exec, reps, |rep| {
        let mut rng = stream(seed, n as u64, rep as u64);
        let mut x = arr.sample_runs(n, &runs, &mut rng)?;
        truncate(&mut x, Truncation::SymmetricClamp { level: a }, a);
        for (v, c) in x.iter_mut().zip(&centers) {
            *v -= c;
        }
        Ok(max_partial_sums(&x, None)?.powi(2))
    });
    let lhs = sq.into_iter().collect::<Result<Vec<f64>>>()?.iter().sum::<f64>() / reps as f64;
    Ok(HProbe { lhs, rhs, c_hat: lhs / rhs })
}

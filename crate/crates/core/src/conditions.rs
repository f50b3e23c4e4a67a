//! Hypotheses of the limit theorems: integrability of domination
//! functionals, series conditions, regularity of normalizing sequences and
//! the vanishing of `k G(b_k)`.

use serde::{Deserialize, Serialize};

use crate::domination::Functional;
use crate::error::{Error, Result};
use crate::gate::{self, Decision, Verdict};
use crate::model::tail::TailFunction;
use crate::model::{ArraySpec, NormalizingSequence};
use crate::quad;
use crate::svf::SlowlyVarying;

/// Default range for big-O checks on normalizing sequences.
pub const REGULARITY_N: usize = 100_000;
/// Increment-ratio bound certifying convergence of a ratio sequence.
pub const INCREMENT_CONVERGES: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// What `values` holds.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    pub values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub name: String,
    pub verdict: Verdict,
    pub rule: String,
    pub evidence: Evidence,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ConditionVerdict {
    fn new(name: &str, d: Decision, evidence: Evidence) -> Self {
        ConditionVerdict { name: name.into(), verdict: d.verdict, rule: d.rule, evidence, notes: Vec::new() }
    }

    fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }
}

/// `int_0^inf x^{p-1} L^p(x) G(x) dx` by dyadic blocks. The `[0, 1]` piece
/// is integrated separately; the verdict comes from the blocks
/// `[2^j, 2^{j+1}]` that lie inside the range where `G` is resolved.
pub fn chandra_ghosal_integral(g: &TailFunction, p: f64, l: &SlowlyVarying) -> ConditionVerdict {
    let f = |x: f64| x.powf(p - 1.0) * l.eval(x).powf(p) * g.eval(x);
    let kinks = |lo: f64, hi: f64| -> Vec<f64> { g.breakpoints().into_iter().filter(|&b| b > lo && b < hi).collect() };
    let head = quad::integrate(f, 0.0, 1.0, crate::moments::QUAD_TOL, &kinks(0.0, 1.0)).value;
    let support = g.support_hint().unwrap_or(f64::INFINITY);
    let mut blocks = Vec::new();
    let mut edges = Vec::new();
    let mut note = None;
    for j in 0..crate::moments::MAX_BLOCKS as i32 {
        let (lo, hi) = (2f64.powi(j), 2f64.powi(j + 1));
        if hi > g.resolved_to() {
            note = Some(format!("blocks beyond x = {lo} exceed the resolved range {:.4e}", g.resolved_to()));
            break;
        }
        if g.eval(lo) == 0.0 || lo >= support {
            blocks.push(0.0);
            edges.push(lo);
            break;
        }
        let b = quad::integrate(f, lo, hi, crate::moments::QUAD_TOL, &kinks(lo, hi)).value;
        blocks.push(b);
        edges.push(lo);
        if b < gate::BLOCK_NEGLIGIBLE {
            break;
        }
    }
    let total = head + blocks.iter().sum::<f64>();
    let d = gate::block_series(&blocks);
    let mut v = ConditionVerdict::new(
        "chandra-ghosal-integral",
        d,
        Evidence { kind: "dyadic block integrals".into(), grid: Some(edges), values: blocks, total: Some(total) },
    );
    if !(1.0..2.0).contains(&p) {
        v = v.note(format!("p = {p} lies outside [1, 2)"));
    }
    if let Some(n) = note {
        v = v.note(n);
    }
    v
}

/// `sum_n P(|X_n|^p > n)` for a sequence, summed up to `n_max`.
pub fn series_condition(arr: &ArraySpec, p: f64, n_max: usize) -> Result<ConditionVerdict> {
    if !arr.is_sequence() {
        return Err(Error::Spec("series condition needs a sequence-shaped array".into()));
    }
    let n_max = arr.declared_rows().map_or(n_max, |d| d.min(n_max));
    let mut blocks: Vec<f64> = Vec::new();
    let mut checkpoints = Vec::new();
    let mut partial = Vec::new();
    let mut total = 0.0;
    let mut block = 0.0;
    let mut next = 2usize;
    for n in 1..=n_max {
        let d = arr.sequence_cell(n).expect("sequence layout");
        let t = d.tail_at((n as f64).powf(1.0 / p));
        total += t;
        block += t;
        if n + 1 == next {
            blocks.push(block);
            checkpoints.push(n as f64);
            partial.push(total);
            block = 0.0;
            next *= 2;
        }
    }
    let d = gate::block_series(&blocks);
    let mut v = ConditionVerdict::new(
        "series",
        d,
        Evidence { kind: "partial sums at n = 2^k - 1".into(), grid: Some(checkpoints), values: partial, total: Some(total) },
    );
    v = v.note(format!("dyadic blocks: {blocks:?}"));
    Ok(v)
}

/// Partial sums of `sum_{i<=n} term(i)` and the first `n` at which they
/// exceed `level`.
pub fn first_crossing(term: impl Fn(usize) -> f64, level: f64, n_max: usize) -> Option<usize> {
    let mut s = 0.0;
    for n in 1..=n_max {
        s += term(n);
        if s > level {
            return Some(n);
        }
    }
    None
}

/// Boundedness of a ratio sequence `r_1..r_N`.
///
/// 1. plateau: the maximum over the second half does not exceed the
///    maximum over the first half.
/// 2. convergent increments: increments of `r` between dyadic checkpoints
///    shrink by a factor <= 0.9 over the last 4 doublings.
/// 3. growth: the last 4 increments are positive and none shrinks below
///    0.9 of its predecessor.
pub fn ratio_boundedness(r: &[f64]) -> (Decision, Vec<f64>, Vec<f64>) {
    let n = r.len();
    let mut grid = Vec::new();
    let mut checkpoints = Vec::new();
    let mut k = 1;
    while k <= n {
        grid.push(k as f64);
        checkpoints.push(r[k - 1]);
        k *= 2;
    }
    let half = n / 2;
    let first = r[..half.max(1)].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let second = r[half.max(1)..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if second <= first * (1.0 + 1e-12) {
        let d = Decision { verdict: Verdict::Holds, rule: format!("plateau: max ratio {first:.6} attained in the first half"), rate: None };
        return (d, grid, checkpoints);
    }
    let inc: Vec<f64> = checkpoints.windows(2).map(|w| w[1] - w[0]).collect();
    if inc.len() >= 5 {
        let last = &inc[inc.len() - 5..];
        let ratios: Vec<f64> = last.windows(2).map(|w| w[1] / w[0]).collect();
        if last.iter().all(|&d| d > 0.0) {
            let q = ratios.iter().copied().fold(0.0_f64, f64::max);
            if q <= INCREMENT_CONVERGES {
                let limit = checkpoints[checkpoints.len() - 1] + last[4] * q / (1.0 - q);
                let d = Decision {
                    verdict: Verdict::Holds,
                    rule: format!("convergent increments: ratio <= {q:.3}, extrapolated limit {limit:.6}"),
                    rate: Some(limit),
                };
                return (d, grid, checkpoints);
            }
            if ratios.iter().all(|&x| x >= INCREMENT_CONVERGES) {
                let d = Decision {
                    verdict: Verdict::Fails,
                    rule: format!("growth: dyadic increments persist (last {:.4e})", last[4]),
                    rate: None,
                };
                return (d, grid, checkpoints);
            }
        }
    }
    (Decision { verdict: Verdict::Inconclusive, rule: "ratio neither plateaus nor settles".into(), rate: None }, grid, checkpoints)
}

fn regularity(name: &str, b: &NormalizingSequence, n_max: usize, squared: bool) -> Result<ConditionVerdict> {
    let bs = b.nondecreasing_prefix(n_max)?;
    let mut acc = 0.0;
    let ratios: Vec<f64> = bs
        .iter()
        .enumerate()
        .map(|(k, &bn)| {
            let i = (k + 1) as f64;
            let (num, den) = if squared { (bn * bn / (i * i), bn * bn / i) } else { (bn / (i * i), bn / i) };
            acc += num;
            acc / den
        })
        .collect();
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (d, grid, values) = ratio_boundedness(&ratios);
    Ok(ConditionVerdict::new(
        name,
        d,
        Evidence { kind: "ratio at n = 2^k".into(), grid: Some(grid), values, total: Some(max) },
    ))
}

/// `sum_{i<=n} b_i / i^2 = O(b_n / n)`.
pub fn b_regularity_wlln(b: &NormalizingSequence, n_max: usize) -> Result<ConditionVerdict> {
    regularity("b-regularity-wlln", b, n_max, false)
}

/// `sum_{i<=n} b_i^2 / i^2 = O(b_n^2 / n)`.
pub fn b_regularity_l2(b: &NormalizingSequence, n_max: usize) -> Result<ConditionVerdict> {
    regularity("b-regularity-l2", b, n_max, true)
}

/// `k G(b_k)` along `k_grid`, with a decay verdict on the points where
/// `b_k` lies inside the resolved range of `g`.
pub fn vanishing_kg(g: &Functional, b: &NormalizingSequence, k_grid: &[usize]) -> Result<ConditionVerdict> {
    let mut values = Vec::with_capacity(k_grid.len());
    let (mut rg, mut rv) = (Vec::new(), Vec::new());
    for &k in k_grid {
        let bk = b.b(k)?;
        let v = k as f64 * g.eval(bk);
        values.push(v);
        if bk < g.resolved_to {
            rg.push(k as f64);
            rv.push(v);
        }
    }
    let d = gate::decay(&rg, &rv);
    let grid = k_grid.iter().map(|&k| k as f64).collect();
    let mut v = ConditionVerdict::new("vanishing-kG", d, Evidence { kind: "k G(b_k)".into(), grid: Some(grid), values, total: None });
    if rg.len() < k_grid.len() {
        v = v.note(format!("{} grid points beyond the resolved range were not used", k_grid.len() - rg.len()));
    }
    Ok(v)
}

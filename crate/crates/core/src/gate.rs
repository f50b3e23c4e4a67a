//! Numeric rules that turn finite evidence into three-way verdicts.
//!
//! Limits, improper integrals and infinite series cannot be decided from a
//! finite computation. Each rule here either fires (holds / fails) or
//! abstains (inconclusive), and every outcome names the rule that produced
//! it so reports stay auditable.

use serde::{Deserialize, Serialize};

/// Threshold below which a functional counts as vanished.
pub const EPS_LIM: f64 = 1e-3;
/// Number of trailing grid values the vanish rule inspects.
pub const VANISH_POINTS: usize = 5;
/// Minimum fitted logarithmic decay rate `beta` in `v ~ (log x)^(-beta)`.
pub const LOG_RATE_HOLDS: f64 = 0.5;
/// Fitted rates at or below this count as "flat or growing".
pub const LOG_RATE_FLAT: f64 = 0.1;
/// Block contributions below this are negligible.
pub const BLOCK_NEGLIGIBLE: f64 = 1e-12;
/// Number of trailing blocks the harmonic-envelope rule inspects.
pub const ENVELOPE_BLOCKS: usize = 10;
/// Slope of `ln((j+1) B_j)` against `ln(j+1)` at or above which blocks decay
/// no faster than a (log-)harmonic envelope.
pub const ENVELOPE_SLOPE: f64 = -0.5;
/// Geometric block-ratio bound for the convergence certificate.
pub const GEOMETRIC_RATIO: f64 = 0.9;
/// Remainder bound demanded by the geometric certificate.
pub const GEOMETRIC_REMAINDER: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Fails,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Verdict {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "holds" => Ok(Verdict::Holds),
            "fails" => Ok(Verdict::Fails),
            "inconclusive" => Ok(Verdict::Inconclusive),
            other => Err(format!("unknown verdict `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub rule: String,
    /// Fitted rate, when a fitting rule was consulted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
}

impl Decision {
    fn new(verdict: Verdict, rule: impl Into<String>, rate: Option<f64>) -> Self {
        Decision { verdict, rule: rule.into(), rate }
    }
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut cov, mut var) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        var += (x - mx) * (x - mx);
    }
    if var == 0.0 {
        0.0
    } else {
        cov / var
    }
}

/// Decides whether `values[j] = v(grid[j])` tends to 0 as the grid grows.
///
/// Rules, in order:
/// 1. vanish: the last 5 values are below `EPS_LIM` and nonincreasing.
/// 2. log-rate: on the upper half of the grid in `ln log2 x`, fit
///    `v ~ (log2 x)^(-beta)`. `beta >= 0.5` with a net drop holds;
///    `beta <= 0.1` with the last value still above `EPS_LIM` fails.
/// 3. otherwise inconclusive.
pub fn decay(grid: &[f64], values: &[f64]) -> Decision {
    assert_eq!(grid.len(), values.len(), "grid/value length mismatch");
    let n = values.len();
    if n >= VANISH_POINTS {
        let tail = &values[n - VANISH_POINTS..];
        if tail.iter().all(|&v| v < EPS_LIM) && nonincreasing(tail) {
            return Decision::new(Verdict::Holds, "vanish: last 5 values < 1e-3 and nonincreasing", None);
        }
    }
    // Points with log2 x >= 1 only, so ln(log2 x) is defined and >= 0.
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .zip(values)
        .filter(|(x, _)| x.log2() >= 1.0)
        .map(|(x, v)| (x.log2().ln(), *v))
        .collect();
    let Some(&(top, _)) = pts.last() else {
        return Decision::new(Verdict::Inconclusive, "log-rate: no grid points with x >= 2", None);
    };
    let window: Vec<(f64, f64)> = pts.iter().copied().filter(|(t, _)| *t >= 0.5 * top).collect();
    if window.len() < 4 {
        return Decision::new(Verdict::Inconclusive, "log-rate: fewer than 4 points in the fitting window", None);
    }
    if window.iter().all(|(_, v)| *v == 0.0) {
        return Decision::new(Verdict::Holds, "vanish: identically zero on the fitting window", None);
    }
    if window.iter().any(|(_, v)| *v <= 0.0 || !v.is_finite()) {
        return Decision::new(Verdict::Inconclusive, "log-rate: window mixes zero and positive values", None);
    }
    let xs: Vec<f64> = window.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = window.iter().map(|p| p.1.ln()).collect();
    let beta = -ls_slope(&xs, &ys);
    let first = window[0].1;
    let last = window[window.len() - 1].1;
    if beta >= LOG_RATE_HOLDS && last < first {
        Decision::new(
            Verdict::Holds,
            format!("log-rate: fitted v ~ (log x)^-{beta:.3}, beta >= {LOG_RATE_HOLDS}"),
            Some(beta),
        )
    } else if beta <= LOG_RATE_FLAT && last >= EPS_LIM {
        Decision::new(
            Verdict::Fails,
            format!("log-rate: fitted beta = {beta:.3} <= {LOG_RATE_FLAT} (flat or growing) with last value {last:.3e} >= 1e-3"),
            Some(beta),
        )
    } else {
        Decision::new(
            Verdict::Inconclusive,
            format!("log-rate: fitted beta = {beta:.3} between rules"),
            Some(beta),
        )
    }
}

/// Convergence verdict for a nonnegative series given by dyadic block sums
/// `blocks[j]` (block `j` covers `[2^j, 2^(j+1))` of the summation or
/// integration variable).
///
/// Rules, in order:
/// 1. negligible: the final block is below `BLOCK_NEGLIGIBLE`.
/// 2. geometric: the last 5 block ratios are at most 0.9 and the geometric
///    remainder bound is below `1e-9`.
/// 3. harmonic envelope: the last 10 blocks are positive and
///    `ln((j+1) B_j)` has slope >= -0.5 in `ln(j+1)`, i.e. blocks decay no
///    faster than a divergent `1/j`-type envelope.
/// 4. otherwise inconclusive.
pub fn block_series(blocks: &[f64]) -> Decision {
    let Some(&last) = blocks.last() else {
        return Decision::new(Verdict::Inconclusive, "no blocks evaluated", None);
    };
    if last.abs() < BLOCK_NEGLIGIBLE {
        return Decision::new(Verdict::Holds, "negligible: final block < 1e-12", None);
    }
    let n = blocks.len();
    if n >= 6 {
        let tail = &blocks[n - 6..];
        let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
        let r = ratios.iter().copied().fold(0.0_f64, f64::max);
        if tail.iter().all(|&b| b > 0.0) && r <= GEOMETRIC_RATIO {
            let remainder = last * r / (1.0 - r);
            if remainder < GEOMETRIC_REMAINDER {
                return Decision::new(
                    Verdict::Holds,
                    format!("geometric: block ratio <= {r:.3}, remainder <= {remainder:.2e}"),
                    Some(r),
                );
            }
        }
    }
    if n >= ENVELOPE_BLOCKS {
        let start = n - ENVELOPE_BLOCKS;
        let tail = &blocks[start..];
        if tail.iter().all(|&b| b > BLOCK_NEGLIGIBLE) {
            let xs: Vec<f64> = (start..n).map(|j| ((j + 1) as f64).ln()).collect();
            let ys: Vec<f64> = tail.iter().enumerate().map(|(k, b)| (((start + k + 1) as f64) * b).ln()).collect();
            let slope = ls_slope(&xs, &ys);
            if slope >= ENVELOPE_SLOPE {
                return Decision::new(
                    Verdict::Fails,
                    format!("harmonic envelope: slope of ln((j+1)B_j) = {slope:.3} >= {ENVELOPE_SLOPE} over last {ENVELOPE_BLOCKS} blocks"),
                    Some(slope),
                );
            }
            return Decision::new(
                Verdict::Inconclusive,
                format!("blocks decay (envelope slope {slope:.3}) but not geometrically"),
                Some(slope),
            );
        }
    }
    Decision::new(Verdict::Inconclusive, "too few informative blocks", None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pow2_grid(j_max: i32) -> Vec<f64> {
        (0..=j_max).map(|j| 2f64.powi(j)).collect()
    }

    #[test]
    fn vanish_rule() {
        let g = pow2_grid(20);
        let v: Vec<f64> = g.iter().map(|x| 1.0 / x).collect();
        let d = decay(&g, &v);
        assert_eq!(d.verdict, Verdict::Holds);
        assert!(d.rule.starts_with("vanish"));
    }

    #[test]
    fn inverse_log_decay_holds() {
        let g = pow2_grid(30);
        let v: Vec<f64> = g.iter().map(|x| 1.0 / x.log2().max(1.0)).collect();
        let d = decay(&g, &v);
        assert_eq!(d.verdict, Verdict::Holds, "{d:?}");
        assert!((d.rate.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn flat_and_growing_fail() {
        let g = pow2_grid(20);
        assert_eq!(decay(&g, &vec![0.4; g.len()]).verdict, Verdict::Fails);
        assert_eq!(decay(&g, &g.clone()).verdict, Verdict::Fails);
    }

    #[test]
    fn harmonic_blocks_diverge() {
        let b: Vec<f64> = (0..20).map(|j| 0.7 / (j as f64 + 1.0)).collect();
        assert_eq!(block_series(&b).verdict, Verdict::Fails);
        let c: Vec<f64> = (0..20).map(|_| 0.69).collect();
        assert_eq!(block_series(&c).verdict, Verdict::Fails);
    }

    #[test]
    fn geometric_blocks_converge() {
        let b: Vec<f64> = (0..45).map(|j| 0.5f64.powi(j)).collect();
        let d = block_series(&b);
        assert_eq!(d.verdict, Verdict::Holds, "{d:?}");
        let z = vec![0.3, 0.0, 0.0];
        assert_eq!(block_series(&z).verdict, Verdict::Holds);
    }

    #[test]
    fn inverse_square_blocks_are_inconclusive() {
        let b: Vec<f64> = (0..20).map(|j| 1.0 / ((j + 1) as f64).powi(2)).collect();
        assert_eq!(block_series(&b).verdict, Verdict::Inconclusive);
    }
}

//! Parsers for `--rows` and `--eps` style lists.

use anyhow::{anyhow, bail, Context, Result};

fn parse_count(s: &str) -> Result<usize> {
    let s = s.trim();
    if let Some((base, exp)) = s.split_once('^') {
        let base: usize = base.trim().parse().with_context(|| format!("bad base in `{s}`"))?;
        let exp: u32 = exp.trim().parse().with_context(|| format!("bad exponent in `{s}`"))?;
        return base.checked_pow(exp).ok_or_else(|| anyhow!("`{s}` overflows"));
    }
    s.parse().with_context(|| format!("`{s}` is not a positive integer"))
}

/// Row sizes: `2^6..2^14` (doubling), `64..1024` (doubling from 64), or a
/// comma list such as `10,100,1000`.
pub fn parse_rows(s: &str) -> Result<Vec<usize>> {
    let rows = if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi) = (parse_count(lo)?, parse_count(hi.trim_start_matches('='))?);
        if lo == 0 || hi < lo {
            bail!("row range `{s}` must satisfy 1 <= lo <= hi");
        }
        let mut out = Vec::new();
        let mut n = lo;
        while n <= hi {
            out.push(n);
            n = n.checked_mul(2).ok_or_else(|| anyhow!("row range `{s}` overflows"))?;
        }
        out
    } else {
        s.split(',').map(parse_count).collect::<Result<Vec<_>>>()?
    };
    if rows.is_empty() || rows.contains(&0) {
        bail!("rows must be positive");
    }
    if rows.windows(2).any(|w| w[1] <= w[0]) {
        bail!("rows must be strictly increasing");
    }
    Ok(rows)
}

pub fn parse_eps(s: &str) -> Result<Vec<f64>> {
    let eps = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("`{t}` is not a number")))
        .collect::<Result<Vec<_>>>()?;
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0)) {
        bail!("epsilon levels must be positive");
    }
    Ok(eps)
}

//! Slowly varying functions, their de Bruijn conjugates and the
//! regularization that makes `x^alpha L(x)` strictly increasing.
//!
//! Logarithms are base 2 of `max{2, x}` throughout.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::tail::geometric_grid;

/// `log2(max(2, x))`.
pub fn lg(x: f64) -> f64 {
    x.max(2.0).log2()
}

/// Iterated clamped logs `f_1 = lg x, f_k = lg f_{k-1}` for `k = 1..=nu`.
fn iterated_logs(x: f64, nu: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(nu as usize);
    let mut v = x;
    for _ in 0..nu {
        v = lg(v);
        out.push(v);
    }
    out
}

/// `(log x)(log log x)...` with `nu` factors.
pub fn log_nu(x: f64, nu: u32) -> f64 {
    assert!(nu >= 1, "nu must be at least 1");
    iterated_logs(x, nu).iter().product()
}

/// Like [`log_nu`] with the last factor squared.
pub fn log_nu_sq(x: f64, nu: u32) -> f64 {
    assert!(nu >= 1, "nu must be at least 1");
    let f = iterated_logs(x, nu);
    f.iter().product::<f64>() * f[f.len() - 1]
}

/// `x f'(x) / f(x)` for `f = log_nu` (`squared_last` selects `log_nu_sq`).
pub fn log_nu_ratio(x: f64, nu: u32, squared_last: bool) -> f64 {
    let f = iterated_logs(x, nu);
    let ln2 = std::f64::consts::LN_2;
    // x f_k'(x) computed by the chain rule; the clamp kills derivatives below 2.
    let mut xd = if x > 2.0 { 1.0 / ln2 } else { 0.0 };
    let mut inner = x;
    let mut total = 0.0;
    for (k, fk) in f.iter().enumerate() {
        if k > 0 {
            xd = if inner > 2.0 { xd / (inner * ln2) } else { 0.0 };
        }
        let weight = if squared_last && k + 1 == f.len() { 2.0 } else { 1.0 };
        total += weight * xd / fk;
        inner = *fk;
    }
    total
}

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CustomSvf {
    pub label: String,
    pub eval: RealFn,
    pub derivative: Option<RealFn>,
}

#[derive(Clone)]
pub enum SvfFamily {
    Constant1,
    /// `(lg x)^gamma`.
    LogPower { gamma: f64 },
    /// `(lg lg x)^gamma`.
    LogLogPower { gamma: f64 },
    Product(Vec<SvfFamily>),
    Custom(CustomSvf),
}

impl fmt::Debug for SvfFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SvfFamily::Constant1 => f.write_str("Constant1"),
            SvfFamily::LogPower { gamma } => write!(f, "LogPower{{gamma: {gamma}}}"),
            SvfFamily::LogLogPower { gamma } => write!(f, "LogLogPower{{gamma: {gamma}}}"),
            SvfFamily::Product(v) => f.debug_tuple("Product").field(v).finish(),
            SvfFamily::Custom(c) => write!(f, "Custom({})", c.label),
        }
    }
}

impl SvfFamily {
    fn eval(&self, x: f64) -> f64 {
        match self {
            SvfFamily::Constant1 => 1.0,
            SvfFamily::LogPower { gamma } => lg(x).powf(*gamma),
            SvfFamily::LogLogPower { gamma } => lg(lg(x)).powf(*gamma),
            SvfFamily::Product(v) => v.iter().map(|f| f.eval(x)).product(),
            SvfFamily::Custom(c) => (c.eval)(x),
        }
    }

    fn ratio(&self, x: f64) -> f64 {
        let ln2 = std::f64::consts::LN_2;
        match self {
            SvfFamily::Constant1 => 0.0,
            SvfFamily::LogPower { gamma } => {
                if x > 2.0 {
                    gamma / x.ln()
                } else {
                    0.0
                }
            }
            SvfFamily::LogLogPower { gamma } => {
                if x > 4.0 {
                    let l = x.log2();
                    gamma / (ln2 * ln2 * l * l.log2())
                } else {
                    0.0
                }
            }
            SvfFamily::Product(v) => v.iter().map(|f| f.ratio(x)).sum(),
            SvfFamily::Custom(c) => {
                let l = (c.eval)(x);
                let d = match &c.derivative {
                    Some(d) => d(x),
                    None => {
                        let h = x * 1e-6;
                        ((c.eval)(x + h) - (c.eval)(x - h)) / (2.0 * h)
                    }
                };
                x * d / l
            }
        }
    }

    /// Below this point the family is constant by the clamp convention.
    fn clamp_point(&self) -> f64 {
        match self {
            SvfFamily::Constant1 => 0.0,
            SvfFamily::LogPower { .. } => 2.0,
            SvfFamily::LogLogPower { .. } => 4.0,
            SvfFamily::Product(v) => v.iter().map(|f| f.clamp_point()).fold(0.0, f64::min),
            SvfFamily::Custom(_) => f64::MIN_POSITIVE,
        }
    }

    fn has_custom(&self) -> bool {
        match self {
            SvfFamily::Custom(_) => true,
            SvfFamily::Product(v) => v.iter().any(SvfFamily::has_custom),
            _ => false,
        }
    }

    fn is_constant(&self) -> bool {
        match self {
            SvfFamily::Constant1 => true,
            SvfFamily::LogPower { gamma } | SvfFamily::LogLogPower { gamma } => *gamma == 0.0,
            SvfFamily::Product(v) => v.iter().all(SvfFamily::is_constant),
            SvfFamily::Custom(_) => false,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Conjugate {
    /// `L~ = 1/L`.
    Reciprocal,
    Declared(Arc<SlowlyVarying>),
    Undeclared,
}

#[derive(Clone, Debug)]
pub struct SlowlyVarying {
    pub family: SvfFamily,
    /// Splice point: below it `L_1(x) = L(a) x / a`.
    pub anchor: Option<f64>,
    pub conjugate: Conjugate,
}

impl SlowlyVarying {
    pub fn new(family: SvfFamily) -> Self {
        let conjugate = if family.has_custom() { Conjugate::Undeclared } else { Conjugate::Reciprocal };
        SlowlyVarying { family, anchor: None, conjugate }
    }

    pub fn constant() -> Self {
        Self::new(SvfFamily::Constant1)
    }

    pub fn log_power(gamma: f64) -> Self {
        Self::new(SvfFamily::LogPower { gamma })
    }

    pub fn log_log_power(gamma: f64) -> Self {
        Self::new(SvfFamily::LogLogPower { gamma })
    }

    pub fn with_conjugate(mut self, conj: SlowlyVarying) -> Self {
        self.conjugate = Conjugate::Declared(Arc::new(conj));
        self
    }

    pub fn is_constant(&self) -> bool {
        self.family.is_constant() && self.anchor.is_none_or(|a| a == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self.anchor {
            Some(a) if a > 0.0 && x < a => self.family.eval(a) * x.max(0.0) / a,
            _ => self.family.eval(x),
        }
    }

    /// `L'(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        match self.anchor {
            Some(a) if a > 0.0 && x < a => self.family.eval(a) / a,
            _ => self.family.ratio(x) * self.family.eval(x) / x,
        }
    }

    /// `x L'(x) / L(x)`.
    pub fn derivative_ratio(&self, x: f64) -> Result<f64> {
        let v = self.eval(x);
        if !(v > 0.0) {
            return Err(Error::NonPositiveSvf { x, value: v });
        }
        Ok(match self.anchor {
            Some(a) if a > 0.0 && x < a => 1.0,
            _ => self.family.ratio(x),
        })
    }

    /// `L~(y)`.
    pub fn conjugate_eval(&self, y: f64) -> Result<f64> {
        match &self.conjugate {
            Conjugate::Reciprocal => Ok(1.0 / self.family.eval(y)),
            Conjugate::Declared(c) => Ok(c.eval(y)),
            Conjugate::Undeclared => Err(Error::Svf("de Bruijn conjugate undeclared for custom family".into())),
        }
    }

    /// `|L(x) L~(x L(x)) - 1|` per grid point.
    pub fn conjugate_residual(&self, grid: &[f64]) -> Result<Vec<f64>> {
        grid.iter()
            .map(|&x| {
                let l = self.eval(x);
                Ok((l * self.conjugate_eval(x * l)? - 1.0).abs())
            })
            .collect()
    }

    /// Splices a linear piece below an anchor `a` so that `x^alpha L_1(x)`
    /// is strictly increasing on `[0, inf)`.
    pub fn regularize(&self, alpha: f64) -> Result<SlowlyVarying> {
        const SCAN_BOUND: f64 = 1e12;
        if !(alpha > 0.0) {
            return Err(Error::Svf(format!("alpha must be > 0, got {alpha}")));
        }
        let good = |x: f64| self.family.eval(x) > 0.0 && alpha + self.family.ratio(x) > 0.0;
        let start = self.family.clamp_point();
        let anchor = if start == 0.0 && self.family.is_constant() {
            0.0
        } else {
            let grid: Vec<f64> = geometric_grid(start.max(1e-6), SCAN_BOUND, 4000).collect();
            match grid.iter().rposition(|&x| !good(x)) {
                None => start,
                Some(k) if k + 1 == grid.len() => return Err(Error::NoAnchor { bound: SCAN_BOUND }),
                Some(k) => {
                    let (mut lo, mut hi) = (grid[k], grid[k + 1]);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if good(mid) {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                        if hi - lo <= 1e-12 * hi {
                            break;
                        }
                    }
                    hi
                }
            }
        };
        let out = SlowlyVarying { family: self.family.clone(), anchor: Some(anchor), conjugate: self.conjugate.clone() };
        out.verify_increasing(alpha, 1e-6, SCAN_BOUND, 1000)?;
        Ok(out)
    }

    /// Checks that `x^alpha L(x)` strictly increases on a geometric grid.
    pub fn verify_increasing(&self, alpha: f64, lo: f64, hi: f64, points: usize) -> Result<()> {
        let mut prev = 0.0;
        for x in geometric_grid(lo, hi, points) {
            let v = x.powf(alpha) * self.eval(x);
            if !(v > prev) {
                return Err(Error::Svf(format!("x^{alpha} L(x) not strictly increasing at x = {x:.6e}")));
            }
            prev = v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamped_logs() {
        assert_eq!(log_nu(1.0, 1), 1.0);
        assert_eq!(log_nu(16.0, 2), 8.0);
        assert_eq!(log_nu(65536.0, 3), 128.0);
        assert_eq!(log_nu_sq(16.0, 2), 16.0);
        assert_eq!(log_nu_sq(16.0, 1), 16.0);
        assert_eq!(log_nu_sq(1.5, 3), 1.0);
    }

    #[test]
    fn log_nu_ratio_matches_difference_quotient() {
        for &(x, nu, sq) in &[(1e3, 1, false), (1e5, 2, false), (1e9, 3, true), (50.0, 2, true)] {
            let h = x * 1e-6;
            let f = |t: f64| if sq { log_nu_sq(t, nu) } else { log_nu(t, nu) };
            let num = x * (f(x + h) - f(x - h)) / (2.0 * h) / f(x);
            assert!((log_nu_ratio(x, nu, sq) - num).abs() < 1e-6, "{x} {nu} {sq}");
        }
    }

    #[test]
    fn derivative_ratio_examples() {
        let l = SlowlyVarying::log_power(1.0);
        let r = l.derivative_ratio(1024.0).unwrap();
        assert!((r - 1.0 / (10.0 * std::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(SlowlyVarying::constant().derivative_ratio(7.0).unwrap(), 0.0);
    }

    #[test]
    fn conjugate_residual_examples() {
        let l = SlowlyVarying::log_power(1.0);
        let r = l.conjugate_residual(&[2f64.powi(20), 2f64.powi(400)]).unwrap();
        assert!(r[0] < 0.25 && r[1] < 0.03 && r[1] < r[0], "{r:?}");
        assert_eq!(SlowlyVarying::constant().conjugate_residual(&[5.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn regularize_examples() {
        let c = SlowlyVarying::constant().regularize(1.0).unwrap();
        assert_eq!(c.anchor, Some(0.0));
        let up = SlowlyVarying::log_power(1.0).regularize(1.0).unwrap();
        assert_eq!(up.anchor, Some(2.0));
        let down = SlowlyVarying::log_power(-1.0).regularize(0.5).unwrap();
        let a = down.anchor.unwrap();
        assert!((a - std::f64::consts::E.powi(2)).abs() < 1e-6, "anchor {a}");
        assert!((down.eval(a) - down.eval(a - 1e-9)).abs() < 1e-9);
    }

    #[test]
    fn custom_without_conjugate_errors() {
        let c = SlowlyVarying::new(SvfFamily::Custom(CustomSvf {
            label: "lg".into(),
            eval: Arc::new(lg),
            derivative: None,
        }));
        assert!(c.conjugate_residual(&[10.0]).is_err());
        let r = c.derivative_ratio(1024.0).unwrap();
        assert!((r - 1.0 / (10.0 * std::f64::consts::LN_2)).abs() < 1e-6);
    }
}

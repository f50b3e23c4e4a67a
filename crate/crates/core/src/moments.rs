//! Expectations computed from tail functions, moment functions, and
//! uniform-integrability diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::{self, Decision};
use crate::model::dist::DistSpec;
use crate::model::scan::{scan_rows, ScanConfig};
use crate::model::tail::TailFunction;
use crate::model::{ArraySpec, WeightScheme};
use crate::quad;
use crate::svf::{log_nu, log_nu_ratio, log_nu_sq, SlowlyVarying};

/// Absolute quadrature tolerance on finite segments.
pub const QUAD_TOL: f64 = 1e-9;
/// A tail block contributing less than this ends the integration.
pub const BLOCK_STOP: f64 = 1e-12;
/// Number of dyadic tail blocks before declaring divergence.
pub const MAX_BLOCKS: usize = 60;

/// A function with value and derivative on `[0, inf)`, `value(0) = 0`.
pub trait Smooth: Sync {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

impl<T: Smooth + ?Sized> Smooth for &T {
    fn value(&self, x: f64) -> f64 {
        (**self).value(x)
    }
    fn derivative(&self, x: f64) -> f64 {
        (**self).derivative(x)
    }
}

/// Extra `log_nu` or `log_nu^(2)` factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogFactor {
    pub nu: u32,
    pub squared_last: bool,
}

/// `g(x) = x^p L(x^q) [log_nu or log_nu^(2)](x)` with `q` either 1 or `p`.
#[derive(Debug, Clone)]
pub struct MomentFunction {
    pub p: f64,
    pub svf: SlowlyVarying,
    /// Evaluate `L` at `x^p` instead of `x`.
    pub svf_of_power: bool,
    pub log_factor: Option<LogFactor>,
}

impl MomentFunction {
    pub fn power(p: f64) -> Self {
        MomentFunction { p, svf: SlowlyVarying::constant(), svf_of_power: false, log_factor: None }
    }

    /// `x^p log_nu(x)`.
    pub fn power_log_nu(p: f64, nu: u32) -> Self {
        Self::power(p).with_log_factor(LogFactor { nu, squared_last: false })
    }

    /// `x^p log_nu^(2)(x)`.
    pub fn power_log_nu_sq(p: f64, nu: u32) -> Self {
        Self::power(p).with_log_factor(LogFactor { nu, squared_last: true })
    }

    pub fn with_svf(mut self, svf: SlowlyVarying, of_power: bool) -> Self {
        self.svf = svf;
        self.svf_of_power = of_power;
        self
    }

    pub fn with_log_factor(mut self, f: LogFactor) -> Self {
        self.log_factor = Some(f);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0) || !self.p.is_finite() {
            return Err(Error::MomentFunction(format!("power must be positive, got {}", self.p)));
        }
        if let Some(f) = self.log_factor {
            if f.nu == 0 {
                return Err(Error::MomentFunction("log factor needs nu >= 1".into()));
            }
        }
        Ok(())
    }

    fn svf_arg(&self, x: f64) -> f64 {
        if self.svf_of_power {
            x.powf(self.p)
        } else {
            x
        }
    }

    /// Point beyond which the slowly varying factor is used unmodified.
    pub fn anchor(&self) -> f64 {
        match self.svf.anchor {
            Some(a) if self.svf_of_power => a.powf(1.0 / self.p),
            Some(a) => a,
            None => 0.0,
        }
    }

    /// Whether `g(x) / t(x)` grows without bound, checked on `x = 2^10..2^60`.
    pub fn dominates(&self, t: &dyn Smooth) -> bool {
        let ratios: Vec<f64> = (10..=60).step_by(5).map(|k| {
            let x = 2f64.powi(k);
            self.value(x) / t.value(x)
        }).collect();
        ratios.windows(2).all(|w| w[1] > w[0]) && ratios[ratios.len() - 1] > 1.5 * ratios[0]
    }
}

impl Smooth for MomentFunction {
    fn value(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let lf = match self.log_factor {
            None => 1.0,
            Some(LogFactor { nu, squared_last: false }) => log_nu(x, nu),
            Some(LogFactor { nu, squared_last: true }) => log_nu_sq(x, nu),
        };
        x.powf(self.p) * self.svf.eval(self.svf_arg(x)) * lf
    }

    fn derivative(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return if self.p > 1.0 { 0.0 } else { f64::INFINITY };
        }
        let q = if self.svf_of_power { self.p } else { 1.0 };
        let l_ratio = self.svf.derivative_ratio(self.svf_arg(x)).unwrap_or(0.0);
        let lf_ratio = match self.log_factor {
            None => 0.0,
            Some(LogFactor { nu, squared_last }) => log_nu_ratio(x, nu, squared_last),
        };
        self.value(x) / x * (self.p + q * l_ratio + lf_ratio)
    }
}

/// `g(t(x))`.
pub struct Composed<'a> {
    pub outer: &'a dyn Smooth,
    pub inner: &'a dyn Smooth,
}

impl Smooth for Composed<'_> {
    fn value(&self, x: f64) -> f64 {
        self.outer.value(self.inner.value(x))
    }
    fn derivative(&self, x: f64) -> f64 {
        self.outer.derivative(self.inner.value(x)) * self.inner.derivative(x)
    }
}

/// Result of an expectation that may diverge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    /// The expectation, or the partial value at `cutoff` when divergent.
    pub value: f64,
    pub divergent: bool,
    /// Where integration stopped.
    pub cutoff: f64,
}

impl Expectation {
    fn finite(value: f64, cutoff: f64) -> Self {
        Expectation { value, divergent: false, cutoff }
    }

    /// `value` when convergent, `+inf` otherwise.
    pub fn or_infinite(&self) -> f64 {
        if self.divergent {
            f64::INFINITY
        } else {
            self.value
        }
    }
}

fn kinks_in(tail: &TailFunction, lo: f64, hi: f64) -> Vec<f64> {
    tail.breakpoints().into_iter().filter(|&b| b > lo && b < hi).collect()
}

/// `E h(xi) 1(xi <= a) = int_0^a h'(x) (T(x) - T(a)) dx`.
pub fn lower_part(tail: &TailFunction, h: &dyn Smooth, a: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    if let Some(step) = tail.as_step() {
        return step.atoms().iter().filter(|(m, _)| *m <= a).map(|(m, w)| h.value(*m) * w).sum();
    }
    let ta = tail.eval(a);
    quad::integrate(|x| h.derivative(x) * (tail.eval(x) - ta), 0.0, a, QUAD_TOL, &kinks_in(tail, 0.0, a)).value
}

/// `E h(xi) 1(xi > a) = h(a) T(a) + int_a^inf h'(x) T(x) dx`.
pub fn upper_part(tail: &TailFunction, h: &dyn Smooth, a: f64) -> Expectation {
    let a = a.max(0.0);
    let ta = tail.eval(a);
    let head = if ta > 0.0 { h.value(a) * ta } else { 0.0 };
    if let Some(step) = tail.as_step() {
        let mut total = head;
        let mut pos = a;
        for (b, _) in step.breaks.iter().zip(&step.values) {
            if *b <= a {
                continue;
            }
            let t = tail.eval(pos);
            if t > 0.0 {
                total += t * (h.value(*b) - h.value(pos));
            }
            pos = *b;
        }
        let escape = tail.eval(pos);
        if escape > 0.0 {
            return Expectation { value: total, divergent: true, cutoff: pos };
        }
        return Expectation::finite(total, pos);
    }

    let mut total = head;
    let mut lo = a;
    let mut hi = if a < 1.0 { 1.0 } else { 2f64.powi(a.log2().floor() as i32 + 1) };
    let mut blocks: Vec<f64> = Vec::new();
    let support = tail.support_hint().unwrap_or(f64::INFINITY);
    let resolved = tail.resolved_to();
    loop {
        if tail.eval(lo) == 0.0 || lo >= support || lo >= resolved {
            return Expectation::finite(total, lo);
        }
        let b = quad::integrate(|x| h.derivative(x) * tail.eval(x), lo, hi, QUAD_TOL, &kinks_in(tail, lo, hi)).value;
        total += b;
        blocks.push(b);
        if b.abs() < BLOCK_STOP {
            return Expectation::finite(total, hi);
        }
        if blocks.len() >= MAX_BLOCKS {
            // A geometric tail of blocks still has a finite sum.
            let last = &blocks[blocks.len() - 6..];
            let r = last.windows(2).map(|w| w[1] / w[0]).fold(0.0_f64, f64::max);
            if last.iter().all(|&v| v > 0.0) && r < 0.95 {
                return Expectation::finite(total + b * r / (1.0 - r), f64::INFINITY);
            }
            return Expectation { value: total, divergent: true, cutoff: hi };
        }
        lo = hi;
        hi *= 2.0;
    }
}

/// `E h(xi)` through the decomposition
/// `E h(xi) 1(xi <= A) + h(A) P(xi > A) + int_A^inf h'(x) P(xi > x) dx`.
pub fn expectation_via_tail(tail: &TailFunction, h: &dyn Smooth, a: f64) -> Expectation {
    let lower = lower_part(tail, h, a);
    let mut upper = upper_part(tail, h, a);
    upper.value += lower;
    upper
}

/// `E g(|X|)` with the split point at the anchor of `g`.
pub fn moment_g(tail: &TailFunction, g: &MomentFunction) -> Expectation {
    expectation_via_tail(tail, g, g.anchor())
}

/// `E h(|X|)` for a cell law; atoms are summed directly.
pub fn cell_expectation(d: &DistSpec, h: &dyn Smooth) -> Expectation {
    if let Some(atoms) = d.atoms() {
        let v = atoms.iter().map(|(m, w)| h.value(*m) * w).sum();
        return Expectation::finite(v, d.max_magnitude());
    }
    expectation_via_tail(&d.tail(), h, 0.0)
}

/// Supremum over the scan of `sum_i a_{n,i} E h(|X_{n,i}|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentScan {
    pub sup: f64,
    pub argmax_n: usize,
    pub scan_n: usize,
    pub divergent: bool,
    /// Whether the row values keep growing toward the end of the scan.
    pub trend: Decision,
}

/// Bounded-ness of a row sequence: the running supremum at dyadic
/// checkpoints either plateaus or grows.
pub fn sup_trend(values: &[f64]) -> Decision {
    let n = values.len();
    let half = n / 2;
    let first = values[..half.max(1)].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let second = values[half.max(1)..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if second <= first {
        return Decision {
            verdict: gate::Verdict::Holds,
            rule: "plateau: supremum attained in the first half of the scan".into(),
            rate: None,
        };
    }
    let mut running = f64::NEG_INFINITY;
    let mut checkpoints = Vec::new();
    let mut next = 1;
    for (k, v) in values.iter().enumerate() {
        running = running.max(*v);
        if k + 1 == next {
            checkpoints.push(running);
            next *= 2;
        }
    }
    let increments: Vec<f64> = checkpoints.windows(2).map(|w| w[1] - w[0]).collect();
    gate::block_series(&increments)
}

fn moment_scan(arr: &ArraySpec, w: &WeightScheme, cfg: &ScanConfig, h: &dyn Smooth) -> Result<MomentScan> {
    let scan = scan_rows(arr, w, cfg, 1, |d| {
        let e = cell_expectation(d, h);
        vec![e.or_infinite()]
    })?;
    let values: Vec<f64> = scan.rows.iter().map(|r| r[0]).collect();
    let (mut sup, mut argmax) = (f64::NEG_INFINITY, 0);
    for (k, v) in values.iter().enumerate() {
        if *v > sup {
            sup = *v;
            argmax = k + 1;
        }
    }
    let divergent = sup.is_infinite();
    let trend = if divergent {
        Decision { verdict: gate::Verdict::Fails, rule: "a cell expectation diverges".into(), rate: None }
    } else {
        sup_trend(&values)
    };
    Ok(MomentScan { sup, argmax_n: argmax, scan_n: values.len(), divergent, trend })
}

/// `sup_n sum_i a_{n,i} E g(|X_{n,i}|)`.
pub fn bounded_moment_condition(arr: &ArraySpec, w: &WeightScheme, g: &MomentFunction, cfg: &ScanConfig) -> Result<MomentScan> {
    g.validate()?;
    moment_scan(arr, w, cfg, g)
}

/// Same supremum for `g` used as a de La Vallee Poussin witness for the
/// uniform integrability of `t(|X_{n,i}|)`; `g` must outgrow `t`.
pub fn dlvp_witness(
    arr: &ArraySpec,
    w: &WeightScheme,
    g: &MomentFunction,
    t: &dyn Smooth,
    cfg: &ScanConfig,
) -> Result<MomentScan> {
    g.validate()?;
    if !g.dominates(t) {
        return Err(Error::MomentFunction("g(x) / t(x) does not grow without bound".into()));
    }
    moment_scan(arr, w, cfg, g)
}

/// The identity transform `x`.
pub struct Identity;

impl Smooth for Identity {
    fn value(&self, x: f64) -> f64 {
        x.max(0.0)
    }
    fn derivative(&self, _x: f64) -> f64 {
        1.0
    }
}

/// `sup{x : t(x) <= level}` for nondecreasing `t`.
fn level_point(t: &dyn Smooth, level: f64) -> f64 {
    if t.value(0.0) > level {
        return 0.0;
    }
    let mut hi = 1.0;
    while t.value(hi) <= level {
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    let mut lo = hi / 2.0;
    if t.value(lo) > level {
        lo = 0.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t.value(mid) <= level {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    lo
}

/// `E t(|X|) 1(t(|X|) > level)` for nondecreasing `t`.
pub fn cell_truncated_excess(d: &DistSpec, t: &dyn Smooth, level: f64) -> f64 {
    if let Some(atoms) = d.atoms() {
        return atoms
            .iter()
            .map(|(m, w)| {
                let v = t.value(*m);
                if v > level {
                    v * w
                } else {
                    0.0
                }
            })
            .sum();
    }
    let x = level_point(t, level);
    upper_part(&d.tail(), t, x).or_infinite()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UiReport {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub scan_n: usize,
    /// Grid points up to this level are unaffected by the finite scan.
    pub resolved_level: f64,
    pub decision: Decision,
}

/// `sup_n sum_i a_{n,i} E(t(|X_{n,i}|) 1(t(|X_{n,i}|) > a))` for each grid `a`.
pub fn ui_check(arr: &ArraySpec, w: &WeightScheme, t: &dyn Smooth, grid: &[f64], cfg: &ScanConfig) -> Result<UiReport> {
    let scan = scan_rows(arr, w, cfg, grid.len(), |d| grid.iter().map(|&a| cell_truncated_excess(d, t, a)).collect())?;
    let values = scan.sup();
    let resolved_level = t.value(scan.resolved_to);
    let (g, v): (Vec<f64>, Vec<f64>) =
        grid.iter().zip(&values).filter(|(a, _)| **a < resolved_level).map(|(a, v)| (*a, *v)).unzip();
    let decision = gate::decay(&g, &v);
    Ok(UiReport { grid: grid.to_vec(), values, scan_n: scan.n_rows(), resolved_level, decision })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition32Report {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub decision: Decision,
}

/// `x P(|X| > x^{1/p} L~(x)^{1/p})` per grid point, with a decay verdict on
/// the part of the grid the tail resolves.
pub fn condition_3_2(x_tail: &TailFunction, p: f64, ltilde: &SlowlyVarying, grid: &[f64]) -> Result<Condition32Report> {
    let mut values = Vec::with_capacity(grid.len());
    let mut resolved = (Vec::new(), Vec::new());
    for &x in grid {
        let level = x.powf(1.0 / p) * ltilde.eval(x).powf(1.0 / p);
        let v = x * x_tail.eval(level);
        values.push(v);
        if level < x_tail.resolved_to() {
            resolved.0.push(x);
            resolved.1.push(v);
        }
    }
    let decision = gate::decay(&resolved.0, &resolved.1);
    Ok(Condition32Report { grid: grid.to_vec(), values, decision })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn uniform01() -> TailFunction {
        TailFunction::analytic(Arc::new(|x: f64| (1.0 - x).max(0.0)), vec![1.0], Some(1.0))
    }

    #[test]
    fn uniform_second_moment() {
        let e = expectation_via_tail(&uniform01(), &MomentFunction::power(2.0), 0.0);
        assert!(!e.divergent);
        assert!((e.value - 1.0 / 3.0).abs() < 1e-9);
        let e2 = expectation_via_tail(&uniform01(), &MomentFunction::power(2.0), 0.4);
        assert!((e2.value - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn point_mass_at_one() {
        let t = DistSpec::SymmetricPm1.tail();
        for p in [0.5, 1.0, 3.0] {
            assert!((expectation_via_tail(&t, &MomentFunction::power(p), 0.0).value - 1.0).abs() < 1e-15);
        }
        let g = MomentFunction::power_log_nu_sq(1.5, 3);
        assert_eq!(moment_g(&t, &g).value, 1.0);
    }

    #[test]
    fn two_point_cell_with_log() {
        // magnitude 2^3 / 3 with probability one, g = x lg x
        let d = DistSpec::two_point(8.0 / 3.0, 1.0);
        let e = moment_g(&d.tail(), &MomentFunction::power_log_nu(1.0, 1));
        let want = 8.0 / 3.0 * (3.0 - 3f64.log2());
        assert!((e.value - want).abs() < 1e-12, "{} vs {want}", e.value);
        assert!((want - 3.774).abs() < 1e-3);
    }

    #[test]
    fn pareto_moments() {
        let t = TailFunction::pareto(3.0, 1.0).unwrap();
        let e = moment_g(&t, &MomentFunction::power(2.0));
        assert!((e.value - 3.0).abs() < 1e-8, "{e:?}");
        let h = TailFunction::pareto(1.0, 1.0).unwrap();
        assert!(moment_g(&h, &MomentFunction::power(1.0)).divergent);
        // Slow geometric blocks still converge: E|X| = alpha/(alpha-1) = 3.
        let slow = TailFunction::pareto(1.5, 1.0).unwrap();
        let e = moment_g(&slow, &MomentFunction::power(1.0));
        assert!(!e.divergent && (e.value - 3.0).abs() < 1e-7, "{e:?}");
    }

    #[test]
    fn a_invariance_on_pareto() {
        let t = TailFunction::pareto(2.5, 1.0).unwrap();
        let g = MomentFunction::power(1.0);
        let a = expectation_via_tail(&t, &g, 0.0).value;
        let b = expectation_via_tail(&t, &g, 1.0).value;
        let c = expectation_via_tail(&t, &g, 7.3).value;
        assert!((a - b).abs() < 1e-9 && (a - c).abs() < 1e-9, "{a} {b} {c}");
    }

    #[test]
    fn truncated_excess_empties_for_bounded_cells() {
        assert_eq!(cell_truncated_excess(&DistSpec::SymmetricPm1, &Identity, 2.0), 0.0);
        assert_eq!(cell_truncated_excess(&DistSpec::SymmetricPm1, &Identity, 0.5), 1.0);
        let p = DistSpec::ParetoTail { alpha: 3.0, cutoff: 1.0 };
        // E|X| 1(|X| > 10) = 10 * 1e-3 + int_10^inf x^-3 dx = 0.01 + 0.005
        assert!((cell_truncated_excess(&p, &Identity, 10.0) - 0.015).abs() < 1e-9);
    }

    #[test]
    fn condition_3_2_closed_forms() {
        let grid: Vec<f64> = (0..=40).map(|j| 2f64.powi(j)).collect();
        let p = 0.5;
        let r = condition_3_2(&TailFunction::pareto(2.0 * p, 1.0).unwrap(), p, &SlowlyVarying::constant(), &grid).unwrap();
        assert_eq!(r.decision.verdict, gate::Verdict::Holds);
        assert!((r.values[10] - 1.0 / 1024.0).abs() < 1e-15);
        let b = condition_3_2(&TailFunction::pareto(p, 1.0).unwrap(), p, &SlowlyVarying::constant(), &grid).unwrap();
        assert!(b.values[5..].iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert_eq!(b.decision.verdict, gate::Verdict::Fails);
    }

    #[test]
    fn dlvp_rejects_linear_g() {
        let arr = ArraySpec::identical(DistSpec::SymmetricPm1, crate::model::RowLength::Linear).unwrap();
        let r = dlvp_witness(&arr, &WeightScheme::Uniform, &MomentFunction::power(1.0), &Identity, &ScanConfig::with_n_sup(10));
        assert!(r.is_err());
    }
}

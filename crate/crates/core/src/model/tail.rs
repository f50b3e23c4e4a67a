//! Tail functions `x -> P(|X| > x)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailKind {
    Analytic,
    Piecewise,
    Empirical,
}

pub type TailFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Right-continuous step function. `values[j]` holds on
/// `[breaks[j], breaks[j+1])`, `head` holds below `breaks[0]`, and the last
/// value is the mass sitting at infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTail {
    pub breaks: Vec<f64>,
    pub values: Vec<f64>,
    pub head: f64,
}

impl StepTail {
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.breaks.partition_point(|&b| b <= x);
        if k == 0 {
            self.head
        } else {
            self.values[k - 1]
        }
    }

    /// Jumps as `(location, mass)` pairs; the mass at infinity is excluded.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        let mut prev = self.head;
        let mut out = Vec::with_capacity(self.breaks.len());
        for (b, v) in self.breaks.iter().zip(&self.values) {
            if prev > *v {
                out.push((*b, prev - v));
            }
            prev = *v;
        }
        out
    }

    pub fn mass_at_infinity(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.head)
    }
}

#[derive(Clone)]
enum Repr {
    Step(StepTail),
    Pareto { alpha: f64, cutoff: f64 },
    Closure { f: TailFn, kinks: Vec<f64> },
}

/// `x -> P(|X| > x)`: nonincreasing, right-continuous, 1 for `x < 0`.
#[derive(Clone)]
pub struct TailFunction {
    repr: Repr,
    kind: TailKind,
    support_hint: Option<f64>,
    resolved_to: f64,
}

impl fmt::Debug for TailFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let repr = match &self.repr {
            Repr::Step(s) => format!("step({} breaks)", s.breaks.len()),
            Repr::Pareto { alpha, cutoff } => format!("pareto(alpha={alpha}, cutoff={cutoff})"),
            Repr::Closure { .. } => "closure".to_string(),
        };
        f.debug_struct("TailFunction")
            .field("repr", &repr)
            .field("kind", &self.kind)
            .field("support_hint", &self.support_hint)
            .field("resolved_to", &self.resolved_to)
            .finish()
    }
}

impl TailFunction {
    /// Tail of a variable with `P(|X| = m) = p` for each `(m, p)`. Mass not
    /// accounted for (`1 - sum p`) sits at infinity.
    pub fn atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        Self::atoms_with_kind(atoms, TailKind::Piecewise)
    }

    fn atoms_with_kind(atoms: &[(f64, f64)], kind: TailKind) -> Result<Self> {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for &(m, p) in atoms {
            if !(m >= 0.0) || !m.is_finite() {
                return Err(Error::InvalidDist(format!("atom location {m} must be finite and >= 0")));
            }
            if !(p >= 0.0) {
                return Err(Error::InvalidDist(format!("atom mass {p} must be >= 0")));
            }
            if p > 0.0 {
                pts.push((m, p));
            }
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pts.iter().map(|a| a.1).sum();
        if total > 1.0 + 1e-9 {
            return Err(Error::InvalidDist(format!("atom masses sum to {total} > 1")));
        }
        let mut breaks: Vec<f64> = Vec::with_capacity(pts.len());
        let mut masses: Vec<f64> = Vec::with_capacity(pts.len());
        for (m, p) in pts {
            if breaks.last() == Some(&m) {
                *masses.last_mut().unwrap() += p;
            } else {
                breaks.push(m);
                masses.push(p);
            }
        }
        // Suffix sums give the tail strictly above each break.
        let mut values = vec![0.0; breaks.len()];
        let mut acc = (1.0 - total).max(0.0);
        for j in (0..breaks.len()).rev() {
            values[j] = acc.min(1.0);
            acc += masses[j];
        }
        let support = breaks.last().copied();
        Ok(TailFunction {
            repr: Repr::Step(StepTail { breaks, values, head: 1.0 }),
            kind,
            support_hint: support,
            resolved_to: f64::INFINITY,
        })
    }

    /// Empirical tail of `|samples|`, each sample carrying mass `1/N`.
    pub fn empirical(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidDist("empirical tail needs at least one sample".into()));
        }
        let w = 1.0 / samples.len() as f64;
        let atoms: Vec<(f64, f64)> = samples.iter().map(|s| (s.abs(), w)).collect();
        let mut t = Self::atoms_with_kind(&atoms, TailKind::Empirical)?;
        // Rounding in the mass sum must not leave a phantom atom at infinity.
        if let Repr::Step(s) = &mut t.repr {
            if let Some(v) = s.values.last_mut() {
                *v = 0.0;
            }
        }
        Ok(t)
    }

    /// General right-continuous step tail. `values` must be nonincreasing in
    /// `[0, 1]` and `breaks` strictly increasing and nonnegative.
    pub fn step(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() != values.len() {
            return Err(Error::LengthMismatch { left: breaks.len(), right: values.len() });
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) || breaks.first().is_some_and(|b| *b < 0.0) {
            return Err(Error::InvalidDist("step breaks must be nonnegative and strictly increasing".into()));
        }
        let mut prev = 1.0;
        for &v in &values {
            if !(0.0..=prev).contains(&v) {
                return Err(Error::InvalidDist(format!("step values must be nonincreasing in [0,1], got {v}")));
            }
            prev = v;
        }
        let support = values.iter().position(|v| *v == 0.0).map(|k| breaks[k]);
        Ok(TailFunction {
            repr: Repr::Step(StepTail { breaks, values, head: 1.0 }),
            kind: TailKind::Piecewise,
            support_hint: support,
            resolved_to: f64::INFINITY,
        })
    }

    /// `P(|X| > x) = min(1, (x / cutoff)^-alpha)`.
    pub fn pareto(alpha: f64, cutoff: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(cutoff > 0.0) || !alpha.is_finite() || !cutoff.is_finite() {
            return Err(Error::InvalidDist(format!("pareto needs alpha > 0 and cutoff > 0, got {alpha}, {cutoff}")));
        }
        Ok(TailFunction {
            repr: Repr::Pareto { alpha, cutoff },
            kind: TailKind::Analytic,
            support_hint: None,
            resolved_to: f64::INFINITY,
        })
    }

    /// Arbitrary tail given by a closure, evaluated for `x >= 0` only.
    /// `kinks` are points where the closure is not smooth (used as
    /// quadrature breakpoints).
    pub fn analytic(f: TailFn, kinks: Vec<f64>, support_hint: Option<f64>) -> Self {
        TailFunction {
            repr: Repr::Closure { f, kinks },
            kind: TailKind::Analytic,
            support_hint,
            resolved_to: f64::INFINITY,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match &self.repr {
            Repr::Step(s) => s.eval(x),
            Repr::Pareto { alpha, cutoff } => {
                if x <= *cutoff {
                    1.0
                } else {
                    (x / cutoff).powf(-alpha)
                }
            }
            Repr::Closure { f, .. } => f(x),
        }
    }

    pub fn kind(&self) -> TailKind {
        self.kind
    }

    /// Right end of the support, when known to be finite.
    pub fn support_hint(&self) -> Option<f64> {
        self.support_hint
    }

    /// Largest `x` at which `eval` is trustworthy. Functionals computed by
    /// scanning finitely many rows are only resolved up to the largest
    /// magnitude in the scanned rows; beyond it they may read 0 spuriously.
    pub fn resolved_to(&self) -> f64 {
        self.resolved_to
    }

    pub fn with_resolved_to(mut self, x: f64) -> Self {
        self.resolved_to = x;
        self
    }

    pub fn with_kind(mut self, kind: TailKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn as_step(&self) -> Option<&StepTail> {
        match &self.repr {
            Repr::Step(s) => Some(s),
            _ => None,
        }
    }

    pub fn pareto_params(&self) -> Option<(f64, f64)> {
        match &self.repr {
            Repr::Pareto { alpha, cutoff } => Some((*alpha, *cutoff)),
            _ => None,
        }
    }

    /// Points where the tail jumps or has a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Step(s) => s.breaks.clone(),
            Repr::Pareto { cutoff, .. } => vec![*cutoff],
            Repr::Closure { kinks, .. } => kinks.clone(),
        }
    }

    /// Mass that escapes to infinity, `lim_{x->inf} P(|X| > x)`, when it can
    /// be read off exactly.
    pub fn mass_at_infinity(&self) -> Option<f64> {
        match &self.repr {
            Repr::Step(s) => Some(s.mass_at_infinity()),
            Repr::Pareto { .. } => Some(0.0),
            Repr::Closure { .. } => None,
        }
    }

    /// Checks monotonicity and range on a geometric grid.
    pub fn check_shape(&self, lo: f64, hi: f64, points: usize) -> Result<()> {
        let mut prev = self.eval(-1.0);
        if prev != 1.0 {
            return Err(Error::InvalidDist(format!("tail at x < 0 is {prev}, not 1")));
        }
        let grid = std::iter::once(0.0).chain(geometric_grid(lo, hi, points));
        for x in grid {
            let v = self.eval(x);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidDist(format!("tail({x}) = {v} outside [0,1]")));
            }
            if v > prev + 1e-12 {
                return Err(Error::InvalidDist(format!("tail increases at x = {x}: {prev} -> {v}")));
            }
            prev = v;
        }
        Ok(())
    }
}

/// `points` values spaced geometrically from `lo` to `hi` inclusive.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> impl Iterator<Item = f64> {
    let (l, h) = (lo.ln(), hi.ln());
    let steps = points.max(2) - 1;
    (0..=steps).map(move |k| (l + (h - l) * k as f64 / steps as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_tail_is_right_continuous() {
        let t = TailFunction::atoms(&[(1.0, 0.5), (3.0, 0.25), (0.0, 0.25)]).unwrap();
        assert_eq!(t.eval(-0.1), 1.0);
        assert_eq!(t.eval(0.0), 0.75);
        assert_eq!(t.eval(0.99), 0.75);
        assert_eq!(t.eval(1.0), 0.25);
        assert_eq!(t.eval(3.0), 0.0);
        assert_eq!(t.support_hint(), Some(3.0));
        let atoms = t.as_step().unwrap().atoms();
        assert_eq!(atoms, vec![(0.0, 0.25), (1.0, 0.5), (3.0, 0.25)]);
    }

    #[test]
    fn missing_mass_sits_at_infinity() {
        let t = TailFunction::atoms(&[(2.0, 0.5)]).unwrap();
        assert_eq!(t.eval(1e300), 0.5);
        assert_eq!(t.mass_at_infinity(), Some(0.5));
    }

    #[test]
    fn pareto_tail() {
        let t = TailFunction::pareto(2.0, 1.0).unwrap();
        assert_eq!(t.eval(0.5), 1.0);
        assert!((t.eval(4.0) - 1.0 / 16.0).abs() < 1e-15);
        t.check_shape(1e-3, 1e6, 200).unwrap();
    }

    #[test]
    fn empirical_tail() {
        let t = TailFunction::empirical(&[-1.0, 2.0, 0.5, -2.0]).unwrap();
        assert_eq!(t.kind(), TailKind::Empirical);
        assert_eq!(t.eval(0.4), 1.0);
        assert_eq!(t.eval(0.5), 0.75);
        assert_eq!(t.eval(1.5), 0.5);
        assert_eq!(t.eval(2.0), 0.0);
    }

    #[test]
    fn rejects_bad_steps() {
        assert!(TailFunction::step(vec![1.0, 2.0], vec![0.5, 0.7]).is_err());
        assert!(TailFunction::step(vec![2.0, 1.0], vec![0.5, 0.2]).is_err());
        assert!(TailFunction::atoms(&[(1.0, 0.7), (2.0, 0.7)]).is_err());
    }
}

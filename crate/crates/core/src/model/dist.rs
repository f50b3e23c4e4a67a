//! Marginal distributions of single array cells.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::tail::TailFunction;

pub type QuantileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A user-supplied marginal. `quantile` maps `u in (0,1)` to a signed value
/// and is required for sampling; it must be nondecreasing.
#[derive(Clone)]
pub struct CustomDist {
    pub label: String,
    pub tail: TailFunction,
    pub quantile: Option<QuantileFn>,
    pub mean_zero: bool,
    pub symmetric: bool,
}

impl fmt::Debug for CustomDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDist")
            .field("label", &self.label)
            .field("tail", &self.tail)
            .field("has_quantile", &self.quantile.is_some())
            .field("mean_zero", &self.mean_zero)
            .field("symmetric", &self.symmetric)
            .finish()
    }
}

#[derive(Debug, Clone)]
pub enum DistSpec {
    /// Point mass at 0.
    Zero,
    /// +-1 with probability 1/2 each.
    SymmetricPm1,
    /// +-magnitude with probability prob/2 each, 0 otherwise.
    SymmetricTwoPoint { magnitude: f64, prob: f64 },
    /// Symmetric sign times a Pareto magnitude with `P(|X| > x) = (x/cutoff)^-alpha`.
    ParetoTail { alpha: f64, cutoff: f64 },
    Custom(CustomDist),
}

impl DistSpec {
    pub fn two_point(magnitude: f64, prob: f64) -> Self {
        DistSpec::SymmetricTwoPoint { magnitude, prob }
    }

    /// Symmetric law whose magnitude `|X|` has the given atoms; masses must
    /// sum to 1.
    pub fn symmetric_atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDist(format!("atom masses sum to {total}, not 1")));
        }
        let tail = TailFunction::atoms(atoms)?;
        let mut sorted: Vec<(f64, f64)> = atoms.iter().copied().filter(|a| a.1 > 0.0).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cum = Vec::with_capacity(sorted.len());
        let mut acc = 0.0;
        for (m, p) in &sorted {
            acc += p;
            cum.push((*m, acc));
        }
        let magnitude = move |v: f64| cum.iter().find(|(_, c)| *c >= v).or(cum.last()).map_or(0.0, |a| a.0);
        let quantile: QuantileFn =
            Arc::new(move |u: f64| if u < 0.5 { -magnitude(1.0 - 2.0 * u) } else { magnitude(2.0 * u - 1.0) });
        Ok(DistSpec::Custom(CustomDist {
            label: format!("symmetric atoms {atoms:?}"),
            tail,
            quantile: Some(quantile),
            mean_zero: true,
            symmetric: true,
        }))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DistSpec::Zero | DistSpec::SymmetricPm1 => Ok(()),
            DistSpec::SymmetricTwoPoint { magnitude, prob } => {
                if !(*magnitude >= 0.0) || !magnitude.is_finite() {
                    return Err(Error::InvalidDist(format!("two-point magnitude {magnitude} must be finite and >= 0")));
                }
                if !(0.0..=1.0).contains(prob) {
                    return Err(Error::InvalidDist(format!("two-point probability {prob} outside [0,1]")));
                }
                Ok(())
            }
            DistSpec::ParetoTail { alpha, cutoff } => TailFunction::pareto(*alpha, *cutoff).map(|_| ()),
            DistSpec::Custom(c) => {
                if c.symmetric && !c.mean_zero {
                    if let Some(s) = c.tail.support_hint() {
                        if s.is_finite() {
                            return Err(Error::InvalidDist(format!(
                                "custom `{}` is symmetric with bounded support but not flagged mean-zero",
                                c.label
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Tail function of `|X|`.
    pub fn tail(&self) -> TailFunction {
        match self {
            DistSpec::Zero => TailFunction::atoms(&[(0.0, 1.0)]).expect("valid atoms"),
            DistSpec::SymmetricPm1 => TailFunction::atoms(&[(1.0, 1.0)]).expect("valid atoms"),
            DistSpec::SymmetricTwoPoint { magnitude, prob } => {
                TailFunction::atoms(&[(*magnitude, *prob), (0.0, 1.0 - prob)]).expect("validated two-point")
            }
            DistSpec::ParetoTail { alpha, cutoff } => TailFunction::pareto(*alpha, *cutoff).expect("validated pareto"),
            DistSpec::Custom(c) => c.tail.clone(),
        }
    }

    /// `P(|X| > x)` without materializing a tail object.
    pub fn tail_at(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match self {
            DistSpec::Zero => 0.0,
            DistSpec::SymmetricPm1 => f64::from(x < 1.0),
            DistSpec::SymmetricTwoPoint { magnitude, prob } => {
                if x < *magnitude {
                    *prob
                } else {
                    0.0
                }
            }
            DistSpec::ParetoTail { alpha, cutoff } => {
                if x <= *cutoff {
                    1.0
                } else {
                    (x / cutoff).powf(-alpha)
                }
            }
            DistSpec::Custom(c) => c.tail.eval(x),
        }
    }

    /// Atoms of `|X|` as `(magnitude, mass)` pairs, when `|X|` is discrete.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            DistSpec::Zero => Some(vec![(0.0, 1.0)]),
            DistSpec::SymmetricPm1 => Some(vec![(1.0, 1.0)]),
            DistSpec::SymmetricTwoPoint { magnitude, prob } => {
                let mut v = Vec::with_capacity(2);
                if *prob < 1.0 {
                    v.push((0.0, 1.0 - prob));
                }
                if *prob > 0.0 {
                    v.push((*magnitude, *prob));
                }
                Some(v)
            }
            DistSpec::ParetoTail { .. } => None,
            DistSpec::Custom(c) => c.tail.as_step().map(|s| s.atoms()),
        }
    }

    /// Essential supremum of `|X|` (infinite for unbounded laws).
    pub fn max_magnitude(&self) -> f64 {
        match self {
            DistSpec::Zero => 0.0,
            DistSpec::SymmetricPm1 => 1.0,
            DistSpec::SymmetricTwoPoint { magnitude, prob } => {
                if *prob > 0.0 {
                    *magnitude
                } else {
                    0.0
                }
            }
            DistSpec::ParetoTail { .. } => f64::INFINITY,
            DistSpec::Custom(c) => c.tail.support_hint().unwrap_or(f64::INFINITY),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            DistSpec::Custom(c) => c.symmetric,
            _ => true,
        }
    }

    pub fn is_mean_zero(&self) -> bool {
        match self {
            DistSpec::Custom(c) => c.mean_zero,
            DistSpec::ParetoTail { alpha, .. } => *alpha > 1.0,
            _ => true,
        }
    }

    /// `E X 1(|X| <= level)`. Exact for symmetric laws (zero); custom
    /// asymmetric laws need a quantile and are integrated numerically.
    pub fn truncated_mean(&self, level: f64) -> Result<f64> {
        if self.is_symmetric() {
            return Ok(0.0);
        }
        let DistSpec::Custom(c) = self else { unreachable!("built-in laws are symmetric") };
        let q = c.quantile.as_ref().ok_or(Error::MissingQuantile { n: 0, i: 0 })?;
        let r = crate::quad::integrate(
            |u| {
                let x = q(u);
                if x.abs() <= level {
                    x
                } else {
                    0.0
                }
            },
            0.0,
            1.0,
            1e-10,
            &[],
        );
        Ok(r.value)
    }

    /// `E X^(a)` for the clamp `X^(a) = max(-a, min(a, X))`.
    pub fn clamped_mean(&self, a: f64) -> Result<f64> {
        if self.is_symmetric() {
            return Ok(0.0);
        }
        let DistSpec::Custom(c) = self else { unreachable!("built-in laws are symmetric") };
        let q = c.quantile.as_ref().ok_or(Error::MissingQuantile { n: 0, i: 0 })?;
        Ok(crate::quad::integrate(|u| q(u).clamp(-a, a), 0.0, 1.0, 1e-10, &[]).value)
    }

    /// `E (X^(a))^2 = E min(|X|, a)^2 = int_0^a 2x P(|X| > x) dx`.
    pub fn clamped_second_moment(&self, a: f64) -> f64 {
        if let Some(atoms) = self.atoms() {
            return atoms.iter().map(|(m, p)| m.min(a).powi(2) * p).sum();
        }
        let t = self.tail();
        let kinks: Vec<f64> = t.breakpoints().into_iter().filter(|&b| b > 0.0 && b < a).collect();
        crate::quad::integrate(|x| 2.0 * x * t.eval(x), 0.0, a, 1e-12, &kinks).value
    }

    /// Signed quantile at `u in (0,1)`; nondecreasing in `u`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        Ok(match self {
            DistSpec::Zero => 0.0,
            DistSpec::SymmetricPm1 => {
                if u < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            DistSpec::SymmetricTwoPoint { magnitude, prob } => {
                let h = 0.5 * prob;
                if u < h {
                    -magnitude
                } else if u >= 1.0 - h {
                    *magnitude
                } else {
                    0.0
                }
            }
            DistSpec::ParetoTail { alpha, cutoff } => {
                if u < 0.5 {
                    -cutoff * (2.0 * u).powf(-1.0 / alpha)
                } else {
                    cutoff * (2.0 * (1.0 - u)).powf(-1.0 / alpha)
                }
            }
            DistSpec::Custom(c) => match &c.quantile {
                Some(q) => q(u),
                None => return Err(Error::MissingQuantile { n: 0, i: 0 }),
            },
        })
    }

    pub fn can_sample(&self) -> bool {
        !matches!(self, DistSpec::Custom(CustomDist { quantile: None, .. }))
    }

    /// Structural equality; custom laws compare by identity of their tail
    /// and quantile closures plus label.
    pub fn same_as(&self, other: &DistSpec) -> bool {
        match (self, other) {
            (DistSpec::Zero, DistSpec::Zero) | (DistSpec::SymmetricPm1, DistSpec::SymmetricPm1) => true,
            (
                DistSpec::SymmetricTwoPoint { magnitude: a, prob: p },
                DistSpec::SymmetricTwoPoint { magnitude: b, prob: q },
            ) => a.to_bits() == b.to_bits() && p.to_bits() == q.to_bits(),
            (DistSpec::ParetoTail { alpha: a, cutoff: c }, DistSpec::ParetoTail { alpha: b, cutoff: d }) => {
                a.to_bits() == b.to_bits() && c.to_bits() == d.to_bits()
            }
            (DistSpec::Custom(a), DistSpec::Custom(b)) => {
                a.label == b.label
                    && match (&a.quantile, &b.quantile) {
                        (Some(x), Some(y)) => Arc::ptr_eq(x, y),
                        (None, None) => true,
                        _ => false,
                    }
            }
            _ => false,
        }
    }

    /// Hashable identity for memoizing per-law computations; `None` for
    /// custom laws.
    pub fn key(&self) -> Option<DistKey> {
        match self {
            DistSpec::Zero => Some(DistKey(0, 0, 0)),
            DistSpec::SymmetricPm1 => Some(DistKey(1, 0, 0)),
            DistSpec::SymmetricTwoPoint { magnitude, prob } => Some(DistKey(2, magnitude.to_bits(), prob.to_bits())),
            DistSpec::ParetoTail { alpha, cutoff } => Some(DistKey(3, alpha.to_bits(), cutoff.to_bits())),
            DistSpec::Custom(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DistKey(u8, u64, u64);

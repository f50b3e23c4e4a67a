//! Normalizing sequences `b_n`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::svf::SlowlyVarying;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SvfForm {
    /// `b_n = n^{1/p} L~(n^{1/p})`.
    Composed,
    /// `b_n = n^{1/p} L~(n)^{1/p}`.
    Root,
}

#[derive(Clone)]
pub enum NormalizingSequence {
    /// `b_n = n^{1/p}`.
    Power { p: f64 },
    PowerSvf { p: f64, svf: SlowlyVarying, form: SvfForm },
    /// `b_1, ..., b_N`.
    Explicit(Vec<f64>),
    Custom { label: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl fmt::Debug for NormalizingSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl NormalizingSequence {
    pub fn power(p: f64) -> Self {
        NormalizingSequence::Power { p }
    }

    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        NormalizingSequence::Custom { label: label.into(), f: Arc::new(f) }
    }

    /// Short description of the closed form, if any.
    pub fn tag(&self) -> String {
        match self {
            NormalizingSequence::Power { p } => format!("n^(1/{p})"),
            NormalizingSequence::PowerSvf { p, svf, form: SvfForm::Composed } => {
                format!("n^(1/{p}) L~(n^(1/{p})) with L = {:?}", svf.family)
            }
            NormalizingSequence::PowerSvf { p, svf, form: SvfForm::Root } => {
                format!("n^(1/{p}) L~(n)^(1/{p}) with L = {:?}", svf.family)
            }
            NormalizingSequence::Explicit(v) => format!("explicit ({} terms)", v.len()),
            NormalizingSequence::Custom { label, .. } => label.clone(),
        }
    }

    /// Number of available terms for tabulated sequences.
    pub fn declared_len(&self) -> Option<usize> {
        match self {
            NormalizingSequence::Explicit(v) => Some(v.len()),
            _ => None,
        }
    }

    /// `b_n`, with `b_0 = 0`.
    pub fn b(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Ok(0.0);
        }
        let v = match self {
            NormalizingSequence::Explicit(v) => *v.get(n - 1).ok_or(Error::RowOutOfRange { n, max: v.len() })?,
            _ => self.eval(n as f64)?,
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Spec(format!("b_{n} = {v} is not a positive finite number")));
        }
        Ok(v)
    }

    /// The closed form at a real argument `t > 0`.
    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(match self {
            NormalizingSequence::Power { p } => t.powf(1.0 / p),
            NormalizingSequence::PowerSvf { p, svf, form } => {
                let r = t.powf(1.0 / p);
                match form {
                    SvfForm::Composed => r * svf.conjugate_eval(r)?,
                    SvfForm::Root => r * svf.conjugate_eval(t)?.powf(1.0 / p),
                }
            }
            NormalizingSequence::Custom { f, .. } => f(t),
            NormalizingSequence::Explicit(v) => {
                let n = t.round() as usize;
                if n == 0 {
                    0.0
                } else {
                    *v.get(n - 1).ok_or(Error::RowOutOfRange { n, max: v.len() })?
                }
            }
        })
    }

    /// `b_1..=b_n_max`, failing if the sequence decreases anywhere.
    pub fn nondecreasing_prefix(&self, n_max: usize) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(n_max);
        let mut prev = 0.0;
        for n in 1..=n_max {
            let v = self.b(n)?;
            if v < prev {
                return Err(Error::Spec(format!("b is not nondecreasing: b_{} = {prev} > b_{n} = {v}", n - 1)));
            }
            out.push(v);
            prev = v;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_and_convention() {
        let b = NormalizingSequence::power(0.5);
        assert_eq!(b.b(0).unwrap(), 0.0);
        assert_eq!(b.b(3).unwrap(), 9.0);
    }

    #[test]
    fn svf_forms() {
        let l = SlowlyVarying::log_power(1.0);
        let c = NormalizingSequence::PowerSvf { p: 1.0, svf: l.clone(), form: SvfForm::Composed };
        assert!((c.b(1024).unwrap() - 102.4).abs() < 1e-12);
        let r = NormalizingSequence::PowerSvf { p: 0.5, svf: l, form: SvfForm::Root };
        // 16^2 * (1/4)^2
        assert!((r.b(16).unwrap() - 16.0).abs() < 1e-12);
    }

    #[test]
    fn monotonicity_checked() {
        let b = NormalizingSequence::Explicit(vec![1.0, 3.0, 2.0]);
        assert!(b.nondecreasing_prefix(3).is_err());
        assert!(b.b(4).is_err());
        assert_eq!(b.nondecreasing_prefix(2).unwrap(), vec![1.0, 3.0]);
    }
}

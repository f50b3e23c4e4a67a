//! Loading arrays, weights and normalizing sequences from JSON documents.
//!
//! A document either names a fixture generator or lists cells:
//!
//! ```json
//! { "generator": "x2m-example", "p": 0.5 }
//! { "rows": 2, "cells": [{"n": 1, "i": 1, "dist": {"kind": "pm1"}}, ...],
//!   "weights": {"kind": "uniform"} }
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::checks::{Check, Subject};
use crate::error::{Error, Result};
use crate::fixtures::{self, Params};
use crate::gate::Verdict;
use crate::model::array::rows_from_map;
use crate::model::{
    ArraySpec, CoefficientSource, DistSpec, NormalizerFlavor, NormalizingSequence, RowDependence, RowLength, ScanConfig,
    SvfForm, WeightScheme,
};
use crate::svf::SlowlyVarying;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DistDoc {
    Zero,
    Pm1,
    TwoPoint { magnitude: f64, prob: f64 },
    Pareto { alpha: f64, cutoff: f64 },
    /// Symmetric law with `|X|` given by `[magnitude, mass]` pairs.
    Atoms { atoms: Vec<(f64, f64)> },
}

impl DistDoc {
    pub fn build(&self) -> Result<DistSpec> {
        let d = match self {
            DistDoc::Zero => DistSpec::Zero,
            DistDoc::Pm1 => DistSpec::SymmetricPm1,
            DistDoc::TwoPoint { magnitude, prob } => DistSpec::two_point(*magnitude, *prob),
            DistDoc::Pareto { alpha, cutoff } => DistSpec::ParetoTail { alpha: *alpha, cutoff: *cutoff },
            DistDoc::Atoms { atoms } => DistSpec::symmetric_atoms(atoms)?,
        };
        d.validate()?;
        Ok(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellDoc {
    pub n: usize,
    pub i: usize,
    pub dist: DistDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowLengthDoc {
    Linear,
    Constant(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdenticalDoc {
    pub dist: DistDoc,
    pub row_length: RowLengthDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightCellDoc {
    pub n: usize,
    pub i: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightsDoc {
    Uniform,
    /// `a_{n,i}` listed row by row or as sparse cells (missing cells are 0).
    Explicit {
        #[serde(default)]
        rows: Vec<Vec<f64>>,
        #[serde(default)]
        cells: Vec<WeightCellDoc>,
    },
    /// Coefficients `c_{n,i}` normalized by `A_n`.
    CNormalized {
        #[serde(default = "default_flavor")]
        flavor: NormalizerFlavor,
        #[serde(default)]
        rows: Vec<Vec<f64>>,
        #[serde(default)]
        cells: Vec<WeightCellDoc>,
    },
}

fn default_flavor() -> NormalizerFlavor {
    NormalizerFlavor::Sum
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SvfDoc {
    Constant,
    LogPower { gamma: f64 },
    LogLogPower { gamma: f64 },
}

impl SvfDoc {
    pub fn build(&self) -> SlowlyVarying {
        match self {
            SvfDoc::Constant => SlowlyVarying::constant(),
            SvfDoc::LogPower { gamma } => SlowlyVarying::log_power(*gamma),
            SvfDoc::LogLogPower { gamma } => SlowlyVarying::log_log_power(*gamma),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NormalizingDoc {
    /// `b_n = n^{1/p}`.
    Power { p: f64 },
    PowerSvf {
        p: f64,
        svf: SvfDoc,
        #[serde(default = "default_form")]
        form: SvfForm,
    },
    Explicit { values: Vec<f64> },
}

fn default_form() -> SvfForm {
    SvfForm::Composed
}

impl NormalizingDoc {
    pub fn build(&self) -> Result<NormalizingSequence> {
        Ok(match self {
            NormalizingDoc::Power { p } => {
                if !(*p > 0.0) {
                    return Err(Error::Spec(format!("normalizing power needs p > 0, got {p}")));
                }
                NormalizingSequence::power(*p)
            }
            NormalizingDoc::PowerSvf { p, svf, form } => {
                NormalizingSequence::PowerSvf { p: *p, svf: svf.build(), form: *form }
            }
            NormalizingDoc::Explicit { values } => {
                if values.is_empty() || values.iter().any(|v| !(*v > 0.0)) {
                    return Err(Error::Spec("explicit normalizing values must be positive".into()));
                }
                NormalizingSequence::Explicit(values.clone())
            }
        })
    }
}

/// The document as written.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    /// Fixture name; excludes `rows`, `cells`, `identical` and `sequence`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<CellDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identical: Option<IdenticalDoc>,
    /// Finite sequence `X_1..X_N`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<Vec<DistDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependence: Option<RowDependence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalizing: Option<NormalizingDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svf: Option<SvfDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sup: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expect: BTreeMap<Check, Verdict>,
}

/// A document resolved into model objects.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub subject: Subject,
    pub expect: BTreeMap<Check, Verdict>,
    pub fixture: Option<String>,
}

pub fn parse(text: &str) -> Result<SpecDocument> {
    serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
}

pub fn load_str(text: &str) -> Result<Loaded> {
    parse(text)?.build()
}

fn array_from_cells(rows: Option<usize>, cells: &[CellDoc]) -> Result<ArraySpec> {
    let mut map: BTreeMap<usize, BTreeMap<usize, DistSpec>> = BTreeMap::new();
    for c in cells {
        if c.n == 0 || c.i == 0 {
            return Err(Error::Spec(format!("cell ({}, {}): indices start at 1", c.n, c.i)));
        }
        if map.entry(c.n).or_default().insert(c.i, c.dist.build()?).is_some() {
            return Err(Error::Spec(format!("cell ({}, {}) listed twice", c.n, c.i)));
        }
    }
    if let Some(r) = rows {
        if map.keys().next_back().is_some_and(|&n| n > r) || map.len() != r {
            return Err(Error::Spec(format!("`rows` is {r} but cells cover rows {:?}", map.keys().collect::<Vec<_>>())));
        }
    }
    let mut dense = BTreeMap::new();
    for (n, row) in map {
        let k = row.len();
        if row.keys().next_back() != Some(&k) {
            return Err(Error::Spec(format!("row {n} has gaps: cells must be numbered 1..k_n")));
        }
        dense.insert(n, row.into_values().collect());
    }
    ArraySpec::explicit(rows_from_map(dense)?)
}

fn weight_rows(arr: &ArraySpec, rows: &[Vec<f64>], cells: &[WeightCellDoc]) -> Result<BTreeMap<usize, Vec<f64>>> {
    if !rows.is_empty() && !cells.is_empty() {
        return Err(Error::Spec("give weights either as `rows` or as `cells`, not both".into()));
    }
    let mut out = BTreeMap::new();
    if !rows.is_empty() {
        for (k, r) in rows.iter().enumerate() {
            out.insert(k + 1, r.clone());
        }
        return Ok(out);
    }
    let n_rows = arr.declared_rows().ok_or_else(|| Error::Spec("sparse weights need an array with finitely many rows".into()))?;
    for n in 1..=n_rows {
        out.insert(n, vec![0.0; arr.row_len(n)?]);
    }
    for c in cells {
        let row = out.get_mut(&c.n).ok_or(Error::RowOutOfRange { n: c.n, max: n_rows })?;
        if c.i == 0 || c.i > row.len() {
            return Err(Error::Spec(format!("weight cell ({}, {}) lies outside row {} of length {}", c.n, c.i, c.n, row.len())));
        }
        row[c.i - 1] = c.value;
    }
    Ok(out)
}

impl WeightsDoc {
    pub fn build(&self, arr: &ArraySpec) -> Result<WeightScheme> {
        let check = |m: &BTreeMap<usize, Vec<f64>>| -> Result<()> {
            if m.values().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::Weights("weights must be finite and nonnegative".into()));
            }
            Ok(())
        };
        Ok(match self {
            WeightsDoc::Uniform => WeightScheme::Uniform,
            WeightsDoc::Explicit { rows, cells } => {
                let m = weight_rows(arr, rows, cells)?;
                check(&m)?;
                WeightScheme::Explicit(m)
            }
            WeightsDoc::CNormalized { flavor, rows, cells } => {
                let m = weight_rows(arr, rows, cells)?;
                check(&m)?;
                WeightScheme::CNormalized { c: CoefficientSource::Explicit(m), flavor: *flavor }
            }
        })
    }
}

impl SpecDocument {
    pub fn build(&self) -> Result<Loaded> {
        let explicit_parts =
            self.rows.is_some() as u8 + !self.cells.is_empty() as u8 + self.identical.is_some() as u8 + self.sequence.is_some() as u8;
        let mut expect = BTreeMap::new();
        let (mut subject, fixture) = if let Some(name) = &self.generator {
            if explicit_parts > 0 {
                return Err(Error::Spec("a generator document cannot also list cells".into()));
            }
            let fx = fixtures::load_with(name, Params { p: self.p, nu: self.nu })?;
            expect = fx.expect.clone();
            (fx.subject, Some(fx.name))
        } else {
            let array = match (&self.identical, &self.sequence, self.cells.is_empty()) {
                (Some(id), None, true) if self.rows.is_none() => {
                    let len = match id.row_length {
                        RowLengthDoc::Linear => RowLength::Linear,
                        RowLengthDoc::Constant(k) if k >= 1 => RowLength::Constant(k),
                        RowLengthDoc::Constant(_) => return Err(Error::Spec("row length must be at least 1".into())),
                    };
                    ArraySpec::identical(id.dist.build()?, len)?
                }
                (None, Some(seq), true) if self.rows.is_none() => {
                    ArraySpec::explicit_sequence(seq.iter().map(DistDoc::build).collect::<Result<_>>()?)?
                }
                (None, None, false) => array_from_cells(self.rows, &self.cells)?,
                _ => {
                    return Err(Error::Spec(
                        "give exactly one of `generator`, `cells`, `identical` or `sequence`".into(),
                    ))
                }
            };
            let p = self.p.unwrap_or(1.0);
            if !(p > 0.0) {
                return Err(Error::Spec(format!("p must be positive, got {p}")));
            }
            let label = self.label.clone().unwrap_or_else(|| array.label.clone());
            (Subject::new(label, array, WeightScheme::Uniform, p), None)
        };
        if let Some(dep) = self.dependence {
            subject.array = subject.array.clone().with_dependence(dep)?;
        }
        if let Some(w) = &self.weights {
            subject.weights = w.build(&subject.array)?;
            if fixture.is_some() {
                // The closed forms describe the fixture weights only.
                subject = Subject::new(subject.label.clone(), subject.array.clone(), subject.weights.clone(), subject.p)
                    .with_nu(subject.nu)
                    .with_b(subject.b.clone());
            }
        }
        if let Some(nu) = self.nu {
            if nu == 0 {
                return Err(Error::Spec("nu must be at least 1".into()));
            }
            subject.nu = nu;
        }
        if let Some(svf) = &self.svf {
            subject.l = svf.build();
        }
        if let Some(b) = &self.normalizing {
            subject.b = b.build()?;
        }
        if let Some(n) = self.n_sup {
            if n == 0 {
                return Err(Error::Spec("n_sup must be at least 1".into()));
            }
            subject.cfg = ScanConfig { n_sup: n, ..subject.cfg };
        }
        expect.extend(self.expect.iter().map(|(k, v)| (*k, *v)));
        Ok(Loaded { subject, expect, fixture })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_cells() {
        let doc = r#"{"rows": 2, "cells": [
            {"n": 1, "i": 1, "dist": {"kind": "pm1"}},
            {"n": 2, "i": 1, "dist": {"kind": "two-point", "magnitude": 3, "prob": 0.5}},
            {"n": 2, "i": 2, "dist": {"kind": "atoms", "atoms": [[0, 0.5], [2, 0.5]]}}],
            "weights": {"kind": "c-normalized", "rows": [[1], [1, 3]]}}"#;
        let l = load_str(doc).unwrap();
        let a = &l.subject.array;
        assert_eq!(a.row_len(2).unwrap(), 2);
        assert_eq!(a.cell(2, 2).unwrap().tail_at(1.0), 0.5);
        assert_eq!(l.subject.weights.coefficient_vec(2, 2).unwrap(), vec![1.0, 3.0]);
        assert_eq!(l.subject.weights.row_weight_sum(2, 2).unwrap(), 1.0);
    }

    #[test]
    fn generator_keeps_expectations() {
        let l = load_str(r#"{"generator": "x2m-example", "expect": {"kG": "fails"}}"#).unwrap();
        assert_eq!(l.fixture.as_deref(), Some("x2m-example"));
        assert_eq!(l.expect[&Check::VanishingKg], Verdict::Fails);
        assert_eq!(l.expect[&Check::Series], Verdict::Holds);
    }

    #[test]
    fn malformed_documents() {
        assert!(load_str("{").is_err());
        assert!(load_str(r#"{"cells": [{"n": 1, "i": 2, "dist": {"kind": "pm1"}}]}"#).is_err());
        assert!(load_str(r#"{"generator": "nope"}"#).is_err());
        assert!(load_str(r#"{"identical": {"dist": {"kind": "pm1"}, "row_length": "linear"}, "color": 1}"#).is_err());
        assert!(load_str(r#"{"identical": {"dist": {"kind": "two-point", "magnitude": 1, "prob": 2}}}"#).is_err());
    }

    #[test]
    fn identical_and_sequence() {
        let l = load_str(r#"{"identical": {"dist": {"kind": "pareto", "alpha": 2, "cutoff": 1}, "row_length": {"constant": 3}},
            "normalizing": {"kind": "power-svf", "p": 1.5, "svf": {"kind": "log-power", "gamma": 1}}}"#)
        .unwrap();
        assert_eq!(l.subject.array.row_len(10).unwrap(), 3);
        let s = load_str(r#"{"sequence": [{"kind": "pm1"}, {"kind": "zero"}], "dependence": {"kind": "gaussian-na", "correlation": -0.2}}"#)
            .unwrap();
        assert!(s.subject.array.is_sequence());
        assert_eq!(s.subject.array.declared_rows(), Some(2));
    }
}

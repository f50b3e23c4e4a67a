//! Named condition checks run against an array, its weights and a
//! normalizing sequence. Shared by the fixtures and the command line.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::conditions::{self, Evidence, REGULARITY_N};
use crate::domination::{dyadic_grid, report_from_functional, Functional, GRID_MAX_EXP};
use crate::error::{Error, Result};
use crate::gate::{Decision, Verdict};
use crate::model::{ArraySpec, NormalizingSequence, ScanConfig, WeightScheme};
use crate::moments::{bounded_moment_condition, ui_check, MomentFunction};
use crate::svf::SlowlyVarying;

/// Summation range of the series condition.
pub const SERIES_N: usize = (1 << 20) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Check {
    #[serde(rename = "cesaro-domination")]
    CesaroDomination,
    #[serde(rename = "weighted-domination", alias = "domination")]
    WeightedDomination,
    #[serde(rename = "chandra-ghosal")]
    ChandraGhosal,
    #[serde(rename = "series")]
    Series,
    #[serde(rename = "b-regularity")]
    BRegularity,
    #[serde(rename = "b-regularity-l2")]
    BRegularityL2,
    #[serde(rename = "kG")]
    VanishingKg,
    #[serde(rename = "ui")]
    Ui,
    #[serde(rename = "bounded-moment")]
    BoundedMoment,
}

impl Check {
    pub const ALL: [Check; 9] = [
        Check::CesaroDomination,
        Check::WeightedDomination,
        Check::ChandraGhosal,
        Check::Series,
        Check::BRegularity,
        Check::BRegularityL2,
        Check::VanishingKg,
        Check::Ui,
        Check::BoundedMoment,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Check::CesaroDomination => "cesaro-domination",
            Check::WeightedDomination => "weighted-domination",
            Check::ChandraGhosal => "chandra-ghosal",
            Check::Series => "series",
            Check::BRegularity => "b-regularity",
            Check::BRegularityL2 => "b-regularity-l2",
            Check::VanishingKg => "kG",
            Check::Ui => "ui",
            Check::BoundedMoment => "bounded-moment",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Check {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "domination" {
            return Ok(Check::WeightedDomination);
        }
        Check::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Spec(format!("unknown condition `{s}`")))
    }
}

/// Everything a check may consume. Closed-form functionals, when given,
/// replace row scans.
#[derive(Debug, Clone)]
pub struct Subject {
    pub label: String,
    pub array: ArraySpec,
    pub weights: WeightScheme,
    pub p: f64,
    pub nu: u32,
    pub b: NormalizingSequence,
    pub l: SlowlyVarying,
    pub cfg: ScanConfig,
    cesaro: OnceLock<Functional>,
    weighted: OnceLock<Functional>,
}

impl Subject {
    pub fn new(label: impl Into<String>, array: ArraySpec, weights: WeightScheme, p: f64) -> Self {
        Subject {
            label: label.into(),
            array,
            weights,
            p,
            nu: 1,
            b: NormalizingSequence::power(p),
            l: SlowlyVarying::constant(),
            cfg: ScanConfig::default(),
            cesaro: OnceLock::new(),
            weighted: OnceLock::new(),
        }
    }

    pub fn with_b(mut self, b: NormalizingSequence) -> Self {
        self.b = b;
        self
    }

    pub fn with_nu(mut self, nu: u32) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_cfg(mut self, cfg: ScanConfig) -> Self {
        self.cfg = cfg;
        self
    }

    /// Attaches the closed form of the Cesaro functional `G`.
    pub fn with_cesaro(self, g: Functional) -> Self {
        let _ = self.cesaro.set(g);
        self
    }

    /// Attaches the closed form of the weighted functional `G^`.
    pub fn with_weighted(self, g: Functional) -> Self {
        let _ = self.weighted.set(g);
        self
    }

    pub fn cesaro(&self) -> Result<&Functional> {
        if let Some(g) = self.cesaro.get() {
            return Ok(g);
        }
        let g = Functional::scanned(&self.array, &WeightScheme::Uniform, &self.cfg)?;
        Ok(self.cesaro.get_or_init(|| g))
    }

    pub fn weighted(&self) -> Result<&Functional> {
        if self.weights.is_uniform() {
            return self.cesaro();
        }
        if let Some(g) = self.weighted.get() {
            return Ok(g);
        }
        let g = Functional::scanned(&self.array, &self.weights, &self.cfg)?;
        Ok(self.weighted.get_or_init(|| g))
    }

    /// `k = 2^j` while `b_k <= 2^60`.
    pub fn k_grid(&self) -> Result<Vec<usize>> {
        let top = 2f64.powi(GRID_MAX_EXP);
        let mut out = Vec::new();
        for j in 0..usize::BITS - 1 {
            let k = 1usize << j;
            if self.b.declared_len().is_some_and(|d| k > d) || self.b.b(k)? > top {
                break;
            }
            out.push(k);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: Check,
    pub verdict: Verdict,
    pub rule: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub figures: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<Evidence>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckResult {
    fn from_decision(check: Check, d: Decision) -> Self {
        CheckResult {
            check,
            verdict: d.verdict,
            rule: d.rule,
            figures: BTreeMap::new(),
            evidence: None,
            notes: Vec::new(),
        }
    }

    fn from_condition(check: Check, v: conditions::ConditionVerdict) -> Self {
        CheckResult {
            check,
            verdict: v.verdict,
            rule: v.rule,
            figures: BTreeMap::new(),
            evidence: Some(v.evidence),
            notes: v.notes,
        }
    }

    fn figure(mut self, k: &str, v: f64) -> Self {
        self.figures.insert(k.into(), v);
        self
    }
}

fn domination(check: Check, g: &Functional) -> CheckResult {
    let r = report_from_functional(g, &dyadic_grid(GRID_MAX_EXP));
    let mut out = CheckResult::from_decision(check, r.decision.clone())
        .figure("c0", r.c0)
        .figure("limit_at_infinity", r.limit_at_infinity)
        .figure("resolved_to", r.resolved_to);
    if let Some(n) = r.scan_n {
        out = out.figure("scan_n", n as f64);
    }
    out.evidence = Some(Evidence { kind: "G(x)".into(), grid: Some(r.grid), values: r.values, total: None });
    out.notes.push(g.label.clone());
    out
}

/// Runs one check.
pub fn run_check(s: &Subject, check: Check) -> Result<CheckResult> {
    Ok(match check {
        Check::CesaroDomination => domination(check, s.cesaro()?),
        Check::WeightedDomination => domination(check, s.weighted()?),
        Check::ChandraGhosal => {
            let g = s.cesaro()?;
            CheckResult::from_condition(check, conditions::chandra_ghosal_integral(&g.normalized_tail(), s.p, &s.l))
        }
        Check::Series => CheckResult::from_condition(check, conditions::series_condition(&s.array, s.p, SERIES_N)?),
        Check::BRegularity => CheckResult::from_condition(check, conditions::b_regularity_wlln(&s.b, REGULARITY_N)?),
        Check::BRegularityL2 => CheckResult::from_condition(check, conditions::b_regularity_l2(&s.b, REGULARITY_N)?),
        Check::VanishingKg => {
            let g = s.weighted()?;
            CheckResult::from_condition(check, conditions::vanishing_kg(g, &s.b, &s.k_grid()?)?)
        }
        Check::Ui => {
            let t = MomentFunction::power(s.p);
            let r = ui_check(&s.array, &WeightScheme::Uniform, &t, &dyadic_grid(GRID_MAX_EXP), &s.cfg)?;
            let mut out = CheckResult::from_decision(check, r.decision)
                .figure("resolved_level", r.resolved_level)
                .figure("scan_n", r.scan_n as f64);
            out.evidence =
                Some(Evidence { kind: "sup E|X|^p 1(|X|^p > a)".into(), grid: Some(r.grid), values: r.values, total: None });
            out
        }
        Check::BoundedMoment => {
            let g = MomentFunction::power_log_nu(s.p, s.nu);
            let r = bounded_moment_condition(&s.array, &WeightScheme::Uniform, &g, &s.cfg)?;
            CheckResult::from_decision(check, r.trend)
                .figure("sup", r.sup)
                .figure("argmax_n", r.argmax_n as f64)
                .figure("scan_n", r.scan_n as f64)
        }
    })
}

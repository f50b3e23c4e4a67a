//! The four worked examples as named generators, with their closed forms
//! and expected verdicts. `verify` reproduces every expectation with the
//! general-purpose machinery.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::checks::{run_check, Check, Subject};
use crate::conditions::first_crossing;
use crate::domination::{construct_dominating_cdf, dyadic_grid, profile, Functional, GRID_MAX_EXP};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gate::Verdict;
use crate::model::scan::{c0, row_weight_sum};
use crate::model::{ArraySpec, DistSpec, NormalizerFlavor, Run, ScanConfig, WeightScheme};
use crate::moments::{cell_expectation, MomentFunction};
use crate::simulate::{max_partial_sums, slln_path_diagnostic, wlln_estimate, SimPlan};
use crate::svf::{lg, log_nu};

pub const NAMES: [&str; 4] = ["example-2.1", "example-4.1", "wlln-counterexample", "x2m-example"];

/// Agreement tolerance between closed forms and scans (rounding only).
pub const CLOSED_FORM_TOL: f64 = 1e-12;

/// Overrides of the free parameters of a fixture.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub p: Option<f64>,
    pub nu: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Law {
    Wlln,
    Slln,
}

/// Expected behavior of the partial sums under the fixture's weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LlnOutcome {
    pub law: Law,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub subject: Subject,
    /// Exact `C0` of the fixture weights.
    pub c0: f64,
    pub expect: BTreeMap<Check, Verdict>,
    pub lln: Option<LlnOutcome>,
}

impl Fixture {
    pub fn p(&self) -> f64 {
        self.subject.p
    }
}

pub fn load(name: &str) -> Result<Fixture> {
    load_with(name, Params::default())
}

pub fn load_with(name: &str, params: Params) -> Result<Fixture> {
    let fx = match name {
        "example-2.1" => example_2_1(),
        "example-4.1" => example_4_1(params.p.unwrap_or(1.5), params.nu.unwrap_or(1))?,
        "wlln-counterexample" => wlln_counterexample(params.p.unwrap_or(0.5))?,
        "x2m-example" => x2m_example(params.p.unwrap_or(0.5))?,
        _ => return Err(Error::UnknownFixture(name.to_string())),
    };
    Ok(fx)
}

fn check_p(p: f64, lo: f64, hi: f64, name: &str) -> Result<()> {
    if !(p > lo && p < hi) {
        return Err(Error::Spec(format!("{name} needs {lo} < p < {hi}, got {p}")));
    }
    Ok(())
}

fn expect(pairs: &[(Check, Verdict)]) -> BTreeMap<Check, Verdict> {
    pairs.iter().copied().collect()
}

/// `floor(n/2)`.
fn half(n: usize) -> usize {
    n / 2
}

// Row indices are carried as floats so that huge `x` cannot overflow.
fn example_2_1_cesaro(x: f64) -> f64 {
    if x < 1.0 {
        return 1.0;
    }
    // Smallest odd n > x maximizes (n - m_n)/n = ceil(n/2)/n.
    let mut n = x.floor() + 1.0;
    if n % 2.0 == 0.0 {
        n += 1.0;
    }
    (n / 2.0).ceil() / n
}

fn example_2_1_weighted(x: f64) -> f64 {
    if x < 1.0 {
        return 1.25;
    }
    let n = x.floor() + 1.0;
    (n / 2.0).ceil() / (n * n)
}

fn example_2_1() -> Fixture {
    let array = ArraySpec::from_rows("example-2.1", |n| {
        let m = half(n);
        let big = Run::new(n - m, DistSpec::two_point(n as f64, 1.0));
        if m == 0 {
            vec![big]
        } else {
            vec![Run::new(m, DistSpec::SymmetricPm1), big]
        }
    })
    .with_mean_zero(true);
    let weights = WeightScheme::runs("example-2.1", |n, _k| {
        let m = half(n);
        let tail = Run::new(n - m, 1.0 / (n * n) as f64);
        if m == 0 {
            vec![tail]
        } else {
            vec![Run::new(m, 1.0 / m as f64), tail]
        }
    });
    let cesaro = Functional::closed_form("example-2.1 G", 1.0, example_2_1_cesaro).with_limit(0.5);
    let weighted = Functional::closed_form("example-2.1 G^", 1.25, example_2_1_weighted).with_limit(0.0);
    let subject = Subject::new("example-2.1", array, weights, 1.0).with_cesaro(cesaro).with_weighted(weighted);
    Fixture {
        name: "example-2.1".into(),
        subject,
        c0: 1.25,
        expect: expect(&[(Check::CesaroDomination, Verdict::Fails), (Check::WeightedDomination, Verdict::Holds)]),
        lln: None,
    }
}

fn example_4_1(p: f64, nu: u32) -> Result<Fixture> {
    if !(1.0..2.0).contains(&p) {
        return Err(Error::Spec(format!("example-4.1 needs 1 <= p < 2, got {p}")));
    }
    if nu == 0 {
        return Err(Error::Spec("example-4.1 needs nu >= 1".into()));
    }
    let array = ArraySpec::from_sequence("example-4.1", move |n| {
        DistSpec::two_point((n as f64 + 1.0).powf(1.0 / p), 1.0 / (n as f64 * log_nu(n as f64, nu)))
    })
    .with_mean_zero(true);
    let subject = Subject::new("example-4.1", array, WeightScheme::Uniform, p).with_nu(nu);
    Ok(Fixture {
        name: "example-4.1".into(),
        subject,
        c0: 1.0,
        expect: expect(&[
            (Check::BoundedMoment, Verdict::Holds),
            (Check::Series, Verdict::Fails),
            (Check::CesaroDomination, Verdict::Holds),
        ]),
        lln: Some(LlnOutcome { law: Law::Slln, holds: false }),
    })
}

/// `|X_{n,n}| = n^{1/p} / log^{1/p} n`.
pub fn wlln_magnitude(n: usize, p: f64) -> f64 {
    (n as f64).powf(1.0 / p) / lg(n as f64).powf(1.0 / p)
}

/// Smallest `n` with `wlln_magnitude(n) > x`; magnitudes increase from `n = 4`.
/// Searched over integer-valued floats so that huge `x` cannot overflow;
/// beyond `2^53` the answer is exact to rounding.
fn wlln_first_exceeding(x: f64, p: f64) -> f64 {
    let mag = |n: f64| n.powf(1.0 / p) / lg(n).powf(1.0 / p);
    if let Some(n) = (1..4).find(|&n| wlln_magnitude(n, p) > x) {
        return n as f64;
    }
    let (mut lo, mut hi) = (4.0_f64, 8.0_f64);
    while mag(hi) <= x {
        lo = hi;
        hi *= 2.0;
    }
    if mag(lo) > x {
        return lo;
    }
    while hi - lo > 1.0 {
        let mid = ((lo + hi) / 2.0).floor();
        if mid <= lo || mid >= hi {
            break;
        }
        if mag(mid) > x {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn wlln_counterexample(p: f64) -> Result<Fixture> {
    check_p(p, 0.0, 1.0, "wlln-counterexample")?;
    let array = ArraySpec::from_rows("wlln-counterexample", move |n| {
        let last = Run::new(1, DistSpec::two_point(wlln_magnitude(n, p), 1.0));
        if n == 1 {
            vec![last]
        } else {
            vec![Run::new(n - 1, DistSpec::SymmetricPm1), last]
        }
    })
    .with_mean_zero(true);
    let weights = WeightScheme::c_normalized(NormalizerFlavor::Sum, |n, _k| {
        let last = Run::new(1, n as f64);
        if n == 1 {
            vec![last]
        } else {
            vec![Run::new(n - 1, 0.0), last]
        }
    });
    let cesaro = Functional::closed_form("wlln-counterexample G", 1.0, move |x| {
        if x < 1.0 {
            1.0
        } else {
            1.0 / wlln_first_exceeding(x, p)
        }
    })
    .with_limit(0.0);
    let weighted = Functional::closed_form("wlln-counterexample G^", 1.0, |_| 1.0).with_limit(1.0);
    let subject = Subject::new("wlln-counterexample", array, weights, p).with_cesaro(cesaro).with_weighted(weighted);
    Ok(Fixture {
        name: "wlln-counterexample".into(),
        subject,
        c0: 1.0,
        expect: expect(&[
            (Check::Ui, Verdict::Holds),
            (Check::VanishingKg, Verdict::Fails),
            (Check::WeightedDomination, Verdict::Fails),
            (Check::CesaroDomination, Verdict::Holds),
            (Check::BRegularity, Verdict::Holds),
        ]),
        lln: Some(LlnOutcome { law: Law::Wlln, holds: false }),
    })
}

/// `|X_{2^m}| = 2^{m/p} / m^{1/p}`; the `m = 0` cell is read as `+-1`.
pub fn x2m_magnitude(m: u32, p: f64) -> f64 {
    if m == 0 {
        1.0
    } else {
        2f64.powf(m as f64 / p) / (m as f64).powf(1.0 / p)
    }
}

/// Exponents beyond which `x2m_magnitude` passes every grid point.
const X2M_MAX_EXP: u32 = 200;

fn x2m_example(p: f64) -> Result<Fixture> {
    check_p(p, 0.0, 2.0, "x2m-example")?;
    let array = ArraySpec::from_sequence("x2m-example", move |n| {
        if n >= 2 && n.is_power_of_two() {
            DistSpec::two_point(x2m_magnitude(n.trailing_zeros(), p), 1.0)
        } else {
            DistSpec::SymmetricPm1
        }
    })
    .with_mean_zero(true);
    // Row n = 2^{m_x} attains the supremum, where m_x is the first
    // exponent whose magnitude exceeds x.
    let g = move |x: f64| {
        if x < 1.0 {
            return 1.0;
        }
        match (1..=X2M_MAX_EXP).find(|&m| x2m_magnitude(m, p) > x) {
            Some(m) => 2f64.powi(-(m as i32)),
            None => 0.0,
        }
    };
    let kinks: Vec<f64> = (1..=X2M_MAX_EXP).map(|m| x2m_magnitude(m, p)).filter(|k| k.is_finite()).collect();
    let cesaro = Functional::closed_form("x2m-example G", 1.0, g).with_limit(0.0).with_kinks(kinks);
    let subject = Subject::new("x2m-example", array, WeightScheme::Uniform, p).with_cesaro(cesaro);
    Ok(Fixture {
        name: "x2m-example".into(),
        subject,
        c0: 1.0,
        expect: expect(&[
            (Check::Series, Verdict::Holds),
            (Check::ChandraGhosal, Verdict::Fails),
            (Check::VanishingKg, Verdict::Holds),
            (Check::CesaroDomination, Verdict::Holds),
            (Check::BRegularity, Verdict::Holds),
        ]),
        lln: Some(LlnOutcome { law: Law::Wlln, holds: true }),
    })
}

/// One line of the conformance suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub fixture: String,
    pub check: String,
    pub passed: bool,
    pub expected: String,
    pub observed: String,
}

struct Log<'a> {
    fixture: &'a str,
    out: Vec<CheckOutcome>,
}

impl Log<'_> {
    fn push(&mut self, check: impl Into<String>, passed: bool, expected: impl ToString, observed: impl ToString) {
        self.out.push(CheckOutcome {
            fixture: self.fixture.to_string(),
            check: check.into(),
            passed,
            expected: expected.to_string(),
            observed: observed.to_string(),
        });
    }

    fn fail(&mut self, check: impl Into<String>, e: Error) {
        self.push(check, false, "no error", e);
    }

    fn close(&mut self, check: impl Into<String>, want: f64, got: f64, tol: f64) {
        let ok = (want - got).abs() <= tol * want.abs().max(1.0);
        self.push(check, ok, want, got);
    }
}

/// Scan-based `G` equals the closed form at every grid point the scan resolves.
fn closed_form_agreement(log: &mut Log, label: &str, closed: &Functional, arr: &ArraySpec, w: &WeightScheme, cfg: &ScanConfig) {
    let grid = dyadic_grid(GRID_MAX_EXP);
    match profile(arr, w, &grid, cfg) {
        Ok(pr) => {
            let mut worst: (f64, f64, f64) = (0.0, 0.0, 0.0);
            let mut used = 0;
            for (&x, &v) in grid.iter().zip(&pr.values) {
                if x >= pr.resolved_to {
                    continue;
                }
                used += 1;
                let want = closed.eval(x);
                let err = (v - want).abs() / want.abs().max(1.0);
                if err > worst.0 {
                    worst = (err, x, v);
                }
            }
            let ok = used > 0 && worst.0 <= CLOSED_FORM_TOL;
            log.push(
                format!("{label} closed form matches scan on {used} grid points"),
                ok,
                format!("relative error <= {CLOSED_FORM_TOL:e}"),
                format!("max error {:e} at x = {}", worst.0, worst.1),
            );
        }
        Err(e) => log.fail(format!("{label} scan"), e),
    }
}

fn verdicts(log: &mut Log, fx: &Fixture) {
    for (&check, &want) in &fx.expect {
        match run_check(&fx.subject, check) {
            Ok(r) => log.push(check.name(), r.verdict == want, want, format!("{} ({})", r.verdict, r.rule)),
            Err(e) => log.fail(check.name(), e),
        }
    }
}

fn scanned_domination(log: &mut Log, fx: &Fixture, check: Check) {
    let s = &fx.subject;
    let w = if check == Check::CesaroDomination { WeightScheme::Uniform } else { s.weights.clone() };
    let Some(&want) = fx.expect.get(&check) else { return };
    match construct_dominating_cdf(&s.array, &w, &s.cfg) {
        Ok(r) => log.push(
            format!("{} by row scan", check.name()),
            r.decision.verdict == want,
            want,
            format!("{} ({})", r.decision.verdict, r.decision.rule),
        ),
        Err(e) => log.fail(format!("{} by row scan", check.name()), e),
    }
}

fn c0_check(log: &mut Log, fx: &Fixture) {
    let s = &fx.subject;
    match c0(&s.array, &s.weights, &s.cfg) {
        Ok(r) => log.close(format!("C0 over n <= {}", r.scan_n), fx.c0, r.c0, CLOSED_FORM_TOL),
        Err(e) => log.fail("C0", e),
    }
}

fn magnitudes(arr: &ArraySpec, n: usize) -> Result<Vec<f64>> {
    Ok(crate::model::array::expand(&arr.row(n)?).iter().map(|d| d.max_magnitude()).collect())
}

fn verify_example_2_1(log: &mut Log, fx: &Fixture) {
    let s = &fx.subject;
    match magnitudes(&s.array, 5) {
        Ok(m) => log.push("row 5 magnitudes", m == [1.0, 1.0, 5.0, 5.0, 5.0], "[1, 1, 5, 5, 5]", format!("{m:?}")),
        Err(e) => log.fail("row 5 magnitudes", e),
    }
    match row_weight_sum(&s.array, &s.weights, 2) {
        Ok(v) => log.close("row 2 weight sum", 1.25, v, CLOSED_FORM_TOL),
        Err(e) => log.fail("row 2 weight sum", e),
    }
    match s.weights.row(1, 1) {
        Ok(r) => log.push("a_{1,1} = 1", r.len() == 1 && r[0].value == 1.0, 1.0, format!("{r:?}")),
        Err(e) => log.fail("a_{1,1}", e),
    }
    let grid: Vec<f64> = dyadic_grid(GRID_MAX_EXP);
    match profile(&s.array, &WeightScheme::Uniform, &grid, &s.cfg) {
        Ok(pr) => {
            let low = grid
                .iter()
                .zip(&pr.values)
                .filter(|(x, _)| **x < pr.resolved_to)
                .map(|(_, v)| *v)
                .fold(f64::INFINITY, f64::min);
            log.push("G(x) >= 1/2 for x >= 1", low >= 0.5, ">= 0.5", low);
        }
        Err(e) => log.fail("G(x) >= 1/2", e),
    }
}

fn verify_example_4_1(log: &mut Log, fx: &Fixture) {
    let s = &fx.subject;
    let (p, nu) = (s.p, s.nu);
    // Direct Cesaro average of E g(|X_i|) = (n+1) log_nu((n+1)^{1/p}) / (n log_nu n).
    let g = MomentFunction::power_log_nu(p, nu);
    let mut direct_sup: f64 = 0.0;
    let mut acc = 0.0;
    for n in 1..=s.cfg.n_sup {
        let nf = n as f64;
        let m = (nf + 1.0).powf(1.0 / p);
        acc += m.powf(p) * log_nu(m, nu) / (nf * log_nu(nf, nu));
        direct_sup = direct_sup.max(acc / nf);
    }
    match crate::moments::bounded_moment_condition(&s.array, &WeightScheme::Uniform, &g, &s.cfg) {
        Ok(r) => log.close("sup_n Cesaro E g(|X|) against direct summation", direct_sup, r.sup, 1e-9),
        Err(e) => log.fail("bounded moment sup", e),
    }
    match s.array.sequence_cell(1) {
        Some(d) => {
            let e = cell_expectation(&d, &g).or_infinite();
            let want = 2f64.powf(1.0) * log_nu(2f64.powf(1.0 / p), nu);
            log.close("E g(|X_1|)", want, e, 1e-12);
        }
        None => log.push("E g(|X_1|)", false, "a cell", "none"),
    }
    let crossing = first_crossing(|n| 1.0 / (n as f64 * log_nu(n as f64, nu)), 3.0, 1_000_000);
    log.push("sum 1/(n log_nu n) exceeds 3 within 10^6 terms", crossing.is_some(), "Some(n)", format!("{crossing:?}"));
    // A short path run: spikes |X_n| > n^{1/p} keep occurring in late blocks.
    let mut plan = SimPlan::new(s.array.clone(), s.b.clone());
    plan.rows = (4..=14).map(|k| 1usize << k).collect();
    plan.reps = 40;
    plan.seed = 41;
    match slln_path_diagnostic(&plan) {
        Ok(r) => {
            let late: Vec<_> = r.path.expect("path report").spikes.into_iter().filter(|b| b.lo >= 16).collect();
            let mean: f64 = late.iter().map(|b| b.mean_count).sum();
            let expected: f64 = late.iter().map(|b| b.expected).sum();
            let se = late.iter().map(|b| b.se * b.se).sum::<f64>().sqrt();
            let ok = mean > 0.0 && (mean - expected).abs() <= 4.0 * se;
            log.push(
                format!("spikes |X_n| > b_n for 16 <= n < {} match the tail mass", late.last().map_or(0, |b| b.hi + 1)),
                ok,
                format!("{expected:.4} within 4 se"),
                format!("{mean:.4} (se {se:.4})"),
            );
        }
        Err(e) => log.fail("path diagnostic", e),
    }
}

fn verify_wlln_counterexample(log: &mut Log, fx: &Fixture) {
    let s = &fx.subject;
    let p = s.p;
    match s.weights.coefficient_vec(4, 4) {
        Ok(c) => log.push("c row 4", c == [0.0, 0.0, 0.0, 4.0], "[0, 0, 0, 4]", format!("{c:?}")),
        Err(e) => log.fail("c row 4", e),
    }
    for n in [16usize, 256] {
        let label = format!("max |sum c X| / b_n at n = {n}");
        let run = || -> Result<f64> {
            let mut rng = crate::rng::stream(0, n as u64, 0);
            let x = s.array.sample_row(n, &mut rng)?;
            let c = s.weights.coefficient_vec(n, n)?;
            Ok(max_partial_sums(&x, Some(&c))? / s.b.b(n)?)
        };
        let want = n as f64 / lg(n as f64).powf(1.0 / p);
        match run() {
            Ok(v) => log.push(label, v == want, want, v),
            Err(e) => log.fail(label, e),
        }
    }
    if let Ok(g) = s.weighted() {
        if let Ok(ks) = s.k_grid() {
            let ok = ks.iter().all(|&k| s.b.b(k).map(|b| k as f64 * g.eval(b) == k as f64).unwrap_or(false));
            log.push("k G^(b_k) = k on the k grid", ok, "exact", if ok { "exact" } else { "mismatch" });
        }
    }
    let mut plan = SimPlan::new(s.array.clone(), s.b.clone());
    plan.weights = Some(s.weights.clone());
    plan.rows = vec![64, 256];
    plan.reps = 20;
    plan.epsilons = vec![0.5];
    match wlln_estimate(&plan) {
        Ok(r) => {
            let p_hat = r.rows.last().map(|row| row.exceedances[0].p_hat).unwrap_or(f64::NAN);
            log.push("weighted WLLN exceedance at n = 256", p_hat == 1.0, 1.0, p_hat);
        }
        Err(e) => log.fail("weighted WLLN exceedance", e),
    }
}

fn verify_x2m(log: &mut Log, fx: &Fixture) {
    let s = &fx.subject;
    match load_with("x2m-example", Params { p: Some(1.0), nu: None }).map(|f| f.subject.array.sequence_cell(8)) {
        Ok(Some(d)) => log.push("|X_8| at p = 1", d.max_magnitude() == 8.0 / 3.0, 8.0 / 3.0, d.max_magnitude()),
        Ok(None) => log.push("|X_8| at p = 1", false, 8.0 / 3.0, "no cell"),
        Err(e) => log.fail("|X_8| at p = 1", e),
    }
    match run_check(s, Check::Series) {
        Ok(r) => {
            let total = r.evidence.and_then(|e| e.total).unwrap_or(f64::NAN);
            log.push("series sum", total == 0.0, 0.0, total);
        }
        Err(e) => log.fail("series sum", e),
    }
    // No single dominating variable: sup_n P(|X_n| > x) = 1 for x >= 1.
    let grid = dyadic_grid(GRID_MAX_EXP);
    let n_max = s.cfg.n_sup;
    let resolved = x2m_magnitude(n_max.ilog2(), s.p);
    let ok = grid
        .iter()
        .filter(|&&x| x < resolved)
        .all(|&x| (1..=n_max).any(|n| s.array.sequence_cell(n).is_some_and(|d| d.tail_at(x) == 1.0)));
    log.push("sup_n P(|X_n| > x) = 1 on the resolved grid", ok, true, ok);
    let mut plan = SimPlan::new(s.array.clone(), s.b.clone());
    plan.rows = (6..=12).map(|k| 1usize << k).collect();
    plan.reps = 400;
    plan.epsilons = vec![0.5];
    plan.seed = 7;
    match wlln_estimate(&plan) {
        Ok(r) => {
            let e = r.rows.last().expect("rows").exceedances[0];
            log.push("WLLN exceedance at n = 4096", e.p_hat <= 0.05 + 3.0 * e.se, "<= 0.05 + 3 se", e.p_hat);
        }
        Err(e) => log.fail("WLLN exceedance", e),
    }
}

/// Runs every expectation of `fx`.
pub fn verify(fx: &Fixture) -> Vec<CheckOutcome> {
    let mut log = Log { fixture: &fx.name, out: Vec::new() };
    c0_check(&mut log, fx);
    verdicts(&mut log, fx);
    scanned_domination(&mut log, fx, Check::CesaroDomination);
    scanned_domination(&mut log, fx, Check::WeightedDomination);
    let s = &fx.subject;
    if let Ok(g) = s.cesaro() {
        if g.scan_n.is_none() {
            closed_form_agreement(&mut log, "G", g, &s.array, &WeightScheme::Uniform, &s.cfg);
        }
    }
    if !s.weights.is_uniform() {
        if let Ok(g) = s.weighted() {
            if g.scan_n.is_none() {
                closed_form_agreement(&mut log, "G^", g, &s.array, &s.weights, &s.cfg);
            }
        }
    }
    match fx.name.as_str() {
        "example-2.1" => verify_example_2_1(&mut log, fx),
        "example-4.1" => verify_example_4_1(&mut log, fx),
        "wlln-counterexample" => verify_wlln_counterexample(&mut log, fx),
        "x2m-example" => verify_x2m(&mut log, fx),
        _ => {}
    }
    log.out
}

/// Loads and verifies the named fixtures (all of them when `only` is empty).
pub fn verify_all(only: &[String]) -> Result<Vec<CheckOutcome>> {
    let names: Vec<&str> = if only.is_empty() { NAMES.to_vec() } else { only.iter().map(|s| s.as_str()).collect() };
    let mut out = Vec::new();
    for n in names {
        out.extend(verify(&load(n)?));
    }
    Ok(out)
}

/// Sets the execution mode used by row scans.
pub fn with_exec(mut fx: Fixture, exec: Execution) -> Fixture {
    fx.subject.cfg.exec = exec;
    fx
}

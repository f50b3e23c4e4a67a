//! Monte Carlo estimators against exact or classical answers.

use std::sync::Arc;

use stochdom::model::{ArraySpec, DistSpec, NormalizingSequence, RowDependence, RowLength, TailFunction};
use stochdom::moments::{expectation_via_tail, MomentFunction};
use stochdom::simulate::{condition_h_probe, slln_path_diagnostic, slln_series_estimate, wlln_estimate, SimPlan};
use stochdom::svf::SlowlyVarying;
use stochdom::Execution;

/// `P(max_{k<=n} |S_k| > t)` for the simple symmetric walk, by dynamic
/// programming over the surviving states `|S| <= t`.
fn walk_exceedance(n: usize, t: f64) -> f64 {
    let h = t.floor() as i64;
    let width = (2 * h + 1) as usize;
    let mut p = vec![0.0; width];
    p[h as usize] = 1.0;
    for _ in 0..n {
        let mut next = vec![0.0; width];
        for (i, &m) in p.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            if i > 0 {
                next[i - 1] += 0.5 * m;
            }
            if i + 1 < width {
                next[i + 1] += 0.5 * m;
            }
        }
        p = next;
    }
    1.0 - p.iter().sum::<f64>()
}

/// Mean and variance of `max_j S_j^2` over all `2^n` sign paths.
fn enumerate_max_square(n: usize) -> (f64, f64) {
    let total = 1u64 << n;
    let (mut s1, mut s2) = (0.0, 0.0);
    for mask in 0..total {
        let (mut s, mut m) = (0i64, 0i64);
        for i in 0..n {
            s += if mask >> i & 1 == 1 { 1 } else { -1 };
            m = m.max(s.abs());
        }
        let v = (m * m) as f64;
        s1 += v;
        s2 += v * v;
    }
    let mean = s1 / total as f64;
    (mean, s2 / total as f64 - mean * mean)
}

fn pm1_rows() -> ArraySpec {
    ArraySpec::identical(DistSpec::SymmetricPm1, RowLength::Linear).unwrap()
}

fn within(p_hat: f64, exact: f64, reps: usize, k: f64) -> bool {
    let se = (exact * (1.0 - exact) / reps as f64).sqrt().max(1.0 / reps as f64);
    (p_hat - exact).abs() <= k * se
}

#[test]
fn walk_dp_matches_reflection_principle() {
    // P(max_k S_k >= a) = P(S_n >= a) + P(S_n > a); two-sided events at
    // small n are checked by brute force instead.
    for n in 1..=12 {
        for t in [0.5, 1.0, 2.5, 3.0] {
            let mut hits = 0u64;
            for mask in 0..1u64 << n {
                let mut s = 0i64;
                let mut hit = false;
                for i in 0..n {
                    s += if mask >> i & 1 == 1 { 1 } else { -1 };
                    hit |= s.abs() as f64 > t;
                }
                hits += hit as u64;
            }
            let brute = hits as f64 / (1u64 << n) as f64;
            assert!((walk_exceedance(n, t) - brute).abs() < 1e-12, "n {n} t {t}");
        }
    }
}

#[test]
fn law_of_large_numbers_at_linear_scale() {
    let mut plan = SimPlan::new(pm1_rows(), NormalizingSequence::power(1.0));
    plan.rows = vec![10_000];
    plan.reps = 2000;
    plan.epsilons = vec![0.5];
    plan.seed = 1;
    let report = wlln_estimate(&plan).unwrap();
    assert!(report.p_hat(10_000, 0.5).unwrap().p_hat <= 0.001);
}

#[test]
fn exceedance_matches_walk_dp() {
    let mut plan = SimPlan::new(pm1_rows(), NormalizingSequence::power(2.0));
    plan.rows = vec![64, 1024];
    plan.reps = 4000;
    plan.epsilons = vec![0.5, 1.0, 2.0];
    plan.seed = 5;
    let report = wlln_estimate(&plan).unwrap();
    for &n in &plan.rows {
        for &e in &plan.epsilons {
            let exact = walk_exceedance(n, e * (n as f64).sqrt());
            let p = report.p_hat(n, e).unwrap().p_hat;
            assert!(within(p, exact, plan.reps, 4.0), "n {n} eps {e}: {p} vs {exact}");
        }
    }
    // Brownian limit: P(sup_{t<=1} |W_t| > 1).
    let stay: f64 = (0..50)
        .map(|k| {
            let j = (2 * k + 1) as f64;
            (-1f64).powi(k) / j * (-j * j * std::f64::consts::PI.powi(2) / 8.0).exp()
        })
        .sum::<f64>()
        * 4.0
        / std::f64::consts::PI;
    assert!((walk_exceedance(1 << 16, 256.0) - (1.0 - stay)).abs() < 0.01);
}

#[test]
fn series_blocks_use_walk_probabilities() {
    let mut plan = SimPlan::new(pm1_rows(), NormalizingSequence::power(1.0));
    plan.rows = vec![16, 32, 64];
    plan.reps = 4000;
    plan.epsilons = vec![0.25, 0.5];
    plan.seed = 9;
    let report = slln_series_estimate(&plan, &SlowlyVarying::constant(), 1.0).unwrap();
    let harmonic = |n: usize| (1..=n).map(|i| 1.0 / i as f64).sum::<f64>();
    for (ei, s) in report.series.iter().enumerate() {
        let e = plan.epsilons[ei];
        let exact = walk_exceedance(64, e * 64.0);
        let p = report.p_hat(64, e).unwrap().p_hat;
        assert!(within(p, exact, plan.reps, 4.0), "eps {e}: {p} vs {exact}");
        let w = harmonic(127) - harmonic(63);
        assert!((s.blocks[2] - w * p).abs() < 1e-12);
        assert!((s.partial_sums[2] - s.blocks.iter().sum::<f64>()).abs() < 1e-12);
    }
}

#[test]
fn maximal_inequality_probe_matches_enumeration() {
    let arr = pm1_rows();
    for n in [4, 7, 10] {
        let reps = 20_000;
        let probe = condition_h_probe(&arr, 1.0, n, reps, 3, Execution::Parallel).unwrap();
        let (mean, var) = enumerate_max_square(n);
        assert_eq!(probe.rhs, n as f64);
        assert!((probe.lhs - mean).abs() <= 4.0 * (var / reps as f64).sqrt(), "n {n}: {} vs {mean}", probe.lhs);
    }
    // Doob: E max S_j^2 <= 4 E S_n^2 for martingales.
    let probe = condition_h_probe(&arr, 1.0, 100, 5000, 4, Execution::Parallel).unwrap();
    assert!(probe.c_hat <= 4.0);
    // One cell: the maximum is the single centered value, so the ratio is
    // Var / second moment, which is 1 for symmetric laws.
    let single = ArraySpec::identical(DistSpec::SymmetricPm1, RowLength::Constant(1)).unwrap();
    assert_eq!(condition_h_probe(&single, 1.0, 3, 500, 5, Execution::Parallel).unwrap().c_hat, 1.0);
    let single = ArraySpec::identical(DistSpec::ParetoTail { alpha: 1.5, cutoff: 1.0 }, RowLength::Constant(1)).unwrap();
    for a in [0.5, 2.0, 10.0] {
        let p = condition_h_probe(&single, a, 7, 20_000, 5, Execution::Parallel).unwrap();
        assert!((p.c_hat - 1.0).abs() <= 0.05, "a {a}: {}", p.c_hat);
    }
    let na = pm1_rows().with_dependence(RowDependence::GaussianNa { correlation: -0.1 }).unwrap();
    let p = condition_h_probe(&na, 1.0, 200, 2000, 6, Execution::Parallel).unwrap();
    assert!(p.c_hat.is_finite() && p.c_hat > 0.0 && p.c_hat <= 4.0, "{}", p.c_hat);
    let zero = ArraySpec::identical(DistSpec::Zero, RowLength::Linear).unwrap();
    assert!(condition_h_probe(&zero, 1.0, 5, 10, 0, Execution::Parallel).is_err());
}

fn path_plan(arr: ArraySpec, n_max: usize, reps: usize) -> SimPlan {
    let mut plan = SimPlan::new(arr, NormalizingSequence::power(1.0));
    plan.rows = (4..).map(|k| 1usize << k).take_while(|&n| n <= n_max).collect();
    plan.reps = reps;
    plan.epsilons = vec![0.1];
    plan.seed = 2;
    plan
}

#[test]
fn path_proxy_on_known_sequences() {
    let walk = ArraySpec::from_sequence("pm1", |_| DistSpec::SymmetricPm1);
    let r = slln_path_diagnostic(&path_plan(walk, 100_000, 50)).unwrap();
    let path = r.path.unwrap();
    assert_eq!(path.proxy_fraction, vec![(0.1, 1.0)]);
    assert!(path.spikes.iter().all(|b| b.mean_count == 0.0 && b.expected == 0.0));

    // |X_n| = 2n always exceeds b_n = n, and max_{j<=m} |S_j| >= m.
    let spiky = ArraySpec::from_sequence("spikes", |n| DistSpec::two_point(2.0 * n as f64, 1.0));
    let r = slln_path_diagnostic(&path_plan(spiky, 4096, 20)).unwrap();
    let path = r.path.unwrap();
    assert_eq!(path.proxy_fraction, vec![(0.1, 0.0)]);
    for b in &path.spikes {
        let size = (b.hi - b.lo + 1) as f64;
        assert_eq!(b.mean_count, size);
        assert_eq!(b.expected, size);
        assert_eq!(b.se, 0.0);
    }
    assert!(path.mean_tail_sup.iter().all(|&m| m >= 1.0));

    let zero = ArraySpec::from_sequence("zero", |_| DistSpec::Zero);
    let r = slln_path_diagnostic(&path_plan(zero, 4096, 5)).unwrap();
    let path = r.path.unwrap();
    assert_eq!(path.proxy_fraction, vec![(0.1, 1.0)]);
    assert!(path.mean_tail_sup.iter().all(|&m| m == 0.0));
}

#[test]
fn sampler_agrees_with_tail() {
    let n = 100_000;
    for d in [
        DistSpec::ParetoTail { alpha: 1.5, cutoff: 2.0 },
        DistSpec::two_point(3.0, 0.3),
        DistSpec::symmetric_atoms(&[(1.0, 0.5), (4.0, 0.25), (9.0, 0.25)]).unwrap(),
    ] {
        let arr = ArraySpec::identical(d.clone(), RowLength::Constant(n)).unwrap();
        let mut rng = stochdom::rng::stream(77, 1, 0);
        let x = arr.sample_row(1, &mut rng).unwrap();
        for t in [0.5, 2.5, 3.5, 8.0, 20.0] {
            let exact = d.tail_at(t);
            let freq = x.iter().filter(|v| v.abs() > t).count() as f64 / n as f64;
            let se = (exact * (1.0 - exact) / n as f64).sqrt();
            assert!((freq - exact).abs() <= 3.0 * se + 1e-12, "{d:?} at {t}: {freq} vs {exact}");
        }
        let positive = x.iter().filter(|v| **v > 0.0).count() as f64;
        let nonzero = x.iter().filter(|v| **v != 0.0).count() as f64;
        assert!((positive / nonzero - 0.5).abs() <= 3.0 * (0.25 / nonzero).sqrt());
    }
}

#[test]
fn replication_doubling_is_consistent() {
    let arr = ArraySpec::identical(DistSpec::ParetoTail { alpha: 1.5, cutoff: 1.0 }, RowLength::Linear).unwrap();
    let mut plan = SimPlan::new(arr, NormalizingSequence::power(1.2));
    plan.rows = vec![256];
    plan.epsilons = vec![0.5];
    plan.reps = 1000;
    plan.seed = 21;
    let small = wlln_estimate(&plan).unwrap().p_hat(256, 0.5).unwrap();
    plan.reps = 2000;
    let big = wlln_estimate(&plan).unwrap().p_hat(256, 0.5).unwrap();
    let se = (small.se.powi(2) + big.se.powi(2)).sqrt();
    assert!((small.p_hat - big.p_hat).abs() <= 4.0 * se.max(1e-3));
    assert!(big.se <= small.se);
}

#[test]
fn quadrature_against_closed_forms_and_sampling() {
    let uniform01 = TailFunction::analytic(Arc::new(|x: f64| (1.0 - x).clamp(0.0, 1.0)), vec![1.0], Some(1.0));
    let v = expectation_via_tail(&uniform01, &MomentFunction::power(2.0), 0.0).value;
    assert!((v - 1.0 / 3.0).abs() < 1e-10);

    let d = DistSpec::ParetoTail { alpha: 3.0, cutoff: 1.0 };
    let quad = expectation_via_tail(&d.tail(), &MomentFunction::power(1.0), 0.0).value;
    assert!((quad - 1.5).abs() < 1e-9);
    let n = 200_000;
    let arr = ArraySpec::identical(d, RowLength::Constant(n)).unwrap();
    let mut rng = stochdom::rng::stream(3, 1, 0);
    let x = arr.sample_row(1, &mut rng).unwrap();
    let mean = x.iter().map(|v| v.abs()).sum::<f64>() / n as f64;
    // Var |X| = alpha/(alpha-2) - (alpha/(alpha-1))^2 = 3/4.
    assert!((mean - quad).abs() <= 4.0 * (0.75 / n as f64).sqrt(), "{mean}");
}

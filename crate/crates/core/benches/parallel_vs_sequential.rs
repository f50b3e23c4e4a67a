//! Parallel and sequential execution of the two hot loops: Monte Carlo
//! replications and the row scan behind a domination functional.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stochdom::domination::{dyadic_grid, profile};
use stochdom::model::{ArraySpec, DistSpec, NormalizingSequence, RowLength, ScanConfig, WeightScheme};
use stochdom::simulate::{wlln_estimate, SimPlan};
use stochdom::Execution;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn monte_carlo(c: &mut Criterion) {
    let arr = ArraySpec::identical(DistSpec::ParetoTail { alpha: 1.5, cutoff: 1.0 }, RowLength::Linear).unwrap();
    let mut group = c.benchmark_group("wlln_estimate");
    group.sample_size(10);
    for (name, exec) in MODES {
        let mut plan = SimPlan::new(arr.clone(), NormalizingSequence::power(1.2));
        plan.rows = vec![1 << 12];
        plan.reps = 400;
        plan.exec = exec;
        group.bench_with_input(BenchmarkId::new(name, plan.reps), &plan, |b, plan| {
            b.iter(|| black_box(wlln_estimate(plan).unwrap()))
        });
    }
    group.finish();
}

fn row_scan(c: &mut Criterion) {
    let arr = ArraySpec::from_sequence("pareto ladder", |n| DistSpec::two_point((n as f64).sqrt(), 1.0 / n as f64));
    let grid = dyadic_grid(40);
    let mut group = c.benchmark_group("cesaro_profile");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = ScanConfig { n_sup: 20_000, exec };
        group.bench_with_input(BenchmarkId::new(name, cfg.n_sup), &cfg, |b, cfg| {
            b.iter(|| black_box(profile(&arr, &WeightScheme::Uniform, &grid, cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, row_scan);
criterion_main!(benches);

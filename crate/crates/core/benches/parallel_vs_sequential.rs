//! Data-parallel kernels against their sequential fallback.
//!
//! Each group runs the same workload with `Parallelism::Sequential` and
//! `Parallelism::Auto` (rayon when built with the `parallel` feature).

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lkdual::catalog;
use lkdual::dual_lmi::{assemble, AssemblyOptions};
use lkdual::oracle::abscissa_sweep;
use lkdual::par::Parallelism;
use lkdual::sdp::{solve, SolverConfig};
use std::hint::black_box;

const MODES: [(&str, Parallelism); 2] = [
    ("sequential", Parallelism::Sequential),
    ("auto", Parallelism::Auto),
];

/// Interior-point solves, dominated by Schur-complement assembly.
fn bench_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("sdp_solve");
    group.sample_size(10);
    let cases = [
        ("scalar_delay_d3", catalog::scalar_delay(1.5).unwrap(), 3),
        (
            "oscillator_two_delay_d1",
            catalog::oscillator_two_delay(1.2).unwrap(),
            1,
        ),
    ];
    for (name, sys, d) in cases {
        let program = assemble(&sys, d, &AssemblyOptions::default()).unwrap();
        for (label, mode) in MODES {
            let config = SolverConfig {
                parallelism: mode,
                ..SolverConfig::default()
            };
            group.bench_with_input(BenchmarkId::new(label, name), &program, |b, p| {
                b.iter(|| black_box(solve(&p.problem, &config).unwrap().status))
            });
        }
    }
    group.finish();
}

/// Spectral-abscissa sweeps over a parameter grid.
fn bench_oracle_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle_sweep");
    group.sample_size(10);
    let family = catalog::oscillator_two_delay_family();
    let grid: Vec<f64> = (0..16).map(|i| 0.3 + 0.15 * i as f64).collect();
    for (label, mode) in MODES {
        group.bench_function(BenchmarkId::new(label, grid.len()), |b| {
            b.iter(|| black_box(abscissa_sweep(&family, &grid, 24, mode).unwrap().len()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_solve, bench_oracle_sweep);
criterion_main!(benches);

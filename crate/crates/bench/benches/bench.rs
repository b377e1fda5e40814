use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use delaylab_bench::{base_case, base_equilibrium, base_trajectory, STEP};
use delaylab_core::analysis::{check_theorem2, lyapunov, solve_equilibrium};
use delaylab_core::{integrate, HistoryBuffer};

fn bench_integrate(c: &mut Criterion) {
    let (p, law) = base_case();
    c.bench_function("integrate_200s", |b| {
        b.iter(|| {
            let hist = HistoryBuffer::constant(STEP, p.max_delay(), 1.0).unwrap();
            integrate(black_box(&p), &law, hist, 200.0, STEP).unwrap()
        })
    });
}

fn bench_analysis(c: &mut Criterion) {
    let (p, law) = base_case();
    c.bench_function("solve_equilibrium", |b| {
        b.iter(|| solve_equilibrium(black_box(&p), &law).unwrap())
    });
    c.bench_function("check_theorem2_256", |b| {
        b.iter(|| check_theorem2(black_box(&p), &law, (0.5, 3.0), 256).unwrap())
    });

    let traj = base_trajectory(200.0);
    let eq = base_equilibrium();
    c.bench_function("lyapunov_value_201", |b| {
        b.iter(|| {
            lyapunov::lyapunov_value(&traj, black_box(100.0), &eq, lyapunov::DEFAULT_NODES).unwrap()
        })
    });
}

criterion_group!(benches, bench_integrate, bench_analysis);
criterion_main!(benches);

//! Sequential vs data-parallel execution on the hot loops.
//!
//! Built without the `parallel` feature both variants run the sequential path.

use std::hint::black_box;

use blowup_core::criterion::{classify_eps, CriterionConfig};
use blowup_core::diffusion::DiffusionStep;
use blowup_core::nonlinearity::ScalarFunction;
use blowup_core::simulator::{simulate, SimConfig};
use blowup_core::spectral::{principal_eigenpair, DomainGrid};
use blowup_core::Exec;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn eps_schedule(c: &mut Criterion) {
    let g = DomainGrid::interval(0.0, 1.0, 199).unwrap();
    let l = principal_eigenpair(&g).unwrap().lambda0;
    let f = ScalarFunction::power(2.0);
    let weights: Vec<ScalarFunction> = [0.5, 1.0, 1.5]
        .iter()
        .flat_map(|k| [0.5, 1.0, 2.0].map(|s| ScalarFunction::time_weight(s, k * l)))
        .collect();
    let mut group = c.benchmark_group("four_case_eps_schedule");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = CriterionConfig { exec, ..Default::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                for psi in &weights {
                    black_box(classify_eps(psi, &f, l, &cfg));
                }
            })
        });
    }
    group.finish();
}

fn line_solves(c: &mut Criterion) {
    let g = DomainGrid::rectangle(0.0, 1.0, 0.0, 1.0, 101).unwrap();
    let e = principal_eigenpair(&g).unwrap();
    let mut group = c.benchmark_group("diffusion_step_101x101");
    for (name, exec) in MODES {
        let step = DiffusionStep::new(&g, 1e-3, 0.5, &[], exec);
        let mut u = e.phi0_sup.clone();
        group.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| step.apply(black_box(&mut u))));
    }
    group.finish();
}

fn square_simulation(c: &mut Criterion) {
    let g = DomainGrid::rectangle(0.0, 1.0, 0.0, 1.0, 101).unwrap();
    let e = principal_eigenpair(&g).unwrap();
    let psi = ScalarFunction::constant(1.0);
    let f = ScalarFunction::power(2.0);
    let u0: Vec<f64> = e.phi0_sup.iter().map(|p| 5.0 * p).collect();
    let mut group = c.benchmark_group("simulate_101x101");
    group.sample_size(10);
    for (name, exec) in MODES {
        let cfg = SimConfig { exec, ..Default::default() };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| black_box(simulate(&g, &e, &psi, &f, &u0, 0.1, &cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, eps_schedule, line_solves, square_simulation);
criterion_main!(benches);

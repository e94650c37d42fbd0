use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spr_kinetics::cases;
use spr_kinetics::fit::FitConfig;
use spr_kinetics::oracle;
use spr_kinetics::probes::{ProbeState, SensingScenario};
use spr_kinetics::simulate::{self, NoiseSpace, SimulationPlan};
use spr_kinetics::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn ensemble(c: &mut Criterion) {
    let case = cases::resolve_case("kausaite2007").unwrap();
    let signal = case.ideal().unwrap().signal;
    let plan = SimulationPlan {
        nu: 100,
        m: 10,
        p: 50,
        seed: 42,
        state: ProbeState::fock(10.0).unwrap(),
        scenario: SensingScenario::standard(1.0).unwrap(),
        grid: case.grid,
        tau_s: case.kinetics.tau_s,
        l0: case.kinetics.l0,
        noise_space: NoiseSpace::Measurement,
        noise_scale: 1.0,
        fit: FitConfig::default(),
    };
    let mut group = c.benchmark_group("ensemble_p50_m10");
    group.sample_size(20);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| simulate::run_ensemble_with(&plan, &signal, mode).unwrap())
        });
    }
    group.finish();
}

fn verification(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle_cutoff40_tuples10");
    group.sample_size(10);
    for (name, mode) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &mode, |b, &mode| {
            b.iter(|| oracle::verify_closed_forms(40, 10, 7, 1e-6, mode).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ensemble, verification);
criterion_main!(benches);

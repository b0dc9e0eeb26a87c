use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use omniwpt::{
    coupling_set, loop_mutual, prototype_layout, run_sweep, solve_full, tune_xt, v_s_from_dc,
    CouplingSet, FilamentLoop, Pose, QuadratureSpec, Scenario, SystemConfig, Vec3,
};

fn bench_loop_mutual(c: &mut Criterion) {
    let spec = QuadratureSpec::default();
    let a = FilamentLoop::new(Pose::identity(), 0.13).unwrap();
    let tilted = Pose::new(Vec3::new(0.2, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.3)).unwrap();
    let b = FilamentLoop::new(tilted, 0.15).unwrap();
    c.bench_function("loop_mutual/tilted", |bench| {
        bench.iter(|| loop_mutual(black_box(&a), black_box(&b), &spec).unwrap())
    });
}

fn bench_coupling_set(c: &mut Criterion) {
    let spec = QuadratureSpec::default();
    let layout = prototype_layout(0.3, 0.2).unwrap();
    c.bench_function("coupling_set/no_cross", |bench| {
        bench.iter(|| coupling_set(black_box(&layout), &spec, false).unwrap())
    });
}

fn bench_solve_full(c: &mut Criterion) {
    let omega = 2.0 * PI * 592.6e3;
    let couplings = CouplingSet::uniform(3.1e-6, [2e-6, -1e-6, 0.5e-6], 0.7).unwrap();
    let mut config = SystemConfig::ideal(
        omega,
        v_s_from_dc(10.0),
        20.0,
        tune_xt(0.7, 3.1e-6, omega),
        couplings,
    );
    config.r_tx = [0.049, 0.047, 0.039];
    config.r_rp = [0.055, 0.055, 0.037];
    config.r_rx = 0.469;
    c.bench_function("solve_full", |bench| {
        bench.iter(|| solve_full(black_box(&config)).unwrap())
    });
}

fn bench_sweep(c: &mut Criterion) {
    let scenario = Scenario::prototype()
        .with_overrides(&[
            "sweep.stop_deg=60",
            "sweep.step_deg=15",
            "electrical.include_cross=false",
        ])
        .unwrap();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("five_angles", |bench| {
        bench.iter(|| run_sweep(black_box(&scenario)).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_loop_mutual,
    bench_coupling_set,
    bench_solve_full,
    bench_sweep
);
criterion_main!(benches);

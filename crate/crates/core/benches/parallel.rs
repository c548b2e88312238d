//! Parallel-vs-serial throughput of the two fan-out workloads: parameter
//! sweeps and multi-start calibration. Run with `cargo bench`; compare
//! against `--no-default-features` to measure the plain sequential build.

use criterion::{criterion_group, criterion_main, Criterion};

use ovrv::{
    calibrate, calibrate_serial, simulate_follower, stability_sweep, stability_sweep_serial,
    BuiltinProfile, CalibrationConfig, CalibrationProblem, Integrator, ModelParams, Trajectory,
};

fn sweep_benches(c: &mut Criterion) {
    let k1 = (0.01, 1.0);
    let k2 = (0.0, 1.0);
    let tau = [0.8, 1.2, 1.6];
    let mut group = c.benchmark_group("stability_sweep_40x40x3");
    group.bench_function("parallel", |b| {
        b.iter(|| stability_sweep(k1, k2, &tau, 40).unwrap())
    });
    group.bench_function("serial", |b| {
        b.iter(|| stability_sweep_serial(k1, k2, &tau, 40).unwrap())
    });
    group.finish();
}

fn calibration_problem() -> CalibrationProblem {
    let truth = ModelParams::new(0.1, 0.5, 1.2, 6.0).unwrap();
    let lead = BuiltinProfile::D.series(0.1, 1).unwrap();
    let v0 = lead.values()[0];
    let s0 = truth.equilibrium_gap(v0).unwrap();
    let sim = simulate_follower(&truth, &lead, s0, v0, 0.1, Integrator::Euler).unwrap();
    let traj = Trajectory::new(
        lead.t0(),
        lead.dt(),
        lead.values().to_vec(),
        sim.v,
        sim.s,
        Default::default(),
    )
    .unwrap();
    let config = CalibrationConfig {
        n_starts: 16,
        seed: 5,
        ..CalibrationConfig::default()
    };
    CalibrationProblem::new(vec![traj], config).unwrap()
}

fn calibrate_benches(c: &mut Criterion) {
    let problem = calibration_problem();
    let mut group = c.benchmark_group("calibrate_16_starts");
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| calibrate(&problem).unwrap()));
    group.bench_function("serial", |b| b.iter(|| calibrate_serial(&problem).unwrap()));
    group.finish();
}

criterion_group!(benches, sweep_benches, calibrate_benches);
criterion_main!(benches);

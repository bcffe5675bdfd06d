use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sharpfront::{
    c_star_no_delay, critical_speed, integrate_phase_ode, shoot, simulate, InitialCondition, Kinetics,
    OptimizerOptions, PhaseOptions, ShootConfig, SimConfig, SpeedOptions, WaveParams,
};

fn shooting(c: &mut Criterion) {
    let k = Kinetics::fisher();
    let cfg = ShootConfig::default();
    let mut g = c.benchmark_group("shoot");
    for r in [0.0, 0.5] {
        let p = WaveParams::new(2.0, 1.0, r, 0.9).unwrap();
        g.bench_function(format!("fisher_m2_r{r}"), |b| b.iter(|| shoot(&k, black_box(&p), &cfg).unwrap()));
    }
    g.finish();
}

fn speed(c: &mut Criterion) {
    let k = Kinetics::fisher();
    let opts = SpeedOptions::with_tol(1e-6);
    let mut g = c.benchmark_group("critical_speed");
    g.sample_size(20);
    for r in [0.0, 1.0] {
        g.bench_function(format!("fisher_m2_r{r}"), |b| {
            b.iter(|| critical_speed(&k, 2.0, 1.0, black_box(r), &opts).unwrap())
        });
    }
    g.finish();
}

fn phase(c: &mut Criterion) {
    let k = Kinetics::fisher();
    let p = WaveParams::new(2.0, 1.0, 0.5, 0.7034674).unwrap();
    let opts = PhaseOptions::default();
    c.bench_function("phase_ode_fisher_r0.5", |b| {
        b.iter(|| integrate_phase_ode(&k, black_box(&p), 0.99, &opts).unwrap())
    });
}

fn variational(c: &mut Criterion) {
    let k = Kinetics::fisher();
    let opts = OptimizerOptions::default();
    c.bench_function("c_star_no_delay_m2", |b| b.iter(|| c_star_no_delay(&k, black_box(2.0), 1.0, &opts).unwrap()));
}

fn pde(c: &mut Criterion) {
    let k = Kinetics::fisher();
    let cfg = SimConfig::new(2.0, 1.0, 0.5, 20.0, 0.1, 5.0, InitialCondition::Step { x_front: 2.0, height: 1.0 });
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    g.bench_function("fisher_m2_r0.5_small", |b| b.iter(|| simulate(&k, black_box(&cfg)).unwrap()));
    g.finish();
}

criterion_group!(benches, shooting, speed, phase, variational, pde);
criterion_main!(benches);

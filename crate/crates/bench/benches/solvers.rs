use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qtrack_core::event::{generate_event, EventGenConfig};
use qtrack_core::ising::{ising_to_qubo, qubo_to_ising};
use qtrack_core::network::{mean_field_anneal, NeuronNetwork};
use qtrack_core::presets;
use qtrack_core::segments::build_segments;
use qtrack_core::solvers::{brute_force, simulated_anneal, simulated_quantum_anneal, AnnealSchedule, SqaParams};
use qtrack_core::{DetectorGeometry, IsingProblem};

fn spin_glass(n: usize, seed: u64) -> IsingProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = IsingProblem::new(n);
    for i in 0..n {
        p.set_field(i, rng.random_range(-1.0..1.0));
        for j in i + 1..n {
            p.add_coupling(i, j, rng.random_range(-1.0..1.0)).unwrap();
        }
    }
    p
}

fn transforms(c: &mut Criterion) {
    let p = spin_glass(64, 1);
    c.bench_function("ising_to_qubo_round_trip_n64", |b| {
        b.iter(|| qubo_to_ising(&ising_to_qubo(black_box(&p))))
    });
}

fn exact(c: &mut Criterion) {
    let p = spin_glass(16, 2);
    c.bench_function("brute_force_n16", |b| b.iter(|| brute_force(black_box(&p)).unwrap()));
}

fn annealers(c: &mut Criterion) {
    let mut group = c.benchmark_group("annealers");
    group.sample_size(10);
    let p16 = spin_glass(16, 3);
    group.bench_function("sa_preset_n16", |b| {
        b.iter(|| simulated_anneal(black_box(&p16), &AnnealSchedule::preset(0)).unwrap())
    });
    let p12 = spin_glass(12, 4);
    group.bench_function("sqa_preset_n12", |b| {
        b.iter(|| simulated_quantum_anneal(black_box(&p12), &SqaParams::preset(0)).unwrap())
    });
    group.finish();
}

fn track_finding(c: &mut Criterion) {
    let geometry = DetectorGeometry::uniform(6, 1.0, 1.0, 0.0).unwrap();
    let config = EventGenConfig {
        n_tracks: 5,
        noise_hit_count: 6,
        seed: 5,
        ..EventGenConfig::default()
    };
    let event = generate_event(&config, &geometry).unwrap();
    let cuts = presets::segment_cuts();
    let segments = build_segments(&event, &cuts).unwrap();
    let net = NeuronNetwork::from_segments(&segments, &presets::DP_PARAMS, cuts.max_kink_angle).unwrap();
    let schedule = presets::meanfield_schedule();
    let mut group = c.benchmark_group("track_finding");
    group.sample_size(10);
    group.bench_function("build_network_5x6", |b| {
        b.iter(|| NeuronNetwork::from_segments(black_box(&segments), &presets::DP_PARAMS, cuts.max_kink_angle).unwrap())
    });
    group.bench_function("mean_field_5x6", |b| b.iter(|| mean_field_anneal(black_box(&net), &schedule, 0).unwrap()));
    group.finish();
}

criterion_group!(benches, transforms, exact, annealers, track_finding);
criterion_main!(benches);

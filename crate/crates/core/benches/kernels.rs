use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};

use sqg_core::biot_savart::{BiotSavart, KernelParams, Summation};
use sqg_core::evolution::{advect_field, GridSampler};
use sqg_core::field::Grid;
use sqg_core::par::Exec;
use sqg_core::profiles::Profile;

const DATUM: Profile = Profile::GaussianXy { a: 1.0, b: 1.0, support: 1.0 };
const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn velocity(c: &mut Criterion) {
    let h = 1.0 / 32.0;
    let g = Grid::half_plane(h, 1.0, 0.25).unwrap();
    let theta = DATUM.sample(g).unwrap();
    let mut group = c.benchmark_group("velocity");
    group.sample_size(10);
    for summation in [Summation::Direct, Summation::Fft] {
        let op = BiotSavart::new(g, KernelParams::mollified(2.0 * h).with_summation(summation)).unwrap();
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(format!("{summation:?}"), name), &exec, |b, &exec| {
                b.iter(|| op.apply(black_box(&theta), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn advect(c: &mut Criterion) {
    let h = 1.0 / 128.0;
    let g = Grid::half_plane(h, 1.0, 0.25).unwrap();
    let theta = DATUM.sample(g).unwrap();
    let op = BiotSavart::new(g, KernelParams::mollified(2.0 * h).with_summation(Summation::Fft)).unwrap();
    let u = op.apply(&theta, Exec::default()).unwrap();
    let sampler = GridSampler::new(&u);
    let speed = u.max_speed();
    let dt = 0.5 * h / speed;
    let mut group = c.benchmark_group("advect");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| advect_field(black_box(&theta), &sampler, speed, dt, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, velocity, advect);
criterion_main!(benches);

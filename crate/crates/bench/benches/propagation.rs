use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion, Throughput};

use hydronoise_bench::{context, samples, scenario};
use hydronoise_core::engine::{brute_force_field, compute_noise_field, minute_instant, Propagator};
use hydronoise_core::grid::MonthKey;

fn kernel(c: &mut Criterion) {
    let s = scenario("small");
    let mut group = c.benchmark_group("emit");
    for f in [63, 4000] {
        let params = *s.table.get(f).unwrap();
        let prop = Propagator::new(&s.grid, params, context()).unwrap();
        let month = MonthKey::of(minute_instant(*s.window.minutes().start()));
        let ambient = s.ambient.get(f, month).unwrap();
        let srcs = samples(&s, f);
        let mut acc = vec![0.0f64; s.grid.sea_cell_count()];
        group.throughput(Throughput::Elements(srcs.len() as u64));
        group.bench_function(format!("{f}Hz"), |b| {
            b.iter(|| {
                for src in &srcs {
                    black_box(prop.emit(src, ambient, |i, x| acc[i] += x));
                }
            })
        });
    }
    group.finish();
}

fn engine(c: &mut Criterion) {
    let mut group = c.benchmark_group("compute");
    group.sample_size(10);
    for preset in ["small", "large"] {
        let s = scenario(preset);
        for f in [63, 4000] {
            let params = *s.table.get(f).unwrap();
            group.bench_function(format!("{preset}/{f}Hz"), |b| {
                b.iter(|| compute_noise_field(&s.trips, &s.grid, &s.ambient, &params, &context(), s.window).unwrap())
            });
        }
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let s = scenario("tiny");
    let params = *s.table.get(125).unwrap();
    let mut group = c.benchmark_group("tiny/125Hz");
    group.sample_size(10);
    group.bench_function("engine", |b| {
        b.iter_batched(
            || s.trips.clone(),
            |trips| compute_noise_field(&trips, &s.grid, &s.ambient, &params, &context(), s.window).unwrap(),
            BatchSize::SmallInput,
        )
    });
    group.bench_function("brute_force", |b| {
        b.iter(|| brute_force_field(&s.trips, &s.grid, &s.ambient, &params, &context(), s.window).unwrap())
    });
    group.finish();
}

criterion_group!(benches, kernel, engine, oracle);
criterion_main!(benches);

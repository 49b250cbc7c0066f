use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use prufer_embed::analysis::{absence_check, default_angles};
use prufer_embed::energy::Energy;
use prufer_embed::par::Exec;
use prufer_embed::potentials::{sign_type_run, twocase_segment, SegmentParams};
use prufer_embed::solver::Stride;
use prufer_embed::verify::constants_summary;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn constants_table(c: &mut Criterion) {
    let mut g = c.benchmark_group("constants_table");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, 300), &exec, |b, &exec| {
            b.iter(|| constants_summary(300, exec).unwrap())
        });
    }
    g.finish();
}

fn angle_sweep(c: &mut Criterion) {
    let energy = Energy::from_k(0.5 * (5f64.sqrt() - 1.0)).unwrap();
    let angles = default_angles(16);
    let n_max = 50_000;
    let mut g = c.benchmark_group("absence_check");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new(name, angles.len()), &exec, |b, &exec| {
            b.iter(|| {
                absence_check(energy, 1.0, &angles, (1_000, n_max), exec, |bc| {
                    sign_type_run(1.0, energy, bc, None, n_max, Stride::default()).map(|r| r.trajectory)
                })
            })
        });
    }
    g.finish();
}

fn phase_scan(c: &mut Criterion) {
    let mut g = c.benchmark_group("segment_phase_scan");
    g.sample_size(10);
    for (name, exec) in MODES {
        let params = SegmentParams { exec, ..SegmentParams::default() };
        g.bench_with_input(BenchmarkId::new(name, params.grid), &params, |b, p| {
            b.iter(|| twocase_segment(1.0, &[-0.6], 1_000, 16_000, 0, 0.3, p).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, constants_table, angle_sweep, phase_scan);
criterion_main!(benches);

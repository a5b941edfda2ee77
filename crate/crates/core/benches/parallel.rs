use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use combsim::linkchan::{ssfm_span, StepControl};
use combsim::par::Exec;
use combsim::sigkit::Format;
use combsim::sim::{receive, transmit, RunConfig};

fn small_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.frame_len = 1 << 12;
    cfg.step.step_km = 4.0;
    cfg
}

fn bench_span(c: &mut Criterion) {
    let cfg = small_config();
    let tx = transmit(&cfg, Format::Qam16, 1).unwrap();
    let mut group = c.benchmark_group("ssfm_span");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        let step = StepControl {
            step_km: cfg.step.step_km,
            exec,
        };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &step, |b, step| {
            b.iter(|| {
                let mut field = tx.field.clone();
                ssfm_span(&mut field, &cfg.fiber, step).unwrap();
                field
            })
        });
    }
    group.finish();
}

fn bench_receiver(c: &mut Criterion) {
    let cfg = small_config();
    let tx = transmit(&cfg, Format::Qam16, 1).unwrap();
    let mut group = c.benchmark_group("receive");
    group.sample_size(10);
    for exec in [Exec::Sequential, Exec::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| receive(&tx.field, &tx, &cfg, 0, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_span, bench_receiver);
criterion_main!(benches);

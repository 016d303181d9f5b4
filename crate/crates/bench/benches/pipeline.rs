use std::f64::consts::TAU;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use timebin::analysis::{fit_visibility, PhaseScan};
use timebin::config::ExperimentConfig;
use timebin::qkd::{run_session, QkdConfig};
use timebin::sensor::{simulate_acquisition, AcquisitionPlan, IlluminationMap, OpticalChannel, PhaseProgram, RampTarget, SensorConfig};
use timebin::tagstream::{decode_records, SyncHistogrammer, HEADER_BYTES, RECORD_BYTES};
use timebin_bench::three_peak_file;

fn decode_and_histogram(c: &mut Criterion) {
    let bytes = three_peak_file(1_000_000);
    let n = (bytes.len() - HEADER_BYTES) / RECORD_BYTES;
    let mut g = c.benchmark_group("tagstream");
    g.throughput(Throughput::Elements(n as u64));
    g.bench_function("decode+histogram", |b| {
        b.iter(|| {
            let mut h = SyncHistogrammer::all_channels(10, 0, 5000).unwrap();
            for r in decode_records(&bytes[HEADER_BYTES..]) {
                h.push(r).unwrap();
            }
            black_box(h.finish())
        })
    });
    g.finish();
}

fn simulate(c: &mut Criterion) {
    let plan = AcquisitionPlan::new(0.01, PhaseProgram::ramp(0.01, 32, 1, RampTarget::Analyzer, 0.0));
    let illum = IlluminationMap::uniform(8, 8, 5e6).unwrap();
    let channel = OpticalChannel::default();
    let sensor = SensorConfig::default();
    let mut g = c.benchmark_group("sensor");
    g.sample_size(20);
    g.throughput(Throughput::Elements(plan.pulse_count()));
    g.bench_function("simulate 64 px", |b| {
        b.iter(|| black_box(simulate_acquisition(&plan, &illum, &channel, &sensor, 7).unwrap()))
    });
    g.finish();
}

fn fit(c: &mut Criterion) {
    let counts: Vec<f64> = (0..32).map(|i| 1000.0 * (1.0 + 0.95 * (TAU * i as f64 / 32.0).cos())).collect();
    let scan = PhaseScan::from_counts(&counts, 1.0);
    c.bench_function("fit_visibility 32 samples", |b| b.iter(|| black_box(fit_visibility(black_box(&scan)).unwrap())));
}

fn qkd(c: &mut Criterion) {
    let cfg = ExperimentConfig::default();
    let mut channel = cfg.optical_channel();
    channel.surface = channel.surface.at_rotation(20.0);
    let mut g = c.benchmark_group("qkd");
    g.sample_size(10);
    g.throughput(Throughput::Elements(1_000_000));
    g.bench_function("session 1e6 pulses", |b| {
        b.iter(|| black_box(run_session(1_000_000, &channel, &cfg.sensor, &QkdConfig::default(), 3).unwrap()))
    });
    g.finish();
}

criterion_group!(benches, decode_and_histogram, simulate, fit, qkd);
criterion_main!(benches);

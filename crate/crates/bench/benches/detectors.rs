use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use edetect::evidence::{Aggregation, DetectorSpec, EvidenceFamily};
use edetect::metrics::ChangeConfiguration;
use edetect::simlab::{DetectorBank, GeneratorFamily, StreamGeneratorSpec};

const TICKS: u64 = 200;

fn detectors(c: &mut Criterion) {
    let k = 50;
    let gen = StreamGeneratorSpec::new(
        GeneratorFamily::SymmetryChange { shift: 1.0 },
        ChangeConfiguration::global_null(k),
    )
    .unwrap();
    let families = [
        ("gaussian", EvidenceFamily::Gaussian { delta: 1.0 }),
        ("subgaussian", EvidenceFamily::SubGaussian { lambda: 0.5, sigma: 1.0 }),
        ("symmetry", EvidenceFamily::Symmetry { lambda: 0.5 }),
        ("symmetry-additive", EvidenceFamily::SymmetryAdditive { lambda: 1.0 }),
        ("conformal", EvidenceFamily::Conformal { kappa: 0.5 }),
    ];
    // One replication of TICKS steps across all K streams, data generation included.
    let mut group = c.benchmark_group("bank_200_ticks_k50");
    group.sample_size(20);
    for (name, family) in families {
        for aggregation in [Aggregation::Sr, Aggregation::Cusum] {
            let spec = DetectorSpec::new(family, aggregation);
            let id = BenchmarkId::new(name, format!("{aggregation:?}").to_lowercase());
            group.bench_function(id, |b| {
                b.iter(|| {
                    let mut bank = DetectorBank::new(spec, k).unwrap();
                    for t in 1..=TICKS {
                        black_box(bank.step(&gen, 3, 0, t).unwrap());
                    }
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, detectors);
criterion_main!(benches);

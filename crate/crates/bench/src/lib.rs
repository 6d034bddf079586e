//! Criterion benchmarks for edetect live under `benches/`.

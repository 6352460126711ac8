//! Criterion benchmarks for `locc-core` live under `benches/`.

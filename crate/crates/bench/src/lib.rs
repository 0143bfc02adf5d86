//! Benchmarks for the numerical core live under `benches/`.

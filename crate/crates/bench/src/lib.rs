//! Criterion benchmarks for `steerlat`; see `benches/`.

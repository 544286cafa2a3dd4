//! Criterion benchmarks for `purify-core`. See `benches/`.

//! Criterion benchmarks for the two-stage pipeline; see `benches/`.

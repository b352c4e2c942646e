//! Criterion benchmarks for the scoring and analysis hot paths; see `benches/`.

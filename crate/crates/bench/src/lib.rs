//! Criterion benchmarks for the fitting hot paths; see `benches/`.

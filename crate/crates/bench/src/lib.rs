//! Criterion benchmarks for `jetmoments-core`; see `benches/core.rs`.

//! Criterion benchmarks for the subset search and the posterior sampler live
//! in `benches/`; this crate has no library code of its own.

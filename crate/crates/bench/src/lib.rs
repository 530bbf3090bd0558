//! Benchmark-only crate; the actual benches live in `benches/`.

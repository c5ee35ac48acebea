//! Criterion benchmarks for the gradlase solvers live in `benches/`.

//! Criterion benchmarks for the qgsw-core kernels; see `benches/`.

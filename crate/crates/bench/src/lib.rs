//! Benchmarks for the topomode solvers live under `benches/`.

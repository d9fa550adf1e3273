//! Criterion benchmarks for the spectrum routines and the key-rate pipeline; see `benches/`.

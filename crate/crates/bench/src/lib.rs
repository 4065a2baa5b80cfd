//! Benchmark harness crate; see benches/kernels.rs.

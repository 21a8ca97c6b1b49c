//! Benchmark shell crate; see benches/kernels.rs.

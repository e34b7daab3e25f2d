//! Shared fixtures for the criterion benchmarks.

use dlparity::zp::GroupSpec;

/// Benchmark group sizes: big enough to expose kernel costs, small enough
/// for quick runs.
pub const BENCH_PRIMES: [u64; 3] = [101, 251, 503];

pub fn group(p: u64) -> GroupSpec {
    GroupSpec::new(p).expect("benchmark primes are prime")
}

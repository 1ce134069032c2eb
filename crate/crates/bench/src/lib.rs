//! Shared fixtures for the criterion benches.

use covertkey_core::covert::{CovertConfig, Rho};
use covertkey_core::sim::{sample_codebooks, CodebookPair, UserSizes};
use covertkey_core::BinaryMacPair;

/// Channel 1 at the weight split used throughout the examples.
pub fn channel_one(alpha: f64) -> (BinaryMacPair, CovertConfig) {
    let cfg = CovertConfig::new(Rho::new(0.28, 0.72).expect("valid split"), alpha).expect("valid amplitude");
    (BinaryMacPair::table1_channel1(), cfg)
}

/// Codebooks with the same `(G, M, N)` for both users.
pub fn codebooks(n: usize, sizes: (u64, u64, u64), cfg: &CovertConfig, seed: u64) -> CodebookPair {
    let s = UserSizes::new(sizes.0, sizes.1, sizes.2);
    sample_codebooks(n, [s, s], cfg, seed).expect("codebooks fit the cap")
}

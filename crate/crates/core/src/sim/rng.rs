//! Counter-based random streams.
//!
//! Every random draw is addressed by `(seed, domain, index)`: the seed and
//! domain select a ChaCha key, the index selects the stream. Results therefore
//! do not depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Codewords of user 1.
pub const CODEBOOK_1: u64 = 1;
/// Codewords of user 2.
pub const CODEBOOK_2: u64 = 2;
/// Rounds of the auxiliary scheme.
pub const AUX_TRIALS: u64 = 3;
/// Rounds of the key generation protocol.
pub const PROTOCOL_TRIALS: u64 = 4;
/// Codebook seeds of an ensemble.
pub const ENSEMBLE: u64 = 5;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent seed for a sub-task.
pub fn derive_seed(seed: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(domain)) ^ index)
}

/// Stream `index` of the generator keyed by `(seed, domain)`.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (k, chunk) in key.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&derive_seed(seed, domain, k as u64).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

//! Deterministic substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 stream whose key is
//! derived from the user seed and a small tuple of labels (a purpose tag plus
//! indices such as generation, round, or block number). Work split across
//! threads therefore reproduces the serial result bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Number of samples drawn from one substream when a population is filled.
pub const BLOCK: usize = 4096;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a seed with an ordered list of labels into a new 64-bit key.
pub fn derive(seed: u64, labels: &[u64]) -> u64 {
    labels
        .iter()
        .fold(splitmix(seed), |acc, &l| splitmix(acc ^ splitmix(l)))
}

/// Open the substream identified by `(seed, labels...)`.
pub fn substream(seed: u64, labels: &[u64]) -> ChaCha8Rng {
    let key = derive(seed, labels);
    let mut bytes = [0u8; 32];
    for (i, chunk) in bytes.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&splitmix(key.wrapping_add(i as u64)).to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

/// Purpose tags, so that unrelated consumers of the same seed never share a stream.
pub mod tag {
    pub const CHANNEL: u64 = 1;
    pub const CHECK_UPDATE: u64 = 2;
    pub const VAR_UPDATE: u64 = 3;
    pub const DE: u64 = 4;
    pub const PHI: u64 = 5;
    pub const GRAPH_LAYOUT: u64 = 6;
    pub const GRAPH_COUNTS: u64 = 7;
    pub const GRAPH_CHECK: u64 = 8;
    pub const ORACLE: u64 = 9;
    pub const BETHE: u64 = 10;
    pub const PROBE: u64 = 11;
    pub const POSTERIOR: u64 = 12;
}

//! Counter-based seed derivation.
//!
//! Every random stream in the crate is addressed by a path of integers
//! hanging off a master seed, e.g. `[HIDDEN, branch, j, k]`. Streams with
//! different paths are statistically independent, and the result never
//! depends on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream tags used by the design builders.
pub mod tag {
    pub const INPUT: u64 = 1;
    pub const INPUT_PF: u64 = 2;
    pub const HIDDEN: u64 = 3;
    pub const AUX: u64 = 4;
    pub const TUPLES: u64 = 5;
    pub const TIES: u64 = 6;
    pub const SUBSETS: u64 = 7;
    pub const REPLICATION: u64 = 8;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` and a path of counters.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| {
        splitmix64(acc ^ splitmix64(p.wrapping_add(0x632B_E59B_D9B4_E019)))
    })
}

pub fn stream(master: u64, path: &[u64]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master, path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_are_distinct() {
        let a = derive_seed(7, &[1, 0, 3]);
        let b = derive_seed(7, &[1, 3, 0]);
        let c = derive_seed(7, &[1, 0, 3, 0]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(7, &[1, 0, 3]));
    }
}

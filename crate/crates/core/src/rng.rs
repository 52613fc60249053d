//! Portable seeded randomness.
//!
//! Every stream is a xoshiro256++ generator seeded through splitmix64, so
//! results are identical on every platform. Independent streams (per-frame
//! noise, per-object isolation renders, background training) get their own
//! seeds from [`derive_seed`], which keeps one consumer's draws from
//! shifting another's.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SceneRng = Xoshiro256PlusPlus;

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream identifiers for [`derive_seed`].
pub mod stream {
    pub const FRAME_NOISE: u64 = 1;
    pub const ISOLATION_NOISE: u64 = 2;
    pub const BACKGROUND_NOISE: u64 = 3;
    pub const POSE_SAMPLER: u64 = 4;
}

pub fn derive_seed(base: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ stream) ^ index)
}

pub fn rng_from_seed(seed: u64) -> SceneRng {
    SceneRng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference splitmix64 sequence seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn streams_differ() {
        assert_ne!(derive_seed(7, 1, 0), derive_seed(7, 2, 0));
        assert_ne!(derive_seed(7, 1, 0), derive_seed(7, 1, 1));
        let mut a = rng_from_seed(derive_seed(7, 1, 0));
        let mut b = rng_from_seed(derive_seed(7, 1, 0));
        assert_eq!(a.next_u64(), b.next_u64());
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser over `seed` and `key`.
pub fn mix(seed: u64, key: u64) -> u64 {
    let mut z = seed ^ key.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator owned by one pixel. Samples select independent streams with
/// `set_stream`, so results do not depend on how pixels are scheduled.
pub fn pixel_rng(seed: u64, pixel: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, pixel))
}

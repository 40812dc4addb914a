//! Seeded random number generation.
//!
//! Every stochastic component draws from [`SpRng`], xoshiro256++ seeded
//! through SplitMix64. Independent streams for replicates, tuning cells and
//! roles are obtained with [`derive_seed`], which folds a list of integer
//! coordinates into the master seed one SplitMix64 round at a time.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SpRng = Xoshiro256PlusPlus;

/// Name and version of the generator, printed in output headers.
pub const RNG_NAME: &str = "xoshiro256++/splitmix64 v1";

pub fn rng_from_seed(seed: u64) -> SpRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// One SplitMix64 output step applied to `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed: `s = splitmix64(master)`, then for each coordinate
/// `c`, `s = splitmix64(s ^ splitmix64(c))`.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    coords.iter().fold(splitmix64(master), |s, &c| splitmix64(s ^ splitmix64(c)))
}

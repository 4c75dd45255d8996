//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`Stream`] built from a
//! 64-bit seed. Child streams are derived with
//!
//! ```text
//! derive(seed, index) = splitmix64(seed ^ splitmix64(index ^ 0x5851_F42D_4C95_7F2D))
//! ```
//!
//! where `splitmix64` is the finalizer of Steele, Lea and Flood's
//! SplitMix64 generator. The derivation depends only on `(seed, index)`, so
//! adding replicas never reshuffles the streams of earlier ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index ^ 0x5851_F42D_4C95_7F2D))
}

pub fn stream(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child(seed: u64, index: u64) -> Stream {
    stream(derive(seed, index))
}

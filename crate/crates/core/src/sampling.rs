//! Counter-based random streams.
//!
//! Each draw is addressed by `(seed, index)`, so work split across threads
//! sees the same numbers as a sequential loop.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::Hyperrect;

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Mixes a purpose tag into a seed so independent phases do not share streams.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform point in a non-empty box.
pub fn uniform_in<R: Rng>(rng: &mut R, b: &Hyperrect) -> Vec<f64> {
    let v = b.intervals().expect("sampling from an empty box");
    v.iter()
        .map(|iv| {
            let u: f64 = rng.gen();
            (iv.lo() + u * iv.width()).clamp(iv.lo(), iv.hi())
        })
        .collect()
}

/// Uniformly chosen corner of a non-empty box.
pub fn random_corner<R: Rng>(rng: &mut R, b: &Hyperrect) -> Vec<f64> {
    let v = b.intervals().expect("sampling from an empty box");
    v.iter()
        .map(|iv| if rng.gen_bool(0.5) { iv.hi() } else { iv.lo() })
        .collect()
}

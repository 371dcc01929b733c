//! Counter-based, splittable random streams.
//!
//! Every stream is a ChaCha8 keystream whose 256-bit key is built from the
//! run seed, the trial id and a purpose tag, so trials can be generated in any
//! order on any thread and still reproduce bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. Distinct purposes never share a keystream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Points = 1,
    VacancySamples = 2,
    ClearingProbes = 3,
    Thinning = 4,
    Field = 5,
    Test = 0xfeed,
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Single u64 that identifies one trial of a run; reported in CSV output.
/// Injective in `trial_id` for a fixed `seed`.
pub fn trial_seed(seed: u64, trial_id: u64) -> u64 {
    mix64(seed ^ mix64(trial_id.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

/// Stream for `(seed, trial_id, purpose)`.
pub fn stream(seed: u64, trial_id: u64, purpose: Purpose) -> ChaCha8Rng {
    trial_stream(trial_seed(seed, trial_id), purpose)
}

/// Stream keyed directly by a per-trial seed, as printed in CSV output.
pub fn trial_stream(trial_seed: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&trial_seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    key[16..24].copy_from_slice(b"pobst-v1");
    ChaCha8Rng::from_seed(key)
}

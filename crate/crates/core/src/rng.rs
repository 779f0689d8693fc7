//! Seed derivation.
//!
//! Every random stream in a simulation is a `ChaCha8Rng` seeded through
//! [`rand::SeedableRng::seed_from_u64`]. Seeds are derived with the SplitMix64
//! finalizer so that a master seed, a trial index and a round index map to
//! the same 64-bit values on every platform:
//!
//! ```text
//! trial_seed(m, t)          = mix(m ^ mix(t))
//! stream_seed(s, stream, r) = mix(s ^ mix(stream_tag ^ mix(r)))
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function applied to `z + GOLDEN_GAMMA`.
pub fn mix(z: u64) -> u64 {
    let mut z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` under `master`. Also used directly as the deployment seed.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    mix(master ^ mix(trial))
}

/// Independent per-round random streams inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    TreeTies,
    Leader,
    Election,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::TreeTies => 0x7472_6565, // "tree"
            Stream::Leader => 0x6c65_6164,   // "lead"
            Stream::Election => 0x656c_6563, // "elec"
        }
    }
}

pub fn stream_seed(trial_seed: u64, stream: Stream, round: u64) -> u64 {
    mix(trial_seed ^ mix(stream.tag() ^ mix(round)))
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

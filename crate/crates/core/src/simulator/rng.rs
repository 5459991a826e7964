//! Counter-keyed random streams.
//!
//! Every random draw in a trial comes from a generator seeded by
//! `(seed, trial, purpose, step, slot)`. A trial's trajectory therefore does
//! not depend on how trials are scheduled across workers, and two trials that
//! share a key consume identical diffusion increments slot by slot even when
//! their reaction histories differ.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub(crate) enum Purpose {
    Init = 1,
    Diffusion = 2,
    Reaction = 3,
    Placement = 4,
}

#[inline]
pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Identity of one trial's random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub seed: u64,
    pub trial: u64,
}

impl StreamKey {
    pub fn new(seed: u64, trial: u64) -> Self {
        Self { seed, trial }
    }

    pub(crate) fn rng(&self, purpose: Purpose, step: u64, slot: u64) -> Xoshiro256PlusPlus {
        let mut h = splitmix64(self.seed);
        h = splitmix64(h ^ self.trial);
        h = splitmix64(h ^ purpose as u64);
        h = splitmix64(h ^ step);
        h = splitmix64(h ^ slot);
        Xoshiro256PlusPlus::seed_from_u64(h)
    }
}

//! Counter-based randomness.
//!
//! Every draw is a pure function of `(seed, trial_index, purpose)`: the seed
//! keys a ChaCha8 stream, the trial index selects the stream id, and the
//! purpose selects a fixed word slot inside the first block of that stream.
//! Trials can therefore be evaluated in any order or partition and still see
//! exactly the same numbers.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use rand_chacha::rand_core;

const SLOTS: usize = 8;

/// What a draw is used for. Each purpose owns one 64-bit slot of the trial's
/// stream, so skipping a draw never shifts any other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Detector click for particle `k` (`k < 3`).
    Detect(u8),
    /// Joint measurement outcome.
    Outcome,
    /// Hidden-variable assignment for a round.
    Assignment,
}

impl Purpose {
    fn slot(self) -> usize {
        match self {
            Purpose::Detect(k) => {
                assert!(k < 3, "detector index {k} out of range");
                k as usize
            }
            Purpose::Outcome => 3,
            Purpose::Assignment => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    seed: u64,
    base: ChaCha8Rng,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// All draws available to one trial.
    pub fn trial(&self, trial_index: u64) -> TrialDraws {
        let mut rng = self.base.clone();
        rng.set_stream(trial_index);
        rng.set_word_pos(0);
        let mut words = [0u64; SLOTS];
        for w in words.iter_mut() {
            *w = rng.next_u64();
        }
        TrialDraws { words }
    }

    /// A sequential generator for one trial, for callers that want a plain
    /// `RngCore` (e.g. [`crate::quantum::sample_joint`]).
    pub fn stream(&self, trial_index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(trial_index);
        rng.set_word_pos(0);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialDraws {
    words: [u64; SLOTS],
}

impl TrialDraws {
    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&self, purpose: Purpose) -> f64 {
        unit_f64(self.words[purpose.slot()])
    }
}

pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub(crate) fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    unit_f64(rng.next_u64())
}

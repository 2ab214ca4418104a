use postsel_core::engine::{run_ghz, run_rounds, GhzSource, GhzTally, RoundSource, Tally};
use postsel_core::rng::CounterRng;
use rayon::prelude::*;

/// Rounds per work item. Results never depend on it: tallies are integer
/// counts and every draw is keyed by its trial index.
const CHUNK_ROUNDS: u64 = 1 << 14;

#[derive(Debug, thiserror::Error)]
#[error("cannot start worker pool: {0}")]
pub struct PoolError(#[from] rayon::ThreadPoolBuildError);

pub struct Runner {
    pool: rayon::ThreadPool,
}

impl Runner {
    /// `threads = None` uses every available core.
    pub fn new(threads: Option<usize>) -> Result<Self, PoolError> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        Ok(Self {
            pool: builder.build()?,
        })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn tally<S>(&self, source: &S, rng: &CounterRng, eta: f64, rounds: u64) -> Tally
    where
        S: RoundSource + Sync,
    {
        self.pool.install(|| {
            chunks(rounds)
                .into_par_iter()
                .map(|range| run_rounds(source, rng, eta, range))
                .reduce(Tally::default, |mut a, b| {
                    a.merge(&b);
                    a
                })
        })
    }

    pub fn ghz_tally(
        &self,
        source: &GhzSource,
        rng: &CounterRng,
        eta: f64,
        trials: u64,
    ) -> GhzTally {
        self.pool.install(|| {
            chunks(trials)
                .into_par_iter()
                .map(|range| run_ghz(source, rng, eta, range))
                .reduce(GhzTally::default, |mut a, b| {
                    a.merge(&b);
                    a
                })
        })
    }
}

fn chunks(n: u64) -> Vec<std::ops::Range<u64>> {
    (0..n.div_ceil(CHUNK_ROUNDS))
        .map(|c| c * CHUNK_ROUNDS..((c + 1) * CHUNK_ROUNDS).min(n))
        .collect()
}

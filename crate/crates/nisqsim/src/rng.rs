//! Deterministic random-number streams.
//!
//! Every stochastic component of the toolkit draws from a counter-based
//! generator keyed by `(master seed, purpose, trial)`. Streams never share
//! state, so results are reproducible regardless of the order in which
//! trials are evaluated — the reordering engine and the brute-force engine
//! see byte-identical draws for the same trial.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent per-trial stream used to sample error injections.
pub fn injection_stream(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial << 1);
    rng
}

/// Independent per-trial stream used to sample measurement outcomes.
pub fn measurement_stream(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 1) | 1);
    rng
}

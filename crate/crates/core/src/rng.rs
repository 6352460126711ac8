//! Seeded, splittable randomness. Every Monte Carlo trial draws from its own
//! ChaCha stream keyed by `(seed, trial)`, so results do not depend on how
//! trials are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

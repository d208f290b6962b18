use crate::rng::derive_seed;

/// Independent sub-seeds for every random source of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubSeeds {
    pub fading: u64,
    pub gaussian_s: u64,
    pub gaussian_r: u64,
    pub weights: u64,
    pub baseline_mc: u64,
    pub init: u64,
}

pub const ROLES: [&str; 6] = ["fading", "gaussian-s", "gaussian-r", "weights", "baseline-mc", "init"];

/// Sub-seeds as a pure function of `(seed, role)`.
pub fn seed_everything(seed: u64) -> SubSeeds {
    SubSeeds {
        fading: derive_seed(seed, ROLES[0]),
        gaussian_s: derive_seed(seed, ROLES[1]),
        gaussian_r: derive_seed(seed, ROLES[2]),
        weights: derive_seed(seed, ROLES[3]),
        baseline_mc: derive_seed(seed, ROLES[4]),
        init: derive_seed(seed, ROLES[5]),
    }
}

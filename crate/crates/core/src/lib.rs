//! Reward-free exploration for learning the transition model of a tabular MDP.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every algorithmic
//! piece: environments and simulation ([`mdp`], [`envs`]), visit counters and
//! confidence sets ([`estimation`]), the estimation-error surrogates and
//! weighted entropies ([`objectives`]), a dense simplex solver with the MDP
//! occupancy LPs ([`lp`]), the two learners ([`fw_modest`],
//! [`weighted_maxent`]) and the offline optimal-allocation solver
//! ([`optimal`]).
//!
//! IO, file formats and the experiment CLI live in the `modest-cli` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod envs;
pub mod error;
pub mod estimation;
pub mod evi;
pub mod fw_modest;
mod graph;
pub mod learner;
mod linalg;
pub mod lp;
pub mod mdp;
pub mod objectives;
pub mod optimal;
pub mod simlemma;
pub mod weighted_maxent;

pub use error::{Error, Result};
pub use mdp::{OccupancyMeasure, StationaryPolicy, TabularMdp, Trajectory, Transition};

/// Random stream used for every simulation in the crate.
///
/// ChaCha8 is portable and bit-reproducible across platforms, which the
/// experiment harness relies on.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the crate's random stream from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}

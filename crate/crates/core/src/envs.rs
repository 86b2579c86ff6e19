//! The benchmark environments: NoisyRiverSwim, Wheel-of-Fortune and Garnet.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng as _, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

/// Action indices of NoisyRiverSwim. State index `i` is the chain's `(i+1)`-th
/// state, so index 0 is the leftmost (odd) state.
pub mod river {
    pub const RIGHT: usize = 0;
    pub const LEFT: usize = 1;
    pub const EVEN: usize = 2;
    pub const ODD: usize = 3;
}

/// Action indices of Wheel-of-Fortune. State 0 is the center; action 4 is
/// SPIN at the center and NOISY on the ring.
pub mod wheel {
    pub const LEFT: usize = 0;
    pub const RIGHT: usize = 1;
    pub const SELF_LOOP: usize = 2;
    pub const CENTER: usize = 3;
    pub const NOISY: usize = 4;
    pub const SPIN: usize = 4;
}

/// Which teleport action is active in the odd states of NoisyRiverSwim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TeleportLayout {
    /// `a_odd` teleports from odd states, `a_even` from even states.
    #[default]
    Matching,
    /// `a_even` teleports from odd states and vice versa.
    Swapped,
}

/// NoisyRiverSwim with the default teleport layout.
pub fn build_noisy_riverswim(size: usize) -> Result<TabularMdp> {
    build_noisy_riverswim_with(size, TeleportLayout::Matching)
}

pub fn build_noisy_riverswim_with(size: usize, layout: TeleportLayout) -> Result<TabularMdp> {
    if size < 2 {
        return Err(Error::InvalidSpec(format!("NoisyRiverSwim needs at least 2 states, got {size}")));
    }
    let last = size - 1;
    let uniform = 1.0 / size as f64;
    TabularMdp::from_rows(size, 4, |s, a, row| match a {
        river::RIGHT => {
            if s == 0 {
                row[0] = 0.4;
                row[1] = 0.6;
            } else if s == last {
                row[s] = 0.6;
                row[s - 1] = 0.4;
            } else {
                row[s + 1] = 0.35;
                row[s] = 0.6;
                row[s - 1] = 0.05;
            }
        }
        river::LEFT => row[s.saturating_sub(1)] = 1.0,
        _ => {
            // 1-based numbering: index s is odd iff s is even.
            let odd_state = s % 2 == 0;
            let active = match (odd_state, layout) {
                (true, TeleportLayout::Matching) | (false, TeleportLayout::Swapped) => river::ODD,
                _ => river::EVEN,
            };
            if a == active {
                row.fill(uniform);
            } else {
                row[s] = 1.0;
            }
        }
    })
}

/// Wheel-of-Fortune with `size - 1` ring states around the center.
pub fn build_wheel(size: usize) -> Result<TabularMdp> {
    if size < 3 {
        return Err(Error::InvalidSpec(format!("Wheel needs at least 3 states, got {size}")));
    }
    let ring = size - 1;
    let spin = 1.0 / ring as f64;
    TabularMdp::from_rows(size, 5, |s, a, row| {
        if s == 0 {
            if a == wheel::SPIN {
                row[1..].fill(spin);
            } else {
                row[0] = 1.0;
            }
            return;
        }
        // ring positions 1..=ring, cyclic
        let left = if s == 1 { ring } else { s - 1 };
        let right = if s == ring { 1 } else { s + 1 };
        let outcomes = [left, right, s, 0];
        match a {
            wheel::NOISY => outcomes.iter().for_each(|&t| row[t] += 0.25),
            _ => row[outcomes[a]] = 1.0,
        }
    })
}

/// Maximum regeneration attempts for a communicating Garnet instance.
pub const GARNET_MAX_ATTEMPTS: usize = 100;

/// Random Garnet instance `G(S, A, b)`.
///
/// Each row draws its branching factor uniformly from `1..=b`, that many
/// distinct next states, and flat-Dirichlet weights on them. The whole instance
/// is regenerated on a fresh sub-stream until the union support graph is
/// strongly connected.
pub fn build_garnet(num_states: usize, num_actions: usize, branching: usize, seed: u64) -> Result<TabularMdp> {
    if num_states < 2 {
        return Err(Error::InvalidSpec(format!("Garnet needs at least 2 states, got {num_states}")));
    }
    if num_actions == 0 {
        return Err(Error::InvalidSpec("Garnet needs at least one action".to_string()));
    }
    if branching == 0 || branching > num_states {
        return Err(Error::InvalidSpec(format!(
            "branching factor {branching} outside 1..={num_states}"
        )));
    }
    for attempt in 0..GARNET_MAX_ATTEMPTS {
        let mut rng = crate::Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let mdp = TabularMdp::from_rows(num_states, num_actions, |_, _, row| {
            let k = rng.random_range(1..=branching);
            let support = rand::seq::index::sample(&mut rng, num_states, k);
            let weights: Vec<f64> = (0..k).map(|_| -libm::log(1.0 - rng.random::<f64>())).collect();
            let total: f64 = weights.iter().sum();
            if total > 0.0 {
                for (idx, w) in support.iter().zip(&weights) {
                    row[idx] = w / total;
                }
            } else {
                row[support.index(0)] = 1.0;
            }
            renormalize(row);
        })?;
        if mdp.is_communicating() {
            return Ok(mdp);
        }
    }
    Err(Error::GenerationFailure { attempts: GARNET_MAX_ATTEMPTS })
}

fn renormalize(row: &mut [f64]) {
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= total);
}

/// Environment addressed by a string id: `noisyriverswim:<S>`, `wheel:<S>` or
/// `garnet:<S>x<A>x<b>:<seed>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EnvSpec {
    NoisyRiverSwim { size: usize },
    Wheel { size: usize },
    Garnet { states: usize, actions: usize, branching: usize, seed: u64 },
}

impl EnvSpec {
    pub fn build(&self) -> Result<TabularMdp> {
        match *self {
            EnvSpec::NoisyRiverSwim { size } => build_noisy_riverswim(size),
            EnvSpec::Wheel { size } => build_wheel(size),
            EnvSpec::Garnet { states, actions, branching, seed } => {
                build_garnet(states, actions, branching, seed)
            }
        }
    }

    pub fn num_states(&self) -> usize {
        match *self {
            EnvSpec::NoisyRiverSwim { size } | EnvSpec::Wheel { size } => size,
            EnvSpec::Garnet { states, .. } => states,
        }
    }
}

impl fmt::Display for EnvSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvSpec::NoisyRiverSwim { size } => write!(f, "noisyriverswim:{size}"),
            EnvSpec::Wheel { size } => write!(f, "wheel:{size}"),
            EnvSpec::Garnet { states, actions, branching, seed } => {
                write!(f, "garnet:{states}x{actions}x{branching}:{seed}")
            }
        }
    }
}

impl FromStr for EnvSpec {
    type Err = Error;

    fn from_str(id: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(format!("unrecognised environment id `{id}`"));
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
        let (kind, rest) = id.split_once(':').ok_or_else(bad)?;
        let spec = match kind.trim().to_ascii_lowercase().as_str() {
            "noisyriverswim" => EnvSpec::NoisyRiverSwim { size: num(rest)? },
            "wheel" => EnvSpec::Wheel { size: num(rest)? },
            "garnet" => {
                let (dims, seed) = rest.split_once(':').ok_or_else(bad)?;
                let parts: Vec<&str> = dims.split('x').collect();
                if parts.len() != 3 {
                    return Err(bad());
                }
                EnvSpec::Garnet {
                    states: num(parts[0])?,
                    actions: num(parts[1])?,
                    branching: num(parts[2])?,
                    seed: seed.trim().parse().map_err(|_| bad())?,
                }
            }
            _ => return Err(bad()),
        };
        match spec {
            EnvSpec::Garnet { states, branching, .. } if branching == 0 || branching > states => {
                Err(Error::InvalidSpec(format!("branching factor {branching} outside 1..={states}")))
            }
            s if s.num_states() < 2 => Err(Error::InvalidSpec(format!("`{id}` needs at least 2 states"))),
            s => Ok(s),
        }
    }
}

impl TryFrom<String> for EnvSpec {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<EnvSpec> for String {
    fn from(spec: EnvSpec) -> Self {
        spec.to_string()
    }
}

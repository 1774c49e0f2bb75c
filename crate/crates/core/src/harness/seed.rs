//! Seed derivation.
//!
//! A stream seed is derived from the master seed and a tuple of integer
//! coordinates by folding each coordinate through the SplitMix64 finalizer:
//!
//! ```text
//! s_0     = mix(master)
//! s_{i+1} = mix(s_i ^ mix(c_i + (i + 1) * 0x9E3779B97F4A7C15))
//! ```
//!
//! with wrapping arithmetic. The coordinates of a run are
//! `(fnv1a(case study), experiment, solver tag, run)`; initial designs use
//! `(fnv1a(benchmark), experiment, DESIGN_TAG, 0)`. The derived value seeds
//! a `ChaCha8Rng` through `seed_from_u64`.

use crate::bo::SolverKind;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
pub const DESIGN_TAG: u64 = 0x4445_5349_474e;

/// SplitMix64 output function.
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a hash.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn derive(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .enumerate()
        .fold(mix(master), |s, (i, &c)| {
            mix(s ^ mix(c.wrapping_add((i as u64 + 1).wrapping_mul(GOLDEN))))
        })
}

pub fn solver_tag(solver: SolverKind) -> u64 {
    match solver {
        SolverKind::Ils => 1,
        SolverKind::Ims => 2,
        SolverKind::Bnb => 3,
    }
}

pub fn run_seed(master: u64, case_study: &str, experiment: usize, solver: SolverKind, run: usize) -> u64 {
    derive(
        master,
        &[
            fnv1a(case_study.as_bytes()),
            experiment as u64,
            solver_tag(solver),
            run as u64,
        ],
    )
}

pub fn design_seed(master: u64, benchmark: &str, experiment: usize) -> u64 {
    derive(
        master,
        &[fnv1a(benchmark.as_bytes()), experiment as u64, DESIGN_TAG, 0],
    )
}

//! Prioritized receding-horizon multi-agent motion planning with
//! simultaneous exploration of several prioritizations per time step.

pub mod config;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod map;
pub mod mapf;
pub mod mpa;
pub mod planner;
pub mod prioritization;
pub mod report;
pub mod schedule;
pub mod sim;
pub mod vehicle;

pub use error::{Error, Result};

/// Mixes several values into one seed (SplitMix64 finalizer per part), so
/// that every agent derives the same stream from shared inputs.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x9e37_79b9_7f4a_7c15, |acc: u64, &p| {
        let mut z = acc.wrapping_add(p).wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    })
}

//! Hall matching of Delone windows to the integer lattice and sampled
//! distortion of the resulting bijections.

pub mod distortion;
pub mod matching;

pub use distortion::{bi_omega_distortion, exhaustive_distortion, DistortionReport};
pub use matching::{default_halo, hall_match, min_radius, transport_match, DeficiencyWitness, HallOutcome, Matching, MATCHING_SCHEMA};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/matching.md")]
    pub mod matching {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}

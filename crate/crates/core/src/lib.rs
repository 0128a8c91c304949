//! Mallows permutations: samplers, cycle statistics, exact limit constants
//! and the Monte Carlo experiments that compare them.
//!
//! The law `P(π) ∝ q^inv(π)` on `S_n` is sampled in O(n log n) by
//! [`sampler::sample_mallows_finite`]. Limits of the cycle counts as
//! `n → ∞` are computed from q-series in [`qseries`] and estimated by
//! regeneration blocks in [`permstat`]; [`oracle`] holds brute-force
//! ground truth for small `n`.

pub mod error;
pub mod experiments;
pub mod fenwick;
pub mod oracle;
pub mod permstat;
pub mod qseries;
pub mod rng;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
pub use permstat::{
    arc_path, cycle_counts, inversions, ArcPath, Composition, CovarianceEstimate, CycleCounts,
    PairedRegenBlock, Reflection, RegenBlock,
};
pub use qseries::{displacement_pmf, DisplacementPmf, ExactConstants, QParam, Regime};
pub use rng::RngStream;
pub use sampler::{
    reverse_compose, sample_mallows_finite, sample_mallows_two_sided, sample_mallows_window,
    stream_mallows, MallowsStream, Permutation, WindowPermutation,
};
pub use stats::{Estimate, Moments};

//! A Monte Carlo laboratory for the genealogy of a selective sweep.
//!
//! The model is a two-locus Moran population of `2N` haploids. A beneficial
//! allele `B` (relative fitness 1, versus `1 - s` for the resident `b`)
//! starts on a single uniformly placed mutant and the population is run,
//! conditioned on fixation of `B`. Each birth copies the selected allele
//! from the parent, while the linked neutral locus is copied from the parent
//! or, with probability `r` per birth, from an independently drawn second
//! parent (recombination). Tracing sampled lineages backward through the
//! sweep yields a random marked partition: lineages coalesce when their
//! neutral ancestries merge, and the marked block collects the lineages that
//! descend from the original mutant (the ones that did not "escape" the
//! sweep by recombining onto the `b` background).
//!
//! The crate provides:
//!
//! - [`moran`]: the forward population simulator, conditioned on fixation
//!   by rejection ([`moran::simulate_conditioned_sweep`]).
//! - [`genealogy`]: exact backward ancestry tracing through a recorded
//!   trajectory, producing the marked partition and escape/coalescence
//!   diagnostics.
//! - [`coin_flip`]: the single-parameter coin-flip partition law that
//!   approximates the genealogy (`p = exp(-r ln(2N)/s)`; heads join one
//!   marked block, tails are unmarked singletons).
//! - [`paintbox`]: the stick-breaking paintbox law built from Beta(1, k-1)
//!   sticks thinned by Bernoulli(r/s) indicators, its thinned variant, and
//!   exact moment/statistic evaluators.
//! - [`branching`]: the Yule-skeleton-with-types sampler, the two-type
//!   (infinite/finite line of descent) branching process, and the Polya-urn
//!   split-pattern probability.
//! - [`analytics`]: closed-form oracles (hitting probabilities, escape
//!   probability `q_J`, expected per-level jump counts, one-step
//!   recombination/coalescence probabilities, classical haplotype-frequency
//!   formulas) that the simulators are tested against.
//! - [`harness`]: deterministic parallel replication, statistic
//!   aggregation, report tables, and total-variation comparison of
//!   partition laws.
//!
//! Determinism: every experiment derives one independent RNG stream per
//! replicate from `(master seed, replicate index)`, and parallel aggregation
//! only ever merges integer counters, so results are bit-identical for any
//! worker count.

pub mod analytics;
pub mod branching;
pub mod coin_flip;
pub mod error;
pub mod genealogy;
pub mod harness;
pub mod moran;
pub mod paintbox;
pub mod params;
pub mod partition;

pub use error::{Error, Result};
pub use genealogy::AncestryTrace;
pub use harness::{ExperimentConfig, Mode, ReportTable};
pub use moran::SweepTrajectory;
pub use paintbox::PaintboxDraw;
pub use params::Params;
pub use partition::{MarkedPartition, PairStats};

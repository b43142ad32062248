//! Inverse optimization of quantile-objective decision processes, applied
//! to the fourth-down decision.
//!
//! The crate estimates the latent risk preference (a quantile parameter
//! tau) that best explains observed fourth-down choices inside an
//! empirically estimated football Markov decision process:
//!
//! - [`domain`]: the 806-state space, actions, rewards.
//! - [`transition`]: empirical transition counting with third-down
//!   augmentation of GO rows.
//! - [`value`]: the infinite-horizon value solve of the league chain.
//! - [`surface`]: next-state value distributions and their quantiles over
//!   the tau grid.
//! - [`smooth`]: doubly-monotone regularization of quantile layers.
//! - [`policy`]: tau-optimal decision maps and observed frequencies.
//! - [`inverse`]: Hamming-loss inversion for tau, partitioned by field
//!   region, plus the candidate-partition search.
//! - [`bootstrap`]: game-level bootstrap of the whole pipeline with
//!   weighted-KDE posteriors.
//! - [`sim`]: a synthetic league with exact kernels and a tau*-optimal
//!   coach, the end-to-end recovery oracle.
//! - [`analysis`]: points-gained accounting and the performance
//!   regression.
//!
//! Everything here is pure computation over `alloc` collections; file
//! formats, CSV ingestion, and the command-line front end live in the
//! companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod bootstrap;
pub mod domain;
pub mod inverse;
pub mod policy;
pub mod sim;
pub mod smooth;
pub mod surface;
pub mod transition;
pub mod value;

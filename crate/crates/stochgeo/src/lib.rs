//! Monte Carlo engine and statistical laboratory for spatial random
//! structures: site percolation on lattice boxes, random geometric graphs,
//! germ-grain coverage, random sequential adsorption and nearest-neighbour
//! functionals, plus the empirical-distribution tooling needed to check
//! central and local central limit behaviour of those functionals at
//! simulation scale.
//!
//! The crate is organised by model family:
//!
//! * [`lattice_perc`] — site percolation configurations on finite lattice
//!   boxes and their cluster functionals (cluster count, largest cluster).
//! * [`geograph`] — binomial point samples, Gilbert graphs built through a
//!   cell-list index, and subgraph/component/independence functionals.
//! * [`continuum`] — marked-point functionals: covered volume of a union of
//!   balls, accepted-particle counts for sequential adsorption, and
//!   power-weighted nearest-neighbour sums.
//! * [`cltlab`] — empirical distributions, exact PMF arithmetic, span
//!   detection, the normal-approximation discrepancy statistic, a synthetic
//!   sum-decomposition harness, and concentration bounds.
//! * [`harness`] — the experiment runner behind the `stochgeo` CLI:
//!   validated experiment specs, seeded deterministic parallel replication,
//!   and JSON/CSV report emission.

pub mod cltlab;
pub mod continuum;
pub mod error;
pub mod geograph;
pub mod grid;
pub mod harness;
pub mod lattice_perc;
pub mod rng;
pub mod unionfind;

pub use error::{Error, Result};

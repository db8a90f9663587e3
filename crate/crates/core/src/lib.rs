//! Regular Dirichlet extensions of one-dimensional Brownian motion.
//!
//! The crate builds singular scale functions out of weighted Cantor blocks,
//! assembles them into invariant-interval configurations, and computes the
//! associated Dirichlet energies, darning transforms, trace forms and grid
//! Markov-chain approximations.

pub mod cantor;
pub mod cli;
pub mod config;
pub mod darning;
pub mod error;
pub mod extreal;
pub mod forms;
pub mod presets;
pub mod scale;
pub mod scenario;
pub mod sim;
pub mod trace;
pub mod verify;

pub use error::{Error, Result};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_160_707;

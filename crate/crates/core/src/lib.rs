//! Surrogate-assisted cooperative coevolution laboratory.
//!
//! The crate is split along the lines of the experiment pipeline:
//!
//! * [`nkcs`] generates and evaluates tunable coevolutionary landscapes.
//! * [`evolution`] is the steady-state coevolutionary GA with its
//!   collaboration schemes and exact evaluation-budget accounting.
//! * [`surrogate`] holds the per-species MLP fitness model and the
//!   surrogate-assisted loop built on top of [`evolution`].
//! * [`vawt`] compiles 17-gene wind-turbine genomes into printable meshes and
//!   turns rpm measurements into a kinetic-energy fitness.
//! * [`experiments`] runs batched comparative suites and the rank-sum
//!   statistics used to compare them.
//! * [`cli`] binds plain-text configs to all of the above.

pub mod cli;
pub mod config;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod nkcs;
pub mod rng;
pub mod surrogate;
pub mod vawt;

pub use error::{Error, Result};

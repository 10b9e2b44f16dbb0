//! Simulation and verification of doubly-efficient debate protocols.
//!
//! Two provers, A and B, argue about the output of an oracle machine before a
//! verifier that reads only a few bits and makes few oracle queries. The
//! crate runs the bisection, cross-examination, stochastic and witness
//! protocols between configurable strategies and measures how often the
//! verifier accepts.

pub mod bits;
pub mod error;
pub mod harness;
pub mod machine;
pub mod oracle;
pub mod protocol;
pub mod rational;
pub mod rng;
pub mod strategy;

pub use bits::BitString;
pub use error::{Error, Result};
pub use oracle::{SampleMode, StochasticOracle};
pub use rational::{mod1_add, UnitFixed, UnitRational};

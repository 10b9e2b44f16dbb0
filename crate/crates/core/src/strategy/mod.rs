//! Prover strategies: the honest provers and a parametrized family of attacks.
//!
//! A [`Strategy`] is an immutable policy. Each debate spawns a [`Player`] from
//! it, and the referee spawns further fresh players whenever a protocol calls
//! for an independent copy of a prover. Players see only what the referee
//! passes in a [`Request`].

mod adversary;
mod honest;

use std::fmt;
use std::sync::Arc;

use crate::bits::BitString;
use crate::error::Result;
use crate::machine::{Cell, Configuration, ConfigurationMachine, StepProgram};
use crate::oracle::{SampleMode, StochasticOracle};
use crate::protocol::Message;
use crate::rational::{UnitFixed, UnitRational};
use crate::rng::StreamRng;

pub use adversary::{make_adversary, AdversarySpec, Shift, FAMILIES};
pub use honest::{honest_value, HonestPlayer, TrueValue};

/// What the debate is about.
#[derive(Clone, Copy, Debug)]
pub enum Game<'a> {
    Bisection(&'a ConfigurationMachine),
    CrossExam(&'a StepProgram),
    Stochastic { program: &'a StepProgram, d: u64, big_r: u64, sampling: SampleMode },
    /// The witness round; the program takes the input followed by the witness.
    Witness { program: &'a StepProgram, witness_len: usize, stochastic: bool },
}

#[derive(Clone, Copy, Debug)]
pub struct Context<'a> {
    pub x: &'a BitString,
    pub oracle: &'a StochasticOracle,
    pub game: Game<'a>,
}

/// One completed round of the stochastic protocol, as both provers see it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundRecord {
    pub announcement: UnitRational,
    pub share_a: UnitFixed,
    pub share_b: UnitFixed,
    pub bit: bool,
}

#[derive(Clone, Debug)]
pub enum Request<'a> {
    Witness { len: usize },
    Transcript,
    Locate { transcript: &'a [Cell] },
    FinalClaim,
    Midpoint { round: usize, start: usize, mid: usize, end: usize },
    Selector {
        round: usize,
        steps: (usize, usize, usize),
        start: &'a Configuration,
        mid: &'a Configuration,
        end: &'a Configuration,
    },
    /// `prefix` holds `a_0 .. a_{round-1}`.
    Announce { round: usize, prefix: &'a [bool], history: &'a [RoundRecord] },
    /// Sent to a fresh copy; the current round's announcement is withheld.
    Share { round: usize, prefix: &'a [bool], history: &'a [RoundRecord] },
    AbortDecision { round: usize, prefix: &'a [bool], announcement: &'a UnitRational, bit: bool, history: &'a [RoundRecord] },
}

/// A player's private stream and cost counters.
pub struct Io<'a> {
    pub rng: &'a mut StreamRng,
    pub steps: &'a mut u64,
    pub samples: &'a mut u64,
}

pub trait Player: Send {
    fn respond(&mut self, ctx: &Context<'_>, req: &Request<'_>, io: &mut Io<'_>) -> Result<Message>;
}

pub trait Policy: Send + Sync {
    fn name(&self) -> String;
    fn spawn(&self) -> Box<dyn Player>;
}

#[derive(Clone)]
pub struct Strategy(Arc<dyn Policy>);

impl Strategy {
    pub fn new(policy: impl Policy + 'static) -> Self {
        Self(Arc::new(policy))
    }

    pub fn name(&self) -> String {
        self.0.name()
    }

    /// A fresh player with empty history.
    pub fn spawn(&self) -> Box<dyn Player> {
        self.0.spawn()
    }

    pub fn honest() -> Self {
        make_adversary(&AdversarySpec::Honest)
    }
}

impl fmt::Debug for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Strategy({})", self.name())
    }
}

/// Honest prover A of the stochastic protocol. The honest policy serves every
/// role, so the four named constructors below share it.
pub fn honest_a_stochastic() -> Strategy {
    Strategy::honest()
}

pub fn honest_b_stochastic() -> Strategy {
    Strategy::honest()
}

pub fn honest_a_bisection() -> Strategy {
    Strategy::honest()
}

pub fn honest_b_bisection() -> Strategy {
    Strategy::honest()
}

pub fn honest_a_crossexam() -> Strategy {
    Strategy::honest()
}

pub fn honest_b_crossexam() -> Strategy {
    Strategy::honest()
}

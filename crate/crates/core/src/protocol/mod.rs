//! Referees for the four debate protocols and the verifier's checks.
//!
//! Every run is sequential and driven by a seed: provers, copies of provers
//! and the verifier each draw from their own derived stream, so a seed fixes
//! the whole debate. A prover that sends the wrong kind of message, or whose
//! strategy fails, forfeits: the verdict goes against it.

mod bisection;
mod crossexam;
mod message;
mod outcome;
pub mod params;
mod stochastic;
mod witness;

use std::cmp::Ordering;

pub use bisection::run_bisection;
pub(crate) use crossexam::check_oracle;
pub use crossexam::{crossexam_bit_budget, run_crossexam};
pub use message::Message;
pub use outcome::{Counters, DebateOutcome, LogEntry, Party, Speaker};
pub use params::{Mode, ProtocolParams};
pub use stochastic::{check_stochastic_program, run_stochastic, stochastic_constants};
pub use witness::{run_witness, WitnessMode};

use crate::error::Result;
use crate::rational::{distance_cmp, UnitRational};
use crate::rng::{label, StreamKey, StreamRng};
use crate::strategy::{Context, Io, Player, Request, Strategy};

/// `0` iff `|p̂ᴼ − p̂| ≥ 1/(4d)`, compared exactly.
pub fn verifier_abort_check(announced: &UnitRational, observed: &UnitRational, d: u64) -> bool {
    distance_cmp(announced, observed, &params::inverse(4, d)) == Ordering::Less
}

/// How a debate ended, before bookkeeping is attached.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Decision {
    pub verdict: bool,
    pub abort_round: Option<usize>,
    pub forfeit: Option<Party>,
}

impl Decision {
    pub fn verdict(verdict: bool) -> Self {
        Self { verdict, abort_round: None, forfeit: None }
    }

    pub fn forfeit(party: Party) -> Self {
        Self { verdict: party.losing_verdict(), abort_round: None, forfeit: Some(party) }
    }
}

/// Short-circuits a protocol when a prover forfeits.
pub(crate) type Play<T> = std::result::Result<T, Party>;

/// Options shared by all referees.
#[derive(Clone, Debug, Default)]
pub struct Referee {
    pub params: ProtocolParams,
    /// Skip building the message log (for bulk runs).
    pub quiet: bool,
}

impl Referee {
    pub fn new(params: ProtocolParams) -> Self {
        Self { params, quiet: false }
    }

    pub fn quiet(mut self) -> Self {
        self.quiet = true;
        self
    }
}

/// Players, streams and bookkeeping of one debate.
pub(crate) struct Debate<'s> {
    protocol: &'static str,
    strategies: [&'s Strategy; 2],
    players: [Box<dyn Player>; 2],
    rngs: [StreamRng; 2],
    pub verifier_rng: StreamRng,
    key: StreamKey,
    pub counters: Counters,
    log: Vec<LogEntry>,
    quiet: bool,
    seed: u64,
}

fn index(p: Party) -> usize {
    match p {
        Party::A => 0,
        Party::B => 1,
    }
}

impl<'s> Debate<'s> {
    pub fn new(protocol: &'static str, a: &'s Strategy, b: &'s Strategy, seed: u64, quiet: bool) -> Self {
        let key = StreamKey::new(seed);
        Self {
            protocol,
            strategies: [a, b],
            players: [a.spawn(), b.spawn()],
            rngs: [key.child(label::PROVER_A).rng(), key.child(label::PROVER_B).rng()],
            verifier_rng: key.child(label::VERIFIER).rng(),
            key,
            counters: Counters::default(),
            log: Vec::new(),
            quiet,
            seed,
        }
    }

    fn charge(counters: &mut Counters, party: Party) -> (&mut u64, &mut u64) {
        match party {
            Party::A => (&mut counters.prover_a_steps, &mut counters.prover_a_oracle_samples),
            Party::B => (&mut counters.prover_b_steps, &mut counters.prover_b_oracle_samples),
        }
    }

    pub fn note(&mut self, round: Option<usize>, speaker: Speaker, text: impl FnOnce() -> String) {
        if !self.quiet {
            self.log.push(LogEntry { round, speaker, text: text() });
        }
    }

    fn record(&mut self, round: Option<usize>, speaker: Speaker, reply: &Result<Message>) {
        self.note(round, speaker, || match reply {
            Ok(m) => m.to_string(),
            Err(e) => format!("error: {e}"),
        });
    }

    /// Asks a prover; a failing strategy forfeits.
    pub fn ask(&mut self, party: Party, ctx: &Context<'_>, req: &Request<'_>, round: Option<usize>) -> Play<Message> {
        let i = index(party);
        let (steps, samples) = Self::charge(&mut self.counters, party);
        let mut io = Io { rng: &mut self.rngs[i], steps, samples };
        let reply = self.players[i].respond(ctx, req, &mut io);
        let speaker = if party == Party::A { Speaker::A } else { Speaker::B };
        self.record(round, speaker, &reply);
        reply.map_err(|_| party)
    }

    /// Asks a fresh copy of a prover, with its own stream for this round.
    pub fn ask_copy(&mut self, party: Party, ctx: &Context<'_>, req: &Request<'_>, round: usize) -> Play<Message> {
        let i = index(party);
        let tag = if party == Party::A { label::COPY_OF_A } else { label::COPY_OF_B };
        let mut rng = self.key.path(&[tag, round as u64]).rng();
        let mut copy = self.strategies[i].spawn();
        let (steps, samples) = Self::charge(&mut self.counters, party);
        let mut io = Io { rng: &mut rng, steps, samples };
        let reply = copy.respond(ctx, req, &mut io);
        let speaker = if party == Party::A { Speaker::CopyOfA } else { Speaker::CopyOfB };
        self.record(Some(round), speaker, &reply);
        reply.map_err(|_| party)
    }

    pub fn malformed(&mut self, party: Party, round: Option<usize>, why: &str) -> Party {
        self.note(round, Speaker::Verifier, || format!("{party} forfeits: {why}"));
        party
    }

    pub fn finish(mut self, d: Decision) -> DebateOutcome {
        self.note(d.abort_round, Speaker::Verifier, || format!("verdict {}", d.verdict as u8));
        DebateOutcome {
            protocol: self.protocol.to_string(),
            verdict: d.verdict,
            abort_round: d.abort_round,
            forfeit: d.forfeit,
            counters: self.counters,
            log: self.log,
            seed: self.seed,
        }
    }
}

/// Folds a forfeit into a decision.
pub(crate) fn settle(play: Play<Decision>) -> Decision {
    play.unwrap_or_else(Decision::forfeit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn abort_check_examples() {
        let half = UnitRational::ratio(1, 2);
        assert!(verifier_abort_check(&half, &half, 150));
        assert!(!verifier_abort_check(&UnitRational::zero(), &UnitRational::one(), 150));
        let p = UnitRational::ratio(1, 3);
        let q = UnitRational::from_big(p.as_big() + params::inverse(600, 1)).unwrap();
        assert!(!verifier_abort_check(&p, &q, 150));
        let q = UnitRational::from_big(p.as_big() + params::inverse(601, 1)).unwrap();
        assert!(verifier_abort_check(&p, &q, 150));
    }
}


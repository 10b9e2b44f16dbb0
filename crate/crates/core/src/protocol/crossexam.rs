use super::{settle, Debate, Decision, Message, Party, Play, Referee};
use crate::bits::{ceil_log2, BitString};
use crate::error::{Error, Result};
use crate::machine::StepProgram;
use crate::oracle::StochasticOracle;
use crate::protocol::DebateOutcome;
use crate::strategy::{Context, Game, Request, Strategy};

/// Bits the verifier may read when `B` points at a step with `reads` inputs:
/// `l + w + |I(t)|·⌈log₂T⌉ + ⌈log₂T⌉`.
pub fn crossexam_bit_budget(p: &StepProgram, reads: usize) -> u64 {
    let lg = ceil_log2(p.len()) as u64;
    p.max_read_bits() as u64 + p.width() as u64 + reads as u64 * lg + lg
}

pub(crate) fn check_oracle(p: &StepProgram, oracle: &StochasticOracle) -> Result<()> {
    if p.query_steps() > 0 && oracle.len() != p.query_len() {
        return Err(Error::BadQueryLength { expected: p.query_len(), got: oracle.len() });
    }
    Ok(())
}

/// A sends a transcript; B accepts it or points at one step, which the
/// verifier rechecks from that step's read-set alone.
pub(crate) fn crossexam_phase(d: &mut Debate<'_>, p: &StepProgram, x: &BitString, oracle: &StochasticOracle, referee: &Referee) -> Play<Decision> {
    let ctx = Context { x, oracle, game: Game::CrossExam(p) };
    let cells = match d.ask(Party::A, &ctx, &Request::Transcript, None)? {
        Message::TranscriptMsg(c) => c,
        _ => return Err(d.malformed(Party::A, None, "expected a transcript")),
    };
    if cells.len() != p.len() || cells.iter().any(|&c| c > p.mask()) {
        return Err(d.malformed(Party::A, None, "transcript has the wrong shape"));
    }
    let w = p.width() as u64;
    match d.ask(Party::B, &ctx, &Request::Locate { transcript: &cells }, None)? {
        Message::Continue => {
            d.counters.verifier_bits_read += w;
            Ok(Decision::verdict(cells[p.output_index()] & 1 == 1))
        }
        Message::LocationClaim { t, reads } => {
            if t >= p.len() || reads != p.step(t).reads() {
                return Err(d.malformed(Party::B, None, "claim does not name the step's read-set"));
            }
            let lg = ceil_log2(p.len()) as u64;
            let n = reads.len() as u64;
            d.counters.verifier_bits_read += (n + 1) * w + (n + 1) * lg;
            let r = p.readings_from(t, &cells);
            let (counters, rng) = (&mut d.counters, &mut d.verifier_rng);
            let consistent = p
                .locally_consistent(t, x, &r, cells[t], |z| {
                    counters.verifier_oracle_queries += 1;
                    oracle.sample(z, rng)
                })
                .unwrap_or(false);
            d.note(None, super::Speaker::Verifier, || format!("step {t} is {}", if consistent { "consistent" } else { "inconsistent" }));
            Ok(Decision::verdict(consistent || referee.params.broken_verifier))
        }
        _ => Err(d.malformed(Party::B, None, "expected continue or a location claim")),
    }
}

/// Cross-examination debate about `p` on input `x`.
pub fn run_crossexam(
    p: &StepProgram,
    x: &BitString,
    oracle: &StochasticOracle,
    a: &Strategy,
    b: &Strategy,
    referee: &Referee,
    seed: u64,
) -> Result<DebateOutcome> {
    p.check_input(x)?;
    check_oracle(p, oracle)?;
    let mut d = Debate::new("crossexam", a, b, seed, referee.quiet);
    let decision = settle(crossexam_phase(&mut d, p, x, oracle, referee));
    Ok(d.finish(decision))
}

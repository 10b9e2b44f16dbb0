use super::{settle, verifier_abort_check, Debate, Decision, Message, Party, Play, Referee, Speaker};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::machine::{Cell, StepKind, StepProgram};
use crate::oracle::StochasticOracle;
use crate::protocol::crossexam::check_oracle;
use crate::protocol::{DebateOutcome, ProtocolParams};
use crate::rational::{mod1_add, UnitRational};
use crate::strategy::{Context, Game, Request, RoundRecord, Strategy};

/// Derived constants `(d, r, R)` for a program with a declared Lipschitz constant.
pub fn stochastic_constants(p: &StepProgram, params: &ProtocolParams) -> Result<(u64, u64, u64)> {
    params.validate()?;
    let k = p
        .lipschitz()
        .ok_or_else(|| Error::InvalidParams(format!("program `{}` declares no Lipschitz constant", p.name)))?;
    let d = params.d(k)?;
    Ok((d, params.r(d), params.big_r(d, p.len())))
}

/// The stochastic protocol works on 1-bit cells only.
pub fn check_stochastic_program(p: &StepProgram) -> Result<()> {
    if p.width() != 1 {
        return Err(Error::UnsupportedCellWidth(p.width()));
    }
    Ok(())
}

/// Rounds of announce, coin-flip and optional abort, one per step.
pub(crate) fn stochastic_phase(
    d: &mut Debate<'_>,
    p: &StepProgram,
    x: &BitString,
    oracle: &StochasticOracle,
    referee: &Referee,
) -> Result<Play<Decision>> {
    let (dd, r, big_r) = stochastic_constants(p, &referee.params)?;
    let ctx = Context { x, oracle, game: Game::Stochastic { program: p, d: dd, big_r, sampling: referee.params.sampling } };
    let mut prefix: Vec<bool> = Vec::with_capacity(p.len());
    let mut history: Vec<RoundRecord> = Vec::with_capacity(p.len());
    let play = (|| -> Result<Play<Decision>> {
        for t in 0..p.len() {
            let announcement = match d.ask(Party::A, &ctx, &Request::Announce { round: t, prefix: &prefix, history: &history }, Some(t)) {
                Ok(Message::ProbabilityAnnouncement(p)) => p,
                Ok(_) => return Ok(Err(d.malformed(Party::A, Some(t), "expected a probability"))),
                Err(f) => return Ok(Err(f)),
            };
            let share_req = Request::Share { round: t, prefix: &prefix, history: &history };
            let share_a = match d.ask_copy(Party::A, &ctx, &share_req, t) {
                Ok(Message::RandomShare(z)) => z,
                Ok(_) => return Ok(Err(d.malformed(Party::A, Some(t), "expected a share"))),
                Err(f) => return Ok(Err(f)),
            };
            let share_b = match d.ask_copy(Party::B, &ctx, &share_req, t) {
                Ok(Message::RandomShare(z)) => z,
                Ok(_) => return Ok(Err(d.malformed(Party::B, Some(t), "expected a share"))),
                Err(f) => return Ok(Err(f)),
            };
            let z = mod1_add(share_a, share_b);
            let bit = announcement.admits(z);
            d.note(Some(t), Speaker::Verifier, || format!("z {z} a {}", bit as u8));
            let req = Request::AbortDecision { round: t, prefix: &prefix, announcement: &announcement, bit, history: &history };
            match d.ask(Party::B, &ctx, &req, Some(t)) {
                Ok(Message::Continue) => {}
                Ok(Message::Abort) => {
                    let verdict = abort_check(d, p, x, oracle, &prefix, t, &announcement, dd, r, referee)?;
                    return Ok(Ok(Decision { verdict, abort_round: Some(t), forfeit: None }));
                }
                Ok(_) => return Ok(Err(d.malformed(Party::B, Some(t), "expected abort or continue"))),
                Err(f) => return Ok(Err(f)),
            }
            prefix.push(bit);
            history.push(RoundRecord { announcement, share_a, share_b, bit });
        }
        d.counters.verifier_bits_read += 1;
        Ok(Ok(Decision::verdict(*prefix.last().expect("programs have at least one step"))))
    })()?;
    Ok(play)
}

#[allow(clippy::too_many_arguments)]
fn abort_check(
    d: &mut Debate<'_>,
    p: &StepProgram,
    x: &BitString,
    oracle: &StochasticOracle,
    prefix: &[bool],
    t: usize,
    announcement: &UnitRational,
    dd: u64,
    r: u64,
    referee: &Referee,
) -> Result<bool> {
    let cells: Vec<Cell> = prefix.iter().map(|&b| b as Cell).collect();
    let readings = p.readings_from(t, &cells);
    d.counters.verifier_bits_read += p.step(t).reads().len() as u64;
    let observed = match p.step(t).kind() {
        StepKind::Det(_) => UnitRational::from_bit(p.det_value(t, x, &readings)? & 1 == 1),
        StepKind::Query(_) => {
            let z = p.query_string(t, x, &readings)?;
            d.counters.verifier_oracle_queries += r;
            let k = oracle.sample_count(&z, r, &mut d.verifier_rng, referee.params.sampling)?;
            UnitRational::mean(k, r)?
        }
    };
    let pass = verifier_abort_check(announcement, &observed, dd);
    d.note(Some(t), Speaker::Verifier, || format!("abort check observed {observed} announced {announcement}: {}", if pass { "pass" } else { "fail" }));
    Ok(pass || referee.params.broken_verifier)
}

/// Stochastic-oracle debate about `p` on input `x`.
pub fn run_stochastic(
    p: &StepProgram,
    x: &BitString,
    oracle: &StochasticOracle,
    a: &Strategy,
    b: &Strategy,
    referee: &Referee,
    seed: u64,
) -> Result<DebateOutcome> {
    p.check_input(x)?;
    check_stochastic_program(p)?;
    check_oracle(p, oracle)?;
    let mut d = Debate::new("stochastic", a, b, seed, referee.quiet);
    let decision = settle(stochastic_phase(&mut d, p, x, oracle, referee)?);
    Ok(d.finish(decision))
}

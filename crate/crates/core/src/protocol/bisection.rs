use super::{settle, Debate, Decision, Message, Party, Play, Referee, Speaker};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::machine::{vm_step, Configuration, ConfigurationMachine};
use crate::oracle::StochasticOracle;
use crate::protocol::DebateOutcome;
use crate::strategy::{Context, Game, Request, Strategy};

fn decode(d: &mut Debate<'_>, m: &ConfigurationMachine, msg: Message, step: usize, round: Option<usize>) -> Play<Configuration> {
    let Message::ConfigurationMsg(bits) = msg else {
        return Err(d.malformed(Party::A, round, "expected a configuration"));
    };
    match m.deserialize(&bits) {
        Ok(c) if m.is_valid(&c) && c.step == step => Ok(c),
        _ => Err(d.malformed(Party::A, round, &format!("not a valid configuration at step {step}"))),
    }
}

fn play(d: &mut Debate<'_>, m: &ConfigurationMachine, x: &BitString, oracle: &StochasticOracle, referee: &Referee) -> Play<Decision> {
    let ctx = Context { x, oracle, game: Game::Bisection(m) };
    let t_max = m.time();
    let claim = d.ask(Party::A, &ctx, &Request::FinalClaim, None)?;
    let fin = decode(d, m, claim, t_max, None)?;
    let mut configs_read = 1u64;
    let bits = m.config_bits() as u64;
    d.counters.verifier_bits_read = configs_read * bits;
    if !m.is_accepting(&fin) {
        d.note(None, Speaker::Verifier, || "final claim does not accept".into());
        return Ok(Decision::verdict(false));
    }
    let (mut lo, mut hi) = (0usize, t_max);
    let mut lo_cfg = m.initial(x).expect("input length checked by the caller");
    let mut hi_cfg = fin;
    let mut round = 0;
    while hi - lo > 1 {
        let mid = lo + (hi - lo).div_ceil(2);
        let msg = d.ask(Party::A, &ctx, &Request::Midpoint { round, start: lo, mid, end: hi }, Some(round))?;
        let mid_cfg = decode(d, m, msg, mid, Some(round))?;
        configs_read += 1;
        d.counters.verifier_bits_read = configs_read * bits;
        let req = Request::Selector { round, steps: (lo, mid, hi), start: &lo_cfg, mid: &mid_cfg, end: &hi_cfg };
        match d.ask(Party::B, &ctx, &req, Some(round))? {
            Message::Continue => return Ok(Decision::verdict(true)),
            Message::HalfSelector(true) => {
                hi = mid;
                hi_cfg = mid_cfg;
            }
            Message::HalfSelector(false) => {
                lo = mid;
                lo_cfg = mid_cfg;
            }
            _ => return Err(d.malformed(Party::B, Some(round), "expected a half selector or continue")),
        }
        round += 1;
    }
    if lo == 0 {
        // The initial configuration is read from the input.
        configs_read += 1;
        d.counters.verifier_bits_read = configs_read * bits;
    }
    let bit = match m.pending_query(&lo_cfg) {
        Some(z) => {
            d.counters.verifier_oracle_queries += 1;
            Some(oracle.sample(&z, &mut d.verifier_rng).unwrap_or(false))
        }
        None => None,
    };
    let ok = vm_step(m, &lo_cfg, bit).is_ok_and(|next| next == hi_cfg);
    d.note(Some(round), Speaker::Verifier, || format!("step {lo} -> {hi} is {}", if ok { "valid" } else { "invalid" }));
    Ok(Decision::verdict(ok || referee.params.broken_verifier))
}

/// Bisection debate about the run of `m` on `x`.
pub fn run_bisection(
    m: &ConfigurationMachine,
    x: &BitString,
    oracle: &StochasticOracle,
    a: &Strategy,
    b: &Strategy,
    referee: &Referee,
    seed: u64,
) -> Result<DebateOutcome> {
    m.initial(x)?;
    if m.query_convention().is_some_and(|q| q.window_len != oracle.len()) {
        return Err(Error::BadQueryLength { expected: m.query_len(), got: oracle.len() });
    }
    let mut d = Debate::new("bisection", a, b, seed, referee.quiet);
    let decision = settle(play(&mut d, m, x, oracle, referee));
    Ok(d.finish(decision))
}

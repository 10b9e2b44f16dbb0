use std::cmp::Ordering;

use super::{Context, Game, Io, Player, Request};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::machine::{sp_run_with, vm_advance, vm_run_with, Cell, Configuration, StepKind, StepProgram};
use crate::oracle::{exact_output_prob, StochasticOracle};
use crate::protocol::params::inverse;
use crate::protocol::Message;
use crate::rational::{distance_cmp, UnitFixed, UnitRational};

/// Largest witness length the honest prover searches exhaustively.
pub const WITNESS_SEARCH_LIMIT: usize = 20;

/// Step `t` given the earlier cells: a known bit, or the oracle query to ask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TrueValue {
    Exact(bool),
    Query(BitString),
}

pub fn honest_value(p: &StepProgram, x: &BitString, prefix: &[Cell], t: usize) -> Result<TrueValue> {
    let r = p.readings_from(t, prefix);
    Ok(match p.step(t).kind() {
        StepKind::Det(_) => TrueValue::Exact(p.det_value(t, x, &r)? & 1 == 1),
        StepKind::Query(_) => TrueValue::Query(p.query_string(t, x, &r)?),
    })
}

fn mismatch(req: &Request<'_>) -> Error {
    Error::InvalidParams(format!("request {req:?} does not fit this game"))
}

/// The prescribed prover for every protocol and either side.
#[derive(Debug, Default)]
pub struct HonestPlayer {
    run: Option<Vec<Configuration>>,
    transcript: Option<Vec<Cell>>,
}

fn sample(oracle: &StochasticOracle, z: &BitString, io: &mut Io<'_>) -> Result<bool> {
    *io.samples += 1;
    oracle.sample(z, io.rng)
}

impl HonestPlayer {
    pub fn new() -> Self {
        Self::default()
    }

    /// `p̂_t` (or `q̂_t`): exact on deterministic steps, the mean of `R`
    /// samples on oracle steps.
    pub fn estimate(ctx: &Context<'_>, prefix: &[bool], t: usize, io: &mut Io<'_>) -> Result<UnitRational> {
        let Game::Stochastic { program, big_r, sampling, .. } = ctx.game else {
            return Err(Error::InvalidParams("estimates only exist in the stochastic protocol".into()));
        };
        let cells: Vec<Cell> = prefix.iter().map(|&b| b as Cell).collect();
        *io.steps += 1;
        match honest_value(program, ctx.x, &cells, t)? {
            TrueValue::Exact(b) => Ok(UnitRational::from_bit(b)),
            TrueValue::Query(z) => {
                *io.samples += big_r;
                ctx.oracle.sample_mean(&z, big_r, io.rng, sampling)
            }
        }
    }

    fn witness(ctx: &Context<'_>, len: usize, io: &mut Io<'_>) -> Result<BitString> {
        let Game::Witness { program, stochastic, .. } = ctx.game else {
            return Err(Error::InvalidParams("witness requested outside the witness protocol".into()));
        };
        if len > WITNESS_SEARCH_LIMIT {
            return Err(Error::TooLargeToEnumerate { what: "witness length", size: len, limit: WITNESS_SEARCH_LIMIT });
        }
        let mut best: Option<(UnitRational, BitString)> = None;
        for w in BitString::all(len) {
            let xw = ctx.x.concat(&w);
            *io.steps += program.len() as u64;
            let score = if stochastic {
                exact_output_prob(program, &xw, ctx.oracle)?
            } else {
                let (_, out) = sp_run_with(program, &xw, |z| sample(ctx.oracle, z, io))?;
                if out {
                    return Ok(w);
                }
                UnitRational::zero()
            };
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                best = Some((score, w));
            }
        }
        Ok(best.map(|(_, w)| w).unwrap_or_default())
    }

    pub fn true_transcript(&mut self, ctx: &Context<'_>, io: &mut Io<'_>) -> Result<Vec<Cell>> {
        if let Some(t) = &self.transcript {
            return Ok(t.clone());
        }
        let p = match ctx.game {
            Game::CrossExam(p) | Game::Stochastic { program: p, .. } => p,
            _ => return Err(Error::InvalidParams("no step program in this game".into())),
        };
        *io.steps += p.len() as u64;
        let (tr, _) = sp_run_with(p, ctx.x, |z| sample(ctx.oracle, z, io))?;
        let cells = tr.cells().expect("a finished run assigns every cell");
        self.transcript = Some(cells.clone());
        Ok(cells)
    }

    fn locate(ctx: &Context<'_>, transcript: &[Cell], io: &mut Io<'_>) -> Result<Message> {
        let Game::CrossExam(p) = ctx.game else {
            return Err(Error::InvalidParams("locations are only claimed in cross-examination".into()));
        };
        for t in 0..p.len() {
            *io.steps += 1;
            let r = p.readings_from(t, transcript);
            if !p.locally_consistent(t, ctx.x, &r, transcript[t], |z| sample(ctx.oracle, z, io))? {
                return Ok(Message::LocationClaim { t, reads: p.step(t).reads().to_vec() });
            }
        }
        Ok(Message::Continue)
    }

    fn machine_run(&mut self, ctx: &Context<'_>, io: &mut Io<'_>) -> Result<&[Configuration]> {
        let Game::Bisection(m) = ctx.game else {
            return Err(Error::InvalidParams("configurations only exist in bisection".into()));
        };
        if self.run.is_none() {
            *io.steps += m.time() as u64;
            let run = vm_run_with(m, ctx.x, |z| sample(ctx.oracle, z, io))?;
            self.run = Some(run.configs);
        }
        Ok(self.run.as_deref().unwrap())
    }

    fn select(ctx: &Context<'_>, req: &Request<'_>, io: &mut Io<'_>) -> Result<Message> {
        let (Game::Bisection(m), Request::Selector { steps: (s, mid, e), start, mid: mid_cfg, end, .. }) = (ctx.game, req) else {
            return Err(mismatch(req));
        };
        let reaches = |from: &Configuration, n: usize, to: &Configuration, io: &mut Io<'_>| {
            *io.steps += n as u64;
            match vm_advance(m, from, n, |z| sample(ctx.oracle, z, io)) {
                Ok(c) => &c == to,
                Err(_) => false,
            }
        };
        if !reaches(start, mid - s, mid_cfg, io) {
            return Ok(Message::HalfSelector(true));
        }
        if !reaches(mid_cfg, e - mid, end, io) {
            return Ok(Message::HalfSelector(false));
        }
        Ok(Message::Continue)
    }
}

impl Player for HonestPlayer {
    fn respond(&mut self, ctx: &Context<'_>, req: &Request<'_>, io: &mut Io<'_>) -> Result<Message> {
        match req {
            Request::Witness { len } => Ok(Message::WitnessMsg(Self::witness(ctx, *len, io)?)),
            Request::Transcript => Ok(Message::TranscriptMsg(self.true_transcript(ctx, io)?)),
            Request::Locate { transcript } => Self::locate(ctx, transcript, io),
            Request::FinalClaim => {
                let Game::Bisection(m) = ctx.game else { return Err(mismatch(req)) };
                let c = self.machine_run(ctx, io)?.last().unwrap().clone();
                Ok(Message::ConfigurationMsg(m.serialize(&c)))
            }
            Request::Midpoint { mid, .. } => {
                let Game::Bisection(m) = ctx.game else { return Err(mismatch(req)) };
                let c = self.machine_run(ctx, io)?[*mid].clone();
                Ok(Message::ConfigurationMsg(m.serialize(&c)))
            }
            Request::Selector { .. } => Self::select(ctx, req, io),
            Request::Announce { round, prefix, .. } => {
                Ok(Message::ProbabilityAnnouncement(Self::estimate(ctx, prefix, *round, io)?))
            }
            Request::Share { .. } => Ok(Message::RandomShare(UnitFixed::uniform(io.rng))),
            Request::AbortDecision { round, prefix, announcement, .. } => {
                let Game::Stochastic { d, .. } = ctx.game else { return Err(mismatch(req)) };
                let q = Self::estimate(ctx, prefix, *round, io)?;
                let abort = distance_cmp(&q, announcement, &inverse(2, d)) != Ordering::Less;
                Ok(if abort { Message::Abort } else { Message::Continue })
            }
        }
    }
}

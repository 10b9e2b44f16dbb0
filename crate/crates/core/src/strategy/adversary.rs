use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};

use super::honest::HonestPlayer;
use super::{Context, Game, Io, Player, Policy, Request, Strategy};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::machine::{Cell, StepKind};
use crate::protocol::Message;
use crate::rational::{parse_rational, UnitFixed, UnitRational};

/// A probability shift, optionally in units of `1/d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shift {
    pub value: BigRational,
    pub per_d: bool,
}

impl Shift {
    pub fn resolve(&self, d: u64) -> BigRational {
        if self.per_d {
            &self.value / BigRational::from_integer(d.into())
        } else {
            self.value.clone()
        }
    }
}

impl FromStr for Shift {
    type Err = Error;

    /// `1/4`, `-0.1`, or a multiple of `1/d`: `1/d`, `1/2d`, `3d`.
    fn from_str(s: &str) -> Result<Self> {
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let (body, per_d) = if let Some(b) = body.strip_suffix("/d") {
            (b, true)
        } else if let Some(b) = body.strip_suffix('d') {
            (b, true)
        } else {
            (body, false)
        };
        let mut value = parse_rational(body)?;
        if neg {
            value = -value;
        }
        Ok(Self { value, per_d })
    }
}

impl fmt::Display for Shift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = &self.value;
        match (self.per_d, v.denom().is_one()) {
            (false, _) => write!(f, "{v}"),
            (true, true) if v.numer().is_one() => write!(f, "1/d"),
            (true, true) => write!(f, "{v}d"),
            (true, false) => write!(f, "{v}d"),
        }
    }
}

/// A member of the attack family, written `Family key=value ...`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AdversarySpec {
    Honest,
    /// Adds `delta` to the honest announcement (clipped to `[0, 1]`) in round
    /// `round`, or in every round when absent.
    ShiftedAnnouncer { round: Option<usize>, delta: Shift },
    /// Announces `bit` with certainty in the final round (also sets the final
    /// cell or final output symbol in the deterministic protocols).
    LyingFinalBit { bit: bool },
    /// Always submits the same share.
    BiasedShare { share: BigRational },
    /// Aborts (or, in cross-examination, accuses) in round `round` only;
    /// round 0 when absent.
    AlwaysAbort { round: Option<usize> },
    /// Never aborts, accuses or selects a half.
    NeverAbort,
    /// Accuses the correct location `t`; with `bad_reads` it also misstates `I(t)`.
    FrivolousAccuser { t: usize, bad_reads: bool },
    /// Flips the listed bits of the serialized midpoint of round `round`.
    MidpointCorruptor { round: usize, flips: Vec<usize> },
    FinalClaimCorruptor { flips: Vec<usize> },
    /// Per-round selectors: `Some(b)` is `HalfSelector(b)`, `None` is `Continue`.
    SelectorSequence { moves: Vec<Option<bool>> },
    /// XORs `mask` into cell `cell` of the true transcript; with `propagate`
    /// every later cell is recomputed from the corrupted ones.
    TranscriptCorruptor { cell: usize, mask: Cell, propagate: bool },
    BadWitness { witness: BitString, inner: Box<AdversarySpec> },
    /// Answers every request with a message of the wrong kind.
    Garbage,
}

pub const FAMILIES: &[&str] = &[
    "Honest",
    "ShiftedAnnouncer",
    "LyingFinalBit",
    "BiasedShare",
    "AlwaysAbort",
    "NeverAbort",
    "FrivolousAccuser",
    "MidpointCorruptor",
    "FinalClaimCorruptor",
    "SelectorSequence",
    "TranscriptCorruptor",
    "BadWitness",
    "Garbage",
];

fn parse_flips(mask: Option<&str>, bit: Option<&str>) -> Result<Vec<usize>> {
    match (mask, bit) {
        (Some(m), None) => {
            let bits: BitString = m.parse()?;
            Ok(bits.bits().iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect())
        }
        (None, Some(b)) => Ok(vec![b.parse().map_err(|_| Error::Config(format!("bad bit index `{b}`")))?]),
        _ => Err(Error::Config("give exactly one of mask=BITS or bit=INDEX".into())),
    }
}

fn parse_bool(v: &str) -> Result<bool> {
    match v {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        _ => Err(Error::Config(format!("expected a boolean, got `{v}`"))),
    }
}

impl FromStr for AdversarySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, inner) = match s.find("inner=") {
            Some(i) => (&s[..i], Some(s[i + "inner=".len()..].trim())),
            None => (s, None),
        };
        let mut words = head.split_whitespace();
        let family = words.next().ok_or_else(|| Error::Config("empty strategy".into()))?;
        let mut kv = std::collections::BTreeMap::new();
        for w in words {
            let (k, v) = w.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got `{w}`")))?;
            if kv.insert(k, v).is_some() {
                return Err(Error::Config(format!("repeated key `{k}`")));
            }
        }
        let mut take = |k: &str| kv.remove(k);
        let usize_of = |v: &str| v.parse::<usize>().map_err(|_| Error::Config(format!("expected an index, got `{v}`")));
        let spec = match family {
            "Honest" => AdversarySpec::Honest,
            "ShiftedAnnouncer" => AdversarySpec::ShiftedAnnouncer {
                round: take("t").map(usize_of).transpose()?,
                delta: take("delta").ok_or_else(|| Error::Config("ShiftedAnnouncer needs delta=".into()))?.parse()?,
            },
            "LyingFinalBit" => AdversarySpec::LyingFinalBit { bit: take("bit").map(parse_bool).transpose()?.unwrap_or(true) },
            "BiasedShare" => {
                let share = take("c").map(parse_rational).transpose()?.unwrap_or_else(BigRational::zero);
                if share < BigRational::zero() || share >= BigRational::one() {
                    return Err(Error::Config(format!("share {share} outside [0, 1)")));
                }
                AdversarySpec::BiasedShare { share }
            }
            "AlwaysAbort" => AdversarySpec::AlwaysAbort { round: take("t").map(usize_of).transpose()? },
            "NeverAbort" => AdversarySpec::NeverAbort,
            "FrivolousAccuser" => AdversarySpec::FrivolousAccuser {
                t: usize_of(take("t").ok_or_else(|| Error::Config("FrivolousAccuser needs t=".into()))?)?,
                bad_reads: take("bad_reads").map(parse_bool).transpose()?.unwrap_or(false),
            },
            "MidpointCorruptor" => AdversarySpec::MidpointCorruptor {
                round: usize_of(take("k").ok_or_else(|| Error::Config("MidpointCorruptor needs k=".into()))?)?,
                flips: parse_flips(take("mask"), take("bit"))?,
            },
            "FinalClaimCorruptor" => AdversarySpec::FinalClaimCorruptor { flips: parse_flips(take("mask"), take("bit"))? },
            "SelectorSequence" => {
                let moves = take("moves").ok_or_else(|| Error::Config("SelectorSequence needs moves=".into()))?;
                let moves = moves
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(Some(false)),
                        '1' => Ok(Some(true)),
                        'c' => Ok(None),
                        _ => Err(Error::Config(format!("selector moves are 0, 1 or c, got `{c}`"))),
                    })
                    .collect::<Result<_>>()?;
                AdversarySpec::SelectorSequence { moves }
            }
            "TranscriptCorruptor" => {
                let mask = take("mask").unwrap_or("1");
                let mask = match mask.strip_prefix("0x") {
                    Some(h) => Cell::from_str_radix(h, 16),
                    None => mask.parse(),
                }
                .map_err(|_| Error::Config(format!("bad mask `{mask}`")))?;
                if mask == 0 {
                    return Err(Error::Config("a zero mask corrupts nothing".into()));
                }
                AdversarySpec::TranscriptCorruptor {
                    cell: usize_of(take("cell").ok_or_else(|| Error::Config("TranscriptCorruptor needs cell=".into()))?)?,
                    mask,
                    propagate: take("propagate").map(parse_bool).transpose()?.unwrap_or(false),
                }
            }
            "BadWitness" => AdversarySpec::BadWitness {
                witness: take("w").ok_or_else(|| Error::Config("BadWitness needs w=".into()))?.parse()?,
                inner: Box::new(inner.map(str::parse).transpose()?.unwrap_or(AdversarySpec::Honest)),
            },
            "Garbage" => AdversarySpec::Garbage,
            other => return Err(Error::UnknownFamily(other.to_string())),
        };
        if inner.is_some() && !matches!(spec, AdversarySpec::BadWitness { .. }) {
            return Err(Error::Config("only BadWitness takes inner=".into()));
        }
        if let Some(k) = kv.keys().next() {
            return Err(Error::Config(format!("unknown key `{k}` for {family}")));
        }
        Ok(spec)
    }
}

fn flips_to_string(flips: &[usize]) -> String {
    match flips {
        [b] => format!("bit={b}"),
        _ => {
            let len = flips.iter().max().map_or(0, |m| m + 1);
            let mut mask = BitString::zeros(len).bits().to_vec();
            for &f in flips {
                mask[f] = true;
            }
            format!("mask={}", BitString::new(mask))
        }
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let round = |r: &Option<usize>| r.map(|r| format!(" t={r}")).unwrap_or_default();
        match self {
            AdversarySpec::Honest => write!(f, "Honest"),
            AdversarySpec::ShiftedAnnouncer { round: r, delta } => write!(f, "ShiftedAnnouncer{} delta={delta}", round(r)),
            AdversarySpec::LyingFinalBit { bit } => write!(f, "LyingFinalBit bit={}", *bit as u8),
            AdversarySpec::BiasedShare { share } => write!(f, "BiasedShare c={share}"),
            AdversarySpec::AlwaysAbort { round: r } => write!(f, "AlwaysAbort{}", round(r)),
            AdversarySpec::NeverAbort => write!(f, "NeverAbort"),
            AdversarySpec::FrivolousAccuser { t, bad_reads } => {
                write!(f, "FrivolousAccuser t={t}{}", if *bad_reads { " bad_reads=true" } else { "" })
            }
            AdversarySpec::MidpointCorruptor { round, flips } => write!(f, "MidpointCorruptor k={round} {}", flips_to_string(flips)),
            AdversarySpec::FinalClaimCorruptor { flips } => write!(f, "FinalClaimCorruptor {}", flips_to_string(flips)),
            AdversarySpec::SelectorSequence { moves } => {
                let m: String = moves.iter().map(|m| m.map_or('c', |b| if b { '1' } else { '0' })).collect();
                write!(f, "SelectorSequence moves={m}")
            }
            AdversarySpec::TranscriptCorruptor { cell, mask, propagate } => {
                write!(f, "TranscriptCorruptor cell={cell} mask={mask}{}", if *propagate { " propagate=true" } else { "" })
            }
            AdversarySpec::BadWitness { witness, inner } => write!(f, "BadWitness w={witness} inner={inner}"),
            AdversarySpec::Garbage => write!(f, "Garbage"),
        }
    }
}

struct SpecPolicy(AdversarySpec);

impl Policy for SpecPolicy {
    fn name(&self) -> String {
        self.0.to_string()
    }

    fn spawn(&self) -> Box<dyn Player> {
        Box::new(SpecPlayer::new(self.0.clone()))
    }
}

/// Instantiates an attack (or the honest prover) as a strategy.
pub fn make_adversary(spec: &AdversarySpec) -> Strategy {
    Strategy::new(SpecPolicy(spec.clone()))
}

struct SpecPlayer {
    spec: AdversarySpec,
    honest: HonestPlayer,
    inner: Option<Box<SpecPlayer>>,
}

impl SpecPlayer {
    fn new(spec: AdversarySpec) -> Self {
        let inner = match &spec {
            AdversarySpec::BadWitness { inner, .. } => Some(Box::new(SpecPlayer::new((**inner).clone()))),
            _ => None,
        };
        Self { spec, honest: HonestPlayer::new(), inner }
    }

    fn corrupt_config(msg: Message, flips: &[usize]) -> Message {
        match msg {
            Message::ConfigurationMsg(bits) => {
                let mut v = bits.bits().to_vec();
                for &f in flips {
                    if let Some(b) = v.get_mut(f) {
                        *b = !*b;
                    }
                }
                Message::ConfigurationMsg(BitString::new(v))
            }
            other => other,
        }
    }

    fn corrupt_transcript(&mut self, ctx: &Context<'_>, cell: usize, mask: Cell, propagate: bool, io: &mut Io<'_>) -> Result<Message> {
        let Game::CrossExam(p) = ctx.game else {
            return self.honest.respond(ctx, &Request::Transcript, io);
        };
        let mut cells = self.honest.true_transcript(ctx, io)?;
        if cell >= cells.len() {
            return Ok(Message::TranscriptMsg(cells));
        }
        cells[cell] ^= mask & p.mask();
        if propagate {
            for t in cell + 1..p.len() {
                let r = p.readings_from(t, &cells);
                cells[t] = match p.step(t).kind() {
                    StepKind::Det(_) => match p.det_value(t, ctx.x, &r) {
                        Ok(v) => v,
                        Err(_) => cells[t],
                    },
                    StepKind::Query(_) => {
                        *io.samples += 1;
                        ctx.oracle.sample(&p.query_string(t, ctx.x, &r)?, io.rng)? as Cell
                    }
                };
            }
        }
        Ok(Message::TranscriptMsg(cells))
    }

    fn final_round(ctx: &Context<'_>) -> Option<usize> {
        match ctx.game {
            Game::Stochastic { program, .. } => Some(program.len() - 1),
            _ => None,
        }
    }
}

impl Player for SpecPlayer {
    fn respond(&mut self, ctx: &Context<'_>, req: &Request<'_>, io: &mut Io<'_>) -> Result<Message> {
        use AdversarySpec as S;
        if let Some(inner) = self.inner.as_mut() {
            if let (S::BadWitness { witness, .. }, Request::Witness { .. }) = (&self.spec, req) {
                return Ok(Message::WitnessMsg(witness.clone()));
            }
            return inner.respond(ctx, req, io);
        }
        match (&self.spec, req) {
            (S::Garbage, _) => Ok(Message::SampledBit(false)),
            (S::ShiftedAnnouncer { round, delta }, Request::Announce { round: t, prefix, .. })
                if round.is_none_or(|r| r == *t) =>
            {
                let Game::Stochastic { d, .. } = ctx.game else { unreachable!("announce outside the stochastic game") };
                let p = HonestPlayer::estimate(ctx, prefix, *t, io)?;
                Ok(Message::ProbabilityAnnouncement(p.add_clamped(&delta.resolve(d))))
            }
            (S::LyingFinalBit { bit }, Request::Announce { round, .. }) if Some(*round) == Self::final_round(ctx) => {
                Ok(Message::ProbabilityAnnouncement(UnitRational::from_bit(*bit)))
            }
            (S::LyingFinalBit { bit }, Request::Transcript) => {
                let mut cells = self.honest.true_transcript(ctx, io)?;
                if let Some(last) = cells.last_mut() {
                    *last = (*last & !1) | *bit as Cell;
                }
                Ok(Message::TranscriptMsg(cells))
            }
            (S::LyingFinalBit { bit }, Request::FinalClaim) => {
                let Game::Bisection(m) = ctx.game else { unreachable!("final claims only exist in bisection") };
                match self.honest.respond(ctx, req, io)? {
                    Message::ConfigurationMsg(bits) => {
                        let mut c = m.deserialize(&bits)?;
                        c.tape[m.output_pos()] = *bit;
                        Ok(Message::ConfigurationMsg(m.serialize(&c)))
                    }
                    other => Ok(other),
                }
            }
            (S::BiasedShare { share }, Request::Share { .. }) => Ok(Message::RandomShare(UnitFixed::from_rational(share))),
            (S::AlwaysAbort { round }, Request::AbortDecision { round: t, .. }) => {
                Ok(if round.unwrap_or(0) == *t { Message::Abort } else { Message::Continue })
            }
            (S::AlwaysAbort { round }, Request::Locate { .. }) => {
                let Game::CrossExam(p) = ctx.game else { unreachable!("locate outside cross-examination") };
                let t = round.unwrap_or(0).min(p.len() - 1);
                Ok(Message::LocationClaim { t, reads: p.step(t).reads().to_vec() })
            }
            (S::NeverAbort, Request::AbortDecision { .. } | Request::Locate { .. } | Request::Selector { .. }) => {
                Ok(Message::Continue)
            }
            (S::FrivolousAccuser { t, bad_reads }, Request::Locate { .. }) => {
                let Game::CrossExam(p) = ctx.game else { unreachable!("locate outside cross-examination") };
                let t = (*t).min(p.len() - 1);
                let mut reads = p.step(t).reads().to_vec();
                if *bad_reads {
                    if reads.is_empty() {
                        reads.push(0);
                    } else {
                        reads.pop();
                    }
                }
                Ok(Message::LocationClaim { t, reads })
            }
            (S::FrivolousAccuser { t, .. }, Request::AbortDecision { round, .. }) => {
                Ok(if t == round { Message::Abort } else { Message::Continue })
            }
            (S::MidpointCorruptor { round, flips }, Request::Midpoint { round: k, .. }) if round == k => {
                let msg = self.honest.respond(ctx, req, io)?;
                Ok(Self::corrupt_config(msg, flips))
            }
            (S::FinalClaimCorruptor { flips }, Request::FinalClaim) => {
                let msg = self.honest.respond(ctx, req, io)?;
                Ok(Self::corrupt_config(msg, flips))
            }
            (S::SelectorSequence { moves }, Request::Selector { round, .. }) if *round < moves.len() => {
                Ok(moves[*round].map_or(Message::Continue, Message::HalfSelector))
            }
            (S::TranscriptCorruptor { cell, mask, propagate }, Request::Transcript) => {
                let (cell, mask, propagate) = (*cell, *mask, *propagate);
                self.corrupt_transcript(ctx, cell, mask, propagate, io)
            }
            _ => self.honest.respond(ctx, req, io),
        }
    }
}

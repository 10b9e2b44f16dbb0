use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::machine::Cell;
use crate::rational::{UnitFixed, UnitRational};

/// Everything a prover can say. Each protocol accepts only its own kinds, in
/// its own order; anything else is malformed and forfeits the sender.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Message {
    ProbabilityAnnouncement(UnitRational),
    RandomShare(UnitFixed),
    SampledBit(bool),
    Abort,
    Continue,
    /// A serialized configuration; the verifier decodes and validates it.
    ConfigurationMsg(BitString),
    HalfSelector(bool),
    TranscriptMsg(Vec<Cell>),
    LocationClaim { t: usize, reads: Vec<usize> },
    WitnessMsg(BitString),
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::ProbabilityAnnouncement(_) => "announce",
            Message::RandomShare(_) => "share",
            Message::SampledBit(_) => "bit",
            Message::Abort => "abort",
            Message::Continue => "continue",
            Message::ConfigurationMsg(_) => "config",
            Message::HalfSelector(_) => "select",
            Message::TranscriptMsg(_) => "transcript",
            Message::LocationClaim { .. } => "claim",
            Message::WitnessMsg(_) => "witness",
        }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = self.kind();
        match self {
            Message::ProbabilityAnnouncement(p) => write!(f, "{kind} {p}"),
            Message::RandomShare(z) => write!(f, "{kind} {z}"),
            Message::SampledBit(b) | Message::HalfSelector(b) => write!(f, "{kind} {}", *b as u8),
            Message::Abort | Message::Continue => write!(f, "{kind}"),
            Message::ConfigurationMsg(bits) | Message::WitnessMsg(bits) => write!(f, "{kind} {bits}"),
            Message::TranscriptMsg(cells) => {
                let hex: Vec<String> = cells.iter().map(|c| format!("{c:x}")).collect();
                write!(f, "{kind} {}", hex.join(","))
            }
            Message::LocationClaim { t, reads } => {
                let r: Vec<String> = reads.iter().map(|c| c.to_string()).collect();
                write!(f, "{kind} t={t} reads={}", r.join(","))
            }
        }
    }
}

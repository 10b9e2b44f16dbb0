use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    /// Verdict when this party forfeits.
    pub fn losing_verdict(self) -> bool {
        self == Party::B
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::A => "A",
            Party::B => "B",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Speaker {
    A,
    B,
    /// A fresh copy of A, queried for a random share.
    CopyOfA,
    CopyOfB,
    Verifier,
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Speaker::A => "A",
            Speaker::B => "B",
            Speaker::CopyOfA => "A'",
            Speaker::CopyOfB => "B'",
            Speaker::Verifier => "V",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub verifier_oracle_queries: u64,
    pub verifier_bits_read: u64,
    pub prover_a_steps: u64,
    pub prover_b_steps: u64,
    pub prover_a_oracle_samples: u64,
    pub prover_b_oracle_samples: u64,
}

impl Counters {
    pub const FIELDS: [&'static str; 6] = [
        "verifier_oracle_queries",
        "verifier_bits_read",
        "prover_a_steps",
        "prover_b_steps",
        "prover_a_oracle_samples",
        "prover_b_oracle_samples",
    ];

    pub fn values(&self) -> [u64; 6] {
        [
            self.verifier_oracle_queries,
            self.verifier_bits_read,
            self.prover_a_steps,
            self.prover_b_steps,
            self.prover_a_oracle_samples,
            self.prover_b_oracle_samples,
        ]
    }

    fn set(&mut self, field: &str, v: u64) -> bool {
        let slot = match field {
            "verifier_oracle_queries" => &mut self.verifier_oracle_queries,
            "verifier_bits_read" => &mut self.verifier_bits_read,
            "prover_a_steps" => &mut self.prover_a_steps,
            "prover_b_steps" => &mut self.prover_b_steps,
            "prover_a_oracle_samples" => &mut self.prover_a_oracle_samples,
            "prover_b_oracle_samples" => &mut self.prover_b_oracle_samples,
            _ => return false,
        };
        *slot = v;
        true
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub round: Option<usize>,
    pub speaker: Speaker,
    pub text: String,
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.round {
            Some(r) => write!(f, "[{r:>4}] {:<2} {}", self.speaker, self.text),
            None => write!(f, "[   -] {:<2} {}", self.speaker, self.text),
        }
    }
}

/// Result of one debate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DebateOutcome {
    pub protocol: String,
    pub verdict: bool,
    pub abort_round: Option<usize>,
    pub forfeit: Option<Party>,
    pub counters: Counters,
    pub log: Vec<LogEntry>,
    pub seed: u64,
}

impl DebateOutcome {
    /// One-line `key=value` record; `-` marks an absent value.
    pub fn to_record(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        let mut s = format!(
            "protocol={} verdict={} abort_round={} forfeit={}",
            self.protocol,
            self.verdict as u8,
            opt(self.abort_round.map(|r| r.to_string())),
            opt(self.forfeit.map(|p| p.to_string())),
        );
        for (k, v) in Counters::FIELDS.iter().zip(self.counters.values()) {
            s.push_str(&format!(" {k}={v}"));
        }
        s.push_str(&format!(" seed={}", self.seed));
        s
    }

    /// Parses [`to_record`](Self::to_record) output (the log is not part of the record).
    pub fn from_record(line: &str) -> Result<Self> {
        let bad = |m: String| Error::Parse { line: 1, message: m };
        let mut out = DebateOutcome {
            protocol: String::new(),
            verdict: false,
            abort_round: None,
            forfeit: None,
            counters: Counters::default(),
            log: Vec::new(),
            seed: 0,
        };
        let mut seen = 0;
        for kv in line.split_whitespace() {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("expected key=value, got `{kv}`")))?;
            let int = |v: &str| v.parse::<u64>().map_err(|_| bad(format!("bad number `{v}` for `{k}`")));
            match k {
                "protocol" => out.protocol = v.to_string(),
                "verdict" => {
                    out.verdict = match v {
                        "0" => false,
                        "1" => true,
                        _ => return Err(bad(format!("verdict must be 0 or 1, got `{v}`"))),
                    }
                }
                "abort_round" => out.abort_round = if v == "-" { None } else { Some(int(v)? as usize) },
                "forfeit" => {
                    out.forfeit = match v {
                        "-" => None,
                        "A" => Some(Party::A),
                        "B" => Some(Party::B),
                        _ => return Err(bad(format!("bad forfeit `{v}`"))),
                    }
                }
                "seed" => out.seed = int(v)?,
                _ => {
                    if !out.counters.set(k, int(v)?) {
                        return Err(bad(format!("unknown key `{k}`")));
                    }
                }
            }
            seen += 1;
        }
        if seen != 11 {
            return Err(bad(format!("expected 11 fields, got {seen}")));
        }
        Ok(out)
    }

    /// Human-readable message log, one line per entry.
    pub fn trace(&self) -> String {
        let mut s = String::new();
        for e in &self.log {
            s.push_str(&e.to_string());
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_round_trip() {
        let o = DebateOutcome {
            protocol: "stochastic".into(),
            verdict: true,
            abort_round: Some(2),
            forfeit: None,
            counters: Counters { verifier_oracle_queries: 19_894_336, prover_a_steps: 3, ..Counters::default() },
            log: vec![],
            seed: 42,
        };
        let line = o.to_record();
        assert!(line.starts_with("protocol=stochastic verdict=1 abort_round=2 forfeit=- verifier_oracle_queries=19894336"));
        assert_eq!(DebateOutcome::from_record(&line).unwrap(), o);
        assert!(DebateOutcome::from_record("verdict=2").is_err());
    }

    #[test]
    fn trace_lines() {
        let e = LogEntry { round: Some(3), speaker: Speaker::CopyOfB, text: "share 0x0".into() };
        assert_eq!(e.to_string(), "[   3] B' share 0x0");
    }
}

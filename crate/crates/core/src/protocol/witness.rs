use serde::{Deserialize, Serialize};

use super::crossexam::{check_oracle, crossexam_phase};
use super::stochastic::{check_stochastic_program, stochastic_constants, stochastic_phase};
use super::{settle, Debate, Message, Party, Referee};
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::machine::StepProgram;
use crate::oracle::StochasticOracle;
use crate::protocol::DebateOutcome;
use crate::strategy::{Context, Game, Request, Strategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WitnessMode {
    /// Deterministic oracle; the verifier program is cross-examined.
    Det,
    /// Stochastic oracle; the verifier program runs through the stochastic protocol.
    Stoch,
}

impl std::str::FromStr for WitnessMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "det" => Ok(WitnessMode::Det),
            "stoch" => Ok(WitnessMode::Stoch),
            _ => Err(Error::Config(format!("unknown witness mode `{s}` (expected det or stoch)"))),
        }
    }
}

/// A sends a witness `w`; the debate continues about `verifier` on `x || w`.
#[allow(clippy::too_many_arguments)]
pub fn run_witness(
    mode: WitnessMode,
    verifier: &StepProgram,
    x: &BitString,
    oracle: &StochasticOracle,
    a: &Strategy,
    b: &Strategy,
    referee: &Referee,
    seed: u64,
) -> Result<DebateOutcome> {
    let witness_len = verifier
        .input_len()
        .checked_sub(x.len())
        .ok_or(Error::BadInputLength { expected: verifier.input_len(), got: x.len() })?;
    check_oracle(verifier, oracle)?;
    if mode == WitnessMode::Stoch {
        check_stochastic_program(verifier)?;
        stochastic_constants(verifier, &referee.params)?;
    }
    let mut d = Debate::new("witness", a, b, seed, referee.quiet);
    let ctx = Context { x, oracle, game: Game::Witness { program: verifier, witness_len, stochastic: mode == WitnessMode::Stoch } };
    let w = match d.ask(Party::A, &ctx, &Request::Witness { len: witness_len }, None) {
        Ok(Message::WitnessMsg(w)) if w.len() == witness_len => Ok(w),
        Ok(_) => Err(d.malformed(Party::A, None, "expected a witness of the right length")),
        Err(f) => Err(f),
    };
    let decision = match w {
        Err(f) => settle(Err(f)),
        Ok(w) => {
            let xw = x.concat(&w);
            match mode {
                WitnessMode::Det => settle(crossexam_phase(&mut d, verifier, &xw, oracle, referee)),
                WitnessMode::Stoch => settle(stochastic_phase(&mut d, verifier, &xw, oracle, referee)?),
            }
        }
    };
    Ok(d.finish(decision))
}

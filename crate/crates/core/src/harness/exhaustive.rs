//! Exact verification of the deterministic protocols over small machines.
//!
//! For every machine, deterministic oracle and input, honest play must give
//! the machine's output; when the output is 1 no B in the attack family may
//! bring the verdict to 0, and when it is 0 no A in the family may bring it
//! to 1. Every run is also checked against the verifier's budget.

use rayon::prelude::*;
use serde::Serialize;

use crate::bits::{ceil_log2, BitString};
use crate::error::{Error, Result};
use crate::machine::format::Model;
use crate::machine::stock::{stock_machine, two_state_machines, MACHINE_NAMES};
use crate::machine::{compile_vm_trace, vm_run_with, ConfigurationMachine, StepProgram};
use crate::oracle::StochasticOracle;
use crate::protocol::{crossexam_bit_budget, DebateOutcome, ProtocolParams};
use crate::rational::UnitRational;
use crate::strategy::{make_adversary, AdversarySpec, Strategy};

use super::arena::Arena;
use super::config::Protocol;
use super::estimate::trial_seed;
use super::families::{bisection_a_family, bisection_b_family, crossexam_a_family, crossexam_b_family};

pub const MAX_TIME: usize = 16;
pub const MAX_SPACE: usize = 8;
pub const MAX_INPUT: usize = 12;
/// Longest query for which every deterministic oracle is enumerated.
pub const MAX_QUERY: usize = 2;
/// Counterexamples kept in full; the rest are only counted.
pub const KEPT_COUNTEREXAMPLES: usize = 20;

/// The stock machines.
pub fn stock_catalogue() -> Vec<ConfigurationMachine> {
    MACHINE_NAMES.iter().map(|n| stock_machine(n).expect("listed names exist")).collect()
}

/// Every two-state machine on four cells with a two-bit input that halts
/// within four steps.
pub fn two_state_catalogue() -> Vec<ConfigurationMachine> {
    two_state_machines(4, 4, 2)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub machine: String,
    pub protocol: String,
    pub oracle: String,
    pub input: String,
    pub a: String,
    pub b: String,
    pub reason: String,
    pub seed: u64,
    /// Record line and full message log of the replayed debate.
    pub record: String,
    pub trace: String,
}

impl std::fmt::Display for Counterexample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} on {} x={} oracle={} A=[{}] B=[{}]: {}",
            self.protocol, self.machine, self.input, self.oracle, self.a, self.b, self.reason
        )
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ExhaustiveReport {
    pub machines: usize,
    /// (machine, oracle, input) triples.
    pub cases: usize,
    pub debates: u64,
    /// Cases whose control flow depends on the oracle, so no fixed trace exists
    /// for cross-examination.
    pub crossexam_skipped: usize,
    pub max_verifier_queries: u64,
    pub counterexample_count: usize,
    pub counterexamples: Vec<Counterexample>,
}

impl ExhaustiveReport {
    pub fn is_sound(&self) -> bool {
        self.counterexample_count == 0
    }

    /// Fails with the first counterexample, if any.
    pub fn ensure_sound(&self) -> Result<()> {
        match self.counterexamples.first() {
            None => Ok(()),
            Some(c) => Err(Error::CounterexampleFound { count: self.counterexample_count, first: c.to_string(), seed: c.seed }),
        }
    }

    fn merge(&mut self, other: ExhaustiveReport) {
        self.machines += other.machines;
        self.cases += other.cases;
        self.debates += other.debates;
        self.crossexam_skipped += other.crossexam_skipped;
        self.max_verifier_queries = self.max_verifier_queries.max(other.max_verifier_queries);
        self.counterexample_count += other.counterexample_count;
        for c in other.counterexamples {
            if self.counterexamples.len() < KEPT_COUNTEREXAMPLES {
                self.counterexamples.push(c);
            }
        }
    }
}

/// Every deterministic oracle on queries of length `len`.
pub fn deterministic_oracles(len: usize) -> Result<Vec<(String, StochasticOracle)>> {
    if len == 0 {
        return Ok(vec![("none".into(), StochasticOracle::constant(0, UnitRational::zero()))]);
    }
    if len > MAX_QUERY {
        return Err(Error::TooLargeToEnumerate { what: "query length", size: len, limit: MAX_QUERY });
    }
    let n = 1usize << len;
    BitString::all(n)
        .map(|answers| {
            let probs = answers.bits().iter().map(|&b| UnitRational::from_bit(b)).collect();
            Ok((format!("table:{answers}"), StochasticOracle::table(len, probs)?))
        })
        .collect()
}

struct Case<'a> {
    machine: &'a ConfigurationMachine,
    oracle_name: &'a str,
    x: &'a BitString,
    seed: u64,
    report: ExhaustiveReport,
    counter: u64,
}

impl Case<'_> {
    fn play(&mut self, arena: &Arena, a: &AdversarySpec, b: &AdversarySpec, expect: bool, budget: &dyn Fn(&DebateOutcome) -> Option<String>) {
        let (sa, sb) = (make_adversary(a), make_adversary(b));
        let seed = trial_seed(self.seed, self.counter);
        self.counter += 1;
        self.report.debates += 1;
        let reason = match arena.run(&sa, &sb, seed, false) {
            Ok(o) => {
                self.report.max_verifier_queries = self.report.max_verifier_queries.max(o.counters.verifier_oracle_queries);
                if o.verdict != expect {
                    Some(format!("verdict {} where {} was required", o.verdict as u8, expect as u8))
                } else {
                    budget(&o)
                }
            }
            Err(e) => Some(format!("error: {e}")),
        };
        if let Some(reason) = reason {
            self.fail(arena, &sa, &sb, seed, reason);
        }
    }

    fn fail(&mut self, arena: &Arena, a: &Strategy, b: &Strategy, seed: u64, reason: String) {
        self.report.counterexample_count += 1;
        if self.report.counterexamples.len() >= KEPT_COUNTEREXAMPLES {
            return;
        }
        let (record, trace) = match arena.run(a, b, seed, true) {
            Ok(o) => (o.to_record(), o.trace()),
            Err(e) => (String::new(), format!("error: {e}\n")),
        };
        self.report.counterexamples.push(Counterexample {
            machine: self.machine.name.clone(),
            protocol: arena.protocol().to_string(),
            oracle: self.oracle_name.to_string(),
            input: self.x.to_string(),
            a: a.name(),
            b: b.name(),
            reason,
            seed,
            record,
            trace,
        });
    }

    /// Honest play, then the attacks against the side the truth favours.
    fn attack(&mut self, arena: &Arena, truth: bool, a_family: &[AdversarySpec], b_family: &[AdversarySpec], budget: &dyn Fn(&DebateOutcome) -> Option<String>) {
        let honest = AdversarySpec::Honest;
        self.play(arena, &honest, &honest, truth, budget);
        if truth {
            for b in b_family {
                self.play(arena, &honest, b, true, budget);
            }
        } else {
            for a in a_family {
                self.play(arena, a, &honest, false, budget);
            }
        }
    }
}

fn check_bounds(m: &ConfigurationMachine) -> Result<()> {
    let limits = [("machine time", m.time(), MAX_TIME), ("machine space", m.space(), MAX_SPACE), ("input length", m.input_len(), MAX_INPUT)];
    for (what, size, limit) in limits {
        if size > limit {
            return Err(Error::TooLargeToEnumerate { what, size, limit });
        }
    }
    Ok(())
}

fn check_machine(m: &ConfigurationMachine, params: &ProtocolParams, seed: u64) -> Result<ExhaustiveReport> {
    check_bounds(m)?;
    let oracles = deterministic_oracles(m.query_len())?;
    let bisect_a = bisection_a_family(m);
    let bisect_b = bisection_b_family(m);
    let config_budget = (ceil_log2(m.time()) as u64 + 2) * m.config_bits() as u64;
    let bisect_budget = move |o: &DebateOutcome| {
        let c = &o.counters;
        if c.verifier_oracle_queries > 1 {
            Some(format!("{} oracle queries", c.verifier_oracle_queries))
        } else if c.verifier_bits_read > config_budget {
            Some(format!("read {} bits, budget {config_budget}", c.verifier_bits_read))
        } else {
            None
        }
    };
    let mut report = ExhaustiveReport { machines: 1, ..Default::default() };
    for (oi, (oracle_name, oracle)) in oracles.iter().enumerate() {
        for (xi, x) in BitString::all(m.input_len()).enumerate() {
            report.cases += 1;
            let mut case = Case {
                machine: m,
                oracle_name,
                x: &x,
                seed: crate::rng::StreamKey::new(seed).path(&[oi as u64, xi as u64]).digest(),
                report: ExhaustiveReport::default(),
                counter: 0,
            };
            let truth = vm_run_with(m, &x, |z| oracle.sample(z, &mut crate::rng::StreamKey::new(0).rng()))?.output;
            let arena = Arena::new(Protocol::Bisection, &Model::Machine(m.clone()), &x, oracle, params)?;
            case.attack(&arena, truth, &bisect_a, &bisect_b, &bisect_budget);

            match compile_vm_trace(m, &x) {
                Ok(p) => {
                    let arena = Arena::new(Protocol::CrossExam, &Model::Program(p.clone()), &x, oracle, params)?;
                    let budget = crossexam_budget(&p);
                    case.attack(&arena, truth, &crossexam_a_family(&p), &crossexam_b_family(&p), &budget);
                }
                Err(Error::OracleDependentControl) => report.crossexam_skipped += 1,
                Err(e) => return Err(e),
            }
            report.merge(case.report);
        }
    }
    Ok(report)
}

fn crossexam_budget(p: &StepProgram) -> impl Fn(&DebateOutcome) -> Option<String> {
    let max_reads = p.steps().iter().map(|s| s.reads().len()).max().unwrap_or(0);
    let budget = crossexam_bit_budget(p, max_reads);
    move |o: &DebateOutcome| {
        let c = &o.counters;
        if c.verifier_oracle_queries > 1 {
            Some(format!("{} oracle queries", c.verifier_oracle_queries))
        } else if c.verifier_bits_read > budget {
            Some(format!("read {} bits, budget {budget}", c.verifier_bits_read))
        } else {
            None
        }
    }
}

/// Runs both deterministic protocols over every machine, deterministic
/// oracle, input and attack. Counterexamples are reported, not raised; call
/// [`ExhaustiveReport::ensure_sound`] to turn them into an error.
pub fn exhaustive_soundness_check(machines: &[ConfigurationMachine], params: &ProtocolParams, seed: u64) -> Result<ExhaustiveReport> {
    let parts: Vec<Result<ExhaustiveReport>> = machines
        .par_iter()
        .enumerate()
        .map(|(i, m)| check_machine(m, params, crate::rng::StreamKey::new(seed).child(i as u64).digest()))
        .collect();
    let mut report = ExhaustiveReport::default();
    for p in parts {
        report.merge(p?);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_set_passes_vacuously() {
        let r = exhaustive_soundness_check(&[], &ProtocolParams::paper(), 1).unwrap();
        assert!(r.is_sound());
        assert_eq!(r.debates, 0);
    }

    #[test]
    fn oracle_enumeration() {
        assert_eq!(deterministic_oracles(0).unwrap().len(), 1);
        assert_eq!(deterministic_oracles(1).unwrap().len(), 4);
        assert_eq!(deterministic_oracles(2).unwrap().len(), 16);
        assert!(deterministic_oracles(3).is_err());
    }

    #[test]
    fn broken_verifier_is_caught() {
        let params = ProtocolParams { broken_verifier: true, ..ProtocolParams::paper() };
        let r = exhaustive_soundness_check(&[stock_machine("const0").unwrap()], &params, 1).unwrap();
        assert!(!r.is_sound());
        let c = &r.counterexamples[0];
        assert!(!c.trace.is_empty());
        assert!(matches!(r.ensure_sound(), Err(Error::CounterexampleFound { .. })));
    }
}

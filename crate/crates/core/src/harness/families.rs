//! Built-in finite attack families, one per protocol and side.

use num_rational::BigRational;

use crate::bits::{ceil_log2, BitString};
use crate::machine::{ConfigurationMachine, StepProgram};
use crate::protocol::Party;
use crate::strategy::{AdversarySpec, Shift};

/// Longest witness for which every witness is tried.
pub const WITNESS_FAMILY_LIMIT: usize = 10;

fn shift(n: i64, d: i64, per_d: bool) -> Shift {
    Shift { value: BigRational::new(n.into(), d.into()), per_d }
}

/// Every single-bit flip of the final claim and of each midpoint, plus
/// lies about the output and malformed messages.
pub fn bisection_a_family(m: &ConfigurationMachine) -> Vec<AdversarySpec> {
    let bits = m.config_bits();
    let rounds = ceil_log2(m.time()) as usize;
    let mut out: Vec<AdversarySpec> = (0..bits).map(|b| AdversarySpec::FinalClaimCorruptor { flips: vec![b] }).collect();
    for k in 0..rounds {
        out.extend((0..bits).map(|b| AdversarySpec::MidpointCorruptor { round: k, flips: vec![b] }));
    }
    out.push(AdversarySpec::LyingFinalBit { bit: true });
    out.push(AdversarySpec::LyingFinalBit { bit: false });
    out.push(AdversarySpec::Garbage);
    out
}

/// Every sequence of selectors and continues, plus malformed messages.
pub fn bisection_b_family(m: &ConfigurationMachine) -> Vec<AdversarySpec> {
    let rounds = ceil_log2(m.time()) as usize;
    let mut seqs: Vec<Vec<Option<bool>>> = vec![Vec::new()];
    for _ in 0..rounds {
        seqs = seqs
            .into_iter()
            .flat_map(|s| {
                [None, Some(true), Some(false)].into_iter().map(move |mv| {
                    let mut s = s.clone();
                    s.push(mv);
                    s
                })
            })
            .collect();
    }
    let mut out: Vec<_> = seqs.into_iter().map(|moves| AdversarySpec::SelectorSequence { moves }).collect();
    out.push(AdversarySpec::Garbage);
    out
}

/// Every single-bit flip of every cell, with and without recomputing the
/// later cells, plus lies about the output and malformed messages.
pub fn crossexam_a_family(p: &StepProgram) -> Vec<AdversarySpec> {
    let mut out = Vec::new();
    for cell in 0..p.len() {
        for bit in 0..p.width() {
            for propagate in [false, true] {
                out.push(AdversarySpec::TranscriptCorruptor { cell, mask: 1 << bit, propagate });
            }
        }
    }
    out.push(AdversarySpec::LyingFinalBit { bit: true });
    out.push(AdversarySpec::LyingFinalBit { bit: false });
    out.push(AdversarySpec::Garbage);
    out
}

/// Accusations at every step, with true and false read-sets.
pub fn crossexam_b_family(p: &StepProgram) -> Vec<AdversarySpec> {
    let mut out = Vec::new();
    for t in 0..p.len() {
        out.push(AdversarySpec::FrivolousAccuser { t, bad_reads: false });
        out.push(AdversarySpec::FrivolousAccuser { t, bad_reads: true });
    }
    out.push(AdversarySpec::Garbage);
    out
}

/// Output lies, announcement shifts of `±1/(2d)`, `±1/d`, `±1/4`, `±1/2` at
/// every round and at all rounds, an honest announcer that never aborts,
/// and constant shares.
pub fn stochastic_a_family(p: &StepProgram) -> Vec<AdversarySpec> {
    let mut out = vec![AdversarySpec::LyingFinalBit { bit: true }, AdversarySpec::LyingFinalBit { bit: false }];
    let deltas = [shift(1, 2, true), shift(1, 1, true), shift(1, 4, false), shift(1, 2, false)];
    let rounds: Vec<Option<usize>> = (0..p.len()).map(Some).chain([None]).collect();
    for delta in &deltas {
        for sign in [1, -1] {
            let delta = Shift { value: &delta.value * BigRational::from_integer(sign.into()), per_d: delta.per_d };
            for &round in &rounds {
                out.push(AdversarySpec::ShiftedAnnouncer { round, delta: delta.clone() });
            }
        }
    }
    out.push(AdversarySpec::NeverAbort);
    out.extend(share_biases().into_iter().map(|share| AdversarySpec::BiasedShare { share }));
    out
}

/// Aborts at every round, never aborting, and constant shares.
pub fn stochastic_b_family(p: &StepProgram) -> Vec<AdversarySpec> {
    let mut out: Vec<_> = (0..p.len()).map(|t| AdversarySpec::AlwaysAbort { round: Some(t) }).collect();
    out.push(AdversarySpec::NeverAbort);
    out.extend(share_biases().into_iter().map(|share| AdversarySpec::BiasedShare { share }));
    out
}

fn share_biases() -> Vec<BigRational> {
    [(0, 1), (1, 3), (1, 2), (99, 100)].iter().map(|&(n, d)| BigRational::new(n.into(), d.into())).collect()
}

/// Every witness of length `len` (up to [`WITNESS_FAMILY_LIMIT`]), each
/// followed by each member of `inner`.
pub fn witness_a_family(len: usize, inner: &[AdversarySpec]) -> Vec<AdversarySpec> {
    if len > WITNESS_FAMILY_LIMIT {
        return Vec::new();
    }
    let mut out = Vec::new();
    for w in BitString::all(len) {
        for i in inner {
            out.push(AdversarySpec::BadWitness { witness: w.clone(), inner: Box::new(i.clone()) });
        }
    }
    out.push(AdversarySpec::Garbage);
    out
}

/// The built-in family for a protocol, model and side.
pub fn default_family(
    protocol: super::Protocol,
    machine: Option<&ConfigurationMachine>,
    program: Option<&StepProgram>,
    witness_len: usize,
    side: Party,
) -> Vec<AdversarySpec> {
    use super::Protocol as P;
    match (protocol, side, machine, program) {
        (P::Bisection, Party::A, Some(m), _) => bisection_a_family(m),
        (P::Bisection, Party::B, Some(m), _) => bisection_b_family(m),
        (P::CrossExam, Party::A, _, Some(p)) => crossexam_a_family(p),
        (P::CrossExam, Party::B, _, Some(p)) => crossexam_b_family(p),
        (P::Stochastic, Party::A, _, Some(p)) => stochastic_a_family(p),
        (P::Stochastic, Party::B, _, Some(p)) => stochastic_b_family(p),
        (P::WitnessDet, Party::A, _, Some(p)) => {
            let mut inner = vec![AdversarySpec::Honest];
            inner.extend(crossexam_a_family(p));
            witness_a_family(witness_len, &inner)
        }
        (P::WitnessStoch, Party::A, _, Some(p)) => {
            let mut inner = vec![AdversarySpec::Honest];
            inner.extend(stochastic_a_family(p));
            witness_a_family(witness_len, &inner)
        }
        (P::WitnessDet, Party::B, _, Some(p)) => crossexam_b_family(p),
        (P::WitnessStoch, Party::B, _, Some(p)) => stochastic_b_family(p),
        _ => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::stock::{stock_machine, stock_program};

    #[test]
    fn family_sizes() {
        let m = stock_machine("parity3").unwrap();
        let rounds = ceil_log2(m.time()) as usize;
        assert_eq!(bisection_a_family(&m).len(), m.config_bits() * (rounds + 1) + 3);
        assert_eq!(bisection_b_family(&m).len(), 3usize.pow(rounds as u32) + 1);
        let p = stock_program("majority3").unwrap();
        assert_eq!(crossexam_a_family(&p).len(), p.len() * p.width() as usize * 2 + 3);
        assert_eq!(stochastic_b_family(&p).len(), p.len() + 5);
        assert_eq!(witness_a_family(2, &[AdversarySpec::Honest]).len(), 5);
        assert!(witness_a_family(WITNESS_FAMILY_LIMIT + 1, &[AdversarySpec::Honest]).is_empty());
    }
}

//! Properties of the referees and honest players over stock models.

use debate_core::harness::{estimate_pair, payoff_matrix, trial_seed, two_state_catalogue, Arena, Protocol};
use debate_core::machine::format::Model;
use debate_core::machine::stock::{stock_machine, stock_program, MACHINE_NAMES};
use debate_core::machine::{sp_run_with, vm_run_with};
use debate_core::protocol::{stochastic_constants, DebateOutcome, ProtocolParams, Speaker};
use debate_core::strategy::{make_adversary, AdversarySpec};
use debate_core::{BitString, StochasticOracle, UnitRational};
use proptest::prelude::*;

fn certain(len: usize, bit: bool) -> StochasticOracle {
    StochasticOracle::constant(len, UnitRational::from_bit(bit))
}

fn honest() -> debate_core::strategy::Strategy {
    make_adversary(&AdversarySpec::Honest)
}

fn bits(index: u64, len: usize) -> BitString {
    BitString::from_index(index % (1u64 << len), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn honest_bisection_matches_the_machine(which in 0usize..8336, xi: u64, answer: bool, seed: u64) {
        let machines = two_state_catalogue();
        let m = &machines[which % machines.len()];
        let x = bits(xi, m.input_len());
        let oracle = certain(m.query_len(), answer);
        let truth = vm_run_with(m, &x, |_| Ok(answer)).unwrap().output;
        let arena = Arena::new(Protocol::Bisection, &Model::Machine(m.clone()), &x, &oracle, &ProtocolParams::paper()).unwrap();
        let o = arena.run(&honest(), &honest(), seed, false).unwrap();
        prop_assert_eq!(o.verdict, truth);
        prop_assert!(o.forfeit.is_none());
        prop_assert!(o.counters.verifier_oracle_queries <= 1);
    }

    #[test]
    fn honest_crossexam_matches_the_program(name in prop::sample::select(vec!["relay", "xor_chain", "copy3", "single_query"]), xi: u64, answer: bool, seed: u64) {
        let p = stock_program(name).unwrap();
        let x = bits(xi, p.input_len());
        let oracle = certain(p.query_len(), answer);
        let (_, truth) = sp_run_with(&p, &x, |_| Ok(answer)).unwrap();
        let arena = Arena::new(Protocol::CrossExam, &Model::Program(p), &x, &oracle, &ProtocolParams::paper()).unwrap();
        let o = arena.run(&honest(), &honest(), seed, false).unwrap();
        prop_assert_eq!(o.verdict, truth);
    }

    #[test]
    fn replays_are_identical(seed: u64, xi: u64) {
        let p = stock_program("majority3").unwrap();
        let x = bits(xi, p.input_len());
        let oracle = StochasticOracle::constant(p.query_len(), UnitRational::ratio(3, 5));
        let arena = Arena::new(Protocol::Stochastic, &Model::Program(p), &x, &oracle, &ProtocolParams::scaled()).unwrap();
        let a = make_adversary(&AdversarySpec::BiasedShare { share: num_rational::BigRational::new(1.into(), 3.into()) });
        let first = arena.run(&a, &honest(), seed, true).unwrap();
        let second = arena.run(&a, &honest(), seed, true).unwrap();
        prop_assert_eq!(first.to_record(), second.to_record());
        prop_assert_eq!(first.trace(), second.trace());
        let parsed = DebateOutcome::from_record(&first.to_record()).unwrap();
        prop_assert_eq!(parsed.to_record(), first.to_record());
    }

    #[test]
    fn honest_b_claims_the_corrupted_step(name in prop::sample::select(vec!["relay", "xor_chain", "copy3", "majority3"]), cell: usize, bit: u32, xi: u64, seed: u64) {
        let p = stock_program(name).unwrap();
        let cell = cell % p.len();
        let mask = 1u64 << (bit % p.width());
        let x = bits(xi, p.input_len());
        let oracle = certain(p.query_len(), true);
        let arena = Arena::new(Protocol::CrossExam, &Model::Program(p), &x, &oracle, &ProtocolParams::paper()).unwrap();
        let a = make_adversary(&AdversarySpec::TranscriptCorruptor { cell, mask: mask as _, propagate: false });
        let o = arena.run(&a, &honest(), seed, true).unwrap();
        let claimed = o
            .log
            .iter()
            .filter(|e| e.speaker == Speaker::B)
            .find_map(|e| e.text.strip_prefix("claim t=")?.split_whitespace().next()?.parse::<usize>().ok());
        prop_assert_eq!(claimed, Some(cell), "{}", o.trace());
        prop_assert!(!o.verdict);
    }
}

#[test]
fn honest_stochastic_provers_stay_within_budget() {
    let p = stock_program("majority3").unwrap();
    let params = ProtocolParams::scaled();
    let (_, r, big_r) = stochastic_constants(&p, &params).unwrap();
    let oracle = StochasticOracle::constant(p.query_len(), UnitRational::ratio(2, 3));
    let rounds = p.len() as u64;
    for xi in 0..(1u64 << p.input_len()) {
        let x = bits(xi, p.input_len());
        let arena = Arena::new(Protocol::Stochastic, &Model::Program(p.clone()), &x, &oracle, &params).unwrap();
        for t in 0..20 {
            let o = arena.run(&honest(), &honest(), trial_seed(xi, t), false).unwrap();
            let c = &o.counters;
            assert!(c.prover_a_oracle_samples <= big_r * rounds, "A drew {}", c.prover_a_oracle_samples);
            assert!(c.prover_b_oracle_samples <= big_r * rounds, "B drew {}", c.prover_b_oracle_samples);
            assert!(c.verifier_oracle_queries <= r);
            assert!(c.prover_a_steps <= 2 * rounds && c.prover_b_steps <= 2 * rounds);
        }
    }
}

#[test]
fn estimates_replay_from_trial_seeds() {
    let p = stock_program("single_query").unwrap();
    let x = BitString::from_index(1, 1);
    let oracle = StochasticOracle::constant(p.query_len(), UnitRational::ratio(1, 2));
    let arena = Arena::new(Protocol::Stochastic, &Model::Program(p), &x, &oracle, &ProtocolParams::scaled()).unwrap();
    let e = estimate_pair(&arena, &AdversarySpec::Honest, &AdversarySpec::Honest, 30, 77);
    let replayed = (0..30).filter(|&i| arena.run(&honest(), &honest(), trial_seed(77, i), false).unwrap().verdict).count();
    assert_eq!(e.successes, replayed as u64);
    assert_eq!(e.trials, 30);
    for i in 0..6 {
        assert!(e.mean(i) <= e.counter_max[i] as f64);
    }
}

#[test]
fn payoffs_are_zero_sum() {
    let m = stock_machine("parity3").unwrap();
    let x = BitString::from_index(5, 3);
    let oracle = certain(0, false);
    let arena = Arena::new(Protocol::Bisection, &Model::Machine(m), &x, &oracle, &ProtocolParams::paper()).unwrap();
    let a = [AdversarySpec::Honest, AdversarySpec::LyingFinalBit { bit: true }, AdversarySpec::Garbage];
    let b = [AdversarySpec::Honest, AdversarySpec::Garbage];
    let pm = payoff_matrix(&arena, &a, &b, 3, 1);
    for i in 0..a.len() {
        for j in 0..b.len() {
            assert_eq!(pm.payoff_a(i, j) + pm.payoff_b(i, j), 1.0);
        }
    }
    // Honest B holds A to the machine's answer, so no A row can beat column 0.
    assert!((0..a.len()).all(|i| pm.payoff_a(i, 0) == 0.0));
}

#[test]
fn every_stock_machine_debates_honestly() {
    for name in MACHINE_NAMES {
        let m = stock_machine(name).unwrap();
        for x in BitString::all(m.input_len()) {
            for answer in [false, true] {
                let oracle = certain(m.query_len(), answer);
                let truth = vm_run_with(&m, &x, |_| Ok(answer)).unwrap().output;
                let arena = Arena::new(Protocol::Bisection, &Model::Machine(m.clone()), &x, &oracle, &ProtocolParams::paper()).unwrap();
                assert_eq!(arena.run(&honest(), &honest(), 0, false).unwrap().verdict, truth, "{name} x={x}");
            }
        }
    }
}

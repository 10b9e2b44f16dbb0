//! Text formats survive a write/parse round trip.

use debate_core::machine::format::{machine_to_text, parse_machine, parse_program, program_to_text};
use debate_core::machine::stock::{stock_machine, stock_program, MACHINE_NAMES, PROGRAM_NAMES};
use debate_core::protocol::DebateOutcome;
use debate_core::{BitString, StochasticOracle, UnitRational};
use proptest::prelude::*;

proptest! {
    #[test]
    fn bit_strings_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..40)) {
        let b = BitString::new(bits);
        prop_assert_eq!(b.to_string().parse::<BitString>().unwrap(), b);
    }

    #[test]
    fn oracle_tables_round_trip(len in 1usize..4, cells in proptest::collection::vec((0u64..=50, 1u64..=50), 8)) {
        let probs: Vec<_> = cells.iter().take(1 << len).map(|&(n, d)| UnitRational::ratio(n.min(d), d)).collect();
        let o = StochasticOracle::table(len, probs).unwrap();
        let back = StochasticOracle::parse(&o.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), o.to_text());
        prop_assert_eq!(back.entries().unwrap(), o.entries().unwrap());
    }

    #[test]
    fn constant_oracles_round_trip(len in 0usize..6, n in 0u64..=30, d in 1u64..=30) {
        let o = StochasticOracle::constant(len, UnitRational::ratio(n.min(d), d));
        prop_assert_eq!(StochasticOracle::parse(&o.to_text()).unwrap().to_text(), o.to_text());
    }
}

#[test]
fn stock_models_round_trip() {
    for name in MACHINE_NAMES {
        let text = machine_to_text(&stock_machine(name).unwrap());
        assert_eq!(machine_to_text(&parse_machine(&text).unwrap()), text, "{name}");
    }
    for name in PROGRAM_NAMES {
        let text = program_to_text(&stock_program(name).unwrap()).unwrap();
        assert_eq!(program_to_text(&parse_program(&text).unwrap()).unwrap(), text, "{name}");
    }
}

#[test]
fn malformed_records_are_rejected() {
    assert!(DebateOutcome::from_record("protocol=bisection verdict=2").is_err());
    assert!(DebateOutcome::from_record("").is_err());
}

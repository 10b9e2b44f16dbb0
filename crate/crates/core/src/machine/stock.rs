//! Built-in machines and programs, addressable by name.

use num_rational::BigRational;

use super::format::Model;
use super::program::{DetOp, QueryPart, Step, StepProgram};
use super::vm::{vm_run_with, ConfigurationMachine, Move, QueryConvention};
use crate::bits::{ceil_log2, BitString};
use crate::error::{Error, Result};

pub const MACHINE_NAMES: &[&str] =
    &["const1", "const0", "first_bit", "parity3", "counter10", "query_first_bit", "query_not", "query_then_not"];

pub const PROGRAM_NAMES: &[&str] = &["single_query", "relay", "majority3", "xor_chain", "copy3", "subset_sum"];

fn int(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

pub fn stock_machine(name: &str) -> Option<ConfigurationMachine> {
    use Move::*;
    let m = match name {
        "const1" | "const0" => {
            let bit = name == "const1";
            ConfigurationMachine::builder(2, 1, 1, 1, 1).on(0, false, 1, bit, Stay).on(0, true, 1, bit, Stay).build()
        }
        "first_bit" => ConfigurationMachine::builder(2, 1, 2, 1, 2)
            .on(0, false, 1, false, Stay)
            .on(0, true, 1, true, Stay)
            .build(),
        // State 2i+p scans position i with running parity p; the result lands at position 3.
        "parity3" => {
            let mut b = ConfigurationMachine::builder(9, 8, 4, 4, 3).output_pos(3);
            for i in 0..3 {
                for p in 0..2 {
                    let s = 2 * i + p;
                    for sym in [false, true] {
                        let np = p ^ sym as usize;
                        b = b.on(s, sym, 2 * (i + 1) + np, sym, Right);
                    }
                }
            }
            b.on(6, false, 8, false, Stay).on(6, true, 8, false, Stay).on(7, false, 8, true, Stay).on(7, true, 8, true, Stay).build()
        }
        // Ten states bounce between positions 0 and 1, inverting each symbol read;
        // position 0 is inverted five times.
        "counter10" => {
            let mut b = ConfigurationMachine::builder(11, 10, 2, 10, 1);
            for s in 0..10 {
                let mv = if s % 2 == 0 { Right } else { Left };
                b = b.on(s, false, s + 1, true, mv).on(s, true, s + 1, false, mv);
            }
            b.build()
        }
        "query_first_bit" => ConfigurationMachine::builder(2, 1, 1, 1, 1)
            .query(QueryConvention { state: 0, window_start: 0, window_len: 1, answer_pos: 0, return_state: 1 })
            .build(),
        "query_not" => ConfigurationMachine::builder(3, 2, 2, 2, 1)
            .output_pos(1)
            .query(QueryConvention { state: 1, window_start: 0, window_len: 1, answer_pos: 1, return_state: 2 })
            .on(0, false, 1, true, Stay)
            .on(0, true, 1, false, Stay)
            .build(),
        "query_then_not" => ConfigurationMachine::builder(4, 3, 2, 3, 1)
            .output_pos(1)
            .query(QueryConvention { state: 0, window_start: 0, window_len: 1, answer_pos: 1, return_state: 1 })
            .on(1, false, 2, false, Right)
            .on(1, true, 2, true, Right)
            .on(2, false, 3, true, Left)
            .on(2, true, 3, false, Left)
            .build(),
        _ => return None,
    };
    Some(m.expect("stock machines are well formed").named(name))
}

trait Named {
    fn named(self, name: &str) -> Self;
}

impl Named for ConfigurationMachine {
    fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }
}

pub fn stock_program(name: &str) -> Option<StepProgram> {
    let q0 = || Step::query(vec![QueryPart::Input(0)]);
    let p = match name {
        "single_query" => StepProgram::new(name, 1, 1, 1, vec![q0()]).map(|p| p.with_lipschitz(int(1))),
        "relay" => StepProgram::new(
            name,
            1,
            1,
            1,
            vec![Step::det(DetOp::Input(0)), Step::query(vec![QueryPart::Cell(0)]), Step::det(DetOp::Copy(1))],
        )
        .map(|p| p.with_lipschitz(int(1))),
        "majority3" => StepProgram::new(name, 1, 1, 1, vec![q0(), q0(), q0(), Step::det(DetOp::Maj(vec![0, 1, 2]))])
            .map(|p| p.with_lipschitz(BigRational::new(3.into(), 2.into()))),
        "xor_chain" => StepProgram::new(
            name,
            1,
            3,
            0,
            vec![
                Step::det(DetOp::Input(0)),
                Step::det(DetOp::Input(1)),
                Step::det(DetOp::Input(2)),
                Step::det(DetOp::Xor(vec![0, 1])),
                Step::det(DetOp::Xor(vec![3, 2])),
            ],
        )
        .map(|p| p.with_lipschitz(int(0))),
        "copy3" => StepProgram::new(
            name,
            1,
            1,
            0,
            vec![Step::det(DetOp::Input(0)), Step::det(DetOp::Copy(0)), Step::det(DetOp::Copy(1))],
        )
        .map(|p| p.with_lipschitz(int(0))),
        "subset_sum" => subset_sum_program(3, 3),
        _ => return None,
    };
    Some(p.expect("stock programs are well formed"))
}

pub fn stock_model(name: &str) -> Option<Model> {
    stock_machine(name).map(Model::Machine).or_else(|| stock_program(name).map(Model::Program))
}

/// Verifier for subset-sum with an approval query. The input is `count`
/// numbers of `bits` bits each, then the target (all big-endian), then a
/// `count`-bit selection mask. Bit cells add the selected numbers with ripple
/// carries, compare the sum with the target, and the final step asks the
/// oracle about the comparison bit.
pub fn subset_sum_program(count: usize, bits: usize) -> Result<StepProgram> {
    if count == 0 || bits == 0 {
        return Err(Error::InvalidParams("subset-sum needs at least one number of at least one bit".into()));
    }
    let acc_bits = bits + ceil_log2(count + 1) as usize;
    let x_len = (count + 1) * bits;
    let mut steps: Vec<Step> = Vec::new();
    let push = |steps: &mut Vec<Step>, s: Step| {
        steps.push(s);
        steps.len() - 1
    };
    let zero = push(&mut steps, Step::det(DetOp::Const(0)));
    let mask: Vec<usize> = (0..count).map(|i| push(&mut steps, Step::det(DetOp::Input(x_len + i)))).collect();
    // masked[i][j] is bit j (least significant first) of number i if selected.
    let mut masked = vec![vec![zero; acc_bits]; count];
    for (i, row) in masked.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate().take(bits) {
            let n = push(&mut steps, Step::det(DetOp::Input(i * bits + (bits - 1 - j))));
            *cell = push(&mut steps, Step::det(DetOp::And(vec![mask[i], n])));
        }
    }
    let mut acc = masked[0].clone();
    for row in &masked[1..] {
        let mut carry = zero;
        for j in 0..acc_bits {
            let (a, b) = (acc[j], row[j]);
            let sum = push(&mut steps, Step::det(DetOp::Xor(vec![a, b, carry])));
            if j + 1 < acc_bits {
                carry = push(&mut steps, Step::det(DetOp::Maj(vec![a, b, carry])));
            }
            acc[j] = sum;
        }
    }
    let mut eqs = Vec::with_capacity(acc_bits);
    for (j, &a) in acc.iter().enumerate() {
        let t = if j < bits { push(&mut steps, Step::det(DetOp::Input(count * bits + (bits - 1 - j)))) } else { zero };
        eqs.push(push(&mut steps, Step::det(DetOp::Eq(a, t))));
    }
    let all = push(&mut steps, Step::det(DetOp::And(eqs)));
    push(&mut steps, Step::query(vec![QueryPart::Cell(all)]));
    Ok(StepProgram::new(format!("subset_sum{count}x{bits}"), 1, x_len + count, 1, steps)?.with_lipschitz(int(1)))
}

/// Input for [`subset_sum_program`]: numbers followed by the target.
pub fn subset_sum_input(numbers: &[u64], target: u64, bits: usize) -> BitString {
    let mut x = BitString::default();
    for &n in numbers.iter().chain([&target]) {
        x.extend_from(&BitString::from_index(n, bits));
    }
    x
}

/// Every machine with working states 0 and 1, halt state 2, moves L/R and
/// the given bounds that halts within `time` steps on every input.
pub fn two_state_machines(space: usize, time: usize, input_len: usize) -> Vec<ConfigurationMachine> {
    let mut options = Vec::with_capacity(12);
    for next in 0..3 {
        for write in [false, true] {
            for mv in [Move::Left, Move::Right] {
                options.push((next, write, mv));
            }
        }
    }
    let mut out = Vec::new();
    for code in 0..options.len().pow(4) {
        let mut b = ConfigurationMachine::builder(3, 2, space, time, input_len);
        let mut c = code;
        for slot in 0..4 {
            let (next, write, mv) = options[c % options.len()];
            c /= options.len();
            b = b.on(slot / 2, slot % 2 == 1, next, write, mv);
        }
        let m = b.name(format!("two_state#{code}")).build().expect("enumerated machines are well formed");
        if BitString::all(input_len).all(|x| vm_run_with(&m, &x, |_| Ok(false)).is_ok()) {
            out.push(m);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::program::sp_run_with;

    fn run(name: &str, x: &str, oracle: impl Fn(&BitString) -> bool) -> bool {
        let m = stock_machine(name).unwrap();
        vm_run_with(&m, &x.parse().unwrap(), |z| Ok(oracle(z))).unwrap().output
    }

    #[test]
    fn stock_machines_compute_what_they_claim() {
        assert!(run("const1", "0", |_| false));
        assert!(!run("const0", "1", |_| false));
        assert!(!run("first_bit", "01", |_| false));
        assert!(run("first_bit", "10", |_| false));
        for x in BitString::all(3) {
            let parity = x.bits().iter().filter(|&&b| b).count() % 2 == 1;
            assert_eq!(run("parity3", &x.to_string(), |_| false), parity, "x = {x}");
        }
        assert!(run("counter10", "0", |_| false));
        assert!(!run("counter10", "1", |_| false));
        let id = |z: &BitString| z.get(0).unwrap();
        assert!(run("query_first_bit", "1", id));
        assert!(run("query_not", "0", id));
        assert!(!run("query_then_not", "1", id));
    }

    #[test]
    fn subset_sum_decides_by_brute_force() {
        let p = subset_sum_program(3, 3).unwrap();
        let numbers = [3, 5, 6];
        for target in 0..8u64 {
            let x = subset_sum_input(&numbers, target, 3);
            let mut any = false;
            for w in BitString::all(3) {
                let sum: u64 = numbers.iter().zip(w.bits()).filter(|(_, &b)| b).map(|(n, _)| n).sum();
                let (_, out) = sp_run_with(&p, &x.concat(&w), |z| Ok(z.get(0).unwrap())).unwrap();
                assert_eq!(out, sum == target, "target {target}, mask {w}");
                any |= out;
            }
            assert_eq!(any, [0, 3, 5, 6].contains(&target));
        }
    }

    #[test]
    fn enumeration_keeps_only_halting_machines() {
        let ms = two_state_machines(4, 4, 2);
        assert!(!ms.is_empty() && ms.len() < 20736);
        for name in PROGRAM_NAMES {
            assert!(stock_program(name).is_some());
        }
    }
}

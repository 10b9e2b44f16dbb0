//! Oracle tape machines with fixed-size, serializable configurations.
//!
//! Conventions:
//! - state 0 is the start state; the input is written at tape positions `0..n`,
//!   every other cell starts at 0 and the head starts at 0;
//! - moves that would leave `[0, S)` keep the head at the boundary;
//! - once the halt state is reached the machine idles (no-op steps) until the
//!   step counter reaches `T`, so every run has exactly `T` steps;
//! - the output is the tape symbol at `output_pos` in the final configuration;
//! - in the query state the machine asks the oracle about the tape window,
//!   writes the answer at `answer_pos` and moves to `return_state`.

use serde::{Deserialize, Serialize};

use crate::bits::{ceil_log2, BitString};
use crate::error::{Error, Result};

pub type StateId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    Left,
    Right,
    Stay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transition {
    pub next: StateId,
    pub write: bool,
    pub step: Move,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryConvention {
    pub state: StateId,
    pub window_start: usize,
    pub window_len: usize,
    pub answer_pos: usize,
    pub return_state: StateId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigurationMachine {
    pub name: String,
    num_states: usize,
    halt: StateId,
    space: usize,
    time: usize,
    input_len: usize,
    output_pos: usize,
    query: Option<QueryConvention>,
    /// Indexed by `2 * state + symbol`.
    transitions: Vec<Option<Transition>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    pub state: StateId,
    pub head: usize,
    pub tape: Vec<bool>,
    pub step: usize,
}

pub struct MachineBuilder {
    m: ConfigurationMachine,
}

impl MachineBuilder {
    pub fn query(mut self, q: QueryConvention) -> Self {
        self.m.query = Some(q);
        self
    }

    pub fn output_pos(mut self, pos: usize) -> Self {
        self.m.output_pos = pos;
        self
    }

    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.m.name = name.into();
        self
    }

    pub fn on(mut self, state: StateId, symbol: bool, next: StateId, write: bool, step: Move) -> Self {
        let idx = 2 * state + symbol as usize;
        if idx < self.m.transitions.len() {
            self.m.transitions[idx] = Some(Transition { next, write, step });
        }
        self
    }

    pub fn build(self) -> Result<ConfigurationMachine> {
        self.m.validate()?;
        Ok(self.m)
    }
}

impl ConfigurationMachine {
    /// Starts a machine with `num_states` states (0 = start), halt state `halt`,
    /// space `S`, time `T` and input length `n`.
    pub fn builder(num_states: usize, halt: StateId, space: usize, time: usize, input_len: usize) -> MachineBuilder {
        MachineBuilder {
            m: ConfigurationMachine {
                name: String::new(),
                num_states,
                halt,
                space,
                time,
                input_len,
                output_pos: 0,
                query: None,
                transitions: vec![None; 2 * num_states],
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidMachine(m));
        if self.num_states == 0 || self.halt >= self.num_states {
            return bad(format!("halt state {} outside 0..{}", self.halt, self.num_states));
        }
        if self.space == 0 || self.time == 0 {
            return bad("space and time bounds must be positive".into());
        }
        if self.input_len > self.space {
            return bad(format!("input length {} exceeds space {}", self.input_len, self.space));
        }
        if self.output_pos >= self.space {
            return bad(format!("output position {} outside the tape", self.output_pos));
        }
        if let Some(q) = &self.query {
            if q.state >= self.num_states || q.return_state >= self.num_states || q.state == self.halt {
                return bad("query convention names an invalid state".into());
            }
            if q.window_start + q.window_len > self.space || q.answer_pos >= self.space {
                return bad("query window or answer cell outside the tape".into());
            }
        }
        for state in 0..self.num_states {
            if state == self.halt || self.is_query_state(state) {
                continue;
            }
            for symbol in [false, true] {
                match self.transition(state, symbol) {
                    None => return bad(format!("no transition for state {state}, symbol {}", symbol as u8)),
                    Some(t) if t.next >= self.num_states => {
                        return bad(format!("transition from state {state} targets {}", t.next))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }
    pub fn halt_state(&self) -> StateId {
        self.halt
    }
    pub fn space(&self) -> usize {
        self.space
    }
    pub fn time(&self) -> usize {
        self.time
    }
    pub fn input_len(&self) -> usize {
        self.input_len
    }
    pub fn output_pos(&self) -> usize {
        self.output_pos
    }
    pub fn query_convention(&self) -> Option<&QueryConvention> {
        self.query.as_ref()
    }

    /// Oracle query length `l` (0 for machines without queries).
    pub fn query_len(&self) -> usize {
        self.query.map_or(0, |q| q.window_len)
    }

    pub fn is_query_state(&self, state: StateId) -> bool {
        self.query.is_some_and(|q| q.state == state)
    }

    pub fn transition(&self, state: StateId, symbol: bool) -> Option<Transition> {
        self.transitions.get(2 * state + symbol as usize).copied().flatten()
    }

    pub fn state_bits(&self) -> u32 {
        ceil_log2(self.num_states)
    }

    pub fn head_bits(&self) -> u32 {
        ceil_log2(self.space)
    }

    fn counter_bits(&self) -> u32 {
        ceil_log2(self.time + 1)
    }

    /// Size in bits of every serialized configuration.
    pub fn config_bits(&self) -> usize {
        (self.state_bits() + self.head_bits() + self.counter_bits()) as usize + self.space
    }

    pub fn initial(&self, x: &BitString) -> Result<Configuration> {
        if x.len() != self.input_len {
            return Err(Error::BadInputLength { expected: self.input_len, got: x.len() });
        }
        let mut tape = vec![false; self.space];
        tape[..x.len()].copy_from_slice(x.bits());
        Ok(Configuration { state: 0, head: 0, tape, step: 0 })
    }

    pub fn is_valid(&self, c: &Configuration) -> bool {
        c.state < self.num_states && c.head < self.space && c.tape.len() == self.space && c.step <= self.time
    }

    /// Final configurations the machine can accept with: halted, counter `T`, output 1.
    pub fn is_accepting(&self, c: &Configuration) -> bool {
        self.is_valid(c) && c.state == self.halt && c.step == self.time && c.tape[self.output_pos]
    }

    pub fn pending_query(&self, c: &Configuration) -> Option<BitString> {
        let q = self.query?;
        if c.state != q.state {
            return None;
        }
        Some(BitString::new(c.tape[q.window_start..q.window_start + q.window_len].to_vec()))
    }

    pub(crate) fn apply_move(&self, head: usize, step: Move) -> usize {
        match step {
            Move::Left => head.saturating_sub(1),
            Move::Right => (head + 1).min(self.space - 1),
            Move::Stay => head,
        }
    }

    /// Layout: state, head, tape, step counter; each field big-endian.
    pub fn serialize(&self, c: &Configuration) -> BitString {
        let mut out = BitString::from_index(c.state as u64, self.state_bits() as usize);
        out.extend_from(&BitString::from_index(c.head as u64, self.head_bits() as usize));
        for i in 0..self.space {
            out.push(c.tape.get(i).copied().unwrap_or(false));
        }
        out.extend_from(&BitString::from_index(c.step as u64, self.counter_bits() as usize));
        out
    }

    /// Decodes any bit string of length [`config_bits`](Self::config_bits);
    /// the result may be invalid (e.g. a state id out of range).
    pub fn deserialize(&self, bits: &BitString) -> Result<Configuration> {
        if bits.len() != self.config_bits() {
            return Err(Error::InvalidConfiguration(format!(
                "serialization has {} bits, expected {}",
                bits.len(),
                self.config_bits()
            )));
        }
        let b = bits.bits();
        let sb = self.state_bits() as usize;
        let hb = self.head_bits() as usize;
        let field = |from: usize, len: usize| BitString::new(b[from..from + len].to_vec()).to_index() as usize;
        Ok(Configuration {
            state: field(0, sb),
            head: field(sb, hb),
            tape: b[sb + hb..sb + hb + self.space].to_vec(),
            step: field(sb + hb + self.space, self.counter_bits() as usize),
        })
    }
}

/// One step of the machine.
pub fn vm_step(m: &ConfigurationMachine, c: &Configuration, oracle_bit: Option<bool>) -> Result<Configuration> {
    if !m.is_valid(c) {
        return Err(Error::InvalidConfiguration(format!("{c:?} is not a configuration of this machine")));
    }
    if c.step >= m.time {
        return Err(Error::InvalidConfiguration(format!("step counter {} is final", c.step)));
    }
    let mut next = c.clone();
    next.step += 1;
    if c.state == m.halt {
        if oracle_bit.is_some() {
            return Err(Error::UnexpectedOracleBit);
        }
        return Ok(next);
    }
    if let Some(q) = m.query.filter(|q| q.state == c.state) {
        let bit = oracle_bit.ok_or(Error::MissingOracleBit)?;
        next.tape[q.answer_pos] = bit;
        next.state = q.return_state;
        return Ok(next);
    }
    if oracle_bit.is_some() {
        return Err(Error::UnexpectedOracleBit);
    }
    let t = m
        .transition(c.state, c.tape[c.head])
        .ok_or_else(|| Error::InvalidConfiguration(format!("no transition from state {}", c.state)))?;
    next.tape[c.head] = t.write;
    next.state = t.next;
    next.head = m.apply_move(c.head, t.step);
    Ok(next)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VmRun {
    pub output: bool,
    /// All `T + 1` configurations, initial first.
    pub configs: Vec<Configuration>,
}

impl VmRun {
    pub fn final_config(&self) -> &Configuration {
        self.configs.last().expect("a run has at least the initial configuration")
    }
}

/// Runs `m` on `x`, asking `answer` for every oracle query.
pub fn vm_run_with<F>(m: &ConfigurationMachine, x: &BitString, mut answer: F) -> Result<VmRun>
where
    F: FnMut(&BitString) -> Result<bool>,
{
    let mut configs = vec![m.initial(x)?];
    for _ in 0..m.time {
        let c = configs.last().unwrap();
        let bit = match m.pending_query(c) {
            Some(z) => Some(answer(&z)?),
            None => None,
        };
        let next = vm_step(m, c, bit)?;
        configs.push(next);
    }
    let last = configs.last().unwrap();
    if last.state != m.halt {
        return Err(Error::StepBudgetExceeded { limit: m.time });
    }
    Ok(VmRun { output: last.tape[m.output_pos], configs })
}

/// Runs `m` on `x` against a sampled oracle.
pub fn vm_run<R: rand::Rng + ?Sized>(
    m: &ConfigurationMachine,
    x: &BitString,
    oracle: &crate::oracle::StochasticOracle,
    rng: &mut R,
) -> Result<VmRun> {
    vm_run_with(m, x, |z| oracle.sample(z, rng))
}

/// Runs `from` forward `steps` steps, querying `answer` when needed.
pub fn vm_advance<F>(m: &ConfigurationMachine, from: &Configuration, steps: usize, mut answer: F) -> Result<Configuration>
where
    F: FnMut(&BitString) -> Result<bool>,
{
    let mut c = from.clone();
    for _ in 0..steps {
        let bit = match m.pending_query(&c) {
            Some(z) => Some(answer(&z)?),
            None => None,
        };
        c = vm_step(m, &c, bit)?;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn writes_one() -> ConfigurationMachine {
        ConfigurationMachine::builder(2, 1, 1, 1, 0)
            .on(0, false, 1, true, Move::Stay)
            .on(0, true, 1, true, Move::Stay)
            .build()
            .unwrap()
    }

    /// States: 0 start, 1 query, 2 halt. Step 1 moves right and enters the
    /// query state; step 2 asks about tape[0..1] and writes the answer at 0.
    fn query_machine() -> ConfigurationMachine {
        ConfigurationMachine::builder(3, 2, 2, 3, 1)
            .query(QueryConvention { state: 1, window_start: 0, window_len: 1, answer_pos: 0, return_state: 2 })
            .on(0, false, 1, false, Move::Right)
            .on(0, true, 1, true, Move::Right)
            .build()
            .unwrap()
    }

    #[test]
    fn single_forced_transition() {
        let m = writes_one();
        let c0 = m.initial(&BitString::default()).unwrap();
        let c1 = vm_step(&m, &c0, None).unwrap();
        assert_eq!(c1.tape, vec![true]);
        assert_eq!(c1.state, 1);
        assert_eq!(c1.step, 1);
    }

    #[test]
    fn final_configuration_has_no_successor() {
        let m = writes_one();
        let c1 = vm_step(&m, &m.initial(&BitString::default()).unwrap(), None).unwrap();
        assert!(matches!(vm_step(&m, &c1, None), Err(Error::InvalidConfiguration(_))));
    }

    #[test]
    fn query_step_writes_answer() {
        // Hand enumeration: (0, x0=1) -> state 1, head 1, tape [1, 0];
        // (1, query "1", answer 1) -> state 2, tape[0] = 1.
        let m = query_machine();
        let x: BitString = "1".parse().unwrap();
        let c0 = m.initial(&x).unwrap();
        let c1 = vm_step(&m, &c0, None).unwrap();
        assert_eq!((c1.state, c1.head, c1.tape.clone()), (1, 1, vec![true, false]));
        assert_eq!(m.pending_query(&c1).unwrap().to_string(), "1");
        assert_eq!(vm_step(&m, &c1, None), Err(Error::MissingOracleBit));
        let c2 = vm_step(&m, &c1, Some(true)).unwrap();
        assert_eq!((c2.state, c2.tape[0]), (2, true));
        let c2 = vm_step(&m, &c1, Some(false)).unwrap();
        assert_eq!((c2.state, c2.tape[0]), (2, false));
        assert_eq!(vm_step(&m, &c0, Some(true)), Err(Error::UnexpectedOracleBit));
        // Padding step after halting.
        let c3 = vm_step(&m, &c2, None).unwrap();
        assert_eq!((c3.state, c3.step, c3.tape.clone()), (2, 3, c2.tape.clone()));
    }

    #[test]
    fn run_reports_budget_overrun() {
        let looping = ConfigurationMachine::builder(2, 1, 2, 3, 0)
            .on(0, false, 0, false, Move::Right)
            .on(0, true, 0, true, Move::Left)
            .build()
            .unwrap();
        let r = vm_run_with(&looping, &BitString::default(), |_| Ok(false));
        assert_eq!(r, Err(Error::StepBudgetExceeded { limit: 3 }));
    }

    #[test]
    fn head_is_clamped() {
        let m = ConfigurationMachine::builder(2, 1, 2, 2, 0)
            .on(0, false, 0, true, Move::Left)
            .on(0, true, 1, true, Move::Right)
            .build()
            .unwrap();
        let run = vm_run_with(&m, &BitString::default(), |_| Ok(false)).unwrap();
        assert!(run.configs.iter().all(|c| c.head < 2));
        assert!(run.output);
    }

    #[test]
    fn rejects_incomplete_tables() {
        let r = ConfigurationMachine::builder(2, 1, 1, 1, 0).on(0, false, 1, true, Move::Stay).build();
        assert!(matches!(r, Err(Error::InvalidMachine(_))));
    }

    proptest! {
        #[test]
        fn configuration_round_trip(state in 0usize..3, head in 0usize..2, tape in proptest::collection::vec(any::<bool>(), 2), step in 0usize..=3) {
            let m = query_machine();
            let c = Configuration { state, head, tape, step };
            let bits = m.serialize(&c);
            prop_assert_eq!(bits.len(), m.config_bits());
            prop_assert_eq!(m.deserialize(&bits).unwrap(), c);
        }
    }
}

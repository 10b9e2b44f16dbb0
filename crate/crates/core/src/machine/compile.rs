//! Compiles one run of a [`ConfigurationMachine`] into a locally checkable
//! [`StepProgram`].
//!
//! Each non-query machine step becomes one cell with the layout
//! (least significant first):
//!
//! | bits | field |
//! |------|-------|
//! | 0 | tape symbol at the output position after the step |
//! | 1 | symbol written by the step |
//! | `2..2+h` | head position after the step |
//! | `2+h..` | state after the step |
//!
//! Query steps become oracle cells holding the answer bit. A step's read-set
//! is the cell that last recorded the state, the cell that last recorded the
//! head, the last writer of the symbol under the head, and the last writer
//! of the output position; tape positions never written come from the input.

use std::sync::Arc;

use super::program::{Cell, DetOp, QueryPart, Readings, Step, StepProgram};
use super::vm::{vm_step, Configuration, ConfigurationMachine, StateId};
use crate::bits::BitString;
use crate::error::{Error, Result};

/// Upper bound on oracle queries for the answer-independence check.
pub const MAX_COMPILE_QUERIES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Fixed(usize),
    Cell(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolSource {
    Fixed(bool),
    Input(usize),
    /// Written-symbol field of a machine-step cell.
    StepCell(usize),
    /// An oracle answer cell.
    AnswerCell(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellLayout {
    head_bits: u32,
    state_bits: u32,
}

impl CellLayout {
    pub fn for_machine(m: &ConfigurationMachine) -> Self {
        Self { head_bits: m.head_bits(), state_bits: m.state_bits() }
    }

    pub fn width(&self) -> u32 {
        2 + self.head_bits + self.state_bits
    }

    pub fn encode(&self, output: bool, written: bool, head: usize, state: StateId) -> Cell {
        output as Cell | (written as Cell) << 1 | (head as Cell) << 2 | (state as Cell) << (2 + self.head_bits)
    }

    pub fn head(&self, cell: Cell) -> usize {
        ((cell >> 2) & ((1 << self.head_bits) - 1)) as usize
    }

    pub fn state(&self, cell: Cell) -> StateId {
        ((cell >> (2 + self.head_bits)) & ((1 << self.state_bits) - 1)) as StateId
    }
}

/// The local rule recomputing one machine step from its read-set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VmStepRule {
    machine: Arc<ConfigurationMachine>,
    layout: CellLayout,
    state: Source,
    head: Source,
    symbol: SymbolSource,
    output: SymbolSource,
}

impl VmStepRule {
    pub fn reads(&self) -> Vec<usize> {
        let mut v = Vec::new();
        for s in [self.state, self.head] {
            if let Source::Cell(c) = s {
                v.push(c);
            }
        }
        for s in [self.symbol, self.output] {
            match s {
                SymbolSource::StepCell(c) | SymbolSource::AnswerCell(c) => v.push(c),
                _ => {}
            }
        }
        v
    }

    fn symbol_at(&self, s: SymbolSource, x: &BitString, r: &Readings<'_>) -> bool {
        match s {
            SymbolSource::Fixed(b) => b,
            SymbolSource::Input(i) => x.get(i).unwrap_or(false),
            SymbolSource::StepCell(c) => (r.get(c) >> 1) & 1 == 1,
            SymbolSource::AnswerCell(c) => r.get(c) & 1 == 1,
        }
    }

    pub(crate) fn eval(&self, x: &BitString, r: &Readings<'_>, t: usize) -> Result<Cell> {
        let m = &self.machine;
        let state = match self.state {
            Source::Fixed(q) => q,
            Source::Cell(c) => self.layout.state(r.get(c)),
        };
        let head = match self.head {
            Source::Fixed(h) => h,
            Source::Cell(c) => self.layout.head(r.get(c)),
        };
        if state >= m.num_states() || head >= m.space() || m.is_query_state(state) {
            return Err(Error::InvalidCellEncoding { cell: t });
        }
        let symbol = self.symbol_at(self.symbol, x, r);
        let (next, write, new_head) = if state == m.halt_state() {
            (state, symbol, head)
        } else {
            let tr = m.transition(state, symbol).ok_or(Error::InvalidCellEncoding { cell: t })?;
            (tr.next, tr.write, m.apply_move(head, tr.step))
        };
        let out = if head == m.output_pos() { write } else { self.symbol_at(self.output, x, r) };
        Ok(self.layout.encode(out, write, new_head, next))
    }
}

struct Traced {
    steps: Vec<Step>,
    queries: usize,
}

fn trace(m: &Arc<ConfigurationMachine>, x: &BitString, answers: &[bool]) -> Result<Traced> {
    let layout = CellLayout::for_machine(m);
    let n = m.input_len();
    let mut c: Configuration = m.initial(x)?;
    let mut last_writer: Vec<Option<SymbolSource>> = vec![None; m.space()];
    let mut last_step_cell: Option<usize> = None;
    let mut prev_query = false;
    let mut steps = Vec::with_capacity(m.time());
    let mut queries = 0;
    let source = |lw: &[Option<SymbolSource>], pos: usize| {
        lw[pos].unwrap_or(if pos < n { SymbolSource::Input(pos) } else { SymbolSource::Fixed(false) })
    };
    for t in 0..m.time() {
        if let Some(q) = m.query_convention().copied().filter(|q| q.state == c.state) {
            let parts = (q.window_start..q.window_start + q.window_len)
                .map(|pos| match source(&last_writer, pos) {
                    SymbolSource::Fixed(b) => QueryPart::Const(b),
                    SymbolSource::Input(i) => QueryPart::Input(i),
                    SymbolSource::StepCell(j) => QueryPart::CellBit(j, 1),
                    SymbolSource::AnswerCell(j) => QueryPart::CellBit(j, 0),
                })
                .collect();
            steps.push(Step::query(parts));
            let bit = answers.get(queries).copied().unwrap_or(false);
            queries += 1;
            c = vm_step(m, &c, Some(bit))?;
            last_writer[q.answer_pos] = Some(SymbolSource::AnswerCell(t));
            prev_query = true;
            continue;
        }
        let state = if t == 0 {
            Source::Fixed(0)
        } else if prev_query {
            Source::Fixed(m.query_convention().map_or(0, |q| q.return_state))
        } else {
            Source::Cell(t - 1)
        };
        let head = last_step_cell.map_or(Source::Fixed(0), Source::Cell);
        let output = if c.head == m.output_pos() {
            SymbolSource::Fixed(false)
        } else {
            source(&last_writer, m.output_pos())
        };
        let rule = VmStepRule {
            machine: Arc::clone(m),
            layout,
            state,
            head,
            symbol: source(&last_writer, c.head),
            output,
        };
        steps.push(Step::det(DetOp::Vm(Arc::new(rule))));
        last_writer[c.head] = Some(SymbolSource::StepCell(t));
        c = vm_step(m, &c, None)?;
        last_step_cell = Some(t);
        prev_query = false;
    }
    if c.state != m.halt_state() {
        return Err(Error::StepBudgetExceeded { limit: m.time() });
    }
    if steps.last().is_some_and(Step::is_query) && m.query_convention().is_some_and(|q| q.answer_pos != m.output_pos()) {
        return Err(Error::InvalidMachine(
            "the final step is an oracle query whose answer is not written at the output position".into(),
        ));
    }
    Ok(Traced { steps, queries })
}

/// Compiles the run of `m` on `x` into a step program whose output equals the
/// machine's output under the same oracle answers.
pub fn compile_vm_trace(m: &ConfigurationMachine, x: &BitString) -> Result<StepProgram> {
    let m = Arc::new(m.clone());
    let base = trace(&m, x, &[])?;
    if base.queries > MAX_COMPILE_QUERIES {
        return Err(Error::TooLargeToEnumerate {
            what: "oracle queries in compiled run",
            size: base.queries,
            limit: MAX_COMPILE_QUERIES,
        });
    }
    for v in 1..(1u64 << base.queries) {
        let answers = BitString::from_index(v, base.queries);
        let alt = trace(&m, x, answers.bits())?;
        if alt.queries != base.queries || alt.steps != base.steps {
            return Err(Error::OracleDependentControl);
        }
    }
    let layout = CellLayout::for_machine(&m);
    StepProgram::new(format!("{}@{}", m.name, x), layout.width(), m.input_len(), m.query_len(), base.steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::program::sp_run_with;
    use crate::machine::vm::{vm_run_with, Move, QueryConvention};

    fn constant_one() -> ConfigurationMachine {
        ConfigurationMachine::builder(2, 1, 1, 1, 0)
            .on(0, false, 1, true, Move::Stay)
            .on(0, true, 1, true, Move::Stay)
            .build()
            .unwrap()
    }

    #[test]
    fn constant_machine_compiles_to_one_step() {
        let p = compile_vm_trace(&constant_one(), &BitString::default()).unwrap();
        assert_eq!(p.len(), 1);
        let (_, out) = sp_run_with(&p, &BitString::default(), |_| unreachable!()).unwrap();
        assert!(out);
    }

    #[test]
    fn copy_machine_matches_run() {
        // Reads x0 at position 0, writes it at position 1, then copies it back to 0.
        let m = ConfigurationMachine::builder(3, 2, 2, 3, 1)
            .on(0, false, 1, false, Move::Right)
            .on(0, true, 1, true, Move::Right)
            .on(1, false, 2, false, Move::Left)
            .on(1, true, 2, true, Move::Left)
            .build()
            .unwrap();
        for bit in ["0", "1"] {
            let x: BitString = bit.parse().unwrap();
            let p = compile_vm_trace(&m, &x).unwrap();
            let run = vm_run_with(&m, &x, |_| unreachable!()).unwrap();
            let (_, out) = sp_run_with(&p, &x, |_| unreachable!()).unwrap();
            assert_eq!(out, run.output);
            assert_eq!(p.len(), m.time());
        }
    }

    #[test]
    fn query_answers_flow_into_output() {
        let m = ConfigurationMachine::builder(3, 2, 2, 3, 1)
            .query(QueryConvention { state: 1, window_start: 0, window_len: 1, answer_pos: 0, return_state: 2 })
            .on(0, false, 1, false, Move::Right)
            .on(0, true, 1, true, Move::Right)
            .build()
            .unwrap();
        let x: BitString = "1".parse().unwrap();
        let p = compile_vm_trace(&m, &x).unwrap();
        assert_eq!(p.query_steps(), 1);
        for ans in [false, true] {
            let run = vm_run_with(&m, &x, |_| Ok(ans)).unwrap();
            let (_, out) = sp_run_with(&p, &x, |_| Ok(ans)).unwrap();
            assert_eq!(out, run.output);
            assert_eq!(out, ans);
        }
    }

    #[test]
    fn oracle_dependent_head_movement_is_rejected() {
        // Query first; state 1 then moves right only if the answer was 1, so the
        // cell read by the final step depends on the answer.
        let m = ConfigurationMachine::builder(4, 3, 2, 3, 1)
            .query(QueryConvention { state: 0, window_start: 0, window_len: 1, answer_pos: 0, return_state: 1 })
            .on(1, false, 2, false, Move::Stay)
            .on(1, true, 2, true, Move::Right)
            .on(2, false, 3, true, Move::Stay)
            .on(2, true, 3, true, Move::Stay)
            .build()
            .unwrap();
        let x: BitString = "0".parse().unwrap();
        assert_eq!(compile_vm_trace(&m, &x), Err(Error::OracleDependentControl));
    }
}

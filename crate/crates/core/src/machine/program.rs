//! Straight-line step programs: every transcript cell is computed either by a
//! deterministic function of earlier cells (and the public input) or by one
//! oracle query whose string is assembled from earlier cells.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;

use super::compile::VmStepRule;
use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::oracle::StochasticOracle;

pub type Cell = u64;

/// One piece of an oracle query string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueryPart {
    /// All `w` bits of a cell, most significant first.
    Cell(usize),
    /// A single bit of a cell (bit 0 is least significant).
    CellBit(usize, u8),
    /// An input bit.
    Input(usize),
    Const(bool),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DetOp {
    Const(Cell),
    Input(usize),
    /// `len` input bits starting at `start`, read as a big-endian integer.
    InputWord { start: usize, len: usize },
    Copy(usize),
    Not(usize),
    And(Vec<usize>),
    Or(Vec<usize>),
    Xor(Vec<usize>),
    /// Bitwise majority of an odd number of cells.
    Maj(Vec<usize>),
    /// Wrapping sum modulo `2^w`.
    Add(Vec<usize>),
    Eq(usize, usize),
    /// `if cells[f] & 1 { a } else { b }`.
    Select(usize, usize, usize),
    Vm(Arc<VmStepRule>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepKind {
    Det(DetOp),
    Query(Vec<QueryPart>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    kind: StepKind,
    reads: Vec<usize>,
}

impl Step {
    pub fn det(op: DetOp) -> Self {
        let reads = match &op {
            DetOp::Const(_) | DetOp::Input(_) | DetOp::InputWord { .. } => vec![],
            DetOp::Copy(a) | DetOp::Not(a) => vec![*a],
            DetOp::And(v) | DetOp::Or(v) | DetOp::Xor(v) | DetOp::Maj(v) | DetOp::Add(v) => v.clone(),
            DetOp::Eq(a, b) => vec![*a, *b],
            DetOp::Select(f, a, b) => vec![*f, *a, *b],
            DetOp::Vm(rule) => rule.reads(),
        };
        Self::with_reads(StepKind::Det(op), reads)
    }

    pub fn query(parts: Vec<QueryPart>) -> Self {
        let reads = parts
            .iter()
            .filter_map(|p| match p {
                QueryPart::Cell(c) | QueryPart::CellBit(c, _) => Some(*c),
                _ => None,
            })
            .collect();
        Self::with_reads(StepKind::Query(parts), reads)
    }

    fn with_reads(kind: StepKind, reads: Vec<usize>) -> Self {
        let set: BTreeSet<usize> = reads.into_iter().collect();
        Self { kind, reads: set.into_iter().collect() }
    }

    pub fn kind(&self) -> &StepKind {
        &self.kind
    }

    /// The relevant coordinates `I(t)`, sorted and deduplicated.
    pub fn reads(&self) -> &[usize] {
        &self.reads
    }

    pub fn is_query(&self) -> bool {
        matches!(self.kind, StepKind::Query(_))
    }
}

/// Values of the cells in `I(t)`, in the order of [`Step::reads`].
#[derive(Clone, Debug)]
pub struct Readings<'a> {
    index: &'a [usize],
    values: Vec<Cell>,
}

impl<'a> Readings<'a> {
    pub fn new(index: &'a [usize], values: Vec<Cell>) -> Self {
        debug_assert_eq!(index.len(), values.len());
        Self { index, values }
    }

    pub fn get(&self, cell: usize) -> Cell {
        let i = self.index.binary_search(&cell).expect("cell outside the read-set");
        self.values[i]
    }

    pub fn values(&self) -> &[Cell] {
        &self.values
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepProgram {
    pub name: String,
    width: u32,
    input_len: usize,
    query_len: usize,
    steps: Vec<Step>,
    lipschitz: Option<BigRational>,
}

impl StepProgram {
    pub fn new(name: impl Into<String>, width: u32, input_len: usize, query_len: usize, steps: Vec<Step>) -> Result<Self> {
        let p = Self { name: name.into(), width, input_len, query_len, steps, lipschitz: None };
        p.validate()?;
        Ok(p)
    }

    /// Declares a Lipschitz constant for the stochastic protocol.
    pub fn with_lipschitz(mut self, k: BigRational) -> Self {
        self.lipschitz = Some(k);
        self
    }

    pub fn lipschitz(&self) -> Option<&BigRational> {
        self.lipschitz.as_ref()
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProgram(m));
        if self.width == 0 || self.width > 64 {
            return bad(format!("cell width {} outside 1..=64", self.width));
        }
        if self.steps.is_empty() {
            return bad("a program needs at least one step".into());
        }
        for (t, step) in self.steps.iter().enumerate() {
            if let Some(&r) = step.reads.iter().find(|&&r| r >= t) {
                return bad(format!("step {t} reads cell {r}, which is not earlier"));
            }
            match &step.kind {
                StepKind::Query(parts) => {
                    let len: usize = parts
                        .iter()
                        .map(|p| match p {
                            QueryPart::Cell(_) => self.width as usize,
                            _ => 1,
                        })
                        .sum();
                    if len != self.query_len {
                        return bad(format!("step {t} builds a {len}-bit query, the program declares {}", self.query_len));
                    }
                    for p in parts {
                        match p {
                            QueryPart::CellBit(_, b) if *b as u32 >= self.width => {
                                return bad(format!("step {t} selects bit {b} of a {}-bit cell", self.width))
                            }
                            QueryPart::Input(i) if *i >= self.input_len => {
                                return bad(format!("step {t} reads input bit {i}"))
                            }
                            _ => {}
                        }
                    }
                }
                StepKind::Det(op) => match op {
                    DetOp::Input(i) if *i >= self.input_len => return bad(format!("step {t} reads input bit {i}")),
                    DetOp::InputWord { start, len } if start + len > self.input_len || *len > 64 => {
                        return bad(format!("step {t} reads input bits {start}..{}", start + len))
                    }
                    DetOp::Maj(v) if v.len() % 2 == 0 => return bad(format!("step {t}: majority of an even number of cells")),
                    DetOp::Const(c) if *c > self.mask() => return bad(format!("step {t}: constant wider than a cell")),
                    DetOp::Vm(_) if self.width < 2 => return bad("machine steps need cells of at least 2 bits".into()),
                    _ => {}
                },
            }
        }
        Ok(())
    }

    /// Number of steps `T`.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    /// Oracle query length.
    pub fn query_len(&self) -> usize {
        self.query_len
    }

    /// `l`: the largest number of bits any step reads (cells of `I(t)` or its query).
    pub fn max_read_bits(&self) -> usize {
        self.steps
            .iter()
            .map(|s| s.reads.len() * self.width as usize)
            .max()
            .unwrap_or(0)
            .max(self.query_len)
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn step(&self, t: usize) -> &Step {
        &self.steps[t]
    }

    pub fn query_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.is_query()).count()
    }

    pub fn mask(&self) -> Cell {
        if self.width == 64 {
            u64::MAX
        } else {
            (1u64 << self.width) - 1
        }
    }

    pub fn output_index(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn check_input(&self, x: &BitString) -> Result<()> {
        if x.len() != self.input_len {
            return Err(Error::BadInputLength { expected: self.input_len, got: x.len() });
        }
        Ok(())
    }

    /// Reads `I(t)` out of a transcript.
    pub fn readings<'p>(&'p self, t: usize, transcript: &Transcript) -> Result<Readings<'p>> {
        let idx = &self.steps[t].reads;
        let values = idx
            .iter()
            .map(|&c| transcript.get(c).ok_or(Error::UnassignedDependency { step: t, cell: c }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Readings::new(idx, values))
    }

    /// Reads `I(t)` out of a plain cell array (e.g. a prover's claimed transcript).
    pub fn readings_from<'p>(&'p self, t: usize, cells: &[Cell]) -> Readings<'p> {
        let idx = &self.steps[t].reads;
        Readings::new(idx, idx.iter().map(|&c| cells[c]).collect())
    }

    /// Value of deterministic step `t` given its readings.
    pub fn det_value(&self, t: usize, x: &BitString, r: &Readings<'_>) -> Result<Cell> {
        let StepKind::Det(op) = &self.steps[t].kind else {
            return Err(Error::InvalidProgram(format!("step {t} is an oracle query")));
        };
        let mask = self.mask();
        let fold = |v: &[usize], init: Cell, f: fn(Cell, Cell) -> Cell| v.iter().fold(init, |acc, &c| f(acc, r.get(c)));
        let bit = |i: usize| x.get(i).map(|b| b as Cell).unwrap_or(0);
        let v = match op {
            DetOp::Const(c) => *c,
            DetOp::Input(i) => bit(*i),
            DetOp::InputWord { start, len } => (0..*len).fold(0, |acc, j| (acc << 1) | bit(start + j)),
            DetOp::Copy(a) => r.get(*a),
            DetOp::Not(a) => !r.get(*a),
            DetOp::And(v) => fold(v, mask, |a, b| a & b),
            DetOp::Or(v) => fold(v, 0, |a, b| a | b),
            DetOp::Xor(v) => fold(v, 0, |a, b| a ^ b),
            DetOp::Maj(v) => {
                let mut out = 0;
                for bitpos in 0..self.width {
                    let ones = v.iter().filter(|&&c| (r.get(c) >> bitpos) & 1 == 1).count();
                    if 2 * ones > v.len() {
                        out |= 1 << bitpos;
                    }
                }
                out
            }
            DetOp::Add(v) => fold(v, 0, |a, b| a.wrapping_add(b)),
            DetOp::Eq(a, b) => (r.get(*a) == r.get(*b)) as Cell,
            DetOp::Select(f, a, b) => {
                if r.get(*f) & 1 == 1 {
                    r.get(*a)
                } else {
                    r.get(*b)
                }
            }
            DetOp::Vm(rule) => rule.eval(x, r, t)?,
        };
        Ok(v & mask)
    }

    /// The query string of oracle step `t` given its readings.
    pub fn query_string(&self, t: usize, x: &BitString, r: &Readings<'_>) -> Result<BitString> {
        let StepKind::Query(parts) = &self.steps[t].kind else {
            return Err(Error::InvalidProgram(format!("step {t} is deterministic")));
        };
        let mut z = BitString::default();
        for p in parts {
            match p {
                QueryPart::Cell(c) => z.extend_from(&BitString::from_index(r.get(*c), self.width as usize)),
                QueryPart::CellBit(c, b) => z.push((r.get(*c) >> b) & 1 == 1),
                QueryPart::Input(i) => z.push(x.get(*i).unwrap_or(false)),
                QueryPart::Const(b) => z.push(*b),
            }
        }
        Ok(z)
    }

    /// Whether `cell` is the correct value of step `t` given its readings.
    /// Oracle steps consult `answer` once; a malformed reading counts as incorrect.
    pub fn locally_consistent<F>(&self, t: usize, x: &BitString, r: &Readings<'_>, cell: Cell, answer: F) -> Result<bool>
    where
        F: FnOnce(&BitString) -> Result<bool>,
    {
        match &self.steps[t].kind {
            StepKind::Det(_) => match self.det_value(t, x, r) {
                Ok(v) => Ok(v == cell),
                Err(Error::InvalidCellEncoding { .. }) => Ok(false),
                Err(e) => Err(e),
            },
            StepKind::Query(_) => {
                let z = self.query_string(t, x, r)?;
                Ok(answer(&z)? as Cell == cell)
            }
        }
    }
}

impl fmt::Display for StepProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (T={}, w={}, n={}, l={})", self.name, self.len(), self.width, self.input_len, self.query_len)
    }
}

/// Length-`T` sequence of write-once cells.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transcript {
    cells: Vec<Option<Cell>>,
}

impl Transcript {
    pub fn new(len: usize) -> Self {
        Self { cells: vec![None; len] }
    }

    pub fn from_cells(cells: &[Cell]) -> Self {
        Self { cells: cells.iter().map(|&c| Some(c)).collect() }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, t: usize) -> Option<Cell> {
        self.cells.get(t).copied().flatten()
    }

    pub fn assign(&mut self, t: usize, value: Cell) -> Result<()> {
        match self.cells.get_mut(t) {
            Some(slot @ None) => {
                *slot = Some(value);
                Ok(())
            }
            Some(Some(_)) => Err(Error::CellAlreadyAssigned { cell: t }),
            None => Err(Error::InvalidProgram(format!("cell {t} outside a transcript of length {}", self.cells.len()))),
        }
    }

    /// Length of the longest fully assigned prefix.
    pub fn assigned_prefix(&self) -> usize {
        self.cells.iter().take_while(|c| c.is_some()).count()
    }

    /// All cells, or `None` if any is unassigned.
    pub fn cells(&self) -> Option<Vec<Cell>> {
        self.cells.iter().copied().collect()
    }

    /// Hex export: each cell as `ceil(w/4)` hex digits, comma separated; `?` for unassigned.
    pub fn to_hex(&self, width: u32) -> String {
        let digits = width.div_ceil(4) as usize;
        self.cells
            .iter()
            .map(|c| match c {
                Some(v) => format!("{v:0digits$x}"),
                None => "?".repeat(digits),
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Evaluates step `t` against the assigned cells; oracle steps draw one sample.
pub fn sp_eval_step<R: rand::Rng + ?Sized>(
    p: &StepProgram,
    t: usize,
    x: &BitString,
    assigned: &Transcript,
    oracle: &StochasticOracle,
    rng: &mut R,
) -> Result<Cell> {
    eval_step_with(p, t, x, assigned, |z| oracle.sample(z, rng))
}

pub fn eval_step_with<F>(p: &StepProgram, t: usize, x: &BitString, assigned: &Transcript, answer: F) -> Result<Cell>
where
    F: FnOnce(&BitString) -> Result<bool>,
{
    let r = p.readings(t, assigned)?;
    match p.step(t).kind() {
        StepKind::Det(_) => p.det_value(t, x, &r),
        StepKind::Query(_) => Ok(answer(&p.query_string(t, x, &r)?)? as Cell),
    }
}

/// Fills the transcript in order, asking `answer` for each oracle query.
pub fn sp_run_with<F>(p: &StepProgram, x: &BitString, mut answer: F) -> Result<(Transcript, bool)>
where
    F: FnMut(&BitString) -> Result<bool>,
{
    p.check_input(x)?;
    let mut tr = Transcript::new(p.len());
    for t in 0..p.len() {
        let v = eval_step_with(p, t, x, &tr, &mut answer)?;
        tr.assign(t, v)?;
    }
    let out = tr.get(p.output_index()).unwrap() & 1 == 1;
    Ok((tr, out))
}

pub fn sp_run<R: rand::Rng + ?Sized>(
    p: &StepProgram,
    x: &BitString,
    oracle: &StochasticOracle,
    rng: &mut R,
) -> Result<(Transcript, bool)> {
    sp_run_with(p, x, |z| oracle.sample(z, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::UnitRational;
    use crate::rng::StreamKey;
    use proptest::prelude::*;

    fn x(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn xor_step() {
        let p = StepProgram::new(
            "xor",
            1,
            2,
            0,
            vec![Step::det(DetOp::Input(0)), Step::det(DetOp::Input(1)), Step::det(DetOp::Xor(vec![0, 1]))],
        )
        .unwrap();
        let tr = Transcript::from_cells(&[1, 0]);
        let mut t = Transcript::new(3);
        t.assign(0, 1).unwrap();
        t.assign(1, 0).unwrap();
        assert_eq!(eval_step_with(&p, 2, &x("10"), &t, |_| unreachable!()).unwrap(), 1);
        assert_eq!(tr.len(), 2);
    }

    #[test]
    fn unassigned_dependency() {
        let p = StepProgram::new("copy", 1, 1, 0, vec![Step::det(DetOp::Input(0)), Step::det(DetOp::Copy(0))]).unwrap();
        let t = Transcript::new(2);
        assert_eq!(
            eval_step_with(&p, 1, &x("1"), &t, |_| Ok(true)),
            Err(Error::UnassignedDependency { step: 1, cell: 0 })
        );
    }

    #[test]
    fn query_with_certain_oracle() {
        let p = StepProgram::new("q", 1, 1, 1, vec![Step::query(vec![QueryPart::Input(0)])]).unwrap();
        let one = StochasticOracle::constant(1, UnitRational::one());
        let zero = StochasticOracle::constant(1, UnitRational::zero());
        let mut rng = StreamKey::new(1).rng();
        for _ in 0..20 {
            assert!(sp_run(&p, &x("0"), &one, &mut rng).unwrap().1);
            assert_eq!(sp_run(&p, &x("1"), &zero, &mut rng).unwrap().0.get(0), Some(0));
        }
    }

    #[test]
    fn copying_program() {
        let p = StepProgram::new(
            "copy3",
            1,
            1,
            0,
            vec![Step::det(DetOp::Input(0)), Step::det(DetOp::Copy(0)), Step::det(DetOp::Copy(1))],
        )
        .unwrap();
        let (tr, out) = sp_run_with(&p, &x("1"), |_| unreachable!()).unwrap();
        assert_eq!(tr.cells().unwrap(), vec![1, 1, 1]);
        assert!(out);
        assert_eq!(tr.to_hex(1), "1,1,1");
    }

    #[test]
    fn rejects_forward_reads_and_bad_query_length() {
        assert!(StepProgram::new("f", 1, 0, 0, vec![Step::det(DetOp::Copy(0))]).is_err());
        assert!(StepProgram::new("q", 1, 1, 2, vec![Step::query(vec![QueryPart::Input(0)])]).is_err());
    }

    #[test]
    fn transcript_cells_are_write_once() {
        let mut t = Transcript::new(2);
        t.assign(0, 1).unwrap();
        assert_eq!(t.assign(0, 0), Err(Error::CellAlreadyAssigned { cell: 0 }));
        assert_eq!(t.assigned_prefix(), 1);
        assert_eq!(t.to_hex(8), "01,??");
    }

    #[test]
    fn word_ops() {
        let steps = vec![
            Step::det(DetOp::InputWord { start: 0, len: 4 }),
            Step::det(DetOp::Const(9)),
            Step::det(DetOp::Add(vec![0, 1])),
            Step::det(DetOp::Maj(vec![0, 1, 2])),
            Step::det(DetOp::Eq(0, 0)),
            Step::det(DetOp::Select(4, 1, 0)),
        ];
        let p = StepProgram::new("w", 4, 4, 0, steps).unwrap();
        let (tr, _) = sp_run_with(&p, &x("1011"), |_| unreachable!()).unwrap();
        // 11 + 9 = 20 = 4 mod 16; maj(1011, 1001, 0100) = 1001.
        assert_eq!(tr.cells().unwrap(), vec![11, 9, 4, 9, 1, 9]);
    }

    proptest! {
        #[test]
        fn locality_holds_for_xor_chains(bits in proptest::collection::vec(any::<bool>(), 1..8)) {
            let n = bits.len();
            let mut steps: Vec<Step> = (0..n).map(|i| Step::det(DetOp::Input(i))).collect();
            for i in 1..n {
                let prev = if i == 1 { 0 } else { n + i - 2 };
                steps.push(Step::det(DetOp::Xor(vec![prev, i])));
            }
            let p = StepProgram::new("chain", 1, n, 0, steps).unwrap();
            let input = BitString::new(bits.clone());
            let (tr, out) = sp_run_with(&p, &input, |_| unreachable!()).unwrap();
            let cells = tr.cells().unwrap();
            for t in 0..p.len() {
                let r = p.readings_from(t, &cells);
                prop_assert!(p.locally_consistent(t, &input, &r, cells[t], |_| unreachable!()).unwrap());
            }
            prop_assert_eq!(out, bits.iter().fold(false, |a, &b| a ^ b));
        }
    }
}

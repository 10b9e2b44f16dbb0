//! Plain-text definitions of machines and step programs.
//!
//! A machine file starts with `machine NAME`:
//!
//! ```text
//! machine copy
//! states 3        # state 0 starts
//! halt 2
//! space 2
//! time 3
//! input 1
//! output 0        # optional, default 0
//! query state=1 start=0 len=1 answer=0 return=2   # optional
//! 0 0 -> 1 0 R    # state symbol -> next write move (L, R or S)
//! 0 1 -> 1 1 R
//! ```
//!
//! A program file starts with `program NAME`; cells are numbered from 0 and
//! the last step is the output:
//!
//! ```text
//! program relay
//! width 1
//! input 1
//! query_len 1
//! lipschitz 1       # optional
//! step input 0
//! step query c0     # parts: cN (whole cell), cN.B (bit B of cell N), inN, 0, 1
//! step copy 1
//! ```
//!
//! Deterministic steps: `const V`, `input I`, `inword START LEN`, `copy C`,
//! `not C`, `and C..`, `or C..`, `xor C..`, `maj C..`, `add C..`, `eq A B`,
//! `select F A B`.

use std::fmt::Write as _;

use super::program::{DetOp, QueryPart, Step, StepKind, StepProgram};
use super::vm::{ConfigurationMachine, Move, QueryConvention};
use crate::error::{Error, Result};
use crate::rational::parse_rational;

/// Either kind of model a definition file can hold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Model {
    Machine(ConfigurationMachine),
    Program(StepProgram),
}

impl Model {
    pub fn name(&self) -> &str {
        match self {
            Model::Machine(m) => &m.name,
            Model::Program(p) => &p.name,
        }
    }

    pub fn input_len(&self) -> usize {
        match self {
            Model::Machine(m) => m.input_len(),
            Model::Program(p) => p.input_len(),
        }
    }
}

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap().trim();
        (!line.is_empty()).then(|| (i + 1, line.split_whitespace().collect()))
    })
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::parse(line, format!("expected a number, got `{s}`")))
}

pub fn parse_model(text: &str) -> Result<Model> {
    match lines(text).next() {
        Some((_, words)) if words[0] == "machine" => parse_machine(text).map(Model::Machine),
        Some((_, words)) if words[0] == "program" => parse_program(text).map(Model::Program),
        Some((line, _)) => Err(Error::parse(line, "expected `machine NAME` or `program NAME`")),
        None => Err(Error::parse(1, "empty definition")),
    }
}

pub fn parse_machine(text: &str) -> Result<ConfigurationMachine> {
    let mut name = String::new();
    let (mut states, mut halt, mut space, mut time, mut input) = (None, None, None, None, None);
    let mut output = 0usize;
    let mut query = None;
    let mut rules = Vec::new();
    let mut first = true;
    for (line, w) in lines(text) {
        if first {
            if w[0] != "machine" || w.len() != 2 {
                return Err(Error::parse(line, "expected `machine NAME`"));
            }
            name = w[1].to_string();
            first = false;
            continue;
        }
        let one = |w: &[&str]| -> Result<usize> {
            if w.len() != 2 {
                return Err(Error::parse(line, format!("`{}` takes one value", w[0])));
            }
            num(line, w[1])
        };
        match w[0] {
            "states" => states = Some(one(&w)?),
            "halt" => halt = Some(one(&w)?),
            "space" => space = Some(one(&w)?),
            "time" => time = Some(one(&w)?),
            "input" => input = Some(one(&w)?),
            "output" => output = one(&w)?,
            "query" => {
                let mut q = QueryConvention { state: 0, window_start: 0, window_len: 0, answer_pos: 0, return_state: 0 };
                let mut seen = 0;
                for kv in &w[1..] {
                    let (k, v) = kv.split_once('=').ok_or_else(|| Error::parse(line, format!("expected key=value, got `{kv}`")))?;
                    let v: usize = num(line, v)?;
                    match k {
                        "state" => q.state = v,
                        "start" => q.window_start = v,
                        "len" => q.window_len = v,
                        "answer" => q.answer_pos = v,
                        "return" => q.return_state = v,
                        _ => return Err(Error::parse(line, format!("unknown query key `{k}`"))),
                    }
                    seen += 1;
                }
                if seen != 5 {
                    return Err(Error::parse(line, "query needs state, start, len, answer and return"));
                }
                query = Some(q);
            }
            _ => {
                if w.len() != 6 || w[2] != "->" {
                    return Err(Error::parse(line, "expected `state symbol -> next write move`"));
                }
                let bit = |s: &str| match s {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    _ => Err(Error::parse(line, format!("expected a bit, got `{s}`"))),
                };
                let mv = match w[5] {
                    "L" => Move::Left,
                    "R" => Move::Right,
                    "S" => Move::Stay,
                    other => return Err(Error::parse(line, format!("expected L, R or S, got `{other}`"))),
                };
                rules.push((line, num::<usize>(line, w[0])?, bit(w[1])?, num::<usize>(line, w[3])?, bit(w[4])?, mv));
            }
        }
    }
    let need = |v: Option<usize>, what: &str| v.ok_or_else(|| Error::InvalidMachine(format!("missing `{what}` line")));
    let states = need(states, "states")?;
    let mut b = ConfigurationMachine::builder(states, need(halt, "halt")?, need(space, "space")?, need(time, "time")?, need(input, "input")?)
        .name(name)
        .output_pos(output);
    if let Some(q) = query {
        b = b.query(q);
    }
    for (line, s, sym, next, write, mv) in rules {
        if s >= states {
            return Err(Error::parse(line, format!("state {s} outside 0..{states}")));
        }
        b = b.on(s, sym, next, write, mv);
    }
    b.build()
}

fn parse_part(line: usize, s: &str) -> Result<QueryPart> {
    match s {
        "0" => return Ok(QueryPart::Const(false)),
        "1" => return Ok(QueryPart::Const(true)),
        _ => {}
    }
    if let Some(i) = s.strip_prefix("in") {
        return Ok(QueryPart::Input(num(line, i)?));
    }
    if let Some(c) = s.strip_prefix('c') {
        return Ok(match c.split_once('.') {
            Some((c, b)) => QueryPart::CellBit(num(line, c)?, num(line, b)?),
            None => QueryPart::Cell(num(line, c)?),
        });
    }
    Err(Error::parse(line, format!("bad query part `{s}`")))
}

fn parse_step(line: usize, w: &[&str]) -> Result<Step> {
    let args = &w[1..];
    let cells = || args.iter().map(|a| num::<usize>(line, a)).collect::<Result<Vec<_>>>();
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(Error::parse(line, format!("`{}` takes {n} argument(s)", w[0])))
        }
    };
    let op = match w[0] {
        "query" => return Ok(Step::query(args.iter().map(|a| parse_part(line, a)).collect::<Result<_>>()?)),
        "const" => {
            arity(1)?;
            DetOp::Const(num(line, args[0])?)
        }
        "input" => {
            arity(1)?;
            DetOp::Input(num(line, args[0])?)
        }
        "inword" => {
            arity(2)?;
            DetOp::InputWord { start: num(line, args[0])?, len: num(line, args[1])? }
        }
        "copy" => {
            arity(1)?;
            DetOp::Copy(num(line, args[0])?)
        }
        "not" => {
            arity(1)?;
            DetOp::Not(num(line, args[0])?)
        }
        "and" => DetOp::And(cells()?),
        "or" => DetOp::Or(cells()?),
        "xor" => DetOp::Xor(cells()?),
        "maj" => DetOp::Maj(cells()?),
        "add" => DetOp::Add(cells()?),
        "eq" => {
            arity(2)?;
            let c = cells()?;
            DetOp::Eq(c[0], c[1])
        }
        "select" => {
            arity(3)?;
            let c = cells()?;
            DetOp::Select(c[0], c[1], c[2])
        }
        other => return Err(Error::parse(line, format!("unknown step kind `{other}`"))),
    };
    Ok(Step::det(op))
}

pub fn parse_program(text: &str) -> Result<StepProgram> {
    let mut name = String::new();
    let (mut width, mut input, mut query_len) = (1u32, None, 0usize);
    let mut lipschitz = None;
    let mut steps = Vec::new();
    let mut first = true;
    for (line, w) in lines(text) {
        if first {
            if w[0] != "program" || w.len() != 2 {
                return Err(Error::parse(line, "expected `program NAME`"));
            }
            name = w[1].to_string();
            first = false;
            continue;
        }
        let value = || w.get(1).copied().ok_or_else(|| Error::parse(line, format!("`{}` needs a value", w[0])));
        match w[0] {
            "width" => width = num(line, value()?)?,
            "input" => input = Some(num(line, value()?)?),
            "query_len" => query_len = num(line, value()?)?,
            "lipschitz" => lipschitz = Some(parse_rational(value()?).map_err(|e| Error::parse(line, e.to_string()))?),
            "step" => {
                if w.len() < 2 {
                    return Err(Error::parse(line, "`step` needs a kind"));
                }
                let step = parse_step(line, &w[1..])?;
                // Catch forward reads here so the error carries the line number.
                if let Some(&r) = step.reads().iter().find(|&&r| r >= steps.len()) {
                    return Err(Error::parse(line, format!("step {} reads cell {r}, which is not earlier", steps.len())));
                }
                steps.push(step);
            }
            other => return Err(Error::parse(line, format!("unknown key `{other}`"))),
        }
    }
    let input = input.ok_or_else(|| Error::InvalidProgram("missing `input` line".into()))?;
    let p = StepProgram::new(name, width, input, query_len, steps)?;
    Ok(match lipschitz {
        Some(k) => p.with_lipschitz(k),
        None => p,
    })
}

pub fn machine_to_text(m: &ConfigurationMachine) -> String {
    let mut s = format!(
        "machine {}\nstates {}\nhalt {}\nspace {}\ntime {}\ninput {}\noutput {}\n",
        if m.name.is_empty() { "unnamed" } else { &m.name },
        m.num_states(),
        m.halt_state(),
        m.space(),
        m.time(),
        m.input_len(),
        m.output_pos()
    );
    if let Some(q) = m.query_convention() {
        let _ = writeln!(
            s,
            "query state={} start={} len={} answer={} return={}",
            q.state, q.window_start, q.window_len, q.answer_pos, q.return_state
        );
    }
    for state in 0..m.num_states() {
        for sym in [false, true] {
            if let Some(t) = m.transition(state, sym) {
                let mv = match t.step {
                    Move::Left => "L",
                    Move::Right => "R",
                    Move::Stay => "S",
                };
                let _ = writeln!(s, "{state} {} -> {} {} {mv}", sym as u8, t.next, t.write as u8);
            }
        }
    }
    s
}

/// Text form of a program; compiled machine steps have no text form.
pub fn program_to_text(p: &StepProgram) -> Result<String> {
    let mut s = format!("program {}\nwidth {}\ninput {}\nquery_len {}\n", p.name, p.width(), p.input_len(), p.query_len());
    if let Some(k) = p.lipschitz() {
        let _ = writeln!(s, "lipschitz {k}");
    }
    let join = |v: &[usize]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ");
    for step in p.steps() {
        let body = match step.kind() {
            StepKind::Query(parts) => {
                let parts: Vec<String> = parts
                    .iter()
                    .map(|q| match q {
                        QueryPart::Cell(c) => format!("c{c}"),
                        QueryPart::CellBit(c, b) => format!("c{c}.{b}"),
                        QueryPart::Input(i) => format!("in{i}"),
                        QueryPart::Const(b) => (*b as u8).to_string(),
                    })
                    .collect();
                format!("query {}", parts.join(" "))
            }
            StepKind::Det(op) => match op {
                DetOp::Const(c) => format!("const {c}"),
                DetOp::Input(i) => format!("input {i}"),
                DetOp::InputWord { start, len } => format!("inword {start} {len}"),
                DetOp::Copy(c) => format!("copy {c}"),
                DetOp::Not(c) => format!("not {c}"),
                DetOp::And(v) => format!("and {}", join(v)),
                DetOp::Or(v) => format!("or {}", join(v)),
                DetOp::Xor(v) => format!("xor {}", join(v)),
                DetOp::Maj(v) => format!("maj {}", join(v)),
                DetOp::Add(v) => format!("add {}", join(v)),
                DetOp::Eq(a, b) => format!("eq {a} {b}"),
                DetOp::Select(f, a, b) => format!("select {f} {a} {b}"),
                DetOp::Vm(_) => return Err(Error::InvalidProgram("compiled machine steps have no text form".into())),
            },
        };
        let _ = writeln!(s, "step {body}");
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitString;
    use crate::machine::vm::vm_run_with;

    const COPY: &str = "machine copy\nstates 3\nhalt 2\nspace 2\ntime 3\ninput 1\n\
        0 0 -> 1 0 R\n0 1 -> 1 1 R\n1 0 -> 2 0 L\n1 1 -> 2 1 L\n";

    #[test]
    fn machine_round_trip() {
        let m = parse_machine(COPY).unwrap();
        assert_eq!(m.name, "copy");
        let run = vm_run_with(&m, &"1".parse().unwrap(), |_| unreachable!()).unwrap();
        assert!(run.output);
        assert_eq!(parse_machine(&machine_to_text(&m)).unwrap(), m);
    }

    #[test]
    fn machine_errors_carry_lines() {
        let text = "machine m\nstates 2\nhalt 1\nspace 1\ntime 1\ninput 0\n0 0 -> 1 0 Q\n";
        assert!(matches!(parse_machine(text), Err(Error::Parse { line: 7, .. })));
        assert!(matches!(parse_machine("machine m\nstates x\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn program_round_trip() {
        let text = "program relay\nwidth 1\ninput 1\nquery_len 1\nlipschitz 1\n\
            step input 0\nstep query c0\nstep copy 1\n";
        let p = parse_program(text).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p.step(1).reads(), &[0]);
        assert_eq!(parse_program(&program_to_text(&p).unwrap()).unwrap(), p);
        assert!(matches!(parse_model(text), Ok(Model::Program(_))));
        let x: BitString = "1".parse().unwrap();
        assert!(p.check_input(&x).is_ok());
    }

    #[test]
    fn forward_read_reports_line() {
        let text = "program bad\ninput 0\n\nstep const 1\nstep xor 0 1\n";
        assert!(matches!(parse_program(text), Err(Error::Parse { line: 5, .. })));
    }
}

//! Stochastic oracles and the exact ground-truth machinery built on them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::machine::program::{Cell, StepKind, StepProgram};
use crate::rational::{parse_rational, UnitRational};

/// Largest query length for which an explicit table is kept.
pub const TABLE_LIMIT: usize = 20;
/// Largest number of oracle steps [`exact_output_prob`] will enumerate.
pub const QUERY_STEP_LIMIT: usize = 20;
/// Largest input length [`estimate_lipschitz`] will enumerate.
pub const INPUT_LIMIT: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Rule {
    Table(Vec<UnitRational>),
    Constant(UnitRational),
}

/// Maps each query `z ∈ {0,1}^l` to the probability that the oracle answers 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StochasticOracle {
    len: usize,
    rule: Rule,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleMode {
    Naive,
    #[default]
    Binomial,
}

/// Anything that assigns a probability to each query.
pub trait OracleProbs {
    fn query_len(&self) -> usize;
    fn prob(&self, z: &BitString) -> Result<UnitRational>;
}

impl StochasticOracle {
    pub fn constant(len: usize, p: UnitRational) -> Self {
        Self { len, rule: Rule::Constant(p) }
    }

    /// Explicit table indexed by the query read as a big-endian integer.
    pub fn table(len: usize, probs: Vec<UnitRational>) -> Result<Self> {
        if len > TABLE_LIMIT {
            return Err(Error::TooLargeToEnumerate { what: "oracle table query length", size: len, limit: TABLE_LIMIT });
        }
        if probs.len() != 1usize << len {
            return Err(Error::InvalidOracle(format!("table for l={len} needs {} entries, got {}", 1usize << len, probs.len())));
        }
        Ok(Self { len, rule: Rule::Table(probs) })
    }

    pub fn from_fn(len: usize, f: impl Fn(&BitString) -> UnitRational) -> Result<Self> {
        if len > TABLE_LIMIT {
            return Err(Error::TooLargeToEnumerate { what: "oracle table query length", size: len, limit: TABLE_LIMIT });
        }
        Self::table(len, BitString::all(len).map(|z| f(&z)).collect())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_deterministic(&self) -> bool {
        match &self.rule {
            Rule::Table(v) => v.iter().all(|p| p.as_bit().is_some()),
            Rule::Constant(p) => p.as_bit().is_some(),
        }
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self.rule, Rule::Table(_))
    }

    fn check(&self, z: &BitString) -> Result<()> {
        if z.len() != self.len {
            return Err(Error::BadQueryLength { expected: self.len, got: z.len() });
        }
        Ok(())
    }

    pub fn prob_ref(&self, z: &BitString) -> Result<&UnitRational> {
        self.check(z)?;
        Ok(match &self.rule {
            Rule::Table(v) => &v[z.to_index() as usize],
            Rule::Constant(p) => p,
        })
    }

    /// Every `(query, probability)` pair; errors above [`TABLE_LIMIT`].
    pub fn entries(&self) -> Result<Vec<(BitString, UnitRational)>> {
        if self.len > TABLE_LIMIT {
            return Err(Error::TooLargeToEnumerate { what: "oracle query length", size: self.len, limit: TABLE_LIMIT });
        }
        Ok(BitString::all(self.len).map(|z| {
            let p = self.prob_ref(&z).unwrap().clone();
            (z, p)
        }).collect())
    }

    /// One independent answer.
    pub fn sample<R: Rng + ?Sized>(&self, z: &BitString, rng: &mut R) -> Result<bool> {
        let p = self.prob_ref(z)?;
        Ok(bernoulli(p.fixed_threshold(), rng))
    }

    /// Number of ones among `n` independent answers.
    pub fn sample_count<R: Rng + ?Sized>(&self, z: &BitString, n: u64, rng: &mut R, mode: SampleMode) -> Result<u64> {
        let p = self.prob_ref(z)?;
        Ok(binomial_count(p, n, rng, mode))
    }

    /// Sample mean `k / n` of `n` independent answers.
    pub fn sample_mean<R: Rng + ?Sized>(&self, z: &BitString, n: u64, rng: &mut R, mode: SampleMode) -> Result<UnitRational> {
        if n == 0 {
            return Err(Error::InvalidParams("sample_mean needs n >= 1".into()));
        }
        let k = self.sample_count(z, n, rng, mode)?;
        UnitRational::mean(k, n)
    }

    /// Parses `bitstring numerator/denominator` lines; `* p` sets a default for
    /// unlisted queries and `len l` fixes the query length.
    pub fn parse(text: &str) -> Result<Self> {
        let mut len: Option<usize> = None;
        let mut default: Option<UnitRational> = None;
        let mut entries: BTreeMap<BitString, UnitRational> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let key = it.next().unwrap();
            let value = it.next().ok_or_else(|| Error::parse(line_no, "expected `<bits> <probability>`"))?;
            if it.next().is_some() {
                return Err(Error::parse(line_no, "trailing tokens"));
            }
            if key == "len" {
                len = Some(value.parse().map_err(|_| Error::parse(line_no, "bad length"))?);
                continue;
            }
            let p: UnitRational = value.parse().map_err(|e: Error| Error::parse(line_no, e.to_string()))?;
            if key == "*" {
                default = Some(p);
                continue;
            }
            let z: BitString = key.parse().map_err(|e: Error| Error::parse(line_no, e.to_string()))?;
            match len {
                Some(l) if l != z.len() => {
                    return Err(Error::parse(line_no, format!("query `{z}` has length {}, expected {l}", z.len())))
                }
                None => len = Some(z.len()),
                _ => {}
            }
            if entries.insert(z.clone(), p).is_some() {
                return Err(Error::parse(line_no, format!("duplicate query `{z}`")));
            }
        }
        let len = len.ok_or_else(|| Error::InvalidOracle("no queries and no `len` line".into()))?;
        if entries.is_empty() {
            let p = default.ok_or_else(|| Error::InvalidOracle("oracle assigns no probabilities".into()))?;
            return Ok(Self::constant(len, p));
        }
        if len > TABLE_LIMIT {
            return Err(Error::TooLargeToEnumerate { what: "oracle table query length", size: len, limit: TABLE_LIMIT });
        }
        let mut table = Vec::with_capacity(1 << len);
        for z in BitString::all(len) {
            match entries.get(&z).or(default.as_ref()) {
                Some(p) => table.push(p.clone()),
                None => return Err(Error::InvalidOracle(format!("no probability for query `{z}` and no default"))),
            }
        }
        Self::table(len, table)
    }

    pub fn to_text(&self) -> String {
        match &self.rule {
            Rule::Constant(p) => format!("len {}\n* {p}\n", self.len),
            Rule::Table(v) => BitString::all(self.len).zip(v).map(|(z, p)| format!("{z} {p}\n")).collect(),
        }
    }
}

impl fmt::Display for StochasticOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rule {
            Rule::Constant(p) => write!(f, "constant {p} (l={})", self.len),
            Rule::Table(_) => write!(f, "table (l={})", self.len),
        }
    }
}

impl OracleProbs for StochasticOracle {
    fn query_len(&self) -> usize {
        self.len
    }

    fn prob(&self, z: &BitString) -> Result<UnitRational> {
        self.prob_ref(z).cloned()
    }
}

/// `u < threshold` for a uniform 64-bit `u`.
pub(crate) fn bernoulli<R: Rng + ?Sized>(threshold: u128, rng: &mut R) -> bool {
    (rng.random::<u64>() as u128) < threshold
}

pub(crate) fn binomial_count<R: Rng + ?Sized>(p: &UnitRational, n: u64, rng: &mut R, mode: SampleMode) -> u64 {
    match p.as_bit() {
        Some(false) => return 0,
        Some(true) => return n,
        None => {}
    }
    match mode {
        SampleMode::Naive => {
            let threshold = p.fixed_threshold();
            (0..n).filter(|_| bernoulli(threshold, rng)).count() as u64
        }
        SampleMode::Binomial => {
            let dist = Binomial::new(n, p.to_f64()).expect("p lies strictly inside (0, 1)");
            dist.sample(rng)
        }
    }
}

/// `max_z |o1(z) - o2(z)|` over all queries.
pub fn oracle_distance(o1: &StochasticOracle, o2: &StochasticOracle) -> Result<UnitRational> {
    if o1.len != o2.len {
        return Err(Error::BadQueryLength { expected: o1.len, got: o2.len });
    }
    if o1.len > TABLE_LIMIT {
        return Err(Error::TooLargeToEnumerate { what: "oracle query length", size: o1.len, limit: TABLE_LIMIT });
    }
    let mut best = UnitRational::zero();
    for z in BitString::all(o1.len) {
        let d = o1.prob_ref(&z)?.abs_diff(o2.prob_ref(&z)?);
        if d > best {
            best = d;
        }
    }
    Ok(best)
}

fn check_enumerable(p: &StepProgram) -> Result<()> {
    let q = p.query_steps();
    if q > QUERY_STEP_LIMIT {
        return Err(Error::TooLargeToEnumerate { what: "oracle steps", size: q, limit: QUERY_STEP_LIMIT });
    }
    Ok(())
}

/// Walks every branch of oracle answers. `visit` sees each query with the
/// probability mass reaching it; the return value is `P[output = 1]`.
fn explore(
    p: &StepProgram,
    x: &BitString,
    oracle: &dyn OracleProbs,
    prune_zero: bool,
    visit: &mut dyn FnMut(&BitString),
) -> Result<BigRational> {
    p.check_input(x)?;
    check_enumerable(p)?;
    if oracle.query_len() != p.query_len() && p.query_steps() > 0 {
        return Err(Error::BadQueryLength { expected: p.query_len(), got: oracle.query_len() });
    }
    let mut cells: Vec<Cell> = Vec::with_capacity(p.len());
    let one = BigRational::from_integer(1.into());
    explore_from(p, x, oracle, prune_zero, visit, &mut cells, one)
}

fn explore_from(
    p: &StepProgram,
    x: &BitString,
    oracle: &dyn OracleProbs,
    prune_zero: bool,
    visit: &mut dyn FnMut(&BitString),
    cells: &mut Vec<Cell>,
    weight: BigRational,
) -> Result<BigRational> {
    let start = cells.len();
    let mut t = start;
    let result = loop {
        if t == p.len() {
            let out = cells[p.output_index()] & 1 == 1;
            break Ok(if out { weight } else { BigRational::zero() });
        }
        let r = p.readings_from(t, cells);
        match p.step(t).kind() {
            StepKind::Det(_) => {
                cells.push(p.det_value(t, x, &r)?);
                t += 1;
            }
            StepKind::Query(_) => {
                let z = p.query_string(t, x, &r)?;
                visit(&z);
                let prob = oracle.prob(&z)?;
                let mut total = BigRational::zero();
                for (bit, w) in [(1, prob.as_big().clone()), (0, prob.complement().as_big().clone())] {
                    if prune_zero && w.is_zero() {
                        continue;
                    }
                    cells.push(bit);
                    total += explore_from(p, x, oracle, prune_zero, visit, cells, &weight * w)?;
                    cells.pop();
                }
                break Ok(total);
            }
        }
    };
    cells.truncate(start);
    result
}

/// Exact `P[output = 1]` on input `x`, by enumerating oracle answers.
pub fn exact_output_prob(p: &StepProgram, x: &BitString, oracle: &dyn OracleProbs) -> Result<UnitRational> {
    UnitRational::from_big(explore(p, x, oracle, true, &mut |_| {})?)
}

/// Queries the program can issue on `x` under some sequence of answers.
pub fn reachable_queries(p: &StepProgram, x: &BitString, query_len: usize) -> Result<BTreeSet<BitString>> {
    struct Anything(usize);
    impl OracleProbs for Anything {
        fn query_len(&self) -> usize {
            self.0
        }
        fn prob(&self, _: &BitString) -> Result<UnitRational> {
            Ok(UnitRational::ratio(1, 2))
        }
    }
    let mut seen = BTreeSet::new();
    explore(p, x, &Anything(query_len), false, &mut |z| {
        seen.insert(z.clone());
    })?;
    Ok(seen)
}

/// An oracle with some entries replaced and/or every entry shifted.
struct Perturbed<'a> {
    base: &'a StochasticOracle,
    overrides: BTreeMap<BitString, UnitRational>,
    shift: Option<BigRational>,
}

impl OracleProbs for Perturbed<'_> {
    fn query_len(&self) -> usize {
        self.base.len
    }

    fn prob(&self, z: &BitString) -> Result<UnitRational> {
        if let Some(p) = self.overrides.get(z) {
            return Ok(p.clone());
        }
        let p = self.base.prob_ref(z)?;
        Ok(match &self.shift {
            Some(d) => p.add_clamped(d),
            None => p.clone(),
        })
    }
}

/// Lower estimate of the Lipschitz constant of `p` at `oracle` on one input,
/// from single-query and all-query perturbations of size `delta`.
pub fn estimate_lipschitz_at(p: &StepProgram, x: &BitString, oracle: &StochasticOracle, delta: &UnitRational) -> Result<BigRational> {
    if delta.is_zero() {
        return Err(Error::InvalidParams("perturbation size must be positive".into()));
    }
    let base = explore(p, x, oracle, false, &mut |_| {})?;
    let mut best = BigRational::zero();
    let mut consider = |perturbed: &Perturbed<'_>, achieved: &BigRational| -> Result<()> {
        if achieved.is_zero() {
            return Ok(());
        }
        let moved = explore(p, x, perturbed, false, &mut |_| {})?;
        let ratio = (moved - &base).abs() / achieved;
        if ratio > best {
            best = ratio;
        }
        Ok(())
    };
    let d = delta.as_big().clone();
    for sign_delta in [d.clone(), -d] {
        for z in reachable_queries(p, x, oracle.len())? {
            let old = oracle.prob_ref(&z)?;
            let new = old.add_clamped(&sign_delta);
            let achieved = new.abs_diff(old).as_big().clone();
            let pert = Perturbed { base: oracle, overrides: BTreeMap::from([(z, new)]), shift: None };
            consider(&pert, &achieved)?;
        }
        let achieved = match &oracle.rule {
            Rule::Constant(q) => q.add_clamped(&sign_delta).abs_diff(q).as_big().clone(),
            Rule::Table(v) => v
                .iter()
                .map(|q| q.add_clamped(&sign_delta).abs_diff(q).as_big().clone())
                .max()
                .unwrap_or_else(BigRational::zero),
        };
        let pert = Perturbed { base: oracle, overrides: BTreeMap::new(), shift: Some(sign_delta) };
        consider(&pert, &achieved)?;
    }
    Ok(best)
}

/// [`estimate_lipschitz_at`] maximized over every input of the program's length.
pub fn estimate_lipschitz(p: &StepProgram, oracle: &StochasticOracle, delta: &UnitRational) -> Result<f64> {
    if p.input_len() > INPUT_LIMIT {
        return Err(Error::TooLargeToEnumerate { what: "program input length", size: p.input_len(), limit: INPUT_LIMIT });
    }
    let mut best = BigRational::zero();
    for x in BitString::all(p.input_len()) {
        let k = estimate_lipschitz_at(p, &x, oracle, delta)?;
        if k > best {
            best = k;
        }
    }
    Ok(best.to_f64().unwrap_or(f64::INFINITY))
}

/// Parses the `len`/`*` forms used on config lines, e.g. `const 1 9/10`.
pub fn constant_from_spec(len: &str, p: &str) -> Result<StochasticOracle> {
    let len: usize = len.parse().map_err(|_| Error::Config(format!("bad query length `{len}`")))?;
    Ok(StochasticOracle::constant(len, UnitRational::from_big(parse_rational(p)?)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::program::{DetOp, QueryPart, Step};
    use crate::rng::StreamKey;

    fn r(n: u64, d: u64) -> UnitRational {
        UnitRational::ratio(n, d)
    }

    fn single_query() -> StepProgram {
        StepProgram::new("single", 1, 1, 1, vec![Step::query(vec![QueryPart::Input(0)])]).unwrap()
    }

    fn majority3() -> StepProgram {
        let q = || Step::query(vec![QueryPart::Input(0)]);
        StepProgram::new("maj3", 1, 1, 1, vec![q(), q(), q(), Step::det(DetOp::Maj(vec![0, 1, 2]))]).unwrap()
    }

    /// `3p^2(1-p) + p^3`, written out independently of the enumerator.
    fn majority_truth(p: &BigRational) -> BigRational {
        let one = BigRational::from_integer(1.into());
        let three = BigRational::from_integer(3.into());
        &three * p * p * (&one - p) + p * p * p
    }

    #[test]
    fn sampling_certain_oracles() {
        let z: BitString = "0".parse().unwrap();
        let mut rng = StreamKey::new(3).rng();
        let one = StochasticOracle::constant(1, UnitRational::one());
        let zero = StochasticOracle::constant(1, UnitRational::zero());
        assert!(one.sample(&z, &mut rng).unwrap());
        assert!(!zero.sample(&z, &mut rng).unwrap());
        for mode in [SampleMode::Naive, SampleMode::Binomial] {
            assert_eq!(one.sample_mean(&z, 10, &mut rng, mode).unwrap(), r(10, 10));
            assert_eq!(zero.sample_mean(&z, 7, &mut rng, mode).unwrap(), r(0, 7));
        }
        let bad: BitString = "01".parse().unwrap();
        assert_eq!(one.sample(&bad, &mut rng), Err(Error::BadQueryLength { expected: 1, got: 2 }));
    }

    #[test]
    fn fair_oracle_mean() {
        // 10^5 draws: sd = 0.5/sqrt(1e5) = 0.00158; 0.01 is > 6 sd, far past the 99% level (2.58 sd).
        let o = StochasticOracle::constant(1, r(1, 2));
        let z: BitString = "1".parse().unwrap();
        let mut rng = StreamKey::new(11).rng();
        let ones = (0..100_000).filter(|_| o.sample(&z, &mut rng).unwrap()).count();
        assert!((ones as f64 / 1e5 - 0.5).abs() < 0.01);
    }

    #[test]
    fn distance_examples() {
        let o = StochasticOracle::table(2, vec![r(1, 10), r(2, 10), r(3, 10), r(4, 10)]).unwrap();
        let o2 = StochasticOracle::table(2, vec![r(1, 10), r(5, 10), r(3, 10), r(4, 10)]).unwrap();
        assert_eq!(oracle_distance(&o, &o).unwrap(), UnitRational::zero());
        assert_eq!(oracle_distance(&o, &o2).unwrap(), r(3, 10));
        let a = StochasticOracle::constant(0, r(1, 5));
        let b = StochasticOracle::constant(0, r(3, 10));
        assert_eq!(oracle_distance(&a, &b).unwrap(), r(1, 10));
        let big = StochasticOracle::constant(21, r(1, 2));
        assert!(matches!(oracle_distance(&big, &big), Err(Error::TooLargeToEnumerate { .. })));
    }

    #[test]
    fn exact_probabilities() {
        let x: BitString = "0".parse().unwrap();
        let o = StochasticOracle::constant(1, r(9, 10));
        assert_eq!(exact_output_prob(&single_query(), &x, &o).unwrap(), r(9, 10));
        let half = StochasticOracle::constant(1, r(1, 2));
        assert_eq!(exact_output_prob(&majority3(), &x, &half).unwrap(), r(1, 2));
        let truth = majority_truth(r(9, 10).as_big());
        assert_eq!(exact_output_prob(&majority3(), &x, &o).unwrap().as_big(), &truth);
        assert_eq!(exact_output_prob(&majority3(), &x, &o).unwrap(), r(972, 1000));
    }

    #[test]
    fn lipschitz_examples() {
        let delta = r(1, 1000);
        let constant = StepProgram::new("c", 1, 1, 1, vec![Step::det(DetOp::Const(1))]).unwrap();
        let half = StochasticOracle::constant(1, r(1, 2));
        assert_eq!(estimate_lipschitz(&constant, &half, &delta).unwrap(), 0.0);
        let nine = StochasticOracle::constant(1, r(9, 10));
        assert_eq!(estimate_lipschitz(&single_query(), &nine, &delta).unwrap(), 1.0);
        // d/dp (3p^2 - 2p^3) at 1/2 is 6p(1-p) = 3/2.
        let k = estimate_lipschitz(&majority3(), &half, &delta).unwrap();
        assert!((k - 1.5).abs() < 1e-5, "k = {k}");
    }

    #[test]
    fn parse_table() {
        let o = StochasticOracle::parse("# comment\n00 1/10\n01 0.2\n10 3/10\n* 2/5\n").unwrap();
        assert_eq!(o.prob_ref(&"11".parse().unwrap()).unwrap(), &r(2, 5));
        assert_eq!(o.prob_ref(&"01".parse().unwrap()).unwrap(), &r(1, 5));
        let err = StochasticOracle::parse("00 1/10\n011 1/2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let c = StochasticOracle::parse("len 3\n* 9/10\n").unwrap();
        assert!(!c.is_tabulated());
        assert_eq!(StochasticOracle::parse(&o.to_text()).unwrap(), o);
    }
}

//! The experiment config format.
//!
//! One `key = value` per line; `#` starts a comment. `adversary`, `matrix_a`
//! and `matrix_b` may repeat. Paths are relative to the config's directory.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::machine::format::{parse_model, Model};
use crate::machine::stock::stock_model;
use crate::oracle::{SampleMode, StochasticOracle};
use crate::protocol::{Mode, Party, ProtocolParams, WitnessMode};
use crate::rational::{parse_rational, UnitRational};
use crate::strategy::AdversarySpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Bisection,
    CrossExam,
    Stochastic,
    WitnessDet,
    WitnessStoch,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Bisection => "bisection",
            Protocol::CrossExam => "crossexam",
            Protocol::Stochastic => "stochastic",
            Protocol::WitnessDet => "witness-det",
            Protocol::WitnessStoch => "witness-stoch",
        }
    }

    pub fn witness_mode(self) -> Option<WitnessMode> {
        match self {
            Protocol::WitnessDet => Some(WitnessMode::Det),
            Protocol::WitnessStoch => Some(WitnessMode::Stoch),
            _ => None,
        }
    }

    pub fn is_deterministic(self) -> bool {
        matches!(self, Protocol::Bisection | Protocol::CrossExam | Protocol::WitnessDet)
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "bisection" => Protocol::Bisection,
            "crossexam" => Protocol::CrossExam,
            "stochastic" => Protocol::Stochastic,
            "witness-det" => Protocol::WitnessDet,
            "witness-stoch" => Protocol::WitnessStoch,
            _ => {
                return Err(Error::Config(format!(
                    "unknown protocol `{s}` (expected bisection, crossexam, stochastic, witness-det or witness-stoch)"
                )))
            }
        })
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Which machines `check-exhaustive` enumerates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MachineSet {
    Catalogue,
    TwoState,
    All,
}

impl FromStr for MachineSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "catalogue" => Ok(MachineSet::Catalogue),
            "two_state" => Ok(MachineSet::TwoState),
            "all" => Ok(MachineSet::All),
            _ => Err(Error::Config(format!("unknown machine set `{s}` (expected catalogue, two_state or all)"))),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub mode: Option<Mode>,
    pub out: Option<PathBuf>,
    pub trace: bool,
}

/// A fully resolved experiment.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub machine_ref: String,
    pub model: Option<Model>,
    pub oracle_ref: String,
    pub oracle: Option<StochasticOracle>,
    pub input: BitString,
    pub seed: u64,
    pub trials: usize,
    pub params: ProtocolParams,
    pub a: AdversarySpec,
    pub b: AdversarySpec,
    /// Sweep members, in file order.
    pub family: Vec<AdversarySpec>,
    /// Append the built-in attack family for the protocol to `family`.
    pub family_auto: bool,
    /// Side the swept adversaries play; the other side is honest.
    pub sweep_side: Party,
    pub matrix_a: Vec<AdversarySpec>,
    pub matrix_b: Vec<AdversarySpec>,
    /// Perturbation size for `lipschitz`.
    pub delta: UnitRational,
    pub machines: MachineSet,
    /// Acceptance thresholds checked against the Wilson bounds.
    pub expect_min: Option<f64>,
    pub expect_max: Option<f64>,
    pub out: Option<PathBuf>,
    pub trace: bool,
}

impl ExperimentConfig {
    /// Defaults plus a seed; handy for building configs in code.
    pub fn new(protocol: Protocol, seed: u64) -> Self {
        Self {
            protocol,
            machine_ref: String::new(),
            model: None,
            oracle_ref: String::new(),
            oracle: None,
            input: BitString::default(),
            seed,
            trials: 100,
            params: ProtocolParams::paper(),
            a: AdversarySpec::Honest,
            b: AdversarySpec::Honest,
            family: Vec::new(),
            family_auto: false,
            sweep_side: Party::A,
            matrix_a: Vec::new(),
            matrix_b: Vec::new(),
            delta: UnitRational::ratio(1, 1000),
            machines: MachineSet::All,
            expect_min: None,
            expect_max: None,
            out: None,
            trace: false,
        }
    }

    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")), overrides)
    }

    pub fn parse(text: &str, base: &Path, overrides: &Overrides) -> Result<Self> {
        let mut cfg = Self::new(Protocol::Stochastic, 0);
        let mut seed = None;
        let mut mode = None;
        let mut param_lines: Vec<(usize, &str, &str)> = Vec::new();
        let mut oracle_line = None;
        let mut model_line = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap().trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| Error::parse(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let at = |e: Error| match e {
                Error::Parse { .. } => e,
                other => Error::parse(line, other.to_string()),
            };
            match key {
                "protocol" => cfg.protocol = value.parse().map_err(at)?,
                "machine" => {
                    cfg.machine_ref = value.to_string();
                    cfg.model = Some(load_model(value, base).map_err(at)?);
                    model_line = Some(line);
                }
                "oracle" => {
                    cfg.oracle_ref = value.to_string();
                    oracle_line = Some(line);
                }
                "input" => cfg.input = value.parse().map_err(at)?,
                "seed" => seed = Some(value.parse::<u64>().map_err(|_| Error::parse(line, format!("bad seed `{value}`")))?),
                "trials" => cfg.trials = positive(value).map_err(at)?,
                "mode" => mode = Some(value.parse::<Mode>().map_err(at)?),
                "sampling" | "c_d" | "chernoff_coeff" | "verifier_conf" | "prover_conf_base" | "broken_verifier" => {
                    param_lines.push((line, key, value))
                }
                "a" => cfg.a = value.parse().map_err(at)?,
                "b" => cfg.b = value.parse().map_err(at)?,
                "adversary" => cfg.family.push(value.parse().map_err(at)?),
                "family" => {
                    cfg.family_auto = match value {
                        "auto" => true,
                        "none" => false,
                        _ => return Err(Error::parse(line, "family is `auto` or `none`")),
                    }
                }
                "sweep_side" => {
                    cfg.sweep_side = match value {
                        "a" | "A" => Party::A,
                        "b" | "B" => Party::B,
                        _ => return Err(Error::parse(line, "sweep_side is `a` or `b`")),
                    }
                }
                "matrix_a" => cfg.matrix_a.push(value.parse().map_err(at)?),
                "matrix_b" => cfg.matrix_b.push(value.parse().map_err(at)?),
                "delta" => cfg.delta = UnitRational::from_big(parse_rational(value).map_err(at)?).map_err(at)?,
                "machines" => cfg.machines = value.parse().map_err(at)?,
                "expect_min" => cfg.expect_min = Some(probability(value).map_err(at)?),
                "expect_max" => cfg.expect_max = Some(probability(value).map_err(at)?),
                "out" => cfg.out = Some(base.join(value)),
                "trace" => cfg.trace = bool_value(value).map_err(at)?,
                _ => return Err(Error::parse(line, format!("unknown key `{key}`"))),
            }
        }

        cfg.params = ProtocolParams::for_mode(overrides.mode.or(mode).unwrap_or_default());
        for (line, key, value) in param_lines {
            apply_param(&mut cfg.params, key, value).map_err(|e| Error::parse(line, e.to_string()))?;
        }
        cfg.params.validate()?;
        if let Some(line) = oracle_line {
            let query_len = cfg.model.as_ref().map_or(0, query_len);
            cfg.oracle = Some(load_oracle(&cfg.oracle_ref, query_len, base).map_err(|e| match e {
                Error::Parse { .. } => e,
                other => Error::parse(line, other.to_string()),
            })?);
        } else if let Some(m) = &cfg.model {
            if query_len(m) > 0 {
                return Err(Error::parse(model_line.unwrap_or(1), format!("`{}` queries an oracle; add an `oracle =` line", m.name())));
            }
        }

        cfg.seed = overrides.seed.or(seed).ok_or_else(|| Error::Config("no seed: add `seed = N` to the config or pass --seed".into()))?;
        if let Some(t) = overrides.trials {
            if t == 0 {
                return Err(Error::Config("--trials must be at least 1".into()));
            }
            cfg.trials = t;
        }
        if let Some(out) = &overrides.out {
            cfg.out = Some(out.clone());
        }
        cfg.trace |= overrides.trace;
        Ok(cfg)
    }

    /// The model, or an error naming the missing key.
    pub fn model(&self) -> Result<&Model> {
        self.model.as_ref().ok_or_else(|| Error::Config("no machine: add `machine = stock:NAME` or a path".into()))
    }

    /// The oracle; models without queries get an empty deterministic one.
    pub fn oracle(&self) -> Result<StochasticOracle> {
        match &self.oracle {
            Some(o) => Ok(o.clone()),
            None => Ok(StochasticOracle::constant(self.model.as_ref().map_or(0, query_len), UnitRational::zero())),
        }
    }
}

pub fn query_len(m: &Model) -> usize {
    match m {
        Model::Machine(m) => m.query_len(),
        Model::Program(p) => p.query_len(),
    }
}

fn positive(v: &str) -> Result<usize> {
    match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(Error::Config(format!("expected a positive integer, got `{v}`"))),
    }
}

fn probability(v: &str) -> Result<f64> {
    Ok(UnitRational::from_big(parse_rational(v)?)?.to_f64())
}

fn bool_value(v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("expected true or false, got `{v}`"))),
    }
}

fn apply_param(p: &mut ProtocolParams, key: &str, value: &str) -> Result<()> {
    let bad = || Error::Config(format!("bad value `{value}` for `{key}`"));
    match key {
        "sampling" => {
            p.sampling = match value {
                "naive" => SampleMode::Naive,
                "binomial" => SampleMode::Binomial,
                _ => return Err(Error::Config(format!("sampling is naive or binomial, got `{value}`"))),
            }
        }
        "c_d" => p.c_d = value.parse().map_err(|_| bad())?,
        "chernoff_coeff" => p.chernoff_coeff = value.parse().map_err(|_| bad())?,
        "verifier_conf" => p.verifier_conf = parse_log_value(value).ok_or_else(bad)?,
        "prover_conf_base" => p.prover_conf_base = value.parse().map_err(|_| bad())?,
        "broken_verifier" => p.broken_verifier = bool_value(value)?,
        _ => unreachable!("caller filters parameter keys"),
    }
    Ok(())
}

/// A number, or `ln N`.
fn parse_log_value(v: &str) -> Option<f64> {
    match v.strip_prefix("ln") {
        Some(rest) => rest.trim().parse::<f64>().ok().filter(|n| *n > 0.0).map(f64::ln),
        None => v.parse().ok(),
    }
}

/// `stock:NAME` or a path to a machine or program definition.
pub fn load_model(spec: &str, base: &Path) -> Result<Model> {
    if let Some(name) = spec.strip_prefix("stock:") {
        return stock_model(name).ok_or_else(|| Error::Config(format!("no stock machine or program named `{name}`")));
    }
    let path = base.join(spec);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// `const P`, `const L P`, `identity`, or `table PATH`.
pub fn load_oracle(spec: &str, query_len: usize, base: &Path) -> Result<StochasticOracle> {
    let words: Vec<&str> = spec.split_whitespace().collect();
    match words.as_slice() {
        ["const", p] => Ok(StochasticOracle::constant(query_len, UnitRational::from_big(parse_rational(p)?)?)),
        ["const", l, p] => crate::oracle::constant_from_spec(l, p),
        ["identity"] => StochasticOracle::from_fn(query_len, |z| UnitRational::from_bit(z.get(0).unwrap_or(false))),
        ["table", path] => {
            let path = base.join(path);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            StochasticOracle::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
        _ => Err(Error::Config(format!("bad oracle `{spec}` (expected const P, const L P, identity or table PATH)"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(text, Path::new("."), &Overrides::default())
    }

    #[test]
    fn parses_a_full_config() {
        let cfg = parse(
            "# stochastic completeness\nprotocol = stochastic\nmachine = stock:single_query\noracle = const 9/10\n\
             input = 1\nseed = 7\ntrials = 40\nmode = scaled\nc_d = 20\nb = AlwaysAbort t=0\nadversary = NeverAbort\n\
             adversary = BiasedShare c=1/2\n",
        )
        .unwrap();
        assert_eq!(cfg.protocol, Protocol::Stochastic);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.trials, 40);
        assert_eq!(cfg.params.mode, Mode::Scaled);
        assert_eq!(cfg.params.c_d, 20);
        assert_eq!(cfg.family.len(), 2);
        assert_eq!(cfg.b, AdversarySpec::AlwaysAbort { round: Some(0) });
        assert_eq!(cfg.oracle.unwrap().len(), 1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse("seed = 1\n\nprotocol = sideways\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e}");
        let e = parse("seed = 1\nbogus = 2\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse("seed = 1\nno equals sign\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
        let e = parse("seed = 1\nmachine = stock:single_query\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e}");
    }

    #[test]
    fn seed_is_required_unless_overridden() {
        assert!(matches!(parse("protocol = bisection\n"), Err(Error::Config(_))));
        let o = Overrides { seed: Some(3), ..Overrides::default() };
        assert_eq!(ExperimentConfig::parse("protocol = bisection\n", Path::new("."), &o).unwrap().seed, 3);
    }

    #[test]
    fn command_line_mode_wins_but_explicit_params_stay() {
        let o = Overrides { mode: Some(Mode::Scaled), ..Overrides::default() };
        let cfg = ExperimentConfig::parse("seed = 1\nmode = paper\nchernoff_coeff = 48\n", Path::new("."), &o).unwrap();
        assert_eq!(cfg.params.c_d, 10);
        assert_eq!(cfg.params.chernoff_coeff, 48);
    }

    #[test]
    fn verifier_conf_accepts_ln() {
        let cfg = parse("seed = 1\nverifier_conf = ln 100\n").unwrap();
        assert_eq!(cfg.params.verifier_conf, 100f64.ln());
    }
}

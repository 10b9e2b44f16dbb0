//! Python bindings: configs, single debates, acceptance estimates, sweeps
//! and the exhaustive checker.
//!
//! Experiments are described with the same `key = value` text the CLI reads.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use debate_core::harness::{self, report, AcceptanceEstimate, Arena, ExperimentConfig, Overrides};
use debate_core::machine::stock::{MACHINE_NAMES, PROGRAM_NAMES};
use debate_core::protocol::{self as proto, DebateOutcome, Mode, ProtocolParams};
use debate_core::rational::{parse_rational, UnitRational};
use debate_core::strategy::{make_adversary, AdversarySpec};
use debate_core::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::CounterexampleFound { .. } | Error::Io(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn unit(s: &str) -> PyResult<UnitRational> {
    UnitRational::from_big(parse_rational(s).map_err(err)?).map_err(err)
}

fn parse_mode(mode: Option<&str>) -> PyResult<Option<Mode>> {
    mode.map(|m| m.parse::<Mode>().map_err(err)).transpose()
}

/// A parsed experiment config.
#[pyclass(name = "Config", module = "debate_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    /// Parses config text; relative paths resolve against `base`.
    #[new]
    #[pyo3(signature = (text, base = None, seed = None, trials = None, mode = None))]
    fn new(text: &str, base: Option<PathBuf>, seed: Option<u64>, trials: Option<usize>, mode: Option<&str>) -> PyResult<Self> {
        let overrides = Overrides { seed, trials, mode: parse_mode(mode)?, out: None, trace: false };
        let base = base.unwrap_or_else(|| PathBuf::from("."));
        Ok(Self { inner: ExperimentConfig::parse(text, &base, &overrides).map_err(err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (path, seed = None, trials = None, mode = None))]
    fn load(path: PathBuf, seed: Option<u64>, trials: Option<usize>, mode: Option<&str>) -> PyResult<Self> {
        let overrides = Overrides { seed, trials, mode: parse_mode(mode)?, out: None, trace: false };
        Ok(Self { inner: ExperimentConfig::load(&path, &overrides).map_err(err)? })
    }

    #[getter]
    fn protocol(&self) -> &'static str {
        self.inner.protocol.name()
    }

    #[getter]
    fn machine(&self) -> &str {
        &self.inner.machine_ref
    }

    #[getter]
    fn input(&self) -> String {
        self.inner.input.to_string()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn trials(&self) -> usize {
        self.inner.trials
    }

    #[getter]
    fn params(&self) -> Params {
        Params { inner: self.inner.params.clone() }
    }

    fn __repr__(&self) -> String {
        format!("Config(protocol={}, machine={:?}, seed={}, trials={})", self.protocol(), self.inner.machine_ref, self.inner.seed, self.inner.trials)
    }
}

/// Constants of the stochastic protocol.
#[pyclass(module = "debate_py", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Params {
    inner: ProtocolParams,
}

#[pymethods]
impl Params {
    #[new]
    #[pyo3(signature = (mode = "paper"))]
    fn new(mode: &str) -> PyResult<Self> {
        Ok(Self { inner: ProtocolParams::for_mode(mode.parse().map_err(err)?) })
    }

    #[getter]
    fn c_d(&self) -> u64 {
        self.inner.c_d
    }

    #[getter]
    fn chernoff_coeff(&self) -> u64 {
        self.inner.chernoff_coeff
    }

    #[getter]
    fn verifier_conf(&self) -> f64 {
        self.inner.verifier_conf
    }

    #[getter]
    fn prover_conf_base(&self) -> f64 {
        self.inner.prover_conf_base
    }

    /// Discretisation `d` for a Lipschitz constant given as a rational string.
    fn d(&self, k: &str) -> PyResult<u64> {
        self.inner.d(&parse_rational(k).map_err(err)?).map_err(err)
    }

    /// Verifier samples per abort.
    fn r(&self, d: u64) -> u64 {
        self.inner.r(d)
    }

    /// Honest prover samples per round for a `t`-step program.
    fn big_r(&self, d: u64, t: usize) -> u64 {
        self.inner.big_r(d, t)
    }
}

/// Result of one debate.
#[pyclass(name = "Outcome", module = "debate_py", frozen)]
pub struct PyOutcome {
    inner: DebateOutcome,
}

#[pymethods]
impl PyOutcome {
    #[staticmethod]
    fn from_record(line: &str) -> PyResult<Self> {
        Ok(Self { inner: DebateOutcome::from_record(line).map_err(err)? })
    }

    #[getter]
    fn protocol(&self) -> &str {
        &self.inner.protocol
    }

    #[getter]
    fn verdict(&self) -> bool {
        self.inner.verdict
    }

    #[getter]
    fn abort_round(&self) -> Option<usize> {
        self.inner.abort_round
    }

    /// `"A"`, `"B"` or None.
    #[getter]
    fn forfeit(&self) -> Option<String> {
        self.inner.forfeit.map(|p| p.to_string())
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn counters(&self) -> BTreeMap<&'static str, u64> {
        proto::Counters::FIELDS.iter().copied().zip(self.inner.counters.values()).collect()
    }

    fn record(&self) -> String {
        self.inner.to_record()
    }

    fn trace(&self) -> String {
        self.inner.trace()
    }

    fn __repr__(&self) -> String {
        format!("Outcome({})", self.inner.to_record())
    }
}

/// Acceptance frequency of one strategy pair with its Wilson interval.
#[pyclass(name = "Estimate", module = "debate_py", frozen)]
pub struct PyEstimate {
    inner: AcceptanceEstimate,
}

#[pymethods]
impl PyEstimate {
    #[getter]
    fn a(&self) -> &str {
        &self.inner.a
    }

    #[getter]
    fn b(&self) -> &str {
        &self.inner.b
    }

    #[getter]
    fn trials(&self) -> u64 {
        self.inner.trials
    }

    #[getter]
    fn successes(&self) -> u64 {
        self.inner.successes
    }

    #[getter]
    fn errors(&self) -> u64 {
        self.inner.errors
    }

    #[getter]
    fn estimate(&self) -> f64 {
        self.inner.estimate
    }

    #[getter]
    fn ci(&self) -> (f64, f64) {
        (self.inner.ci_lo, self.inner.ci_hi)
    }

    fn to_json(&self) -> String {
        report::to_text(&report::estimate_json(&self.inner))
    }

    fn __repr__(&self) -> String {
        format!(
            "Estimate(a={:?}, b={:?}, {}/{}, ci=({:.4}, {:.4}))",
            self.inner.a, self.inner.b, self.inner.successes, self.inner.trials, self.inner.ci_lo, self.inner.ci_hi
        )
    }
}

/// Output of a CLI command: summary text, report files and the failure flag.
#[pyclass(name = "Report", module = "debate_py", frozen)]
pub struct PyReport {
    #[pyo3(get)]
    summary: String,
    #[pyo3(get)]
    files: BTreeMap<String, String>,
    #[pyo3(get)]
    failed: bool,
}

#[pymethods]
impl PyReport {
    fn write_to(&self, dir: PathBuf) -> PyResult<()> {
        std::fs::create_dir_all(&dir).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        }
        Ok(())
    }
}

fn spec(s: &str) -> PyResult<AdversarySpec> {
    s.parse().map_err(err)
}

/// Plays one debate. `a` and `b` default to the config's strategies.
#[pyfunction]
#[pyo3(signature = (config, a = None, b = None, seed = None))]
fn run_debate(py: Python<'_>, config: &PyConfig, a: Option<&str>, b: Option<&str>, seed: Option<u64>) -> PyResult<PyOutcome> {
    let cfg = &config.inner;
    let a = a.map(spec).transpose()?.unwrap_or_else(|| cfg.a.clone());
    let b = b.map(spec).transpose()?.unwrap_or_else(|| cfg.b.clone());
    let seed = seed.unwrap_or(cfg.seed);
    let outcome = py.detach(|| {
        let arena = Arena::from_config(cfg)?;
        arena.run(&make_adversary(&a), &make_adversary(&b), seed, true)
    });
    Ok(PyOutcome { inner: outcome.map_err(err)? })
}

/// Acceptance of the config's A against its B over its trials.
#[pyfunction]
fn estimate(py: Python<'_>, config: &PyConfig) -> PyResult<PyEstimate> {
    let e = py.detach(|| harness::estimate_acceptance(&config.inner)).map_err(err)?;
    Ok(PyEstimate { inner: e })
}

/// One estimate per member of the config's sweep family.
#[pyfunction]
fn sweep(py: Python<'_>, config: &PyConfig) -> PyResult<Vec<PyEstimate>> {
    let cfg = &config.inner;
    let rows = py
        .detach(|| {
            let arena = Arena::from_config(cfg)?;
            let family = harness::sweep_family(cfg, &arena);
            Ok::<_, Error>(harness::adversary_sweep(&arena, &family, cfg.sweep_side, cfg.trials, cfg.seed).rows)
        })
        .map_err(err)?;
    Ok(rows.into_iter().map(|inner| PyEstimate { inner }).collect())
}

/// Runs a CLI command (`run-debate`, `experiment`, `sweep`, `matrix`,
/// `lipschitz` or `check-exhaustive`) and returns its report.
#[pyfunction]
fn run_command(py: Python<'_>, name: &str, config: &PyConfig) -> PyResult<PyReport> {
    let command: fn(&ExperimentConfig) -> debate_core::Result<harness::Report> = match name {
        "run-debate" => harness::run_debate_command,
        "experiment" => harness::experiment_command,
        "sweep" => harness::sweep_command,
        "matrix" => harness::matrix_command,
        "lipschitz" => harness::lipschitz_command,
        "check-exhaustive" => harness::check_exhaustive_command,
        _ => return Err(PyValueError::new_err(format!("unknown command `{name}`"))),
    };
    let r = py.detach(|| command(&config.inner)).map_err(err)?;
    Ok(PyReport { summary: r.summary, files: r.files.into_iter().collect(), failed: r.failed })
}

/// Exhaustive check of the deterministic protocols over the stock machines
/// (`"catalogue"`), all small two-state machines (`"two_state"`) or both.
/// Returns `(debates, counterexample_count, counterexamples)`.
#[pyfunction]
#[pyo3(signature = (machines = "catalogue", seed = 0, broken_verifier = false))]
fn check_exhaustive(py: Python<'_>, machines: &str, seed: u64, broken_verifier: bool) -> PyResult<(u64, usize, Vec<String>)> {
    let set = match machines {
        "catalogue" => harness::stock_catalogue(),
        "two_state" => harness::two_state_catalogue(),
        "all" => {
            let mut v = harness::stock_catalogue();
            v.extend(harness::two_state_catalogue());
            v
        }
        _ => return Err(PyValueError::new_err(format!("unknown machine set `{machines}`"))),
    };
    let params = ProtocolParams { broken_verifier, ..ProtocolParams::paper() };
    let r = py.detach(|| harness::exhaustive_soundness_check(&set, &params, seed)).map_err(err)?;
    Ok((r.debates, r.counterexample_count, r.counterexamples.iter().map(|c| c.to_string()).collect()))
}

/// Estimated Lipschitz constant of the config's model at its oracle.
#[pyfunction]
#[pyo3(signature = (config, delta = None))]
fn lipschitz(py: Python<'_>, config: &PyConfig, delta: Option<&str>) -> PyResult<f64> {
    let mut cfg = config.inner.clone();
    if let Some(d) = delta {
        cfg.delta = unit(d)?;
    }
    let program = match cfg.model().map_err(err)? {
        debate_core::machine::format::Model::Program(p) => p.clone(),
        debate_core::machine::format::Model::Machine(m) => debate_core::machine::compile_vm_trace(m, &cfg.input).map_err(err)?,
    };
    let oracle = cfg.oracle().map_err(err)?;
    py.detach(|| debate_core::oracle::estimate_lipschitz(&program, &oracle, &cfg.delta)).map_err(err)
}

/// The verifier's abort check on rationals given as strings such as `"3/4"`.
#[pyfunction]
fn verifier_abort_check(announced: &str, observed: &str, d: u64) -> PyResult<bool> {
    Ok(proto::verifier_abort_check(&unit(announced)?, &unit(observed)?, d))
}

/// 95% Wilson score interval.
#[pyfunction]
fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    harness::wilson_interval(successes, trials)
}

#[pyfunction]
fn stock_machines() -> Vec<&'static str> {
    MACHINE_NAMES.to_vec()
}

#[pyfunction]
fn stock_programs() -> Vec<&'static str> {
    PROGRAM_NAMES.to_vec()
}

#[pymodule]
fn debate_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<Params>()?;
    m.add_class::<PyOutcome>()?;
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(run_debate, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    m.add_function(wrap_pyfunction!(check_exhaustive, m)?)?;
    m.add_function(wrap_pyfunction!(lipschitz, m)?)?;
    m.add_function(wrap_pyfunction!(verifier_abort_check, m)?)?;
    m.add_function(wrap_pyfunction!(wilson_interval, m)?)?;
    m.add_function(wrap_pyfunction!(stock_machines, m)?)?;
    m.add_function(wrap_pyfunction!(stock_programs, m)?)?;
    Ok(())
}

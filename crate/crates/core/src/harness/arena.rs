use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::machine::format::Model;
use crate::machine::{compile_vm_trace, ConfigurationMachine, StepProgram};
use crate::oracle::StochasticOracle;
use crate::protocol::{
    check_oracle, check_stochastic_program, run_bisection, run_crossexam, run_stochastic, run_witness, stochastic_constants,
    DebateOutcome, ProtocolParams, Referee,
};
use crate::strategy::Strategy;

use super::config::{ExperimentConfig, Protocol};

#[derive(Clone, Debug)]
enum Subject {
    Machine(ConfigurationMachine),
    Program(StepProgram),
}

/// A protocol, a model, an input and an oracle, checked once so that every
/// trial can run without setup errors.
#[derive(Clone, Debug)]
pub struct Arena {
    protocol: Protocol,
    subject: Subject,
    x: BitString,
    oracle: StochasticOracle,
    referee: Referee,
    quiet: Referee,
}

impl Arena {
    pub fn new(protocol: Protocol, model: &Model, x: &BitString, oracle: &StochasticOracle, params: &ProtocolParams) -> Result<Self> {
        params.validate()?;
        let subject = match (protocol, model) {
            (Protocol::Bisection, Model::Machine(m)) => {
                m.initial(x)?;
                if m.query_convention().is_some() && m.query_len() != oracle.len() {
                    return Err(Error::BadQueryLength { expected: m.query_len(), got: oracle.len() });
                }
                Subject::Machine(m.clone())
            }
            (Protocol::Bisection, Model::Program(p)) => {
                return Err(Error::Config(format!("bisection needs a configuration machine; `{}` is a step program", p.name)))
            }
            (Protocol::WitnessDet | Protocol::WitnessStoch, Model::Machine(m)) => {
                return Err(Error::Config(format!("witness protocols need a step program; `{}` is a machine", m.name)))
            }
            (_, Model::Machine(m)) => Subject::Program(compile_vm_trace(m, x)?),
            (_, Model::Program(p)) => Subject::Program(p.clone()),
        };
        if let Subject::Program(p) = &subject {
            check_oracle(p, oracle)?;
            if protocol.witness_mode().is_some() {
                if x.len() > p.input_len() {
                    return Err(Error::BadInputLength { expected: p.input_len(), got: x.len() });
                }
            } else {
                p.check_input(x)?;
            }
            if matches!(protocol, Protocol::Stochastic | Protocol::WitnessStoch) {
                check_stochastic_program(p)?;
                stochastic_constants(p, params)?;
            }
        }
        let referee = Referee::new(params.clone());
        Ok(Self { protocol, subject, x: x.clone(), oracle: oracle.clone(), quiet: referee.clone().quiet(), referee })
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Self::new(cfg.protocol, cfg.model()?, &cfg.input, &cfg.oracle()?, &cfg.params)
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn input(&self) -> &BitString {
        &self.x
    }

    pub fn oracle(&self) -> &StochasticOracle {
        &self.oracle
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.referee.params
    }

    /// The step program debated over (compiled from the machine if needed).
    pub fn program(&self) -> Option<&StepProgram> {
        match &self.subject {
            Subject::Program(p) => Some(p),
            Subject::Machine(_) => None,
        }
    }

    pub fn machine(&self) -> Option<&ConfigurationMachine> {
        match &self.subject {
            Subject::Machine(m) => Some(m),
            Subject::Program(_) => None,
        }
    }

    /// One debate; `trace` keeps the message log.
    pub fn run(&self, a: &Strategy, b: &Strategy, seed: u64, trace: bool) -> Result<DebateOutcome> {
        let referee = if trace { &self.referee } else { &self.quiet };
        let (x, o) = (&self.x, &self.oracle);
        match (&self.subject, self.protocol) {
            (Subject::Machine(m), _) => run_bisection(m, x, o, a, b, referee, seed),
            (Subject::Program(p), Protocol::Stochastic) => run_stochastic(p, x, o, a, b, referee, seed),
            (Subject::Program(p), Protocol::WitnessDet | Protocol::WitnessStoch) => {
                run_witness(self.protocol.witness_mode().unwrap(), p, x, o, a, b, referee, seed)
            }
            (Subject::Program(p), _) => run_crossexam(p, x, o, a, b, referee, seed),
        }
    }
}

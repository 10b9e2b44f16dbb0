use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::SampleMode;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    PaperFaithful,
    /// Smaller constants for quick runs. The 3/5 and 2/5 guarantees are only
    /// proven for the paper constants.
    Scaled,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" | "paper_faithful" => Ok(Mode::PaperFaithful),
            "scaled" => Ok(Mode::Scaled),
            _ => Err(Error::Config(format!("unknown mode `{s}` (expected paper or scaled)"))),
        }
    }
}

/// Constants of the stochastic protocol.
///
/// `d = ⌈c_d·K⌉`, the verifier draws `r = ⌈chernoff_coeff·d²·verifier_conf⌉`
/// samples and honest provers draw `R = ⌈chernoff_coeff·d²·ln(prover_conf_base·T)⌉`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub c_d: u64,
    pub chernoff_coeff: u64,
    pub verifier_conf: f64,
    pub prover_conf_base: f64,
    pub mode: Mode,
    pub sampling: SampleMode,
    /// Skips the verifier's final consistency checks. Only for self-tests of
    /// the exhaustive checker.
    pub broken_verifier: bool,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self::paper()
    }
}

impl ProtocolParams {
    pub fn paper() -> Self {
        Self {
            c_d: 150,
            chernoff_coeff: 192,
            verifier_conf: 100f64.ln(),
            prover_conf_base: 100.0,
            mode: Mode::PaperFaithful,
            sampling: SampleMode::Binomial,
            broken_verifier: false,
        }
    }

    pub fn scaled() -> Self {
        Self { c_d: 10, mode: Mode::Scaled, ..Self::paper() }
    }

    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::PaperFaithful => Self::paper(),
            Mode::Scaled => Self::scaled(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_d == 0 || self.chernoff_coeff == 0 {
            return Err(Error::InvalidParams("c_d and chernoff_coeff must be positive".into()));
        }
        if !(self.verifier_conf > 0.0 && self.verifier_conf.is_finite()) {
            return Err(Error::InvalidParams("verifier_conf must be positive".into()));
        }
        if !(self.prover_conf_base > 1.0 && self.prover_conf_base.is_finite()) {
            return Err(Error::InvalidParams("prover_conf_base must exceed 1".into()));
        }
        Ok(())
    }

    /// `d = ⌈c_d·K⌉`, at least 1.
    pub fn d(&self, k: &BigRational) -> Result<u64> {
        if k.is_negative() {
            return Err(Error::InvalidParams(format!("Lipschitz constant {k} is negative")));
        }
        let v = (k * BigInt::from(self.c_d)).ceil().to_integer();
        let d = v.to_u64().ok_or_else(|| Error::InvalidParams("d does not fit in 64 bits".into()))?;
        Ok(d.max(1))
    }

    /// Verifier sample count `r`.
    pub fn r(&self, d: u64) -> u64 {
        ceil_samples(self.chernoff_coeff, d, self.verifier_conf)
    }

    /// Honest prover sample count `R` for a `T`-step program.
    pub fn big_r(&self, d: u64, t: usize) -> u64 {
        ceil_samples(self.chernoff_coeff, d, (self.prover_conf_base * t as f64).ln())
    }
}

fn ceil_samples(coeff: u64, d: u64, log: f64) -> u64 {
    let base = coeff as f64 * (d as f64) * (d as f64);
    (base * log).ceil().max(1.0) as u64
}

/// `1/(k·d)` as an exact rational.
pub fn inverse(k: u64, d: u64) -> BigRational {
    BigRational::new(1.into(), BigInt::from(k) * BigInt::from(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_mode_constants() {
        let p = ProtocolParams::paper();
        let d = p.d(&BigRational::from_integer(1.into())).unwrap();
        assert_eq!(d, 150);
        // 192 * 150^2 * ln 100 = 4_320_000 * 4.605170185988091 = 19_894_335.2...
        assert_eq!(p.r(150), 19_894_336);
        assert_eq!(p.d(&BigRational::new(3.into(), 2.into())).unwrap(), 225);
        assert_eq!(p.d(&BigRational::from_integer(0.into())).unwrap(), 1);
        assert!(p.big_r(150, 3) > p.r(150));
    }
}

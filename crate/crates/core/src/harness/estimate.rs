use rayon::prelude::*;
use serde::Serialize;

use crate::protocol::{Counters, DebateOutcome, Party};
use crate::rng::{label, StreamKey};
use crate::strategy::{make_adversary, AdversarySpec};

use super::arena::Arena;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Seed of trial `i` under master seed `master`; the recorded outcome seed
/// reproduces the trial on its own.
pub fn trial_seed(master: u64, i: u64) -> u64 {
    StreamKey::new(master).path(&[label::TRIAL, i]).digest()
}

/// Acceptance statistics over completed trials. Trials that failed with an
/// error are excluded from `trials` and counted in `errors`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcceptanceEstimate {
    pub a: String,
    pub b: String,
    pub trials: u64,
    pub successes: u64,
    pub errors: u64,
    pub forfeits_a: u64,
    pub forfeits_b: u64,
    pub aborts: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub counter_sums: [u64; 6],
    pub counter_max: [u64; 6],
    pub first_error: Option<String>,
}

impl AcceptanceEstimate {
    pub fn from_outcomes<'a>(a: &str, b: &str, outcomes: impl IntoIterator<Item = &'a crate::Result<DebateOutcome>>) -> Self {
        let mut e = Self {
            a: a.to_string(),
            b: b.to_string(),
            trials: 0,
            successes: 0,
            errors: 0,
            forfeits_a: 0,
            forfeits_b: 0,
            aborts: 0,
            estimate: 0.0,
            ci_lo: 0.0,
            ci_hi: 1.0,
            counter_sums: [0; 6],
            counter_max: [0; 6],
            first_error: None,
        };
        for o in outcomes {
            match o {
                Ok(o) => {
                    e.trials += 1;
                    e.successes += o.verdict as u64;
                    e.forfeits_a += (o.forfeit == Some(Party::A)) as u64;
                    e.forfeits_b += (o.forfeit == Some(Party::B)) as u64;
                    e.aborts += o.abort_round.is_some() as u64;
                    for (i, v) in o.counters.values().into_iter().enumerate() {
                        e.counter_sums[i] += v;
                        e.counter_max[i] = e.counter_max[i].max(v);
                    }
                }
                Err(err) => {
                    e.errors += 1;
                    e.first_error.get_or_insert_with(|| err.to_string());
                }
            }
        }
        if e.trials > 0 {
            e.estimate = e.successes as f64 / e.trials as f64;
        }
        (e.ci_lo, e.ci_hi) = wilson_interval(e.successes, e.trials);
        e
    }

    /// Mean of counter `i` (in [`Counters::FIELDS`] order) over completed trials.
    pub fn mean(&self, i: usize) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.counter_sums[i] as f64 / self.trials as f64
        }
    }

    pub fn counter_means(&self) -> Vec<(&'static str, f64)> {
        Counters::FIELDS.iter().enumerate().map(|(i, &f)| (f, self.mean(i))).collect()
    }
}

/// Runs `trials` debates with per-trial seeds derived from `seed`.
pub fn estimate_pair(arena: &Arena, a: &AdversarySpec, b: &AdversarySpec, trials: usize, seed: u64) -> AcceptanceEstimate {
    let (sa, sb) = (make_adversary(a), make_adversary(b));
    let outcomes: Vec<_> = (0..trials as u64)
        .into_par_iter()
        .map(|i| arena.run(&sa, &sb, trial_seed(seed, i), false))
        .collect();
    AcceptanceEstimate::from_outcomes(&a.to_string(), &b.to_string(), &outcomes)
}

/// One sweep: each adversary plays `side` against the honest prover.
#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub side: Party,
    pub rows: Vec<AcceptanceEstimate>,
}

impl SweepReport {
    /// Highest acceptance over the family (the soundness figure).
    pub fn max(&self) -> Option<&AcceptanceEstimate> {
        self.rows.iter().max_by(|x, y| x.estimate.total_cmp(&y.estimate))
    }

    /// Lowest acceptance over the family (the completeness figure).
    pub fn min(&self) -> Option<&AcceptanceEstimate> {
        self.rows.iter().min_by(|x, y| x.estimate.total_cmp(&y.estimate))
    }
}

pub fn adversary_sweep(arena: &Arena, family: &[AdversarySpec], side: Party, trials: usize, seed: u64) -> SweepReport {
    let honest = AdversarySpec::Honest;
    let rows = family
        .iter()
        .map(|adv| match side {
            Party::A => estimate_pair(arena, adv, &honest, trials, seed),
            Party::B => estimate_pair(arena, &honest, adv, trials, seed),
        })
        .collect();
    SweepReport { side, rows }
}

/// Payoffs of the debate game: entry `(i, j)` is A's payoff, the acceptance
/// probability of row strategy `i` against column strategy `j`.
#[derive(Clone, Debug, Serialize)]
pub struct PayoffMatrix {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub cells: Vec<Vec<AcceptanceEstimate>>,
    /// For each column, the row maximizing A's payoff.
    pub best_a: Vec<usize>,
    /// For each row, the column maximizing B's payoff.
    pub best_b: Vec<usize>,
}

impl PayoffMatrix {
    pub fn payoff_a(&self, i: usize, j: usize) -> f64 {
        self.cells[i][j].estimate
    }

    pub fn payoff_b(&self, i: usize, j: usize) -> f64 {
        1.0 - self.cells[i][j].estimate
    }
}

pub fn payoff_matrix(arena: &Arena, a: &[AdversarySpec], b: &[AdversarySpec], trials: usize, seed: u64) -> PayoffMatrix {
    let cells: Vec<Vec<_>> = a.iter().map(|sa| b.iter().map(|sb| estimate_pair(arena, sa, sb, trials, seed)).collect()).collect();
    let argmax = |it: &mut dyn Iterator<Item = f64>| {
        it.enumerate().fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best }).0
    };
    let best_a = (0..b.len()).map(|j| argmax(&mut (0..a.len()).map(|i| cells[i][j].estimate))).collect();
    let best_b = (0..a.len()).map(|i| argmax(&mut cells[i].iter().map(|c| 1.0 - c.estimate))).collect();
    PayoffMatrix {
        a: a.iter().map(ToString::to_string).collect(),
        b: b.iter().map(ToString::to_string).collect(),
        cells,
        best_a,
        best_b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.2775).abs() < 1e-4, "{hi}");
        let (lo, hi) = wilson_interval(10, 10);
        assert_eq!(hi, 1.0);
        assert!((lo - 0.7225).abs() < 1e-4, "{lo}");
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-4 && (hi - 0.5962).abs() < 1e-4, "{lo} {hi}");
    }

    #[test]
    fn trial_seeds_are_distinct() {
        let s: std::collections::BTreeSet<u64> = (0..1000).map(|i| trial_seed(5, i)).collect();
        assert_eq!(s.len(), 1000);
    }
}

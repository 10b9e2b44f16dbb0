//! Monte-Carlo and exhaustive experiments over debates.
//!
//! Every command is a function of an [`ExperimentConfig`] and returns a
//! [`Report`]: text for the terminal, files for the output directory and a
//! pass/fail flag. Trials run in parallel with per-trial seeds, and results
//! are aggregated in trial order, so equal configs give byte-identical files.

mod arena;
pub mod config;
mod estimate;
pub mod exhaustive;
pub mod families;
pub mod report;

use std::fmt::Write as _;
use std::path::Path;

use serde_json::json;

pub use arena::Arena;
pub use config::{ExperimentConfig, MachineSet, Overrides, Protocol};
pub use estimate::{adversary_sweep, estimate_pair, payoff_matrix, trial_seed, wilson_interval, AcceptanceEstimate, PayoffMatrix, SweepReport, Z95};
pub use exhaustive::{exhaustive_soundness_check, stock_catalogue, two_state_catalogue, Counterexample, ExhaustiveReport};

use crate::error::{Error, Result};
use crate::machine::format::Model;
use crate::oracle::estimate_lipschitz;
use crate::strategy::{make_adversary, AdversarySpec};

/// Output of one command.
#[derive(Clone, Debug, Default)]
pub struct Report {
    /// Human-readable summary for standard output.
    pub summary: String,
    /// `(file name, contents)` for the output directory.
    pub files: Vec<(String, String)>,
    /// An expectation, budget or soundness check failed.
    pub failed: bool,
}

impl Report {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, contents) in &self.files {
            std::fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}

/// Acceptance of `cfg.a` against `cfg.b` over `cfg.trials` trials.
pub fn estimate_acceptance(cfg: &ExperimentConfig) -> Result<AcceptanceEstimate> {
    let arena = Arena::from_config(cfg)?;
    Ok(estimate_pair(&arena, &cfg.a, &cfg.b, cfg.trials, cfg.seed))
}

/// The configured sweep family, with the built-in family appended on request.
pub fn sweep_family(cfg: &ExperimentConfig, arena: &Arena) -> Vec<AdversarySpec> {
    let mut family = cfg.family.clone();
    if cfg.family_auto {
        let witness_len = arena.program().map_or(0, |p| p.input_len().saturating_sub(arena.input().len()));
        family.extend(families::default_family(cfg.protocol, arena.machine(), arena.program(), witness_len, cfg.sweep_side));
    }
    family
}

fn expectation_failures(cfg: &ExperimentConfig, lo: f64, hi: f64) -> Vec<String> {
    let mut out = Vec::new();
    if let Some(min) = cfg.expect_min {
        if lo < min {
            out.push(format!("Wilson lower bound {lo:.4} is below expect_min {min}"));
        }
    }
    if let Some(max) = cfg.expect_max {
        if hi > max {
            out.push(format!("Wilson upper bound {hi:.4} is above expect_max {max}"));
        }
    }
    out
}

fn describe(e: &AcceptanceEstimate) -> String {
    let mut s = format!(
        "A=[{}] B=[{}] accepted {}/{} = {:.4} (95% CI {:.4}..{:.4})",
        e.a, e.b, e.successes, e.trials, e.estimate, e.ci_lo, e.ci_hi
    );
    if e.forfeits_a + e.forfeits_b > 0 {
        let _ = write!(s, " forfeits A={} B={}", e.forfeits_a, e.forfeits_b);
    }
    if e.errors > 0 {
        let _ = write!(s, " errors={} ({})", e.errors, e.first_error.as_deref().unwrap_or(""));
    }
    s
}

pub fn run_debate_command(cfg: &ExperimentConfig) -> Result<Report> {
    let arena = Arena::from_config(cfg)?;
    let (a, b) = (make_adversary(&cfg.a), make_adversary(&cfg.b));
    let outcome = arena.run(&a, &b, cfg.seed, true)?;
    let record = outcome.to_record();
    let mut summary = format!("{record}\nverdict {}\n", outcome.verdict as u8);
    if cfg.trace {
        summary.push_str(&outcome.trace());
    }
    let doc = json!({ "command": "run-debate", "config": report::config_json(cfg), "outcome": outcome });
    Ok(Report {
        summary,
        files: vec![
            ("outcome.txt".into(), format!("{record}\n")),
            ("trace.txt".into(), outcome.trace()),
            ("run-debate.json".into(), report::to_text(&doc)),
        ],
        failed: false,
    })
}

pub fn experiment_command(cfg: &ExperimentConfig) -> Result<Report> {
    let e = estimate_acceptance(cfg)?;
    let failures = expectation_failures(cfg, e.ci_lo, e.ci_hi);
    let mut summary = describe(&e) + "\n";
    for f in &failures {
        let _ = writeln!(summary, "FAIL: {f}");
    }
    let doc = json!({ "command": "experiment", "config": report::config_json(cfg), "estimate": report::estimate_json(&e) });
    Ok(Report {
        summary,
        files: vec![
            ("experiment.csv".into(), report::estimates_csv(std::slice::from_ref(&e))),
            ("experiment.json".into(), report::to_text(&doc)),
        ],
        failed: !failures.is_empty(),
    })
}

pub fn sweep_command(cfg: &ExperimentConfig) -> Result<Report> {
    let arena = Arena::from_config(cfg)?;
    let family = sweep_family(cfg, &arena);
    let sweep = adversary_sweep(&arena, &family, cfg.sweep_side, cfg.trials, cfg.seed);
    let mut summary = String::new();
    for e in &sweep.rows {
        let _ = writeln!(summary, "{}", describe(e));
    }
    let mut failures = Vec::new();
    match (sweep.max(), sweep.min()) {
        (Some(max), Some(min)) => {
            let _ = writeln!(summary, "family of {}: max {:.4} (A=[{}] B=[{}]), min {:.4}", sweep.rows.len(), max.estimate, max.a, max.b, min.estimate);
            if cfg.expect_min.is_some() {
                failures.extend(expectation_failures(&ExperimentConfig { expect_max: None, ..cfg.clone() }, min.ci_lo, min.ci_hi));
            }
            if cfg.expect_max.is_some() {
                failures.extend(expectation_failures(&ExperimentConfig { expect_min: None, ..cfg.clone() }, max.ci_lo, max.ci_hi));
            }
        }
        _ => summary.push_str("empty family\n"),
    }
    for f in &failures {
        let _ = writeln!(summary, "FAIL: {f}");
    }
    Ok(Report {
        summary,
        files: vec![
            ("sweep.csv".into(), report::estimates_csv(&sweep.rows)),
            ("sweep.json".into(), report::to_text(&report::sweep_json(cfg, &sweep))),
        ],
        failed: !failures.is_empty(),
    })
}

pub fn matrix_command(cfg: &ExperimentConfig) -> Result<Report> {
    let arena = Arena::from_config(cfg)?;
    let rows = if cfg.matrix_a.is_empty() { vec![cfg.a.clone()] } else { cfg.matrix_a.clone() };
    let cols = if cfg.matrix_b.is_empty() { vec![cfg.b.clone()] } else { cfg.matrix_b.clone() };
    let m = payoff_matrix(&arena, &rows, &cols, cfg.trials, cfg.seed);
    let mut summary = String::from("payoff to A (rows A, columns B)\n");
    for (i, r) in m.cells.iter().enumerate() {
        let cells: Vec<String> = r.iter().map(|e| format!("{:.4}", e.estimate)).collect();
        let _ = writeln!(summary, "{:>3} [{}] {}", i, m.a[i], cells.join(" "));
    }
    for (j, name) in m.b.iter().enumerate() {
        let _ = writeln!(summary, "col {j} = [{name}], best response of A: row {}", m.best_a[j]);
    }
    Ok(Report {
        summary,
        files: vec![
            ("matrix.csv".into(), report::matrix_csv(&m)),
            ("matrix.json".into(), report::to_text(&report::matrix_json(cfg, &m))),
        ],
        failed: false,
    })
}

/// Certifies the declared Lipschitz constant against the estimate.
pub fn lipschitz_command(cfg: &ExperimentConfig) -> Result<Report> {
    let program = match cfg.model()? {
        Model::Program(p) => p.clone(),
        Model::Machine(m) => crate::machine::compile_vm_trace(m, &cfg.input)?,
    };
    let oracle = cfg.oracle()?;
    let k = estimate_lipschitz(&program, &oracle, &cfg.delta)?;
    let declared = program.lipschitz().map(|k| num_traits::ToPrimitive::to_f64(k).unwrap_or(f64::INFINITY));
    let failed = declared.is_some_and(|d| k > d + 1e-12);
    let mut summary = format!("{}: estimated K = {k} at delta = {}", program.name, cfg.delta);
    match declared {
        Some(d) => {
            let _ = write!(summary, ", declared K = {d} ({})", if failed { "exceeded" } else { "certified" });
        }
        None => summary.push_str(", no declared K"),
    }
    summary.push('\n');
    let declared_text = declared.map_or(String::new(), |d| d.to_string());
    let csv = format!("program,delta,estimate,declared,certified\n{},{},{k},{declared_text},{}\n", program.name, cfg.delta, !failed);
    let doc = json!({
        "command": "lipschitz",
        "config": report::config_json(cfg),
        "program": program.name,
        "delta": cfg.delta.to_string(),
        "estimate": k,
        "declared": declared,
        "certified": !failed,
    });
    Ok(Report {
        summary,
        files: vec![("lipschitz.csv".into(), csv), ("lipschitz.json".into(), report::to_text(&doc))],
        failed,
    })
}

/// The machines `check-exhaustive` enumerates: a configured machine, or the
/// selected built-in set.
pub fn exhaustive_machines(cfg: &ExperimentConfig) -> Result<Vec<crate::machine::ConfigurationMachine>> {
    match &cfg.model {
        Some(Model::Machine(m)) => Ok(vec![m.clone()]),
        Some(Model::Program(p)) => Err(Error::Config(format!("check-exhaustive needs configuration machines; `{}` is a step program", p.name))),
        None => Ok(match cfg.machines {
            MachineSet::Catalogue => stock_catalogue(),
            MachineSet::TwoState => two_state_catalogue(),
            MachineSet::All => {
                let mut v = stock_catalogue();
                v.extend(two_state_catalogue());
                v
            }
        }),
    }
}

pub fn check_exhaustive_command(cfg: &ExperimentConfig) -> Result<Report> {
    let machines = exhaustive_machines(cfg)?;
    let r = exhaustive_soundness_check(&machines, &cfg.params, cfg.seed)?;
    let mut summary = format!(
        "{} machines, {} cases, {} debates, {} cases without a fixed trace, max verifier queries {}: {} counterexample(s)\n",
        r.machines, r.cases, r.debates, r.crossexam_skipped, r.max_verifier_queries, r.counterexample_count
    );
    let mut details = String::new();
    for c in &r.counterexamples {
        let _ = writeln!(summary, "counterexample: {c} (seed {})", c.seed);
        let _ = writeln!(details, "# {c}\n# seed {}\n{}\n{}", c.seed, c.record, c.trace);
    }
    let doc = json!({ "command": "check-exhaustive", "config": report::config_json(cfg), "report": r });
    Ok(Report {
        summary,
        files: vec![
            ("exhaustive.csv".into(), report::exhaustive_csv(&r)),
            ("exhaustive.json".into(), report::to_text(&doc)),
            ("counterexamples.txt".into(), details),
        ],
        failed: !r.is_sound(),
    })
}

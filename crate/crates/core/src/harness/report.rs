//! CSV tables and JSON documents for experiment results.

use serde_json::{json, Value};

use crate::protocol::Counters;

use super::config::ExperimentConfig;
use super::estimate::{AcceptanceEstimate, PayoffMatrix, SweepReport};
use super::exhaustive::ExhaustiveReport;

fn table(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("fields are UTF-8")
}

/// Column names of an estimate row, after any leading key columns.
pub fn estimate_header() -> Vec<String> {
    let mut h: Vec<String> = ["a", "b", "trials", "successes", "errors", "forfeits_a", "forfeits_b", "aborts", "estimate", "ci_lo", "ci_hi"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend(Counters::FIELDS.iter().map(|f| format!("mean_{f}")));
    h.extend(Counters::FIELDS.iter().map(|f| format!("max_{f}")));
    h
}

pub fn estimate_cells(e: &AcceptanceEstimate) -> Vec<String> {
    let mut c = vec![
        e.a.clone(),
        e.b.clone(),
        e.trials.to_string(),
        e.successes.to_string(),
        e.errors.to_string(),
        e.forfeits_a.to_string(),
        e.forfeits_b.to_string(),
        e.aborts.to_string(),
        e.estimate.to_string(),
        e.ci_lo.to_string(),
        e.ci_hi.to_string(),
    ];
    c.extend((0..6).map(|i| e.mean(i).to_string()));
    c.extend(e.counter_max.iter().map(u64::to_string));
    c
}

pub fn estimates_csv(rows: &[AcceptanceEstimate]) -> String {
    table(&estimate_header(), rows.iter().map(estimate_cells))
}

pub fn matrix_csv(m: &PayoffMatrix) -> String {
    let mut header = vec!["row".to_string(), "col".to_string()];
    header.extend(estimate_header());
    header.extend(["payoff_a", "payoff_b", "best_response_a", "best_response_b"].map(String::from));
    let rows = m.cells.iter().enumerate().flat_map(|(i, cells)| {
        cells.iter().enumerate().map(move |(j, e)| {
            let mut c = vec![i.to_string(), j.to_string()];
            c.extend(estimate_cells(e));
            c.push(m.payoff_a(i, j).to_string());
            c.push(m.payoff_b(i, j).to_string());
            c.push((m.best_a[j] == i).to_string());
            c.push((m.best_b[i] == j).to_string());
            c
        })
    });
    table(&header, rows)
}

pub fn exhaustive_csv(r: &ExhaustiveReport) -> String {
    let header = ["machines", "cases", "debates", "crossexam_skipped", "max_verifier_queries", "counterexamples"].map(String::from);
    let row = vec![
        r.machines.to_string(),
        r.cases.to_string(),
        r.debates.to_string(),
        r.crossexam_skipped.to_string(),
        r.max_verifier_queries.to_string(),
        r.counterexample_count.to_string(),
    ];
    table(&header, [row])
}

pub fn estimate_json(e: &AcceptanceEstimate) -> Value {
    let means: serde_json::Map<String, Value> = e.counter_means().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let max: serde_json::Map<String, Value> = Counters::FIELDS.iter().zip(e.counter_max).map(|(k, v)| (k.to_string(), json!(v))).collect();
    json!({
        "a": e.a,
        "b": e.b,
        "trials": e.trials,
        "successes": e.successes,
        "errors": e.errors,
        "forfeits_a": e.forfeits_a,
        "forfeits_b": e.forfeits_b,
        "aborts": e.aborts,
        "estimate": e.estimate,
        "ci_lo": e.ci_lo,
        "ci_hi": e.ci_hi,
        "counter_means": means,
        "counter_max": max,
        "first_error": e.first_error,
    })
}

pub fn config_json(cfg: &ExperimentConfig) -> Value {
    json!({
        "protocol": cfg.protocol.name(),
        "machine": cfg.machine_ref,
        "oracle": cfg.oracle_ref,
        "input": cfg.input.to_string(),
        "seed": cfg.seed,
        "trials": cfg.trials,
        "params": cfg.params,
        "a": cfg.a.to_string(),
        "b": cfg.b.to_string(),
    })
}

pub fn sweep_json(cfg: &ExperimentConfig, s: &SweepReport) -> Value {
    json!({
        "command": "sweep",
        "config": config_json(cfg),
        "side": s.side.to_string(),
        "rows": s.rows.iter().map(estimate_json).collect::<Vec<_>>(),
        "max": s.max().map(estimate_json),
        "min": s.min().map(estimate_json),
    })
}

pub fn matrix_json(cfg: &ExperimentConfig, m: &PayoffMatrix) -> Value {
    json!({
        "command": "matrix",
        "config": config_json(cfg),
        "a": m.a,
        "b": m.b,
        "payoff_a": m.cells.iter().map(|r| r.iter().map(|e| e.estimate).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "payoff_b": (0..m.a.len()).map(|i| (0..m.b.len()).map(|j| m.payoff_b(i, j)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "best_response_a": m.best_a,
        "best_response_b": m.best_b,
        "cells": m.cells.iter().map(|r| r.iter().map(estimate_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

/// Pretty JSON with a trailing newline.
pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values built from plain data serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_when_needed() {
        let t = table(&["x".into(), "y".into()], [vec!["plain".into(), "a,b".into()]]);
        assert_eq!(t, "x,y\nplain,\"a,b\"\n");
    }

    #[test]
    fn header_matches_cells() {
        let e = AcceptanceEstimate::from_outcomes("Honest", "Honest", std::iter::empty());
        assert_eq!(estimate_header().len(), estimate_cells(&e).len());
    }
}

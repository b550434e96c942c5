//! Experiment runner behind the CLI: builds topologies, runs algorithms and
//! the oracle, and renders comparison rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::algorithms::{
    highest_degree_first_broadcast, multicore_gather, multicore_greedy_broadcast, AlgorithmId,
};
use crate::model::{run_schedule, ModelKind, Problem, ProblemKind, ValidationReport};
use crate::search::{
    optimal_rounds_with, SearchBudget, SearchOptions, SearchOutcome, SearchResult,
};
use crate::topology::{
    gen_complete, gen_overlap_family, gen_random, gen_star, ClusterTopology, ProcessRef,
};

pub const EXIT_OK: i32 = 0;
/// Invalid or incomplete schedule, or a claim that did not reproduce.
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("bad generator `{spec}`: {message}")]
    Generator { spec: String, message: String },
    #[error("{0}")]
    Config(String),
}

/// A named topology generator with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    Complete {
        machines: usize,
        procs: usize,
        nics: usize,
    },
    Star {
        center_procs: usize,
        center_nics: usize,
        leaves: usize,
    },
    Overlap {
        k: usize,
    },
    Random {
        machines: usize,
        max_procs: usize,
        max_nics: usize,
        p: f64,
    },
}

impl GeneratorSpec {
    pub fn build(&self, seed: u64) -> ClusterTopology {
        match *self {
            GeneratorSpec::Complete {
                machines,
                procs,
                nics,
            } => gen_complete(machines, procs, nics),
            GeneratorSpec::Star {
                center_procs,
                center_nics,
                leaves,
            } => gen_star(center_procs, center_nics, leaves),
            GeneratorSpec::Overlap { k } => gen_overlap_family(k),
            GeneratorSpec::Random {
                machines,
                max_procs,
                max_nics,
                p,
            } => gen_random(machines, max_procs, max_nics, p, seed),
        }
    }

    pub fn label(&self, seed: u64) -> String {
        match *self {
            GeneratorSpec::Complete {
                machines,
                procs,
                nics,
            } => format!("complete({machines},{procs},{nics})"),
            GeneratorSpec::Star {
                center_procs,
                center_nics,
                leaves,
            } => format!("star({center_procs},{center_nics},{leaves})"),
            GeneratorSpec::Overlap { k } => format!("overlap({k})"),
            GeneratorSpec::Random {
                machines,
                max_procs,
                max_nics,
                p,
            } => format!("random({machines},{max_procs},{max_nics},{p};seed={seed})"),
        }
    }
}

impl FromStr for GeneratorSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |message: &str| HarnessError::Generator {
            spec: s.to_string(),
            message: message.to_string(),
        };
        let (name, args) = s
            .split_once(':')
            .ok_or_else(|| bad("expected <name>:<args>"))?;
        let parts: Vec<&str> = args.split(',').map(str::trim).collect();
        let int = |i: usize| -> Result<usize, HarnessError> {
            let v: usize = parts
                .get(i)
                .ok_or_else(|| bad("too few arguments"))?
                .parse()
                .map_err(|_| bad("arguments must be positive integers"))?;
            if v == 0 {
                return Err(bad("arguments must be positive integers"));
            }
            Ok(v)
        };
        let arity = |n: usize| {
            if parts.len() == n {
                Ok(())
            } else {
                Err(bad(&format!("expected {n} arguments")))
            }
        };
        match name {
            "complete" => {
                arity(3)?;
                Ok(GeneratorSpec::Complete {
                    machines: int(0)?,
                    procs: int(1)?,
                    nics: int(2)?,
                })
            }
            "star" => {
                arity(3)?;
                Ok(GeneratorSpec::Star {
                    center_procs: int(0)?,
                    center_nics: int(1)?,
                    leaves: int(2)?,
                })
            }
            "overlap" => {
                arity(1)?;
                Ok(GeneratorSpec::Overlap { k: int(0)? })
            }
            "random" => {
                arity(4)?;
                let p: f64 = parts[3]
                    .parse()
                    .map_err(|_| bad("edge probability must be a number"))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(bad("edge probability must lie in [0, 1]"));
                }
                Ok(GeneratorSpec::Random {
                    machines: int(0)?,
                    max_procs: int(1)?,
                    max_nics: int(2)?,
                    p,
                })
            }
            _ => Err(bad("unknown generator (complete, star, overlap, random)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub label: String,
    pub topology: ClusterTopology,
    /// When set, every algorithm must solve this problem kind.
    pub problem: Option<ProblemKind>,
    pub root: ProcessRef,
    pub algorithms: Vec<AlgorithmId>,
    /// Models to evaluate each algorithm under; empty means the model each
    /// algorithm targets.
    pub models: Vec<ModelKind>,
    pub oracle: Option<SearchBudget>,
    pub parallel: bool,
}

impl ExperimentConfig {
    pub fn check(&self) -> Result<(), HarnessError> {
        if self.algorithms.is_empty() && self.oracle.is_none() {
            return Err(HarnessError::Config(
                "enable at least one algorithm or the oracle".into(),
            ));
        }
        if self.algorithms.is_empty() && self.problem.is_none() {
            return Err(HarnessError::Config(
                "an oracle-only run needs --problem".into(),
            ));
        }
        if let Some(kind) = self.problem {
            for a in &self.algorithms {
                if a.problem_kind() != kind {
                    return Err(HarnessError::Config(format!(
                        "algorithm {a} does not solve {kind}"
                    )));
                }
            }
        }
        if !self.topology.contains_process(self.root) {
            return Err(HarnessError::Config(format!(
                "root {} is not in the topology",
                self.root
            )));
        }
        Ok(())
    }

    fn problem_for(&self, kind: ProblemKind) -> Problem {
        Problem::of_kind(kind, self.root)
    }
}

/// One line of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub topology: String,
    pub algorithm: String,
    pub problem: String,
    pub model: String,
    pub rounds: Option<usize>,
    pub external_messages: usize,
    pub valid: bool,
    pub completed: bool,
    pub oracle_rounds: Option<usize>,
    pub gap: Option<i64>,
    /// Construction failure or oracle budget note.
    pub note: Option<String>,
}

impl ComparisonRow {
    pub fn ok(&self) -> bool {
        self.valid && self.completed
    }
}

fn oracle_note(r: &SearchResult) -> Option<String> {
    match r.outcome {
        SearchOutcome::Optimal(_) => None,
        SearchOutcome::BudgetExhausted(limit) => Some(format!("oracle budget exhausted ({limit})")),
        SearchOutcome::Infeasible => Some("oracle: infeasible".into()),
    }
}

/// Runs every (algorithm, model) pair and, if enabled, the oracle for each
/// distinct (problem, model). Row order follows the configuration.
pub fn cmd_run(config: &ExperimentConfig) -> Result<Vec<ComparisonRow>, HarnessError> {
    config.check()?;
    let mut jobs: Vec<(Option<AlgorithmId>, ProblemKind, ModelKind)> = Vec::new();
    for &a in &config.algorithms {
        let models = if config.models.is_empty() {
            vec![a.model()]
        } else {
            config.models.clone()
        };
        for m in models {
            jobs.push((Some(a), a.problem_kind(), m));
        }
    }
    if config.algorithms.is_empty() {
        let kind = config.problem.expect("checked");
        let models = if config.models.is_empty() {
            vec![ModelKind::ExtendedMulticore]
        } else {
            config.models.clone()
        };
        for m in models {
            jobs.push((None, kind, m));
        }
    }

    let mut oracle: BTreeMap<(String, String), SearchResult> = BTreeMap::new();
    if let Some(budget) = config.oracle {
        let mut pairs: Vec<(ProblemKind, ModelKind)> = Vec::new();
        for &(_, k, m) in &jobs {
            if !pairs.contains(&(k, m)) {
                pairs.push((k, m));
            }
        }
        let options = SearchOptions {
            parallel: config.parallel,
            ..SearchOptions::default()
        };
        let results: Vec<SearchResult> = pairs
            .iter()
            .map(|&(k, m)| {
                optimal_rounds_with(&config.topology, &config.problem_for(k), m, budget, options)
                    .map_err(|e| HarnessError::Config(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        for ((k, m), r) in pairs.into_iter().zip(results) {
            oracle.insert((k.to_string(), m.to_string()), r);
        }
    }

    let run_job = |&(alg, kind, model): &(Option<AlgorithmId>, ProblemKind, ModelKind)| {
        let problem = config.problem_for(kind);
        let oracle_result = oracle.get(&(kind.to_string(), model.to_string()));
        let oracle_rounds = oracle_result.and_then(SearchResult::optimal_rounds);
        let mut row = ComparisonRow {
            topology: config.label.clone(),
            algorithm: alg.map_or("oracle".into(), |a| a.name().to_string()),
            problem: kind.to_string(),
            model: model.to_string(),
            rounds: None,
            external_messages: 0,
            valid: false,
            completed: false,
            oracle_rounds,
            gap: None,
            note: oracle_result.and_then(oracle_note),
        };
        let Some(alg) = alg else {
            if let Some(w) = oracle_result.and_then(|r| r.witness.as_ref()) {
                let report = run_schedule(&config.topology, &problem, w, model);
                fill(&mut row, &report);
            }
            return row;
        };
        match alg.construct(&config.topology, config.root) {
            Ok(schedule) => {
                let report = run_schedule(&config.topology, &problem, &schedule, model);
                fill(&mut row, &report);
            }
            Err(e) => row.note = Some(format!("construction failed: {e}")),
        }
        row
    };
    let rows = if config.parallel {
        jobs.par_iter().map(run_job).collect()
    } else {
        jobs.iter().map(run_job).collect()
    };
    Ok(rows)
}

fn fill(row: &mut ComparisonRow, report: &ValidationReport) {
    row.valid = report.valid;
    row.completed = report.completed;
    row.external_messages = report.external_messages;
    if report.ok() {
        row.rounds = Some(report.rounds_used);
        row.gap = row
            .oracle_rounds
            .map(|o| report.rounds_used as i64 - o as i64);
    }
}

pub fn rows_exit_code(rows: &[ComparisonRow]) -> i32 {
    if rows.iter().all(ComparisonRow::ok) {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "-".to_string(), |x| x.to_string())
}

pub fn format_rows_human(rows: &[ComparisonRow]) -> String {
    let header = [
        "topology",
        "algorithm",
        "problem",
        "model",
        "rounds",
        "msgs",
        "valid",
        "completed",
        "oracle",
        "gap",
        "note",
    ];
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.topology.clone(),
                r.algorithm.clone(),
                r.problem.clone(),
                r.model.clone(),
                opt(r.rounds),
                r.external_messages.to_string(),
                r.valid.to_string(),
                r.completed.to_string(),
                opt(r.oracle_rounds),
                opt(r.gap),
                r.note.clone().unwrap_or_default(),
            ]
        })
        .collect();
    table(&header, &cells)
}

fn table(header: &[&str], cells: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |row: Vec<&str>| {
        let padded: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(header.to_vec());
    for row in cells {
        line(row.iter().map(String::as_str).collect());
    }
    out
}

/// One JSON object per line.
pub fn format_records<T: Serialize>(rows: &[T]) -> String {
    rows.iter()
        .map(|r| serde_json::to_string(r).expect("rows serialize") + "\n")
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchRecord {
    pub outcome: String,
    pub optimal_rounds: Option<usize>,
    pub states_explored: usize,
}

impl From<&SearchResult> for SearchRecord {
    fn from(r: &SearchResult) -> Self {
        SearchRecord {
            outcome: match r.outcome {
                SearchOutcome::Optimal(_) => "optimal".into(),
                SearchOutcome::BudgetExhausted(limit) => format!("budget-exhausted:{limit}"),
                SearchOutcome::Infeasible => "infeasible".into(),
            },
            optimal_rounds: r.optimal_rounds(),
            states_explored: r.states_explored,
        }
    }
}

pub fn format_search_human(r: &SearchResult) -> String {
    let rec = SearchRecord::from(r);
    format!(
        "outcome={}\noptimal_rounds={}\nstates_explored={}\n",
        rec.outcome,
        opt(rec.optimal_rounds),
        rec.states_explored
    )
}

pub fn search_exit_code(r: &SearchResult) -> i32 {
    match r.outcome {
        SearchOutcome::Optimal(_) => EXIT_OK,
        SearchOutcome::BudgetExhausted(_) => EXIT_BUDGET,
        SearchOutcome::Infeasible => EXIT_FAILED,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymmetryRow {
    pub n: usize,
    pub broadcast_oracle: Option<usize>,
    pub gather_oracle: Option<usize>,
    pub multicore_gather: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OverlapRow {
    pub k: usize,
    pub hdf: Option<usize>,
    pub greedy: Option<usize>,
    pub oracle: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoReport {
    pub asymmetry: Vec<AsymmetryRow>,
    pub overlap: Vec<OverlapRow>,
    pub asymmetry_reproduced: bool,
    pub heuristic_failure_reproduced: bool,
}

impl DemoReport {
    pub fn ok(&self) -> bool {
        self.asymmetry_reproduced && self.heuristic_failure_reproduced
    }

    pub fn to_human(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "broadcast/gather asymmetry: extended model, star(n,n,n), root 0,0"
        );
        let cells: Vec<Vec<String>> = self
            .asymmetry
            .iter()
            .map(|r| {
                vec![
                    r.n.to_string(),
                    opt(r.broadcast_oracle),
                    opt(r.gather_oracle),
                    opt(r.multicore_gather),
                ]
            })
            .collect();
        out += &table(
            &["n", "broadcast-oracle", "gather-oracle", "multicore-gather"],
            &cells,
        );
        let _ = writeln!(
            out,
            "claim gather > broadcast for every n: {}",
            verdict(self.asymmetry_reproduced)
        );
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "degree heuristic: extended model, overlap(k) broadcast, root 0,0"
        );
        let cells: Vec<Vec<String>> = self
            .overlap
            .iter()
            .map(|r| vec![r.k.to_string(), opt(r.hdf), opt(r.greedy), opt(r.oracle)])
            .collect();
        out += &table(
            &["k", "highest-degree-first", "multicore-greedy", "oracle"],
            &cells,
        );
        let _ = writeln!(
            out,
            "claim highest-degree-first > oracle for some k: {}",
            verdict(self.heuristic_failure_reproduced)
        );
        out
    }

    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for r in &self.asymmetry {
            let mut v = serde_json::to_value(r).expect("serializable");
            v["table"] = "asymmetry".into();
            out += &(v.to_string() + "\n");
        }
        for r in &self.overlap {
            let mut v = serde_json::to_value(r).expect("serializable");
            v["table"] = "overlap".into();
            out += &(v.to_string() + "\n");
        }
        let summary = serde_json::json!({
            "table": "claims",
            "asymmetry_reproduced": self.asymmetry_reproduced,
            "heuristic_failure_reproduced": self.heuristic_failure_reproduced,
        });
        out + &summary.to_string() + "\n"
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "reproduced"
    } else {
        "NOT reproduced"
    }
}

fn rounds_if_ok(
    t: &ClusterTopology,
    p: &Problem,
    s: Option<crate::model::Schedule>,
) -> Option<usize> {
    let report = run_schedule(t, p, &s?, ModelKind::ExtendedMulticore);
    report.ok().then_some(report.rounds_used)
}

fn oracle_rounds(t: &ClusterTopology, p: &Problem) -> Option<usize> {
    optimal_rounds_with(
        t,
        p,
        ModelKind::ExtendedMulticore,
        SearchBudget::default(),
        SearchOptions::default(),
    )
    .ok()?
    .optimal_rounds()
}

/// Reproduces the two qualitative claims on the star and overlap families.
pub fn cmd_demo_claims() -> DemoReport {
    let root = ProcessRef::new(0, 0);
    let asymmetry: Vec<AsymmetryRow> = (2..=4)
        .map(|n| {
            let t = gen_star(n, n, n);
            let gather = Problem::gather(root);
            AsymmetryRow {
                n,
                broadcast_oracle: oracle_rounds(&t, &Problem::broadcast(root)),
                gather_oracle: oracle_rounds(&t, &gather),
                multicore_gather: rounds_if_ok(&t, &gather, multicore_gather(&t, root).ok()),
            }
        })
        .collect();
    let overlap: Vec<OverlapRow> = (2..=3)
        .map(|k| {
            let t = gen_overlap_family(k);
            let p = Problem::broadcast(root);
            OverlapRow {
                k,
                hdf: rounds_if_ok(&t, &p, highest_degree_first_broadcast(&t, root).ok()),
                greedy: rounds_if_ok(&t, &p, multicore_greedy_broadcast(&t, root).ok()),
                oracle: oracle_rounds(&t, &p),
            }
        })
        .collect();
    let asymmetry_reproduced =
        asymmetry
            .iter()
            .all(|r| match (r.broadcast_oracle, r.gather_oracle) {
                (Some(b), Some(g)) => g > b,
                _ => false,
            });
    let heuristic_failure_reproduced = overlap.iter().any(|r| match (r.hdf, r.oracle) {
        (Some(h), Some(o)) => h > o,
        _ => false,
    });
    DemoReport {
        asymmetry,
        overlap,
        asymmetry_reproduced,
        heuristic_failure_reproduced,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(t: ClusterTopology, algorithms: Vec<AlgorithmId>) -> ExperimentConfig {
        ExperimentConfig {
            label: "t".into(),
            topology: t,
            problem: None,
            root: ProcessRef::new(0, 0),
            algorithms,
            models: vec![],
            oracle: None,
            parallel: false,
        }
    }

    #[test]
    fn generator_specs_parse() {
        assert_eq!(
            "complete:4,2,1".parse::<GeneratorSpec>().unwrap(),
            GeneratorSpec::Complete {
                machines: 4,
                procs: 2,
                nics: 1
            }
        );
        assert!("overlap:0".parse::<GeneratorSpec>().is_err());
        assert!("star:1,2".parse::<GeneratorSpec>().is_err());
        assert!("random:3,2,2,1.5".parse::<GeneratorSpec>().is_err());
        assert!("ring:3".parse::<GeneratorSpec>().is_err());
    }

    #[test]
    fn greedy_on_star_is_one_round() {
        let rows = cmd_run(&config(
            gen_star(4, 4, 4),
            vec![AlgorithmId::MulticoreGreedyBroadcast],
        ))
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].rounds, Some(1));
        assert!(rows[0].valid);
    }

    #[test]
    fn wrong_model_gives_invalid_row() {
        let mut c = config(gen_star(2, 2, 2), vec![AlgorithmId::MulticoreGather]);
        c.models = vec![ModelKind::ClassicTelephone, ModelKind::ExtendedMulticore];
        let rows = cmd_run(&c).unwrap();
        assert!(!rows[0].valid);
        assert!(rows[1].ok());
        assert_eq!(rows_exit_code(&rows), EXIT_FAILED);
    }

    #[test]
    fn binomial_gap_is_zero() {
        let mut c = config(gen_complete(4, 1, 1), vec![AlgorithmId::BinomialBroadcast]);
        c.oracle = Some(SearchBudget::default());
        let rows = cmd_run(&c).unwrap();
        assert_eq!(rows[0].oracle_rounds, Some(2));
        assert_eq!(rows[0].gap, Some(0));
    }

    #[test]
    fn parallel_rows_keep_order() {
        let algs = vec![
            AlgorithmId::MulticoreGather,
            AlgorithmId::MulticoreGreedyBroadcast,
            AlgorithmId::HierarchicalBroadcast,
        ];
        let mut c = config(gen_complete(3, 2, 2), algs);
        c.oracle = Some(SearchBudget::default());
        let seq = cmd_run(&c).unwrap();
        c.parallel = true;
        assert_eq!(seq, cmd_run(&c).unwrap());
    }

    #[test]
    fn mismatched_problem_is_a_config_error() {
        let mut c = config(gen_star(2, 2, 2), vec![AlgorithmId::MulticoreGather]);
        c.problem = Some(ProblemKind::Broadcast);
        assert!(cmd_run(&c).is_err());
    }

    #[test]
    fn records_are_single_lines() {
        let rows = cmd_run(&config(
            gen_star(2, 2, 2),
            vec![AlgorithmId::HierarchicalBroadcast],
        ))
        .unwrap();
        let text = format_records(&rows);
        assert_eq!(text.lines().count(), 1);
        let v: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        assert_eq!(v["algorithm"], "hierarchical-broadcast");
    }

    #[test]
    fn demo_claims_reproduce() {
        let r = cmd_demo_claims();
        assert!(r.ok(), "{}", r.to_human());
    }
}

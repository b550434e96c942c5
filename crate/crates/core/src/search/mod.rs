//! Exhaustive optimal-schedule oracle for small instances.
//!
//! Breadth-first search over rounds. Each level expands every kept state by
//! all maximal useful rounds (see [`enumerate_round_actions`]); children are
//! deduplicated by canonical key and dropped when an already kept state of
//! the same or an earlier level holds a superset of their knowledge.
//!
//! Restricting to maximal rounds is safe because knowledge is monotone: any
//! action legal from a state is legal from every superset state, and adding
//! actions to a round can only grow the successor. The same argument makes
//! superset dominance sound.

mod canonical;
mod enumerate;

use std::collections::HashSet;
use std::fmt;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::model::{
    Instance, KnowledgeState, ModelError, ModelKind, Problem, RoundSchedule, Schedule,
};
use crate::topology::ClusterTopology;

pub use canonical::CanonicalKey;
use canonical::{raw_key, Canonicalizer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBudget {
    pub max_rounds: usize,
    pub max_states: usize,
    pub time_limit: Duration,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_rounds: 32,
            max_states: 2_000_000,
            time_limit: Duration::from_secs(120),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Merge states equivalent under topology and process symmetry.
    pub canonicalize: bool,
    /// Drop states whose knowledge is covered by an already kept state.
    pub dominance: bool,
    /// Expand each level on the rayon pool. Results equal the sequential run.
    pub parallel: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            canonicalize: true,
            dominance: true,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetLimit {
    Rounds,
    States,
    Time,
}

impl fmt::Display for BudgetLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BudgetLimit::Rounds => "max-rounds",
            BudgetLimit::States => "max-states",
            BudgetLimit::Time => "time-limit",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchOutcome {
    Optimal(usize),
    BudgetExhausted(BudgetLimit),
    /// No schedule completes the problem (disconnected topology).
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub outcome: SearchOutcome,
    pub witness: Option<Schedule>,
    pub states_explored: usize,
}

impl SearchResult {
    pub fn optimal_rounds(&self) -> Option<usize> {
        match self.outcome {
            SearchOutcome::Optimal(n) => Some(n),
            _ => None,
        }
    }
}

/// All maximal sets of simultaneously legal useful actions from `state`,
/// up to permutation of interchangeable processes. Returns a single empty
/// round when nothing useful can be done.
pub fn enumerate_round_actions(
    t: &ClusterTopology,
    p: &Problem,
    state: &KnowledgeState,
    model: ModelKind,
) -> Result<Vec<RoundSchedule>, ModelError> {
    let inst = Instance::new(t, p)?;
    Ok(enumerate::maximal_rounds(&inst, state, model, true))
}

/// Key invariant under twin-machine swaps and within-machine process
/// permutations that preserve the problem.
pub fn canonical_state(
    t: &ClusterTopology,
    p: &Problem,
    state: &KnowledgeState,
) -> Result<CanonicalKey, ModelError> {
    let inst = Instance::new(t, p)?;
    Ok(Canonicalizer::new(&inst).key(&inst, state))
}

pub fn optimal_rounds(
    t: &ClusterTopology,
    p: &Problem,
    model: ModelKind,
    budget: SearchBudget,
) -> Result<SearchResult, ModelError> {
    optimal_rounds_with(t, p, model, budget, SearchOptions::default())
}

struct Node {
    state: KnowledgeState,
    parent: usize,
    round: RoundSchedule,
}

pub fn optimal_rounds_with(
    t: &ClusterTopology,
    p: &Problem,
    model: ModelKind,
    budget: SearchBudget,
    options: SearchOptions,
) -> Result<SearchResult, ModelError> {
    let inst = Instance::new(t, p)?;
    Ok(Bfs::new(&inst, model, budget, options).run())
}

struct Bfs<'a> {
    inst: &'a Instance,
    model: ModelKind,
    budget: SearchBudget,
    options: SearchOptions,
    canon: Canonicalizer,
    nodes: Vec<Node>,
    seen: HashSet<CanonicalKey>,
    /// Kept keys with their popcounts; only larger keys can cover a key.
    archive: Vec<(u32, CanonicalKey)>,
}

impl<'a> Bfs<'a> {
    fn new(
        inst: &'a Instance,
        model: ModelKind,
        budget: SearchBudget,
        options: SearchOptions,
    ) -> Self {
        Bfs {
            inst,
            model,
            budget,
            options,
            canon: Canonicalizer::new(inst),
            nodes: Vec::new(),
            seen: HashSet::new(),
            archive: Vec::new(),
        }
    }

    fn key(&self, s: &KnowledgeState) -> CanonicalKey {
        if self.options.canonicalize {
            self.canon.key(self.inst, s)
        } else {
            raw_key(self.inst, s)
        }
    }

    fn dominated(&self, key: &CanonicalKey) -> bool {
        let bits = key.popcount();
        self.archive.iter().any(|(c, a)| *c > bits && a.covers(key))
    }

    fn expand(&self, idx: usize) -> Vec<(RoundSchedule, KnowledgeState)> {
        let s = &self.nodes[idx].state;
        enumerate::maximal_rounds(self.inst, s, self.model, self.options.canonicalize)
            .into_iter()
            .filter(|r| !r.actions.is_empty())
            .map(|r| {
                let next = self
                    .inst
                    .transition(s, &r, self.model)
                    .expect("enumerated rounds are legal");
                (r, next)
            })
            .collect()
    }

    fn witness(&self, mut idx: usize, last: RoundSchedule) -> Schedule {
        let mut rounds = vec![last];
        while idx != 0 {
            let node = &self.nodes[idx];
            rounds.push(node.round.clone());
            idx = node.parent;
        }
        rounds.reverse();
        Schedule::new(rounds)
    }

    fn result(&self, outcome: SearchOutcome, witness: Option<Schedule>) -> SearchResult {
        SearchResult {
            outcome,
            witness,
            states_explored: self.nodes.len(),
        }
    }

    fn run(mut self) -> SearchResult {
        let start = Instant::now();
        let init = self.inst.initial_state(self.model);
        if self.inst.is_complete(&init) {
            self.nodes.push(Node {
                state: init,
                parent: 0,
                round: RoundSchedule::default(),
            });
            return self.result(SearchOutcome::Optimal(0), Some(Schedule::default()));
        }
        let k = self.key(&init);
        self.seen.insert(k.clone());
        self.archive.push((k.popcount(), k));
        self.nodes.push(Node {
            state: init,
            parent: 0,
            round: RoundSchedule::default(),
        });
        let mut frontier = vec![0usize];
        let mut depth = 0;

        while !frontier.is_empty() {
            if depth >= self.budget.max_rounds {
                return self.result(SearchOutcome::BudgetExhausted(BudgetLimit::Rounds), None);
            }
            if start.elapsed() > self.budget.time_limit {
                return self.result(SearchOutcome::BudgetExhausted(BudgetLimit::Time), None);
            }
            let deadline = start + self.budget.time_limit;
            let expand = |&i: &usize| (Instant::now() <= deadline).then(|| self.expand(i));
            let children: Option<Vec<Vec<(RoundSchedule, KnowledgeState)>>> =
                if self.options.parallel {
                    frontier.par_iter().map(expand).collect()
                } else {
                    frontier.iter().map(expand).collect()
                };
            let Some(children) = children else {
                return self.result(SearchOutcome::BudgetExhausted(BudgetLimit::Time), None);
            };
            depth += 1;

            for (&parent, kids) in frontier.iter().zip(&children) {
                if let Some((round, _)) = kids.iter().find(|(_, s)| self.inst.is_complete(s)) {
                    let w = self.witness(parent, round.clone());
                    return self.result(SearchOutcome::Optimal(depth), Some(w));
                }
            }

            let flat: Vec<(usize, RoundSchedule, KnowledgeState)> = frontier
                .iter()
                .zip(children)
                .flat_map(|(&parent, kids)| kids.into_iter().map(move |(r, s)| (parent, r, s)))
                .collect();
            let mut keyed: Vec<(CanonicalKey, usize, RoundSchedule, KnowledgeState)> =
                if self.options.parallel {
                    flat.into_par_iter()
                        .map(|(p, r, s)| (self.key(&s), p, r, s))
                        .collect()
                } else {
                    flat.into_iter()
                        .map(|(p, r, s)| (self.key(&s), p, r, s))
                        .collect()
                };
            // Most knowledgeable first so dominators are kept before the
            // states they cover.
            keyed.sort_by_key(|(k, ..)| std::cmp::Reverse(k.popcount()));

            let mut next = Vec::new();
            for (n, (key, parent, round, state)) in keyed.into_iter().enumerate() {
                if n % 256 == 0 && Instant::now() > deadline {
                    return self.result(SearchOutcome::BudgetExhausted(BudgetLimit::Time), None);
                }
                if self.seen.contains(&key) {
                    continue;
                }
                if self.options.dominance && self.dominated(&key) {
                    continue;
                }
                if self.nodes.len() >= self.budget.max_states {
                    return self.result(SearchOutcome::BudgetExhausted(BudgetLimit::States), None);
                }
                self.seen.insert(key.clone());
                self.archive.push((key.popcount(), key));
                next.push(self.nodes.len());
                self.nodes.push(Node {
                    state,
                    parent,
                    round,
                });
            }
            frontier = next;
        }
        self.result(SearchOutcome::Infeasible, None)
    }
}

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{Action, Instance, ModelKind, Problem, Schedule, ViolationKind};
use crate::topology::ClusterTopology;

/// A violated constraint, tagged with its 1-based round number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub round: usize,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
    pub completed: bool,
    pub rounds_used: usize,
    pub external_messages: usize,
    /// Per machine, the largest fraction of its degree used in any round.
    pub max_nic_utilization: Vec<f64>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.valid && self.completed
    }

    pub fn violations_in_round(&self, round: usize) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.round == round)
    }

    /// Flat `key=value` block followed by one `violation` line per violation.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let util: Vec<String> = self
            .max_nic_utilization
            .iter()
            .map(|u| format!("{u:.3}"))
            .collect();
        let _ = writeln!(out, "valid={}", self.valid);
        let _ = writeln!(out, "completed={}", self.completed);
        let _ = writeln!(out, "rounds_used={}", self.rounds_used);
        let _ = writeln!(out, "external_messages={}", self.external_messages);
        let _ = writeln!(out, "max_nic_utilization={}", util.join(","));
        let _ = writeln!(out, "violations={}", self.violations.len());
        for v in &self.violations {
            let _ = writeln!(out, "violation round={} {}", v.round, v.kind);
        }
        out
    }
}

/// Replays `s` from the initial state. Invalid rounds are reported and
/// skipped (the state does not advance); this never fails.
pub fn run_schedule(
    t: &ClusterTopology,
    p: &Problem,
    s: &Schedule,
    model: ModelKind,
) -> ValidationReport {
    let inst = match Instance::new(t, p) {
        Ok(inst) => inst,
        Err(_) => {
            return ValidationReport {
                valid: false,
                violations: vec![Violation {
                    round: 0,
                    kind: ViolationKind::UnknownProcess(
                        p.root.unwrap_or(crate::topology::ProcessRef::new(0, 0)),
                    ),
                }],
                completed: false,
                rounds_used: s.len(),
                external_messages: s.transfer_count(),
                max_nic_utilization: vec![0.0; t.machine_count()],
            }
        }
    };
    let mut state = inst.initial_state(model);
    let mut violations = Vec::new();
    let n = t.machine_count();
    let mut utilization = vec![0.0f64; n];
    for (i, round) in s.rounds.iter().enumerate() {
        let mut touching = vec![0usize; n];
        for a in &round.actions {
            if let Action::ExternalTransfer {
                sender, receiver, ..
            } = a
            {
                if sender.machine != receiver.machine && sender.machine < n && receiver.machine < n
                {
                    touching[sender.machine] += 1;
                    touching[receiver.machine] += 1;
                }
            }
        }
        for m in 0..n {
            let d = inst.degree(m);
            if d > 0 {
                utilization[m] = utilization[m].max(touching[m] as f64 / d as f64);
            }
        }
        match inst.transition(&state, round, model) {
            Ok(next) => state = next,
            Err(kinds) => violations.extend(
                kinds
                    .into_iter()
                    .map(|kind| Violation { round: i + 1, kind }),
            ),
        }
    }
    ValidationReport {
        valid: violations.is_empty(),
        completed: inst.is_complete(&state),
        violations,
        rounds_used: s.len(),
        external_messages: s.transfer_count(),
        max_nic_utilization: utilization,
    }
}

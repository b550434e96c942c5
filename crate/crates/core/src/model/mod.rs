//! Problems, schedules and the round transition semantics of the classic
//! telephone model and the extended multi-core model.
//!
//! Both models are pure functions from `(state, round)` to either the next
//! state or the list of violated constraints. A round that violates any
//! constraint leaves the state unchanged.

mod format;
mod logp;
mod report;
mod state;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{degree, ClusterTopology, MachineId, ProcessRef};

pub use format::{
    parse_datum, parse_process, parse_schedule, serialize_schedule, ScheduleParseError,
};
pub use logp::{logp_time, LogPParams};
pub use report::{run_schedule, ValidationReport, Violation};
pub use state::{KnowledgeState, Layout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemKind {
    Broadcast,
    Gather,
    AllToAll,
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemKind::Broadcast => "broadcast",
            ProblemKind::Gather => "gather",
            ProblemKind::AllToAll => "all-to-all",
        })
    }
}

impl FromStr for ProblemKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "broadcast" => Ok(ProblemKind::Broadcast),
            "gather" => Ok(ProblemKind::Gather),
            "all-to-all" | "alltoall" => Ok(ProblemKind::AllToAll),
            other => Err(format!("unknown problem `{other}`")),
        }
    }
}

/// A collective instance. Broadcast and gather carry a root; all-to-all does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Problem {
    pub kind: ProblemKind,
    pub root: Option<ProcessRef>,
}

impl Problem {
    pub fn broadcast(root: ProcessRef) -> Self {
        Problem {
            kind: ProblemKind::Broadcast,
            root: Some(root),
        }
    }

    pub fn gather(root: ProcessRef) -> Self {
        Problem {
            kind: ProblemKind::Gather,
            root: Some(root),
        }
    }

    pub fn all_to_all() -> Self {
        Problem {
            kind: ProblemKind::AllToAll,
            root: None,
        }
    }

    /// Builds a problem of `kind`; the root is dropped for all-to-all.
    pub fn of_kind(kind: ProblemKind, root: ProcessRef) -> Self {
        match kind {
            ProblemKind::Broadcast => Problem::broadcast(root),
            ProblemKind::Gather => Problem::gather(root),
            ProblemKind::AllToAll => Problem::all_to_all(),
        }
    }

    pub fn check(&self, t: &ClusterTopology) -> Result<(), ModelError> {
        match (self.kind, self.root) {
            (ProblemKind::AllToAll, _) => Ok(()),
            (_, None) => Err(ModelError::MissingRoot(self.kind)),
            (_, Some(r)) if !t.contains_process(r) => Err(ModelError::InvalidRoot(r)),
            _ => Ok(()),
        }
    }
}

/// An information item moved by a collective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DatumId {
    /// The single broadcast message.
    Root,
    /// The contribution originating at a process (gather, all-to-all).
    Contribution(ProcessRef),
}

impl DatumId {
    pub fn origin(&self) -> Option<ProcessRef> {
        match self {
            DatumId::Root => None,
            DatumId::Contribution(p) => Some(*p),
        }
    }
}

impl fmt::Display for DatumId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatumId::Root => f.write_str("root"),
            DatumId::Contribution(p) => write!(f, "d{}.{}", p.machine, p.local_index),
        }
    }
}

pub type Payload = BTreeSet<DatumId>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    /// One message over one network connection.
    ExternalTransfer {
        sender: ProcessRef,
        receiver: ProcessRef,
        payload: Payload,
    },
    /// A process publishes its own contribution to its machine.
    Assemble { process: ProcessRef, datum: DatumId },
    /// Explicit publication into the machine's shared memory.
    LocalWrite {
        writer: ProcessRef,
        payload: Payload,
    },
}

impl Action {
    pub fn transfer(
        sender: ProcessRef,
        receiver: ProcessRef,
        payload: impl IntoIterator<Item = DatumId>,
    ) -> Self {
        Action::ExternalTransfer {
            sender,
            receiver,
            payload: payload.into_iter().collect(),
        }
    }

    pub fn assemble(process: ProcessRef) -> Self {
        Action::Assemble {
            process,
            datum: DatumId::Contribution(process),
        }
    }

    /// Processes occupied by this action for the round.
    pub fn participants(&self) -> Vec<ProcessRef> {
        match self {
            Action::ExternalTransfer {
                sender, receiver, ..
            } => vec![*sender, *receiver],
            Action::Assemble { process, .. } => vec![*process],
            Action::LocalWrite { writer, .. } => vec![*writer],
        }
    }

    pub fn is_transfer(&self) -> bool {
        matches!(self, Action::ExternalTransfer { .. })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoundSchedule {
    pub actions: Vec<Action>,
}

impl RoundSchedule {
    pub fn new(actions: Vec<Action>) -> Self {
        RoundSchedule { actions }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Schedule {
    pub rounds: Vec<RoundSchedule>,
}

impl Schedule {
    pub fn new(rounds: Vec<RoundSchedule>) -> Self {
        Schedule { rounds }
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn transfer_count(&self) -> usize {
        self.rounds
            .iter()
            .flat_map(|r| &r.actions)
            .filter(|a| a.is_transfer())
            .count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    ClassicTelephone,
    ExtendedMulticore,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::ClassicTelephone => "classic",
            ModelKind::ExtendedMulticore => "extended",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "classic" => Ok(ModelKind::ClassicTelephone),
            "extended" => Ok(ModelKind::ExtendedMulticore),
            other => Err(format!("unknown model `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("root {0} is not a process of the topology")]
    InvalidRoot(ProcessRef),
    #[error("{0} requires a root process")]
    MissingRoot(ProblemKind),
    #[error("LogP evaluation supports only transfers, found {0}")]
    NonTransferAction(&'static str),
}

/// A single violated constraint within one round.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Error, Serialize, Deserialize)]
pub enum ViolationKind {
    #[error("process {0} does not exist")]
    UnknownProcess(ProcessRef),
    #[error("datum {0} does not belong to this problem")]
    UnknownDatum(DatumId),
    #[error("action by {0} has an empty payload")]
    EmptyPayload(ProcessRef),
    #[error("process {0} sends to itself")]
    SelfTransfer(ProcessRef),
    #[error("transfer {sender} -> {receiver} stays inside machine {}", sender.machine)]
    SameMachineTransfer {
        sender: ProcessRef,
        receiver: ProcessRef,
    },
    #[error("machines {} and {} are not linked ({sender} -> {receiver})", sender.machine, receiver.machine)]
    NotLinked {
        sender: ProcessRef,
        receiver: ProcessRef,
    },
    #[error("process {process} does not hold {datum}")]
    PayloadNotHeld { process: ProcessRef, datum: DatumId },
    #[error("process {process} uses {datum} before its origin assembled it")]
    NotAssembled { process: ProcessRef, datum: DatumId },
    #[error("process {process} cannot assemble foreign datum {datum}")]
    ForeignAssemble { process: ProcessRef, datum: DatumId },
    #[error("{kind} by {process} is not available in the {model} model")]
    Unsupported {
        process: ProcessRef,
        kind: String,
        model: String,
    },
    #[error("process {process} takes part in {actions} actions")]
    ProcessBusy { process: ProcessRef, actions: usize },
    #[error("link {a}-{b} carries {transfers} transfers")]
    LinkOverused {
        a: MachineId,
        b: MachineId,
        transfers: usize,
    },
    #[error("machine {machine} exceeds its NIC limit: {transfers} transfers, degree {degree}")]
    NicLimit {
        machine: MachineId,
        transfers: usize,
        degree: usize,
    },
}

/// Topology, problem and precomputed lookup tables shared by all model
/// operations.
#[derive(Debug, Clone)]
pub struct Instance {
    pub topology: ClusterTopology,
    pub problem: Problem,
    pub layout: Arc<Layout>,
    degrees: Vec<usize>,
    linked: Vec<Vec<bool>>,
}

impl Instance {
    pub fn new(t: &ClusterTopology, p: &Problem) -> Result<Self, ModelError> {
        p.check(t)?;
        let n = t.machine_count();
        let mut linked = vec![vec![false; n]; n];
        for l in &t.links {
            if l.a < n && l.b < n && l.a != l.b {
                linked[l.a][l.b] = true;
                linked[l.b][l.a] = true;
            }
        }
        let degrees = (0..n).map(|m| degree(t, m).unwrap_or(0)).collect();
        Ok(Instance {
            topology: t.clone(),
            problem: *p,
            layout: Arc::new(Layout::new(t, p)),
            degrees,
            linked,
        })
    }

    pub fn degree(&self, m: MachineId) -> usize {
        self.degrees[m]
    }

    pub fn linked(&self, a: MachineId, b: MachineId) -> bool {
        self.linked[a][b]
    }

    pub fn initial_state(&self, model: ModelKind) -> KnowledgeState {
        let layout = &self.layout;
        let mut state = KnowledgeState::empty(layout.clone());
        match self.problem.kind {
            ProblemKind::Broadcast => {
                let root = self.problem.root.expect("checked in Instance::new");
                let root_idx = layout.index(root);
                match model {
                    ModelKind::ClassicTelephone => state.holds[root_idx].insert(0),
                    ModelKind::ExtendedMulticore => {
                        for p in layout.machine_range(root.machine) {
                            state.holds[p].insert(0);
                        }
                    }
                }
                state.assembled.insert(0);
            }
            ProblemKind::Gather | ProblemKind::AllToAll => {
                for p in 0..layout.process_count() {
                    state.holds[p].insert(p);
                }
                if model == ModelKind::ClassicTelephone {
                    state.assembled.insert_range(..);
                }
            }
        }
        state
    }

    pub fn is_complete(&self, state: &KnowledgeState) -> bool {
        let layout = &self.layout;
        match self.problem.kind {
            ProblemKind::Broadcast => state.holds.iter().all(|h| h.contains(0)),
            ProblemKind::Gather => {
                let root = layout.index(self.problem.root.expect("checked"));
                state.holds[root].count_ones(..) == layout.datum_count()
            }
            ProblemKind::AllToAll => state
                .holds
                .iter()
                .all(|h| h.count_ones(..) == layout.datum_count()),
        }
    }

    fn payload_bits(
        &self,
        actor: ProcessRef,
        payload: &Payload,
        out: &mut Vec<ViolationKind>,
    ) -> Option<FixedBitSet> {
        if payload.is_empty() {
            out.push(ViolationKind::EmptyPayload(actor));
            return None;
        }
        let mut bits = FixedBitSet::with_capacity(self.layout.datum_count());
        let mut ok = true;
        for d in payload {
            match self.layout.datum_index(d) {
                Some(i) => bits.insert(i),
                None => {
                    out.push(ViolationKind::UnknownDatum(*d));
                    ok = false;
                }
            }
        }
        ok.then_some(bits)
    }

    /// Applies one round. On any violation the state is not advanced and
    /// every violated constraint is returned.
    pub fn transition(
        &self,
        state: &KnowledgeState,
        round: &RoundSchedule,
        model: ModelKind,
    ) -> Result<KnowledgeState, Vec<ViolationKind>> {
        let t = &self.topology;
        let layout = &self.layout;
        let mut violations = Vec::new();
        // (kind, actor index, other index, payload bits)
        let mut effects: Vec<Effect> = Vec::with_capacity(round.actions.len());
        let mut busy = vec![0usize; layout.process_count()];
        let extended = model == ModelKind::ExtendedMulticore;

        for action in &round.actions {
            let mut known = true;
            for p in action.participants() {
                if !t.contains_process(p) {
                    violations.push(ViolationKind::UnknownProcess(p));
                    known = false;
                }
            }
            if !known {
                continue;
            }
            for p in action.participants() {
                busy[layout.index(p)] += 1;
            }
            match action {
                Action::ExternalTransfer {
                    sender,
                    receiver,
                    payload,
                } => {
                    if sender == receiver {
                        violations.push(ViolationKind::SelfTransfer(*sender));
                        continue;
                    }
                    if sender.machine == receiver.machine {
                        if extended {
                            violations.push(ViolationKind::SameMachineTransfer {
                                sender: *sender,
                                receiver: *receiver,
                            });
                            continue;
                        }
                    } else if !self.linked(sender.machine, receiver.machine) {
                        violations.push(ViolationKind::NotLinked {
                            sender: *sender,
                            receiver: *receiver,
                        });
                        continue;
                    }
                    let Some(bits) = self.payload_bits(*sender, payload, &mut violations) else {
                        continue;
                    };
                    let s = layout.index(*sender);
                    if self.check_sendable(state, s, &bits, extended, &mut violations) {
                        effects.push(Effect::Transfer {
                            sender: s,
                            receiver: layout.index(*receiver),
                            payload: bits,
                        });
                    }
                }
                Action::Assemble { process, datum } => {
                    if !extended {
                        violations.push(ViolationKind::Unsupported {
                            process: *process,
                            kind: "assemble".into(),
                            model: model.to_string(),
                        });
                        continue;
                    }
                    if *datum != DatumId::Contribution(*process) {
                        violations.push(ViolationKind::ForeignAssemble {
                            process: *process,
                            datum: *datum,
                        });
                        continue;
                    }
                    match layout.datum_index(datum) {
                        Some(d) => effects.push(Effect::Publish {
                            actor: layout.index(*process),
                            payload: single_bit(layout.datum_count(), d),
                        }),
                        None => violations.push(ViolationKind::UnknownDatum(*datum)),
                    }
                }
                Action::LocalWrite { writer, payload } => {
                    if !extended {
                        violations.push(ViolationKind::Unsupported {
                            process: *writer,
                            kind: "local write".into(),
                            model: model.to_string(),
                        });
                        continue;
                    }
                    let Some(bits) = self.payload_bits(*writer, payload, &mut violations) else {
                        continue;
                    };
                    let w = layout.index(*writer);
                    if self.check_sendable(state, w, &bits, true, &mut violations) {
                        effects.push(Effect::Publish {
                            actor: w,
                            payload: bits,
                        });
                    }
                }
            }
        }

        for (idx, &count) in busy.iter().enumerate() {
            if count > 1 {
                violations.push(ViolationKind::ProcessBusy {
                    process: layout.process(idx),
                    actions: count,
                });
            }
        }

        if extended {
            self.check_resources(round, &mut violations);
        }

        if !violations.is_empty() {
            return Err(violations);
        }

        let mut next = state.clone();
        for effect in &effects {
            match effect {
                Effect::Transfer {
                    sender,
                    receiver,
                    payload,
                } => {
                    if extended {
                        for m in [layout.machine_of(*sender), layout.machine_of(*receiver)] {
                            for p in layout.machine_range(m) {
                                next.holds[p].union_with(payload);
                            }
                        }
                        if payload.contains(*sender) && layout.has_contributions() {
                            next.assembled.insert(*sender);
                        }
                    } else {
                        next.holds[*receiver].union_with(payload);
                    }
                }
                Effect::Publish { actor, payload } => {
                    for p in layout.machine_range(layout.machine_of(*actor)) {
                        next.holds[p].union_with(payload);
                    }
                    if payload.contains(*actor) && layout.has_contributions() {
                        next.assembled.insert(*actor);
                    }
                }
            }
        }
        Ok(next)
    }

    fn check_sendable(
        &self,
        state: &KnowledgeState,
        actor: usize,
        bits: &FixedBitSet,
        extended: bool,
        out: &mut Vec<ViolationKind>,
    ) -> bool {
        let layout = &self.layout;
        let mut ok = true;
        for d in bits.ones() {
            let datum = layout.datum(d);
            if !state.holds[actor].contains(d) {
                out.push(ViolationKind::PayloadNotHeld {
                    process: layout.process(actor),
                    datum,
                });
                ok = false;
            } else if extended
                && !state.assembled.contains(d)
                && !(layout.has_contributions() && d == actor)
            {
                out.push(ViolationKind::NotAssembled {
                    process: layout.process(actor),
                    datum,
                });
                ok = false;
            }
        }
        ok
    }

    /// Link and NIC accounting for the extended model.
    fn check_resources(&self, round: &RoundSchedule, out: &mut Vec<ViolationKind>) {
        let n = self.topology.machine_count();
        let mut per_machine = vec![0usize; n];
        let mut per_link: std::collections::BTreeMap<(MachineId, MachineId), usize> =
            Default::default();
        for action in &round.actions {
            if let Action::ExternalTransfer {
                sender, receiver, ..
            } = action
            {
                let (a, b) = (sender.machine, receiver.machine);
                if a == b || a >= n || b >= n || !self.linked(a, b) {
                    continue;
                }
                per_machine[a] += 1;
                per_machine[b] += 1;
                *per_link.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        for ((a, b), transfers) in per_link {
            if transfers > 1 {
                out.push(ViolationKind::LinkOverused { a, b, transfers });
            }
        }
        for (machine, &transfers) in per_machine.iter().enumerate() {
            if transfers > self.degree(machine) {
                out.push(ViolationKind::NicLimit {
                    machine,
                    transfers,
                    degree: self.degree(machine),
                });
            }
        }
    }
}

enum Effect {
    Transfer {
        sender: usize,
        receiver: usize,
        payload: FixedBitSet,
    },
    Publish {
        actor: usize,
        payload: FixedBitSet,
    },
}

fn single_bit(len: usize, bit: usize) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(len);
    b.insert(bit);
    b
}

/// Starting knowledge for `p` under `model`.
pub fn initial_state(
    t: &ClusterTopology,
    p: &Problem,
    model: ModelKind,
) -> Result<KnowledgeState, ModelError> {
    Ok(Instance::new(t, p)?.initial_state(model))
}

/// Applies one round to `state`; see [`Instance::transition`].
pub fn apply_round(
    t: &ClusterTopology,
    p: &Problem,
    state: &KnowledgeState,
    round: &RoundSchedule,
    model: ModelKind,
) -> Result<KnowledgeState, Vec<ViolationKind>> {
    let inst = Instance::new(t, p).map_err(|_| {
        vec![ViolationKind::UnknownProcess(
            p.root.unwrap_or(ProcessRef::new(0, 0)),
        )]
    })?;
    inst.transition(state, round, model)
}

/// Whether `state` satisfies the completion predicate of `p`.
pub fn is_complete(p: &Problem, state: &KnowledgeState) -> bool {
    let layout = state.layout();
    let datums = layout.datum_count();
    match p.kind {
        ProblemKind::Broadcast => (0..layout.process_count()).all(|i| state.holds[i].contains(0)),
        ProblemKind::Gather => match p.root {
            Some(r) if layout.contains(r) => state.holds[layout.index(r)].count_ones(..) == datums,
            _ => false,
        },
        ProblemKind::AllToAll => state.holds.iter().all(|h| h.count_ones(..) == datums),
    }
}

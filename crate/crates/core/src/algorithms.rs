//! Schedule constructors: the classic binomial baseline, the hierarchical
//! machine-as-node broadcast, multi-core aware broadcast and gather, the
//! highest-degree-first heuristic, a naive all-to-all and schedule inversion.
//!
//! All constructors are deterministic; ties are broken by lowest id.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Action, DatumId, Instance, ModelError, ModelKind, Problem, ProblemKind, RoundSchedule, Schedule,
};
use crate::topology::{ClusterTopology, MachineId, ProcessRef};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgorithmError {
    #[error("the communication graph is disconnected")]
    Disconnected,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("expected a broadcast schedule: {0}")]
    NotBroadcast(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmId {
    BinomialBroadcast,
    HierarchicalBroadcast,
    MulticoreGreedyBroadcast,
    HighestDegreeFirstBroadcast,
    InverseBinomialGather,
    MulticoreGather,
    NaiveAllToAll,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 7] = [
        AlgorithmId::BinomialBroadcast,
        AlgorithmId::HierarchicalBroadcast,
        AlgorithmId::MulticoreGreedyBroadcast,
        AlgorithmId::HighestDegreeFirstBroadcast,
        AlgorithmId::InverseBinomialGather,
        AlgorithmId::MulticoreGather,
        AlgorithmId::NaiveAllToAll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmId::BinomialBroadcast => "binomial-broadcast",
            AlgorithmId::HierarchicalBroadcast => "hierarchical-broadcast",
            AlgorithmId::MulticoreGreedyBroadcast => "multicore-greedy-broadcast",
            AlgorithmId::HighestDegreeFirstBroadcast => "highest-degree-first-broadcast",
            AlgorithmId::InverseBinomialGather => "inverse-binomial-gather",
            AlgorithmId::MulticoreGather => "multicore-gather",
            AlgorithmId::NaiveAllToAll => "naive-all-to-all",
        }
    }

    /// The model the constructor targets.
    pub fn model(self) -> ModelKind {
        match self {
            AlgorithmId::BinomialBroadcast | AlgorithmId::InverseBinomialGather => {
                ModelKind::ClassicTelephone
            }
            _ => ModelKind::ExtendedMulticore,
        }
    }

    pub fn problem_kind(self) -> ProblemKind {
        match self {
            AlgorithmId::InverseBinomialGather | AlgorithmId::MulticoreGather => {
                ProblemKind::Gather
            }
            AlgorithmId::NaiveAllToAll => ProblemKind::AllToAll,
            _ => ProblemKind::Broadcast,
        }
    }

    pub fn problem(self, root: ProcessRef) -> Problem {
        Problem::of_kind(self.problem_kind(), root)
    }

    /// Builds the schedule; `root` is ignored for all-to-all.
    pub fn construct(
        self,
        t: &ClusterTopology,
        root: ProcessRef,
    ) -> Result<Schedule, AlgorithmError> {
        match self {
            AlgorithmId::BinomialBroadcast => binomial_broadcast(t, root),
            AlgorithmId::HierarchicalBroadcast => hierarchical_broadcast(t, root),
            AlgorithmId::MulticoreGreedyBroadcast => multicore_greedy_broadcast(t, root),
            AlgorithmId::HighestDegreeFirstBroadcast => highest_degree_first_broadcast(t, root),
            AlgorithmId::InverseBinomialGather => inverse_binomial_gather(t, root),
            AlgorithmId::MulticoreGather => multicore_gather(t, root),
            AlgorithmId::NaiveAllToAll => naive_all_to_all(t),
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

fn check_root(t: &ClusterTopology, root: ProcessRef) -> Result<(), AlgorithmError> {
    if t.contains_process(root) {
        Ok(())
    } else {
        Err(ModelError::InvalidRoot(root).into())
    }
}

/// Classic-model broadcast over the process-level graph (machine cliques
/// plus all cross pairs of linked machines). Each round every informed
/// process forwards to one uninformed neighbour, nearest to the root first.
/// On a complete graph the informed set doubles every round.
pub fn binomial_broadcast(
    t: &ClusterTopology,
    root: ProcessRef,
) -> Result<Schedule, AlgorithmError> {
    check_root(t, root)?;
    let procs: Vec<ProcessRef> = t.processes().collect();
    let index = |p: ProcessRef| procs.iter().position(|&q| q == p).expect("known process");
    let adjacent = |a: ProcessRef, b: ProcessRef| {
        a != b && (a.machine == b.machine || t.has_link(a.machine, b.machine))
    };

    let mut dist = vec![usize::MAX; procs.len()];
    let start = index(root);
    dist[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for v in 0..procs.len() {
            if dist[v] == usize::MAX && adjacent(procs[u], procs[v]) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    if dist.contains(&usize::MAX) {
        return Err(AlgorithmError::Disconnected);
    }

    let mut informed = vec![false; procs.len()];
    informed[start] = true;
    let mut rounds = Vec::new();
    while informed.iter().any(|i| !i) {
        let mut targeted = informed.clone();
        let mut actions = Vec::new();
        for s in 0..procs.len() {
            if !informed[s] {
                continue;
            }
            let target = (0..procs.len())
                .filter(|&v| !targeted[v] && adjacent(procs[s], procs[v]))
                .min_by_key(|&v| (dist[v], v));
            if let Some(v) = target {
                targeted[v] = true;
                actions.push(Action::transfer(procs[s], procs[v], [DatumId::Root]));
            }
        }
        informed = targeted;
        rounds.push(RoundSchedule::new(actions));
    }
    Ok(Schedule::new(rounds))
}

fn machine_bfs(t: &ClusterTopology, root: MachineId) -> Result<Vec<usize>, AlgorithmError> {
    t.machine_distances(root)
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or(AlgorithmError::Disconnected)
}

/// Machine-as-node broadcast: binomial doubling over machines with a single
/// external send per machine per round. Local delivery is free.
pub fn hierarchical_broadcast(
    t: &ClusterTopology,
    root: ProcessRef,
) -> Result<Schedule, AlgorithmError> {
    check_root(t, root)?;
    let dist = machine_bfs(t, root.machine)?;
    let adj = t.adjacency();
    let mut informed = vec![false; t.machine_count()];
    informed[root.machine] = true;
    let mut rounds = Vec::new();
    while informed.iter().any(|i| !i) {
        let mut targeted = informed.clone();
        let mut actions = Vec::new();
        for m in 0..t.machine_count() {
            if !informed[m] {
                continue;
            }
            let target = adj[m]
                .iter()
                .copied()
                .filter(|&v| !targeted[v])
                .min_by_key(|&v| (dist[v], v));
            if let Some(v) = target {
                targeted[v] = true;
                actions.push(Action::transfer(
                    ProcessRef::new(m, 0),
                    ProcessRef::new(v, 0),
                    [DatumId::Root],
                ));
            }
        }
        informed = targeted;
        rounds.push(RoundSchedule::new(actions));
    }
    Ok(Schedule::new(rounds))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum TargetRanking {
    /// Maximise newly reachable machines, discounting overlap with targets
    /// already chosen this round.
    Coverage,
    /// Highest degree first, ignoring overlap.
    Degree,
}

fn parallel_broadcast(
    t: &ClusterTopology,
    root: ProcessRef,
    ranking: TargetRanking,
) -> Result<Schedule, AlgorithmError> {
    check_root(t, root)?;
    machine_bfs(t, root.machine)?;
    let inst = Instance::new(t, &Problem::broadcast(root))?;
    let adj = t.adjacency();
    let n = t.machine_count();
    let mut informed = vec![false; n];
    informed[root.machine] = true;
    let mut rounds = Vec::new();
    while informed.iter().any(|i| !i) {
        let mut targeted = informed.clone();
        let mut covered = informed.clone();
        let mut actions = Vec::new();
        for m in 0..n {
            if !informed[m] {
                continue;
            }
            let mut slots = inst.degree(m);
            let mut sender = 0;
            while slots > 0 {
                let candidates = adj[m].iter().copied().filter(|&v| !targeted[v]);
                let pick = match ranking {
                    TargetRanking::Coverage => candidates.max_by_key(|&v| {
                        let fresh = adj[v].iter().filter(|&&w| !covered[w]).count();
                        (1 + fresh.min(inst.degree(v)), std::cmp::Reverse(v))
                    }),
                    TargetRanking::Degree => {
                        candidates.max_by_key(|&v| (inst.degree(v), std::cmp::Reverse(v)))
                    }
                };
                let Some(v) = pick else { break };
                targeted[v] = true;
                covered[v] = true;
                for &w in &adj[v] {
                    covered[w] = true;
                }
                actions.push(Action::transfer(
                    ProcessRef::new(m, sender),
                    ProcessRef::new(v, 0),
                    [DatumId::Root],
                ));
                sender += 1;
                slots -= 1;
            }
        }
        informed = targeted;
        rounds.push(RoundSchedule::new(actions));
    }
    Ok(Schedule::new(rounds))
}

/// Every informed machine sends on up to `degree` links per round, choosing
/// targets that open up the most uncovered machines.
pub fn multicore_greedy_broadcast(
    t: &ClusterTopology,
    root: ProcessRef,
) -> Result<Schedule, AlgorithmError> {
    parallel_broadcast(t, root, TargetRanking::Coverage)
}

/// Same round loop as [`multicore_greedy_broadcast`] but ranks targets by
/// descending degree only, re-ranking each round.
pub fn highest_degree_first_broadcast(
    t: &ClusterTopology,
    root: ProcessRef,
) -> Result<Schedule, AlgorithmError> {
    parallel_broadcast(t, root, TargetRanking::Degree)
}

/// Classic-model gather obtained by time-reversing [`binomial_broadcast`].
pub fn inverse_binomial_gather(
    t: &ClusterTopology,
    root: ProcessRef,
) -> Result<Schedule, AlgorithmError> {
    let broadcast = binomial_broadcast(t, root)?;
    invert_schedule(
        t,
        &broadcast,
        &Problem::broadcast(root),
        ModelKind::ClassicTelephone,
    )
}

/// Time-reverses a broadcast schedule into a gather toward the same root.
///
/// Each transfer is flipped and carries the contributions of every process
/// it (transitively) informed in the broadcast. Transfers that informed
/// nobody are dropped. The result is not guaranteed to be valid under either
/// model.
pub fn invert_schedule(
    t: &ClusterTopology,
    s: &Schedule,
    p: &Problem,
    model: ModelKind,
) -> Result<Schedule, AlgorithmError> {
    if p.kind != ProblemKind::Broadcast {
        return Err(AlgorithmError::NotBroadcast(format!(
            "problem is {}",
            p.kind
        )));
    }
    let inst = Instance::new(t, p)?;
    let layout = inst.layout.clone();
    let root = p.root.expect("broadcast has a root");

    // Which transfer first informed each process.
    let mut informed: Vec<Option<Option<usize>>> = vec![None; layout.process_count()];
    match model {
        ModelKind::ClassicTelephone => informed[layout.index(root)] = Some(None),
        ModelKind::ExtendedMulticore => {
            for q in layout.machine_range(root.machine) {
                informed[q] = Some(None);
            }
        }
    }
    struct Edge {
        round: usize,
        sender: ProcessRef,
        receiver: ProcessRef,
        parent: Option<usize>,
    }
    let mut edges: Vec<Edge> = Vec::new();
    for (r, round) in s.rounds.iter().enumerate() {
        let start = informed.clone();
        for action in &round.actions {
            let Action::ExternalTransfer {
                sender, receiver, ..
            } = action
            else {
                return Err(AlgorithmError::NotBroadcast(
                    "only transfers can be inverted".into(),
                ));
            };
            if !t.contains_process(*sender) || !t.contains_process(*receiver) {
                return Err(AlgorithmError::NotBroadcast(format!(
                    "unknown process in {sender} -> {receiver}"
                )));
            }
            let Some(parent) = start[layout.index(*sender)] else {
                return Err(AlgorithmError::NotBroadcast(format!(
                    "{sender} sends before being informed"
                )));
            };
            let id = edges.len();
            edges.push(Edge {
                round: r,
                sender: *sender,
                receiver: *receiver,
                parent,
            });
            let reached: Vec<usize> = match model {
                ModelKind::ClassicTelephone => vec![layout.index(*receiver)],
                ModelKind::ExtendedMulticore => layout.machine_range(receiver.machine).collect(),
            };
            for q in reached {
                if informed[q].is_none() {
                    informed[q] = Some(Some(id));
                }
            }
        }
    }

    let mut carried: Vec<BTreeSet<DatumId>> = vec![BTreeSet::new(); edges.len()];
    for (q, by) in informed.iter().enumerate() {
        if let Some(Some(e)) = by {
            carried[*e].insert(DatumId::Contribution(layout.process(q)));
        }
    }
    // Children always come after their parent, so a reverse sweep accumulates subtrees.
    for e in (0..edges.len()).rev() {
        if let Some(parent) = edges[e].parent {
            let sub = carried[e].clone();
            carried[parent].extend(sub);
        }
    }

    let mut rounds = vec![RoundSchedule::default(); s.rounds.len()];
    for (e, edge) in edges.iter().enumerate() {
        if carried[e].is_empty() {
            continue;
        }
        let slot = s.rounds.len() - 1 - edge.round;
        rounds[slot].actions.push(Action::ExternalTransfer {
            sender: edge.receiver,
            receiver: edge.sender,
            payload: carried[e].clone(),
        });
    }
    Ok(Schedule::new(rounds))
}

/// Extended-model gather: contributions are assembled locally in parallel
/// while machines convergecast their aggregates toward the root machine
/// along a BFS tree, within each machine's degree.
pub fn multicore_gather(t: &ClusterTopology, root: ProcessRef) -> Result<Schedule, AlgorithmError> {
    check_root(t, root)?;
    let dist = machine_bfs(t, root.machine)?;
    let inst = Instance::new(t, &Problem::gather(root))?;
    let layout = inst.layout.clone();
    let adj = t.adjacency();
    let n = t.machine_count();

    let parent: Vec<Option<MachineId>> = (0..n)
        .map(|v| {
            (v != root.machine).then(|| {
                adj[v]
                    .iter()
                    .copied()
                    .find(|&u| dist[u] + 1 == dist[v])
                    .expect("BFS parent exists")
            })
        })
        .collect();
    let mut subtree: Vec<BTreeSet<DatumId>> = (0..n)
        .map(|m| {
            layout
                .machine_range(m)
                .map(|q| DatumId::Contribution(layout.process(q)))
                .collect()
        })
        .collect();
    let mut by_depth: Vec<MachineId> = (0..n).collect();
    by_depth.sort_by_key(|&m| (std::cmp::Reverse(dist[m]), m));
    for &v in &by_depth {
        if let Some(u) = parent[v] {
            let sub = subtree[v].clone();
            subtree[u].extend(sub);
        }
    }

    let root_idx = layout.index(root);
    // Own datum already usable by every process of its machine.
    let mut published: Vec<bool> = (0..layout.process_count()).map(|q| q == root_idx).collect();
    let shared_machine = |q: usize| layout.machine_range(layout.machine_of(q)).len() > 1;
    let mut delivered = vec![false; n];
    delivered[root.machine] = true;
    let unpublished = |m: MachineId, published: &[bool]| -> Vec<usize> {
        layout.machine_range(m).filter(|&q| !published[q]).collect()
    };

    let mut rounds = Vec::new();
    loop {
        let root_ready = layout.machine_range(root.machine).all(|q| published[q]);
        if delivered.iter().all(|&d| d) && root_ready {
            break;
        }
        let mut busy = vec![false; layout.process_count()];
        let mut touching = vec![0usize; n];
        let mut actions = Vec::new();
        let mut sent = Vec::new();

        let mut ready: Vec<MachineId> = (0..n)
            .filter(|&v| {
                !delivered[v]
                    && (0..n).all(|c| parent[c] != Some(v) || delivered[c])
                    && unpublished(v, &published).len() <= 1
            })
            .collect();
        ready.sort_by_key(|&v| (std::cmp::Reverse(dist[v]), v));
        for v in ready {
            let u = parent[v].expect("non-root machine");
            if touching[u] >= inst.degree(u) || touching[v] >= inst.degree(v) {
                continue;
            }
            let pending = unpublished(v, &published);
            let sender = match pending.first() {
                Some(&q) => q,
                None => layout
                    .machine_range(v)
                    .find(|&q| !busy[q])
                    .expect("idle sender"),
            };
            let receiver = layout
                .machine_range(u)
                .filter(|&q| !busy[q])
                .min_by_key(|&q| {
                    let rank = if q == root_idx {
                        1
                    } else if published[q] {
                        0
                    } else {
                        2
                    };
                    (rank, q)
                });
            let Some(receiver) = receiver else { continue };
            busy[sender] = true;
            busy[receiver] = true;
            touching[u] += 1;
            touching[v] += 1;
            actions.push(Action::ExternalTransfer {
                sender: layout.process(sender),
                receiver: layout.process(receiver),
                payload: subtree[v].clone(),
            });
            sent.push((v, sender));
        }

        let mut assembled = Vec::new();
        for q in 0..layout.process_count() {
            if !busy[q] && !published[q] && shared_machine(q) {
                actions.push(Action::assemble(layout.process(q)));
                assembled.push(q);
            }
        }
        assert!(!actions.is_empty(), "gather scheduler stalled");
        for (v, sender) in sent {
            delivered[v] = true;
            published[sender] = true;
        }
        for q in assembled {
            published[q] = true;
        }
        rounds.push(RoundSchedule::new(actions));
    }
    Ok(Schedule::new(rounds))
}

/// Extended-model all-to-all: one parallel assembly round on multi-process
/// machines, then a [`multicore_greedy_broadcast`] of each machine's
/// aggregate, list-scheduled into the earliest rounds with free resources.
pub fn naive_all_to_all(t: &ClusterTopology) -> Result<Schedule, AlgorithmError> {
    if !t.is_connected() {
        return Err(AlgorithmError::Disconnected);
    }
    let inst = Instance::new(t, &Problem::all_to_all())?;
    let layout = inst.layout.clone();
    let n = t.machine_count();
    let multi: Vec<bool> = (0..n).map(|m| layout.machine_range(m).len() > 1).collect();

    struct Slot {
        actions: Vec<Action>,
        busy: Vec<bool>,
        touching: Vec<usize>,
        links: BTreeSet<(MachineId, MachineId)>,
    }
    let new_slot = || Slot {
        actions: Vec::new(),
        busy: vec![false; layout.process_count()],
        touching: vec![0; n],
        links: BTreeSet::new(),
    };
    let mut slots: Vec<Slot> = Vec::new();
    let base = if multi.iter().any(|&m| m) {
        let mut first = new_slot();
        for m in (0..n).filter(|&m| multi[m]) {
            for q in layout.machine_range(m) {
                first.actions.push(Action::assemble(layout.process(q)));
                first.busy[q] = true;
            }
        }
        slots.push(first);
        1
    } else {
        0
    };

    for src in 0..n {
        let payload: BTreeSet<DatumId> = layout
            .machine_range(src)
            .map(|q| DatumId::Contribution(layout.process(q)))
            .collect();
        let plan = multicore_greedy_broadcast(t, ProcessRef::new(src, 0))?;
        // Round index (exclusive upper bound for dependants) at which each machine holds the aggregate.
        let mut holds_from: Vec<Option<usize>> = vec![None; n];
        holds_from[src] = Some(if multi[src] { base } else { 0 });
        for round in &plan.rounds {
            for action in &round.actions {
                let Action::ExternalTransfer {
                    sender, receiver, ..
                } = action
                else {
                    continue;
                };
                let (m, v) = (sender.machine, receiver.machine);
                let earliest = holds_from[m].expect("greedy sender is informed");
                let key = (m.min(v), m.max(v));
                let mut r = earliest;
                loop {
                    if r == slots.len() {
                        slots.push(new_slot());
                    }
                    let slot = &slots[r];
                    let free = !slot.links.contains(&key)
                        && slot.touching[m] < inst.degree(m)
                        && slot.touching[v] < inst.degree(v);
                    let s_proc = layout.machine_range(m).find(|&q| !slot.busy[q]);
                    let r_proc = layout.machine_range(v).find(|&q| !slot.busy[q]);
                    if let (true, Some(sp), Some(rp)) = (free, s_proc, r_proc) {
                        let slot = &mut slots[r];
                        slot.links.insert(key);
                        slot.touching[m] += 1;
                        slot.touching[v] += 1;
                        slot.busy[sp] = true;
                        slot.busy[rp] = true;
                        slot.actions.push(Action::ExternalTransfer {
                            sender: layout.process(sp),
                            receiver: layout.process(rp),
                            payload: payload.clone(),
                        });
                        holds_from[v] = Some(r + 1);
                        break;
                    }
                    r += 1;
                }
            }
        }
    }
    Ok(Schedule::new(
        slots
            .into_iter()
            .map(|s| RoundSchedule::new(s.actions))
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::run_schedule;
    use crate::topology::{gen_complete, gen_overlap_family, gen_star, Link, MachineSpec};

    fn pr(m: usize, i: usize) -> ProcessRef {
        ProcessRef::new(m, i)
    }

    fn check(t: &ClusterTopology, id: AlgorithmId, root: ProcessRef) -> usize {
        let s = id.construct(t, root).unwrap();
        let report = run_schedule(t, &id.problem(root), &s, id.model());
        assert!(report.valid, "{id}: {:?}", report.violations);
        assert!(report.completed, "{id} incomplete");
        report.rounds_used
    }

    #[test]
    fn binomial_examples() {
        let s = binomial_broadcast(&gen_complete(8, 1, 1), pr(0, 0)).unwrap();
        assert_eq!((s.len(), s.transfer_count()), (3, 7));
        assert_eq!(
            check(
                &gen_complete(8, 1, 1),
                AlgorithmId::BinomialBroadcast,
                pr(0, 0)
            ),
            3
        );
        assert_eq!(
            check(
                &gen_complete(1, 8, 1),
                AlgorithmId::BinomialBroadcast,
                pr(0, 0)
            ),
            3
        );
        assert_eq!(
            check(
                &gen_complete(2, 1, 1),
                AlgorithmId::BinomialBroadcast,
                pr(0, 0)
            ),
            1
        );
    }

    #[test]
    fn disconnected_graph_rejected() {
        let t = ClusterTopology {
            machines: vec![MachineSpec::new(0, 1, 1), MachineSpec::new(1, 1, 1)],
            links: vec![],
        };
        for id in AlgorithmId::ALL {
            assert_eq!(
                id.construct(&t, pr(0, 0)),
                Err(AlgorithmError::Disconnected),
                "{id}"
            );
        }
    }

    #[test]
    fn hierarchical_examples() {
        assert_eq!(
            check(
                &gen_complete(4, 2, 1),
                AlgorithmId::HierarchicalBroadcast,
                pr(0, 0)
            ),
            2
        );
        assert_eq!(
            check(
                &gen_star(4, 4, 4),
                AlgorithmId::HierarchicalBroadcast,
                pr(0, 0)
            ),
            4
        );
        assert_eq!(
            check(
                &gen_complete(1, 4, 1),
                AlgorithmId::HierarchicalBroadcast,
                pr(0, 0)
            ),
            0
        );
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(
            check(
                &gen_star(4, 4, 4),
                AlgorithmId::MulticoreGreedyBroadcast,
                pr(0, 0)
            ),
            1
        );
        assert_eq!(
            check(
                &gen_complete(4, 2, 1),
                AlgorithmId::MulticoreGreedyBroadcast,
                pr(0, 0)
            ),
            2
        );
        let t = gen_complete(4, 2, 2);
        let g = check(&t, AlgorithmId::MulticoreGreedyBroadcast, pr(0, 0));
        let h = check(&t, AlgorithmId::HierarchicalBroadcast, pr(0, 0));
        assert!(g <= 2 && g <= h);
    }

    #[test]
    fn degree_heuristic_examples() {
        assert_eq!(
            check(
                &gen_star(4, 4, 4),
                AlgorithmId::HighestDegreeFirstBroadcast,
                pr(0, 0)
            ),
            1
        );
        for k in 2..=3 {
            let t = gen_overlap_family(k);
            let hdf = check(&t, AlgorithmId::HighestDegreeFirstBroadcast, pr(0, 0));
            let greedy = check(&t, AlgorithmId::MulticoreGreedyBroadcast, pr(0, 0));
            assert_eq!((hdf, greedy), (3, 2), "k={k}");
        }
        let path = ClusterTopology {
            machines: (0..3).map(|i| MachineSpec::new(i, 1, 1)).collect(),
            links: vec![Link::new(0, 1), Link::new(1, 2)],
        };
        assert_eq!(
            highest_degree_first_broadcast(&path, pr(0, 0)),
            multicore_greedy_broadcast(&path, pr(0, 0))
        );
    }

    #[test]
    fn gather_examples() {
        assert_eq!(
            check(
                &gen_complete(8, 1, 1),
                AlgorithmId::InverseBinomialGather,
                pr(0, 0)
            ),
            3
        );
        assert_eq!(
            check(
                &gen_complete(2, 1, 1),
                AlgorithmId::InverseBinomialGather,
                pr(0, 0)
            ),
            1
        );
        assert_eq!(
            check(
                &gen_complete(1, 1, 1),
                AlgorithmId::InverseBinomialGather,
                pr(0, 0)
            ),
            0
        );
        assert_eq!(
            check(&gen_star(4, 4, 4), AlgorithmId::MulticoreGather, pr(0, 0)),
            2
        );
        assert_eq!(
            check(
                &gen_complete(1, 8, 1),
                AlgorithmId::MulticoreGather,
                pr(0, 0)
            ),
            1
        );
        assert_eq!(
            check(
                &gen_complete(2, 2, 1),
                AlgorithmId::MulticoreGather,
                pr(0, 0)
            ),
            2
        );
    }

    #[test]
    fn all_to_all_examples() {
        assert_eq!(
            check(&gen_complete(1, 4, 1), AlgorithmId::NaiveAllToAll, pr(0, 0)),
            1
        );
        assert_eq!(
            check(&gen_complete(1, 1, 1), AlgorithmId::NaiveAllToAll, pr(0, 0)),
            0
        );
        assert_eq!(
            check(&gen_complete(2, 1, 1), AlgorithmId::NaiveAllToAll, pr(0, 0)),
            2
        );
        check(&gen_star(3, 2, 3), AlgorithmId::NaiveAllToAll, pr(0, 0));
    }

    #[test]
    fn inverted_star_broadcast_fails_as_gather() {
        let t = gen_star(4, 4, 4);
        let b = Problem::broadcast(pr(0, 0));
        let s = multicore_greedy_broadcast(&t, pr(0, 0)).unwrap();
        let inv = invert_schedule(&t, &s, &b, ModelKind::ExtendedMulticore).unwrap();
        assert_eq!(inv.len(), 1);
        let report = run_schedule(
            &t,
            &Problem::gather(pr(0, 0)),
            &inv,
            ModelKind::ExtendedMulticore,
        );
        assert!(!(report.valid && report.completed));
    }

    #[test]
    fn invert_edge_cases() {
        let t = gen_complete(1, 3, 1);
        let b = Problem::broadcast(pr(0, 0));
        let inv =
            invert_schedule(&t, &Schedule::default(), &b, ModelKind::ExtendedMulticore).unwrap();
        assert!(inv.is_empty());
        assert!(
            !run_schedule(
                &t,
                &Problem::gather(pr(0, 0)),
                &inv,
                ModelKind::ExtendedMulticore
            )
            .completed
        );
        let single = gen_complete(1, 1, 1);
        assert!(
            run_schedule(
                &single,
                &Problem::gather(pr(0, 0)),
                &inv,
                ModelKind::ExtendedMulticore
            )
            .completed
        );
        assert!(matches!(
            invert_schedule(
                &t,
                &Schedule::default(),
                &Problem::gather(pr(0, 0)),
                ModelKind::ExtendedMulticore
            ),
            Err(AlgorithmError::NotBroadcast(_))
        ));
    }

    #[test]
    fn names_round_trip() {
        for id in AlgorithmId::ALL {
            assert_eq!(id.name().parse::<AlgorithmId>(), Ok(id));
        }
    }
}

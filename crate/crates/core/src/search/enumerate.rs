//! Maximal sets of simultaneously legal, useful actions for one round.
//!
//! Processes of one machine that are interchangeable in the current state
//! (swapping them, together with their contributions, leaves the state
//! unchanged) are grouped into classes. Actions are enumerated per class
//! with multiplicities, so sets that differ only by a permutation of
//! interchangeable processes are produced once.

use fixedbitset::FixedBitSet;

use crate::model::{Action, Instance, KnowledgeState, ModelKind, RoundSchedule};
use crate::topology::MachineId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Assemble { class: usize },
    Transfer { from: usize, to: usize },
}

#[derive(Debug, Clone, Copy)]
struct Typed {
    kind: Kind,
    max: usize,
}

struct Classes {
    members: Vec<Vec<usize>>,
    machine: Vec<MachineId>,
}

fn interchangeable(inst: &Instance, s: &KnowledgeState, p: usize, q: usize) -> bool {
    let layout = &inst.layout;
    if !layout.has_contributions() {
        return s.holds_bits(p) == s.holds_bits(q);
    }
    let assembled = s.assembled_bits();
    if assembled.contains(p) != assembled.contains(q) {
        return false;
    }
    for r in 0..layout.process_count() {
        if r != p && r != q && s.holds_bits(r).contains(p) != s.holds_bits(r).contains(q) {
            return false;
        }
    }
    // The swapped row of q must equal the row of p.
    let (hp, hq) = (s.holds_bits(p), s.holds_bits(q));
    for d in 0..layout.datum_count() {
        let mapped = if d == p {
            q
        } else if d == q {
            p
        } else {
            d
        };
        if hp.contains(d) != hq.contains(mapped) {
            return false;
        }
    }
    true
}

fn classes(inst: &Instance, s: &KnowledgeState, symmetry: bool) -> Classes {
    let layout = &inst.layout;
    let fixed = match inst.problem.kind {
        crate::model::ProblemKind::Gather => inst.problem.root.map(|r| layout.index(r)),
        _ => None,
    };
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut machine = Vec::new();
    for m in 0..layout.machine_count() {
        let first_class = members.len();
        for p in layout.machine_range(m) {
            let slot = if symmetry && Some(p) != fixed {
                (first_class..members.len()).find(|&c| {
                    let rep = members[c][0];
                    Some(rep) != fixed && interchangeable(inst, s, rep, p)
                })
            } else {
                None
            };
            match slot {
                Some(c) => members[c].push(p),
                None => {
                    members.push(vec![p]);
                    machine.push(m);
                }
            }
        }
    }
    Classes { members, machine }
}

/// Everything `p` may put in a payload this round.
pub(crate) fn sendable(
    inst: &Instance,
    s: &KnowledgeState,
    p: usize,
    model: ModelKind,
) -> FixedBitSet {
    let mut bits = s.holds_bits(p).clone();
    if model == ModelKind::ExtendedMulticore {
        let mut allowed = s.assembled_bits().clone();
        if inst.layout.has_contributions() {
            allowed.insert(p);
        }
        bits.intersect_with(&allowed);
    }
    bits
}

fn adds_knowledge(
    s: &KnowledgeState,
    payload: &FixedBitSet,
    targets: impl IntoIterator<Item = usize>,
) -> bool {
    targets
        .into_iter()
        .any(|x| !payload.is_subset(s.holds_bits(x)))
}

struct Search<'a> {
    inst: &'a Instance,
    model: ModelKind,
    classes: &'a Classes,
    typed: Vec<Typed>,
    counts: Vec<usize>,
    class_used: Vec<usize>,
    machine_used: Vec<usize>,
    link_used: Vec<Vec<bool>>,
    out: Vec<Vec<usize>>,
}

impl Search<'_> {
    fn extended(&self) -> bool {
        self.model == ModelKind::ExtendedMulticore
    }

    fn class_cap(&self, c: usize) -> usize {
        self.classes.members[c].len() - self.class_used[c]
    }

    fn can_add(&self, i: usize) -> bool {
        let t = self.typed[i];
        if self.counts[i] >= t.max {
            return false;
        }
        match t.kind {
            Kind::Assemble { class } => self.class_cap(class) >= 1,
            Kind::Transfer { from, to } => {
                let need_same = if from == to { 2 } else { 1 };
                if self.class_cap(from) < need_same || self.class_cap(to) < 1 {
                    return false;
                }
                if self.extended() {
                    let (a, b) = (self.classes.machine[from], self.classes.machine[to]);
                    !self.link_used[a][b]
                        && self.machine_used[a] < self.inst.degree(a)
                        && self.machine_used[b] < self.inst.degree(b)
                } else {
                    true
                }
            }
        }
    }

    fn apply(&mut self, i: usize, delta: isize) {
        let t = self.typed[i];
        let bump = |v: &mut usize| *v = (*v as isize + delta) as usize;
        bump(&mut self.counts[i]);
        match t.kind {
            Kind::Assemble { class } => bump(&mut self.class_used[class]),
            Kind::Transfer { from, to } => {
                bump(&mut self.class_used[from]);
                bump(&mut self.class_used[to]);
                if self.extended() {
                    let (a, b) = (self.classes.machine[from], self.classes.machine[to]);
                    bump(&mut self.machine_used[a]);
                    bump(&mut self.machine_used[b]);
                    self.link_used[a][b] = delta > 0;
                    self.link_used[b][a] = delta > 0;
                }
            }
        }
    }

    fn recurse(&mut self, i: usize) {
        if i == self.typed.len() {
            if (0..self.typed.len()).all(|j| !self.can_add(j)) {
                self.out.push(self.counts.clone());
            }
            return;
        }
        let mut added = 0;
        while self.can_add(i) {
            self.apply(i, 1);
            added += 1;
        }
        loop {
            self.recurse(i + 1);
            if added == 0 {
                break;
            }
            self.apply(i, -1);
            added -= 1;
        }
    }
}

/// All maximal useful rounds from `s`. With `symmetry`, rounds that differ
/// only by a permutation of interchangeable processes are produced once.
/// When no useful action exists the single empty round is returned.
pub fn maximal_rounds(
    inst: &Instance,
    s: &KnowledgeState,
    model: ModelKind,
    symmetry: bool,
) -> Vec<RoundSchedule> {
    let layout = &inst.layout;
    let classes = classes(inst, s, symmetry);
    let extended = model == ModelKind::ExtendedMulticore;
    let mut typed = Vec::new();

    if extended && layout.has_contributions() {
        for (c, members) in classes.members.iter().enumerate() {
            let rep = members[0];
            let mut own = FixedBitSet::with_capacity(layout.datum_count());
            own.insert(rep);
            if adds_knowledge(s, &own, layout.machine_range(classes.machine[c])) {
                typed.push(Typed {
                    kind: Kind::Assemble { class: c },
                    max: members.len(),
                });
            }
        }
    }
    for (from, senders) in classes.members.iter().enumerate() {
        let rep = senders[0];
        let payload = sendable(inst, s, rep, model);
        if payload.is_clear() {
            continue;
        }
        let ma = classes.machine[from];
        for (to, receivers) in classes.members.iter().enumerate() {
            let mb = classes.machine[to];
            let reachable = if extended {
                ma != mb && inst.linked(ma, mb)
            } else {
                ma == mb || inst.linked(ma, mb)
            };
            if !reachable {
                continue;
            }
            let receiver = if from == to {
                match receivers.get(1) {
                    Some(&r) => r,
                    None => continue,
                }
            } else {
                receivers[0]
            };
            let useful = if extended {
                adds_knowledge(
                    s,
                    &payload,
                    layout.machine_range(ma).chain(layout.machine_range(mb)),
                )
            } else {
                adds_knowledge(s, &payload, [receiver])
            };
            if !useful {
                continue;
            }
            let max = if extended {
                1
            } else if from == to {
                senders.len() / 2
            } else {
                senders.len().min(receivers.len())
            };
            typed.push(Typed {
                kind: Kind::Transfer { from, to },
                max,
            });
        }
    }

    let n = layout.machine_count();
    let mut search = Search {
        inst,
        model,
        classes: &classes,
        counts: vec![0; typed.len()],
        typed,
        class_used: vec![0; classes.members.len()],
        machine_used: vec![0; n],
        link_used: vec![vec![false; n]; n],
        out: Vec::new(),
    };
    search.recurse(0);
    let Search { typed, out, .. } = search;

    out.into_iter()
        .map(|counts| concretize(inst, s, model, &classes, &typed, &counts))
        .collect()
}

fn concretize(
    inst: &Instance,
    s: &KnowledgeState,
    model: ModelKind,
    classes: &Classes,
    typed: &[Typed],
    counts: &[usize],
) -> RoundSchedule {
    let layout = &inst.layout;
    let mut cursor = vec![0usize; classes.members.len()];
    let mut take = |c: usize| {
        let p = classes.members[c][cursor[c]];
        cursor[c] += 1;
        p
    };
    let mut actions = Vec::new();
    for (t, &count) in typed.iter().zip(counts) {
        for _ in 0..count {
            match t.kind {
                Kind::Assemble { class } => {
                    actions.push(Action::assemble(layout.process(take(class))));
                }
                Kind::Transfer { from, to } => {
                    let sender = take(from);
                    let receiver = take(to);
                    let payload = sendable(inst, s, sender, model)
                        .ones()
                        .map(|d| layout.datum(d))
                        .collect();
                    actions.push(Action::ExternalTransfer {
                        sender: layout.process(sender),
                        receiver: layout.process(receiver),
                        payload,
                    });
                }
            }
        }
    }
    RoundSchedule::new(actions)
}

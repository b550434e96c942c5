use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use fixedbitset::FixedBitSet;

use super::{DatumId, Problem, ProblemKind};
use crate::topology::{ClusterTopology, MachineId, ProcessRef};

/// Dense numbering of processes and data for one (topology, problem) pair.
///
/// Processes are numbered machine by machine. A broadcast has the single
/// datum 0; otherwise datum `i` is the contribution of process `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    offsets: Vec<usize>,
    machine_of: Vec<MachineId>,
    kind: ProblemKind,
}

impl Layout {
    pub fn new(t: &ClusterTopology, p: &Problem) -> Self {
        let mut offsets = Vec::with_capacity(t.machine_count() + 1);
        let mut machine_of = Vec::new();
        let mut acc = 0;
        for m in &t.machines {
            offsets.push(acc);
            acc += m.process_count;
            machine_of.extend(std::iter::repeat_n(m.id, m.process_count));
        }
        offsets.push(acc);
        Layout {
            offsets,
            machine_of,
            kind: p.kind,
        }
    }

    pub fn process_count(&self) -> usize {
        self.machine_of.len()
    }

    pub fn machine_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn datum_count(&self) -> usize {
        if self.has_contributions() {
            self.process_count()
        } else {
            1
        }
    }

    pub fn has_contributions(&self) -> bool {
        self.kind != ProblemKind::Broadcast
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn contains(&self, p: ProcessRef) -> bool {
        p.machine < self.machine_count()
            && p.local_index < self.offsets[p.machine + 1] - self.offsets[p.machine]
    }

    /// Dense index of `p`. Panics when `p` is not in the layout.
    pub fn index(&self, p: ProcessRef) -> usize {
        assert!(self.contains(p), "process {p} outside layout");
        self.offsets[p.machine] + p.local_index
    }

    pub fn process(&self, idx: usize) -> ProcessRef {
        let m = self.machine_of[idx];
        ProcessRef::new(m, idx - self.offsets[m])
    }

    pub fn machine_of(&self, idx: usize) -> MachineId {
        self.machine_of[idx]
    }

    pub fn machine_range(&self, m: MachineId) -> Range<usize> {
        self.offsets[m]..self.offsets[m + 1]
    }

    pub fn datum_index(&self, d: &DatumId) -> Option<usize> {
        match (d, self.has_contributions()) {
            (DatumId::Root, false) => Some(0),
            (DatumId::Contribution(p), true) if self.contains(*p) => Some(self.index(*p)),
            _ => None,
        }
    }

    pub fn datum(&self, idx: usize) -> DatumId {
        if self.has_contributions() {
            DatumId::Contribution(self.process(idx))
        } else {
            DatumId::Root
        }
    }
}

/// Which data every process holds, and which contributions have been
/// assembled (published by their origin).
#[derive(Clone)]
pub struct KnowledgeState {
    layout: Arc<Layout>,
    pub(crate) holds: Vec<FixedBitSet>,
    pub(crate) assembled: FixedBitSet,
}

impl KnowledgeState {
    pub(crate) fn empty(layout: Arc<Layout>) -> Self {
        let d = layout.datum_count();
        KnowledgeState {
            holds: vec![FixedBitSet::with_capacity(d); layout.process_count()],
            assembled: FixedBitSet::with_capacity(d),
            layout,
        }
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn holds_datum(&self, p: ProcessRef, d: DatumId) -> bool {
        match self.layout.datum_index(&d) {
            Some(i) if self.layout.contains(p) => self.holds[self.layout.index(p)].contains(i),
            _ => false,
        }
    }

    pub fn data_held(&self, p: ProcessRef) -> Vec<DatumId> {
        self.holds[self.layout.index(p)]
            .ones()
            .map(|i| self.layout.datum(i))
            .collect()
    }

    pub fn is_assembled(&self, d: DatumId) -> bool {
        self.layout
            .datum_index(&d)
            .is_some_and(|i| self.assembled.contains(i))
    }

    /// Total number of (process, datum) facts held.
    pub fn knowledge(&self) -> usize {
        self.holds.iter().map(|h| h.count_ones(..)).sum()
    }

    /// Whether every fact of `other` is also a fact of `self`.
    pub fn is_superset_of(&self, other: &KnowledgeState) -> bool {
        self.holds
            .iter()
            .zip(&other.holds)
            .all(|(a, b)| b.is_subset(a))
            && other.assembled.is_subset(&self.assembled)
    }

    /// Adds a fact directly, bypassing the model rules. Intended for tests and
    /// tools that build hypothetical states.
    pub fn grant(&mut self, p: ProcessRef, d: DatumId) {
        if let Some(i) = self.layout.datum_index(&d) {
            let idx = self.layout.index(p);
            self.holds[idx].insert(i);
        }
    }

    pub(crate) fn holds_bits(&self, idx: usize) -> &FixedBitSet {
        &self.holds[idx]
    }

    pub(crate) fn assembled_bits(&self) -> &FixedBitSet {
        &self.assembled
    }
}

impl PartialEq for KnowledgeState {
    fn eq(&self, other: &Self) -> bool {
        self.holds == other.holds && self.assembled == other.assembled
    }
}

impl Eq for KnowledgeState {}

impl std::hash::Hash for KnowledgeState {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.holds.hash(state);
        self.assembled.hash(state);
    }
}

impl fmt::Debug for KnowledgeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (i, h) in self.holds.iter().enumerate() {
            let data: Vec<String> = h.ones().map(|d| self.layout.datum(d).to_string()).collect();
            map.entry(&self.layout.process(i).to_string(), &data);
        }
        map.finish()
    }
}

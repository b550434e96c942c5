//! Symmetry-reduced state keys.
//!
//! The symmetry group used is generated by swapping twin machines (same
//! spec, same neighbourhood apart from each other) and permuting processes
//! inside a machine; for gather the root process and its machine are fixed.
//! A state's key is the lexicographically smallest encoding over the group
//! elements that order machines and processes by invariant signatures.
//! Only true automorphisms are ever applied, so equal keys always mean
//! equivalent states. If the number of orderings to try exceeds a cap the
//! key may fail to merge some equivalent states; it never merges
//! inequivalent ones.

use std::collections::BTreeSet;

use crate::model::{Instance, KnowledgeState, ProblemKind};
use crate::topology::MachineId;

const MAX_ORDERINGS: usize = 20_000;

/// Opaque, comparable state key. Bitwise superset of keys implies superset
/// of knowledge in a common frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey(pub(crate) Vec<u64>);

impl CanonicalKey {
    pub fn covers(&self, other: &CanonicalKey) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & b == *b)
    }

    pub fn popcount(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }
}

pub struct Canonicalizer {
    /// Twin classes of machines, each sorted ascending.
    machine_classes: Vec<Vec<MachineId>>,
    fixed_process: Option<usize>,
}

fn twins(inst: &Instance, u: MachineId, v: MachineId, adj: &[BTreeSet<MachineId>]) -> bool {
    let t = &inst.topology;
    let (su, sv) = (t.machines[u], t.machines[v]);
    if su.process_count != sv.process_count || su.nic_count != sv.nic_count {
        return false;
    }
    let mut nu = adj[u].clone();
    nu.remove(&v);
    let mut nv = adj[v].clone();
    nv.remove(&u);
    nu == nv
}

impl Canonicalizer {
    pub fn new(inst: &Instance) -> Self {
        let t = &inst.topology;
        let n = t.machine_count();
        let adj: Vec<BTreeSet<MachineId>> = t
            .adjacency()
            .into_iter()
            .map(|a| a.into_iter().collect())
            .collect();
        let fixed_machine = match inst.problem.kind {
            ProblemKind::Gather => inst.problem.root.map(|r| r.machine),
            _ => None,
        };
        let mut machine_classes: Vec<Vec<MachineId>> = Vec::new();
        for m in 0..n {
            let home = if Some(m) == fixed_machine {
                None
            } else {
                machine_classes.iter().position(|c| {
                    Some(c[0]) != fixed_machine && c.iter().all(|&o| twins(inst, o, m, &adj))
                })
            };
            match home {
                Some(c) => machine_classes[c].push(m),
                None => machine_classes.push(vec![m]),
            }
        }
        let fixed_process = match inst.problem.kind {
            ProblemKind::Gather => inst.problem.root.map(|r| inst.layout.index(r)),
            _ => None,
        };
        Canonicalizer {
            machine_classes,
            fixed_process,
        }
    }

    pub fn key(&self, inst: &Instance, s: &KnowledgeState) -> CanonicalKey {
        let layout = &inst.layout;
        let pc = layout.process_count();
        let contributions = layout.has_contributions();

        let holders: Vec<usize> = if contributions {
            (0..pc)
                .map(|d| (0..pc).filter(|&r| s.holds_bits(r).contains(d)).count())
                .collect()
        } else {
            vec![0; pc]
        };
        let sig = |p: usize| -> (usize, usize, bool, bool) {
            (
                s.holds_bits(p).count_ones(..),
                holders[p],
                contributions && s.assembled_bits().contains(p),
                Some(p) == self.fixed_process,
            )
        };
        let msig = |m: MachineId| {
            let mut v: Vec<_> = layout.machine_range(m).map(sig).collect();
            v.sort();
            v
        };

        // Per machine: process cells in target order.
        let mut process_cells: Vec<Vec<Vec<usize>>> = Vec::with_capacity(layout.machine_count());
        for m in 0..layout.machine_count() {
            let mut free: Vec<usize> = layout
                .machine_range(m)
                .filter(|&p| Some(p) != self.fixed_process)
                .collect();
            free.sort_by_key(|&p| (sig(p), p));
            process_cells.push(group_by(&free, |&p| sig(p)));
        }

        // Per machine class: machine cells in target order.
        let mut machine_cells: Vec<Vec<Vec<MachineId>>> = Vec::new();
        for class in &self.machine_classes {
            let mut ms = class.clone();
            ms.sort_by_key(|&m| (msig(m), m));
            machine_cells.push(group_by(&ms, |&m| msig(m)));
        }

        let encode = |order: &[usize]| -> Vec<u64> {
            // order[new] = old process index
            let mut inverse = vec![0usize; pc];
            for (new, &old) in order.iter().enumerate() {
                inverse[old] = new;
            }
            let width = layout.datum_count();
            let total = pc * width + width;
            let mut words = vec![0u64; total.div_ceil(64)];
            let mut set = |bit: usize| words[bit / 64] |= 1u64 << (63 - bit % 64);
            for (new, &old) in order.iter().enumerate() {
                for d in s.holds_bits(old).ones() {
                    let nd = if contributions { inverse[d] } else { d };
                    set(new * width + nd);
                }
            }
            for d in s.assembled_bits().ones() {
                let nd = if contributions { inverse[d] } else { d };
                set(pc * width + nd);
            }
            words
        };

        // Enumerate orderings: each non-trivial cell contributes its permutations.
        let mut choices: Vec<Vec<Vec<usize>>> = Vec::new();
        for cells in machine_cells.iter().chain(process_cells.iter()) {
            for cell in cells {
                choices.push(
                    if cell.len() > 1 && !self.cell_is_fixed(inst, s, cell, &machine_cells) {
                        permutations(cell)
                    } else {
                        vec![cell.clone()]
                    },
                );
            }
        }
        let mut best: Option<Vec<u64>> = None;
        let mut tried = 0usize;
        let mut idx = vec![0usize; choices.len()];
        loop {
            // Assemble machine placement.
            let mut c = 0;
            let mut placed: Vec<MachineId> = vec![0; layout.machine_count()];
            for (class, cells) in self.machine_classes.iter().zip(&machine_cells) {
                let mut slot = 0;
                for _ in cells {
                    for &m in &choices[c][idx[c]] {
                        placed[class[slot]] = m;
                        slot += 1;
                    }
                    c += 1;
                }
            }
            let mut local_orders: Vec<Vec<usize>> = Vec::with_capacity(layout.machine_count());
            for cells in &process_cells {
                let mut o = Vec::new();
                for _ in cells {
                    o.extend_from_slice(&choices[c][idx[c]]);
                    c += 1;
                }
                local_orders.push(o);
            }
            let mut order = Vec::with_capacity(pc);
            for &source in &placed {
                let mut free = local_orders[source].iter();
                for local in layout.machine_range(source) {
                    if Some(local) == self.fixed_process {
                        order.push(local);
                    } else {
                        order.push(*free.next().expect("cell covers machine"));
                    }
                }
            }
            let enc = encode(&order);
            if best.as_ref().is_none_or(|b| enc < *b) {
                best = Some(enc);
            }
            tried += 1;
            if tried >= MAX_ORDERINGS || !advance(&mut idx, &choices) {
                break;
            }
        }
        CanonicalKey(best.expect("at least one ordering"))
    }

    /// True when every permutation of `cell` leaves the state unchanged, so a
    /// single ordering suffices.
    fn cell_is_fixed(
        &self,
        inst: &Instance,
        s: &KnowledgeState,
        cell: &[usize],
        machine_cells: &[Vec<Vec<MachineId>>],
    ) -> bool {
        let is_machine_cell = machine_cells
            .iter()
            .any(|cells| cells.iter().any(|c| std::ptr::eq(c.as_slice(), cell)));
        cell.windows(2).all(|w| {
            if is_machine_cell {
                machine_swap_fixes(inst, s, w[0], w[1])
            } else {
                process_swap_fixes(inst, s, w[0], w[1])
            }
        })
    }
}

fn swapped_state_equal(inst: &Instance, s: &KnowledgeState, perm: &[usize]) -> bool {
    let layout = &inst.layout;
    let contributions = layout.has_contributions();
    let map = |d: usize| if contributions { perm[d] } else { d };
    for (p, &q) in perm.iter().enumerate() {
        let src = s.holds_bits(p);
        let dst = s.holds_bits(q);
        if src.count_ones(..) != dst.count_ones(..) || src.ones().any(|d| !dst.contains(map(d))) {
            return false;
        }
    }
    let a = s.assembled_bits();
    a.ones().all(|d| a.contains(map(d)))
}

fn process_swap_fixes(inst: &Instance, s: &KnowledgeState, p: usize, q: usize) -> bool {
    let mut perm: Vec<usize> = (0..inst.layout.process_count()).collect();
    perm.swap(p, q);
    swapped_state_equal(inst, s, &perm)
}

fn machine_swap_fixes(inst: &Instance, s: &KnowledgeState, u: MachineId, v: MachineId) -> bool {
    let layout = &inst.layout;
    let mut perm: Vec<usize> = (0..layout.process_count()).collect();
    for (a, b) in layout.machine_range(u).zip(layout.machine_range(v)) {
        perm.swap(a, b);
    }
    swapped_state_equal(inst, s, &perm)
}

fn group_by<T: Copy, K: PartialEq>(items: &[T], key: impl Fn(&T) -> K) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = Vec::new();
    let mut last: Option<K> = None;
    for item in items {
        let k = key(item);
        if last.as_ref() == Some(&k) {
            out.last_mut().expect("open group").push(*item);
        } else {
            out.push(vec![*item]);
            last = Some(k);
        }
    }
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn advance(idx: &mut [usize], choices: &[Vec<Vec<usize>>]) -> bool {
    for i in (0..idx.len()).rev() {
        idx[i] += 1;
        if idx[i] < choices[i].len() {
            return true;
        }
        idx[i] = 0;
    }
    false
}

/// Identity-frame key (no symmetry reduction).
pub fn raw_key(inst: &Instance, s: &KnowledgeState) -> CanonicalKey {
    let layout = &inst.layout;
    let pc = layout.process_count();
    let width = layout.datum_count();
    let mut words = vec![0u64; (pc * width + width).div_ceil(64)];
    let mut set = |bit: usize| words[bit / 64] |= 1u64 << (63 - bit % 64);
    for p in 0..pc {
        for d in s.holds_bits(p).ones() {
            set(p * width + d);
        }
    }
    for d in s.assembled_bits().ones() {
        set(pc * width + d);
    }
    CanonicalKey(words)
}

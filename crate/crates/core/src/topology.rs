//! Cluster description: machines with their process and NIC counts, the
//! external links between machines, generators for experiment families and
//! a line-oriented text format.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense machine identifier, contiguous from 0 within a topology.
pub type MachineId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MachineSpec {
    pub id: MachineId,
    pub process_count: usize,
    pub nic_count: usize,
}

impl MachineSpec {
    pub fn new(id: MachineId, process_count: usize, nic_count: usize) -> Self {
        MachineSpec {
            id,
            process_count,
            nic_count,
        }
    }
}

/// Undirected external link between two machines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Link {
    pub a: MachineId,
    pub b: MachineId,
}

impl Link {
    pub fn new(a: MachineId, b: MachineId) -> Self {
        Link { a, b }
    }

    /// Endpoints in ascending order; two links are the same iff their keys match.
    pub fn key(&self) -> (MachineId, MachineId) {
        if self.a <= self.b {
            (self.a, self.b)
        } else {
            (self.b, self.a)
        }
    }

    pub fn touches(&self, m: MachineId) -> bool {
        self.a == m || self.b == m
    }
}

/// A process, addressed by its machine and its index on that machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ProcessRef {
    pub machine: MachineId,
    pub local_index: usize,
}

impl ProcessRef {
    pub const fn new(machine: MachineId, local_index: usize) -> Self {
        ProcessRef {
            machine,
            local_index,
        }
    }
}

impl fmt::Display for ProcessRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.machine, self.local_index)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterTopology {
    pub machines: Vec<MachineSpec>,
    pub links: Vec<Link>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("duplicate machine id {0}")]
    DuplicateMachine(MachineId),
    #[error("machine ids are not dense from 0: expected {expected}, found {found}")]
    NonContiguousId {
        expected: MachineId,
        found: MachineId,
    },
    #[error("machine {0} has zero processes")]
    ZeroProcesses(MachineId),
    #[error("machine {0} has zero NICs")]
    ZeroNics(MachineId),
    #[error("link {a}-{b} is a self-link")]
    SelfLink { a: MachineId, b: MachineId },
    #[error("link {a}-{b} names unknown machine {missing}")]
    DanglingEndpoint {
        a: MachineId,
        b: MachineId,
        missing: MachineId,
    },
    #[error("link {a}-{b} is duplicated")]
    DuplicateLink { a: MachineId, b: MachineId },
    #[error("unknown machine {0}")]
    UnknownMachine(MachineId),
}

/// Syntax error in the topology text format.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid topology: {}", join_errors(.0))]
    Invalid(Vec<TopologyError>),
}

fn join_errors(errors: &[TopologyError]) -> String {
    errors
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Checks every structural invariant and reports all violations found.
pub fn validate_topology(t: &ClusterTopology) -> Result<(), Vec<TopologyError>> {
    let mut errors = Vec::new();
    let mut seen = HashSet::new();
    for (pos, m) in t.machines.iter().enumerate() {
        if !seen.insert(m.id) {
            errors.push(TopologyError::DuplicateMachine(m.id));
        } else if m.id != pos {
            errors.push(TopologyError::NonContiguousId {
                expected: pos,
                found: m.id,
            });
        }
        if m.process_count == 0 {
            errors.push(TopologyError::ZeroProcesses(m.id));
        }
        if m.nic_count == 0 {
            errors.push(TopologyError::ZeroNics(m.id));
        }
    }
    let mut link_keys = HashSet::new();
    for l in &t.links {
        if l.a == l.b {
            errors.push(TopologyError::SelfLink { a: l.a, b: l.b });
            continue;
        }
        let mut dangling = false;
        for end in [l.a, l.b] {
            if !seen.contains(&end) {
                errors.push(TopologyError::DanglingEndpoint {
                    a: l.a,
                    b: l.b,
                    missing: end,
                });
                dangling = true;
            }
        }
        if !dangling && !link_keys.insert(l.key()) {
            errors.push(TopologyError::DuplicateLink { a: l.a, b: l.b });
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

impl ClusterTopology {
    pub fn machine_count(&self) -> usize {
        self.machines.len()
    }

    pub fn machine(&self, m: MachineId) -> Option<&MachineSpec> {
        self.machines.get(m)
    }

    pub fn process_count(&self) -> usize {
        self.machines.iter().map(|m| m.process_count).sum()
    }

    /// All processes in machine order, then local index order.
    pub fn processes(&self) -> impl Iterator<Item = ProcessRef> + '_ {
        self.machines
            .iter()
            .flat_map(|m| (0..m.process_count).map(move |i| ProcessRef::new(m.id, i)))
    }

    pub fn contains_process(&self, p: ProcessRef) -> bool {
        self.machine(p.machine)
            .is_some_and(|m| p.local_index < m.process_count)
    }

    pub fn has_link(&self, a: MachineId, b: MachineId) -> bool {
        let key = Link::new(a, b).key();
        a != b && self.links.iter().any(|l| l.key() == key)
    }

    /// Neighbouring machines in ascending id order.
    pub fn neighbors(&self, m: MachineId) -> Vec<MachineId> {
        let set: BTreeSet<MachineId> = self
            .links
            .iter()
            .filter(|l| l.touches(m) && l.a != l.b)
            .map(|l| if l.a == m { l.b } else { l.a })
            .collect();
        set.into_iter().collect()
    }

    pub fn incident_link_count(&self, m: MachineId) -> usize {
        self.neighbors(m).len()
    }

    /// Adjacency lists for every machine, ascending.
    pub fn adjacency(&self) -> Vec<Vec<MachineId>> {
        let mut adj = vec![BTreeSet::new(); self.machines.len()];
        for l in &self.links {
            if l.a != l.b && l.a < adj.len() && l.b < adj.len() {
                adj[l.a].insert(l.b);
                adj[l.b].insert(l.a);
            }
        }
        adj.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// Whether the machine graph is connected (a single machine counts as connected).
    pub fn is_connected(&self) -> bool {
        let n = self.machines.len();
        if n == 0 {
            return false;
        }
        let adj = self.adjacency();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// BFS hop distances from `src` over the machine graph; `None` when unreachable.
    pub fn machine_distances(&self, src: MachineId) -> Vec<Option<usize>> {
        let adj = self.adjacency();
        let mut dist = vec![None; self.machines.len()];
        let mut queue = std::collections::VecDeque::new();
        if src < dist.len() {
            dist[src] = Some(0);
            queue.push_back(src);
        }
        while let Some(u) = queue.pop_front() {
            let d = dist[u].unwrap_or(0);
            for &v in &adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// Effective external concurrency of a machine per round: the smallest of
/// its NIC count, its process count and its number of incident links.
pub fn degree(t: &ClusterTopology, m: MachineId) -> Result<usize, TopologyError> {
    let spec = t.machine(m).ok_or(TopologyError::UnknownMachine(m))?;
    Ok(spec
        .nic_count
        .min(spec.process_count)
        .min(t.incident_link_count(m)))
}

fn uniform_machines(count: usize, procs: usize, nics: usize) -> Vec<MachineSpec> {
    (0..count)
        .map(|id| MachineSpec::new(id, procs, nics))
        .collect()
}

/// Complete graph over `machine_count` identical machines.
pub fn gen_complete(
    machine_count: usize,
    procs_per_machine: usize,
    nics_per_machine: usize,
) -> ClusterTopology {
    assert!(
        machine_count >= 1 && procs_per_machine >= 1 && nics_per_machine >= 1,
        "generator counts must be at least 1"
    );
    let mut links = Vec::new();
    for a in 0..machine_count {
        for b in a + 1..machine_count {
            links.push(Link::new(a, b));
        }
    }
    ClusterTopology {
        machines: uniform_machines(machine_count, procs_per_machine, nics_per_machine),
        links,
    }
}

/// Star with machine 0 at the centre and `leaf_count` single-process,
/// single-NIC leaves.
pub fn gen_star(center_procs: usize, center_nics: usize, leaf_count: usize) -> ClusterTopology {
    assert!(
        center_procs >= 1 && center_nics >= 1 && leaf_count >= 1,
        "generator counts must be at least 1"
    );
    let mut machines = vec![MachineSpec::new(0, center_procs, center_nics)];
    machines.extend((1..=leaf_count).map(|id| MachineSpec::new(id, 1, 1)));
    let links = (1..=leaf_count).map(|leaf| Link::new(0, leaf)).collect();
    ClusterTopology { machines, links }
}

/// Machine roles inside [`gen_overlap_family`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapRoles {
    pub source: MachineId,
    pub hub_a: MachineId,
    pub hub_b: MachineId,
    pub low: MachineId,
    pub private: MachineId,
    pub shared: Vec<MachineId>,
}

impl OverlapRoles {
    pub fn new(k: usize) -> Self {
        OverlapRoles {
            source: 0,
            hub_a: 1,
            hub_b: 2,
            low: 3,
            private: 4,
            shared: (5..5 + k).collect(),
        }
    }
}

/// Counterexample family for highest-degree-first broadcast.
///
/// Layout (machine ids):
/// - 0: source, 2 processes, 2 NICs, linked to 1, 2 and 3
/// - 1, 2: hubs with `k` processes and `k` NICs, each linked to every shared machine
/// - 3: low-degree machine (1 process, 1 NIC) linked to the private machine 4
/// - 4: private machine reachable only through 3
/// - 5..5+k: shared machines, each linked to both hubs
///
/// Both hubs outrank the low machine by degree, yet the second hub adds no
/// coverage the first does not already provide.
pub fn gen_overlap_family(k: usize) -> ClusterTopology {
    assert!(k >= 2, "overlap family needs k >= 2");
    let roles = OverlapRoles::new(k);
    let mut machines = vec![
        MachineSpec::new(roles.source, 2, 2),
        MachineSpec::new(roles.hub_a, k, k),
        MachineSpec::new(roles.hub_b, k, k),
        MachineSpec::new(roles.low, 1, 1),
        MachineSpec::new(roles.private, 1, 1),
    ];
    machines.extend(roles.shared.iter().map(|&id| MachineSpec::new(id, 1, 1)));
    let mut links = vec![
        Link::new(roles.source, roles.hub_a),
        Link::new(roles.source, roles.hub_b),
        Link::new(roles.source, roles.low),
        Link::new(roles.low, roles.private),
    ];
    for &s in &roles.shared {
        links.push(Link::new(roles.hub_a, s));
        links.push(Link::new(roles.hub_b, s));
    }
    ClusterTopology { machines, links }
}

/// Seeded random cluster. Per-machine counts are uniform in `1..=max`; each
/// machine pair is linked with `edge_probability`; disconnected components
/// are then joined with random spanning edges.
pub fn gen_random(
    machine_count: usize,
    max_procs: usize,
    max_nics: usize,
    edge_probability: f64,
    seed: u64,
) -> ClusterTopology {
    assert!(machine_count >= 1, "machine_count must be at least 1");
    assert!(
        max_procs >= 1 && max_nics >= 1,
        "max counts must be at least 1"
    );
    assert!(
        (0.0..=1.0).contains(&edge_probability),
        "edge_probability must lie in [0, 1]"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let machines: Vec<MachineSpec> = (0..machine_count)
        .map(|id| {
            let procs = rng.gen_range(1..=max_procs);
            let nics = rng.gen_range(1..=max_nics);
            MachineSpec::new(id, procs, nics)
        })
        .collect();
    let mut links = Vec::new();
    for a in 0..machine_count {
        for b in a + 1..machine_count {
            if rng.gen_bool(edge_probability) {
                links.push(Link::new(a, b));
            }
        }
    }

    // Union-find over machines, then attach each later component to a random
    // machine of the components already joined.
    let mut parent: Vec<usize> = (0..machine_count).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = x;
        while parent[c] != r {
            let next = parent[c];
            parent[c] = r;
            c = next;
        }
        r
    }
    for l in &links {
        let (ra, rb) = (find(&mut parent, l.a), find(&mut parent, l.b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut joined: Vec<MachineId> = Vec::new();
    let mut components: Vec<Vec<MachineId>> = Vec::new();
    for m in 0..machine_count {
        let r = find(&mut parent, m);
        match components.iter_mut().find(|c| find(&mut parent, c[0]) == r) {
            Some(c) => c.push(m),
            None => components.push(vec![m]),
        }
    }
    for (i, comp) in components.iter().enumerate() {
        if i > 0 {
            let from = comp[rng.gen_range(0..comp.len())];
            let to = joined[rng.gen_range(0..joined.len())];
            links.push(Link::new(to.min(from), to.max(from)));
        }
        joined.extend_from_slice(comp);
    }
    ClusterTopology { machines, links }
}

/// Writes the line format read by [`parse_topology`].
pub fn serialize_topology(t: &ClusterTopology) -> String {
    let mut out = String::new();
    for m in &t.machines {
        out.push_str(&format!(
            "machine {} procs={} nics={}\n",
            m.id, m.process_count, m.nic_count
        ));
    }
    for l in &t.links {
        out.push_str(&format!("link {} {}\n", l.a, l.b));
    }
    out
}

/// Parses the topology line format and validates the result.
///
/// ```text
/// # comment
/// machine 0 procs=2 nics=1
/// machine 1 procs=2 nics=1
/// link 0 1
/// ```
pub fn parse_topology(text: &str) -> Result<ClusterTopology, ParseError> {
    let mut t = ClusterTopology::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: String| ParseError::Syntax {
            line: line_no,
            message,
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "machine" => {
                if tokens.len() != 4 {
                    return Err(syntax(
                        "expected `machine <id> procs=<k> nics=<n>`".to_string(),
                    ));
                }
                let id = parse_count(tokens[1]).map_err(&syntax)?;
                let procs = parse_keyed(tokens[2], "procs").map_err(&syntax)?;
                let nics = parse_keyed(tokens[3], "nics").map_err(&syntax)?;
                if id != t.machines.len() {
                    return Err(syntax(format!(
                        "machine ids must be dense from 0: expected {}, found {id}",
                        t.machines.len()
                    )));
                }
                t.machines.push(MachineSpec::new(id, procs, nics));
            }
            "link" => {
                if tokens.len() != 3 {
                    return Err(syntax("expected `link <a> <b>`".to_string()));
                }
                let a = parse_count(tokens[1]).map_err(&syntax)?;
                let b = parse_count(tokens[2]).map_err(&syntax)?;
                t.links.push(Link::new(a, b));
            }
            other => return Err(syntax(format!("unknown directive `{other}`"))),
        }
    }
    validate_topology(&t).map_err(ParseError::Invalid)?;
    Ok(t)
}

fn parse_count(token: &str) -> Result<usize, String> {
    token
        .parse::<usize>()
        .map_err(|_| format!("expected a non-negative integer, found `{token}`"))
}

fn parse_keyed(token: &str, key: &str) -> Result<usize, String> {
    match token.split_once('=') {
        Some((k, v)) if k == key => parse_count(v),
        _ => Err(format!("expected `{key}=<count>`, found `{token}`")),
    }
}

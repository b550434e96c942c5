//! Cross-checks of the search against a deliberately naive reference that
//! tries every legal subset of concrete actions with full payloads.

use std::collections::HashSet;

use mccoll::algorithms::AlgorithmId;
use mccoll::model::{
    apply_round, initial_state, is_complete, run_schedule, Action, DatumId, KnowledgeState,
    ModelKind, Problem, ProblemKind, RoundSchedule,
};
use mccoll::search::{
    canonical_state, optimal_rounds, optimal_rounds_with, SearchBudget, SearchOptions,
};
use mccoll::topology::{gen_random, gen_star, ClusterTopology, ProcessRef};

fn root() -> ProcessRef {
    ProcessRef::new(0, 0)
}

fn budget() -> SearchBudget {
    SearchBudget::default()
}

/// Everything `p` may put in a payload: held data, restricted in the
/// extended model to assembled data and `p`'s own contribution.
fn full_payload(s: &KnowledgeState, p: ProcessRef, model: ModelKind) -> Vec<DatumId> {
    s.data_held(p)
        .into_iter()
        .filter(|d| {
            model == ModelKind::ClassicTelephone
                || s.is_assembled(*d)
                || *d == DatumId::Contribution(p)
        })
        .collect()
}

fn candidates(t: &ClusterTopology, s: &KnowledgeState, model: ModelKind) -> Vec<Action> {
    let procs: Vec<ProcessRef> = t.processes().collect();
    let mut out = Vec::new();
    for &a in &procs {
        let payload = full_payload(s, a, model);
        if payload.is_empty() {
            continue;
        }
        for &b in &procs {
            if a != b {
                out.push(Action::transfer(a, b, payload.iter().copied()));
            }
        }
        if model == ModelKind::ExtendedMulticore {
            out.push(Action::LocalWrite {
                writer: a,
                payload: payload.iter().copied().collect(),
            });
            if s.data_held(a).contains(&DatumId::Contribution(a)) {
                out.push(Action::assemble(a));
            }
        }
    }
    out
}

/// All legal rounds built from `cands`, found by backtracking. Legality is
/// checked with the model itself; conflicts only grow with more actions, so
/// an illegal prefix prunes all its extensions.
fn legal_rounds(
    t: &ClusterTopology,
    p: &Problem,
    s: &KnowledgeState,
    model: ModelKind,
    cands: &[Action],
) -> Vec<RoundSchedule> {
    #[allow(clippy::too_many_arguments)]
    fn go(
        t: &ClusterTopology,
        p: &Problem,
        s: &KnowledgeState,
        model: ModelKind,
        cands: &[Action],
        i: usize,
        current: &mut Vec<Action>,
        out: &mut Vec<RoundSchedule>,
    ) {
        if i == cands.len() {
            out.push(RoundSchedule::new(current.clone()));
            return;
        }
        go(t, p, s, model, cands, i + 1, current, out);
        current.push(cands[i].clone());
        if apply_round(t, p, s, &RoundSchedule::new(current.clone()), model).is_ok() {
            go(t, p, s, model, cands, i + 1, current, out);
        }
        current.pop();
    }
    let mut out = Vec::new();
    go(t, p, s, model, cands, 0, &mut Vec::new(), &mut out);
    out
}

/// Plain BFS over exact states. `None` if not solved within `limit` rounds.
fn naive_optimum(
    t: &ClusterTopology,
    p: &Problem,
    model: ModelKind,
    limit: usize,
) -> Option<usize> {
    let init = initial_state(t, p, model).unwrap();
    if is_complete(p, &init) {
        return Some(0);
    }
    let mut seen: HashSet<KnowledgeState> = HashSet::from([init.clone()]);
    let mut frontier = vec![init];
    for depth in 1..=limit {
        let mut next = Vec::new();
        for s in &frontier {
            let cands = candidates(t, s, model);
            for r in legal_rounds(t, p, s, model, &cands) {
                let n = apply_round(t, p, s, &r, model).unwrap();
                if is_complete(p, &n) {
                    return Some(depth);
                }
                if seen.insert(n.clone()) {
                    next.push(n);
                }
            }
        }
        frontier = next;
    }
    None
}

fn small_corpus() -> Vec<ClusterTopology> {
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < 12 {
        let t = gen_random(3, 2, 2, 0.6, seed);
        seed += 1;
        if t.processes().count() <= 4 {
            out.push(t);
        }
    }
    out
}

#[test]
fn search_matches_naive_reference() {
    for t in small_corpus() {
        for kind in [
            ProblemKind::Broadcast,
            ProblemKind::Gather,
            ProblemKind::AllToAll,
        ] {
            let p = Problem::of_kind(kind, root());
            for model in [ModelKind::ClassicTelephone, ModelKind::ExtendedMulticore] {
                let fast = optimal_rounds(&t, &p, model, budget()).unwrap();
                let slow = naive_optimum(&t, &p, model, 6);
                assert_eq!(fast.optimal_rounds(), slow, "{kind} {model} on {t:?}");
            }
        }
    }
}

#[test]
fn witnesses_replay_to_the_optimum() {
    for seed in 0..20 {
        let t = gen_random(4, 2, 2, 0.5, seed);
        for kind in [ProblemKind::Broadcast, ProblemKind::Gather] {
            let p = Problem::of_kind(kind, root());
            let r = optimal_rounds(&t, &p, ModelKind::ExtendedMulticore, budget()).unwrap();
            let n = r.optimal_rounds().expect("solved");
            let report = run_schedule(
                &t,
                &p,
                r.witness.as_ref().unwrap(),
                ModelKind::ExtendedMulticore,
            );
            assert!(report.ok(), "{}", report.to_text());
            assert_eq!(report.rounds_used, n);
        }
    }
}

#[test]
fn canonicalization_does_not_change_optima() {
    let plain = SearchOptions {
        canonicalize: false,
        dominance: false,
        parallel: false,
    };
    for seed in 0..20 {
        let t = gen_random(3, 2, 2, 0.5, 100 + seed);
        for kind in [ProblemKind::Broadcast, ProblemKind::Gather] {
            let p = Problem::of_kind(kind, root());
            for model in [ModelKind::ClassicTelephone, ModelKind::ExtendedMulticore] {
                let a = optimal_rounds(&t, &p, model, budget()).unwrap();
                let b = optimal_rounds_with(&t, &p, model, budget(), plain).unwrap();
                assert_eq!(
                    a.optimal_rounds(),
                    b.optimal_rounds(),
                    "seed {seed} {kind} {model}"
                );
                assert!(a.states_explored <= b.states_explored);
            }
        }
    }
}

#[test]
fn constructors_never_beat_the_oracle() {
    for seed in 0..20 {
        let t = gen_random(3, 2, 2, 0.5, seed);
        for alg in AlgorithmId::ALL {
            let p = alg.problem(root());
            let s = alg.construct(&t, root()).unwrap();
            let o = optimal_rounds(&t, &p, alg.model(), budget()).unwrap();
            if let Some(best) = o.optimal_rounds() {
                assert!(s.len() >= best, "{alg} beat the oracle on seed {seed}");
            }
        }
    }
}

#[test]
fn extended_broadcast_never_needs_more_rounds() {
    let mut strict = 0;
    for seed in 0..50 {
        let t = gen_random(4, 2, 2, 0.5, seed);
        let p = Problem::broadcast(root());
        let c = optimal_rounds(&t, &p, ModelKind::ClassicTelephone, budget())
            .unwrap()
            .optimal_rounds()
            .unwrap();
        let e = optimal_rounds(&t, &p, ModelKind::ExtendedMulticore, budget())
            .unwrap()
            .optimal_rounds()
            .unwrap();
        assert!(e <= c, "seed {seed}: extended {e} > classic {c}");
        strict += usize::from(e < c);
    }
    assert!(strict > 0);
}

#[test]
fn parallel_search_is_deterministic() {
    for seed in 0..6 {
        let t = gen_random(4, 2, 2, 0.5, seed);
        let p = Problem::gather(root());
        let run = |parallel| {
            let options = SearchOptions {
                parallel,
                ..SearchOptions::default()
            };
            let r = optimal_rounds_with(&t, &p, ModelKind::ExtendedMulticore, budget(), options)
                .unwrap();
            (r.outcome, r.states_explored, r.witness)
        };
        assert_eq!(run(false), run(true));
    }
}

#[test]
fn informed_process_changes_the_key() {
    let t = gen_star(2, 2, 2);
    let p = Problem::broadcast(root());
    let s = initial_state(&t, &p, ModelKind::ClassicTelephone).unwrap();
    let mut a = s.clone();
    a.grant(ProcessRef::new(0, 1), DatumId::Root);
    let mut b = s.clone();
    b.grant(ProcessRef::new(1, 0), DatumId::Root);
    let mut c = s.clone();
    c.grant(ProcessRef::new(2, 0), DatumId::Root);
    let key = |x: &KnowledgeState| canonical_state(&t, &p, x).unwrap();
    assert_ne!(key(&s), key(&a));
    assert_ne!(key(&a), key(&b));
    assert_eq!(key(&b), key(&c));
}

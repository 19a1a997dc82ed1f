//! The slicing automaton of a pointed action-labeled Kripke structure, its
//! Join product with a hypernode automaton, and the top-level model-checking
//! decision.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use thiserror::Error;

use crate::filtration::{check_formula_against_open_kripke, FiltrationError};
use crate::hna::{Hna, HnaError};
use crate::kripke::{Kripke, KripkeError, OpenKripke, PointedLabeledKripke};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SlicingError {
    #[error("action `{0}` of the model is missing from the hypernode automaton")]
    ActionMismatch(String),
    #[error(transparent)]
    Hna(#[from] HnaError),
    #[error(transparent)]
    Kripke(#[from] KripkeError),
    #[error(transparent)]
    Filtration(#[from] FiltrationError),
}

/// One state of the slicing automaton: the open substructure that an entry
/// set induces for one action, plus the entry set of the successor state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceState {
    pub entry_worlds: BTreeSet<usize>,
    pub action: usize,
    pub substructure: OpenKripke,
    /// All `action`-successors of the substructure's exits.
    pub next_entries: BTreeSet<usize>,
}

/// Computes the slice a set of entry worlds induces for action `a`: the
/// ε-subgraph on worlds lying on an ε-path from the entries to a world with
/// an outgoing `a`-transition. Returns `None` when no such exit exists, in
/// which case no trace takes `a` next.
pub fn slice_step(
    model: &PointedLabeledKripke,
    entry_worlds: &BTreeSet<usize>,
    action: usize,
) -> Result<Option<SliceState>, SlicingError> {
    if action >= model.actions().len() {
        return Err(SlicingError::Hna(HnaError::UnknownAction(format!("#{action}"))));
    }
    let k = &model.kripke;
    let n = k.world_count();
    let mut eps_succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut eps_pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut action_out: Vec<bool> = vec![false; n];
    let mut action_succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (&(f, t), labels) in model.labeling.edges() {
        if labels.contains(&None) {
            eps_succ[f].push(t);
            eps_pred[t].push(f);
        }
        if labels.contains(&Some(action)) {
            action_out[f] = true;
            action_succ[f].push(t);
        }
    }

    // Forward ε-closure of the entries.
    let mut fwd = vec![false; n];
    let mut queue: VecDeque<usize> = entry_worlds.iter().copied().collect();
    for &w in entry_worlds {
        fwd[w] = true;
    }
    while let Some(w) = queue.pop_front() {
        for &t in &eps_succ[w] {
            if !fwd[t] {
                fwd[t] = true;
                queue.push_back(t);
            }
        }
    }
    let exits: BTreeSet<usize> = (0..n).filter(|&w| fwd[w] && action_out[w]).collect();
    if exits.is_empty() {
        return Ok(None);
    }

    // Backward ε-closure of the exits; the substructure keeps worlds on some
    // ε-path from the entries to an exit.
    let mut bwd = vec![false; n];
    let mut queue: VecDeque<usize> = exits.iter().copied().collect();
    for &w in &exits {
        bwd[w] = true;
    }
    while let Some(w) = queue.pop_front() {
        for &p in &eps_pred[w] {
            if !bwd[p] {
                bwd[p] = true;
                queue.push_back(p);
            }
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&w| fwd[w] && bwd[w]).collect();

    let mut sub = Kripke::new(k.vars().clone(), k.domain().clone());
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    for &w in &kept {
        let id = sub.add_world(k.world_name(w), k.valuation(w).clone());
        ids.insert(w, id);
    }
    for &w in &kept {
        for &t in &eps_succ[w] {
            if let Some(&tid) = ids.get(&t) {
                sub.add_edge(ids[&w], tid);
            }
        }
    }
    let sub_entries: BTreeSet<usize> = entry_worlds
        .iter()
        .filter_map(|w| ids.get(w).copied())
        .collect();
    let sub_exits: BTreeSet<usize> = exits.iter().map(|w| ids[w]).collect();
    let substructure = OpenKripke::new(sub, sub_entries, sub_exits)?;

    let mut next_entries = BTreeSet::new();
    for &w in &exits {
        next_entries.extend(action_succ[w].iter().copied());
    }
    Ok(Some(SliceState {
        entry_worlds: entry_worlds.clone(),
        action,
        substructure,
        next_entries,
    }))
}

/// The slicing automaton, fully explored: deterministic over actions, with
/// states keyed by (entry set, action). Termination is guaranteed because
/// entry sets range over subsets of the world set.
#[derive(Debug)]
pub struct SliceAutomaton {
    pub states: Vec<SliceState>,
    /// Successor state per (state, action), when the action can occur.
    pub trans: BTreeMap<(usize, usize), usize>,
    /// Initial state per first action.
    pub initials: BTreeMap<usize, usize>,
}

pub fn build_slice_automaton(model: &PointedLabeledKripke) -> Result<SliceAutomaton, SlicingError> {
    let mut states: Vec<SliceState> = Vec::new();
    let mut index: BTreeMap<(BTreeSet<usize>, usize), usize> = BTreeMap::new();
    let mut trans = BTreeMap::new();
    let mut initials = BTreeMap::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    let root: BTreeSet<usize> = BTreeSet::from([model.initial]);
    for action in 0..model.actions().len() {
        if let Some(slice) = slice_step(model, &root, action)? {
            let key = (root.clone(), action);
            let id = states.len();
            index.insert(key, id);
            states.push(slice);
            initials.insert(action, id);
            queue.push_back(id);
        }
    }
    while let Some(id) = queue.pop_front() {
        let entries = states[id].next_entries.clone();
        for action in 0..model.actions().len() {
            let key = (entries.clone(), action);
            if let Some(&existing) = index.get(&key) {
                trans.insert((id, action), existing);
                continue;
            }
            if let Some(slice) = slice_step(model, &entries, action)? {
                let next = states.len();
                index.insert(key, next);
                states.push(slice);
                trans.insert((id, action), next);
                queue.push_back(next);
            }
        }
    }
    Ok(SliceAutomaton {
        states,
        trans,
        initials,
    })
}

/// One state of the Join automaton: a slice paired with the hypernode whose
/// formula it must model. `ok` records whether it does; final states are
/// exactly the failing ones.
#[derive(Debug, Clone)]
pub struct JoinState {
    pub slice: usize,
    pub node: usize,
    pub ok: bool,
}

#[derive(Debug)]
pub struct Join {
    pub slices: SliceAutomaton,
    pub states: Vec<JoinState>,
    pub trans: BTreeMap<(usize, usize), usize>,
    pub initials: Vec<usize>,
}

fn check_model_actions(hna: &Hna, model: &PointedLabeledKripke) -> Result<Vec<usize>, SlicingError> {
    // The HNA must know every action the model can emit; its transition
    // function is total over its own action set.
    let mut map = Vec::with_capacity(model.actions().len());
    for a in model.actions() {
        match hna.action_id(a) {
            Some(id) => map.push(id),
            None => return Err(SlicingError::ActionMismatch(a.clone())),
        }
    }
    Ok(map)
}

/// Product of the slicing automaton with the hypernode automaton. Each
/// state's `ok` flag is decided by the hypernode-logic pipeline on its slice
/// substructure, memoized by substructure fingerprint and node formula.
pub fn build_join(hna: &Hna, model: &PointedLabeledKripke) -> Result<Join, SlicingError> {
    let action_map = check_model_actions(hna, model)?;
    let slices = build_slice_automaton(model)?;
    let mut states: Vec<JoinState> = Vec::new();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut trans = BTreeMap::new();
    let mut initials = Vec::new();
    let mut ok_cache: HashMap<(String, usize), bool> = HashMap::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    let mut intern =
        |slice: usize, node: usize, states: &mut Vec<JoinState>, queue: &mut VecDeque<usize>, ok_cache: &mut HashMap<(String, usize), bool>| -> Result<usize, SlicingError> {
            if let Some(&id) = index.get(&(slice, node)) {
                return Ok(id);
            }
            let sub = &slices.states[slice].substructure;
            let key = (fingerprint(sub), node);
            let ok = match ok_cache.get(&key) {
                Some(&ok) => ok,
                None => {
                    let outcome =
                        check_formula_against_open_kripke(sub, &hna.node(node).formula)?;
                    ok_cache.insert(key, outcome.holds);
                    outcome.holds
                }
            };
            let id = states.len();
            states.push(JoinState { slice, node, ok });
            index.insert((slice, node), id);
            queue.push_back(id);
            Ok(id)
        };

    for (&_action, &slice_id) in &slices.initials {
        let id = intern(slice_id, hna.initial(), &mut states, &mut queue, &mut ok_cache)?;
        if !initials.contains(&id) {
            initials.push(id);
        }
    }
    while let Some(id) = queue.pop_front() {
        let JoinState { slice, node, .. } = states[id];
        let slice_action = slices.states[slice].action;
        let next_node = hna
            .transition(node, action_map[slice_action])
            .expect("validated totality");
        for action in 0..model.actions().len() {
            if let Some(&next_slice) = slices.trans.get(&(slice, action)) {
                let next = intern(next_slice, next_node, &mut states, &mut queue, &mut ok_cache)?;
                trans.insert((id, action), next);
            }
        }
    }
    Ok(Join {
        slices,
        states,
        trans,
        initials,
    })
}

/// Canonical text of a slice substructure, used as a memoization key for
/// formula checks.
fn fingerprint(sub: &OpenKripke) -> String {
    let mut out = String::new();
    for w in 0..sub.kripke.world_count() {
        out.push_str(sub.kripke.world_name(w));
        for &v in &sub.kripke.valuation(w).0 {
            out.push_str(&format!(",{v}"));
        }
        out.push(';');
    }
    for &(f, t) in sub.kripke.delta() {
        out.push_str(&format!("{f}>{t};"));
    }
    out.push_str(&format!("{:?}|{:?}", sub.entries, sub.exits));
    out
}

/// A reachable specification violation: the action-sequence witness, the
/// violated hypernode, and the offending slice's substructure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterExample {
    pub witness: Vec<usize>,
    pub node: usize,
    pub substructure: OpenKripke,
}

/// Model-checking verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Violated(CounterExample),
    /// The depth cap was reached before the reachable state space closed.
    Unknown,
}

/// Decides whether the model's action-labeled traces are accepted by the
/// hypernode automaton: breadth-first search for a reachable failing Join
/// state. The state space is finite, so exploration terminates without a
/// cap; `max_depth` optionally limits the search for diagnostics and yields
/// `Unknown` only if it is hit before closure.
pub fn model_check(
    hna: &Hna,
    model: &PointedLabeledKripke,
    max_depth: Option<usize>,
) -> Result<Verdict, SlicingError> {
    let action_map = check_model_actions(hna, model)?;
    let mut ok_cache: HashMap<(String, usize), bool> = HashMap::new();
    let mut check = |sub: &OpenKripke, node: usize| -> Result<bool, SlicingError> {
        let key = (fingerprint(sub), node);
        if let Some(&ok) = ok_cache.get(&key) {
            return Ok(ok);
        }
        let outcome = check_formula_against_open_kripke(sub, &hna.node(node).formula)?;
        ok_cache.insert(key, outcome.holds);
        Ok(outcome.holds)
    };

    // Lazy BFS over (entry set, hypernode) pairs; each action step computes
    // the slice and its verdict.
    type Key = (BTreeSet<usize>, usize);
    let mut seen: BTreeSet<Key> = BTreeSet::new();
    let mut frontier: Vec<(Key, Vec<usize>)> = Vec::new();
    let root = (BTreeSet::from([model.initial]), hna.initial());
    seen.insert(root.clone());
    frontier.push((root, Vec::new()));
    let mut depth = 0usize;
    let mut slice_cache: HashMap<(BTreeSet<usize>, usize), Option<SliceState>> = HashMap::new();

    while !frontier.is_empty() {
        if let Some(cap) = max_depth {
            if depth >= cap {
                return Ok(Verdict::Unknown);
            }
        }
        depth += 1;
        let mut next_frontier = Vec::new();
        for ((entries, node), path) in frontier {
            for action in 0..model.actions().len() {
                let slice = slice_cache
                    .entry((entries.clone(), action))
                    .or_insert_with(|| {
                        slice_step(model, &entries, action).expect("valid action id")
                    })
                    .clone();
                let Some(slice) = slice else { continue };
                let mut witness = path.clone();
                witness.push(action);
                if !check(&slice.substructure, node)? {
                    return Ok(Verdict::Violated(CounterExample {
                        witness,
                        node,
                        substructure: slice.substructure.clone(),
                    }));
                }
                let next_node = hna
                    .transition(node, action_map[action])
                    .expect("validated totality");
                let key = (slice.next_entries.clone(), next_node);
                if seen.insert(key.clone()) {
                    next_frontier.push((key, witness));
                }
            }
        }
        frontier = next_frontier;
    }
    Ok(Verdict::Holds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hna::HnaNode;
    use crate::logic::Formula;
    use crate::segments::{Domain, SegmentValuation, VarSet};

    fn dom01() -> Domain {
        Domain::new(["0", "1"]).unwrap()
    }

    fn single_action_model() -> PointedLabeledKripke {
        // w0 --a--> w1.
        let vars = VarSet::new(["x"]).unwrap();
        let mut k = Kripke::new(vars, dom01());
        let w0 = k.add_world("w0", SegmentValuation(vec![0]));
        let w1 = k.add_world("w1", SegmentValuation(vec![1]));
        k.add_edge(w0, w1);
        let mut lab = crate::kripke::ActionLabeling::new(vec!["a".to_string()]);
        lab.set_labels((w0, w1), BTreeSet::from([Some(0)]));
        PointedLabeledKripke::new(k, lab, w0).unwrap()
    }

    fn top_hna(actions: Vec<String>) -> Hna {
        let top = Formula::forall("p", Formula::atom("x", "p", "x", "p"));
        let nodes = vec![HnaNode {
            name: "n".into(),
            formula: top.clone(),
            label_text: top.to_string(),
        }];
        let mut h = Hna::new(actions.clone(), nodes, 0).unwrap();
        for a in 0..actions.len() {
            h.set_transition(0, a, 0);
        }
        h
    }

    #[test]
    fn slice_step_simple_edge() {
        let m = single_action_model();
        let slice = slice_step(&m, &BTreeSet::from([0]), 0).unwrap().unwrap();
        assert_eq!(slice.substructure.kripke.world_count(), 1);
        assert_eq!(slice.substructure.entries, BTreeSet::from([0]));
        assert_eq!(slice.substructure.exits, BTreeSet::from([0]));
        assert_eq!(slice.next_entries, BTreeSet::from([1]));
        // From w1 nothing continues.
        assert!(slice_step(&m, &BTreeSet::from([1]), 0).unwrap().is_none());
    }

    #[test]
    fn slice_automaton_self_loop() {
        // One world with an a-labeled self-loop: a single reachable slice.
        let vars = VarSet::new(["x"]).unwrap();
        let mut k = Kripke::new(vars, dom01());
        let w0 = k.add_world("w0", SegmentValuation(vec![0]));
        k.add_edge(w0, w0);
        let mut lab = crate::kripke::ActionLabeling::new(vec!["a".to_string()]);
        lab.set_labels((w0, w0), BTreeSet::from([Some(0)]));
        let m = PointedLabeledKripke::new(k, lab, w0).unwrap();
        let auto = build_slice_automaton(&m).unwrap();
        assert_eq!(auto.states.len(), 1);
        assert_eq!(auto.trans.get(&(0, 0)), Some(&0));
    }

    #[test]
    fn join_all_top_has_no_final() {
        let m = single_action_model();
        let h = top_hna(vec!["a".to_string()]);
        let join = build_join(&h, &m).unwrap();
        assert!(join.states.iter().all(|s| s.ok));
        assert_eq!(model_check(&h, &m, None).unwrap(), Verdict::Holds);
    }

    #[test]
    fn join_unsatisfiable_label_fails_at_depth_one() {
        let m = single_action_model();
        let bad = Formula::exists("p", Formula::not(Formula::atom("x", "p", "x", "p")));
        let nodes = vec![HnaNode {
            name: "n".into(),
            formula: bad.clone(),
            label_text: bad.to_string(),
        }];
        let mut h = Hna::new(vec!["a".to_string()], nodes, 0).unwrap();
        h.set_transition(0, 0, 0);
        match model_check(&h, &m, None).unwrap() {
            Verdict::Violated(cex) => assert_eq!(cex.witness, vec![0]),
            other => panic!("expected violation, got {other:?}"),
        }
    }

    #[test]
    fn depth_cap_yields_unknown() {
        let m = single_action_model();
        let h = top_hna(vec!["a".to_string()]);
        assert_eq!(model_check(&h, &m, Some(0)).unwrap(), Verdict::Unknown);
        assert_eq!(model_check(&h, &m, Some(5)).unwrap(), Verdict::Holds);
    }
}

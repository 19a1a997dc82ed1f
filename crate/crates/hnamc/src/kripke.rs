//! Kripke structures, action labelings, open Kripke structures, path
//! machinery, and the translation of open Kripke structures to stutter-free
//! automata.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::segments::{
    stutter_reduce, unzip, Domain, SegmentValuation, UnzippedSegment, VarSet, ZippedSegment,
};
use crate::sfa::ops::async_product;
use crate::sfa::{Sfa, SfaError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KripkeError {
    #[error("world index out of range")]
    WorldRange,
    #[error("entry and exit world sets must be non-empty")]
    EmptyBoundary,
    #[error("edge ({0}, {1}) is not in the transition relation")]
    UnknownEdge(String, String),
    #[error(transparent)]
    Sfa(#[from] SfaError),
}

/// An action label on an edge: a named action or the empty label ε.
/// `None` is ε.
pub type EdgeLabel = Option<usize>;

/// A Kripke structure: worlds with total valuations over a finite-domain
/// variable set, and a transition relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kripke {
    vars: VarSet,
    domain: Domain,
    world_names: Vec<String>,
    valuations: Vec<SegmentValuation>,
    delta: BTreeSet<(usize, usize)>,
}

impl Kripke {
    pub fn new(vars: VarSet, domain: Domain) -> Self {
        Kripke {
            vars,
            domain,
            world_names: Vec::new(),
            valuations: Vec::new(),
            delta: BTreeSet::new(),
        }
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn world_count(&self) -> usize {
        self.world_names.len()
    }

    pub fn world_name(&self, id: usize) -> &str {
        &self.world_names[id]
    }

    pub fn world_id(&self, name: &str) -> Option<usize> {
        self.world_names.iter().position(|n| n == name)
    }

    pub fn valuation(&self, world: usize) -> &SegmentValuation {
        &self.valuations[world]
    }

    pub fn value(&self, world: usize, var: usize) -> u16 {
        self.valuations[world].0[var]
    }

    pub fn delta(&self) -> &BTreeSet<(usize, usize)> {
        &self.delta
    }

    pub fn add_world(&mut self, name: impl Into<String>, valuation: SegmentValuation) -> usize {
        self.world_names.push(name.into());
        self.valuations.push(valuation);
        self.world_names.len() - 1
    }

    pub fn add_edge(&mut self, from: usize, to: usize) {
        self.delta.insert((from, to));
    }

    pub fn successors(&self, world: usize) -> impl Iterator<Item = usize> + '_ {
        self.delta
            .range((world, 0)..=(world, usize::MAX))
            .map(|&(_, t)| t)
    }
}

/// Assigns a non-empty set of labels over A ∪ {ε} to every edge of the
/// transition relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionLabeling {
    actions: Vec<String>,
    labels: BTreeMap<(usize, usize), BTreeSet<EdgeLabel>>,
}

impl ActionLabeling {
    pub fn new(actions: Vec<String>) -> Self {
        ActionLabeling {
            actions,
            labels: BTreeMap::new(),
        }
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_id(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn set_labels(&mut self, edge: (usize, usize), labels: BTreeSet<EdgeLabel>) {
        self.labels.insert(edge, labels);
    }

    pub fn labels(&self, edge: (usize, usize)) -> Option<&BTreeSet<EdgeLabel>> {
        self.labels.get(&edge)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&(usize, usize), &BTreeSet<EdgeLabel>)> {
        self.labels.iter()
    }
}

/// A Kripke structure with entry and exit worlds delimiting trace segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenKripke {
    pub kripke: Kripke,
    pub entries: BTreeSet<usize>,
    pub exits: BTreeSet<usize>,
}

impl OpenKripke {
    pub fn new(
        kripke: Kripke,
        entries: BTreeSet<usize>,
        exits: BTreeSet<usize>,
    ) -> Result<Self, KripkeError> {
        if entries.is_empty() || exits.is_empty() {
            return Err(KripkeError::EmptyBoundary);
        }
        let bound = kripke.world_count();
        if entries.iter().chain(exits.iter()).any(|&w| w >= bound) {
            return Err(KripkeError::WorldRange);
        }
        Ok(OpenKripke {
            kripke,
            entries,
            exits,
        })
    }

    /// True when the reachable portion of the transition relation has no
    /// cycle, which makes path enumeration exhaustive.
    pub fn is_acyclic(&self) -> bool {
        reachable_acyclic(&self.kripke, self.entries.iter().copied())
    }
}

/// A Kripke structure with an action labeling and an initial world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointedLabeledKripke {
    pub kripke: Kripke,
    pub labeling: ActionLabeling,
    pub initial: usize,
}

impl PointedLabeledKripke {
    pub fn new(
        kripke: Kripke,
        labeling: ActionLabeling,
        initial: usize,
    ) -> Result<Self, KripkeError> {
        if initial >= kripke.world_count() {
            return Err(KripkeError::WorldRange);
        }
        Ok(PointedLabeledKripke {
            kripke,
            labeling,
            initial,
        })
    }

    pub fn actions(&self) -> &[String] {
        self.labeling.actions()
    }

    pub fn is_acyclic(&self) -> bool {
        reachable_acyclic(&self.kripke, std::iter::once(self.initial))
    }

    /// Infinite traces are meant to carry infinitely many actions; that holds
    /// structurally iff no reachable cycle is labeled ε-only throughout.
    /// Returns the name of a world on an offending cycle, if any.
    pub fn epsilon_only_cycle(&self) -> Option<String> {
        let n = self.kripke.world_count();
        let mut eps_succ: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (&(a, b), labels) in self.labeling.edges() {
            if labels.contains(&None) {
                eps_succ[a].push(b);
            }
        }
        // Restrict to worlds reachable from the initial world.
        let mut reach = vec![false; n];
        let mut queue = VecDeque::from([self.initial]);
        reach[self.initial] = true;
        while let Some(w) = queue.pop_front() {
            for t in self.kripke.successors(w) {
                if !reach[t] {
                    reach[t] = true;
                    queue.push_back(t);
                }
            }
        }
        // Cycle detection over ε-edges among reachable worlds.
        let mut color = vec![0u8; n];
        fn dfs(w: usize, eps: &Vec<Vec<usize>>, color: &mut Vec<u8>) -> Option<usize> {
            color[w] = 1;
            for &t in &eps[w] {
                match color[t] {
                    0 => {
                        if let Some(c) = dfs(t, eps, color) {
                            return Some(c);
                        }
                    }
                    1 => return Some(t),
                    _ => {}
                }
            }
            color[w] = 2;
            None
        }
        for w in 0..n {
            if reach[w] && color[w] == 0 {
                if let Some(c) = dfs(w, &eps_succ, &mut color) {
                    return Some(self.kripke.world_name(c).to_string());
                }
            }
        }
        None
    }
}

fn reachable_acyclic(k: &Kripke, roots: impl Iterator<Item = usize>) -> bool {
    let n = k.world_count();
    let mut color = vec![0u8; n];
    fn dfs(w: usize, k: &Kripke, color: &mut Vec<u8>) -> bool {
        color[w] = 1;
        for t in k.successors(w) {
            match color[t] {
                0 => {
                    if !dfs(t, k, color) {
                        return false;
                    }
                }
                1 => return false,
                _ => {}
            }
        }
        color[w] = 2;
        true
    }
    for r in roots {
        if color[r] == 0 && !dfs(r, k, &mut color) {
            return false;
        }
    }
    true
}

/// All entry-to-exit world sequences of at most `max_len` worlds.
pub fn paths(ok: &OpenKripke, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = ok.entries.iter().map(|&w| vec![w]).collect();
    while let Some(path) = stack.pop() {
        let last = *path.last().expect("non-empty path");
        if ok.exits.contains(&last) {
            out.push(path.clone());
        }
        if path.len() < max_len {
            for t in ok.kripke.successors(last) {
                let mut next = path.clone();
                next.push(t);
                stack.push(next);
            }
        }
    }
    out.sort();
    out
}

/// Which reading of the generated segment set to use: `Joint` keeps each
/// path's variables together; `Product` combines the per-variable string
/// sets independently (the reading the automaton pipeline realizes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentMode {
    Joint,
    Product,
}

/// Stutter-reduced unzipped segments generated by paths of at most `max_len`
/// worlds. Joint mode reduces each path's segment; product mode combines,
/// for each variable independently, the reduced string of some path.
/// Joint is always a subset of product.
pub fn generated_segments(
    ok: &OpenKripke,
    max_len: usize,
    mode: SegmentMode,
) -> BTreeSet<UnzippedSegment> {
    let ps = paths(ok, max_len);
    let arity = ok.kripke.vars().len();
    match mode {
        SegmentMode::Joint => ps
            .iter()
            .map(|p| {
                let steps = p.iter().map(|&w| ok.kripke.valuation(w).clone()).collect();
                stutter_reduce(&unzip(&ZippedSegment::new(steps), arity))
            })
            .collect(),
        SegmentMode::Product => {
            let mut per_var: Vec<BTreeSet<Vec<u16>>> = vec![BTreeSet::new(); arity];
            for p in &ps {
                for x in 0..arity {
                    let vals: Vec<u16> = p.iter().map(|&w| ok.kripke.value(w, x)).collect();
                    per_var[x].insert(crate::segments::stutter_reduce_string(&vals));
                }
            }
            let mut out = BTreeSet::new();
            let mut combos: Vec<Vec<Vec<u16>>> = vec![Vec::new()];
            for x in 0..arity {
                let mut next = Vec::new();
                for c in &combos {
                    for s in &per_var[x] {
                        let mut t = c.clone();
                        t.push(s.clone());
                        next.push(t);
                    }
                }
                combos = next;
            }
            for c in combos {
                out.insert(UnzippedSegment::new(c));
            }
            out
        }
    }
}

/// Per-variable block automaton for `x`: states are worlds plus a start
/// state; a world is entered exactly on its own x-value, so stutter-freedom
/// is structural. The component language is the set of reduced x-strings of
/// entry-to-exit paths.
fn block_automaton(ok: &OpenKripke, var: usize) -> Result<Sfa, SfaError> {
    let k = &ok.kripke;
    let n = k.world_count();
    let single = VarSet::new([k.vars().name(var)]).expect("one variable");
    let mut a = Sfa::new(single, k.domain().clone());
    let start = a.add_state("start")?;
    a.mark_initial(start);
    let mut ids = Vec::with_capacity(n);
    for w in 0..n {
        ids.push(a.add_state(format!("w_{}", k.world_name(w)))?);
    }

    // Forward closure within a constant x-value region.
    let const_reach = |seed: &BTreeSet<usize>, value: u16| -> BTreeSet<usize> {
        let mut seen: BTreeSet<usize> =
            seed.iter().copied().filter(|&w| k.value(w, var) == value).collect();
        let mut queue: VecDeque<usize> = seen.iter().copied().collect();
        while let Some(w) = queue.pop_front() {
            for t in k.successors(w) {
                if k.value(t, var) == value && seen.insert(t) {
                    queue.push_back(t);
                }
            }
        }
        seen
    };

    // start --σ--> w iff some entry-rooted path reaches w with x constantly σ.
    for value in 0..k.domain().len() as u16 {
        let reach = const_reach(&ok.entries, value);
        let letter = crate::segments::Letter::new(vec![crate::segments::Sym::Val(value)])
            .expect("single live coordinate");
        for &w in &reach {
            a.add_transition(start, letter.clone(), ids[w])?;
        }
    }

    // w --σ'--> w' iff some path from w has x-reduction V(w,x)·σ' and ends
    // at w' with value σ'.
    for w in 0..n {
        let own = k.value(w, var);
        let block: BTreeSet<usize> = const_reach(&BTreeSet::from([w]), own);
        let mut boundary: BTreeMap<u16, BTreeSet<usize>> = BTreeMap::new();
        for &u in &block {
            for t in k.successors(u) {
                let tv = k.value(t, var);
                if tv != own {
                    boundary.entry(tv).or_default().insert(t);
                }
            }
        }
        for (value, seeds) in boundary {
            let letter = crate::segments::Letter::new(vec![crate::segments::Sym::Val(value)])
                .expect("single live coordinate");
            for &t in &const_reach(&seeds, value) {
                a.add_transition(ids[w], letter.clone(), ids[t])?;
            }
        }
    }

    // Final iff an x-constant path reaches an exit: backward closure from
    // exits within each value region.
    let mut final_worlds: BTreeSet<usize> = BTreeSet::new();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(f, t) in k.delta() {
        preds[t].push(f);
    }
    for value in 0..k.domain().len() as u16 {
        let mut seen: BTreeSet<usize> = ok
            .exits
            .iter()
            .copied()
            .filter(|&w| k.value(w, var) == value)
            .collect();
        let mut queue: VecDeque<usize> = seen.iter().copied().collect();
        while let Some(w) = queue.pop_front() {
            for &p in &preds[w] {
                if k.value(p, var) == value && seen.insert(p) {
                    queue.push_back(p);
                }
            }
        }
        final_worlds.extend(seen);
    }
    for w in final_worlds {
        a.mark_final(ids[w]);
    }
    Ok(a)
}

/// Stutter-free automaton induced by an open Kripke structure: the
/// asynchronous product of one block automaton per variable. Its stripped
/// language is the product-mode generated segment set.
pub fn to_sfa(ok: &OpenKripke) -> Result<Sfa, KripkeError> {
    let mut components = Vec::with_capacity(ok.kripke.vars().len());
    for x in 0..ok.kripke.vars().len() {
        components.push(block_automaton(ok, x)?);
    }
    let refs: Vec<&Sfa> = components.iter().collect();
    Ok(async_product(&refs)?)
}

//! Closure operations on stutter-free automata: boolean operations, subset
//! determinization, completion, complementation, difference, and the
//! asynchronous product used for self-composition.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::{Sfa, SfaError};
use crate::segments::{all_letters, letters_compatible, Letter, Sym, VarSet};

fn check_same_shape(a: &Sfa, b: &Sfa) -> Result<(), SfaError> {
    if a.vars() != b.vars() || a.domain() != b.domain() {
        return Err(SfaError::VarMismatch);
    }
    Ok(())
}

/// Disjoint union: states, initials, finals, and transitions side by side.
pub fn union(a: &Sfa, b: &Sfa) -> Result<Sfa, SfaError> {
    check_same_shape(a, b)?;
    let mut out = Sfa::new(a.vars().clone(), a.domain().clone());
    let mut a_ids = Vec::with_capacity(a.state_count());
    for q in 0..a.state_count() {
        a_ids.push(add_state_fresh(&mut out, a.state_name(q)));
    }
    let mut b_ids = Vec::with_capacity(b.state_count());
    for q in 0..b.state_count() {
        b_ids.push(add_state_fresh(&mut out, b.state_name(q)));
    }
    for &q in a.initials() {
        out.mark_initial(a_ids[q]);
    }
    for &q in b.initials() {
        out.mark_initial(b_ids[q]);
    }
    for &q in a.finals() {
        out.mark_final(a_ids[q]);
    }
    for &q in b.finals() {
        out.mark_final(b_ids[q]);
    }
    for (src, letter, dst) in a.transitions() {
        out.add_transition(a_ids[src], letter.clone(), a_ids[dst])?;
    }
    for (src, letter, dst) in b.transitions() {
        out.add_transition(b_ids[src], letter.clone(), b_ids[dst])?;
    }
    Ok(out)
}

fn add_state_fresh(out: &mut Sfa, base: &str) -> usize {
    if let Ok(id) = out.add_state(base) {
        return id;
    }
    let mut k = 2;
    loop {
        let candidate = format!("{base}_u{k}");
        if let Ok(id) = out.add_state(candidate) {
            return id;
        }
        k += 1;
    }
}

/// Synchronous product on identical letters; only reachable product states
/// are kept.
pub fn intersection(a: &Sfa, b: &Sfa) -> Result<Sfa, SfaError> {
    check_same_shape(a, b)?;
    let mut out = Sfa::new(a.vars().clone(), a.domain().clone());
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for &qa in a.initials() {
        for &qb in b.initials() {
            let id = out
                .add_state(format!("{}__{}", a.state_name(qa), b.state_name(qb)))
                .unwrap_or_else(|_| add_state_fresh(&mut out, "p"));
            ids.insert((qa, qb), id);
            out.mark_initial(id);
            queue.push_back((qa, qb));
        }
    }
    while let Some((qa, qb)) = queue.pop_front() {
        let src = ids[&(qa, qb)];
        if a.finals().contains(&qa) && b.finals().contains(&qb) {
            out.mark_final(src);
        }
        let tb = b.transitions_from(qb);
        for (letter, dsts_a) in a.transitions_from(qa) {
            let Some(dsts_b) = tb.get(letter) else { continue };
            for &da in dsts_a {
                for &db in dsts_b {
                    let dst = *ids.entry((da, db)).or_insert_with(|| {
                        let id = out
                            .add_state(format!("{}__{}", a.state_name(da), b.state_name(db)))
                            .unwrap_or_else(|_| add_state_fresh(&mut out, "p"));
                        queue.push_back((da, db));
                        id
                    });
                    out.add_transition(src, letter.clone(), dst)?;
                }
            }
        }
    }
    Ok(out)
}

// add_state may fail on a name collision; fall back to a fresh suffix.
impl Sfa {
    fn add_state_auto(&mut self, base: String) -> usize {
        match self.add_state(base.clone()) {
            Ok(id) => id,
            Err(_) => add_state_fresh(self, &base),
        }
    }
}

/// Subset construction restricted to reachable subsets. The result has a
/// single initial state (the set of all initial states) and preserves the
/// language.
pub fn determinize(a: &Sfa) -> Sfa {
    let mut out = Sfa::new(a.vars().clone(), a.domain().clone());
    if a.initials().is_empty() {
        return out;
    }
    let mut ids: HashMap<BTreeSet<usize>, usize> = HashMap::new();
    let start: BTreeSet<usize> = a.initials().clone();
    let start_id = out.add_state_auto("d0".to_string());
    out.mark_initial(start_id);
    if start.iter().any(|q| a.finals().contains(q)) {
        out.mark_final(start_id);
    }
    ids.insert(start.clone(), start_id);
    let mut queue = VecDeque::from([start]);
    while let Some(subset) = queue.pop_front() {
        let src = ids[&subset];
        let mut by_letter: BTreeMap<&Letter, BTreeSet<usize>> = BTreeMap::new();
        for &q in &subset {
            for (letter, dsts) in a.transitions_from(q) {
                by_letter.entry(letter).or_default().extend(dsts.iter().copied());
            }
        }
        for (letter, next) in by_letter {
            let dst = match ids.get(&next) {
                Some(&id) => id,
                None => {
                    let id = out.add_state_auto(format!("d{}", ids.len()));
                    if next.iter().any(|q| a.finals().contains(q)) {
                        out.mark_final(id);
                    }
                    ids.insert(next.clone(), id);
                    queue.push_back(next);
                    id
                }
            };
            out.add_transition(src, letter.clone(), dst).expect("letters unchanged");
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum CompleteKey {
    Main(usize, Option<Letter>),
    SinkStart,
    Sink(Letter),
}

/// Completion of a deterministic automaton via last-letter tracking: main
/// states are (state, last letter read) and missing transitions fall into a
/// universal-shaped, non-final sink. Every stutter-free `#`-padded word gets
/// exactly one run and the language is unchanged.
///
/// The states blow up by the letter count, so this explicit construction is
/// meant for small alphabets; `difference` simulates the same automaton
/// lazily where scale matters.
pub fn complete(a: &Sfa) -> Result<Sfa, SfaError> {
    if !a.is_deterministic() {
        return Err(SfaError::NotDeterministic);
    }
    let letters = all_letters(a.vars(), a.domain());
    let mut out = Sfa::new(a.vars().clone(), a.domain().clone());
    let mut ids: HashMap<CompleteKey, usize> = HashMap::new();
    let mut queue: VecDeque<CompleteKey> = VecDeque::new();

    let initial_key = match a.initials().iter().next() {
        Some(&q0) => CompleteKey::Main(q0, None),
        None => CompleteKey::SinkStart,
    };
    let init_id = out.add_state_auto("c0".to_string());
    if let CompleteKey::Main(q0, _) = &initial_key {
        if a.finals().contains(q0) {
            out.mark_final(init_id);
        }
    }
    out.mark_initial(init_id);
    ids.insert(initial_key.clone(), init_id);
    queue.push_back(initial_key);

    while let Some(key) = queue.pop_front() {
        let src = ids[&key];
        let moves: Vec<(Letter, CompleteKey)> = match &key {
            CompleteKey::Main(q, last) => letters
                .iter()
                .filter(|v| last.as_ref().is_none_or(|u| letters_compatible(u, v)))
                .map(|v| {
                    let tgt = a
                        .transitions_from(*q)
                        .get(v)
                        .and_then(|dsts| dsts.iter().next().copied());
                    match tgt {
                        Some(q2) => (v.clone(), CompleteKey::Main(q2, Some(v.clone()))),
                        None => (v.clone(), CompleteKey::Sink(v.clone())),
                    }
                })
                .collect(),
            CompleteKey::SinkStart => letters
                .iter()
                .map(|v| (v.clone(), CompleteKey::Sink(v.clone())))
                .collect(),
            CompleteKey::Sink(u) => letters
                .iter()
                .filter(|v| letters_compatible(u, v))
                .map(|v| (v.clone(), CompleteKey::Sink(v.clone())))
                .collect(),
        };
        for (letter, next_key) in moves {
            let dst = match ids.get(&next_key) {
                Some(&id) => id,
                None => {
                    let id = out.add_state_auto(format!("c{}", ids.len()));
                    if let CompleteKey::Main(q, _) = &next_key {
                        if a.finals().contains(q) {
                            out.mark_final(id);
                        }
                    }
                    ids.insert(next_key.clone(), id);
                    queue.push_back(next_key);
                    id
                }
            };
            out.add_transition(src, letter, dst)?;
        }
    }
    Ok(out)
}

/// Complement of a deterministic and complete automaton: final and non-final
/// states swap. The language becomes the stutter-free universe minus L(A).
pub fn complement(a: &Sfa) -> Result<Sfa, SfaError> {
    if !a.is_deterministic() {
        return Err(SfaError::NotDeterministic);
    }
    if !a.is_complete() {
        return Err(SfaError::NotComplete);
    }
    let mut out = a.clone();
    let flipped: BTreeSet<usize> =
        (0..a.state_count()).filter(|q| !a.finals().contains(q)).collect();
    out.finals = flipped;
    Ok(out)
}

/// Language difference L(A) \ L(B), computed as the product of A with an
/// on-the-fly determinized-completed-complemented B: the B side is a subset
/// simulation (empty subset = sink), so only states reachable through A's own
/// transitions ever materialize. Language-equal to
/// `intersection(a, complement(complete(determinize(b))))`.
pub fn difference(a: &Sfa, b: &Sfa) -> Result<Sfa, SfaError> {
    check_same_shape(a, b)?;
    let mut out = Sfa::new(a.vars().clone(), a.domain().clone());
    let mut ids: HashMap<(usize, BTreeSet<usize>), usize> = HashMap::new();
    let mut queue: VecDeque<(usize, BTreeSet<usize>)> = VecDeque::new();
    let b_init: BTreeSet<usize> = b.initials().clone();
    for &qa in a.initials() {
        let key = (qa, b_init.clone());
        let id = out.add_state_auto(format!("s{}", ids.len()));
        out.mark_initial(id);
        ids.insert(key.clone(), id);
        queue.push_back(key);
    }
    while let Some((qa, subset)) = queue.pop_front() {
        let src = ids[&(qa, subset.clone())];
        if a.finals().contains(&qa) && subset.iter().all(|q| !b.finals().contains(q)) {
            out.mark_final(src);
        }
        for (letter, dsts_a) in a.transitions_from(qa) {
            let mut next_b = BTreeSet::new();
            for &qb in &subset {
                if let Some(dsts) = b.transitions_from(qb).get(letter) {
                    next_b.extend(dsts.iter().copied());
                }
            }
            for &da in dsts_a {
                let key = (da, next_b.clone());
                let dst = match ids.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = out.add_state_auto(format!("s{}", ids.len()));
                        ids.insert(key.clone(), id);
                        queue.push_back(key);
                        id
                    }
                };
                out.add_transition(src, letter.clone(), dst)?;
            }
        }
    }
    Ok(out)
}

/// One coordinate of an asynchronous product state: a component state, or
/// the terminated sentinel once that component's variables have all gone `#`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum CompState {
    At(usize),
    Done,
}

/// Asynchronous product of automata over pairwise-disjoint variable sets.
/// On a joint letter, each component either takes its own transition on the
/// letter's restriction to its variables, or — when that restriction is
/// all-`#` — must be final (or already terminated) and moves to its
/// terminated sentinel. A segment is accepted iff each component accepts the
/// restriction of the segment to its variables.
pub fn async_product(components: &[&Sfa]) -> Result<Sfa, SfaError> {
    assert!(!components.is_empty(), "async_product needs at least one component");
    let domain = components[0].domain().clone();
    let mut names: Vec<String> = Vec::new();
    let mut offsets = Vec::with_capacity(components.len());
    for c in components {
        if c.domain() != &domain {
            return Err(SfaError::VarMismatch);
        }
        offsets.push(names.len());
        for v in c.vars().names() {
            if names.iter().any(|n| n == v) {
                return Err(SfaError::VarOverlap(v.to_string()));
            }
            names.push(v.to_string());
        }
    }
    let vars = VarSet::new(names).expect("non-empty and distinct");
    let arity = vars.len();
    let mut out = Sfa::new(vars, domain);

    let mut ids: HashMap<Vec<CompState>, usize> = HashMap::new();
    let mut queue: VecDeque<Vec<CompState>> = VecDeque::new();

    // Initial tuples: every combination of component initial states.
    let mut initial_tuples: Vec<Vec<CompState>> = vec![Vec::new()];
    for c in components {
        let mut next = Vec::new();
        for tuple in &initial_tuples {
            for &q in c.initials() {
                let mut t = tuple.clone();
                t.push(CompState::At(q));
                next.push(t);
            }
        }
        initial_tuples = next;
    }
    for tuple in initial_tuples {
        let id = out.add_state_auto(format!("s{}", ids.len()));
        out.mark_initial(id);
        ids.insert(tuple.clone(), id);
        queue.push_back(tuple);
    }

    while let Some(tuple) = queue.pop_front() {
        let src = ids[&tuple];
        let is_final = tuple.iter().enumerate().all(|(i, c)| match c {
            CompState::At(q) => components[i].finals().contains(q),
            CompState::Done => true,
        });
        if is_final {
            out.mark_final(src);
        }
        // Per-component move menu: (letter restriction or all-#, successor).
        let mut menus: Vec<Vec<(Option<&Letter>, CompState)>> = Vec::with_capacity(tuple.len());
        for (i, comp_state) in tuple.iter().enumerate() {
            let mut menu: Vec<(Option<&Letter>, CompState)> = Vec::new();
            match comp_state {
                CompState::At(q) => {
                    for (letter, dsts) in components[i].transitions_from(*q) {
                        for &dst in dsts {
                            menu.push((Some(letter), CompState::At(dst)));
                        }
                    }
                    if components[i].finals().contains(q) {
                        menu.push((None, CompState::Done));
                    }
                }
                CompState::Done => menu.push((None, CompState::Done)),
            }
            menus.push(menu);
        }
        // A component with an empty menu blocks every joint letter.
        if menus.iter().any(|m| m.is_empty()) {
            continue;
        }
        let mut choice = vec![0usize; menus.len()];
        'combos: loop {
            // Skip the joint all-# letter: at least one component must move.
            if choice
                .iter()
                .enumerate()
                .any(|(i, &c)| menus[i].get(c).is_some_and(|(l, _)| l.is_some()))
            {
                let mut syms = vec![Sym::Term; arity];
                let mut next_tuple = Vec::with_capacity(menus.len());
                for (i, &c) in choice.iter().enumerate() {
                    let (portion, succ) = &menus[i][c];
                    if let Some(letter) = portion {
                        for (j, s) in letter.syms().iter().enumerate() {
                            syms[offsets[i] + j] = *s;
                        }
                    }
                    next_tuple.push(*succ);
                }
                let letter = Letter::new(syms).expect("some component moved");
                let dst = match ids.get(&next_tuple) {
                    Some(&id) => id,
                    None => {
                        let id = out.add_state_auto(format!("s{}", ids.len()));
                        ids.insert(next_tuple.clone(), id);
                        queue.push_back(next_tuple);
                        id
                    }
                };
                out.add_transition(src, letter, dst)?;
            }
            // Next cartesian choice.
            let mut i = 0;
            loop {
                if i == menus.len() {
                    break 'combos;
                }
                choice[i] += 1;
                if choice[i] < menus[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }
    Ok(out)
}

/// Restriction to useful states: reachable from an initial state and able
/// to reach a final state. The language is unchanged.
pub fn trim(a: &Sfa) -> Sfa {
    let n = a.state_count();
    let mut fwd = vec![false; n];
    let mut queue: VecDeque<usize> = a.initials().iter().copied().collect();
    for &q in a.initials() {
        fwd[q] = true;
    }
    while let Some(q) = queue.pop_front() {
        for (_, dsts) in a.transitions_from(q) {
            for &d in dsts {
                if !fwd[d] {
                    fwd[d] = true;
                    queue.push_back(d);
                }
            }
        }
    }
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (src, _, dst) in a.transitions() {
        preds[dst].push(src);
    }
    let mut bwd = vec![false; n];
    let mut queue: VecDeque<usize> = a.finals().iter().copied().collect();
    for &q in a.finals() {
        bwd[q] = true;
    }
    while let Some(q) = queue.pop_front() {
        for &p in &preds[q] {
            if !bwd[p] {
                bwd[p] = true;
                queue.push_back(p);
            }
        }
    }
    let mut out = Sfa::new(a.vars().clone(), a.domain().clone());
    let mut ids: Vec<Option<usize>> = vec![None; n];
    for q in 0..n {
        if fwd[q] && bwd[q] {
            ids[q] = Some(out.add_state_auto(a.state_name(q).to_string()));
        }
    }
    for q in 0..n {
        let Some(id) = ids[q] else { continue };
        if a.initials().contains(&q) {
            out.mark_initial(id);
        }
        if a.finals().contains(&q) {
            out.mark_final(id);
        }
        for (letter, dsts) in a.transitions_from(q) {
            for &d in dsts {
                if let Some(did) = ids[d] {
                    out.add_transition(id, letter.clone(), did).expect("letters unchanged");
                }
            }
        }
    }
    out
}

/// Trim-determinize-trim: a compact deterministic automaton with the same
/// language. The engine normalizes intermediates this way so that chained
/// products and differences stay near the size of the language rather than
/// compounding nondeterminism.
pub fn normalize(a: &Sfa) -> Sfa {
    trim(&determinize(&trim(a)))
}

/// Drops the given coordinate positions from every letter. A transition
/// whose remaining coordinates are all `#` becomes silent; by the
/// termination condition such transitions only occur in a terminal suffix,
/// so eliminating them amounts to closing the final states backwards over
/// silent edges and then discarding those edges.
pub fn project_out(a: &Sfa, drop: &[usize]) -> Result<Sfa, SfaError> {
    let keep: Vec<usize> = (0..a.vars().len()).filter(|i| !drop.contains(i)).collect();
    assert!(!keep.is_empty(), "cannot project away every coordinate");
    let names: Vec<String> = keep.iter().map(|&i| a.vars().name(i).to_string()).collect();
    let vars = VarSet::new(names).expect("kept coordinates stay distinct");
    let mut out = Sfa::new(vars, a.domain().clone());
    for q in 0..a.state_count() {
        out.add_state_auto(a.state_name(q).to_string());
    }
    for &q in a.initials() {
        out.mark_initial(q);
    }
    let mut silent_pred: Vec<Vec<usize>> = vec![Vec::new(); a.state_count()];
    for (src, letter, dst) in a.transitions() {
        let syms = letter.restrict(&keep);
        if syms.iter().all(|s| s.is_term()) {
            silent_pred[dst].push(src);
        } else {
            out.add_transition(src, Letter::new(syms).expect("live coordinate"), dst)?;
        }
    }
    let mut finals: BTreeSet<usize> = a.finals().clone();
    let mut queue: VecDeque<usize> = finals.iter().copied().collect();
    while let Some(q) = queue.pop_front() {
        for &p in &silent_pred[q] {
            if finals.insert(p) {
                queue.push_back(p);
            }
        }
    }
    for q in finals {
        out.mark_final(q);
    }
    Ok(out)
}

/// Permutes the coordinates of every letter into the given variable order.
pub fn reorder_vars(a: &Sfa, order: &[String]) -> Result<Sfa, SfaError> {
    let mut positions = Vec::with_capacity(order.len());
    for name in order {
        positions.push(
            a.vars()
                .index_of(name)
                .ok_or_else(|| SfaError::CoordinateMissing(name.clone()))?,
        );
    }
    if positions.len() != a.vars().len() {
        return Err(SfaError::NonInjective);
    }
    let vars = VarSet::new(order.to_vec()).map_err(|_| SfaError::NonInjective)?;
    let mut out = Sfa::new(vars, a.domain().clone());
    for q in 0..a.state_count() {
        out.add_state_auto(a.state_name(q).to_string());
    }
    for &q in a.initials() {
        out.mark_initial(q);
    }
    for &q in a.finals() {
        out.mark_final(q);
    }
    for (src, letter, dst) in a.transitions() {
        let syms: Vec<Sym> = positions.iter().map(|&i| letter.get(i)).collect();
        out.add_transition(src, Letter::new(syms).expect("permutation"), dst)?;
    }
    Ok(out)
}

/// n-fold self-composition: one renamed copy of the automaton per trace
/// variable (x becomes x_π), combined with the asynchronous product.
pub fn self_compose(a: &Sfa, trace_vars: &[String]) -> Result<Sfa, SfaError> {
    assert!(!trace_vars.is_empty(), "self_compose needs at least one trace variable");
    let mut copies = Vec::with_capacity(trace_vars.len());
    for tv in trace_vars {
        let mapping: BTreeMap<String, String> = a
            .vars()
            .names()
            .map(|x| (x.to_string(), compose_coord(x, tv)))
            .collect();
        copies.push(a.rename_vars(&mapping)?);
    }
    let refs: Vec<&Sfa> = copies.iter().collect();
    async_product(&refs)
}

/// Coordinate name of program variable `x` in the copy for trace variable π.
pub fn compose_coord(x: &str, trace_var: &str) -> String {
    format!("{x}_{trace_var}")
}

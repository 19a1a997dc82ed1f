//! Stutter-free automata over letter-valuations with a termination symbol:
//! representation, validation, membership, emptiness, and bounded language
//! enumeration. Closure operations live in [`ops`].

pub mod ops;

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use thiserror::Error;

use crate::segments::{
    all_letters, letters_compatible, CoreError, Domain, Letter, Sym, UnzippedSegment, VarSet,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SfaError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("automata disagree on variable set or domain")]
    VarMismatch,
    #[error("segment does not fit the automaton's variable set or domain")]
    BadSegment,
    #[error("automaton is not deterministic")]
    NotDeterministic,
    #[error("automaton is not complete")]
    NotComplete,
    #[error("variable renaming is not injective or not total")]
    NonInjective,
    #[error("components share variable `{0}`; async product needs disjoint variable sets")]
    VarOverlap(String),
    #[error("coordinate `{0}` is not a variable of the automaton")]
    CoordinateMissing(String),
    #[error("duplicate state name `{0}`")]
    DuplicateState(String),
}

/// A violation of the stutter-free automaton conditions at one
/// (state, variable) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Some non-`#` value occurs both on incoming and outgoing transitions.
    Stutter { state: String, var: String },
    /// `#` occurs on an incoming transition but a non-`#` value leaves.
    Termination { state: String, var: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Stutter { state, var } => {
                write!(f, "stutter-freedom violated at state `{state}`, variable `{var}`")
            }
            Violation::Termination { state, var } => {
                write!(f, "termination violated at state `{state}`, variable `{var}`")
            }
        }
    }
}

/// Nondeterministic stutter-free automaton. Transitions are stored sparsely,
/// keyed by letter; letters are positional over the variable set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sfa {
    vars: VarSet,
    domain: Domain,
    names: Vec<String>,
    initials: BTreeSet<usize>,
    finals: BTreeSet<usize>,
    trans: Vec<BTreeMap<Letter, BTreeSet<usize>>>,
}

impl Sfa {
    pub fn new(vars: VarSet, domain: Domain) -> Self {
        Sfa {
            vars,
            domain,
            names: Vec::new(),
            initials: BTreeSet::new(),
            finals: BTreeSet::new(),
            trans: Vec::new(),
        }
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn state_count(&self) -> usize {
        self.names.len()
    }

    pub fn state_name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn state_id(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn initials(&self) -> &BTreeSet<usize> {
        &self.initials
    }

    pub fn finals(&self) -> &BTreeSet<usize> {
        &self.finals
    }

    pub fn transitions_from(&self, state: usize) -> &BTreeMap<Letter, BTreeSet<usize>> {
        &self.trans[state]
    }

    /// Iterates all transitions as (src, letter, dst) in canonical order.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, &Letter, usize)> {
        self.trans.iter().enumerate().flat_map(|(src, map)| {
            map.iter()
                .flat_map(move |(letter, dsts)| dsts.iter().map(move |&dst| (src, letter, dst)))
        })
    }

    pub fn transition_count(&self) -> usize {
        self.trans.iter().map(|m| m.values().map(|s| s.len()).sum::<usize>()).sum()
    }

    pub fn add_state(&mut self, name: impl Into<String>) -> Result<usize, SfaError> {
        let name = name.into();
        if self.names.iter().any(|n| n == &name) {
            return Err(SfaError::DuplicateState(name));
        }
        self.names.push(name);
        self.trans.push(BTreeMap::new());
        Ok(self.names.len() - 1)
    }

    pub fn mark_initial(&mut self, state: usize) {
        self.initials.insert(state);
    }

    pub fn mark_final(&mut self, state: usize) {
        self.finals.insert(state);
    }

    pub fn add_transition(
        &mut self,
        src: usize,
        letter: Letter,
        dst: usize,
    ) -> Result<(), SfaError> {
        if letter.len() != self.vars.len() {
            return Err(SfaError::Core(CoreError::Arity {
                expected: self.vars.len(),
                got: letter.len(),
            }));
        }
        for s in letter.syms() {
            if let Sym::Val(v) = s {
                if *v as usize >= self.domain.len() {
                    return Err(SfaError::Core(CoreError::ValueRange(*v)));
                }
            }
        }
        self.trans[src].entry(letter).or_default().insert(dst);
        Ok(())
    }

    /// Outgoing value set Out(q, x).
    fn out_set(&self, state: usize, var: usize) -> BTreeSet<Sym> {
        self.trans[state].keys().map(|l| l.get(var)).collect()
    }

    /// Checks the stutter-freedom and termination conditions for every
    /// (state, variable) pair and reports every violation.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        let mut ins: Vec<Vec<BTreeSet<Sym>>> =
            vec![vec![BTreeSet::new(); self.vars.len()]; self.state_count()];
        for (_, letter, dst) in self.transitions() {
            for (i, s) in letter.syms().iter().enumerate() {
                ins[dst][i].insert(*s);
            }
        }
        for q in 0..self.state_count() {
            for x in 0..self.vars.len() {
                let out = self.out_set(q, x);
                let stutter = ins[q][x]
                    .intersection(&out)
                    .any(|s| !s.is_term());
                if stutter {
                    violations.push(Violation::Stutter {
                        state: self.names[q].clone(),
                        var: self.vars.name(x).to_string(),
                    });
                }
                if ins[q][x].contains(&Sym::Term) && out.iter().any(|s| !s.is_term()) {
                    violations.push(Violation::Termination {
                        state: self.names[q].clone(),
                        var: self.vars.name(x).to_string(),
                    });
                }
            }
        }
        violations
    }

    /// At most one initial state and at most one successor per (state, letter).
    pub fn is_deterministic(&self) -> bool {
        self.initials.len() <= 1
            && self
                .trans
                .iter()
                .all(|m| m.values().all(|dsts| dsts.len() <= 1))
    }

    /// Every word that can legally reach a state can be extended by every
    /// letter its last letter permits. Together with determinism this gives
    /// the run-for-every-word property complementation needs.
    pub fn is_complete(&self) -> bool {
        let letters = all_letters(&self.vars, &self.domain);
        for q in 0..self.state_count() {
            let mut constraints: Vec<Option<Letter>> = Vec::new();
            if self.initials.contains(&q) {
                constraints.push(None); // fresh: any first letter
            }
            for (_, letter, dst) in self.transitions() {
                if dst == q {
                    constraints.push(Some(letter.clone()));
                }
            }
            for c in &constraints {
                for v in &letters {
                    let compatible = match c {
                        None => true,
                        Some(u) => letters_compatible(u, v),
                    };
                    if compatible && !self.trans[q].contains_key(v) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// The canonical `#`-padded word of a stutter-free segment: every string
    /// padded to the maximum length with `#`. Returns `None` for the empty
    /// segment (the empty word).
    pub fn pad_segment(&self, seg: &UnzippedSegment) -> Result<Vec<Letter>, SfaError> {
        if seg.arity() != self.vars.len() {
            return Err(SfaError::BadSegment);
        }
        for s in &seg.strings {
            for &v in s {
                if v as usize >= self.domain.len() {
                    return Err(SfaError::BadSegment);
                }
            }
        }
        let len = seg.max_len();
        let mut word = Vec::with_capacity(len);
        for i in 0..len {
            let syms: Vec<Sym> = seg
                .strings
                .iter()
                .map(|s| s.get(i).map(|&v| Sym::Val(v)).unwrap_or(Sym::Term))
                .collect();
            let letter = Letter::new(syms).expect("padded letter cannot be all-#");
            word.push(letter);
        }
        Ok(word)
    }

    /// Membership of the `#`-stripped language: true iff the canonically
    /// padded word of `seg` has an accepting run. The empty segment is
    /// accepted iff some state is both initial and final.
    pub fn member(&self, seg: &UnzippedSegment) -> Result<bool, SfaError> {
        let word = self.pad_segment(seg)?;
        let mut frontier: HashSet<usize> = self.initials.iter().copied().collect();
        for letter in &word {
            let mut next = HashSet::new();
            for &q in &frontier {
                if let Some(dsts) = self.trans[q].get(letter) {
                    next.extend(dsts.iter().copied());
                }
            }
            frontier = next;
            if frontier.is_empty() {
                return Ok(false);
            }
        }
        Ok(frontier.iter().any(|q| self.finals.contains(q)))
    }

    /// All segments of the `#`-stripped language whose variable strings are
    /// all of length <= `max_len`, by bounded run exploration. Exact for the
    /// bounded slice of the language.
    pub fn enumerate_language(&self, max_len: usize) -> BTreeSet<UnzippedSegment> {
        let mut out = BTreeSet::new();
        let arity = self.vars.len();
        let initial: BTreeSet<usize> = self.initials.clone();
        if initial.iter().any(|q| self.finals.contains(q)) {
            out.insert(UnzippedSegment::new(vec![Vec::new(); arity]));
        }
        if initial.is_empty() {
            return out;
        }
        let mut queue: VecDeque<(BTreeSet<usize>, Vec<Vec<u16>>, usize)> =
            VecDeque::from([(initial, vec![Vec::new(); arity], 0)]);
        while let Some((subset, strings, depth)) = queue.pop_front() {
            if depth == max_len {
                continue;
            }
            let mut letters: BTreeSet<&Letter> = BTreeSet::new();
            for &q in &subset {
                letters.extend(self.trans[q].keys());
            }
            for letter in letters {
                let mut next = BTreeSet::new();
                for &q in &subset {
                    if let Some(dsts) = self.trans[q].get(letter) {
                        next.extend(dsts.iter().copied());
                    }
                }
                if next.is_empty() {
                    continue;
                }
                let mut next_strings = strings.clone();
                for (i, s) in letter.syms().iter().enumerate() {
                    if let Sym::Val(v) = s {
                        next_strings[i].push(*v);
                    }
                }
                if next.iter().any(|q| self.finals.contains(q)) {
                    out.insert(UnzippedSegment::new(next_strings.clone()));
                }
                queue.push_back((next, next_strings, depth + 1));
            }
        }
        out
    }

    /// Shortest witness of non-emptiness, stripped of `#`, or `None` when the
    /// language is empty. Breadth-first over (state, letter) with letters in
    /// lexicographic order, so the witness is deterministic.
    pub fn shortest_witness(&self) -> Option<UnzippedSegment> {
        let arity = self.vars.len();
        if let Some(_q) = self.initials.iter().find(|q| self.finals.contains(q)) {
            return Some(UnzippedSegment::new(vec![Vec::new(); arity]));
        }
        let mut parent: Vec<Option<(usize, Letter)>> = vec![None; self.state_count()];
        let mut seen: Vec<bool> = vec![false; self.state_count()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &q in &self.initials {
            seen[q] = true;
            queue.push_back(q);
        }
        while let Some(q) = queue.pop_front() {
            for (letter, dsts) in &self.trans[q] {
                for &dst in dsts {
                    if seen[dst] {
                        continue;
                    }
                    seen[dst] = true;
                    parent[dst] = Some((q, letter.clone()));
                    if self.finals.contains(&dst) {
                        let mut word = Vec::new();
                        let mut cur = dst;
                        while let Some((prev, letter)) = &parent[cur] {
                            word.push(letter.clone());
                            cur = *prev;
                        }
                        word.reverse();
                        let mut strings = vec![Vec::new(); arity];
                        for letter in &word {
                            for (i, s) in letter.syms().iter().enumerate() {
                                if let Sym::Val(v) = s {
                                    strings[i].push(*v);
                                }
                            }
                        }
                        return Some(UnzippedSegment::new(strings));
                    }
                    queue.push_back(dst);
                }
            }
        }
        None
    }

    pub fn is_empty_language(&self) -> bool {
        self.shortest_witness().is_none()
    }

    /// Renames variables coordinate-wise. The mapping must be injective and
    /// total on the variable set; positions and letters are unchanged.
    pub fn rename_vars(&self, mapping: &BTreeMap<String, String>) -> Result<Sfa, SfaError> {
        let mut new_names = Vec::with_capacity(self.vars.len());
        for name in self.vars.names() {
            let new = mapping.get(name).ok_or(SfaError::NonInjective)?;
            new_names.push(new.clone());
        }
        let mut seen = BTreeSet::new();
        for n in &new_names {
            if !seen.insert(n) {
                return Err(SfaError::NonInjective);
            }
        }
        let vars = VarSet::new(new_names).map_err(|_| SfaError::NonInjective)?;
        Ok(Sfa {
            vars,
            domain: self.domain.clone(),
            names: self.names.clone(),
            initials: self.initials.clone(),
            finals: self.finals.clone(),
            trans: self.trans.clone(),
        })
    }
}

/// The universal stutter-free automaton: one state per letter of Σ^X̂, all
/// final, each reached exactly by its own letter, plus a fresh start state
/// with a transition on every letter. The start state is the only initial
/// state, which keeps the automaton deterministic; the language is every
/// stutter-free unzipped segment, including the empty one.
pub fn universal(vars: &VarSet, domain: &Domain) -> Sfa {
    let letters = all_letters(vars, domain);
    let mut a = Sfa::new(vars.clone(), domain.clone());
    let start = a.add_state("start").expect("fresh automaton");
    a.mark_initial(start);
    a.mark_final(start);
    let mut ids = Vec::with_capacity(letters.len());
    for (i, letter) in letters.iter().enumerate() {
        let id = a.add_state(letter_state_name(letter, i)).expect("unique names");
        a.mark_final(id);
        ids.push(id);
    }
    for (i, letter) in letters.iter().enumerate() {
        a.add_transition(start, letter.clone(), ids[i]).expect("valid letter");
    }
    for (i, from) in letters.iter().enumerate() {
        for (j, to) in letters.iter().enumerate() {
            if letters_compatible(from, to) {
                a.add_transition(ids[i], to.clone(), ids[j]).expect("valid letter");
            }
        }
    }
    a
}

pub(crate) fn letter_state_name(letter: &Letter, idx: usize) -> String {
    let mut name = String::from("u");
    for s in letter.syms() {
        name.push('_');
        match s {
            Sym::Val(v) => name.push_str(&v.to_string()),
            Sym::Term => name.push('t'),
        }
    }
    name.push_str(&format!("_{idx}"));
    name
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn dom01() -> Domain {
        Domain::new(["0", "1"]).unwrap()
    }

    pub fn vars_xy() -> VarSet {
        VarSet::new(["x", "y"]).unwrap()
    }

    pub fn letter(syms: &[Sym]) -> Letter {
        Letter::new(syms.to_vec()).unwrap()
    }

    pub fn seg(strings: &[&str]) -> UnzippedSegment {
        UnzippedSegment::new(
            strings
                .iter()
                .map(|s| s.chars().map(|c| c.to_digit(10).unwrap() as u16).collect())
                .collect(),
        )
    }

    /// The automaton from the worked example: x-strings in (01)*0 and
    /// y-strings in (01)*01.
    pub fn fig2() -> Sfa {
        let mut a = Sfa::new(vars_xy(), dom01());
        let s = a.add_state("s").unwrap();
        let q01 = a.add_state("q01").unwrap();
        let q12 = a.add_state("q12").unwrap();
        let y12 = a.add_state("y12").unwrap();
        let y01 = a.add_state("y01").unwrap();
        let x01 = a.add_state("x01").unwrap();
        let x12 = a.add_state("x12").unwrap();
        a.mark_initial(s);
        a.mark_final(y12);
        a.mark_final(x01);
        let v = |x, y| letter(&[x, y]);
        use Sym::{Term as T, Val};
        a.add_transition(s, v(Val(0), Val(0)), q01).unwrap();
        a.add_transition(q01, v(Val(1), Val(1)), q12).unwrap();
        a.add_transition(q12, v(Val(0), Val(0)), q01).unwrap();
        a.add_transition(q01, v(T, Val(1)), y12).unwrap();
        a.add_transition(y12, v(T, Val(0)), y01).unwrap();
        a.add_transition(y01, v(T, Val(1)), y12).unwrap();
        a.add_transition(q12, v(Val(0), T), x01).unwrap();
        a.add_transition(x01, v(Val(1), T), x12).unwrap();
        a.add_transition(x12, v(Val(0), T), x01).unwrap();
        a
    }
}

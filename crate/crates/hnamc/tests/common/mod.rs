//! Shared generators and independent test oracles for the integration
//! suites. Everything is seeded, so failures reproduce.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::Rng;
use rand::SeedableRng;

use hnamc::hna::{Hna, HnaNode};
use hnamc::kripke::{ActionLabeling, Kripke, OpenKripke, PointedLabeledKripke};
use hnamc::logic::Formula;
use hnamc::segments::{
    all_letters, Domain, Letter, SegmentValuation, Sym, UnzippedSegment, VarSet,
};
use hnamc::Sfa;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).expect("fixture readable")
}

pub fn dom01() -> Domain {
    Domain::new(["0", "1"]).unwrap()
}

pub fn varset(names: &[&str]) -> VarSet {
    VarSet::new(names.iter().copied()).unwrap()
}

pub fn useg(strings: &[&str]) -> UnzippedSegment {
    UnzippedSegment::new(
        strings
            .iter()
            .map(|s| s.chars().map(|c| c.to_digit(10).unwrap() as u16).collect())
            .collect(),
    )
}

/// All strings over {0,1} of length <= bound (not only stutter-free ones).
pub fn all_strings(bound: usize) -> Vec<Vec<u16>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..bound {
        let mut next = Vec::new();
        for s in &layer {
            for v in 0..2u16 {
                let mut t = s.clone();
                t.push(v);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// All stutter-free strings over {0,1} of length <= bound.
pub fn stutter_free_strings(bound: usize) -> Vec<Vec<u16>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..bound {
        let mut next = Vec::new();
        for s in &layer {
            for v in 0..2u16 {
                if s.last() != Some(&v) {
                    let mut t = s.clone();
                    t.push(v);
                    next.push(t);
                }
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// All stutter-free segments with `arity` coordinates and strings <= bound.
pub fn stutter_free_universe(arity: usize, bound: usize) -> BTreeSet<UnzippedSegment> {
    let strings = stutter_free_strings(bound);
    let mut combos: Vec<Vec<Vec<u16>>> = vec![Vec::new()];
    for _ in 0..arity {
        let mut next = Vec::new();
        for c in &combos {
            for s in &strings {
                let mut t = c.clone();
                t.push(s.clone());
                next.push(t);
            }
        }
        combos = next;
    }
    combos.into_iter().map(UnzippedSegment::new).collect()
}

/// A random valid stutter-free automaton: transitions are rejection-sampled
/// against the stutter-freedom and termination conditions.
pub fn rand_sfa(rng: &mut StdRng, vars: &VarSet, domain: &Domain, max_states: usize) -> Sfa {
    let letters = all_letters(vars, domain);
    let n = rng.random_range(1..=max_states);
    let mut a = Sfa::new(vars.clone(), domain.clone());
    for i in 0..n {
        a.add_state(format!("q{i}")).unwrap();
    }
    for q in 0..n {
        if rng.random_bool(0.5) {
            a.mark_initial(q);
        }
        if rng.random_bool(0.5) {
            a.mark_final(q);
        }
    }
    // Track In/Out value sets incrementally so every added transition keeps
    // the automaton valid.
    let m = vars.len();
    let mut ins: Vec<Vec<BTreeSet<Sym>>> = vec![vec![BTreeSet::new(); m]; n];
    let mut outs: Vec<Vec<BTreeSet<Sym>>> = vec![vec![BTreeSet::new(); m]; n];
    let attempts = 4 * n * m + 8;
    for _ in 0..attempts {
        let src = rng.random_range(0..n);
        let dst = rng.random_range(0..n);
        // A self-loop puts its letter in both In and Out of the state, so no
        // valid automaton has one.
        if src == dst {
            continue;
        }
        let letter = &letters[rng.random_range(0..letters.len())];
        let mut ok = true;
        for x in 0..m {
            let v = letter.get(x);
            // Outgoing side at src.
            if ins[src][x].contains(&v) && !v.is_term() {
                ok = false;
                break;
            }
            if ins[src][x].contains(&Sym::Term) && !v.is_term() {
                ok = false;
                break;
            }
            // Incoming side at dst.
            if outs[dst][x].contains(&v) && !v.is_term() {
                ok = false;
                break;
            }
            if v.is_term() && outs[dst][x].iter().any(|s| !s.is_term()) {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        for x in 0..m {
            outs[src][x].insert(letter.get(x));
            ins[dst][x].insert(letter.get(x));
        }
        a.add_transition(src, letter.clone(), dst).unwrap();
    }
    debug_assert!(a.validate().is_empty());
    a
}

/// A random closed formula with the given quantifier prefix length over the
/// given program variables; the body is a small boolean tree of atoms.
pub fn rand_formula(rng: &mut StdRng, prog_vars: &[&str], quantifiers: usize) -> Formula {
    let tvs: Vec<String> = (0..quantifiers).map(|i| format!("t{i}")).collect();
    let body = rand_body(rng, prog_vars, &tvs, 2);
    let mut phi = body;
    for tv in tvs.iter().rev() {
        phi = if rng.random_bool(0.5) {
            Formula::forall(tv.clone(), phi)
        } else {
            Formula::exists(tv.clone(), phi)
        };
    }
    phi
}

fn rand_body(rng: &mut StdRng, prog_vars: &[&str], tvs: &[String], depth: usize) -> Formula {
    if depth == 0 || rng.random_bool(0.4) {
        let x = prog_vars[rng.random_range(0..prog_vars.len())];
        let y = prog_vars[rng.random_range(0..prog_vars.len())];
        let p = &tvs[rng.random_range(0..tvs.len())];
        let q = &tvs[rng.random_range(0..tvs.len())];
        return Formula::atom(x, p.clone(), y, q.clone());
    }
    match rng.random_range(0..3) {
        0 => Formula::not(rand_body(rng, prog_vars, tvs, depth - 1)),
        1 => Formula::and(
            rand_body(rng, prog_vars, tvs, depth - 1),
            rand_body(rng, prog_vars, tvs, depth - 1),
        ),
        _ => Formula::or(
            rand_body(rng, prog_vars, tvs, depth - 1),
            rand_body(rng, prog_vars, tvs, depth - 1),
        ),
    }
}

/// Purely universal formulas in which every trace variable is read through a
/// single program variable. On this fragment the joint (trace-set) and
/// product (per-variable) readings of a structure's segment set agree, and
/// prefix-restricted slices cannot flip a verdict, so the Join pipeline and
/// the direct acceptance oracle provably coincide.
pub fn rand_universal_label(rng: &mut StdRng, prog_vars: &[&str]) -> Formula {
    let v = prog_vars[rng.random_range(0..prog_vars.len())];
    let w = prog_vars[rng.random_range(0..prog_vars.len())];
    match rng.random_range(0..4) {
        0 => Formula::forall(
            "p",
            Formula::forall(
                "q",
                Formula::or(
                    Formula::atom(v, "p", v, "q"),
                    Formula::atom(v, "q", v, "p"),
                ),
            ),
        ),
        1 => Formula::forall(
            "p",
            Formula::forall("q", Formula::atom(v, "p", v, "q")),
        ),
        2 => Formula::forall(
            "p",
            Formula::forall("q", Formula::atom(v, "p", w, "q")),
        ),
        _ => Formula::forall("p", Formula::atom(v, "p", v, "p")),
    }
}

/// A random acyclic open Kripke structure over 1–2 boolean variables with at
/// least one entry-to-exit path.
pub fn rand_acyclic_open(rng: &mut StdRng) -> OpenKripke {
    loop {
        let arity = rng.random_range(1..=2);
        let names: Vec<&str> = ["x", "y"][..arity].to_vec();
        let vars = VarSet::new(names).unwrap();
        let n = rng.random_range(2..=6);
        let mut k = Kripke::new(vars, dom01());
        for i in 0..n {
            let vals: Vec<u16> = (0..arity).map(|_| rng.random_range(0..2)).collect();
            k.add_world(format!("w{i}"), SegmentValuation(vals));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.random_bool(0.4) {
                    k.add_edge(i, j);
                }
            }
        }
        let entries: BTreeSet<usize> =
            (0..n).filter(|_| rng.random_bool(0.4)).collect();
        let exits: BTreeSet<usize> = (0..n).filter(|_| rng.random_bool(0.4)).collect();
        let entries = if entries.is_empty() { BTreeSet::from([0]) } else { entries };
        let exits = if exits.is_empty() { BTreeSet::from([n - 1]) } else { exits };
        let ok = OpenKripke::new(k, entries, exits).unwrap();
        if !hnamc::kripke::paths(&ok, ok.kripke.world_count()).is_empty() {
            return ok;
        }
    }
}

/// A random open Kripke structure that may contain cycles (still with at
/// least one path).
pub fn rand_cyclic_open(rng: &mut StdRng) -> OpenKripke {
    loop {
        let mut ok = rand_acyclic_open(rng);
        let n = ok.kripke.world_count();
        for _ in 0..rng.random_range(1..=3) {
            let from = rng.random_range(0..n);
            let to = rng.random_range(0..=from);
            ok.kripke.add_edge(from, to);
        }
        if !ok.is_acyclic() {
            return ok;
        }
    }
}

/// A random acyclic pointed structure with action labels over <= 2 actions.
pub fn rand_acyclic_pointed(rng: &mut StdRng, actions: &[&str]) -> PointedLabeledKripke {
    let arity = rng.random_range(1..=2);
    let names: Vec<&str> = ["x", "y"][..arity].to_vec();
    let vars = VarSet::new(names).unwrap();
    let n = rng.random_range(2..=6);
    let mut k = Kripke::new(vars, dom01());
    for i in 0..n {
        let vals: Vec<u16> = (0..arity).map(|_| rng.random_range(0..2)).collect();
        k.add_world(format!("w{i}"), SegmentValuation(vals));
    }
    let mut labeling = ActionLabeling::new(actions.iter().map(|s| s.to_string()).collect());
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(0.45) {
                k.add_edge(i, j);
                let mut labels = BTreeSet::new();
                if rng.random_bool(0.5) {
                    labels.insert(None);
                }
                for a in 0..actions.len() {
                    if rng.random_bool(0.4) {
                        labels.insert(Some(a));
                    }
                }
                if labels.is_empty() {
                    labels.insert(None);
                }
                labeling.set_labels((i, j), labels);
            }
        }
    }
    PointedLabeledKripke::new(k, labeling, 0).unwrap()
}

/// A random pointed structure that may contain cycles.
pub fn rand_cyclic_pointed(rng: &mut StdRng, actions: &[&str]) -> PointedLabeledKripke {
    let mut m = rand_acyclic_pointed(rng, actions);
    let n = m.kripke.world_count();
    for _ in 0..rng.random_range(1..=3) {
        let from = rng.random_range(0..n);
        let to = rng.random_range(0..=from);
        m.kripke.add_edge(from, to);
        let mut labels = BTreeSet::new();
        if rng.random_bool(0.6) {
            labels.insert(None);
        }
        if rng.random_bool(0.5) {
            labels.insert(Some(rng.random_range(0..actions.len())));
        }
        if labels.is_empty() {
            labels.insert(Some(0));
        }
        m.labeling.set_labels((from, to), labels);
    }
    m
}

/// A random total deterministic HNA over the given actions, with node labels
/// drawn from the universal fragment.
pub fn rand_hna(rng: &mut StdRng, actions: &[&str], prog_vars: &[&str]) -> Hna {
    let n = rng.random_range(1..=3);
    let nodes: Vec<HnaNode> = (0..n)
        .map(|i| {
            let formula = rand_universal_label(rng, prog_vars);
            HnaNode {
                name: format!("n{i}"),
                label_text: formula.to_string(),
                formula,
            }
        })
        .collect();
    let mut hna = Hna::new(
        actions.iter().map(|s| s.to_string()).collect(),
        nodes,
        0,
    )
    .unwrap();
    for node in 0..n {
        for action in 0..actions.len() {
            hna.set_transition(node, action, rng.random_range(0..n));
        }
    }
    hna
}

/// Independent per-variable realizability oracle: is `s` the stutter
/// reduction of the `var`-projection of some entry-to-exit path? Exact even
/// on cyclic structures, by reachability over (world, position) pairs.
pub fn var_string_realizable(ok: &OpenKripke, var: usize, s: &[u16]) -> bool {
    if s.is_empty() {
        return false;
    }
    let k = &ok.kripke;
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    for &e in &ok.entries {
        if k.value(e, var) == s[0] {
            if ok.exits.contains(&e) && s.len() == 1 {
                return true;
            }
            seen.insert((e, 0));
            queue.push_back((e, 0));
        }
    }
    while let Some((w, i)) = queue.pop_front() {
        for t in k.successors(w) {
            let candidates = [(t, i), (t, i + 1)];
            for (nw, ni) in candidates {
                if ni >= s.len() || k.value(nw, var) != s[ni] {
                    continue;
                }
                if ni == s.len() - 1 && ok.exits.contains(&nw) {
                    return true;
                }
                if seen.insert((nw, ni)) {
                    queue.push_back((nw, ni));
                }
            }
        }
    }
    false
}

/// Renders a letter for debugging output.
pub fn show_letter(l: &Letter, vars: &VarSet, domain: &Domain) -> String {
    l.display(vars, domain)
}

//! Formula filtration over stutter-free automata: atomic-predicate automata,
//! the positive/negative filtration recursion, and the hypernode-logic
//! decision procedure for automata and open Kripke structures.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

use crate::kripke::{to_sfa, KripkeError, OpenKripke};
use crate::logic::{free_trace_vars, quantifier_vars, rectify, Formula, LogicError};
use crate::segments::{all_letters, letters_compatible, Domain, Sym, UnzippedSegment, VarSet};
use crate::sfa::ops::{
    async_product, compose_coord, difference, intersection, normalize, project_out, reorder_vars,
    self_compose, union,
};
use crate::sfa::{letter_state_name, Sfa, SfaError};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FiltrationError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error(transparent)]
    Sfa(#[from] SfaError),
    #[error(transparent)]
    Kripke(#[from] KripkeError),
}

/// Filtration polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    Pos,
    Neg,
}

impl Polarity {
    fn flip(self) -> Polarity {
        match self {
            Polarity::Pos => Polarity::Neg,
            Polarity::Neg => Polarity::Pos,
        }
    }
}

/// Stutter-free automaton for an atomic formula x(π) ≼ y(π′): the universal
/// automaton restricted to letters whose x_π coordinate equals the y_π′
/// coordinate or is already `#`. All letter states are final; a fresh start
/// state is the single initial state, as in `universal`.
pub fn atomic_sfa(
    x: &str,
    p: &str,
    y: &str,
    q: &str,
    vars: &VarSet,
    domain: &Domain,
) -> Result<Sfa, SfaError> {
    let cx = compose_coord(x, p);
    let cy = compose_coord(y, q);
    let ix = vars
        .index_of(&cx)
        .ok_or(SfaError::CoordinateMissing(cx))?;
    let iy = vars
        .index_of(&cy)
        .ok_or(SfaError::CoordinateMissing(cy))?;
    let letters: Vec<_> = all_letters(vars, domain)
        .into_iter()
        .filter(|l| l.get(ix) == l.get(iy) || l.get(ix) == Sym::Term)
        .collect();
    let mut a = Sfa::new(vars.clone(), domain.clone());
    let start = a.add_state("start")?;
    a.mark_initial(start);
    a.mark_final(start);
    let mut ids = Vec::with_capacity(letters.len());
    for (i, letter) in letters.iter().enumerate() {
        let id = a.add_state(letter_state_name(letter, i))?;
        a.mark_final(id);
        ids.push(id);
    }
    for (i, letter) in letters.iter().enumerate() {
        a.add_transition(start, letter.clone(), ids[i])?;
    }
    for (i, from) in letters.iter().enumerate() {
        for (j, to) in letters.iter().enumerate() {
            if letters_compatible(from, to) {
                a.add_transition(ids[i], to.clone(), ids[j])?;
            }
        }
    }
    Ok(a)
}

/// Positive or negative filtration of an automaton by a rectified closed
/// formula, by structural recursion: atoms intersect with the atomic
/// automaton (or subtract it), conjunction intersects (or unions), negation
/// swaps polarity, and a negative existential subtracts the positive
/// filtration of its body.
pub fn filter(phi: &Formula, polarity: Polarity, a: &Sfa) -> Result<Sfa, FiltrationError> {
    match (phi, polarity) {
        (Formula::Atom { x, p, y, q }, Polarity::Pos) => {
            let atomic = atomic_sfa(x, p, y, q, a.vars(), a.domain())?;
            Ok(intersection(a, &atomic)?)
        }
        (Formula::Atom { x, p, y, q }, Polarity::Neg) => {
            let atomic = atomic_sfa(x, p, y, q, a.vars(), a.domain())?;
            Ok(difference(a, &atomic)?)
        }
        (Formula::And(l, r), Polarity::Pos) => {
            let fl = filter(l, Polarity::Pos, a)?;
            let fr = filter(r, Polarity::Pos, a)?;
            Ok(intersection(&fl, &fr)?)
        }
        (Formula::And(l, r), Polarity::Neg) => {
            let fl = filter(l, Polarity::Neg, a)?;
            let fr = filter(r, Polarity::Neg, a)?;
            Ok(union(&fl, &fr)?)
        }
        (Formula::Not(b), pol) => filter(b, pol.flip(), a),
        (Formula::Exists(_, b), Polarity::Pos) => filter(b, Polarity::Pos, a),
        (Formula::Exists(_, b), Polarity::Neg) => {
            // Determinizing the subtrahend keeps the subtraction's subset
            // side linear.
            let pos = normalize(&filter(b, Polarity::Pos, a)?);
            Ok(difference(a, &pos)?)
        }
    }
}

/// Result of a hypernode-logic check, with a witness exposed for
/// diagnostics when the formula fails: an accepted segment of the negative
/// filtration over the composed coordinates (a falsifying assignment
/// sketch).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub holds: bool,
    /// Trace variables in quantifier order, as used for the composition.
    pub trace_vars: Vec<String>,
    /// Variable set of the self-composition, for rendering the witness.
    pub composed_vars: VarSet,
    /// Witness from the negative filtration: a counterexample assignment
    /// when the formula fails, `None` when it holds or no pointwise
    /// falsifying assignment exists.
    pub witness: Option<UnzippedSegment>,
}

/// Quantifier-aware decision engine for L(A) ⊨ φ.
///
/// The pointwise filtration of [`filter`] decides each fixed assignment but
/// does not re-quantify over the language: subtracting `φ⁺[Aⁿ]` from `Aⁿ`
/// removes only the assignments whose own π-slot witnesses φ, so its
/// emptiness is the wrong question for universally quantified formulas
/// (`∀p∀q ψ` would come out "satisfied" whenever some pair satisfies ψ).
/// This engine instead handles each quantifier by automaton projection:
/// for every subformula with free trace variables F it maintains an
/// automaton over the coordinates X×F accepting exactly the A-consistent
/// F-assignments that satisfy the subformula. An existential quantifier
/// projects its copy's coordinates out; negation complements relative to
/// the |F|-fold self-composition. Closed subformulas reduce to emptiness
/// checks, which matches the direct satisfaction semantics exactly,
/// including over the empty language.
struct FormulaChecker<'a> {
    base: &'a Sfa,
    /// Binding order of all trace variables; free sets are kept in this
    /// order so automata over equal free sets are directly compatible.
    binding_order: Vec<String>,
    compositions: RefCell<HashMap<Vec<String>, Sfa>>,
}

impl<'a> FormulaChecker<'a> {
    fn new(base: &'a Sfa, binding_order: Vec<String>) -> Self {
        FormulaChecker {
            base,
            binding_order,
            compositions: RefCell::new(HashMap::new()),
        }
    }

    fn canonical(&self, free: &BTreeSet<String>) -> Vec<String> {
        self.binding_order
            .iter()
            .filter(|v| free.contains(*v))
            .cloned()
            .collect()
    }

    fn canonical_varset(&self, tvs: &[String]) -> Vec<String> {
        let mut names = Vec::new();
        for tv in tvs {
            for x in self.base.vars().names() {
                names.push(compose_coord(x, tv));
            }
        }
        names
    }

    fn composition(&self, tvs: &[String]) -> Result<Sfa, FiltrationError> {
        if let Some(a) = self.compositions.borrow().get(tvs) {
            return Ok(a.clone());
        }
        let composed = normalize(&self_compose(self.base, tvs)?);
        self.compositions
            .borrow_mut()
            .insert(tvs.to_vec(), composed.clone());
        Ok(composed)
    }

    /// Lifts an automaton over the free set `from` to the superset `to` by
    /// pairing it with fresh base copies for the missing trace variables.
    fn lift(&self, a: &Sfa, from: &[String], to: &[String]) -> Result<Sfa, FiltrationError> {
        if from == to {
            return Ok(a.clone());
        }
        let missing: Vec<String> = to.iter().filter(|v| !from.contains(v)).cloned().collect();
        let pad = self.composition(&missing)?;
        let product = async_product(&[a, &pad])?;
        Ok(reorder_vars(&product, &self.canonical_varset(to))?)
    }

    /// The automaton of satisfying A-consistent assignments for an open
    /// subformula (free trace variables of `phi` must be non-empty).
    fn assignments(&self, phi: &Formula) -> Result<Sfa, FiltrationError> {
        let free = free_trace_vars(phi);
        debug_assert!(!free.is_empty());
        let tvs = self.canonical(&free);
        match phi {
            Formula::Atom { x, p, y, q } => {
                let composed = self.composition(&tvs)?;
                let atomic = atomic_sfa(x, p, y, q, composed.vars(), composed.domain())?;
                Ok(normalize(&intersection(&composed, &atomic)?))
            }
            Formula::Not(body) => {
                let inner = self.satisfying_or_closed(body, &tvs)?;
                let full = self.composition(&tvs)?;
                Ok(normalize(&difference(&full, &inner)?))
            }
            Formula::And(lhs, rhs) => {
                let left = self.satisfying_or_closed(lhs, &tvs)?;
                let right = self.satisfying_or_closed(rhs, &tvs)?;
                Ok(normalize(&intersection(&left, &right)?))
            }
            Formula::Exists(var, body) => {
                let body_free = free_trace_vars(body);
                if !body_free.contains(var) {
                    // The quantifier needs some witness in the language but
                    // constrains nothing else.
                    if self.base.is_empty_language() {
                        let empty = Sfa::new(
                            VarSet::new(self.canonical_varset(&tvs)).expect("distinct coords"),
                            self.base.domain().clone(),
                        );
                        return Ok(empty);
                    }
                    return self.assignments(body);
                }
                let inner = self.assignments(body)?;
                let drop: Vec<usize> = inner
                    .vars()
                    .names()
                    .enumerate()
                    .filter(|(_, name)| {
                        self.base
                            .vars()
                            .names()
                            .any(|x| compose_coord(x, var) == *name)
                    })
                    .map(|(i, _)| i)
                    .collect();
                debug_assert_eq!(drop.len(), self.base.vars().len());
                Ok(normalize(&project_out(&inner, &drop)?))
            }
        }
    }

    /// `assignments` for open subformulas; closed ones collapse to their
    /// truth value (full composition or the empty automaton over `tvs`).
    fn satisfying_or_closed(&self, phi: &Formula, tvs: &[String]) -> Result<Sfa, FiltrationError> {
        let free = free_trace_vars(phi);
        if free.is_empty() {
            return if self.check(phi)? {
                self.composition(tvs)
            } else {
                Ok(Sfa::new(
                    VarSet::new(self.canonical_varset(tvs)).expect("distinct coords"),
                    self.base.domain().clone(),
                ))
            };
        }
        let from = self.canonical(&free);
        let a = self.assignments(phi)?;
        Ok(normalize(&self.lift(&a, &from, tvs)?))
    }

    /// Truth of a closed formula over L(A), by the standard semantics.
    fn check(&self, phi: &Formula) -> Result<bool, FiltrationError> {
        match phi {
            Formula::Not(body) => Ok(!self.check(body)?),
            Formula::And(lhs, rhs) => Ok(self.check(lhs)? && self.check(rhs)?),
            Formula::Exists(var, body) => {
                if !free_trace_vars(body).contains(var) {
                    return Ok(!self.base.is_empty_language() && self.check(body)?);
                }
                Ok(!self.assignments(body)?.is_empty_language())
            }
            Formula::Atom { .. } => unreachable!("closed formulas have no bare atoms"),
        }
    }
}

/// Decides L(A) ⊨ φ under the direct satisfaction semantics, with each
/// quantifier handled by projection over a self-composition copy. The
/// pointwise negative filtration supplies the counterexample sketch.
pub fn check_formula_against_sfa(a: &Sfa, phi: &Formula) -> Result<CheckOutcome, FiltrationError> {
    let rect = rectify(phi)?;
    let trace_vars = quantifier_vars(&rect);
    let checker = FormulaChecker::new(a, trace_vars.clone());
    let holds = checker.check(&rect)?;
    let composed = self_compose(a, &trace_vars)?;
    let witness = if holds {
        None
    } else {
        let neg = filter(&rect, Polarity::Neg, &composed)?;
        neg.shortest_witness()
    };
    Ok(CheckOutcome {
        holds,
        trace_vars,
        composed_vars: composed.vars().clone(),
        witness,
    })
}

/// Decides ⌊K, W⌋ ⊨ φ through the stutter-free automaton induced by the
/// open Kripke structure.
pub fn check_formula_against_open_kripke(
    ok: &OpenKripke,
    phi: &Formula,
) -> Result<CheckOutcome, FiltrationError> {
    let a = to_sfa(ok)?;
    check_formula_against_sfa(&a, phi)
}

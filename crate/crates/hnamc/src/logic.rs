//! Hypernode-logic formulas and their direct satisfaction semantics over
//! explicit finite sets of unzipped trace segments. This module is the
//! semantic oracle; the automata pipeline lives in `filtration`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::segments::{sr_prefix, UnzippedSegment, VarSet};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error("formula is open: free trace variables {0:?}")]
    OpenFormula(Vec<String>),
    #[error("unknown program variable `{0}`")]
    UnknownProgramVar(String),
    #[error("segment arity does not match the variable set")]
    VarMismatch,
}

/// AST of hypernode logic. `Forall` and `Or` are derived sugar and are
/// desugared by the constructors below, so the enum carries only the core
/// connectives.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Exists(String, Box<Formula>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    /// x(π) ≼ y(π′)
    Atom {
        x: String,
        p: String,
        y: String,
        q: String,
    },
}

impl Formula {
    pub fn exists(p: impl Into<String>, body: Formula) -> Formula {
        Formula::Exists(p.into(), Box::new(body))
    }

    pub fn not(body: Formula) -> Formula {
        Formula::Not(Box::new(body))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    /// ∀π φ ≝ ¬∃π ¬φ
    pub fn forall(p: impl Into<String>, body: Formula) -> Formula {
        Formula::not(Formula::exists(p, Formula::not(body)))
    }

    /// a ∨ b ≝ ¬(¬a ∧ ¬b)
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::not(Formula::and(Formula::not(a), Formula::not(b)))
    }

    pub fn atom(
        x: impl Into<String>,
        p: impl Into<String>,
        y: impl Into<String>,
        q: impl Into<String>,
    ) -> Formula {
        Formula::Atom {
            x: x.into(),
            p: p.into(),
            y: y.into(),
            q: q.into(),
        }
    }

    pub fn is_closed(&self) -> bool {
        free_trace_vars(self).is_empty()
    }

    /// Program variables mentioned in atoms.
    pub fn program_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let Formula::Atom { x, y, .. } = f {
                out.insert(x.clone());
                out.insert(y.clone());
            }
        });
        out
    }

    pub fn quantifier_count(&self) -> usize {
        let mut n = 0;
        self.walk(&mut |f| {
            if matches!(f, Formula::Exists(..)) {
                n += 1;
            }
        });
        n
    }

    fn walk(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Exists(_, b) | Formula::Not(b) => b.walk(f),
            Formula::And(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Formula::Atom { .. } => {}
        }
    }
}

/// Free trace variables of a formula; empty iff the formula is closed.
pub fn free_trace_vars(phi: &Formula) -> BTreeSet<String> {
    fn go(phi: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match phi {
            Formula::Exists(p, body) => {
                bound.push(p.clone());
                go(body, bound, out);
                bound.pop();
            }
            Formula::Not(b) => go(b, bound, out),
            Formula::And(a, b) => {
                go(a, bound, out);
                go(b, bound, out);
            }
            Formula::Atom { p, q, .. } => {
                for v in [p, q] {
                    if !bound.iter().any(|b| b == v) {
                        out.insert(v.clone());
                    }
                }
            }
        }
    }
    let mut out = BTreeSet::new();
    go(phi, &mut Vec::new(), &mut out);
    out
}

/// Alpha-renames so that every quantifier binds a distinct trace variable.
/// Binder names are kept when already unique; colliding binders get numeric
/// suffixes in binding order. Shadowing resolves to the innermost binder.
pub fn rectify(phi: &Formula) -> Result<Formula, LogicError> {
    let free = free_trace_vars(phi);
    if !free.is_empty() {
        return Err(LogicError::OpenFormula(free.into_iter().collect()));
    }

    let mut binders = Vec::new();
    collect_binders(phi, &mut binders);
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for b in &binders {
        *counts.entry(b.as_str()).or_default() += 1;
    }
    let mut used: BTreeSet<String> = binders.iter().cloned().collect();
    let mut fresh: BTreeMap<usize, String> = BTreeMap::new();
    let mut next_suffix: BTreeMap<String, usize> = BTreeMap::new();
    for (i, b) in binders.iter().enumerate() {
        if counts[b.as_str()] > 1 {
            let k = next_suffix.entry(b.clone()).or_insert(1);
            let mut name = format!("{b}{k}");
            while used.contains(&name) {
                *k += 1;
                name = format!("{b}{k}");
            }
            *k += 1;
            used.insert(name.clone());
            fresh.insert(i, name);
        }
    }
    if fresh.is_empty() {
        return Ok(phi.clone());
    }

    fn rebuild(
        phi: &Formula,
        idx: &mut usize,
        fresh: &BTreeMap<usize, String>,
        env: &mut Vec<(String, String)>,
    ) -> Formula {
        match phi {
            Formula::Exists(p, body) => {
                let i = *idx;
                *idx += 1;
                let new_name = fresh.get(&i).cloned().unwrap_or_else(|| p.clone());
                env.push((p.clone(), new_name.clone()));
                let body = rebuild(body, idx, fresh, env);
                env.pop();
                Formula::Exists(new_name, Box::new(body))
            }
            Formula::Not(b) => Formula::not(rebuild(b, idx, fresh, env)),
            Formula::And(a, b) => Formula::and(
                rebuild(a, idx, fresh, env),
                rebuild(b, idx, fresh, env),
            ),
            Formula::Atom { x, p, y, q } => {
                let resolve = |v: &str| {
                    env.iter()
                        .rev()
                        .find(|(old, _)| old == v)
                        .map(|(_, new)| new.clone())
                        .unwrap_or_else(|| v.to_string())
                };
                Formula::Atom {
                    x: x.clone(),
                    p: resolve(p),
                    y: y.clone(),
                    q: resolve(q),
                }
            }
        }
    }
    Ok(rebuild(phi, &mut 0, &fresh, &mut Vec::new()))
}

fn collect_binders(phi: &Formula, out: &mut Vec<String>) {
    match phi {
        Formula::Exists(p, body) => {
            out.push(p.clone());
            collect_binders(body, out);
        }
        Formula::Not(b) => collect_binders(b, out),
        Formula::And(a, b) => {
            collect_binders(a, out);
            collect_binders(b, out);
        }
        Formula::Atom { .. } => {}
    }
}

/// Binder names in binding order (outermost first). Meaningful after
/// `rectify`, where all binders are distinct.
pub fn quantifier_vars(phi: &Formula) -> Vec<String> {
    let mut out = Vec::new();
    collect_binders(phi, &mut out);
    out
}

/// The inductive satisfaction relation, evaluated literally: ∃π enumerates
/// the segment set, ∧/¬ are boolean, and an atom checks ≼ on the bound
/// segments' strings. Quantification ranges over the set (duplicates
/// collapse); ∃π over the empty set is false.
pub fn evaluate(
    vars: &VarSet,
    segments: &BTreeSet<UnzippedSegment>,
    phi: &Formula,
) -> Result<bool, LogicError> {
    let free = free_trace_vars(phi);
    if !free.is_empty() {
        return Err(LogicError::OpenFormula(free.into_iter().collect()));
    }
    for seg in segments {
        if seg.arity() != vars.len() {
            return Err(LogicError::VarMismatch);
        }
    }
    let pool: Vec<&UnzippedSegment> = segments.iter().collect();
    let mut env: BTreeMap<String, &UnzippedSegment> = BTreeMap::new();
    eval(vars, &pool, phi, &mut env)
}

fn eval<'a>(
    vars: &VarSet,
    pool: &[&'a UnzippedSegment],
    phi: &Formula,
    env: &mut BTreeMap<String, &'a UnzippedSegment>,
) -> Result<bool, LogicError> {
    match phi {
        Formula::Exists(p, body) => {
            for seg in pool {
                let saved = env.insert(p.clone(), seg);
                let ok = eval(vars, pool, body, env)?;
                match saved {
                    Some(s) => {
                        env.insert(p.clone(), s);
                    }
                    None => {
                        env.remove(p);
                    }
                }
                if ok {
                    return Ok(true);
                }
            }
            Ok(false)
        }
        Formula::Not(b) => Ok(!eval(vars, pool, b, env)?),
        Formula::And(a, b) => Ok(eval(vars, pool, a, env)? && eval(vars, pool, b, env)?),
        Formula::Atom { x, p, y, q } => {
            let ix = vars
                .index_of(x)
                .ok_or_else(|| LogicError::UnknownProgramVar(x.clone()))?;
            let iy = vars
                .index_of(y)
                .ok_or_else(|| LogicError::UnknownProgramVar(y.clone()))?;
            // Closedness was checked up front, so both lookups succeed.
            let sp = env.get(p).expect("bound trace variable");
            let sq = env.get(q).expect("bound trace variable");
            Ok(sr_prefix(sp.string(ix), sq.string(iy)))
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Core syntax only; quantifier bodies extend maximally right, so a
        // quantified operand of a binary connective needs parentheses.
        fn prec(phi: &Formula) -> u8 {
            match phi {
                Formula::Exists(..) => 0,
                Formula::And(..) => 1,
                Formula::Not(..) | Formula::Atom { .. } => 2,
            }
        }
        fn go(phi: &Formula, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            let this = prec(phi);
            let need = this < min;
            if need {
                write!(f, "(")?;
            }
            match phi {
                Formula::Exists(p, b) => {
                    write!(f, "exists {p}. ")?;
                    go(b, 0, f)?;
                }
                Formula::Not(b) => {
                    write!(f, "!")?;
                    go(b, 2, f)?;
                }
                Formula::And(a, b) => {
                    go(a, 2, f)?;
                    write!(f, " & ")?;
                    go(b, 2, f)?;
                }
                Formula::Atom { x, p, y, q } => {
                    write!(f, "{x}({p}) <~ {y}({q})")?;
                }
            }
            if need {
                write!(f, ")")?;
            }
            Ok(())
        }
        go(self, 0, f)
    }
}

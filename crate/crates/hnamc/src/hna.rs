//! Hypernode automata: representation, validation, runs over action
//! sequences, trace-set slicing, and the direct acceptance semantics over
//! explicit finite trace sets. The slicing/Join pipeline lives in `slicing`;
//! the acceptance here is its oracle.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::logic::{evaluate, free_trace_vars, Formula, LogicError};
use crate::segments::{stutter_reduce, unzip, SegmentValuation, VarSet, ZippedSegment};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HnaError {
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("hypernode automaton has no nodes")]
    NoNodes,
    #[error(transparent)]
    Logic(#[from] LogicError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HnaNode {
    pub name: String,
    pub formula: Formula,
    /// Formula as written in the source file, kept for reporting.
    pub label_text: String,
}

/// Deterministic finite hypernode automaton: nodes labeled with closed
/// formulas, transitions labeled with actions, total over nodes × actions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hna {
    actions: Vec<String>,
    nodes: Vec<HnaNode>,
    initial: usize,
    trans: BTreeMap<(usize, usize), usize>,
}

impl Hna {
    pub fn new(actions: Vec<String>, nodes: Vec<HnaNode>, initial: usize) -> Result<Self, HnaError> {
        if nodes.is_empty() {
            return Err(HnaError::NoNodes);
        }
        let mut seen = BTreeSet::new();
        for n in &nodes {
            if !seen.insert(n.name.clone()) {
                return Err(HnaError::DuplicateNode(n.name.clone()));
            }
        }
        Ok(Hna {
            actions,
            nodes,
            initial,
            trans: BTreeMap::new(),
        })
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_id(&self, name: &str) -> Option<usize> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn nodes(&self) -> &[HnaNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &HnaNode {
        &self.nodes[id]
    }

    pub fn node_id(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn set_transition(&mut self, from: usize, action: usize, to: usize) {
        self.trans.insert((from, action), to);
    }

    pub fn transition(&self, from: usize, action: usize) -> Option<usize> {
        self.trans.get(&(from, action)).copied()
    }

    pub fn transition_count(&self) -> usize {
        self.trans.len()
    }

    /// Program variables mentioned across all node labels.
    pub fn program_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for n in &self.nodes {
            out.extend(n.formula.program_vars());
        }
        out
    }

    /// Reports missing (node, action) transitions, open labels, and
    /// unreachable nodes (a warning, listed last).
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for (ni, node) in self.nodes.iter().enumerate() {
            for (ai, action) in self.actions.iter().enumerate() {
                if !self.trans.contains_key(&(ni, ai)) {
                    problems.push(format!(
                        "node `{}` has no transition on action `{}`",
                        node.name, action
                    ));
                }
            }
            let free = free_trace_vars(&node.formula);
            if !free.is_empty() {
                problems.push(format!(
                    "label of node `{}` is open: free trace variables {:?}",
                    node.name, free
                ));
            }
        }
        let mut reach = vec![false; self.nodes.len()];
        let mut stack = vec![self.initial];
        reach[self.initial] = true;
        while let Some(n) = stack.pop() {
            for (&(from, _), &to) in &self.trans {
                if from == n && !reach[to] {
                    reach[to] = true;
                    stack.push(to);
                }
            }
        }
        for (ni, node) in self.nodes.iter().enumerate() {
            if !reach[ni] {
                problems.push(format!("warning: node `{}` is unreachable", node.name));
            }
        }
        problems
    }

    /// The node sequence q0 … q_{|p|} traversed on action sequence `p`.
    pub fn run(&self, p: &[usize]) -> Result<Vec<usize>, HnaError> {
        let mut nodes = Vec::with_capacity(p.len() + 1);
        let mut cur = self.initial;
        nodes.push(cur);
        for &a in p {
            if a >= self.actions.len() {
                return Err(HnaError::UnknownAction(format!("#{a}")));
            }
            cur = self
                .transition(cur, a)
                .ok_or_else(|| HnaError::UnknownAction(self.actions[a].clone()))?;
            nodes.push(cur);
        }
        Ok(nodes)
    }
}

/// A finite action-labeled trace: valuations paired with an action or ε.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ActionLabeledTrace {
    pub steps: Vec<(SegmentValuation, Option<usize>)>,
}

impl ActionLabeledTrace {
    pub fn new(steps: Vec<(SegmentValuation, Option<usize>)>) -> Self {
        ActionLabeledTrace { steps }
    }
}

/// The action sequence of a trace: labels in order with ε removed.
pub fn project_actions(trace: &ActionLabeledTrace) -> Vec<usize> {
    trace.steps.iter().filter_map(|(_, a)| *a).collect()
}

/// Restricts `traces` to those whose action projection extends `p`, then
/// cuts each survivor at its labeled steps: slice i ends with (and includes)
/// the valuation paired with action p[i]. Returns `None` when no trace
/// matches (R[p] = ∅), otherwise |p| slice sets.
pub fn slice_trace_set(
    traces: &BTreeSet<ActionLabeledTrace>,
    p: &[usize],
) -> Option<Vec<BTreeSet<ZippedSegment>>> {
    let mut slices: Vec<BTreeSet<ZippedSegment>> = vec![BTreeSet::new(); p.len()];
    let mut any = false;
    for trace in traces {
        let proj = project_actions(trace);
        if proj.len() < p.len() || proj[..p.len()] != *p {
            continue;
        }
        any = true;
        let mut start = 0usize;
        let mut slice_idx = 0usize;
        for (i, (_, action)) in trace.steps.iter().enumerate() {
            if action.is_some() {
                if slice_idx < p.len() {
                    let steps = trace.steps[start..=i]
                        .iter()
                        .map(|(v, _)| v.clone())
                        .collect();
                    slices[slice_idx].insert(ZippedSegment::new(steps));
                }
                start = i + 1;
                slice_idx += 1;
                if slice_idx == p.len() {
                    break;
                }
            }
        }
    }
    if any {
        Some(slices)
    } else {
        None
    }
}

/// Outcome of the direct acceptance check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleVerdict {
    Accepted,
    Rejected {
        /// Action sequence whose slicing fails.
        p: Vec<usize>,
        /// Index of the failing slice within `p`.
        slice: usize,
        /// Node whose formula the slice violates.
        node: usize,
    },
}

impl OracleVerdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, OracleVerdict::Accepted)
    }
}

/// Direct acceptance semantics: for every action sequence p of length at
/// most `max_p` with R[p] non-empty, every slice must model the formula of
/// the node the run visits. Reports the first failure in breadth-first,
/// lexicographic order of p. Trailing ε-only suffixes after a trace's last
/// action are never checked, mirroring the acceptance definition.
///
/// `actions` is the universe the traces' action ids index into; it is mapped
/// onto the automaton's own action alphabet by name.
pub fn oracle_accepts(
    vars: &VarSet,
    actions: &[String],
    traces: &BTreeSet<ActionLabeledTrace>,
    hna: &Hna,
    max_p: usize,
) -> Result<OracleVerdict, HnaError> {
    let mut action_map = Vec::with_capacity(actions.len());
    for name in actions {
        action_map.push(
            hna.action_id(name)
                .ok_or_else(|| HnaError::UnknownAction(name.clone()))?,
        );
    }
    let mut frontier: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..max_p {
        let mut next = Vec::new();
        for p in &frontier {
            for a in 0..actions.len() {
                let mut q = p.clone();
                q.push(a);
                let Some(slices) = slice_trace_set(traces, &q) else {
                    continue;
                };
                let hna_p: Vec<usize> = q.iter().map(|&a| action_map[a]).collect();
                let nodes = hna.run(&hna_p)?;
                for (i, slice) in slices.iter().enumerate() {
                    let segs: BTreeSet<_> = slice
                        .iter()
                        .map(|z| stutter_reduce(&unzip(z, vars.len())))
                        .collect();
                    let node = nodes[i];
                    if !evaluate(vars, &segs, &hna.node(node).formula)? {
                        return Ok(OracleVerdict::Rejected {
                            p: q,
                            slice: i,
                            node,
                        });
                    }
                }
                next.push(q);
            }
        }
        frontier = next;
    }
    Ok(OracleVerdict::Accepted)
}

//! Brute-force reference implementations used in tests and the `oracle` CLI
//! subcommands: bounded trace enumeration, direct formula evaluation over
//! generated segments, and direct acceptance checking. These share no code
//! with the automata pipeline beyond the value types and the direct
//! semantics, so they can catch pipeline bugs.

use std::collections::BTreeSet;

use crate::hna::{oracle_accepts, ActionLabeledTrace, Hna, HnaError, OracleVerdict};
use crate::kripke::{generated_segments, OpenKripke, PointedLabeledKripke, SegmentMode};
use crate::logic::{evaluate, Formula, LogicError};
use crate::segments::UnzippedSegment;

/// All action-labeled traces of at most `max_steps` worlds from the initial
/// world, one per (path, label choice) combination. The final step carries ε.
pub fn enumerate_labeled_traces(
    model: &PointedLabeledKripke,
    max_steps: usize,
) -> BTreeSet<ActionLabeledTrace> {
    let k = &model.kripke;
    let mut out = BTreeSet::new();
    // Stack entries: current world plus the labeled steps so far.
    let mut stack: Vec<(usize, Vec<(crate::segments::SegmentValuation, Option<usize>)>)> =
        vec![(model.initial, Vec::new())];
    while let Some((world, steps)) = stack.pop() {
        let mut full = steps.clone();
        full.push((k.valuation(world).clone(), None));
        out.insert(ActionLabeledTrace::new(full));
        if steps.len() + 1 >= max_steps {
            continue;
        }
        for t in k.successors(world) {
            if let Some(labels) = model.labeling.labels((world, t)) {
                for &label in labels {
                    let mut next = steps.clone();
                    next.push((k.valuation(world).clone(), label));
                    stack.push((t, next));
                }
            }
        }
    }
    out
}

/// Direct evaluation of a formula over the generated segment set of an open
/// Kripke structure. Exact when the structure is acyclic and `max_len` is at
/// least the longest path; bounded otherwise.
pub fn bf_check_formula(
    ok: &OpenKripke,
    phi: &Formula,
    max_len: usize,
    mode: SegmentMode,
) -> Result<bool, LogicError> {
    let segments: BTreeSet<UnzippedSegment> = generated_segments(ok, max_len, mode);
    evaluate(ok.kripke.vars(), &segments, phi)
}

/// Direct acceptance check of a hypernode automaton over the enumerated
/// traces of the model.
pub fn bf_check_hna(
    model: &PointedLabeledKripke,
    hna: &Hna,
    max_steps: usize,
    max_p: usize,
) -> Result<OracleVerdict, HnaError> {
    let traces = enumerate_labeled_traces(model, max_steps);
    oracle_accepts(
        model.kripke.vars(),
        model.actions(),
        &traces,
        hna,
        max_p,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kripke::{ActionLabeling, Kripke};
    use crate::segments::{Domain, SegmentValuation, VarSet};

    fn dom01() -> Domain {
        Domain::new(["0", "1"]).unwrap()
    }

    #[test]
    fn enumerate_chain_with_label_choice() {
        let vars = VarSet::new(["x"]).unwrap();
        let mut k = Kripke::new(vars, dom01());
        let w0 = k.add_world("w0", SegmentValuation(vec![0]));
        let w1 = k.add_world("w1", SegmentValuation(vec![1]));
        k.add_edge(w0, w1);
        let mut lab = ActionLabeling::new(vec!["a".to_string()]);
        lab.set_labels((w0, w1), BTreeSet::from([Some(0), None]));
        let m = PointedLabeledKripke::new(k, lab, w0).unwrap();
        let traces = enumerate_labeled_traces(&m, 2);
        // w0 alone, w0 -a-> w1, w0 -eps-> w1.
        assert_eq!(traces.len(), 3);
        let with_action = traces
            .iter()
            .filter(|t| t.steps.iter().any(|(_, a)| a.is_some()))
            .count();
        assert_eq!(with_action, 1);
    }

    #[test]
    fn bf_formula_single_world() {
        let vars = VarSet::new(["x"]).unwrap();
        let mut k = Kripke::new(vars, dom01());
        let w = k.add_world("w", SegmentValuation(vec![0]));
        let ok = OpenKripke::new(k, BTreeSet::from([w]), BTreeSet::from([w])).unwrap();
        let phi = Formula::forall("p", Formula::atom("x", "p", "x", "p"));
        assert!(bf_check_formula(&ok, &phi, 3, SegmentMode::Product).unwrap());
        assert!(bf_check_formula(&ok, &phi, 3, SegmentMode::Joint).unwrap());
    }
}

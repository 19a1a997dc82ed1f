//! Python bindings for the hypernode-automata model checker: the text
//! formats, stutter-free automaton operations, and the two checkers.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use hnamc::filtration::check_formula_against_open_kripke;
use hnamc::logic::{evaluate, free_trace_vars};
use hnamc::oracle::{bf_check_formula, bf_check_hna};
use hnamc::parse;
use hnamc::segments::UnzippedSegment;
use hnamc::sfa::ops;
use hnamc::slicing::{model_check, Verdict};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A hypernode-logic formula.
#[pyclass(name = "Formula", frozen)]
struct PyFormula {
    inner: hnamc::Formula,
}

#[pymethods]
impl PyFormula {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = parse::parse_formula(text).map_err(value_err)?;
        Ok(PyFormula { inner })
    }

    fn is_closed(&self) -> bool {
        self.inner.is_closed()
    }

    fn free_trace_vars(&self) -> Vec<String> {
        free_trace_vars(&self.inner).into_iter().collect()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Formula({:?})", self.inner.to_string())
    }
}

/// A stutter-free automaton.
#[pyclass(name = "Sfa")]
struct PySfa {
    inner: hnamc::Sfa,
}

fn segment_from_dict(a: &hnamc::Sfa, seg: &Bound<'_, PyDict>) -> PyResult<UnzippedSegment> {
    let mut strings: Vec<Vec<u16>> = vec![Vec::new(); a.vars().len()];
    for (key, value) in seg.iter() {
        let var: String = key.extract()?;
        let idx = a
            .vars()
            .index_of(&var)
            .ok_or_else(|| value_err(format!("unknown variable `{var}`")))?;
        let tokens: Vec<String> = value.extract()?;
        let mut s = Vec::with_capacity(tokens.len());
        for t in &tokens {
            s.push(
                a.domain()
                    .index_of(t)
                    .ok_or_else(|| value_err(format!("unknown value `{t}`")))?,
            );
        }
        strings[idx] = s;
    }
    Ok(UnzippedSegment::new(strings))
}

fn segment_to_dict<'py>(
    py: Python<'py>,
    a: &hnamc::Sfa,
    seg: &UnzippedSegment,
) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new(py);
    for (i, s) in seg.strings.iter().enumerate() {
        let vals: Vec<&str> = s.iter().map(|&v| a.domain().value(v)).collect();
        dict.set_item(a.vars().name(i), vals)?;
    }
    Ok(dict)
}

#[pymethods]
impl PySfa {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let inner = parse::parse_sfa(text).map_err(value_err)?;
        Ok(PySfa { inner })
    }

    #[staticmethod]
    fn universal(vars: Vec<String>, domain: Vec<String>) -> PyResult<Self> {
        let vars = hnamc::VarSet::new(vars).map_err(value_err)?;
        let domain = hnamc::Domain::new(domain).map_err(value_err)?;
        Ok(PySfa {
            inner: hnamc::sfa::universal(&vars, &domain),
        })
    }

    fn to_text(&self) -> String {
        parse::serialize_sfa(&self.inner)
    }

    fn state_count(&self) -> usize {
        self.inner.state_count()
    }

    fn validate(&self) -> Vec<String> {
        self.inner.validate().iter().map(|v| v.to_string()).collect()
    }

    fn is_deterministic(&self) -> bool {
        self.inner.is_deterministic()
    }

    /// Membership of a segment given as {"x": ["0","1"], "y": ["0"]}.
    fn member(&self, seg: &Bound<'_, PyDict>) -> PyResult<bool> {
        let seg = segment_from_dict(&self.inner, seg)?;
        self.inner.member(&seg).map_err(value_err)
    }

    /// Language members with all strings of length <= max_len.
    fn enumerate<'py>(&self, py: Python<'py>, max_len: usize) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .enumerate_language(max_len)
            .iter()
            .map(|seg| segment_to_dict(py, &self.inner, seg))
            .collect()
    }

    fn is_empty(&self) -> bool {
        self.inner.is_empty_language()
    }

    fn witness<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyDict>>> {
        match self.inner.shortest_witness() {
            Some(w) => Ok(Some(segment_to_dict(py, &self.inner, &w)?)),
            None => Ok(None),
        }
    }

    fn union(&self, other: &PySfa) -> PyResult<PySfa> {
        Ok(PySfa { inner: ops::union(&self.inner, &other.inner).map_err(value_err)? })
    }

    fn product(&self, other: &PySfa) -> PyResult<PySfa> {
        Ok(PySfa { inner: ops::intersection(&self.inner, &other.inner).map_err(value_err)? })
    }

    fn difference(&self, other: &PySfa) -> PyResult<PySfa> {
        Ok(PySfa { inner: ops::difference(&self.inner, &other.inner).map_err(value_err)? })
    }

    fn determinize(&self) -> PySfa {
        PySfa { inner: ops::determinize(&self.inner) }
    }

    fn complete(&self) -> PyResult<PySfa> {
        Ok(PySfa { inner: ops::complete(&self.inner).map_err(value_err)? })
    }

    fn complement(&self) -> PyResult<PySfa> {
        Ok(PySfa { inner: ops::complement(&self.inner).map_err(value_err)? })
    }

    fn self_compose(&self, trace_vars: Vec<String>) -> PyResult<PySfa> {
        Ok(PySfa { inner: ops::self_compose(&self.inner, &trace_vars).map_err(value_err)? })
    }

    /// Decides whether the automaton's language models the closed formula.
    fn models(&self, formula: &PyFormula) -> PyResult<bool> {
        let outcome =
            hnamc::check_formula_against_sfa(&self.inner, &formula.inner).map_err(value_err)?;
        Ok(outcome.holds)
    }

    fn __repr__(&self) -> String {
        format!("Sfa(states={})", self.inner.state_count())
    }
}

/// Checks a hypernode-logic formula against an open Kripke structure given
/// in `.kripke` text form. Returns (holds, counterexample or None).
#[pyfunction]
fn check_formula(kripke_text: &str, formula_text: &str) -> PyResult<(bool, Option<String>)> {
    let parsed = parse::parse_kripke(kripke_text).map_err(value_err)?;
    let ok = parsed.to_open().map_err(value_err)?;
    let phi = parse::parse_formula(formula_text).map_err(value_err)?;
    let outcome = check_formula_against_open_kripke(&ok, &phi).map_err(value_err)?;
    let witness = outcome
        .witness
        .as_ref()
        .map(|w| w.display(&outcome.composed_vars, ok.kripke.domain()));
    Ok((outcome.holds, witness))
}

/// Checks a hypernode automaton against a pointed labeled Kripke structure,
/// both in text form. Returns a dict with verdict/witness/node/formula.
#[pyfunction]
fn check<'py>(py: Python<'py>, kripke_text: &str, hna_text: &str) -> PyResult<Bound<'py, PyDict>> {
    let parsed = parse::parse_kripke(kripke_text).map_err(value_err)?;
    let model = parsed.to_pointed().map_err(value_err)?;
    let hna = parse::parse_hna(hna_text).map_err(value_err)?;
    let out = PyDict::new(py);
    match model_check(&hna, &model, None).map_err(value_err)? {
        Verdict::Holds => out.set_item("verdict", "holds")?,
        Verdict::Unknown => out.set_item("verdict", "unknown")?,
        Verdict::Violated(cex) => {
            out.set_item("verdict", "violated")?;
            let witness: Vec<String> = cex
                .witness
                .iter()
                .map(|&a| model.actions()[a].to_string())
                .collect();
            out.set_item("witness", witness)?;
            out.set_item("node", hna.node(cex.node).name.clone())?;
            out.set_item("formula", hna.node(cex.node).label_text.clone())?;
        }
    }
    Ok(out)
}

/// Brute-force formula check over enumerated paths (product mode).
#[pyfunction]
fn oracle_check_formula(kripke_text: &str, formula_text: &str, max_len: usize) -> PyResult<bool> {
    let parsed = parse::parse_kripke(kripke_text).map_err(value_err)?;
    let ok = parsed.to_open().map_err(value_err)?;
    let phi = parse::parse_formula(formula_text).map_err(value_err)?;
    bf_check_formula(&ok, &phi, max_len, hnamc::kripke::SegmentMode::Product).map_err(value_err)
}

/// Brute-force acceptance check over enumerated traces.
#[pyfunction]
fn oracle_check_hna(
    kripke_text: &str,
    hna_text: &str,
    max_len: usize,
    max_actions: usize,
) -> PyResult<bool> {
    let parsed = parse::parse_kripke(kripke_text).map_err(value_err)?;
    let model = parsed.to_pointed().map_err(value_err)?;
    let hna = parse::parse_hna(hna_text).map_err(value_err)?;
    Ok(bf_check_hna(&model, &hna, max_len, max_actions)
        .map_err(value_err)?
        .is_accepted())
}

/// Evaluates a closed formula over an explicit set of segments, e.g.
/// evaluate_segments(["x","y"], ["0","1"], [{"x": ["0"], "y": ["0","1"]}], phi).
#[pyfunction]
fn evaluate_segments(
    vars: Vec<String>,
    domain: Vec<String>,
    segments: Vec<BTreeMap<String, Vec<String>>>,
    formula: &PyFormula,
) -> PyResult<bool> {
    let vars = hnamc::VarSet::new(vars).map_err(value_err)?;
    let domain = hnamc::Domain::new(domain).map_err(value_err)?;
    let mut set = std::collections::BTreeSet::new();
    for seg in &segments {
        let mut strings: Vec<Vec<u16>> = vec![Vec::new(); vars.len()];
        for (var, tokens) in seg {
            let idx = vars
                .index_of(var)
                .ok_or_else(|| value_err(format!("unknown variable `{var}`")))?;
            let mut s = Vec::new();
            for t in tokens {
                s.push(
                    domain
                        .index_of(t)
                        .ok_or_else(|| value_err(format!("unknown value `{t}`")))?,
                );
            }
            strings[idx] = s;
        }
        set.insert(UnzippedSegment::new(strings));
    }
    evaluate(&vars, &set, &formula.inner).map_err(value_err)
}

#[pymodule]
fn hnamc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFormula>()?;
    m.add_class::<PySfa>()?;
    m.add_function(wrap_pyfunction!(check, m)?)?;
    m.add_function(wrap_pyfunction!(check_formula, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check_formula, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check_hna, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_segments, m)?)?;
    Ok(())
}

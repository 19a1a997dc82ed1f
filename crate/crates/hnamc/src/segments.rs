//! Trace-segment value types shared by every other module: domains, variable
//! sets, valuations, zipped/unzipped segments, stutter reduction, and the
//! stutter-reduced prefixing relation.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// The distinguished termination token. Reserved: never a domain value.
pub const TERM_TOKEN: &str = "#";

/// Reserved edge-label name for the empty action.
pub const EPS_TOKEN: &str = "eps";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("domain must contain at least one value")]
    EmptyDomain,
    #[error("duplicate domain value `{0}`")]
    DuplicateValue(String),
    #[error("`#` is reserved as the termination token and cannot be a domain value")]
    ReservedTerm,
    #[error("variable set must be non-empty")]
    EmptyVarSet,
    #[error("duplicate variable `{0}`")]
    DuplicateVar(String),
    #[error("letter assigns `#` to every variable; the all-# letter is excluded")]
    AllTermLetter,
    #[error("arity mismatch: expected {expected} coordinates, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("value index {0} out of domain range")]
    ValueRange(u16),
}

/// Finite value domain Σ. Values are opaque tokens, stored sorted so that
/// indices, iteration, and serialization are deterministic.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Domain {
    values: Vec<String>,
}

impl Domain {
    pub fn new<I, S>(values: I) -> Result<Self, CoreError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vals: Vec<String> = values.into_iter().map(Into::into).collect();
        if vals.is_empty() {
            return Err(CoreError::EmptyDomain);
        }
        vals.sort();
        for w in vals.windows(2) {
            if w[0] == w[1] {
                return Err(CoreError::DuplicateValue(w[0].clone()));
            }
        }
        if vals.iter().any(|v| v == TERM_TOKEN) {
            return Err(CoreError::ReservedTerm);
        }
        Ok(Domain { values: vals })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, idx: u16) -> &str {
        &self.values[idx as usize]
    }

    pub fn index_of(&self, token: &str) -> Option<u16> {
        self.values.iter().position(|v| v == token).map(|i| i as u16)
    }

    pub fn values(&self) -> impl Iterator<Item = &str> {
        self.values.iter().map(|s| s.as_str())
    }

    /// True when every value token is a single character, in which case
    /// segment strings serialize as contiguous characters ("x=010").
    pub fn single_char(&self) -> bool {
        self.values.iter().all(|v| v.chars().count() == 1)
    }
}

/// Ordered set X of program variables. Order is the declaration order and is
/// part of the identity: letters and segments are positional over it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct VarSet {
    names: Vec<String>,
}

impl VarSet {
    pub fn new<I, S>(names: I) -> Result<Self, CoreError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(CoreError::EmptyVarSet);
        }
        let mut seen = BTreeSet::new();
        for n in &names {
            if !seen.insert(n.clone()) {
                return Err(CoreError::DuplicateVar(n.clone()));
            }
        }
        Ok(VarSet { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn name(&self, idx: usize) -> &str {
        &self.names[idx]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(|s| s.as_str())
    }
}

/// One coordinate of a letter: a domain value or the termination symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sym {
    Val(u16),
    Term,
}

impl Sym {
    pub fn is_term(self) -> bool {
        matches!(self, Sym::Term)
    }
}

/// A letter of the alphabet Σ^X̂: a total assignment of variables to values
/// or `#`, excluding the all-`#` letter. Coordinates follow VarSet order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter(Box<[Sym]>);

impl Letter {
    pub fn new(syms: Vec<Sym>) -> Result<Self, CoreError> {
        if syms.iter().all(|s| s.is_term()) {
            return Err(CoreError::AllTermLetter);
        }
        Ok(Letter(syms.into_boxed_slice()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, idx: usize) -> Sym {
        self.0[idx]
    }

    pub fn syms(&self) -> &[Sym] {
        &self.0
    }

    /// Restricts the letter to the given coordinate positions. The result may
    /// be all-`#`, so it is returned as a raw symbol vector.
    pub fn restrict(&self, positions: &[usize]) -> Vec<Sym> {
        positions.iter().map(|&i| self.0[i]).collect()
    }

    pub fn display(&self, vars: &VarSet, domain: &Domain) -> String {
        let mut out = String::new();
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(vars.name(i));
            out.push('=');
            match s {
                Sym::Val(v) => out.push_str(domain.value(*v)),
                Sym::Term => out.push_str(TERM_TOKEN),
            }
        }
        out
    }
}

/// Compatibility of consecutive letters in a stutter-free padded word:
/// a terminated coordinate stays terminated, a live one must change.
pub fn letters_compatible(prev: &Letter, next: &Letter) -> bool {
    prev.syms().iter().zip(next.syms()).all(|(p, n)| match p {
        Sym::Term => n.is_term(),
        Sym::Val(_) => p != n,
    })
}

/// Every letter of Σ^X̂, in lexicographic coordinate order (values in domain
/// order, `#` last). Materializes (|Σ|+1)^|X| − 1 letters; callers keep |X|
/// small.
pub fn all_letters(vars: &VarSet, domain: &Domain) -> Vec<Letter> {
    let m = vars.len();
    let base = domain.len() + 1;
    let mut out = Vec::new();
    let total = (base as u64).pow(m as u32);
    for mut code in 0..total {
        let mut syms = Vec::with_capacity(m);
        for _ in 0..m {
            let digit = (code % base as u64) as usize;
            code /= base as u64;
            syms.push(if digit == domain.len() {
                Sym::Term
            } else {
                Sym::Val(digit as u16)
            });
        }
        // digits were produced least-significant-first; keep coordinate 0 most
        // significant so the overall order is lexicographic.
        syms.reverse();
        if let Ok(letter) = Letter::new(syms) {
            out.push(letter);
        }
    }
    out.sort();
    out
}

/// A valuation v: X → Σ, positional over the VarSet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SegmentValuation(pub Vec<u16>);

impl SegmentValuation {
    pub fn get(&self, idx: usize) -> u16 {
        self.0[idx]
    }
}

/// A trace segment τ: a finite sequence of valuations.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ZippedSegment {
    pub steps: Vec<SegmentValuation>,
}

impl ZippedSegment {
    pub fn new(steps: Vec<SegmentValuation>) -> Self {
        ZippedSegment { steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// An unzipped trace segment τ: X → Σ*, one value string per variable.
/// Strings are positional over the VarSet and may have different lengths.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct UnzippedSegment {
    pub strings: Vec<Vec<u16>>,
}

impl UnzippedSegment {
    pub fn new(strings: Vec<Vec<u16>>) -> Self {
        UnzippedSegment { strings }
    }

    pub fn arity(&self) -> usize {
        self.strings.len()
    }

    pub fn string(&self, idx: usize) -> &[u16] {
        &self.strings[idx]
    }

    pub fn max_len(&self) -> usize {
        self.strings.iter().map(|s| s.len()).max().unwrap_or(0)
    }

    pub fn is_stutter_free(&self) -> bool {
        self.strings
            .iter()
            .all(|s| s.windows(2).all(|w| w[0] != w[1]))
    }

    /// Renders as `x=010 y=01`. Multi-character domain tokens are joined
    /// with commas instead of concatenated.
    pub fn display(&self, vars: &VarSet, domain: &Domain) -> String {
        let single = domain.single_char();
        let mut out = String::new();
        for (i, s) in self.strings.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(vars.name(i));
            out.push('=');
            for (j, v) in s.iter().enumerate() {
                if j > 0 && !single {
                    out.push(',');
                }
                out.push_str(domain.value(*v));
            }
        }
        out
    }
}

/// Stutter reduction of a single value string: collapses each maximal block
/// of equal consecutive values to one occurrence. Idempotent.
pub fn stutter_reduce_string(s: &[u16]) -> Vec<u16> {
    let mut out = Vec::with_capacity(s.len());
    for &v in s {
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    out
}

/// Per-variable stutter reduction ⌊τ⌋ of an unzipped segment.
pub fn stutter_reduce(seg: &UnzippedSegment) -> UnzippedSegment {
    UnzippedSegment::new(
        seg.strings
            .iter()
            .map(|s| stutter_reduce_string(s))
            .collect(),
    )
}

/// Unzipping of a trace segment: strings(x) = v_0(x)…v_n(x) for each x.
/// `arity` fixes the variable count so the empty segment unzips to empty
/// strings of the right shape.
pub fn unzip(seg: &ZippedSegment, arity: usize) -> UnzippedSegment {
    let mut strings = vec![Vec::with_capacity(seg.len()); arity];
    for step in &seg.steps {
        debug_assert_eq!(step.0.len(), arity);
        for (i, &v) in step.0.iter().enumerate() {
            strings[i].push(v);
        }
    }
    UnzippedSegment::new(strings)
}

/// The stutter-reduced prefixing relation s ≼ t: the stutter reduction of
/// `s` is a prefix of the stutter reduction of `t`. The empty string is a
/// prefix of everything.
pub fn sr_prefix(s: &[u16], t: &[u16]) -> bool {
    let rs = stutter_reduce_string(s);
    let rt = stutter_reduce_string(t);
    rs.len() <= rt.len() && rs == rt[..rs.len()]
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::Val(v) => write!(f, "{v}"),
            Sym::Term => write!(f, "{TERM_TOKEN}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dom01() -> Domain {
        Domain::new(["0", "1"]).unwrap()
    }

    fn chars(s: &str) -> Vec<u16> {
        s.chars().map(|c| c.to_digit(10).unwrap() as u16).collect()
    }

    #[test]
    fn stutter_reduce_forced_examples() {
        assert_eq!(stutter_reduce_string(&chars("0011022")), chars("0102"));
        assert_eq!(stutter_reduce_string(&[]), Vec::<u16>::new());
        assert_eq!(stutter_reduce_string(&[5, 5, 5, 5]), vec![5]);
    }

    #[test]
    fn stutter_reduce_segment_per_variable() {
        let seg = UnzippedSegment::new(vec![chars("010"), chars("0011")]);
        let red = stutter_reduce(&seg);
        assert_eq!(red.strings, vec![chars("010"), chars("01")]);
        let empty = UnzippedSegment::new(vec![vec![], vec![]]);
        assert_eq!(stutter_reduce(&empty), empty);
    }

    #[test]
    fn unzip_examples() {
        let seg = ZippedSegment::new(vec![
            SegmentValuation(vec![0, 1]),
            SegmentValuation(vec![0, 0]),
        ]);
        let un = unzip(&seg, 2);
        assert_eq!(un.strings, vec![chars("00"), chars("10")]);
        assert_eq!(unzip(&ZippedSegment::default(), 2).strings, vec![vec![], vec![]]);
        let one = ZippedSegment::new(vec![SegmentValuation(vec![1, 1])]);
        assert_eq!(unzip(&one, 2).strings, vec![chars("1"), chars("1")]);
    }

    #[test]
    fn sr_prefix_examples() {
        assert!(sr_prefix(&chars("01"), &chars("0111")));
        assert!(!sr_prefix(&chars("01"), &chars("10")));
        // The two z-strings of the dark-gray slice relate in neither direction.
        assert!(!sr_prefix(&chars("0"), &chars("1")));
        assert!(!sr_prefix(&chars("1"), &chars("0")));
        // Empty-string convention.
        assert!(sr_prefix(&[], &chars("0101")));
        assert!(sr_prefix(&[], &[]));
        assert!(!sr_prefix(&chars("0"), &[]));
    }

    #[test]
    fn domain_rejects_term_and_duplicates() {
        assert_eq!(Domain::new(["0", "#"]), Err(CoreError::ReservedTerm));
        assert_eq!(
            Domain::new(["a", "a"]),
            Err(CoreError::DuplicateValue("a".into()))
        );
        assert!(Domain::new(Vec::<String>::new()).is_err());
    }

    #[test]
    fn all_letters_excludes_all_term() {
        let vars = VarSet::new(["x", "y"]).unwrap();
        let letters = all_letters(&vars, &dom01());
        assert_eq!(letters.len(), 8); // 3^2 - 1
        assert!(letters.iter().all(|l| !l.syms().iter().all(|s| s.is_term())));
    }

    fn arb_string() -> impl Strategy<Value = Vec<u16>> {
        proptest::collection::vec(0u16..2, 0..8)
    }

    proptest! {
        #[test]
        fn reduce_idempotent(s in arb_string()) {
            let r = stutter_reduce_string(&s);
            prop_assert_eq!(stutter_reduce_string(&r), r.clone());
        }

        #[test]
        fn sr_prefix_stutter_insensitive(s in arb_string(), t in arb_string()) {
            prop_assert_eq!(
                sr_prefix(&s, &t),
                sr_prefix(&stutter_reduce_string(&s), &stutter_reduce_string(&t))
            );
        }

        #[test]
        fn sr_prefix_reflexive(s in arb_string()) {
            prop_assert!(sr_prefix(&s, &s));
        }

        #[test]
        fn unzip_lengths(n in 0usize..6) {
            let steps: Vec<_> = (0..n).map(|i| SegmentValuation(vec![(i % 2) as u16, 0])).collect();
            let seg = ZippedSegment::new(steps);
            let un = unzip(&seg, 2);
            prop_assert!(un.strings.iter().all(|s| s.len() == n));
        }
    }

    #[test]
    fn sr_prefix_transitive_exhaustive() {
        // All strings of length <= 4 over a binary domain.
        let mut strings = vec![vec![]];
        for len in 1..=4usize {
            let count = 2usize.pow(len as u32);
            for code in 0..count {
                let s: Vec<u16> = (0..len).map(|i| ((code >> i) & 1) as u16).collect();
                strings.push(s);
            }
        }
        for a in &strings {
            for b in &strings {
                for c in &strings {
                    if sr_prefix(a, b) && sr_prefix(b, c) {
                        assert!(sr_prefix(a, c));
                    }
                }
            }
        }
    }
}

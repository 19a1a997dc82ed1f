//! Text formats and parsers/serializers for formulas, Kripke structures,
//! hypernode automata, and stutter-free automata. Formats are line oriented
//! (`#` starts a comment token), UTF-8, LF or CRLF. Every parse error carries
//! a source span.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::hna::{Hna, HnaNode};
use crate::kripke::{ActionLabeling, Kripke, PointedLabeledKripke};
use crate::logic::Formula;
use crate::segments::{
    Domain, Letter, SegmentValuation, Sym, UnzippedSegment, VarSet, EPS_TOKEN, TERM_TOKEN,
};
use crate::sfa::Sfa;

/// 1-based line/column position with the byte range of the offending token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: usize,
    pub col: usize,
    pub start: usize,
    pub end: usize,
}

impl SourceSpan {
    fn point(line: usize, col: usize, at: usize) -> Self {
        SourceSpan {
            line,
            col,
            start: at,
            end: at + 1,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {}, column {}: {message}", span.line, span.col)]
pub struct ParseError {
    pub message: String,
    pub span: SourceSpan,
}

impl ParseError {
    fn new(message: impl Into<String>, span: SourceSpan) -> Self {
        ParseError {
            message: message.into(),
            span,
        }
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

// ---------------------------------------------------------------------------
// Formula parsing

#[derive(Debug, Clone, PartialEq, Eq)]
enum FTok {
    Ident(String),
    LParen,
    RParen,
    Dot,
    Bang,
    Amp,
    Pipe,
    Precedes,
    Eof,
}

struct FLex {
    toks: Vec<(FTok, SourceSpan)>,
    pos: usize,
}

fn lex_formula(text: &str) -> Result<FLex, ParseError> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let bytes = text.as_bytes();
    let mut i = 0usize;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let span = SourceSpan::point(line, col, i);
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
                continue;
            }
            '(' => toks.push((FTok::LParen, span)),
            ')' => toks.push((FTok::RParen, span)),
            '.' => toks.push((FTok::Dot, span)),
            '!' => toks.push((FTok::Bang, span)),
            '&' => toks.push((FTok::Amp, span)),
            '|' => toks.push((FTok::Pipe, span)),
            '<' => {
                if bytes.get(i + 1) == Some(&b'~') {
                    toks.push((
                        FTok::Precedes,
                        SourceSpan {
                            line,
                            col,
                            start: i,
                            end: i + 2,
                        },
                    ));
                    i += 2;
                    col += 2;
                    continue;
                }
                return Err(ParseError::new("expected `<~`", span));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                let start_col = col;
                while i < bytes.len() {
                    let c = bytes[i] as char;
                    if c.is_ascii_alphanumeric() || c == '_' {
                        i += 1;
                        col += 1;
                    } else {
                        break;
                    }
                }
                let word = &text[start..i];
                toks.push((
                    FTok::Ident(word.to_string()),
                    SourceSpan {
                        line,
                        col: start_col,
                        start,
                        end: i,
                    },
                ));
                continue;
            }
            other => {
                return Err(ParseError::new(format!("unexpected character `{other}`"), span));
            }
        }
        i += 1;
        col += 1;
    }
    let end = SourceSpan::point(line, col, text.len());
    toks.push((FTok::Eof, end));
    Ok(FLex { toks, pos: 0 })
}

impl FLex {
    fn peek(&self) -> &(FTok, SourceSpan) {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> (FTok, SourceSpan) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: FTok, what: &str) -> Result<SourceSpan, ParseError> {
        let (t, span) = self.next();
        if t == tok {
            Ok(span)
        } else {
            Err(ParseError::new(format!("expected {what}"), span))
        }
    }
}

fn quantifier_keyword(tok: &FTok) -> Option<bool> {
    match tok {
        FTok::Ident(w) if w == "forall" => Some(true),
        FTok::Ident(w) if w == "exists" => Some(false),
        _ => None,
    }
}

/// Parses a hypernode-logic formula:
///
/// ```text
/// formula := ("forall"|"exists") IDENT "." formula | disj
/// disj    := conj ("|" conj)*
/// conj    := unary ("&" unary)*
/// unary   := "!" unary | "(" formula ")" | atom
///          | ("forall"|"exists") IDENT "." unary
/// atom    := IDENT "(" IDENT ")" "<~" IDENT "(" IDENT ")"
/// ```
///
/// `forall` and `|` are desugared into the core connectives.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut lex = lex_formula(text)?;
    let phi = parse_formula_level(&mut lex)?;
    let (tok, span) = lex.next();
    if tok != FTok::Eof {
        return Err(ParseError::new("unexpected trailing input", span));
    }
    Ok(phi)
}

fn parse_quantifier(lex: &mut FLex, universal: bool, body_full: bool) -> Result<Formula, ParseError> {
    let (tok, span) = lex.next();
    let var = match tok {
        FTok::Ident(w) if !matches!(w.as_str(), "forall" | "exists") => w,
        _ => return Err(ParseError::new("expected trace variable", span)),
    };
    lex.expect(FTok::Dot, "`.` after quantified variable")?;
    let body = if body_full {
        parse_formula_level(lex)?
    } else {
        parse_unary(lex)?
    };
    Ok(if universal {
        Formula::forall(var, body)
    } else {
        Formula::exists(var, body)
    })
}

fn parse_formula_level(lex: &mut FLex) -> Result<Formula, ParseError> {
    if let Some(universal) = quantifier_keyword(&lex.peek().0) {
        lex.next();
        return parse_quantifier(lex, universal, true);
    }
    parse_disj(lex)
}

fn parse_disj(lex: &mut FLex) -> Result<Formula, ParseError> {
    let mut acc = parse_conj(lex)?;
    while lex.peek().0 == FTok::Pipe {
        lex.next();
        let rhs = parse_conj(lex)?;
        acc = Formula::or(acc, rhs);
    }
    Ok(acc)
}

fn parse_conj(lex: &mut FLex) -> Result<Formula, ParseError> {
    let mut acc = parse_unary(lex)?;
    while lex.peek().0 == FTok::Amp {
        lex.next();
        let rhs = parse_unary(lex)?;
        acc = Formula::and(acc, rhs);
    }
    Ok(acc)
}

fn parse_unary(lex: &mut FLex) -> Result<Formula, ParseError> {
    match &lex.peek().0 {
        FTok::Bang => {
            lex.next();
            Ok(Formula::not(parse_unary(lex)?))
        }
        FTok::LParen => {
            lex.next();
            let inner = parse_formula_level(lex)?;
            lex.expect(FTok::RParen, "`)`")?;
            Ok(inner)
        }
        tok => {
            if let Some(universal) = quantifier_keyword(tok) {
                lex.next();
                return parse_quantifier(lex, universal, false);
            }
            parse_atom(lex)
        }
    }
}

fn parse_atom(lex: &mut FLex) -> Result<Formula, ParseError> {
    let (tok, span) = lex.next();
    let x = match tok {
        FTok::Ident(w) => w,
        _ => return Err(ParseError::new("expected program variable", span)),
    };
    lex.expect(FTok::LParen, "`(`")?;
    let (tok, span) = lex.next();
    let p = match tok {
        FTok::Ident(w) => w,
        _ => return Err(ParseError::new("expected trace variable", span)),
    };
    lex.expect(FTok::RParen, "`)`")?;
    lex.expect(FTok::Precedes, "`<~`")?;
    let (tok, span) = lex.next();
    let y = match tok {
        FTok::Ident(w) => w,
        _ => return Err(ParseError::new("expected program variable", span)),
    };
    lex.expect(FTok::LParen, "`(`")?;
    let (tok, span) = lex.next();
    let q = match tok {
        FTok::Ident(w) => w,
        _ => return Err(ParseError::new("expected trace variable", span)),
    };
    lex.expect(FTok::RParen, "`)`")?;
    Ok(Formula::atom(x, p, y, q))
}

// ---------------------------------------------------------------------------
// Line tokenizer shared by the structure formats

#[derive(Debug, Clone)]
struct Tok<'a> {
    text: &'a str,
    span: SourceSpan,
}

/// Tokens per line, whitespace separated; a token starting with `#` begins a
/// comment unless it contains `=` before it (so `x=#` survives).
fn tokenize_lines(text: &str) -> Vec<Vec<Tok<'_>>> {
    let mut lines = Vec::new();
    let mut offset = 0usize;
    for (li, raw) in text.split('\n').enumerate() {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let mut toks = Vec::new();
        let mut col = 1usize;
        let mut chars = raw.char_indices().peekable();
        'line: while let Some(&(i, c)) = chars.peek() {
            if c.is_whitespace() {
                chars.next();
                col += 1;
                continue;
            }
            let start = i;
            let start_col = col;
            let mut end = i;
            while let Some(&(j, d)) = chars.peek() {
                if d.is_whitespace() {
                    break;
                }
                end = j + d.len_utf8();
                chars.next();
                col += 1;
            }
            let word = &raw[start..end];
            // A standalone `#...` token starts a comment; the termination
            // symbol only ever occurs attached, as in `x=#`.
            if word.starts_with('#') {
                break 'line;
            }
            toks.push(Tok {
                text: word,
                span: SourceSpan {
                    line: li + 1,
                    col: start_col,
                    start: offset + start,
                    end: offset + end,
                },
            });
        }
        lines.push(toks);
        offset += raw.len() + 1;
    }
    lines
}

fn line_span(line_idx: usize) -> SourceSpan {
    SourceSpan::point(line_idx + 1, 1, 0)
}

// ---------------------------------------------------------------------------
// Kripke format

/// Everything a `.kripke` file can declare. The same format serves open
/// structures (`in`/`out`) and pointed labeled ones (`init` + `actions`).
#[derive(Debug, Clone)]
pub struct ParsedKripke {
    pub kripke: Kripke,
    pub labeling: Option<ActionLabeling>,
    pub entries: Option<BTreeSet<usize>>,
    pub exits: Option<BTreeSet<usize>>,
    pub initial: Option<usize>,
}

impl ParsedKripke {
    /// Views the parse as an open Kripke structure; requires `in`/`out`.
    pub fn to_open(&self) -> Result<crate::kripke::OpenKripke, String> {
        let entries = self.entries.clone().ok_or("file declares no `in` worlds")?;
        let exits = self.exits.clone().ok_or("file declares no `out` worlds")?;
        crate::kripke::OpenKripke::new(self.kripke.clone(), entries, exits)
            .map_err(|e| e.to_string())
    }

    /// Views the parse as a pointed labeled structure; requires `init` and
    /// `actions`.
    pub fn to_pointed(&self) -> Result<PointedLabeledKripke, String> {
        let initial = self.initial.ok_or("file declares no `init` world")?;
        let labeling = self
            .labeling
            .clone()
            .ok_or("file declares no `actions`")?;
        PointedLabeledKripke::new(self.kripke.clone(), labeling, initial).map_err(|e| e.to_string())
    }
}

pub fn parse_kripke(text: &str) -> Result<ParsedKripke, ParseError> {
    let lines = tokenize_lines(text);
    let mut domain: Option<Domain> = None;
    let mut vars: Option<VarSet> = None;
    let mut actions: Option<Vec<String>> = None;
    let mut worlds: Vec<(String, SegmentValuation)> = Vec::new();
    let mut world_ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut edges: Vec<((usize, usize), BTreeSet<Option<usize>>)> = Vec::new();
    let mut entries: Option<BTreeSet<usize>> = None;
    let mut exits: Option<BTreeSet<usize>> = None;
    let mut initial: Option<usize> = None;

    for (li, toks) in lines.iter().enumerate() {
        if toks.is_empty() {
            continue;
        }
        let head = &toks[0];
        match head.text {
            "domain" => {
                let values: Vec<&str> = toks[1..].iter().map(|t| t.text).collect();
                domain = Some(Domain::new(values).map_err(|e| ParseError::new(e.to_string(), head.span))?);
            }
            "vars" => {
                for t in &toks[1..] {
                    if !is_ident(t.text) {
                        return Err(ParseError::new("invalid variable name", t.span));
                    }
                }
                let names: Vec<&str> = toks[1..].iter().map(|t| t.text).collect();
                vars = Some(VarSet::new(names).map_err(|e| ParseError::new(e.to_string(), head.span))?);
            }
            "actions" => {
                let mut names = Vec::new();
                for t in &toks[1..] {
                    if !is_ident(t.text) || t.text == EPS_TOKEN {
                        return Err(ParseError::new(
                            format!("invalid action name `{}` (`{EPS_TOKEN}` is reserved)", t.text),
                            t.span,
                        ));
                    }
                    if names.contains(&t.text.to_string()) {
                        return Err(ParseError::new("duplicate action", t.span));
                    }
                    names.push(t.text.to_string());
                }
                actions = Some(names);
            }
            "world" => {
                let domain = domain
                    .as_ref()
                    .ok_or_else(|| ParseError::new("`domain` must precede worlds", head.span))?;
                let vars = vars
                    .as_ref()
                    .ok_or_else(|| ParseError::new("`vars` must precede worlds", head.span))?;
                let name_tok = toks
                    .get(1)
                    .ok_or_else(|| ParseError::new("world name missing", head.span))?;
                if world_ids.contains_key(name_tok.text) {
                    return Err(ParseError::new(
                        format!("duplicate world `{}`", name_tok.text),
                        name_tok.span,
                    ));
                }
                let mut assigned: BTreeMap<usize, u16> = BTreeMap::new();
                for t in &toks[2..] {
                    let (var, value) = t.text.split_once('=').ok_or_else(|| {
                        ParseError::new("expected `var=value`", t.span)
                    })?;
                    let vi = vars.index_of(var).ok_or_else(|| {
                        ParseError::new(format!("unknown variable `{var}`"), t.span)
                    })?;
                    let val = domain.index_of(value).ok_or_else(|| {
                        ParseError::new(format!("unknown value `{value}`"), t.span)
                    })?;
                    if assigned.insert(vi, val).is_some() {
                        return Err(ParseError::new(
                            format!("variable `{var}` assigned twice"),
                            t.span,
                        ));
                    }
                }
                let mut valuation = Vec::with_capacity(vars.len());
                for vi in 0..vars.len() {
                    match assigned.get(&vi) {
                        Some(&v) => valuation.push(v),
                        None => {
                            return Err(ParseError::new(
                                format!("missing valuation for variable `{}`", vars.name(vi)),
                                name_tok.span,
                            ))
                        }
                    }
                }
                world_ids.insert(name_tok.text.to_string(), worlds.len());
                worlds.push((name_tok.text.to_string(), SegmentValuation(valuation)));
            }
            "edge" => {
                let from_tok = toks
                    .get(1)
                    .ok_or_else(|| ParseError::new("edge source missing", head.span))?;
                let to_tok = toks
                    .get(2)
                    .ok_or_else(|| ParseError::new("edge target missing", head.span))?;
                let from = *world_ids.get(from_tok.text).ok_or_else(|| {
                    ParseError::new(format!("unknown world `{}`", from_tok.text), from_tok.span)
                })?;
                let to = *world_ids.get(to_tok.text).ok_or_else(|| {
                    ParseError::new(format!("unknown world `{}`", to_tok.text), to_tok.span)
                })?;
                let mut labels: BTreeSet<Option<usize>> = BTreeSet::new();
                if let Some(colon) = toks.get(3) {
                    if colon.text != ":" {
                        return Err(ParseError::new("expected `:` before labels", colon.span));
                    }
                    for t in &toks[4..] {
                        if t.text == EPS_TOKEN {
                            labels.insert(None);
                        } else {
                            let acts = actions.as_ref().ok_or_else(|| {
                                ParseError::new("`actions` must precede labeled edges", t.span)
                            })?;
                            let id = acts.iter().position(|a| a == t.text).ok_or_else(|| {
                                ParseError::new(format!("unknown action `{}`", t.text), t.span)
                            })?;
                            labels.insert(Some(id));
                        }
                    }
                    if labels.is_empty() {
                        return Err(ParseError::new("empty label list", colon.span));
                    }
                } else {
                    labels.insert(None);
                }
                edges.push(((from, to), labels));
            }
            "init" => {
                let t = toks
                    .get(1)
                    .ok_or_else(|| ParseError::new("init world missing", head.span))?;
                let id = *world_ids.get(t.text).ok_or_else(|| {
                    ParseError::new(format!("unknown world `{}`", t.text), t.span)
                })?;
                if initial.is_some() {
                    return Err(ParseError::new("multiple `init` lines", t.span));
                }
                initial = Some(id);
            }
            "in" | "out" => {
                let mut set = BTreeSet::new();
                for t in &toks[1..] {
                    let id = *world_ids.get(t.text).ok_or_else(|| {
                        ParseError::new(format!("unknown world `{}`", t.text), t.span)
                    })?;
                    set.insert(id);
                }
                let slot = if head.text == "in" { &mut entries } else { &mut exits };
                match slot {
                    Some(existing) => existing.extend(set),
                    None => *slot = Some(set),
                }
            }
            other => {
                return Err(ParseError::new(
                    format!("unknown directive `{other}`"),
                    head.span,
                ));
            }
        }
        let _ = li;
    }

    let domain = domain.ok_or_else(|| ParseError::new("missing `domain` line", line_span(0)))?;
    let vars = vars.ok_or_else(|| ParseError::new("missing `vars` line", line_span(0)))?;
    let mut kripke = Kripke::new(vars, domain);
    for (name, valuation) in worlds {
        kripke.add_world(name, valuation);
    }
    let mut labeling = actions.map(ActionLabeling::new);
    let mut merged: BTreeMap<(usize, usize), BTreeSet<Option<usize>>> = BTreeMap::new();
    for (edge, labels) in edges {
        kripke.add_edge(edge.0, edge.1);
        merged.entry(edge).or_default().extend(labels);
    }
    if let Some(lab) = labeling.as_mut() {
        for (edge, labels) in merged {
            lab.set_labels(edge, labels);
        }
    }
    Ok(ParsedKripke {
        kripke,
        labeling,
        entries,
        exits,
        initial,
    })
}

pub fn serialize_kripke(parsed: &ParsedKripke) -> String {
    let k = &parsed.kripke;
    let mut out = String::new();
    out.push_str("domain");
    for v in k.domain().values() {
        out.push(' ');
        out.push_str(v);
    }
    out.push('\n');
    out.push_str("vars");
    for v in k.vars().names() {
        out.push(' ');
        out.push_str(v);
    }
    out.push('\n');
    if let Some(lab) = &parsed.labeling {
        out.push_str("actions");
        for a in lab.actions() {
            out.push(' ');
            out.push_str(a);
        }
        out.push('\n');
    }
    for w in 0..k.world_count() {
        out.push_str(&format!("world {}", k.world_name(w)));
        for (i, &v) in k.valuation(w).0.iter().enumerate() {
            out.push_str(&format!(" {}={}", k.vars().name(i), k.domain().value(v)));
        }
        out.push('\n');
    }
    for &(f, t) in k.delta() {
        out.push_str(&format!("edge {} {}", k.world_name(f), k.world_name(t)));
        if let Some(lab) = &parsed.labeling {
            if let Some(labels) = lab.labels((f, t)) {
                out.push_str(" :");
                for l in labels {
                    out.push(' ');
                    match l {
                        None => out.push_str(EPS_TOKEN),
                        Some(a) => out.push_str(&lab.actions()[*a]),
                    }
                }
            }
        }
        out.push('\n');
    }
    if let Some(init) = parsed.initial {
        out.push_str(&format!("init {}\n", k.world_name(init)));
    }
    if let Some(entries) = &parsed.entries {
        out.push_str("in");
        for &w in entries {
            out.push(' ');
            out.push_str(k.world_name(w));
        }
        out.push('\n');
    }
    if let Some(exits) = &parsed.exits {
        out.push_str("out");
        for &w in exits {
            out.push(' ');
            out.push_str(k.world_name(w));
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// HNA format

pub fn parse_hna(text: &str) -> Result<Hna, ParseError> {
    // Nodes need quoted formulas, so this format gets raw-line handling.
    let mut nodes: Vec<HnaNode> = Vec::new();
    let mut node_ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut initial: Option<usize> = None;
    let mut edges: Vec<(usize, usize, String, SourceSpan)> = Vec::new();
    let mut offset = 0usize;

    for (li, raw_full) in text.split('\n').enumerate() {
        let raw_full = raw_full.strip_suffix('\r').unwrap_or(raw_full);
        let line_no = li + 1;
        let raw = raw_full.trim();
        let indent = raw_full.len() - raw_full.trim_start().len();
        if raw.is_empty() || raw.starts_with('#') {
            offset += raw_full.len() + 1;
            continue;
        }
        if let Some(rest) = raw.strip_prefix("node ") {
            let quote = rest.find('"').ok_or_else(|| {
                ParseError::new(
                    "node label must be a quoted formula",
                    SourceSpan::point(line_no, indent + 6, offset),
                )
            })?;
            let header: Vec<&str> = rest[..quote].split_whitespace().collect();
            let (name, is_init) = match header.as_slice() {
                [name] => (*name, false),
                [name, "init"] => (*name, true),
                _ => {
                    return Err(ParseError::new(
                        "expected `node NAME [init] \"FORMULA\"`",
                        SourceSpan::point(line_no, indent + 6, offset),
                    ))
                }
            };
            if !is_ident(name) {
                return Err(ParseError::new(
                    format!("invalid node name `{name}`"),
                    SourceSpan::point(line_no, indent + 6, offset),
                ));
            }
            if node_ids.contains_key(name) {
                return Err(ParseError::new(
                    format!("duplicate node `{name}`"),
                    SourceSpan::point(line_no, indent + 6, offset),
                ));
            }
            let body = &rest[quote + 1..];
            let close = body.rfind('"').ok_or_else(|| {
                ParseError::new(
                    "unterminated formula quote",
                    SourceSpan::point(line_no, indent + 6 + quote, offset),
                )
            })?;
            let label_text = &body[..close];
            let formula = parse_formula(label_text).map_err(|e| {
                // Re-anchor the inner span onto this line.
                let col = indent + 6 + quote + 1 + e.span.col;
                ParseError::new(e.message, SourceSpan::point(line_no, col, offset))
            })?;
            if is_init {
                if initial.is_some() {
                    return Err(ParseError::new(
                        "multiple `init` nodes",
                        SourceSpan::point(line_no, indent + 6, offset),
                    ));
                }
                initial = Some(nodes.len());
            }
            node_ids.insert(name.to_string(), nodes.len());
            nodes.push(HnaNode {
                name: name.to_string(),
                formula,
                label_text: label_text.to_string(),
            });
        } else if let Some(rest) = raw.strip_prefix("edge ") {
            let span = SourceSpan::point(line_no, indent + 6, offset);
            let (pair, labels) = rest
                .split_once(':')
                .ok_or_else(|| ParseError::new("expected `edge N1 N2 : actions`", span))?;
            let names: Vec<&str> = pair.split_whitespace().collect();
            let [from, to] = names.as_slice() else {
                return Err(ParseError::new("expected two node names", span));
            };
            let from = *node_ids
                .get(*from)
                .ok_or_else(|| ParseError::new(format!("unknown node `{from}`"), span))?;
            let to = *node_ids
                .get(*to)
                .ok_or_else(|| ParseError::new(format!("unknown node `{to}`"), span))?;
            let mut any = false;
            for action in labels.split_whitespace() {
                if !is_ident(action) {
                    return Err(ParseError::new(format!("invalid action `{action}`"), span));
                }
                edges.push((from, to, action.to_string(), span));
                any = true;
            }
            if !any {
                return Err(ParseError::new("edge lists no actions", span));
            }
        } else {
            return Err(ParseError::new(
                "expected `node` or `edge`",
                SourceSpan::point(line_no, indent + 1, offset),
            ));
        }
        offset += raw_full.len() + 1;
    }

    if nodes.is_empty() {
        return Err(ParseError::new("no nodes declared", line_span(0)));
    }
    let initial =
        initial.ok_or_else(|| ParseError::new("no node is marked `init`", line_span(0)))?;
    let mut actions: Vec<String> = edges.iter().map(|(_, _, a, _)| a.clone()).collect();
    actions.sort();
    actions.dedup();
    let mut hna = Hna::new(actions.clone(), nodes, initial)
        .map_err(|e| ParseError::new(e.to_string(), line_span(0)))?;
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (from, to, action, span) in edges {
        let aid = actions.iter().position(|a| a == &action).expect("collected");
        if let Some(&prev) = seen.get(&(from, aid)) {
            if prev != to {
                return Err(ParseError::new(
                    format!("node has two targets for action `{action}`"),
                    span,
                ));
            }
        }
        seen.insert((from, aid), to);
        hna.set_transition(from, aid, to);
    }
    Ok(hna)
}

pub fn serialize_hna(hna: &Hna) -> String {
    let mut out = String::new();
    for (i, node) in hna.nodes().iter().enumerate() {
        let init = if i == hna.initial() { " init" } else { "" };
        out.push_str(&format!("node {}{} \"{}\"\n", node.name, init, node.label_text));
    }
    let mut grouped: BTreeMap<(usize, usize), Vec<&str>> = BTreeMap::new();
    for from in 0..hna.nodes().len() {
        for (ai, action) in hna.actions().iter().enumerate() {
            if let Some(to) = hna.transition(from, ai) {
                grouped.entry((from, to)).or_default().push(action);
            }
        }
    }
    for ((from, to), actions) in grouped {
        out.push_str(&format!(
            "edge {} {} : {}\n",
            hna.node(from).name,
            hna.node(to).name,
            actions.join(" ")
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// SFA format

pub fn parse_sfa(text: &str) -> Result<Sfa, ParseError> {
    let lines = tokenize_lines(text);
    let mut domain: Option<Domain> = None;
    let mut vars: Option<VarSet> = None;
    let mut sfa: Option<Sfa> = None;

    for toks in lines.iter() {
        if toks.is_empty() {
            continue;
        }
        let head = &toks[0];
        match head.text {
            "domain" => {
                let values: Vec<&str> = toks[1..].iter().map(|t| t.text).collect();
                domain =
                    Some(Domain::new(values).map_err(|e| ParseError::new(e.to_string(), head.span))?);
            }
            "vars" => {
                let names: Vec<&str> = toks[1..].iter().map(|t| t.text).collect();
                vars =
                    Some(VarSet::new(names).map_err(|e| ParseError::new(e.to_string(), head.span))?);
            }
            "state" => {
                let (Some(domain), Some(vars)) = (domain.as_ref(), vars.as_ref()) else {
                    return Err(ParseError::new(
                        "`domain` and `vars` must precede states",
                        head.span,
                    ));
                };
                let a = sfa.get_or_insert_with(|| Sfa::new(vars.clone(), domain.clone()));
                let name_tok = toks
                    .get(1)
                    .ok_or_else(|| ParseError::new("state name missing", head.span))?;
                let id = a.add_state(name_tok.text).map_err(|e| {
                    ParseError::new(e.to_string(), name_tok.span)
                })?;
                for t in &toks[2..] {
                    match t.text {
                        "init" => a.mark_initial(id),
                        "final" => a.mark_final(id),
                        other => {
                            return Err(ParseError::new(
                                format!("unknown state flag `{other}`"),
                                t.span,
                            ))
                        }
                    }
                }
            }
            "trans" => {
                let a = sfa
                    .as_mut()
                    .ok_or_else(|| ParseError::new("`trans` before any state", head.span))?;
                let src_tok = toks
                    .get(1)
                    .ok_or_else(|| ParseError::new("source state missing", head.span))?;
                let dst_tok = toks
                    .get(2)
                    .ok_or_else(|| ParseError::new("target state missing", head.span))?;
                let src = a.state_id(src_tok.text).ok_or_else(|| {
                    ParseError::new(format!("unknown state `{}`", src_tok.text), src_tok.span)
                })?;
                let dst = a.state_id(dst_tok.text).ok_or_else(|| {
                    ParseError::new(format!("unknown state `{}`", dst_tok.text), dst_tok.span)
                })?;
                let colon = toks
                    .get(3)
                    .ok_or_else(|| ParseError::new("expected `:`", head.span))?;
                if colon.text != ":" {
                    return Err(ParseError::new("expected `:`", colon.span));
                }
                let mut assigned: BTreeMap<usize, Sym> = BTreeMap::new();
                for t in &toks[4..] {
                    let (var, value) = t
                        .text
                        .split_once('=')
                        .ok_or_else(|| ParseError::new("expected `var=value`", t.span))?;
                    let vi = a.vars().index_of(var).ok_or_else(|| {
                        ParseError::new(format!("unknown variable `{var}`"), t.span)
                    })?;
                    let sym = if value == TERM_TOKEN {
                        Sym::Term
                    } else {
                        Sym::Val(a.domain().index_of(value).ok_or_else(|| {
                            ParseError::new(format!("unknown value `{value}`"), t.span)
                        })?)
                    };
                    if assigned.insert(vi, sym).is_some() {
                        return Err(ParseError::new(
                            format!("variable `{var}` assigned twice"),
                            t.span,
                        ));
                    }
                }
                let mut syms = Vec::with_capacity(a.vars().len());
                for vi in 0..a.vars().len() {
                    match assigned.get(&vi) {
                        Some(&s) => syms.push(s),
                        None => {
                            return Err(ParseError::new(
                                format!("missing coordinate `{}`", a.vars().name(vi)),
                                colon.span,
                            ))
                        }
                    }
                }
                let letter = Letter::new(syms)
                    .map_err(|e| ParseError::new(e.to_string(), colon.span))?;
                a.add_transition(src, letter, dst)
                    .map_err(|e| ParseError::new(e.to_string(), colon.span))?;
            }
            other => {
                return Err(ParseError::new(
                    format!("unknown directive `{other}`"),
                    head.span,
                ));
            }
        }
    }
    match (sfa, vars, domain) {
        (Some(a), _, _) => Ok(a),
        (None, Some(vars), Some(domain)) => Ok(Sfa::new(vars, domain)),
        _ => Err(ParseError::new("missing `domain`/`vars`", line_span(0))),
    }
}

pub fn serialize_sfa(a: &Sfa) -> String {
    let mut out = String::new();
    out.push_str("domain");
    for v in a.domain().values() {
        out.push(' ');
        out.push_str(v);
    }
    out.push('\n');
    out.push_str("vars");
    for v in a.vars().names() {
        out.push(' ');
        out.push_str(v);
    }
    out.push('\n');
    for q in 0..a.state_count() {
        out.push_str(&format!("state {}", a.state_name(q)));
        if a.initials().contains(&q) {
            out.push_str(" init");
        }
        if a.finals().contains(&q) {
            out.push_str(" final");
        }
        out.push('\n');
    }
    for (src, letter, dst) in a.transitions() {
        out.push_str(&format!(
            "trans {} {} : {}\n",
            a.state_name(src),
            a.state_name(dst),
            letter.display(a.vars(), a.domain())
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Segment syntax used by the CLI (`x=010 y=01`)

pub fn parse_segment(
    text: &str,
    vars: &VarSet,
    domain: &Domain,
) -> Result<UnzippedSegment, String> {
    let mut strings: BTreeMap<usize, Vec<u16>> = BTreeMap::new();
    for part in text.split_whitespace() {
        let (var, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected `var=values`, got `{part}`"))?;
        let vi = vars
            .index_of(var)
            .ok_or_else(|| format!("unknown variable `{var}`"))?;
        let mut s = Vec::new();
        if !value.is_empty() {
            if value.contains(',') || !domain.single_char() {
                for tok in value.split(',') {
                    s.push(
                        domain
                            .index_of(tok)
                            .ok_or_else(|| format!("unknown value `{tok}`"))?,
                    );
                }
            } else {
                for c in value.chars() {
                    s.push(
                        domain
                            .index_of(&c.to_string())
                            .ok_or_else(|| format!("unknown value `{c}`"))?,
                    );
                }
            }
        }
        if strings.insert(vi, s).is_some() {
            return Err(format!("variable `{var}` given twice"));
        }
    }
    let mut out = Vec::with_capacity(vars.len());
    for vi in 0..vars.len() {
        out.push(strings.remove(&vi).unwrap_or_default());
    }
    Ok(UnzippedSegment::new(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_od_y() {
        let phi = parse_formula("forall p. forall q. (y(p) <~ y(q) | y(q) <~ y(p))").unwrap();
        let expected = Formula::forall(
            "p",
            Formula::forall(
                "q",
                Formula::or(Formula::atom("y", "p", "y", "q"), Formula::atom("y", "q", "y", "p")),
            ),
        );
        assert_eq!(phi, expected);
    }

    #[test]
    fn formula_exists() {
        let phi = parse_formula("exists p. x(p) <~ x(p)").unwrap();
        assert_eq!(phi, Formula::exists("p", Formula::atom("x", "p", "x", "p")));
    }

    #[test]
    fn formula_error_span() {
        let err = parse_formula("x(p <~").unwrap_err();
        assert_eq!(err.span.line, 1);
        assert_eq!(err.span.col, 5); // at `<~`
    }

    #[test]
    fn formula_precedence() {
        // ! binds the whole atom; & binds tighter than |.
        let phi = parse_formula("!a(p) <~ a(p) & b(p) <~ b(p) | c(p) <~ c(p)").unwrap();
        let a = Formula::atom("a", "p", "a", "p");
        let b = Formula::atom("b", "p", "b", "p");
        let c = Formula::atom("c", "p", "c", "p");
        assert_eq!(phi, Formula::or(Formula::and(Formula::not(a), b), c));

        let ok = parse_formula("!(a(p) <~ a(p)) & b(p) <~ b(p)").unwrap();
        assert_eq!(
            ok,
            Formula::and(
                Formula::not(Formula::atom("a", "p", "a", "p")),
                Formula::atom("b", "p", "b", "p")
            )
        );
    }

    #[test]
    fn kripke_minimal() {
        let text = "domain 0 1\nvars x\nworld w0 x=0\nin w0\nout w0\n";
        let parsed = parse_kripke(text).unwrap();
        assert!(parsed.to_open().is_ok());
        assert!(parsed.to_pointed().is_err());
    }

    #[test]
    fn kripke_unknown_world_named() {
        let text = "domain 0 1\nvars x\nworld w0 x=0\nedge w0 w9\n";
        let err = parse_kripke(text).unwrap_err();
        assert!(err.message.contains("w9"));
        assert_eq!(err.span.line, 4);
    }

    #[test]
    fn kripke_missing_coordinate() {
        let text = "domain 0 1\nvars x y\nworld w0 x=0\n";
        let err = parse_kripke(text).unwrap_err();
        assert!(err.message.contains("missing valuation"));
    }

    #[test]
    fn kripke_comments_and_crlf() {
        let text = "# header\r\ndomain 0 1\r\nvars x\r\nworld w0 x=0 # trailing\r\nin w0\r\nout w0\r\n";
        assert!(parse_kripke(text).is_ok());
    }

    #[test]
    fn hna_roundtrip_and_errors() {
        let text = "node a init \"forall p. x(p) <~ x(p)\"\nnode b \"exists p. x(p) <~ x(p)\"\nedge a b : go\nedge b b : go\n";
        let hna = parse_hna(text).unwrap();
        assert_eq!(hna.nodes().len(), 2);
        assert_eq!(hna.actions(), ["go"]);
        let round = parse_hna(&serialize_hna(&hna)).unwrap();
        assert_eq!(round, hna);

        let double_init = "node a init \"x(p) <~ x(p)\"\nnode b init \"x(p) <~ x(p)\"\n";
        assert!(parse_hna(double_init).unwrap_err().message.contains("init"));
    }

    #[test]
    fn sfa_roundtrip() {
        let text = "domain 0 1\nvars x y\nstate a init\nstate b final\ntrans a b : x=0 y=#\n";
        let a = parse_sfa(text).unwrap();
        let round = parse_sfa(&serialize_sfa(&a)).unwrap();
        assert_eq!(a, round);
    }

    #[test]
    fn sfa_all_term_letter_rejected() {
        let text = "domain 0 1\nvars x y\nstate q init final\ntrans q q : x=# y=#\n";
        let err = parse_sfa(text).unwrap_err();
        assert!(err.message.contains("all-#") || err.message.contains("excluded"));
    }

    #[test]
    fn segment_syntax() {
        let vars = VarSet::new(["x", "y"]).unwrap();
        let domain = Domain::new(["0", "1"]).unwrap();
        let seg = parse_segment("x=010 y=01", &vars, &domain).unwrap();
        assert_eq!(seg.strings, vec![vec![0, 1, 0], vec![0, 1]]);
        let empty = parse_segment("x= y=01", &vars, &domain).unwrap();
        assert_eq!(empty.strings[0], Vec::<u16>::new());
    }
}

//! SMT-LIB2 scripts.
//!
//! Finite sorts become enumeration datatypes, variables constants with
//! their domain as an unnamed assertion, and hard assertions named ones.
//! Soft assertions are written as comments in the extension syntax
//! `;@assert-soft <formula> :id <name>`, which solvers ignore.

use std::fmt::Write;

use crate::logic::{AssertionSet, Domain, Formula, Term};

const RESERVED: &[&str] = &[
    "!",
    "_",
    "as",
    "and",
    "or",
    "not",
    "ite",
    "let",
    "forall",
    "exists",
    "match",
    "par",
    "distinct",
    "true",
    "false",
    "Int",
    "Bool",
    "Real",
    "assert",
    "check-sat",
    "declare-const",
    "declare-fun",
    "declare-datatypes",
    "declare-sort",
    "define-fun",
    "get-value",
    "get-model",
    "BINARY",
    "DECIMAL",
    "HEXADECIMAL",
    "NUMERAL",
    "STRING",
    "xor",
    "div",
    "mod",
    "abs",
];

/// Quotes a symbol when it is reserved or not a simple symbol.
pub(crate) fn symbol(s: &str) -> String {
    let simple = !s.is_empty()
        && !s.starts_with(|c: char| c.is_ascii_digit())
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if simple && !RESERVED.contains(&s) {
        s.to_string()
    } else {
        format!("|{}|", s.replace(['|', '\\'], "_"))
    }
}

pub(crate) fn int(n: i64) -> String {
    if n < 0 {
        format!("(- {})", n.unsigned_abs())
    } else {
        n.to_string()
    }
}

pub(crate) fn term(t: &Term) -> String {
    match t {
        Term::Int(n) => int(*n),
        Term::Var(v) => symbol(v),
        Term::Member { name, .. } => symbol(name),
        Term::App { func, arg } => format!("({} {})", symbol(func), term(arg)),
        Term::Add(a, b) => format!("(+ {} {})", term(a), term(b)),
        Term::Sub(a, b) => format!("(- {} {})", term(a), term(b)),
        Term::Scale(k, a) => format!("(* {} {})", int(*k), term(a)),
        Term::Ite(c, a, b) => format!("(ite {} {} {})", formula(c), term(a), term(b)),
    }
}

fn nary(op: &str, unit: bool, parts: &[Formula]) -> String {
    match parts {
        [] => unit.to_string(),
        [only] => formula(only),
        _ => {
            let inner: Vec<String> = parts.iter().map(formula).collect();
            format!("({op} {})", inner.join(" "))
        }
    }
}

pub(crate) fn formula(f: &Formula) -> String {
    match f {
        Formula::Const(b) => b.to_string(),
        Formula::BoolVar(v) => symbol(v),
        Formula::Eq(a, b) => format!("(= {} {})", term(a), term(b)),
        Formula::Cmp(op, a, b) => format!("({} {} {})", op.symbol(), term(a), term(b)),
        Formula::Not(g) => format!("(not {})", formula(g)),
        Formula::And(gs) => nary("and", true, gs),
        Formula::Or(gs) => nary("or", false, gs),
        Formula::Implies(a, b) => format!("(=> {} {})", formula(a), formula(b)),
    }
}

/// Declarations, domains, assertions and `(check-sat)`.
pub(crate) fn script_prefix(s: &AssertionSet) -> String {
    let mut out = String::new();
    out.push_str("(set-option :produce-unsat-cores true)\n");
    out.push_str("; declarations\n");
    for (sort, members) in &s.sorts {
        let ctors: Vec<String> = members.iter().map(|m| format!("({})", symbol(m))).collect();
        let _ = writeln!(
            out,
            "(declare-datatypes (({} 0)) (({})))",
            symbol(sort),
            ctors.join(" ")
        );
    }
    for (name, f) in &s.functions {
        let _ = writeln!(
            out,
            "(declare-fun {} ({}) {})",
            symbol(name),
            symbol(&f.domain),
            symbol(&f.codomain)
        );
    }
    for (name, decl) in &s.vars {
        let sort = match &decl.domain {
            Domain::Day { .. } | Domain::Range { .. } => "Int".to_string(),
            Domain::Bool => "Bool".to_string(),
            Domain::Finite(s) => symbol(s),
        };
        let _ = writeln!(out, "(declare-const {} {sort})", symbol(name));
    }
    for (name, decl) in &s.vars {
        if let Some((lo, hi)) = decl.domain.int_bounds() {
            let v = symbol(name);
            let _ = writeln!(
                out,
                "(assert (and (>= {v} {}) (<= {v} {})))",
                int(lo),
                int(hi)
            );
        }
    }
    for a in &s.hard {
        let _ = writeln!(
            out,
            "(assert (! {} :named {}))",
            formula(&a.formula),
            symbol(&a.name)
        );
    }
    for a in &s.soft {
        let _ = writeln!(out, "; soft {}", a.name);
        let _ = writeln!(
            out,
            ";@assert-soft {} :id {}",
            formula(&a.formula),
            symbol(&a.name)
        );
    }
    out.push_str("(check-sat)\n");
    out
}

/// A complete script for the set, asking for a model and an unsat core.
pub fn emit_smtlib(s: &AssertionSet) -> String {
    let mut out = script_prefix(s);
    if !s.vars.is_empty() || !s.functions.is_empty() {
        out.push_str("(get-model)\n");
    }
    if !s.hard.is_empty() {
        out.push_str("(get-unsat-core)\n");
    }
    out
}

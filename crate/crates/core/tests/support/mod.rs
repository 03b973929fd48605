//! Shared test helpers: a brute-force reference decision procedure and
//! generators for random contracts and assertion sets.
#![allow(dead_code)]

use contractcheck_core::logic::{Domain, FunDecl, VarDecl};
use contractcheck_core::{
    analysis_queries, build_model, encode_limitation, maximize_soft, run_analysis, solve_bounded,
    Analysis, Assertion, AssertionSet, Assignment, AttrValue, Block, BlockDocument, BlockKind,
    Builtin, Formula, QueryKind, SolveResult, SolverConfig, Term, Value,
};
use proptest::prelude::*;

// ---------------------------------------------------------------------------
// Reference semantics, written separately from the library evaluator.

#[derive(Debug, PartialEq)]
enum V {
    I(i128),
    B(bool),
    M(String),
}

fn term(t: &Term, a: &Assignment) -> V {
    match t {
        Term::Int(n) => V::I(*n as i128),
        Term::Var(v) => match &a.vars[v] {
            Value::Int(n) => V::I(*n as i128),
            Value::Bool(b) => V::B(*b),
            Value::Member(m) => V::M(m.clone()),
        },
        Term::Member { name, .. } => V::M(name.clone()),
        Term::App { func, arg } => {
            let V::M(arg) = term(arg, a) else {
                panic!("non-member argument")
            };
            V::M(a.functions[func][&arg].clone())
        }
        Term::Add(x, y) => V::I(num(x, a) + num(y, a)),
        Term::Sub(x, y) => V::I(num(x, a) - num(y, a)),
        Term::Scale(k, x) => V::I(*k as i128 * num(x, a)),
        Term::Ite(c, x, y) => term(if truth(c, a) { x } else { y }, a),
    }
}

fn num(t: &Term, a: &Assignment) -> i128 {
    match term(t, a) {
        V::I(n) => n,
        other => panic!("expected integer, got {other:?}"),
    }
}

/// Truth of `f` under a total assignment; panics on ill-sorted input.
pub fn truth(f: &Formula, a: &Assignment) -> bool {
    match f {
        Formula::Const(b) => *b,
        Formula::BoolVar(v) => a.vars[v] == Value::Bool(true),
        Formula::Eq(x, y) => term(x, a) == term(y, a),
        Formula::Cmp(op, x, y) => op.holds(num(x, a), num(y, a)),
        Formula::Not(g) => !truth(g, a),
        Formula::And(gs) => gs.iter().all(|g| truth(g, a)),
        Formula::Or(gs) => gs.iter().any(|g| truth(g, a)),
        Formula::Implies(x, y) => !truth(x, a) || truth(y, a),
    }
}

// ---------------------------------------------------------------------------
// Brute-force enumeration over the full declared ranges.

#[derive(Clone)]
enum Sym {
    Var(String, Vec<Value>),
    Entry(String, String, Vec<String>),
}

struct Enumerator<'a> {
    set: &'a AssertionSet,
    syms: Vec<Sym>,
    /// Hard assertions grouped by the depth at which they become fully bound.
    due: Vec<Vec<usize>>,
    a: Assignment,
    best: Option<usize>,
    want_max: bool,
}

fn values(set: &AssertionSet, d: &VarDecl) -> Vec<Value> {
    match &d.domain {
        Domain::Day { horizon } => (-1..=*horizon).map(Value::Int).collect(),
        Domain::Range { lo, hi } => (*lo..=*hi).map(Value::Int).collect(),
        Domain::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Domain::Finite(s) => set.sorts[s].iter().cloned().map(Value::Member).collect(),
    }
}

impl<'a> Enumerator<'a> {
    fn new(set: &'a AssertionSet, want_max: bool) -> Self {
        let mut syms = Vec::new();
        for (f, FunDecl { domain, codomain }) in &set.functions {
            for arg in &set.sorts[domain] {
                syms.push(Sym::Entry(
                    f.clone(),
                    arg.clone(),
                    set.sorts[codomain].clone(),
                ));
            }
        }
        for (v, d) in &set.vars {
            syms.push(Sym::Var(v.clone(), values(set, d)));
        }
        let mut due = vec![Vec::new(); syms.len() + 1];
        for (i, h) in set.hard.iter().enumerate() {
            let vars = h.formula.vars();
            let funcs = h.formula.functions();
            let depth = syms
                .iter()
                .enumerate()
                .filter(|(_, s)| match s {
                    Sym::Var(v, _) => vars.contains(v),
                    Sym::Entry(f, _, _) => funcs.contains(f),
                })
                .map(|(i, _)| i + 1)
                .max()
                .unwrap_or(0);
            due[depth].push(i);
        }
        Enumerator {
            set,
            syms,
            due,
            a: Assignment::default(),
            best: None,
            want_max,
        }
    }

    fn holds(&self, depth: usize) -> bool {
        self.due[depth]
            .iter()
            .all(|&i| truth(&self.set.hard[i].formula, &self.a))
    }

    /// Returns true to stop.
    fn go(&mut self, depth: usize) -> bool {
        if !self.holds(depth) {
            return false;
        }
        if depth == self.syms.len() {
            let n = self
                .set
                .soft
                .iter()
                .filter(|s| truth(&s.formula, &self.a))
                .count();
            self.best = Some(self.best.map_or(n, |b| b.max(n)));
            return !self.want_max || n == self.set.soft.len();
        }
        match self.syms[depth].clone() {
            Sym::Var(v, vals) => {
                for x in vals {
                    self.a.vars.insert(v.clone(), x);
                    if self.go(depth + 1) {
                        return true;
                    }
                }
            }
            Sym::Entry(f, arg, vals) => {
                for x in vals {
                    self.a.set_entry(&f, &arg, &x);
                    if self.go(depth + 1) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Satisfiability of the hard assertions by exhaustive enumeration.
pub fn oracle_sat(set: &AssertionSet) -> bool {
    let mut e = Enumerator::new(set, false);
    e.go(0);
    e.best.is_some()
}

/// Largest number of soft assertions satisfiable together with the hard
/// ones, or `None` when the hard ones are unsatisfiable.
pub fn oracle_max_soft(set: &AssertionSet) -> Option<usize> {
    let mut e = Enumerator::new(set, true);
    e.go(0);
    e.best
}

/// The named hard assertions are unsatisfiable and dropping any one of them
/// makes them satisfiable.
pub fn oracle_minimal_core(set: &AssertionSet, core: &[String]) -> bool {
    if oracle_sat(&set.restrict_hard(core)) {
        return false;
    }
    (0..core.len()).all(|i| {
        let mut fewer = core.to_vec();
        fewer.remove(i);
        oracle_sat(&set.restrict_hard(&fewer))
    })
}

pub fn model_satisfies_hard(set: &AssertionSet, model: &Assignment) -> bool {
    set.hard.iter().all(|a| truth(&a.formula, model))
}

/// Drops the variables and functions no assertion mentions. Every declared
/// domain is non-empty, so satisfiability is unchanged.
pub fn project(set: &AssertionSet) -> AssertionSet {
    let mut vars = Vec::new();
    let mut funcs = Vec::new();
    for a in set.hard.iter().chain(&set.soft) {
        vars.extend(a.formula.vars());
        funcs.extend(a.formula.functions());
    }
    let mut out = set.clone();
    out.vars.retain(|v, _| vars.contains(v));
    out.functions.retain(|f, _| funcs.contains(f));
    out
}

// ---------------------------------------------------------------------------
// Random contracts.

/// Consumes a vector of random words as a sequence of bounded choices, so
/// generated values shrink along with the words.
pub struct Picks {
    words: Vec<u32>,
    at: usize,
}

impl Picks {
    pub fn new(words: Vec<u32>) -> Self {
        Picks { words, at: 0 }
    }

    /// Uniform-ish choice in `lo..=hi`.
    pub fn int(&mut self, lo: i64, hi: i64) -> i64 {
        let w = self.words.get(self.at).copied().unwrap_or(0);
        self.at += 1;
        lo + (w as i64) % (hi - lo + 1)
    }

    pub fn flip(&mut self) -> bool {
        self.int(0, 1) == 1
    }

    pub fn of<'b, T>(&mut self, items: &'b [T]) -> &'b T {
        &items[self.int(0, items.len() as i64 - 1) as usize]
    }
}

fn ident(s: &str) -> AttrValue {
    AttrValue::Ident(s.to_string())
}

fn int(n: i64) -> AttrValue {
    AttrValue::Int(n)
}

/// A valid contract with at most 3 parties, 2 assets, 4 claims and a
/// horizon of at most 10 days.
pub fn random_contract(p: &mut Picks) -> BlockDocument {
    let mut blocks = Vec::new();
    let n_parties = p.int(2, 3);
    let parties: Vec<String> = (0..n_parties).map(|i| format!("P{i}")).collect();
    for (i, id) in parties.iter().enumerate() {
        let role = ["Seller", "Purchaser", "Third"][i];
        blocks.push(Block::new(BlockKind::Party, id.as_str()).with("role", ident(role)));
    }
    let n_assets = p.int(1, 2);
    let mut cash = Vec::new();
    let mut assets = Vec::new();
    for i in 0..n_assets {
        let id = format!("A{i}");
        let block = if p.flip() {
            cash.push(id.clone());
            Block::new(BlockKind::Asset, id.as_str())
                .with("type", ident("Cash"))
                .with("amount", int(p.int(0, 100)))
        } else {
            Block::new(BlockKind::Asset, id.as_str()).with("type", ident("Shares"))
        };
        assets.push(id);
        blocks.push(block);
    }
    for (i, a) in assets.iter().enumerate() {
        if p.flip() {
            blocks.push(
                Block::new(BlockKind::PropertyFact, format!("F{i}"))
                    .with("asset", ident(a))
                    .with("owner", ident(p.of(&parties))),
            );
        }
    }
    let horizon = p.int(1, 10);
    let closing = p.int(0, horizon);
    blocks.push(
        Block::new(BlockKind::ContractDates, "Dates")
            .with("closing", int(closing))
            .with("horizon", int(horizon)),
    );

    let mut budget = p.int(1, 4);
    let mut n = 0;
    let mut fresh = |prefix: &str| {
        n += 1;
        format!("{prefix}{n}")
    };
    while budget > 0 {
        let kind = p.int(0, 2);
        let debtor = p.of(&parties).clone();
        let creditor = p.of(&parties).clone();
        if kind == 2 && budget >= 2 {
            let id = fresh("W");
            let mut cons = Vec::new();
            let with_perf = p.flip() || budget == 2;
            let with_comp = budget >= 3 && (!with_perf || p.flip());
            let window = p.int(0, 4);
            let mut extra = Vec::new();
            if with_perf {
                let c = fresh("N");
                extra.push(
                    Block::new(BlockKind::PerformanceClaim, c.as_str())
                        .with("primary", ident(&id))
                        .with("perform_window", int(window)),
                );
                cons.push(c);
            }
            if with_comp {
                let c = fresh("S");
                extra.push(
                    Block::new(BlockKind::CompensationClaim, c.as_str())
                        .with("primary", ident(&id))
                        .with("perform_window", int(window))
                        .with("pay_window", int(p.int(0, 3)))
                        .with("rate", int(p.int(0, 2)))
                        .with("unit", int(p.int(1, 2)))
                        .with("minimum", int(p.int(0, 2))),
                );
                cons.push(c);
            }
            blocks.push(
                Block::new(BlockKind::WarrantyClaim, id.as_str())
                    .with("debtor", ident(&debtor))
                    .with("creditor", ident(&creditor))
                    .with("measure", ident(&format!("m{id}")))
                    .with("threshold", int(p.int(0, 3)))
                    .with("assert_window", int(p.int(0, 3)))
                    .with("limitation", int(p.int(0, 6)))
                    .with(
                        "consequences",
                        match cons.as_slice() {
                            [one] => ident(one),
                            _ => AttrValue::List(cons.clone()),
                        },
                    ),
            );
            blocks.extend(extra);
            budget -= 1 + cons.len() as i64;
        } else {
            let pay = kind == 1 && !cash.is_empty();
            let id = fresh(if pay { "Z" } else { "U" });
            let asset = if pay {
                p.of(&cash).clone()
            } else {
                p.of(&assets).clone()
            };
            let due = if p.flip() {
                ident("closing")
            } else {
                int(p.int(0, horizon))
            };
            let block_kind = if pay {
                BlockKind::PayClaim
            } else {
                BlockKind::TransferClaim
            };
            blocks.push(
                Block::new(block_kind, id.as_str())
                    .with("debtor", ident(&debtor))
                    .with("creditor", ident(&creditor))
                    .with("asset", ident(&asset))
                    .with("due", due),
            );
            budget -= 1;
            if budget > 0 && p.flip() {
                blocks.push(
                    Block::new(BlockKind::RestitutionClaim, fresh("R")).with("primary", ident(&id)),
                );
                budget -= 1;
            }
        }
    }
    BlockDocument { blocks }
}

pub fn contracts() -> impl Strategy<Value = BlockDocument> {
    prop::collection::vec(any::<u32>(), 80).prop_map(|w| random_contract(&mut Picks::new(w)))
}

// ---------------------------------------------------------------------------
// Random assertion sets: up to 4 day variables, horizon up to 10, one
// two-member sort with a function over it.

fn day_var(i: usize) -> Term {
    Term::var(format!("d{i}"))
}

fn member(i: usize) -> Term {
    Term::member("S", ["a", "b"][i])
}

fn atom(n_vars: usize, horizon: i64) -> impl Strategy<Value = Formula> {
    let v = 0..n_vars;
    let c = -2..=horizon + 2;
    prop_oneof![
        (v.clone(), 0..4usize, c.clone()).prop_map(|(i, op, k)| cmp(op, day_var(i), Term::int(k))),
        (v.clone(), v.clone(), 0..4usize, -3i64..=3).prop_map(|(i, j, op, k)| cmp(
            op,
            day_var(i),
            day_var(j).plus(Term::int(k))
        )),
        v.clone()
            .prop_map(|i| Formula::eq(day_var(i), Term::int(-1))),
        (0..2usize, 0..2usize).prop_map(|(x, y)| Formula::eq(Term::app("f", member(x)), member(y))),
        (v, 0..2usize).prop_map(|(i, y)| Formula::eq(
            Term::app(
                "f",
                Term::ite(Formula::ge(day_var(i), Term::int(0)), member(0), member(1))
            ),
            member(y)
        )),
    ]
}

fn cmp(op: usize, a: Term, b: Term) -> Formula {
    match op {
        0 => Formula::le(a, b),
        1 => Formula::lt(a, b),
        2 => Formula::ge(a, b),
        _ => Formula::gt(a, b),
    }
}

fn formula(n_vars: usize, horizon: i64) -> impl Strategy<Value = Formula> {
    atom(n_vars, horizon).prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(Formula::and),
            prop::collection::vec(inner.clone(), 1..3).prop_map(Formula::or),
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner).prop_map(|(a, b)| Formula::implies(a, b)),
        ]
    })
}

pub fn assertion_sets() -> impl Strategy<Value = AssertionSet> {
    (1..=4usize, 0..=10i64)
        .prop_flat_map(|(n, h)| {
            (
                Just(n),
                Just(h),
                prop::collection::vec(formula(n, h), 0..=4),
                prop::collection::vec(formula(n, h), 0..=4),
            )
        })
        .prop_map(|(n, h, hard, soft)| {
            let mut s = AssertionSet::default();
            s.sorts.insert("S".into(), vec!["a".into(), "b".into()]);
            s.functions.insert(
                "f".into(),
                FunDecl {
                    domain: "S".into(),
                    codomain: "S".into(),
                },
            );
            for i in 0..n {
                s.vars
                    .insert(format!("d{i}"), VarDecl::new(Domain::Day { horizon: h }));
            }
            s.hard = hard
                .into_iter()
                .enumerate()
                .map(|(i, f)| Assertion::new(format!("h{i}"), f, None))
                .collect();
            s.soft = soft
                .into_iter()
                .enumerate()
                .map(|(i, f)| Assertion::new(format!("s{i}"), f, None))
                .collect();
            s
        })
}

// ---------------------------------------------------------------------------
// SMT-LIB well-formedness.

#[derive(Debug, Clone, PartialEq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

/// Parses a script, failing on unbalanced parentheses.
pub fn parse_script(text: &str) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            ';' => while chars.next().is_some_and(|c| c != '\n') {},
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack.pop().ok_or("unbalanced )")?;
                stack
                    .last_mut()
                    .ok_or("unbalanced )")?
                    .push(Sexp::List(done));
            }
            c if c.is_whitespace() => {}
            '|' => {
                let mut s = String::new();
                for c in chars.by_ref() {
                    if c == '|' {
                        break;
                    }
                    s.push(c);
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
            c => {
                let mut s = c.to_string();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                stack.last_mut().unwrap().push(Sexp::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced (".into());
    }
    Ok(stack.pop().unwrap())
}

const BUILTINS: &[&str] = &[
    "and", "or", "not", "=>", "=", "<", "<=", ">", ">=", "+", "-", "*", "ite", "true", "false",
    "Int", "Bool", "!",
];

fn undeclared<'s>(e: &'s Sexp, declared: &[String], out: &mut Vec<&'s str>) {
    match e {
        Sexp::Atom(a) => {
            let known = BUILTINS.contains(&a.as_str())
                || a.starts_with(':')
                || a.parse::<i64>().is_ok()
                || declared.iter().any(|d| d == a);
            if !known {
                out.push(a);
            }
        }
        Sexp::List(items) => {
            // `(! φ :named n)` introduces `n`.
            if let [Sexp::Atom(bang), body, ..] = items.as_slice() {
                if bang == "!" {
                    return undeclared(body, declared, out);
                }
            }
            items.iter().for_each(|i| undeclared(i, declared, out));
        }
    }
}

/// Checks that parentheses balance, every symbol is declared before use and
/// the script carries exactly `hard` named assertions. Returns the names.
pub fn check_script(text: &str, hard: usize) -> Result<Vec<String>, String> {
    let cmds = parse_script(text)?;
    let mut declared: Vec<String> = Vec::new();
    let mut named = Vec::new();
    for cmd in &cmds {
        let Sexp::List(items) = cmd else {
            return Err(format!("stray atom {cmd:?}"));
        };
        let Some(Sexp::Atom(head)) = items.first() else {
            return Err("empty command".into());
        };
        match head.as_str() {
            "set-option" | "check-sat" | "get-model" | "get-unsat-core" => {}
            "declare-datatypes" => {
                let [_, Sexp::List(sorts), Sexp::List(ctors)] = items.as_slice() else {
                    return Err("bad declare-datatypes".into());
                };
                for s in sorts {
                    if let Sexp::List(p) = s {
                        if let Some(Sexp::Atom(n)) = p.first() {
                            declared.push(n.clone());
                        }
                    }
                }
                for group in ctors {
                    if let Sexp::List(cs) = group {
                        for c in cs {
                            if let Sexp::List(c) = c {
                                if let Some(Sexp::Atom(n)) = c.first() {
                                    declared.push(n.clone());
                                }
                            }
                        }
                    }
                }
            }
            "declare-fun" | "declare-const" => {
                let mut missing = Vec::new();
                for sig in &items[2..] {
                    undeclared(sig, &declared, &mut missing);
                }
                if !missing.is_empty() {
                    return Err(format!("undeclared sort {missing:?}"));
                }
                let Some(Sexp::Atom(n)) = items.get(1) else {
                    return Err("bad declaration".into());
                };
                declared.push(n.clone());
            }
            "assert" => {
                let mut missing = Vec::new();
                undeclared(&items[1], &declared, &mut missing);
                if !missing.is_empty() {
                    return Err(format!("undeclared symbols {missing:?}"));
                }
                if let Sexp::List(inner) = &items[1] {
                    if let [Sexp::Atom(bang), _, Sexp::Atom(key), Sexp::Atom(name)] =
                        inner.as_slice()
                    {
                        if bang == "!" && key == ":named" {
                            named.push(name.clone());
                        }
                    }
                }
            }
            other => return Err(format!("unexpected command {other}")),
        }
    }
    if named.len() != hard {
        return Err(format!("{} named assertions, expected {hard}", named.len()));
    }
    Ok(named)
}

// ---------------------------------------------------------------------------
// Whole-contract comparison against the reference enumeration.

/// Decides every query of a contract with the built-in solver and checks the
/// answers against exhaustive enumeration. Returns the number of queries.
pub fn compare_contract(doc: &BlockDocument, cfg: &SolverConfig) -> Result<usize, String> {
    let model = build_model(doc).map_err(|e| e.to_string())?;
    let queries = analysis_queries(&model, Analysis::All).map_err(|e| e.to_string())?;
    for q in &queries {
        let label = q.label();
        let set = &q.set;
        let maximize = q.kind == QueryKind::Execution;
        let got = if maximize {
            maximize_soft(set, cfg)
        } else {
            solve_bounded(set, cfg)
        }
        .map_err(|e| format!("{label}: {e}"))?;
        let expected = oracle_max_soft(set);
        match (&got, expected) {
            (
                SolveResult::Sat {
                    model: m,
                    soft_satisfied,
                },
                Some(best),
            ) => {
                if !model_satisfies_hard(set, m) {
                    return Err(format!("{label}: model violates a hard assertion"));
                }
                if maximize && soft_satisfied.len() != best {
                    return Err(format!(
                        "{label}: {} soft satisfied, optimum {best}",
                        soft_satisfied.len()
                    ));
                }
            }
            (SolveResult::Unsat { core }, None) => {
                if !oracle_minimal_core(set, core) {
                    return Err(format!(
                        "{label}: core {core:?} is not a minimal unsat core"
                    ));
                }
            }
            (got, _) => {
                return Err(format!(
                    "{label}: solver sat={} but enumeration sat={}",
                    got.is_sat(),
                    expected.is_some()
                ))
            }
        }
    }
    Ok(queries.len())
}

/// The earliest assertion day reported for each limitation defect cannot be
/// lowered.
pub fn compare_limitation_days(doc: &BlockDocument, cfg: &SolverConfig) -> Result<(), String> {
    let model = build_model(doc).map_err(|e| e.to_string())?;
    let report = run_analysis(&model, Analysis::Limitation, &Builtin(*cfg), "random")
        .map_err(|e| e.to_string())?;
    for v in &report.verdicts {
        let Some(day) = v.witness_assert_day else {
            continue;
        };
        let primary = model.claims[&v.claim].primary().unwrap().to_string();
        let mut set = encode_limitation(&model, &v.claim).map_err(|e| e.to_string())?;
        let day_var = model.claims[&primary].day_var.clone();
        set.hard.push(Assertion::new(
            "lower",
            Formula::lt(Term::var(day_var), Term::int(day)),
            None,
        ));
        if oracle_sat(&set) {
            return Err(format!(
                "limitation.{}: day {day} is not the earliest",
                v.claim
            ));
        }
    }
    Ok(())
}

//! Quantifier-free assertions over integers, booleans and finite sorts, and
//! a direct evaluator that serves as the reference semantics.

use std::collections::HashSet;

use indexmap::IndexMap;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Sort {
    Int,
    Bool,
    Finite(String),
}

/// Integer terms are linear: multiplication only by a constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Int(i64),
    Var(String),
    Member { sort: String, name: String },
    App { func: String, arg: Box<Term> },
    Add(Box<Term>, Box<Term>),
    Sub(Box<Term>, Box<Term>),
    Scale(i64, Box<Term>),
    Ite(Box<Formula>, Box<Term>, Box<Term>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Le,
    Lt,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn holds<T: Ord>(self, a: T, b: T) -> bool {
        match self {
            CmpOp::Le => a <= b,
            CmpOp::Lt => a < b,
            CmpOp::Ge => a >= b,
            CmpOp::Gt => a > b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Lt => "<",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    Const(bool),
    BoolVar(String),
    Eq(Term, Term),
    Cmp(CmpOp, Term, Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl Term {
    pub fn int(n: i64) -> Term {
        Term::Int(n)
    }

    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn member(sort: impl Into<String>, name: impl Into<String>) -> Term {
        Term::Member {
            sort: sort.into(),
            name: name.into(),
        }
    }

    pub fn app(func: impl Into<String>, arg: Term) -> Term {
        Term::App {
            func: func.into(),
            arg: Box::new(arg),
        }
    }

    pub fn plus(self, other: Term) -> Term {
        Term::Add(Box::new(self), Box::new(other))
    }

    pub fn minus(self, other: Term) -> Term {
        Term::Sub(Box::new(self), Box::new(other))
    }

    pub fn scaled(self, factor: i64) -> Term {
        Term::Scale(factor, Box::new(self))
    }

    pub fn ite(cond: Formula, then: Term, otherwise: Term) -> Term {
        Term::Ite(Box::new(cond), Box::new(then), Box::new(otherwise))
    }

    fn collect(&self, vars: &mut Vec<String>, funcs: &mut Vec<String>) {
        match self {
            Term::Int(_) | Term::Member { .. } => {}
            Term::Var(v) => push_unique(vars, v),
            Term::App { func, arg } => {
                push_unique(funcs, func);
                arg.collect(vars, funcs);
            }
            Term::Add(a, b) | Term::Sub(a, b) => {
                a.collect(vars, funcs);
                b.collect(vars, funcs);
            }
            Term::Scale(_, t) => t.collect(vars, funcs),
            Term::Ite(c, a, b) => {
                c.collect(vars, funcs);
                a.collect(vars, funcs);
                b.collect(vars, funcs);
            }
        }
    }
}

fn push_unique(out: &mut Vec<String>, name: &str) {
    if !out.iter().any(|n| n == name) {
        out.push(name.to_string());
    }
}

impl Formula {
    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }

    pub fn le(a: Term, b: Term) -> Formula {
        Formula::Cmp(CmpOp::Le, a, b)
    }

    pub fn lt(a: Term, b: Term) -> Formula {
        Formula::Cmp(CmpOp::Lt, a, b)
    }

    pub fn ge(a: Term, b: Term) -> Formula {
        Formula::Cmp(CmpOp::Ge, a, b)
    }

    pub fn gt(a: Term, b: Term) -> Formula {
        Formula::Cmp(CmpOp::Gt, a, b)
    }

    pub fn and(parts: Vec<Formula>) -> Formula {
        Formula::And(parts)
    }

    pub fn or(parts: Vec<Formula>) -> Formula {
        Formula::Or(parts)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Free variables in order of first occurrence.
    pub fn vars(&self) -> Vec<String> {
        let (mut vars, mut funcs) = (Vec::new(), Vec::new());
        self.collect(&mut vars, &mut funcs);
        vars
    }

    /// Function symbols in order of first occurrence.
    pub fn functions(&self) -> Vec<String> {
        let (mut vars, mut funcs) = (Vec::new(), Vec::new());
        self.collect(&mut vars, &mut funcs);
        funcs
    }

    fn collect(&self, vars: &mut Vec<String>, funcs: &mut Vec<String>) {
        match self {
            Formula::Const(_) => {}
            Formula::BoolVar(v) => push_unique(vars, v),
            Formula::Eq(a, b) | Formula::Cmp(_, a, b) => {
                a.collect(vars, funcs);
                b.collect(vars, funcs);
            }
            Formula::Not(f) => f.collect(vars, funcs),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect(vars, funcs)),
            Formula::Implies(a, b) => {
                a.collect(vars, funcs);
                b.collect(vars, funcs);
            }
        }
    }
}

/// Range of values a variable may take.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Domain {
    /// `{-1} ∪ [0, horizon]`; `-1` conventionally means "not performed".
    Day {
        horizon: i64,
    },
    Range {
        lo: i64,
        hi: i64,
    },
    Bool,
    Finite(String),
}

impl Domain {
    pub fn sort(&self) -> Sort {
        match self {
            Domain::Day { .. } | Domain::Range { .. } => Sort::Int,
            Domain::Bool => Sort::Bool,
            Domain::Finite(s) => Sort::Finite(s.clone()),
        }
    }

    /// Integer bounds `(lo, hi)` for integer domains.
    pub fn int_bounds(&self) -> Option<(i64, i64)> {
        match *self {
            Domain::Day { horizon } => Some((-1, horizon)),
            Domain::Range { lo, hi } => Some((lo, hi)),
            _ => None,
        }
    }

    pub fn contains_int(&self, v: i64) -> bool {
        match *self {
            Domain::Day { horizon } => v == -1 || (0..=horizon).contains(&v),
            Domain::Range { lo, hi } => (lo..=hi).contains(&v),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VarDecl {
    pub domain: Domain,
    /// Extra candidate values a bounded search should try.
    pub hints: Vec<i64>,
}

impl VarDecl {
    pub fn new(domain: Domain) -> Self {
        VarDecl {
            domain,
            hints: Vec::new(),
        }
    }
}

/// Unary uninterpreted function between finite sorts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FunDecl {
    pub domain: String,
    pub codomain: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assertion {
    pub name: String,
    pub formula: Formula,
    /// Contract block the assertion was compiled from.
    pub block: Option<String>,
}

impl Assertion {
    pub fn new(name: impl Into<String>, formula: Formula, block: Option<&str>) -> Self {
        Assertion {
            name: name.into(),
            formula,
            block: block.map(str::to_string),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssertionSet {
    /// Finite sorts and their members, in declaration order.
    pub sorts: IndexMap<String, Vec<String>>,
    pub functions: IndexMap<String, FunDecl>,
    pub vars: IndexMap<String, VarDecl>,
    pub hard: Vec<Assertion>,
    pub soft: Vec<Assertion>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("duplicate assertion name `{0}`")]
    DuplicateName(String),
    #[error("undeclared variable `{0}`")]
    UndeclaredVar(String),
    #[error("undeclared function `{0}`")]
    UndeclaredFunction(String),
    #[error("undeclared sort `{0}`")]
    UndeclaredSort(String),
    #[error("sort `{0}` must have distinct members and at least one")]
    BadSort(String),
    #[error("`{0}` is not a member of sort `{1}`")]
    NotAMember(String, String),
    #[error("ill-sorted {0}")]
    IllSorted(String),
}

impl AssertionSet {
    pub fn assertion(&self, name: &str) -> Option<&Assertion> {
        self.hard.iter().chain(&self.soft).find(|a| a.name == name)
    }

    pub fn hard_names(&self) -> Vec<String> {
        self.hard.iter().map(|a| a.name.clone()).collect()
    }

    /// Same declarations, only the named hard assertions, no soft ones.
    pub fn restrict_hard(&self, names: &[String]) -> AssertionSet {
        AssertionSet {
            sorts: self.sorts.clone(),
            functions: self.functions.clone(),
            vars: self.vars.clone(),
            hard: self
                .hard
                .iter()
                .filter(|a| names.contains(&a.name))
                .cloned()
                .collect(),
            soft: Vec::new(),
        }
    }

    /// Checks naming, declarations and sorts.
    pub fn check(&self) -> Result<(), LogicError> {
        let mut names = HashSet::new();
        for a in self.hard.iter().chain(&self.soft) {
            if !names.insert(a.name.as_str()) {
                return Err(LogicError::DuplicateName(a.name.clone()));
            }
        }
        for (sort, members) in &self.sorts {
            let distinct: HashSet<&String> = members.iter().collect();
            if members.is_empty() || distinct.len() != members.len() {
                return Err(LogicError::BadSort(sort.clone()));
            }
        }
        for f in self.functions.values() {
            for s in [&f.domain, &f.codomain] {
                if !self.sorts.contains_key(s) {
                    return Err(LogicError::UndeclaredSort(s.clone()));
                }
            }
        }
        for decl in self.vars.values() {
            if let Domain::Finite(s) = &decl.domain {
                if !self.sorts.contains_key(s) {
                    return Err(LogicError::UndeclaredSort(s.clone()));
                }
            }
        }
        for a in self.hard.iter().chain(&self.soft) {
            self.check_formula(&a.formula)?;
        }
        Ok(())
    }

    fn check_formula(&self, f: &Formula) -> Result<(), LogicError> {
        match f {
            Formula::Const(_) => Ok(()),
            Formula::BoolVar(v) => match self.vars.get(v) {
                None => Err(LogicError::UndeclaredVar(v.clone())),
                Some(d) if d.domain != Domain::Bool => {
                    Err(LogicError::IllSorted(format!("use of `{v}` as a formula")))
                }
                Some(_) => Ok(()),
            },
            Formula::Eq(a, b) => {
                let (sa, sb) = (self.sort_of(a)?, self.sort_of(b)?);
                if sa != sb {
                    return Err(LogicError::IllSorted(format!(
                        "equality between {sa:?} and {sb:?}"
                    )));
                }
                Ok(())
            }
            Formula::Cmp(op, a, b) => {
                for t in [a, b] {
                    if self.sort_of(t)? != Sort::Int {
                        return Err(LogicError::IllSorted(format!("operand of {}", op.symbol())));
                    }
                }
                Ok(())
            }
            Formula::Not(g) => self.check_formula(g),
            Formula::And(gs) | Formula::Or(gs) => gs.iter().try_for_each(|g| self.check_formula(g)),
            Formula::Implies(a, b) => {
                self.check_formula(a)?;
                self.check_formula(b)
            }
        }
    }

    pub fn sort_of(&self, t: &Term) -> Result<Sort, LogicError> {
        match t {
            Term::Int(_) => Ok(Sort::Int),
            Term::Var(v) => self
                .vars
                .get(v)
                .map(|d| d.domain.sort())
                .ok_or_else(|| LogicError::UndeclaredVar(v.clone())),
            Term::Member { sort, name } => {
                let members = self
                    .sorts
                    .get(sort)
                    .ok_or_else(|| LogicError::UndeclaredSort(sort.clone()))?;
                if !members.contains(name) {
                    return Err(LogicError::NotAMember(name.clone(), sort.clone()));
                }
                Ok(Sort::Finite(sort.clone()))
            }
            Term::App { func, arg } => {
                let decl = self
                    .functions
                    .get(func)
                    .ok_or_else(|| LogicError::UndeclaredFunction(func.clone()))?;
                if self.sort_of(arg)? != Sort::Finite(decl.domain.clone()) {
                    return Err(LogicError::IllSorted(format!("argument of `{func}`")));
                }
                Ok(Sort::Finite(decl.codomain.clone()))
            }
            Term::Add(a, b) | Term::Sub(a, b) => {
                for x in [a, b] {
                    if self.sort_of(x)? != Sort::Int {
                        return Err(LogicError::IllSorted("arithmetic operand".into()));
                    }
                }
                Ok(Sort::Int)
            }
            Term::Scale(_, x) => {
                if self.sort_of(x)? != Sort::Int {
                    return Err(LogicError::IllSorted("scaled operand".into()));
                }
                Ok(Sort::Int)
            }
            Term::Ite(c, a, b) => {
                self.check_formula(c)?;
                let (sa, sb) = (self.sort_of(a)?, self.sort_of(b)?);
                if sa != sb {
                    return Err(LogicError::IllSorted("ite branches".into()));
                }
                Ok(sa)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Member(String),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Int(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Member(m) => f.write_str(m),
        }
    }
}

/// Values for variables plus total tables for the uninterpreted functions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub vars: IndexMap<String, Value>,
    /// function → argument member → result member.
    pub functions: IndexMap<String, IndexMap<String, String>>,
}

impl Assignment {
    pub fn int(&self, var: &str) -> Option<i64> {
        match self.vars.get(var)? {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn apply(&self, func: &str, arg: &str) -> Option<&str> {
        self.functions.get(func)?.get(arg).map(String::as_str)
    }

    pub fn set_int(&mut self, var: &str, v: i64) {
        self.vars.insert(var.to_string(), Value::Int(v));
    }

    pub fn set_entry(&mut self, func: &str, arg: &str, result: &str) {
        self.functions
            .entry(func.to_string())
            .or_default()
            .insert(arg.to_string(), result.to_string());
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("sort mismatch in {0}")]
    SortMismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Val<'a> {
    Int(i128),
    Bool(bool),
    Member(&'a str),
}

fn eval_term<'a>(t: &'a Term, a: &'a Assignment) -> Result<Val<'a>, EvalError> {
    let int = |t: &'a Term| -> Result<i128, EvalError> {
        match eval_term(t, a)? {
            Val::Int(n) => Ok(n),
            _ => Err(EvalError::SortMismatch("arithmetic".into())),
        }
    };
    Ok(match t {
        Term::Int(n) => Val::Int(*n as i128),
        Term::Var(v) => match a.vars.get(v) {
            Some(Value::Int(n)) => Val::Int(*n as i128),
            Some(Value::Bool(b)) => Val::Bool(*b),
            Some(Value::Member(m)) => Val::Member(m),
            None => return Err(EvalError::UnboundSymbol(v.clone())),
        },
        Term::Member { name, .. } => Val::Member(name),
        Term::App { func, arg } => {
            let arg = match eval_term(arg, a)? {
                Val::Member(m) => m,
                _ => return Err(EvalError::SortMismatch(format!("argument of {func}"))),
            };
            let result = a
                .apply(func, arg)
                .ok_or_else(|| EvalError::UnboundSymbol(format!("{func}({arg})")))?;
            Val::Member(result)
        }
        Term::Add(x, y) => Val::Int(int(x)? + int(y)?),
        Term::Sub(x, y) => Val::Int(int(x)? - int(y)?),
        Term::Scale(k, x) => Val::Int(*k as i128 * int(x)?),
        Term::Ite(c, x, y) => {
            if evaluate_formula(c, a)? {
                eval_term(x, a)?
            } else {
                eval_term(y, a)?
            }
        }
    })
}

/// Evaluates `f` under a total assignment.
pub fn evaluate_formula(f: &Formula, a: &Assignment) -> Result<bool, EvalError> {
    Ok(match f {
        Formula::Const(b) => *b,
        Formula::BoolVar(v) => match a.vars.get(v) {
            Some(Value::Bool(b)) => *b,
            Some(_) => return Err(EvalError::SortMismatch(v.clone())),
            None => return Err(EvalError::UnboundSymbol(v.clone())),
        },
        Formula::Eq(x, y) => {
            let (x, y) = (eval_term(x, a)?, eval_term(y, a)?);
            if std::mem::discriminant(&x) != std::mem::discriminant(&y) {
                return Err(EvalError::SortMismatch("equality".into()));
            }
            x == y
        }
        Formula::Cmp(op, x, y) => match (eval_term(x, a)?, eval_term(y, a)?) {
            (Val::Int(x), Val::Int(y)) => op.holds(x, y),
            _ => return Err(EvalError::SortMismatch(op.symbol().into())),
        },
        Formula::Not(g) => !evaluate_formula(g, a)?,
        Formula::And(gs) => {
            let mut all = true;
            for g in gs {
                all &= evaluate_formula(g, a)?;
            }
            all
        }
        Formula::Or(gs) => {
            let mut any = false;
            for g in gs {
                any |= evaluate_formula(g, a)?;
            }
            any
        }
        Formula::Implies(x, y) => !evaluate_formula(x, a)? || evaluate_formula(y, a)?,
    })
}

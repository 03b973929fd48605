//! Driver for an SMT-LIB2 solver running as a child process.
//!
//! Soft assertions are handled without solver extensions: after the hard
//! part is found satisfiable, the driver asks for at least `k` satisfied soft
//! assertions for `k = |soft|, |soft| - 1, …` and keeps the first `sat`.

use std::io::Write as _;
use std::process::{Command, Stdio};

use crate::logic::{AssertionSet, Assignment, Domain, Value};

use super::smtlib::{formula, script_prefix, symbol};
use super::{minimize_core_with, satisfied_softs, Backend, SolveError, SolveResult};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' | ')' => {
                out.push(c.to_string());
                chars.next();
            }
            ';' => while chars.next().is_some_and(|c| c != '\n') {},
            '|' => {
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('|') => break,
                        Some(c) => s.push(c),
                        None => return Err("unterminated quoted symbol".into()),
                    }
                }
                out.push(s);
            }
            '"' => {
                chars.next();
                let mut s = String::from("\"");
                loop {
                    match chars.next() {
                        Some('"') if chars.peek() == Some(&'"') => {
                            chars.next();
                            s.push('"');
                        }
                        Some('"') => break,
                        Some(c) => s.push(c),
                        None => return Err("unterminated string".into()),
                    }
                }
                out.push(s);
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' {
                        break;
                    }
                    s.push(c);
                    chars.next();
                }
                out.push(s);
            }
        }
    }
    Ok(out)
}

fn parse_sexps(text: &str) -> Result<Vec<Sexp>, String> {
    let tokens = tokenize(text)?;
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    for t in tokens {
        match t.as_str() {
            "(" => stack.push(Vec::new()),
            ")" => {
                let list = stack.pop().ok_or("unbalanced parenthesis")?;
                stack
                    .last_mut()
                    .ok_or("unbalanced parenthesis")?
                    .push(Sexp::List(list));
            }
            _ => stack.last_mut().expect("root").push(Sexp::Atom(t)),
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced parenthesis".into());
    }
    Ok(stack.pop().expect("root"))
}

fn is_error(s: &Sexp) -> bool {
    matches!(s, Sexp::List(items) if matches!(items.first(), Some(Sexp::Atom(a)) if a == "error"))
}

fn sexp_int(s: &Sexp) -> Option<i64> {
    match s {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(op), x] if op == "-" => sexp_int(x)?.checked_neg(),
            _ => None,
        },
    }
}

/// An external solver invoked with the script on standard input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSolver {
    program: String,
    args: Vec<String>,
}

struct Answer {
    sat: bool,
    rest: Vec<Sexp>,
}

impl ExternalSolver {
    /// `command` is split on whitespace into program and arguments.
    pub fn new(command: &str) -> Result<Self, SolveError> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| SolveError::SolverUnavailable("empty solver command".into()))?;
        Ok(ExternalSolver {
            program,
            args: parts.collect(),
        })
    }

    fn run(&self, script: &str) -> Result<Answer, SolveError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| SolveError::SolverUnavailable(format!("{}: {e}", self.program)))?;
        child
            .stdin
            .take()
            .expect("piped stdin")
            .write_all(script.as_bytes())
            .map_err(|e| SolveError::SolverProtocolError(format!("writing script: {e}")))?;
        let output = child
            .wait_with_output()
            .map_err(|e| SolveError::SolverProtocolError(e.to_string()))?;
        let text = String::from_utf8_lossy(&output.stdout).into_owned();
        let protocol = || {
            SolveError::SolverProtocolError(format!(
                "{}{}",
                text,
                String::from_utf8_lossy(&output.stderr)
            ))
        };
        let sexps = parse_sexps(&text).map_err(|_| protocol())?;
        let mut items = sexps.into_iter().filter(|s| !is_error(s));
        let sat = match items.next() {
            Some(Sexp::Atom(a)) if a == "sat" => true,
            Some(Sexp::Atom(a)) if a == "unsat" => false,
            _ => return Err(protocol()),
        };
        Ok(Answer {
            sat,
            rest: items.collect(),
        })
    }

    fn value_query(set: &AssertionSet) -> String {
        let mut terms: Vec<String> = set.vars.keys().map(|v| symbol(v)).collect();
        for (f, decl) in &set.functions {
            for m in &set.sorts[&decl.domain] {
                terms.push(format!("({} {})", symbol(f), symbol(m)));
            }
        }
        if terms.is_empty() {
            String::new()
        } else {
            format!("(get-value ({}))\n", terms.join(" "))
        }
    }

    fn model(set: &AssertionSet, rest: &[Sexp]) -> Result<Assignment, SolveError> {
        let mut a = Assignment::default();
        let expected = set.vars.len()
            + set
                .functions
                .values()
                .map(|d| set.sorts[&d.domain].len())
                .sum::<usize>();
        if expected == 0 {
            return Ok(a);
        }
        let bad =
            |what: &str| SolveError::SolverProtocolError(format!("unreadable value for {what}"));
        let Some(Sexp::List(pairs)) = rest.first() else {
            return Err(SolveError::SolverProtocolError(
                "missing get-value response".into(),
            ));
        };
        for pair in pairs {
            let Sexp::List(kv) = pair else {
                return Err(bad("pair"));
            };
            let [key, value] = kv.as_slice() else {
                return Err(bad("pair"));
            };
            match key {
                Sexp::Atom(var) => {
                    let decl = set.vars.get(var).ok_or_else(|| bad(var))?;
                    let v = match &decl.domain {
                        Domain::Day { .. } | Domain::Range { .. } => {
                            Value::Int(sexp_int(value).ok_or_else(|| bad(var))?)
                        }
                        Domain::Bool => match value {
                            Sexp::Atom(b) if b == "true" => Value::Bool(true),
                            Sexp::Atom(b) if b == "false" => Value::Bool(false),
                            _ => return Err(bad(var)),
                        },
                        Domain::Finite(_) => match value {
                            Sexp::Atom(m) => Value::Member(m.clone()),
                            _ => return Err(bad(var)),
                        },
                    };
                    a.vars.insert(var.clone(), v);
                }
                Sexp::List(app) => match (app.as_slice(), value) {
                    ([Sexp::Atom(f), Sexp::Atom(arg)], Sexp::Atom(result)) => {
                        a.set_entry(f, arg, result)
                    }
                    _ => return Err(bad("function entry")),
                },
            }
        }
        let got = a.vars.len() + a.functions.values().map(|t| t.len()).sum::<usize>();
        if got != expected {
            return Err(SolveError::SolverProtocolError("incomplete model".into()));
        }
        Ok(a)
    }

    fn check(
        &self,
        set: &AssertionSet,
        extra: Option<String>,
    ) -> Result<Option<Assignment>, SolveError> {
        let mut script = script_prefix(set);
        if let Some(extra) = extra {
            let at = script.rfind("(check-sat)").expect("check-sat");
            script.insert_str(at, &extra);
        }
        script.push_str(&Self::value_query(set));
        let answer = self.run(&script)?;
        if answer.sat {
            Self::model(set, &answer.rest).map(Some)
        } else {
            Ok(None)
        }
    }

    fn is_unsat(&self, set: &AssertionSet) -> Result<bool, SolveError> {
        Ok(!self.run(&script_prefix(set))?.sat)
    }

    fn core(&self, set: &AssertionSet) -> Result<Vec<String>, SolveError> {
        let mut script = script_prefix(set);
        script.push_str("(get-unsat-core)\n");
        let answer = self.run(&script)?;
        if answer.sat {
            return Err(SolveError::SolverProtocolError("sat on recheck".into()));
        }
        let reported: Vec<String> = match answer.rest.first() {
            Some(Sexp::List(names)) => names
                .iter()
                .filter_map(|n| match n {
                    Sexp::Atom(a) => Some(a.clone()),
                    Sexp::List(_) => None,
                })
                .collect(),
            _ => set.hard_names(),
        };
        let start: Vec<String> = set
            .hard_names()
            .into_iter()
            .filter(|n| reported.contains(n))
            .collect();
        let start = if self.is_unsat(&set.restrict_hard(&start))? {
            set.restrict_hard(&start)
        } else {
            set.clone()
        };
        minimize_core_with(&start, |s| self.is_unsat(s))
    }

    fn decide(&self, set: &AssertionSet, maximize: bool) -> Result<SolveResult, SolveError> {
        set.check()?;
        let hard_only = set.restrict_hard(&set.hard_names());
        let Some(mut model) = self.check(&hard_only, None)? else {
            return Ok(SolveResult::Unsat {
                core: self.core(&hard_only)?,
            });
        };
        if maximize && !set.soft.is_empty() {
            let indicators: Vec<String> = set
                .soft
                .iter()
                .map(|a| format!("(ite {} 1 0)", formula(&a.formula)))
                .collect();
            let sum = if indicators.len() == 1 {
                indicators[0].clone()
            } else {
                format!("(+ {})", indicators.join(" "))
            };
            for k in (1..=set.soft.len()).rev() {
                if satisfied_softs(set, &model).len() >= k {
                    break;
                }
                let extra = format!("(assert (>= {sum} {k}))\n");
                if let Some(m) = self.check(&hard_only, Some(extra))? {
                    model = m;
                    break;
                }
            }
        }
        Ok(SolveResult::Sat {
            soft_satisfied: satisfied_softs(set, &model),
            model,
        })
    }
}

impl Backend for ExternalSolver {
    fn solve(&self, set: &AssertionSet) -> Result<SolveResult, SolveError> {
        self.decide(set, false)
    }

    fn maximize(&self, set: &AssertionSet) -> Result<SolveResult, SolveError> {
        self.decide(set, true)
    }
}

/// Decides `set` with an external solver, maximizing soft assertions.
pub fn run_external(solver_command: &str, set: &AssertionSet) -> Result<SolveResult, SolveError> {
    ExternalSolver::new(solver_command)?.maximize(set)
}

//! Depth-first bounded search with three-valued pruning.

use std::collections::BTreeSet;

use crate::logic::{AssertionSet, Assignment, CmpOp, Domain, Formula, Term, Value};

use super::{SolveError, SolverConfig};

#[derive(Debug, Clone)]
enum SlotKind {
    Int {
        lo: i64,
        hi: i64,
        hints: Vec<i64>,
    },
    Bool,
    Finite {
        sort: String,
    },
    Entry {
        func: String,
        arg: String,
        sort: String,
    },
}

#[derive(Debug, Clone)]
struct Slot {
    kind: SlotKind,
    /// Number of values for finite kinds.
    size: i64,
}

#[derive(Debug, Clone)]
enum CT {
    Const(i128),
    Slot(usize),
    /// Function application; `entries[i]` is the slot of the entry for member `i`.
    App(Vec<usize>, Box<CT>),
    Add(Box<CT>, Box<CT>),
    Sub(Box<CT>, Box<CT>),
    Scale(i128, Box<CT>),
    Ite(Box<CF>, Box<CT>, Box<CT>),
}

#[derive(Debug, Clone)]
enum CF {
    Const(bool),
    Bool(usize),
    Eq(CT, CT),
    Cmp(CmpOp, CT, CT),
    Not(Box<CF>),
    And(Vec<CF>),
    Or(Vec<CF>),
    Implies(Box<CF>, Box<CF>),
}

type Values = [Option<i64>];

impl CT {
    fn eval(&self, v: &Values) -> Option<i128> {
        Some(match self {
            CT::Const(n) => *n,
            CT::Slot(s) => v[*s]? as i128,
            CT::App(entries, arg) => v[entries[arg.eval(v)? as usize]]? as i128,
            CT::Add(a, b) => a.eval(v)? + b.eval(v)?,
            CT::Sub(a, b) => a.eval(v)? - b.eval(v)?,
            CT::Scale(k, a) => k * a.eval(v)?,
            CT::Ite(c, a, b) => {
                if c.eval(v)? {
                    a.eval(v)?
                } else {
                    b.eval(v)?
                }
            }
        })
    }

    /// `coef · x + rest` when the term is linear in slot `x` and every other
    /// slot it reads is assigned.
    fn linear(&self, x: usize, v: &Values) -> Option<(i128, i128)> {
        Some(match self {
            CT::Const(n) => (0, *n),
            CT::Slot(s) if *s == x => (1, 0),
            CT::Slot(s) => (0, v[*s]? as i128),
            CT::App(..) => (0, self.eval(v)?),
            CT::Add(a, b) => {
                let (p, q) = (a.linear(x, v)?, b.linear(x, v)?);
                (p.0 + q.0, p.1 + q.1)
            }
            CT::Sub(a, b) => {
                let (p, q) = (a.linear(x, v)?, b.linear(x, v)?);
                (p.0 - q.0, p.1 - q.1)
            }
            CT::Scale(k, a) => {
                let p = a.linear(x, v)?;
                (k * p.0, k * p.1)
            }
            CT::Ite(c, a, b) => {
                if c.eval(v)? {
                    a.linear(x, v)?
                } else {
                    b.linear(x, v)?
                }
            }
        })
    }
}

impl CF {
    /// Kleene evaluation over a partial assignment.
    fn eval(&self, v: &Values) -> Option<bool> {
        match self {
            CF::Const(b) => Some(*b),
            CF::Bool(s) => v[*s].map(|x| x != 0),
            CF::Eq(a, b) => Some(a.eval(v)? == b.eval(v)?),
            CF::Cmp(op, a, b) => Some(op.holds(a.eval(v)?, b.eval(v)?)),
            CF::Not(f) => f.eval(v).map(|b| !b),
            CF::And(fs) => {
                let mut known = true;
                for f in fs {
                    match f.eval(v) {
                        Some(false) => return Some(false),
                        None => known = false,
                        Some(true) => {}
                    }
                }
                known.then_some(true)
            }
            CF::Or(fs) => {
                let mut known = true;
                for f in fs {
                    match f.eval(v) {
                        Some(true) => return Some(true),
                        None => known = false,
                        Some(false) => {}
                    }
                }
                known.then_some(false)
            }
            CF::Implies(a, b) => match (a.eval(v), b.eval(v)) {
                (Some(false), _) | (_, Some(true)) => Some(true),
                (Some(true), Some(false)) => Some(false),
                _ => None,
            },
        }
    }
}

/// Integer atoms `a ⋈ b` reachable from a formula, as `(a, b)` pairs.
fn int_atoms<'a>(f: &'a CF, out: &mut Vec<(&'a CT, &'a CT)>, int_eq: &dyn Fn(&CT) -> bool) {
    match f {
        CF::Const(_) | CF::Bool(_) => {}
        CF::Eq(a, b) => {
            if int_eq(a) {
                out.push((a, b));
            }
            term_atoms(a, out, int_eq);
            term_atoms(b, out, int_eq);
        }
        CF::Cmp(_, a, b) => {
            out.push((a, b));
            term_atoms(a, out, int_eq);
            term_atoms(b, out, int_eq);
        }
        CF::Not(g) => int_atoms(g, out, int_eq),
        CF::And(gs) | CF::Or(gs) => gs.iter().for_each(|g| int_atoms(g, out, int_eq)),
        CF::Implies(a, b) => {
            int_atoms(a, out, int_eq);
            int_atoms(b, out, int_eq);
        }
    }
}

fn term_atoms<'a>(t: &'a CT, out: &mut Vec<(&'a CT, &'a CT)>, int_eq: &dyn Fn(&CT) -> bool) {
    match t {
        CT::Const(_) | CT::Slot(_) => {}
        CT::App(_, a) | CT::Scale(_, a) => term_atoms(a, out, int_eq),
        CT::Add(a, b) | CT::Sub(a, b) => {
            term_atoms(a, out, int_eq);
            term_atoms(b, out, int_eq);
        }
        CT::Ite(c, a, b) => {
            int_atoms(c, out, int_eq);
            term_atoms(a, out, int_eq);
            term_atoms(b, out, int_eq);
        }
    }
}

fn term_slots(t: &CT, out: &mut BTreeSet<usize>) {
    match t {
        CT::Const(_) => {}
        CT::Slot(s) => {
            out.insert(*s);
        }
        CT::App(entries, a) => {
            out.extend(entries.iter().copied());
            term_slots(a, out);
        }
        CT::Add(a, b) | CT::Sub(a, b) => {
            term_slots(a, out);
            term_slots(b, out);
        }
        CT::Scale(_, a) => term_slots(a, out),
        CT::Ite(c, a, b) => {
            formula_slots(c, out);
            term_slots(a, out);
            term_slots(b, out);
        }
    }
}

fn formula_slots(f: &CF, out: &mut BTreeSet<usize>) {
    match f {
        CF::Const(_) => {}
        CF::Bool(s) => {
            out.insert(*s);
        }
        CF::Eq(a, b) | CF::Cmp(_, a, b) => {
            term_slots(a, out);
            term_slots(b, out);
        }
        CF::Not(g) => formula_slots(g, out),
        CF::And(gs) | CF::Or(gs) => gs.iter().for_each(|g| formula_slots(g, out)),
        CF::Implies(a, b) => {
            formula_slots(a, out);
            formula_slots(b, out);
        }
    }
}

fn collect_consts(f: &Formula, out: &mut BTreeSet<i64>) {
    fn term(t: &Term, out: &mut BTreeSet<i64>) {
        match t {
            Term::Int(n) => {
                out.insert(*n);
            }
            Term::Var(_) | Term::Member { .. } => {}
            Term::App { arg, .. } => term(arg, out),
            Term::Add(a, b) | Term::Sub(a, b) => {
                term(a, out);
                term(b, out);
            }
            Term::Scale(_, a) => term(a, out),
            Term::Ite(c, a, b) => {
                collect_consts(c, out);
                term(a, out);
                term(b, out);
            }
        }
    }
    match f {
        Formula::Const(_) | Formula::BoolVar(_) => {}
        Formula::Eq(a, b) | Formula::Cmp(_, a, b) => {
            term(a, out);
            term(b, out);
        }
        Formula::Not(g) => collect_consts(g, out),
        Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| collect_consts(g, out)),
        Formula::Implies(a, b) => {
            collect_consts(a, out);
            collect_consts(b, out);
        }
    }
}

/// An assertion set lowered onto integer-valued search slots.
pub(super) struct Problem<'s> {
    set: &'s AssertionSet,
    slots: Vec<Slot>,
    hard: Vec<CF>,
    soft: Vec<CF>,
    hard_slots: Vec<BTreeSet<usize>>,
    soft_slots: Vec<BTreeSet<usize>>,
    static_consts: Vec<i64>,
}

struct Compiler<'s> {
    set: &'s AssertionSet,
    var_slot: Vec<(String, usize)>,
    entry_slots: Vec<(String, Vec<usize>)>,
}

impl Compiler<'_> {
    fn member_index(&self, sort: &str, name: &str) -> i128 {
        self.set.sorts[sort]
            .iter()
            .position(|m| m == name)
            .expect("checked member") as i128
    }

    fn slot_of(&self, var: &str) -> usize {
        self.var_slot
            .iter()
            .find(|(v, _)| v == var)
            .expect("checked var")
            .1
    }

    fn term(&self, t: &Term) -> CT {
        match t {
            Term::Int(n) => CT::Const(*n as i128),
            Term::Var(v) => CT::Slot(self.slot_of(v)),
            Term::Member { sort, name } => CT::Const(self.member_index(sort, name)),
            Term::App { func, arg } => {
                let entries = self
                    .entry_slots
                    .iter()
                    .find(|(f, _)| f == func)
                    .expect("checked function")
                    .1
                    .clone();
                match self.term(arg) {
                    CT::Const(j) => CT::Slot(entries[j as usize]),
                    arg => CT::App(entries, Box::new(arg)),
                }
            }
            Term::Add(a, b) => CT::Add(Box::new(self.term(a)), Box::new(self.term(b))),
            Term::Sub(a, b) => CT::Sub(Box::new(self.term(a)), Box::new(self.term(b))),
            Term::Scale(k, a) => CT::Scale(*k as i128, Box::new(self.term(a))),
            Term::Ite(c, a, b) => CT::Ite(
                Box::new(self.formula(c)),
                Box::new(self.term(a)),
                Box::new(self.term(b)),
            ),
        }
    }

    fn formula(&self, f: &Formula) -> CF {
        match f {
            Formula::Const(b) => CF::Const(*b),
            Formula::BoolVar(v) => CF::Bool(self.slot_of(v)),
            Formula::Eq(a, b) => CF::Eq(self.term(a), self.term(b)),
            Formula::Cmp(op, a, b) => CF::Cmp(*op, self.term(a), self.term(b)),
            Formula::Not(g) => CF::Not(Box::new(self.formula(g))),
            Formula::And(gs) => CF::And(gs.iter().map(|g| self.formula(g)).collect()),
            Formula::Or(gs) => CF::Or(gs.iter().map(|g| self.formula(g)).collect()),
            Formula::Implies(a, b) => {
                CF::Implies(Box::new(self.formula(a)), Box::new(self.formula(b)))
            }
        }
    }
}

impl<'s> Problem<'s> {
    /// `set` must already be well-formed.
    pub(super) fn new(set: &'s AssertionSet) -> Self {
        let mut slots = Vec::new();
        let mut var_slot = Vec::new();
        for (name, decl) in &set.vars {
            var_slot.push((name.clone(), slots.len()));
            slots.push(match &decl.domain {
                Domain::Day { horizon } => Slot {
                    kind: SlotKind::Int {
                        lo: -1,
                        hi: *horizon,
                        hints: decl.hints.clone(),
                    },
                    size: 0,
                },
                Domain::Range { lo, hi } => Slot {
                    kind: SlotKind::Int {
                        lo: *lo,
                        hi: *hi,
                        hints: decl.hints.clone(),
                    },
                    size: 0,
                },
                Domain::Bool => Slot {
                    kind: SlotKind::Bool,
                    size: 2,
                },
                Domain::Finite(s) => Slot {
                    kind: SlotKind::Finite { sort: s.clone() },
                    size: set.sorts[s].len() as i64,
                },
            });
        }
        let mut entry_slots = Vec::new();
        for (func, decl) in &set.functions {
            let size = set.sorts[&decl.codomain].len() as i64;
            let mut entries = Vec::new();
            for arg in &set.sorts[&decl.domain] {
                entries.push(slots.len());
                slots.push(Slot {
                    kind: SlotKind::Entry {
                        func: func.clone(),
                        arg: arg.clone(),
                        sort: decl.codomain.clone(),
                    },
                    size,
                });
            }
            entry_slots.push((func.clone(), entries));
        }
        let c = Compiler {
            set,
            var_slot,
            entry_slots,
        };
        let hard: Vec<CF> = set.hard.iter().map(|a| c.formula(&a.formula)).collect();
        let soft: Vec<CF> = set.soft.iter().map(|a| c.formula(&a.formula)).collect();
        let slots_of = |fs: &[CF]| {
            fs.iter()
                .map(|f| {
                    let mut s = BTreeSet::new();
                    formula_slots(f, &mut s);
                    s
                })
                .collect::<Vec<_>>()
        };
        let mut consts = BTreeSet::new();
        for a in set.hard.iter().chain(&set.soft) {
            collect_consts(&a.formula, &mut consts);
        }
        let base: Vec<i64> = consts.iter().copied().collect();
        let mut all = BTreeSet::from([-1, 0]);
        for &a in &base {
            for &b in &base {
                all.insert(a.saturating_add(b));
                all.insert(a.saturating_sub(b));
            }
            all.insert(a);
        }
        let mut static_consts = BTreeSet::new();
        for x in all {
            static_consts.extend([x.saturating_sub(1), x, x.saturating_add(1)]);
        }
        Problem {
            set,
            hard_slots: slots_of(&hard),
            soft_slots: slots_of(&soft),
            slots,
            hard,
            soft,
            static_consts: static_consts.into_iter().collect(),
        }
    }

    fn full_domain(&self, slot: usize, cap: u64) -> Option<Vec<i64>> {
        match &self.slots[slot].kind {
            SlotKind::Int { lo, hi, .. } => {
                let width = (*hi as i128) - (*lo as i128) + 1;
                if width <= 0 {
                    Some(Vec::new())
                } else if width as u128 <= cap as u128 {
                    Some((*lo..=*hi).collect())
                } else {
                    None
                }
            }
            _ => Some((0..self.slots[slot].size).collect()),
        }
    }

    fn default_value(&self, slot: usize) -> i64 {
        match &self.slots[slot].kind {
            SlotKind::Int { lo, .. } => *lo,
            _ => 0,
        }
    }

    /// Solves the whole set; with `maximize` the soft count is maximal.
    pub(super) fn solve(&self, cfg: &SolverConfig, maximize: bool) -> Result<Outcome, SolveError> {
        let n = self.slots.len();
        // Union-find over slots joined by shared assertions.
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        let mut join = |group: &BTreeSet<usize>| {
            let mut it = group.iter();
            if let Some(&first) = it.next() {
                for &s in it {
                    let (a, b) = (find(&mut parent, first), find(&mut parent, s));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        };
        self.hard_slots.iter().for_each(&mut join);
        if maximize {
            self.soft_slots.iter().for_each(&mut join);
        }

        let mut values: Vec<Option<i64>> = vec![None; n];

        // Ground assertions.
        for (i, f) in self.hard.iter().enumerate() {
            if self.hard_slots[i].is_empty() && f.eval(&values) == Some(false) {
                return Ok(Outcome::Unsat(vec![self.set.hard[i].name.clone()]));
            }
        }

        // Components keyed by their smallest slot.
        let mut comps: Vec<(usize, Vec<usize>, Vec<usize>)> = Vec::new();
        let mut comp_of = vec![usize::MAX; n];
        for s in 0..n {
            let root = find(&mut parent, s);
            if comp_of[root] == usize::MAX {
                comp_of[root] = comps.len();
                comps.push((root, Vec::new(), Vec::new()));
            }
        }
        let comp_index = |parent: &mut Vec<usize>, slots: &BTreeSet<usize>| {
            slots.iter().next().map(|&s| comp_of[find(parent, s)])
        };
        for i in 0..self.hard.len() {
            if let Some(c) = comp_index(&mut parent, &self.hard_slots[i]) {
                comps[c].1.push(i);
            }
        }
        if maximize {
            for i in 0..self.soft.len() {
                if let Some(c) = comp_index(&mut parent, &self.soft_slots[i]) {
                    comps[c].2.push(i);
                }
            }
        }

        let mut nodes = 0u64;
        for (_, hard, soft) in &comps {
            if hard.is_empty() && soft.is_empty() {
                continue;
            }
            let mut comp_slots = BTreeSet::new();
            for &i in hard {
                comp_slots.extend(self.hard_slots[i].iter().copied());
            }
            for &i in soft {
                comp_slots.extend(self.soft_slots[i].iter().copied());
            }
            let mut search = Search::new(self, cfg, hard, soft, &comp_slots, &mut nodes);
            match search.run()? {
                Some(found) => {
                    for s in comp_slots {
                        values[s] = found[s];
                    }
                }
                None => {
                    let names = hard
                        .iter()
                        .map(|&i| self.set.hard[i].name.clone())
                        .collect();
                    return Ok(Outcome::UnsatComponent(names));
                }
            }
        }
        for (s, v) in values.iter_mut().enumerate() {
            if v.is_none() {
                *v = Some(self.default_value(s));
            }
        }
        Ok(Outcome::Sat(self.assignment(&values)))
    }

    fn assignment(&self, values: &Values) -> Assignment {
        let mut a = Assignment::default();
        for (s, slot) in self.slots.iter().enumerate() {
            let v = values[s].expect("total");
            match &slot.kind {
                SlotKind::Int { .. } => {}
                SlotKind::Bool => {}
                SlotKind::Finite { .. } => {}
                SlotKind::Entry { func, arg, sort } => {
                    a.set_entry(func, arg, &self.set.sorts[sort][v as usize]);
                    continue;
                }
            }
            let name = self.set.vars.get_index(s).expect("var slot").0.clone();
            let value = match &slot.kind {
                SlotKind::Int { .. } => Value::Int(v),
                SlotKind::Bool => Value::Bool(v != 0),
                SlotKind::Finite { sort } => {
                    Value::Member(self.set.sorts[sort][v as usize].clone())
                }
                SlotKind::Entry { .. } => unreachable!(),
            };
            a.vars.insert(name, value);
        }
        a
    }
}

pub(super) enum Outcome {
    Sat(Assignment),
    /// Ground hard assertion that is false on its own.
    Unsat(Vec<String>),
    /// Hard assertions of the first unsatisfiable component.
    UnsatComponent(Vec<String>),
}

struct Search<'a, 's> {
    p: &'a Problem<'s>,
    max_nodes: u64,
    nodes: &'a mut u64,
    order: Vec<usize>,
    /// Pre-filtered candidates for slots searched over their full domain.
    fixed: Vec<Option<Vec<i64>>>,
    hard: &'a [usize],
    soft: &'a [usize],
    hard_of: Vec<Vec<usize>>,
    atoms_of: Vec<Vec<(&'a CT, &'a CT)>>,
    values: Vec<Option<i64>>,
    maximize: bool,
    best: Option<(Score, Vec<Option<i64>>)>,
}

/// Satisfied soft count, then which ones, in declaration order.
type Score = (usize, Vec<bool>);

impl<'a, 's> Search<'a, 's> {
    fn new(
        p: &'a Problem<'s>,
        cfg: &SolverConfig,
        hard: &'a [usize],
        soft: &'a [usize],
        comp_slots: &BTreeSet<usize>,
        nodes: &'a mut u64,
    ) -> Self {
        let n = p.slots.len();
        let mut hard_of = vec![Vec::new(); n];
        for &i in hard {
            for &s in &p.hard_slots[i] {
                hard_of[s].push(i);
            }
        }
        let int_eq = |t: &CT| !matches!(t, CT::App(..)) && !is_finite_term(p, t);
        let mut atoms_of: Vec<Vec<(&CT, &CT)>> = vec![Vec::new(); n];
        for &i in hard {
            let mut atoms = Vec::new();
            int_atoms(&p.hard[i], &mut atoms, &int_eq);
            attach_atoms(&atoms, &mut atoms_of);
        }
        for &i in soft {
            let mut atoms = Vec::new();
            int_atoms(&p.soft[i], &mut atoms, &int_eq);
            attach_atoms(&atoms, &mut atoms_of);
        }

        // Node consistency against assertions over a single slot.
        let mut fixed = vec![None; n];
        let mut scratch = vec![None; n];
        for &s in comp_slots {
            if let Some(dom) = p.full_domain(s, cfg.full_domain_cap) {
                let unary: Vec<usize> = hard_of[s]
                    .iter()
                    .copied()
                    .filter(|&i| p.hard_slots[i].len() == 1)
                    .collect();
                let kept = dom
                    .into_iter()
                    .filter(|&x| {
                        scratch[s] = Some(x);
                        let ok = unary
                            .iter()
                            .all(|&i| p.hard[i].eval(&scratch) != Some(false));
                        scratch[s] = None;
                        ok
                    })
                    .collect::<Vec<_>>();
                fixed[s] = Some(kept);
            }
        }
        let mut order: Vec<usize> = comp_slots.iter().copied().collect();
        order.sort_by_key(|&s| fixed[s].as_ref().map_or(1, |d| usize::from(d.len() != 1)));

        Search {
            p,
            max_nodes: cfg.max_nodes,
            nodes,
            order,
            fixed,
            hard,
            soft,
            hard_of,
            atoms_of,
            values: vec![None; n],
            maximize: !soft.is_empty(),
            best: None,
        }
    }

    fn run(&mut self) -> Result<Option<Vec<Option<i64>>>, SolveError> {
        self.dfs(0)?;
        Ok(self.best.take().map(|(_, v)| v))
    }

    fn candidates(&self, slot: usize) -> Vec<i64> {
        if let Some(d) = &self.fixed[slot] {
            return d.clone();
        }
        let SlotKind::Int { lo, hi, hints } = &self.p.slots[slot].kind else {
            unreachable!("finite slots are always enumerated")
        };
        let mut out: BTreeSet<i64> = BTreeSet::from([*lo, *hi]);
        out.extend(self.p.static_consts.iter().copied());
        out.extend(hints.iter().copied());
        for (a, b) in &self.atoms_of[slot] {
            let (Some(p), Some(q)) = (a.linear(slot, &self.values), b.linear(slot, &self.values))
            else {
                continue;
            };
            let (coef, rest) = (p.0 - q.0, p.1 - q.1);
            if coef == 0 {
                continue;
            }
            let (f, c) = floor_ceil(-rest, coef);
            for x in [f - 1, f, c, c + 1] {
                if let Ok(x) = i64::try_from(x) {
                    out.insert(x);
                }
            }
        }
        out.into_iter()
            .filter(|x| (*lo..=*hi).contains(x))
            .collect()
    }

    fn hard_fails(&self, slot: usize) -> bool {
        self.hard_of[slot]
            .iter()
            .any(|&i| self.p.hard[i].eval(&self.values) == Some(false))
    }

    /// Upper bound on `(count, satisfied flags)` over all completions; exact
    /// once every slot is assigned.
    fn soft_bound(&self) -> (usize, Vec<bool>) {
        let bits: Vec<bool> = self
            .soft
            .iter()
            .map(|&i| self.p.soft[i].eval(&self.values) != Some(false))
            .collect();
        (bits.iter().filter(|b| **b).count(), bits)
    }

    /// Returns `true` once the search can stop.
    fn dfs(&mut self, depth: usize) -> Result<bool, SolveError> {
        *self.nodes += 1;
        if *self.nodes > self.max_nodes {
            return Err(SolveError::ResourceLimit {
                nodes: self.max_nodes,
            });
        }
        if depth == self.order.len() {
            debug_assert!(self
                .hard
                .iter()
                .all(|&i| self.p.hard[i].eval(&self.values) == Some(true)));
            let score = self.soft_bound();
            let done = score.0 == self.soft.len();
            self.best = Some((score, self.values.clone()));
            return Ok(!self.maximize || done);
        }
        let slot = self.order[depth];
        for x in self.candidates(slot) {
            self.values[slot] = Some(x);
            if self.hard_fails(slot) {
                continue;
            }
            if self.maximize {
                if let Some((best, _)) = &self.best {
                    if self.soft_bound() <= *best {
                        continue;
                    }
                }
            }
            if self.dfs(depth + 1)? {
                self.values[slot] = None;
                return Ok(true);
            }
        }
        self.values[slot] = None;
        Ok(false)
    }
}

fn floor_ceil(num: i128, den: i128) -> (i128, i128) {
    let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
    let f = num.div_euclid(den);
    let c = if num.rem_euclid(den) == 0 { f } else { f + 1 };
    (f, c)
}

fn is_finite_term(p: &Problem<'_>, t: &CT) -> bool {
    match t {
        CT::App(..) => true,
        CT::Slot(s) => !matches!(p.slots[*s].kind, SlotKind::Int { .. }),
        CT::Ite(_, a, _) => is_finite_term(p, a),
        _ => false,
    }
}

fn attach_atoms<'a>(atoms: &[(&'a CT, &'a CT)], atoms_of: &mut [Vec<(&'a CT, &'a CT)>]) {
    for &(a, b) in atoms {
        let mut s = BTreeSet::new();
        term_slots(a, &mut s);
        term_slots(b, &mut s);
        for x in s {
            atoms_of[x].push((a, b));
        }
    }
}

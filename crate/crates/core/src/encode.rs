//! Compilation of a contract model into named assertion sets.
//!
//! Every claim `c` gets a day variable `d_c` (`-1` = not performed). The
//! formula of a claim states the premises under which it can be performed:
//!
//! * transfer / pay: `d = -1 ∨ (d ≥ due ∧ owner(asset) = debtor)`
//! * warranty: `(d = -1 ∧ m ≥ t) ∨ (closing ≤ d ≤ closing + window ∧ m < t)`
//!   where `m` is the guaranteed measure and `t` its threshold
//! * performance: `d_n = -1 ∨ (d_g ≥ 0 ∧ d_g < d_n ≤ d_g + window)`
//! * compensation: the amount `l` is `max(rate · k, minimum)` with
//!   `k = ⌈(t − m) / unit⌉`, paid within both windows after the assertion
//! * restitution: `d_r = -1 ∨ (d_c = -1 ∧ d_r > due(c))`
//!
//! A consequence claim replaces its primary only when it is exercised: the
//! primary is breached, the consequence's own formula holds, and it is
//! performed. Groups `grp.<primary>` are the disjunction of the primary's
//! formula and its exercised consequences.

use indexmap::IndexMap;
use thiserror::Error;

use crate::logic::{Assertion, AssertionSet, Domain, Formula, FunDecl, Term, VarDecl};
use crate::model::{Claim, ClaimKind, ClaimTerms, ContractModel};

pub const PERSON_SORT: &str = "Person";
pub const OBJECT_SORT: &str = "Object";
pub const OWNER_FN: &str = "owner";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("unknown claim `{0}`")]
    UnknownClaim(String),
    #[error("`{0}` is not a transfer, pay or warranty claim")]
    NotAPrimary(String),
    #[error("`{0}` is not a consequence claim")]
    NotAConsequence(String),
    #[error("`{0}` is not a performance or compensation claim")]
    NotLimited(String),
}

/// The pieces every analysis is assembled from.
#[derive(Debug, Clone)]
pub struct EncodedContract {
    /// Sorts, the ownership function and every variable; no assertions.
    pub declarations: AssertionSet,
    /// `own.<asset>` per property fact.
    pub ownership: Vec<Assertion>,
    /// `dom.<var>` per variable.
    pub domains: Vec<Assertion>,
    /// Performance premise of each claim.
    pub claims: IndexMap<String, Formula>,
    /// `grp.<primary>` per primary claim.
    pub groups: Vec<Assertion>,
    pub soft: Vec<Assertion>,
    /// claim id → day variable.
    pub symbols: IndexMap<String, String>,
    /// compensation claim id → (k variable, amount variable).
    pub amounts: IndexMap<String, (String, String)>,
}

fn day(var: &str) -> Term {
    Term::var(var)
}

fn not_performed(var: &str) -> Formula {
    Formula::eq(day(var), Term::int(-1))
}

fn performed(var: &str) -> Formula {
    Formula::ge(day(var), Term::int(0))
}

fn owner_of(asset: &str) -> Term {
    Term::app(OWNER_FN, Term::member(OBJECT_SORT, asset))
}

fn person(p: &str) -> Term {
    Term::member(PERSON_SORT, p)
}

fn k_var(claim: &str) -> String {
    format!("k_{claim}")
}

fn amount_var(claim: &str) -> String {
    format!("l_{claim}")
}

struct WarrantyParams<'a> {
    day_var: &'a str,
    measure: &'a str,
    threshold: i64,
    assert_window: i64,
    limitation: i64,
}

fn warranty_params<'a>(m: &'a ContractModel, id: &str) -> Option<WarrantyParams<'a>> {
    let claim = m.claims.get(id)?;
    match &claim.terms {
        ClaimTerms::Warranty {
            measure,
            threshold,
            assert_window,
            limitation,
            ..
        } => Some(WarrantyParams {
            day_var: &claim.day_var,
            measure,
            threshold: *threshold,
            assert_window: *assert_window,
            limitation: *limitation,
        }),
        _ => None,
    }
}

fn ceil_div(a: i64, b: i64) -> i64 {
    (a + b - 1).div_euclid(b)
}

/// Breach of a primary claim: an unperformed transfer/pay, or an asserted
/// shortfall of a warranty.
fn breach_formula(m: &ContractModel, primary: &Claim) -> Formula {
    match &primary.terms {
        ClaimTerms::Warranty { .. } => {
            let w = warranty_params(m, &primary.id).expect("warranty");
            Formula::and(vec![
                Formula::le(Term::int(m.closing_day), day(w.day_var)),
                Formula::le(day(w.day_var), Term::int(m.closing_day + w.assert_window)),
                Formula::lt(Term::var(w.measure), Term::int(w.threshold)),
            ])
        }
        _ => not_performed(&primary.day_var),
    }
}

fn claim_formula(m: &ContractModel, claim: &Claim) -> Formula {
    let d = claim.day_var.as_str();
    match &claim.terms {
        ClaimTerms::Transfer { asset, due } | ClaimTerms::Pay { asset, due } => Formula::or(vec![
            not_performed(d),
            Formula::and(vec![
                Formula::ge(day(d), Term::int(*due)),
                Formula::eq(owner_of(asset), person(&claim.debtor)),
            ]),
        ]),
        ClaimTerms::Warranty { .. } => {
            let w = warranty_params(m, &claim.id).expect("warranty");
            Formula::or(vec![
                Formula::and(vec![
                    not_performed(d),
                    Formula::ge(Term::var(w.measure), Term::int(w.threshold)),
                ]),
                breach_formula(m, claim),
            ])
        }
        ClaimTerms::Performance {
            primary,
            perform_window,
        } => {
            let g = &m.claims[primary].day_var;
            Formula::or(vec![
                not_performed(d),
                Formula::and(vec![
                    performed(g),
                    Formula::lt(day(g), day(d)),
                    Formula::le(day(d), day(g).plus(Term::int(*perform_window))),
                ]),
            ])
        }
        ClaimTerms::Compensation {
            primary,
            perform_window,
            pay_window,
            rate,
            unit,
            minimum,
        } => {
            let w = warranty_params(m, primary).expect("warranty primary");
            let g = w.day_var;
            let k = || Term::var(k_var(&claim.id));
            let l = || Term::var(amount_var(&claim.id));
            let shortfall = || Term::int(w.threshold).minus(Term::var(w.measure));
            let amount = Formula::implies(
                performed(d),
                Formula::and(vec![
                    Formula::ge(shortfall(), Term::int(1)),
                    Formula::lt(k().scaled(*unit).minus(Term::int(*unit)), shortfall()),
                    Formula::le(shortfall(), k().scaled(*unit)),
                    Formula::ge(k(), Term::int(1)),
                    Formula::ge(l(), k().scaled(*rate)),
                    Formula::ge(l(), Term::int(*minimum)),
                    Formula::or(vec![
                        Formula::eq(l(), k().scaled(*rate)),
                        Formula::eq(l(), Term::int(*minimum)),
                    ]),
                ]),
            );
            Formula::and(vec![
                amount,
                Formula::or(vec![
                    Formula::and(vec![not_performed(d), Formula::eq(l(), Term::int(0))]),
                    Formula::and(vec![
                        performed(g),
                        Formula::lt(day(g), day(d)),
                        Formula::le(day(d), day(g).plus(Term::int(perform_window + pay_window))),
                    ]),
                ]),
            ])
        }
        ClaimTerms::Restitution { primary } => {
            let c = &m.claims[primary];
            let due = m.due_day(primary).unwrap_or(m.closing_day);
            Formula::or(vec![
                not_performed(d),
                Formula::and(vec![
                    not_performed(&c.day_var),
                    Formula::gt(day(d), Term::int(due)),
                ]),
            ])
        }
    }
}

fn declarations(m: &ContractModel) -> (AssertionSet, IndexMap<String, (String, String)>) {
    let mut decls = AssertionSet::default();
    decls
        .sorts
        .insert(PERSON_SORT.into(), m.parties.keys().cloned().collect());
    if !m.assets.is_empty() {
        decls
            .sorts
            .insert(OBJECT_SORT.into(), m.assets.keys().cloned().collect());
        decls.functions.insert(
            OWNER_FN.into(),
            FunDecl {
                domain: OBJECT_SORT.into(),
                codomain: PERSON_SORT.into(),
            },
        );
    }

    let day_decl = || VarDecl::new(Domain::Day { horizon: m.horizon });
    let mut amounts = IndexMap::new();

    // Measure bounds and hints over every warranty sharing the measure.
    let mut measures: IndexMap<&str, (i64, Vec<i64>)> = IndexMap::new();
    for claim in m.claims.values() {
        if let ClaimTerms::Warranty {
            measure, threshold, ..
        } = &claim.terms
        {
            let unit = m
                .consequences_of(&claim.id)
                .iter()
                .find_map(|c| match c.terms {
                    ClaimTerms::Compensation { unit, .. } => Some(unit),
                    _ => None,
                })
                .unwrap_or(1);
            let t = *threshold;
            let entry = measures.entry(measure).or_insert((0, Vec::new()));
            entry.0 = entry.0.max(2 * t);
            entry.1.extend([0, t - unit, t - 1, t, t + 1, 2 * t]);
        }
    }

    for primary in m.claims.values().filter(|c| c.kind().is_primary()) {
        decls.vars.insert(primary.day_var.clone(), day_decl());
        if let ClaimTerms::Warranty { measure, .. } = &primary.terms {
            if !decls.vars.contains_key(measure) {
                let (hi, hints) = &measures[measure.as_str()];
                let mut hints: Vec<i64> = hints
                    .iter()
                    .copied()
                    .filter(|h| (0..=*hi).contains(h))
                    .collect();
                hints.sort_unstable();
                hints.dedup();
                decls.vars.insert(
                    measure.clone(),
                    VarDecl {
                        domain: Domain::Range { lo: 0, hi: *hi },
                        hints,
                    },
                );
            }
        }
        for cons in m.consequences_of(&primary.id) {
            decls.vars.insert(cons.day_var.clone(), day_decl());
            if let ClaimTerms::Compensation {
                rate,
                unit,
                minimum,
                ..
            } = cons.terms
            {
                let t = warranty_params(m, &primary.id).map_or(0, |w| w.threshold);
                let k_max = ceil_div(t.max(0), unit).max(1);
                let (k, l) = (k_var(&cons.id), amount_var(&cons.id));
                decls
                    .vars
                    .insert(k.clone(), VarDecl::new(Domain::Range { lo: 0, hi: k_max }));
                decls.vars.insert(
                    l.clone(),
                    VarDecl::new(Domain::Range {
                        lo: 0,
                        hi: (rate * k_max).max(minimum),
                    }),
                );
                amounts.insert(cons.id.clone(), (k, l));
            }
        }
    }
    (decls, amounts)
}

fn domain_formula(var: &str, domain: &Domain) -> Formula {
    match *domain {
        Domain::Day { horizon } => Formula::or(vec![
            not_performed(var),
            Formula::and(vec![
                performed(var),
                Formula::le(day(var), Term::int(horizon)),
            ]),
        ]),
        Domain::Range { lo, hi } => Formula::and(vec![
            Formula::ge(Term::var(var), Term::int(lo)),
            Formula::le(Term::var(var), Term::int(hi)),
        ]),
        Domain::Bool | Domain::Finite(_) => Formula::Const(true),
    }
}

/// Compiles every claim of the model.
pub fn encode_contract(m: &ContractModel) -> EncodedContract {
    let (declarations, amounts) = declarations(m);
    let dates = Some(m.dates_block.as_str());

    let ownership = m
        .facts
        .iter()
        .map(|f| {
            Assertion::new(
                format!("own.{}", f.asset),
                Formula::eq(owner_of(&f.asset), person(&f.owner)),
                Some(&f.id),
            )
        })
        .collect();

    let domains = declarations
        .vars
        .iter()
        .map(|(var, decl)| {
            Assertion::new(
                format!("dom.{var}"),
                domain_formula(var, &decl.domain),
                dates,
            )
        })
        .collect();

    let claims: IndexMap<String, Formula> = m
        .claims
        .values()
        .map(|c| (c.id.clone(), claim_formula(m, c)))
        .collect();

    let groups = m
        .claims
        .values()
        .filter(|c| c.kind().is_primary())
        .map(|p| {
            let mut disjuncts = vec![claims[&p.id].clone()];
            for s in m.consequences_of(&p.id) {
                disjuncts.push(Formula::and(vec![
                    breach_formula(m, p),
                    claims[&s.id].clone(),
                    performed(&s.day_var),
                ]));
            }
            Assertion::new(format!("grp.{}", p.id), Formula::or(disjuncts), Some(&p.id))
        })
        .collect();

    let soft = m
        .claims
        .values()
        .filter_map(|c| {
            let f = match c.kind() {
                ClaimKind::Transfer | ClaimKind::Pay => performed(&c.day_var),
                ClaimKind::Warranty | ClaimKind::Performance | ClaimKind::Restitution => {
                    not_performed(&c.day_var)
                }
                ClaimKind::Compensation => return None,
            };
            Some(Assertion::new(format!("soft.{}", c.id), f, Some(&c.id)))
        })
        .collect();

    EncodedContract {
        declarations,
        ownership,
        domains,
        claims,
        groups,
        soft,
        symbols: m
            .claims
            .values()
            .map(|c| (c.id.clone(), c.day_var.clone()))
            .collect(),
        amounts,
    }
}

impl EncodedContract {
    /// Assembles a set from the given assertions, keeping only the variables
    /// they mention and those variables' domain assertions.
    fn assemble(&self, hard: Vec<Assertion>, soft: Vec<Assertion>) -> AssertionSet {
        let mut used = Vec::new();
        for a in hard.iter().chain(&soft) {
            for v in a.formula.vars() {
                if !used.contains(&v) {
                    used.push(v);
                }
            }
        }
        let mut set = AssertionSet {
            sorts: self.declarations.sorts.clone(),
            functions: self.declarations.functions.clone(),
            vars: self
                .declarations
                .vars
                .iter()
                .filter(|(v, _)| used.contains(v))
                .map(|(v, d)| (v.clone(), d.clone()))
                .collect(),
            hard,
            soft,
        };
        let doms: Vec<Assertion> = self
            .domains
            .iter()
            .filter(|a| set.vars.contains_key(&a.name["dom.".len()..]))
            .cloned()
            .collect();
        set.hard.extend(doms);
        set
    }

    fn claim_assertion(&self, id: &str) -> Assertion {
        Assertion::new(format!("claim.{id}"), self.claims[id].clone(), Some(id))
    }

    fn query_assertion(&self, m: &ContractModel, id: &str) -> Assertion {
        Assertion::new(
            format!("query.{id}"),
            performed(&m.claims[id].day_var),
            Some(id),
        )
    }
}

fn lookup<'a>(m: &'a ContractModel, id: &str) -> Result<&'a Claim, EncodeError> {
    m.claims
        .get(id)
        .ok_or_else(|| EncodeError::UnknownClaim(id.to_string()))
}

/// Whole-contract execution: ownership, one group per primary claim and
/// domains as hard assertions; primary performance and absence of secondary
/// claims as soft ones.
pub fn encode_spa(m: &ContractModel) -> AssertionSet {
    let enc = encode_contract(m);
    let mut hard = enc.ownership.clone();
    hard.extend(enc.groups.iter().cloned());
    enc.assemble(hard, enc.soft.clone())
}

/// Can the primary claim `c` be performed given the ownership facts?
pub fn encode_performability(m: &ContractModel, c: &str) -> Result<AssertionSet, EncodeError> {
    let claim = lookup(m, c)?;
    if !claim.kind().is_primary() {
        return Err(EncodeError::NotAPrimary(c.to_string()));
    }
    let enc = encode_contract(m);
    let mut hard = enc.ownership.clone();
    hard.push(enc.claim_assertion(c));
    // A warranty is also honoured by not being asserted.
    if claim.kind() != ClaimKind::Warranty {
        hard.push(enc.query_assertion(m, c));
    }
    Ok(enc.assemble(hard, Vec::new()))
}

/// Can consequence claim `s` be performed once its primary is breached?
pub fn encode_consequence(m: &ContractModel, s: &str) -> Result<AssertionSet, EncodeError> {
    let claim = lookup(m, s)?;
    let primary = claim
        .primary()
        .ok_or_else(|| EncodeError::NotAConsequence(s.to_string()))?;
    let primary = &m.claims[primary];
    let enc = encode_contract(m);
    let mut hard = enc.ownership.clone();
    hard.push(Assertion::new(
        format!("breach.{}", primary.id),
        breach_formula(m, primary),
        Some(&primary.id),
    ));
    hard.push(enc.claim_assertion(&primary.id));
    hard.push(enc.claim_assertion(s));
    hard.push(enc.query_assertion(m, s));
    Ok(enc.assemble(hard, Vec::new()))
}

/// Last day of the window in which consequence `s` may still be performed,
/// relative to the assertion day of its warranty.
pub fn window_end(claim: &Claim) -> Option<i64> {
    match claim.terms {
        ClaimTerms::Performance { perform_window, .. } => Some(perform_window),
        ClaimTerms::Compensation {
            perform_window,
            pay_window,
            ..
        } => Some(perform_window + pay_window),
        _ => None,
    }
}

/// Satisfiable iff the debtor of warranty consequence `s` may lawfully
/// perform after the warranty's limitation has run out.
pub fn encode_limitation(m: &ContractModel, s: &str) -> Result<AssertionSet, EncodeError> {
    let claim = lookup(m, s)?;
    let end = window_end(claim).ok_or_else(|| EncodeError::NotLimited(s.to_string()))?;
    let primary = &m.claims[claim.primary().expect("warranty consequence")];
    let w = warranty_params(m, &primary.id).expect("warranty primary");
    let enc = encode_contract(m);
    let mut hard = enc.ownership.clone();
    hard.extend(enc.groups.iter().cloned());
    hard.push(Assertion::new(
        format!("breach.{}", primary.id),
        breach_formula(m, primary),
        Some(&primary.id),
    ));
    hard.push(Assertion::new(
        format!("limit.{s}"),
        Formula::lt(
            Term::int(m.closing_day + w.limitation),
            day(w.day_var).plus(Term::int(end)),
        ),
        Some(s),
    ));
    Ok(enc.assemble(hard, Vec::new()))
}

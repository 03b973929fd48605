mod support;

use contractcheck_core::{
    analysis_queries, build_model, emit_smtlib, exit_code, maximize_soft, minimize_core,
    parse_blocks, run_analysis, serialize_blocks, solve_bounded, validate_blocks, Analysis,
    Builtin, SolveError, SolverConfig,
};
use proptest::prelude::*;
use support::*;

fn narrow() -> SolverConfig {
    SolverConfig {
        full_domain_cap: 0,
        ..SolverConfig::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn verdict_matches_enumeration(set in assertion_sets()) {
        for cfg in [SolverConfig::default(), narrow()] {
            let r = solve_bounded(&set, &cfg).unwrap();
            prop_assert_eq!(r.is_sat(), oracle_sat(&set));
            if let Some(m) = r.model() {
                prop_assert!(model_satisfies_hard(&set, m));
            }
        }
    }

    #[test]
    fn max_soft_is_optimal(set in assertion_sets()) {
        let best = oracle_max_soft(&set);
        for cfg in [SolverConfig::default(), narrow()] {
            let r = maximize_soft(&set, &cfg).unwrap();
            match r {
                contractcheck_core::SolveResult::Sat { soft_satisfied, .. } => {
                    prop_assert_eq!(Some(soft_satisfied.len()), best)
                }
                _ => prop_assert_eq!(best, None),
            }
        }
    }

    #[test]
    fn cores_are_minimal(set in assertion_sets()) {
        if let Some(core) = solve_bounded(&set, &SolverConfig::default()).unwrap().core() {
            prop_assert!(oracle_minimal_core(&set, core), "core {:?}", core);
            let again = minimize_core(&set, &SolverConfig::default()).unwrap();
            prop_assert!(oracle_minimal_core(&set, &again));
        } else {
            prop_assert_eq!(minimize_core(&set, &SolverConfig::default()), Err(SolveError::NotUnsat));
        }
    }

    #[test]
    fn deterministic(set in assertion_sets()) {
        let cfg = SolverConfig::default();
        prop_assert_eq!(maximize_soft(&set, &cfg).unwrap(), maximize_soft(&set, &cfg).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_contracts_validate(doc in contracts()) {
        prop_assert_eq!(validate_blocks(&doc), vec![]);
    }

    #[test]
    fn block_round_trip(doc in contracts()) {
        let text = serialize_blocks(&doc);
        let back = parse_blocks(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(serialize_blocks(&back), text);
    }

    #[test]
    fn contract_queries_match_enumeration(doc in contracts()) {
        for cfg in [SolverConfig::default(), narrow()] {
            compare_contract(&doc, &cfg).map_err(TestCaseError::fail)?;
        }
    }

    #[test]
    fn limitation_days_are_earliest(doc in contracts()) {
        compare_limitation_days(&doc, &SolverConfig::default()).map_err(TestCaseError::fail)?;
    }
}

fn parsed(doc: &contractcheck_core::BlockDocument) -> contractcheck_core::ContractModel {
    build_model(&parse_blocks(&serialize_blocks(doc)).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parsing_is_total(lines in prop::collection::vec(
        prop_oneof![
            Just("block Party Eva".to_string()),
            Just("block Nonsense X".to_string()),
            Just("end".to_string()),
            Just("  role: Seller".to_string()),
            Just("  role: Seller".to_string()),
            Just("  amount: 12x".to_string()),
            Just("# note".to_string()),
            Just(String::new()),
            "[ -~]{0,12}",
        ],
        0..12,
    )) {
        let text = lines.join("\n");
        if let Err(e) = parse_blocks(&text) {
            prop_assert!(e.line >= 1 && e.line <= lines.len().max(1), "{e:?}");
        }
    }

    #[test]
    fn diagnostics_follow_block_order(doc in contracts(), picks in prop::collection::vec(any::<prop::sample::Index>(), 1..3)) {
        let mut broken = doc.clone();
        for p in &picks {
            let block = &mut broken.blocks[p.index(doc.blocks.len())];
            if block.attrs.is_empty() {
                continue;
            }
            let i = p.index(block.attrs.len());
            block.attrs.shift_remove_index(i);
        }
        let diags = validate_blocks(&broken);
        prop_assert!(!diags.is_empty());
        prop_assert_eq!(&diags, &validate_blocks(&broken));
        let position = |d: &contractcheck_core::Diagnostic| {
            d.block.as_ref().map_or(usize::MAX, |id| broken.blocks.iter().position(|b| &b.id == id).unwrap())
        };
        let order: Vec<usize> = diags.iter().map(position).collect();
        prop_assert!(order.windows(2).all(|w| w[0] <= w[1]), "{:?}", diags);
    }

    #[test]
    fn distinct_documents_give_distinct_models(doc in contracts(), pick in any::<prop::sample::Index>()) {
        let mut other = doc.clone();
        let ints: Vec<(usize, String)> = doc.blocks.iter().enumerate()
            .flat_map(|(i, b)| b.attrs.iter().filter(|(_, v)| v.as_int().is_some()).map(move |(k, _)| (i, k.clone())))
            .collect();
        let (i, key) = &ints[pick.index(ints.len())];
        let v = other.blocks[*i].attrs[key].as_int().unwrap();
        other.blocks[*i].attrs.insert(key.clone(), contractcheck_core::AttrValue::Int(v + 1));
        prop_assume!(validate_blocks(&other).is_empty());
        prop_assert_ne!(build_model(&doc).unwrap(), build_model(&other).unwrap());
    }

    #[test]
    fn encodings_are_closed_and_mapped(doc in contracts()) {
        let m = parsed(&doc);
        for q in analysis_queries(&m, Analysis::All).unwrap() {
            prop_assert_eq!(q.set.check(), Ok(()), "{}", q.label());
            for a in q.set.hard.iter().chain(&q.set.soft) {
                let block = a.block.as_deref().unwrap();
                let (_, span) = m.block_of(block).unwrap();
                prop_assert!(span.line_start >= 1 && span.line_start <= span.line_end);
            }
        }
    }

    #[test]
    fn adding_hard_assertions_keeps_unsat(set in assertion_sets(), extra in assertion_sets()) {
        prop_assume!(!oracle_sat(&set));
        let mut more = set.clone();
        for (i, mut a) in extra.hard.into_iter().enumerate() {
            a.formula = rename_vars(&a.formula, set.vars.len());
            a.name = format!("extra{i}");
            more.hard.push(a);
        }
        prop_assert!(!solve_bounded(&more, &SolverConfig::default()).unwrap().is_sat());
    }

    #[test]
    fn emission_and_results_are_deterministic(set in assertion_sets()) {
        prop_assert_eq!(emit_smtlib(&set), emit_smtlib(&set.clone()));
        let cfg = SolverConfig::default();
        let a = serde_json::to_string(&maximize_soft(&set, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&maximize_soft(&set.clone(), &cfg).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn reports_are_faithful(doc in contracts()) {
        let m = parsed(&doc);
        let report = run_analysis(&m, Analysis::All, &Builtin::default(), "random").unwrap();
        prop_assert_eq!(exit_code(&report) == 3, false);
        for v in &report.verdicts {
            for c in v.core_blocks.iter().flatten() {
                prop_assert!(m.block_of(&c.block).is_some() && c.line_start >= 1);
            }
        }
        let exec = report.execution.unwrap();
        let w = exec.witness.unwrap();
        let mut performed: Vec<&str> = m.claims.values()
            .filter(|c| w.int(&c.day_var).is_some_and(|d| d >= 0))
            .map(|c| c.id.as_str())
            .collect();
        let mut timeline: Vec<&str> = exec.timeline.iter().map(|e| e.claim.as_str()).collect();
        performed.sort();
        timeline.sort();
        prop_assert_eq!(performed, timeline);
        prop_assert_eq!(exec.unperformed.len() + exec.timeline.len(), m.claims.len());
    }
}

/// Maps variables of a second random set into the first one's variables so
/// the combined set stays well-formed.
fn rename_vars(f: &contractcheck_core::Formula, n: usize) -> contractcheck_core::Formula {
    use contractcheck_core::{Formula, Term};
    fn term(t: &Term, n: usize) -> Term {
        match t {
            Term::Var(v) => {
                let i: usize = v[1..].parse().unwrap();
                Term::var(format!("d{}", i % n))
            }
            Term::App { func, arg } => Term::app(func.clone(), term(arg, n)),
            Term::Add(a, b) => Term::Add(Box::new(term(a, n)), Box::new(term(b, n))),
            Term::Sub(a, b) => Term::Sub(Box::new(term(a, n)), Box::new(term(b, n))),
            Term::Scale(k, a) => Term::Scale(*k, Box::new(term(a, n))),
            Term::Ite(c, a, b) => Term::Ite(
                Box::new(rename_vars(c, n)),
                Box::new(term(a, n)),
                Box::new(term(b, n)),
            ),
            other => other.clone(),
        }
    }
    match f {
        Formula::Eq(a, b) => Formula::Eq(term(a, n), term(b, n)),
        Formula::Cmp(op, a, b) => Formula::Cmp(*op, term(a, n), term(b, n)),
        Formula::Not(g) => Formula::not(rename_vars(g, n)),
        Formula::And(gs) => Formula::And(gs.iter().map(|g| rename_vars(g, n)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| rename_vars(g, n)).collect()),
        Formula::Implies(a, b) => Formula::implies(rename_vars(a, n), rename_vars(b, n)),
        other => other.clone(),
    }
}

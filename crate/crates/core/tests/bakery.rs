mod support;

use std::time::Instant;

use contractcheck_core::{
    build_model, encode_consequence, encode_limitation, encode_performability, encode_spa,
    evaluate_formula, maximize_soft, parse_blocks, solve_bounded, AssertionSet, ContractModel,
    SolveResult, SolverConfig, BAKERY_FIXTURE,
};

fn bakery() -> ContractModel {
    build_model(&parse_blocks(BAKERY_FIXTURE).unwrap()).unwrap()
}

fn sound(set: &AssertionSet, r: &SolveResult) {
    if let Some(m) = r.model() {
        for a in &set.hard {
            assert!(evaluate_formula(&a.formula, m).unwrap(), "{} false", a.name);
        }
        assert!(support::model_satisfies_hard(set, m));
    }
}

fn solve(set: &AssertionSet) -> SolveResult {
    let t = Instant::now();
    let r = solve_bounded(set, &SolverConfig::default()).unwrap();
    eprintln!("{:?} {:?}", t.elapsed(), r);
    sound(set, &r);
    r
}

#[test]
fn transfer_is_not_performable() {
    let r = solve(&encode_performability(&bakery(), "Transfer").unwrap());
    assert_eq!(
        r.core().unwrap(),
        ["own.Bakery", "claim.Transfer", "query.Transfer"]
    );
}

#[test]
fn pay_and_warranty_witnesses() {
    let m = bakery();
    let r = solve(&encode_performability(&m, "Pay").unwrap());
    let w = r.model().unwrap();
    assert!(w.int("d_Pay").unwrap() >= 28);
    assert_eq!(w.apply("owner", "PurchasePrice"), Some("Chris"));
    let r = solve(&encode_performability(&m, "PretzelWarranty").unwrap());
    let w = r.model().unwrap();
    assert_eq!(w.int("d_PretzelWarranty"), Some(-1));
    assert!(w.int("Pretzels").unwrap() >= 10000);
}

#[test]
fn consequences_are_performable() {
    let m = bakery();
    for c in ["Claim1", "Claim2", "ResPurchaser", "ResSeller"] {
        assert!(solve(&encode_consequence(&m, c).unwrap()).is_sat(), "{c}");
    }
}

#[test]
fn execution_violates_only_transfer() {
    let set = encode_spa(&bakery());
    let t = Instant::now();
    let r = maximize_soft(&set, &SolverConfig::default()).unwrap();
    eprintln!("{:?} {:?}", t.elapsed(), r);
    sound(&set, &r);
    let SolveResult::Sat {
        model,
        soft_satisfied,
    } = r
    else {
        panic!()
    };
    assert_eq!(soft_satisfied.len(), 5);
    assert!(!soft_satisfied.contains(&"soft.Transfer".to_string()));
    assert_eq!(model.int("d_Pay"), Some(28));
    for v in [
        "d_Transfer",
        "d_PretzelWarranty",
        "d_Claim1",
        "d_Claim2",
        "d_ResPurchaser",
        "d_ResSeller",
    ] {
        assert_eq!(model.int(v), Some(-1), "{v}");
    }
}

#[test]
fn execution_without_security_satisfies_everything() {
    let doc = parse_blocks(BAKERY_FIXTURE)
        .unwrap()
        .without(&["BankSecurity"]);
    let set = encode_spa(&build_model(&doc).unwrap());
    let r = maximize_soft(&set, &SolverConfig::default()).unwrap();
    sound(&set, &r);
    let SolveResult::Sat {
        model,
        soft_satisfied,
    } = r
    else {
        panic!()
    };
    assert_eq!(soft_satisfied.len(), 6);
    assert!(model.int("d_Transfer").unwrap() >= 28);
    assert!(model.int("d_Pay").unwrap() >= 28);
}

#[test]
fn limitation() {
    let m = bakery();
    let r = solve(&encode_limitation(&m, "Claim2").unwrap());
    assert_eq!(r.model().unwrap().int("d_PretzelWarranty"), Some(29));
    assert!(!solve(&encode_limitation(&m, "Claim1").unwrap()).is_sat());
}

#[test]
fn wide_search_agrees() {
    let m = bakery();
    let cfg = SolverConfig {
        full_domain_cap: 0,
        ..Default::default()
    };
    let t = encode_performability(&m, "Transfer").unwrap();
    assert!(!solve_bounded(&t, &cfg).unwrap().is_sat());
    let c2 = encode_consequence(&m, "Claim2").unwrap();
    let r = solve_bounded(&c2, &cfg).unwrap();
    sound(&c2, &r);
    let l = encode_limitation(&m, "Claim2").unwrap();
    assert_eq!(
        solve_bounded(&l, &cfg)
            .unwrap()
            .model()
            .unwrap()
            .int("d_PretzelWarranty"),
        Some(29)
    );
    let r = maximize_soft(&encode_spa(&m), &cfg).unwrap();
    let SolveResult::Sat { soft_satisfied, .. } = r else {
        panic!()
    };
    assert_eq!(soft_satisfied.len(), 5);
}

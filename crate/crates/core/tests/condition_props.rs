use proptest::prelude::*;
use xlperm::mapping::{app_assumptions, CheckAtom, Condition};

fn atom_strategy() -> impl Strategy<Value = CheckAtom> {
    prop_oneof![
        Just(CheckAtom::Permission("p.A".into())),
        Just(CheckAtom::Permission("p.B".into())),
        Just(CheckAtom::UidEq("AID_SYSTEM".into())),
        Just(CheckAtom::PidSelf),
    ]
}

fn cond_strategy() -> impl Strategy<Value = Condition> {
    let leaf = prop_oneof![
        8 => atom_strategy().prop_map(Condition::Atom),
        1 => Just(Condition::True),
        1 => Just(Condition::Unsatisfiable),
    ];
    leaf.prop_recursive(4, 32, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(Condition::And),
            prop::collection::vec(inner, 0..4).prop_map(Condition::Or),
        ]
    })
}


fn all_atoms() -> Vec<CheckAtom> {
    vec![
        CheckAtom::Permission("p.A".into()),
        CheckAtom::Permission("p.B".into()),
        CheckAtom::UidEq("AID_SYSTEM".into()),
        CheckAtom::PidSelf,
    ]
}

/// Reference evaluation, independent of the library's.
fn truth(c: &Condition, on: &dyn Fn(&CheckAtom) -> bool) -> bool {
    match c {
        Condition::True => true,
        Condition::Unsatisfiable => false,
        Condition::Atom(a) => on(a),
        Condition::And(cs) => cs.iter().fold(true, |acc, x| acc & truth(x, on)),
        Condition::Or(cs) => cs.iter().fold(false, |acc, x| acc | truth(x, on)),
    }
}

fn table(c: &Condition) -> Vec<bool> {
    let atoms = all_atoms();
    (0u32..16)
        .map(|bits| truth(c, &|a| bits >> atoms.iter().position(|b| b == a).unwrap() & 1 == 1))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn normalize_preserves_truth_table(c in cond_strategy()) {
        prop_assert_eq!(table(&c), table(&c.normalize()));
    }

    #[test]
    fn normalize_is_idempotent(c in cond_strategy()) {
        let n = c.normalize();
        prop_assert_eq!(n.normalize(), n);
    }

    #[test]
    fn simplify_agrees_on_consistent_assignments(c in cond_strategy()) {
        let s = c.simplify(&app_assumptions);
        let atoms = all_atoms();
        for bits in 0u32..16 {
            let raw = |a: &CheckAtom| bits >> atoms.iter().position(|b| b == a).unwrap() & 1 == 1;
            let fixed = |a: &CheckAtom| app_assumptions(a).unwrap_or_else(|| raw(a));
            prop_assert_eq!(truth(&c, &fixed), truth(&s, &raw));
        }
        prop_assert!(s.atoms().iter().all(|a| app_assumptions(a).is_none()));
    }

    #[test]
    fn and_or_are_commutative(a in cond_strategy(), b in cond_strategy()) {
        prop_assert_eq!(Condition::and(vec![a.clone(), b.clone()]), Condition::and(vec![b.clone(), a.clone()]));
        prop_assert_eq!(Condition::or(vec![a.clone(), b.clone()]), Condition::or(vec![b, a]));
    }

    #[test]
    fn duplicates_collapse(a in cond_strategy()) {
        prop_assert_eq!(Condition::or(vec![a.clone(), a.clone()]), a.normalize());
        prop_assert_eq!(Condition::and(vec![a.clone(), a.clone()]), a.normalize());
    }

    #[test]
    fn json_round_trip(c in cond_strategy()) {
        let n = c.normalize();
        prop_assert_eq!(Condition::from_json(&n.to_json()).unwrap(), n);
    }
}

#[test]
fn constants_fold() {
    let a = Condition::permission("p.A");
    assert_eq!(Condition::or(vec![a.clone(), Condition::True]), Condition::True);
    assert_eq!(Condition::and(vec![a.clone(), Condition::Unsatisfiable]), Condition::Unsatisfiable);
    assert_eq!(Condition::and(vec![a.clone(), Condition::True]), a);
    assert_eq!(Condition::and(vec![]), Condition::True);
    assert_eq!(Condition::or(vec![]), Condition::Unsatisfiable);
}

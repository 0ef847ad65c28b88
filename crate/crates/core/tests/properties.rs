use proptest::prelude::*;

use pss_core::harness::enumerate::enum_terms_over;
use pss_core::harness::{enum_terms, gen_wf_term, EnumSpec, GenConfig};
use pss_core::reduce::{beta_step_all, equiv_step_all, normalize, NormalizeOutcome, Strategy as Order};
use pss_core::subtype::{check_rel, sub_step_all, RelKind, RelOutcome};
use pss_core::{Budget, ExtContext, Name, Term};

/// Nameless form built independently of the library's canonical keys.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Db {
    Free(String),
    Bound(usize),
    Top,
    Abs(Box<Db>, Box<Db>),
    App(Box<Db>, Box<Db>),
}

fn db(t: &Term, env: &mut Vec<Name>) -> Db {
    match t {
        Term::Top => Db::Top,
        Term::Var(x) => match env.iter().rev().position(|y| y == x) {
            Some(i) => Db::Bound(i),
            None => Db::Free(x.as_str().to_string()),
        },
        Term::Abs(x, a, b) => {
            let a = db(a, env);
            env.push(x.clone());
            let b = db(b, env);
            env.pop();
            Db::Abs(Box::new(a), Box::new(b))
        }
        Term::App(f, v) => Db::App(Box::new(db(f, env)), Box::new(db(v, env))),
    }
}

fn to_db(t: &Term) -> Db {
    db(t, &mut Vec::new())
}

fn shift(t: &Db, by: usize, cutoff: usize) -> Db {
    match t {
        Db::Bound(i) if *i >= cutoff => Db::Bound(i + by),
        Db::Abs(a, b) => Db::Abs(Box::new(shift(a, by, cutoff)), Box::new(shift(b, by, cutoff + 1))),
        Db::App(f, v) => Db::App(Box::new(shift(f, by, cutoff)), Box::new(shift(v, by, cutoff))),
        other => other.clone(),
    }
}

/// Replaces the free name `x` by `v`, below `depth` binders.
fn db_subst_free(t: &Db, x: &str, v: &Db, depth: usize) -> Db {
    match t {
        Db::Free(y) if y == x => shift(v, depth, 0),
        Db::Abs(a, b) => Db::Abs(
            Box::new(db_subst_free(a, x, v, depth)),
            Box::new(db_subst_free(b, x, v, depth + 1)),
        ),
        Db::App(f, w) => Db::App(
            Box::new(db_subst_free(f, x, v, depth)),
            Box::new(db_subst_free(w, x, v, depth)),
        ),
        other => other.clone(),
    }
}

fn arb_term() -> impl proptest::strategy::Strategy<Value = Term> {
    let leaf = prop_oneof![
        Just(Term::Top),
        prop::sample::select(vec!["x", "y", "z"]).prop_map(Term::var),
    ];
    leaf.prop_recursive(5, 24, 2, |inner| {
        prop_oneof![
            (prop::sample::select(vec!["x", "y", "z", "w"]), inner.clone(), inner.clone())
                .prop_map(|(x, a, b)| Term::abs(x, a, b)),
            (inner.clone(), inner).prop_map(|(f, v)| Term::app(f, v)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn alpha_eq_matches_nameless_form(a in arb_term(), b in arb_term()) {
        prop_assert_eq!(a == b, to_db(&a) == to_db(&b));
        prop_assert_eq!(a.canon_key() == b.canon_key(), to_db(&a) == to_db(&b));
    }

    #[test]
    fn renaming_binders_preserves_alpha_class(t in arb_term()) {
        let r = t.with_distinct_binders();
        prop_assert_eq!(to_db(&r), to_db(&t));
    }

    #[test]
    fn substitution_avoids_capture(t in arb_term(), v in arb_term()) {
        let x = Name::new("x");
        let got = to_db(&t.subst(&x, &v));
        let want = db_subst_free(&to_db(&t), "x", &to_db(&v), 0);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn beta_steps_are_equivalence_steps(t in arb_term()) {
        let eq = equiv_step_all(&t);
        for r in beta_step_all(&t).iter() {
            prop_assert!(eq.contains(r));
        }
    }

    #[test]
    fn one_step_relations_are_reflexive(t in arb_term()) {
        prop_assert!(equiv_step_all(&t).contains(&t));
        let sub = sub_step_all(&ExtContext::empty(), &t).unwrap();
        prop_assert!(sub.contains(&t));
        prop_assert!(sub.contains(&Term::Top));
    }

    #[test]
    fn subtyping_contains_equivalence(t in arb_term()) {
        let ctx = ExtContext::empty()
            .push_annot("x", Term::Top)
            .push_annot("y", Term::var("x"))
            .push_annot("z", Term::abs("a", Term::Top, Term::var("a")));
        let sub = sub_step_all(&ctx, &t).unwrap();
        for r in equiv_step_all(&t).iter() {
            prop_assert!(sub.contains(r));
        }
    }

    #[test]
    fn substitution_commutes_with_equivalence_steps(t in arb_term(), v in arb_term()) {
        let x = Name::new("x");
        let after = equiv_step_all(&t.subst(&x, &v));
        for r in equiv_step_all(&t).iter() {
            prop_assert!(after.contains(&r.subst(&x, &v)), "{} lost", r);
        }
    }
}

#[test]
fn normal_forms_agree_across_strategies() {
    let terms = enum_terms(&EnumSpec::terms(6, &["x", "y"]));
    let mut compared = 0;
    for t in &terms {
        let mut b1 = Budget::new(200);
        let mut b2 = Budget::new(200);
        let a = normalize(t, &mut b1);
        let b = pss_core::reduce::normalize_with(t, Order::RightmostInnermost, &mut b2);
        if let (NormalizeOutcome::Normal { term: a, .. }, NormalizeOutcome::Normal { term: b, .. }) = (a, b) {
            assert_eq!(a, b, "normal forms of {t} differ");
            compared += 1;
        }
    }
    assert!(compared * 10 >= terms.len() * 9, "{compared} of {}", terms.len());
}

/// Terms of exactly `n` nodes with `k` names in scope.
fn count(n: usize, k: usize, memo: &mut std::collections::HashMap<(usize, usize), u64>) -> u64 {
    if let Some(c) = memo.get(&(n, k)) {
        return *c;
    }
    let c = match n {
        0 | 2 => 0,
        1 => 1 + k as u64,
        _ => (1..n - 1)
            .map(|l| count(l, k, memo) * (count(n - 1 - l, k, memo) + count(n - 1 - l, k + 1, memo)))
            .sum(),
    };
    memo.insert((n, k), c);
    c
}

#[test]
fn enumeration_counts_match_recurrence() {
    let mut memo = Default::default();
    for (alphabet, max) in [(vec!["x"], 5), (vec!["x", "y"], 6), (vec![], 7)] {
        let names: Vec<Name> = alphabet.iter().map(|s| Name::new(s)).collect();
        let terms = enum_terms_over(max, &names);
        let want: u64 = (1..=max).map(|n| count(n, names.len(), &mut memo)).sum();
        assert_eq!(terms.len() as u64, want);
        let mut keys: Vec<_> = terms.iter().map(Term::canon_key).collect();
        keys.sort_by(|a, b| a.as_str().cmp(b.as_str()));
        keys.dedup();
        assert_eq!(keys.len(), terms.len(), "duplicate alpha classes");
    }
    assert_eq!(enum_terms(&EnumSpec::terms(5, &["x", "y"])).len(), 342);
}

#[test]
fn generator_is_reproducible() {
    let runs: Vec<Vec<String>> = (0..2)
        .map(|_| {
            (0..20)
                .filter_map(|s| gen_wf_term(&GenConfig::new(s, 9)))
                .map(|(_, t)| t.to_string())
                .collect()
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert!(runs[0].len() >= 18);
}

#[test]
fn top_is_maximal() {
    for t in enum_terms(&EnumSpec::terms(4, &[])) {
        let mut b = Budget::new(2_000);
        match check_rel(&ExtContext::empty(), &t, &Term::Top, RelKind::Sub, &mut b).unwrap() {
            RelOutcome::Yes(_) => {}
            other => panic!("{t} not below Top: {other:?}"),
        }
    }
}

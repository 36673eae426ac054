use proptest::prelude::*;

use funk::ast::{fv_type, Effect, EffectAtom, Type};
use funk::diff::diff_program;
use funk::frontend::parse_type;
use funk::gen::generate_programs;
use funk::machine::{drop, Value, ValueStack};
use funk::subst::subst_atom_type;
use funk::typecheck::{satisfies, StackTyping};

const VARS: [&str; 3] = ["x", "y", "z"];

fn var() -> impl Strategy<Value = String> {
    prop::sample::select(&VARS[..]).prop_map(str::to_string)
}

fn effect() -> impl Strategy<Value = Effect> {
    prop::collection::vec(var(), 0..3).prop_map(Effect::from_vars)
}

fn ty() -> impl Strategy<Value = Type> {
    let leaf = prop_oneof![Just(Type::Int), Just(Type::IntList)];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            (prop::collection::vec(inner.clone(), 0..3), inner.clone(), effect())
                .prop_map(|(ps, r, e)| Type::func(ps, r, e)),
            (var(), prop::collection::vec(inner.clone(), 0..2), inner, effect())
                .prop_map(|(x, ps, r, e)| Type::eff_all(x, Type::func(ps, r, e))),
        ]
    })
}

proptest! {
    #[test]
    fn union_is_commutative(a in effect(), b in effect()) {
        prop_assert_eq!(a.union(&b), b.union(&a));
    }

    #[test]
    fn substitution_commutes_with_free_variables(t in ty(), x in var(), i in 0usize..4) {
        let loc = EffectAtom::loc(i, Type::Int);
        let before = fv_type(&t);
        let mut expected = before.minus(&Effect::from_vars([x.clone()]));
        if before.contains_var(&x) {
            expected.insert(loc.clone());
        }
        prop_assert_eq!(fv_type(&subst_atom_type(&x, &loc, &t)), expected);
    }

    #[test]
    fn printed_types_parse_back(t in ty()) {
        prop_assert_eq!(parse_type(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn satisfaction_is_downward_closed(
        types in prop::collection::vec(prop_oneof![Just(Type::Int), Just(Type::IntList)], 0..5),
        picks in prop::collection::vec((0usize..6, any::<bool>()), 0..5),
    ) {
        let sigma = StackTyping(types);
        let phi1: Effect = picks
            .iter()
            .map(|&(i, _)| EffectAtom::loc(i, sigma.get(i).cloned().unwrap_or(Type::Int)))
            .collect();
        let phi2: Effect = phi1.iter().zip(&picks).filter(|(_, p)| p.1).map(|(a, _)| a.clone()).collect();
        prop_assert!(!satisfies(&sigma, &phi1) || satisfies(&sigma, &phi2));
    }

    #[test]
    fn dropping_keeps_back_indices(
        (vals, n) in prop::collection::vec(0i64..100, 0..8).prop_flat_map(|v| {
            let len = v.len();
            (Just(v), 0..=len)
        })
    ) {
        let stack: ValueStack = vals.iter().map(|&v| Value::Num(v)).collect();
        let dropped = drop(n, &stack);
        prop_assert_eq!(dropped.len(), vals.len() - n);
        for i in 0..dropped.len() {
            prop_assert_eq!(dropped.get(i), stack.get(i));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_programs_agree_across_semantics(seed in 1000u64..1_000_000) {
        let g = generate_programs(seed, 1, 40).remove(0);
        let d = diff_program(&g.name, &g.compiled.checked, 1_000_000);
        prop_assert!(d.agree && d.region_types_preserved, "{}\n{:?}", g.source, d);
    }
}

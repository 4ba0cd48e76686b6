use melt_core::formula::{parse_formula, Count, ELEMENTS};
use proptest::prelude::*;

fn count_strategy() -> impl Strategy<Value = Count> {
    (1u64..40, prop::sample::select(vec![1u64, 2, 4, 5, 10]))
        .prop_map(|(n, d)| Count::new(n, d).unwrap())
}

fn composition() -> impl Strategy<Value = Vec<(&'static str, Count)>> {
    prop::collection::vec((prop::sample::select(ELEMENTS.to_vec()), count_strategy()), 1..5)
        .prop_map(|mut v| {
            let mut seen = std::collections::HashSet::new();
            v.retain(|(e, _)| seen.insert(*e));
            v
        })
}

fn serialize(comp: &[(&str, Count)]) -> String {
    comp.iter()
        .map(|(e, c)| if *c == Count::ONE { e.to_string() } else { format!("{e}{c}") })
        .collect()
}

proptest! {
    #[test]
    fn generated_formulas_round_trip(comp in composition()) {
        let text = serialize(&comp);
        let parsed = parse_formula(&text);
        prop_assume!(parsed.is_some());
        let parsed = parsed.unwrap();
        prop_assert_eq!(&parsed.elements, &comp);
        let again = parse_formula(&parsed.canonical()).unwrap();
        prop_assert_eq!(again, parsed);
    }

    #[test]
    fn group_multiplier_scales_composition(comp in composition(), n in 2u64..12) {
        let inner = serialize(&comp);
        let base = parse_formula(&inner);
        prop_assume!(base.is_some());
        let base = base.unwrap();
        let grouped = parse_formula(&format!("({inner}){n}")).unwrap();
        let factor = Count::integer(n).unwrap();
        let expected: Vec<_> =
            base.elements.iter().map(|&(e, c)| (e, c.checked_mul(factor).unwrap())).collect();
        prop_assert_eq!(grouped.elements, expected);
    }

    #[test]
    fn lowercase_words_never_parse(word in "[a-z]{1,12}") {
        prop_assert!(parse_formula(&word).is_none());
    }

    #[test]
    fn numbers_never_parse(n in 0u32..100000, frac in proptest::option::of(0u32..1000)) {
        let s = match frac { Some(f) => format!("{n}.{f}"), None => n.to_string() };
        prop_assert!(parse_formula(&s).is_none());
    }
}

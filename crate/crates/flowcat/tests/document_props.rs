#[path = "../../flowcat-core/tests/support/mod.rs"]
mod support;

use flowcat::document::{parse_score, serialize_score};
use flowcat::fixtures::FIXTURES;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn serialize_then_parse_is_identity(seed in any::<u64>()) {
        let mut rng = support::rng(seed);
        let s = support::random_valid_score(&mut rng, 10);
        let text = serialize_score(&s);
        prop_assert_eq!(parse_score(&text).unwrap(), s);
    }

    #[test]
    fn serialized_text_is_a_fixed_point(seed in any::<u64>(), shift in -3i64..=3) {
        let mut rng = support::rng(seed);
        let s = support::random_valid_score(&mut rng, 10).suspend(shift);
        let text = serialize_score(&s);
        prop_assert_eq!(serialize_score(&parse_score(&text).unwrap()), text);
    }

    /// Reordering the lines of a document does not change what it means,
    /// provided `base_degree` stays first.
    #[test]
    fn line_order_is_irrelevant(seed in any::<u64>(), perm_seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut rng = support::rng(seed);
        let s = support::random_valid_score(&mut rng, 10);
        let text = serialize_score(&s);
        let mut lines: Vec<&str> = text.lines().collect();
        let head = lines.remove(0);
        let (objects, mut edges): (Vec<&str>, Vec<&str>) =
            lines.into_iter().partition(|l| l.starts_with("object"));
        let mut objects = objects;
        let mut prng = support::rng(perm_seed);
        objects.shuffle(&mut prng);
        edges.shuffle(&mut prng);
        let shuffled = std::iter::once(head)
            .chain(objects)
            .chain(edges)
            .collect::<Vec<_>>()
            .join("\n");
        prop_assert_eq!(parse_score(&shuffled).unwrap(), s);
    }
}

#[test]
fn fixture_documents_are_canonical_up_to_comments() {
    for f in FIXTURES {
        let s = parse_score(f.text).unwrap();
        let again = parse_score(&serialize_score(&s)).unwrap();
        assert_eq!(again, s, "{}", f.name);
    }
}

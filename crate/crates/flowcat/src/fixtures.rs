//! Score documents shipped with the binary.

use flowcat_core::score::FlowScore;

use crate::document::parse_score;

pub struct Fixture {
    pub name: &'static str,
    pub summary: &'static str,
    pub text: &'static str,
}

pub const FIXTURES: &[Fixture] = &[
    Fixture {
        name: "fix-a",
        summary: "D(b,c) = 3 with eta(a,c) and eta(b,d); names as M(3,1) + B(eps)",
        text: include_str!("../fixtures/fix_a.score"),
    },
    Fixture {
        name: "fix-b",
        summary: "D(b,c) = 3 with eta(b,d) and E(a,d) = 1",
        text: include_str!("../fixtures/fix_b.score"),
    },
    Fixture {
        name: "fix-b-even",
        summary: "D(b,c) = 2 with eta(b,d) and E(a,d) = 1",
        text: include_str!("../fixtures/fix_b_even.score"),
    },
    Fixture {
        name: "fix-b-even-target",
        summary: "fix-b-even with the epsilon entry removed",
        text: include_str!("../fixtures/fix_b_even_target.score"),
    },
    Fixture {
        name: "fix-c",
        summary: "Chang-form score of the knot 13n3663",
        text: include_str!("../fixtures/fix_13n3663.score"),
    },
    Fixture {
        name: "fix-d",
        summary: "Chang-form score of the knot 14n8362",
        text: include_str!("../fixtures/fix_14n8362.score"),
    },
    Fixture {
        name: "moore3-plus-eps",
        summary: "M(Z/3, 1) plus B(eps, 0)",
        text: include_str!("../fixtures/moore3_plus_eps.score"),
    },
    Fixture {
        name: "moore2",
        summary: "M(Z/2, 0)",
        text: include_str!("../fixtures/moore2.score"),
    },
    Fixture {
        name: "moore4",
        summary: "M(Z/4, 0)",
        text: include_str!("../fixtures/moore4.score"),
    },
];

pub fn find(name: &str) -> Option<&'static Fixture> {
    FIXTURES.iter().find(|f| f.name == name)
}

/// Parses an embedded fixture. Panics on an unknown name.
pub fn load(name: &str) -> FlowScore {
    let f = find(name).unwrap_or_else(|| panic!("no fixture named `{name}`"));
    parse_score(f.text).unwrap_or_else(|e| panic!("fixture `{name}`: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_parses() {
        for f in FIXTURES {
            load(f.name);
        }
    }

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = FIXTURES.iter().map(|f| f.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), FIXTURES.len());
    }
}

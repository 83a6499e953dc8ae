mod support;

use flowcat_core::moves::{apply_move, digest, MoveLog, Session};
use flowcat_core::score::{homology, validate};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    /// Homology and the validator are unchanged by every certified move.
    #[test]
    fn certified_moves_are_sound(seed in any::<u64>()) {
        let mut rng = support::rng(seed);
        let s = support::random_valid_score(&mut rng, 10);
        prop_assert!(validate(&s).is_empty());
        let h = homology(&s).unwrap();
        let mut cur = s;
        let mut applied = 0;
        let mut tries = 0;
        while applied < 20 && tries < 1000 {
            tries += 1;
            let Some(m) = support::random_move(&mut rng, &cur) else { continue };
            if let Ok(next) = apply_move(&cur, &m) {
                let report = validate(&next);
                prop_assert!(report.is_empty(), "{m}: {report}");
                prop_assert_eq!(&homology(&next).unwrap(), &h, "after {}", m);
                cur = next;
                applied += 1;
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn logged_sessions_replay(seed in any::<u64>()) {
        let mut rng = support::rng(seed);
        let s = support::random_valid_score(&mut rng, 8);
        let (_, moves) = support::scramble(&mut rng, &s, 10);
        let mut sess = Session::new(s.clone());
        for m in moves {
            sess.apply(m).unwrap();
        }
        let (t, log) = sess.finish();
        let d = digest(&t);
        prop_assert_eq!(log.final_digest.as_deref(), Some(d.as_str()));
        let parsed = MoveLog::parse_trace(&log.to_trace()).unwrap();
        prop_assert_eq!(&parsed, &log);
        prop_assert_eq!(parsed.replay(&s).unwrap(), t);
    }

    #[test]
    fn digest_ignores_insertion_order(seed in any::<u64>()) {
        let mut rng = support::rng(seed);
        let s = support::random_valid_score(&mut rng, 8);
        let mut rebuilt = flowcat_core::score::FlowScore::new(s.base_degree());
        let mut objs: Vec<_> = s.objects().cloned().collect();
        objs.reverse();
        for o in &objs {
            rebuilt.add_object(&o.id, o.level, &o.label).unwrap();
        }
        for (a, b, n) in s.points_entries() {
            rebuilt.set_points(a, b, n.clone()).unwrap();
        }
        for (a, b) in s.eta_entries() {
            rebuilt.set_eta(a, b, true).unwrap();
        }
        for (a, b, e) in s.eps_entries() {
            rebuilt.set_eps(a, b, e).unwrap();
        }
        prop_assert_eq!(digest(&rebuilt), digest(&s));
    }
}

//! Exhaustive checks of specialness and cyclic canonicalization on small
//! words.

use flowcat_core::linalg::{f2_similar, F2Matrix};
use flowcat_core::words::{cyclic_canonical, is_special, Letter, Word};
use num_bigint::BigInt;

const PAYLOADS: [i64; 3] = [2, 4, 8];

fn big(n: i64) -> BigInt {
    BigInt::from(n)
}

/// Every basic word of length at most `max` that starts at `start` and
/// follows the level order, with payloads from [`PAYLOADS`].
fn chains(start: u8, max: usize) -> Vec<Vec<Letter>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![(Vec::<Letter>::new(), start)];
    for _ in 0..max {
        let mut next = Vec::new();
        for (w, level) in frontier {
            let steps: Vec<(Letter, u8)> = match level {
                3 => PAYLOADS.iter().map(|&s| (Letter::S(big(s)), 2)).collect(),
                2 => vec![(Letter::Eta, 0)],
                0 => PAYLOADS.iter().map(|&r| (Letter::R(big(r)), 1)).collect(),
                _ => vec![(Letter::Xi, 3)],
            };
            for (l, to) in steps {
                let mut w2 = w.clone();
                w2.push(l);
                out.push(w2.clone());
                next.push((w2, to));
            }
        }
        frontier = next;
    }
    out
}

#[test]
fn eps_v_is_special_unless_v_is_two_eta() {
    let bad = vec![Letter::S(big(2)), Letter::Eta];
    let vs = chains(3, 4);
    assert_eq!(vs.len(), 1 + 3 + 3 + 9 + 9);
    for v in vs {
        let w = Word::Eps {
            u: vec![],
            v: v.clone(),
        };
        assert_eq!(is_special(&w).unwrap(), v != bad, "{w}");
    }
}

#[test]
fn u_eps_is_special_unless_u_is_two_xi() {
    let bad = vec![Letter::R(big(2)), Letter::Xi];
    for u in chains(0, 4) {
        let w = Word::Eps {
            u: u.clone(),
            v: vec![],
        };
        assert_eq!(is_special(&w).unwrap(), u != bad, "{w}");
    }
}

fn all_matrices(n: usize) -> Vec<F2Matrix> {
    (0..1u32 << (n * n))
        .map(|bits| {
            let mut m = F2Matrix::zeros(n, n);
            for k in 0..n * n {
                if bits >> k & 1 == 1 {
                    m.set(k / n, k % n, true);
                }
            }
            m
        })
        .collect()
}

fn gl(n: usize) -> Vec<F2Matrix> {
    all_matrices(n)
        .into_iter()
        .filter(F2Matrix::is_invertible)
        .collect()
}

fn conjugate(a: &F2Matrix, p: &F2Matrix) -> F2Matrix {
    let pi = p.inverse().unwrap();
    pi.mul(a).unwrap().mul(p).unwrap()
}

#[test]
fn group_orders() {
    assert_eq!(gl(1).len(), 1);
    assert_eq!(gl(2).len(), 6);
    assert_eq!(gl(3).len(), 168);
}

/// Orbit labels of all n×n matrices under conjugation, by brute force.
fn orbit_labels(n: usize) -> Vec<usize> {
    let mats = all_matrices(n);
    let group = gl(n);
    let index = |m: &F2Matrix| {
        let mut bits = 0usize;
        for k in 0..n * n {
            if m.get(k / n, k % n) {
                bits |= 1 << k;
            }
        }
        bits
    };
    let mut label = vec![usize::MAX; mats.len()];
    let mut next = 0;
    for (i, a) in mats.iter().enumerate() {
        if label[i] != usize::MAX {
            continue;
        }
        for p in &group {
            label[index(&conjugate(a, p))] = next;
        }
        next += 1;
    }
    label
}

#[test]
fn f2_similar_matches_orbit_search() {
    for n in 1..=3 {
        let mats = all_matrices(n);
        let label = orbit_labels(n);
        let mut reps: Vec<usize> = Vec::new();
        for (i, &l) in label.iter().enumerate() {
            if reps.iter().all(|&r| label[r] != l) {
                reps.push(i);
            }
        }
        for (i, a) in mats.iter().enumerate() {
            for &r in &reps {
                assert_eq!(
                    f2_similar(a, &mats[r]).unwrap(),
                    label[i] == label[r],
                    "n={n} a={a} b={}",
                    mats[r]
                );
            }
        }
    }
    // Classes of 1×1, 2×2 and 3×3 matrices over F2.
    assert_eq!(orbit_labels(1).iter().max(), Some(&1));
    assert_eq!(orbit_labels(2).iter().max(), Some(&5));
    assert_eq!(orbit_labels(3).iter().max(), Some(&13));
}

fn four_letter_words() -> Vec<Vec<Letter>> {
    let mut out = Vec::new();
    for s in PAYLOADS {
        for r in PAYLOADS {
            out.push(vec![
                Letter::Xi,
                Letter::S(big(s)),
                Letter::Eta,
                Letter::R(big(r)),
            ]);
        }
    }
    out
}

#[test]
fn cyclic_canonical_is_constant_on_conjugation_orbits() {
    for n in 1..=3 {
        let group = gl(n);
        for w in four_letter_words() {
            for a in &group {
                let c = cyclic_canonical(&w, a).unwrap();
                for p in &group {
                    let b = conjugate(a, p);
                    assert_eq!(cyclic_canonical(&w, &b).unwrap(), c, "w={w:?} a={a} p={p}");
                }
            }
        }
    }
}

#[test]
fn cyclic_canonical_is_constant_on_rotations() {
    let w1 = vec![
        Letter::Xi,
        Letter::S(big(2)),
        Letter::Eta,
        Letter::R(big(4)),
        Letter::Xi,
        Letter::S(big(8)),
        Letter::Eta,
        Letter::R(big(2)),
    ];
    let mut w2 = w1[4..].to_vec();
    w2.extend_from_slice(&w1[..4]);
    for a in gl(2) {
        assert_eq!(
            cyclic_canonical(&w1, &a).unwrap(),
            cyclic_canonical(&w2, &a).unwrap()
        );
    }
}

#[test]
fn one_by_one_and_two_by_two_have_distinct_canonical_forms() {
    let w = vec![
        Letter::Xi,
        Letter::S(big(2)),
        Letter::Eta,
        Letter::R(big(4)),
    ];
    let a = F2Matrix::from_rows(&[[1u8]]);
    let b = F2Matrix::from_rows(&[[1u8, 1], [1, 0]]);
    let ca = cyclic_canonical(&w, &a).unwrap();
    let cb = cyclic_canonical(&w, &b).unwrap();
    assert_ne!(ca, cb);
    assert!(ca.special && cb.special);
}

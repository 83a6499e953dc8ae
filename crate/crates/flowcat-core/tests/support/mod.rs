//! Random scores, words and move sequences shared by the integration tests.

#![allow(dead_code)]

use flowcat_core::linalg::F2Matrix;
use flowcat_core::moves::{apply_move, fresh_id, MoveRecord, Sign};
use flowcat_core::score::{disjoint_union, FlowScore};
use flowcat_core::words::{is_special, word_to_score, Letter, Word};
use num_bigint::BigInt;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn power_of_two(rng: &mut StdRng) -> BigInt {
    BigInt::from(*[2, 2, 4, 8].choose(rng).unwrap())
}

/// The letter leaving `level` in a basic word, and the level it reaches.
fn letter_from(rng: &mut StdRng, level: u8) -> (Letter, u8) {
    match level {
        1 => (Letter::Xi, 3),
        3 => (Letter::S(power_of_two(rng)), 2),
        2 => (Letter::Eta, 0),
        _ => (Letter::R(power_of_two(rng)), 1),
    }
}

fn chain_from(rng: &mut StdRng, mut level: u8, len: usize) -> Vec<Letter> {
    let mut w = Vec::with_capacity(len);
    for _ in 0..len {
        let (l, next) = letter_from(rng, level);
        w.push(l);
        level = next;
    }
    w
}

/// A random structurally valid word with at most `max_objects` objects.
pub fn random_word(rng: &mut StdRng, max_objects: usize) -> Word {
    loop {
        let w = match rng.gen_range(0..10) {
            0..=3 => {
                let start = rng.gen_range(0..4u8);
                let len = rng.gen_range(1..max_objects.max(2));
                Word::Basic(chain_from(rng, start, len))
            }
            4..=5 => {
                let (lu, lv) = (rng.gen_range(0..4), rng.gen_range(0..4));
                Word::Central {
                    u: chain_from(rng, 2, lu),
                    t: power_of_two(rng),
                    v: chain_from(rng, 1, lv),
                }
            }
            6..=8 => {
                let (lu, lv) = (rng.gen_range(0..4), rng.gen_range(0..4));
                Word::Eps {
                    u: chain_from(rng, 0, lu),
                    v: chain_from(rng, 3, lv),
                }
            }
            _ => {
                let a = match rng.gen_range(0..3) {
                    0 => F2Matrix::from_rows(&[[1u8]]),
                    1 => F2Matrix::from_rows(&[[1u8, 1], [1, 0]]),
                    _ => F2Matrix::from_rows(&[[0u8, 1], [1, 1]]),
                };
                Word::Cyclic {
                    w: chain_from(rng, 1, 4),
                    a,
                }
            }
        };
        if let Ok(ws) = word_to_score(&w, 0) {
            if ws.score.len() <= max_objects {
                return w;
            }
        }
    }
}

/// A random special word with at most `max_objects` objects.
pub fn random_special_word(rng: &mut StdRng, max_objects: usize) -> Word {
    loop {
        let w = random_word(rng, max_objects);
        if is_special(&w) == Ok(true) {
            return w;
        }
    }
}

fn prefixed(s: &FlowScore, k: usize) -> FlowScore {
    s.with_prefix(&format!("p{k}."))
}

fn small_piece(rng: &mut StdRng) -> FlowScore {
    let mut s = FlowScore::new(0);
    let l = rng.gen_range(0..4u8);
    match rng.gen_range(0..3) {
        0 => s.add_object("x", l, "").unwrap(),
        _ => {
            let l = l.max(1);
            s.add_object("x1", l, "").unwrap();
            s.add_object("x0", l - 1, "").unwrap();
            let d = *[1, 2, 3, 4, 5, 6, 9, 12].choose(rng).unwrap();
            let d = if rng.gen_bool(0.3) { -d } else { d };
            s.set_points("x1", "x0", BigInt::from(d)).unwrap();
        }
    }
    s
}

/// A random valid reduced score with at most `max_objects` objects: a union
/// of word scores and small pieces, mixed by random certified moves.
pub fn random_valid_score(rng: &mut StdRng, max_objects: usize) -> FlowScore {
    let mut s = FlowScore::new(0);
    let mut k = 0;
    while s.len() < max_objects {
        let piece = if rng.gen_bool(0.5) {
            let room = max_objects - s.len();
            if room < 2 {
                small_piece(rng)
            } else {
                word_to_score(&random_word(rng, room), 0).unwrap().score
            }
        } else {
            small_piece(rng)
        };
        if s.len() + piece.len() > max_objects {
            if rng.gen_bool(0.5) {
                break;
            }
            continue;
        }
        s = disjoint_union(&s, &prefixed(&piece, k)).unwrap();
        k += 1;
        if rng.gen_bool(0.3) {
            break;
        }
    }
    s.force_unknown_where_unsupported();
    let (s, _) = scramble(rng, &s, 6);
    s
}

/// A random move that may or may not apply to `s`.
pub fn random_move(rng: &mut StdRng, s: &FlowScore) -> Option<MoveRecord> {
    let ids: Vec<String> = s.ids().cloned().collect();
    let pick = |rng: &mut StdRng| ids.choose(rng).cloned();
    let sign = |rng: &mut StdRng| {
        if rng.gen_bool(0.5) {
            Sign::Plus
        } else {
            Sign::Minus
        }
    };
    match rng.gen_range(0..11) {
        0..=7 => {
            let level = rng.gen_range(0..4u8);
            let at = s.at_level(level);
            if at.len() < 2 {
                return None;
            }
            let src = at.choose(rng).unwrap().clone();
            let dst = at.choose(rng).unwrap().clone();
            if src == dst {
                return None;
            }
            Some(MoveRecord::Slide {
                level,
                src,
                dst,
                sign: sign(rng),
                count: BigInt::from(rng.gen_range(1..3)),
            })
        }
        8 => Some(MoveRecord::Trick2 {
            b: pick(rng)?,
            c: pick(rng)?,
        }),
        9 => Some(MoveRecord::CancelUnit {
            x: pick(rng)?,
            y: pick(rng)?,
        }),
        _ => {
            let upper = fresh_id(s, "u");
            let mut with_upper = s.clone();
            with_upper.add_object(&upper, 3, "").ok()?;
            Some(MoveRecord::InsertPair {
                lower: fresh_id(&with_upper, "l"),
                upper,
                level: rng.gen_range(1..4),
                sign: sign(rng),
            })
        }
    }
}

/// Applies up to `n` random moves that succeed, returning the result and the
/// moves applied.
pub fn scramble(rng: &mut StdRng, s: &FlowScore, n: usize) -> (FlowScore, Vec<MoveRecord>) {
    let mut cur = s.clone();
    let mut applied = Vec::new();
    let mut tries = 0;
    while applied.len() < n && tries < 50 * n {
        tries += 1;
        let Some(m) = random_move(rng, &cur) else {
            continue;
        };
        if let Ok(t) = apply_move(&cur, &m) {
            cur = t;
            applied.push(m);
        }
    }
    (cur, applied)
}

//! Certified rewrites of scores and the replayable move log.
//!
//! Every public move is a pure function from a valid score to a valid score.
//! A move is refused when its effect on some moduli space cannot be read off
//! the combinatorial data: an ε class becomes `unknown` instead, and a
//! change in the closedness of a 1-dimensional moduli space is an error.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use sha2::{Digest, Sha256};

use crate::score::{validate, Eps, FlowScore, ObjectId, ScoreError, ValidationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn as_int(self) -> BigInt {
        match self {
            Sign::Plus => BigInt::one(),
            Sign::Minus => -BigInt::one(),
        }
    }

    pub fn of(n: &BigInt) -> Sign {
        if n.is_negative() {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EpsDirection {
    Create,
    Remove,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HookLemma {
    Be,
    Te,
}

impl HookLemma {
    fn name(self) -> &'static str {
        match self {
            HookLemma::Be => "be",
            HookLemma::Te => "te",
        }
    }
}

/// One logged rewrite.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MoveRecord {
    /// Slide `src` over `dst`, `count` times with the given sign.
    Slide {
        level: u8,
        src: ObjectId,
        dst: ObjectId,
        sign: Sign,
        count: BigInt,
    },
    Trick2 {
        b: ObjectId,
        c: ObjectId,
    },
    Trick1Eta {
        b: ObjectId,
        c: ObjectId,
        d: ObjectId,
        dual: bool,
    },
    Trick1Eps {
        b: ObjectId,
        c: ObjectId,
        d: ObjectId,
        dual: bool,
    },
    EtaSquareEps {
        a: ObjectId,
        b: ObjectId,
        c: ObjectId,
        d: ObjectId,
        direction: EpsDirection,
    },
    HookComposite {
        lemma: HookLemma,
        case: u8,
        bindings: BTreeMap<String, ObjectId>,
    },
    CancelUnit {
        x: ObjectId,
        y: ObjectId,
    },
    /// Adds a cancelling pair `D(upper, lower) = ±1` with `upper` at `level`.
    InsertPair {
        upper: ObjectId,
        lower: ObjectId,
        level: u8,
        sign: Sign,
    },
    /// Pins `E(a, d)` in the `D = 2, ε, D = 2` pattern.
    NoTwoEpsTwo {
        a: ObjectId,
        b: ObjectId,
        c: ObjectId,
        d: ObjectId,
        value: bool,
    },
    /// Double slide that toggles one ε through a ξ followed by two points.
    EpsDoubleSlide {
        receiver: ObjectId,
        giver: ObjectId,
        dual: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MoveError {
    UnknownObject(ObjectId),
    SameObject(ObjectId),
    LevelMismatch(String),
    Precondition(String),
    /// The move would change whether some 1-dimensional moduli space is closed.
    Uncertified(String),
    Unsupported(String),
    Invalid(ValidationReport),
    Replay(String),
    Trace(String),
}

impl fmt::Display for MoveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MoveError::UnknownObject(id) => write!(f, "unknown object `{id}`"),
            MoveError::SameObject(id) => write!(f, "cannot slide `{id}` over itself"),
            MoveError::LevelMismatch(m) => write!(f, "level mismatch: {m}"),
            MoveError::Precondition(m) => write!(f, "precondition failed: {m}"),
            MoveError::Uncertified(m) => write!(f, "move not certified: {m}"),
            MoveError::Unsupported(m) => write!(f, "unsupported: {m}"),
            MoveError::Invalid(r) => write!(f, "move produced an invalid score: {r}"),
            MoveError::Replay(m) => write!(f, "replay failed: {m}"),
            MoveError::Trace(m) => write!(f, "malformed trace: {m}"),
        }
    }
}

impl From<ScoreError> for MoveError {
    fn from(e: ScoreError) -> Self {
        match e {
            ScoreError::UnknownObject(id) => MoveError::UnknownObject(id),
            ScoreError::Invalid(r) => MoveError::Invalid(r),
            ScoreError::LevelGap { kind, from, to } => {
                MoveError::LevelMismatch(format!("{kind} entry ({from}, {to})"))
            }
            other => MoveError::Precondition(other.to_string()),
        }
    }
}

type MoveResult = Result<FlowScore, MoveError>;

fn pre(msg: impl Into<String>) -> MoveError {
    MoveError::Precondition(msg.into())
}

fn level_of(s: &FlowScore, id: &str) -> Result<u8, MoveError> {
    s.level(id)
        .ok_or_else(|| MoveError::UnknownObject(id.to_string()))
}

fn require_gap(s: &FlowScore, upper: &str, lower: &str, gap: u8) -> Result<u8, MoveError> {
    let lu = level_of(s, upper)?;
    let ll = level_of(s, lower)?;
    if lu != ll + gap {
        return Err(MoveError::LevelMismatch(format!(
            "`{upper}` at level {lu} and `{lower}` at level {ll} are not {gap} apart"
        )));
    }
    Ok(lu)
}

fn require_levels(s: &FlowScore, ids: &[&str], levels: &[u8]) -> Result<(), MoveError> {
    for (id, l) in ids.iter().zip(levels) {
        let got = level_of(s, id)?;
        if got != *l {
            return Err(MoveError::LevelMismatch(format!(
                "`{id}` is at level {got}, expected {l}"
            )));
        }
    }
    Ok(())
}

/// Gap-2 pairs whose moduli space has nonempty boundary.
pub fn non_closed_pairs(s: &FlowScore) -> BTreeSet<(ObjectId, ObjectId)> {
    let mut out = BTreeSet::new();
    for top in 2..=3u8 {
        for a in s.at_level(top) {
            for (z, _) in s.points_out(&a) {
                for (c, _) in s.points_out(&z) {
                    if !s.is_closed(&a, &c) {
                        out.insert((a.clone(), c));
                    }
                }
            }
        }
    }
    out
}

fn certify(before: &FlowScore, after: &FlowScore) -> Result<(), MoveError> {
    let b: BTreeSet<_> = non_closed_pairs(before)
        .into_iter()
        .filter(|(x, y)| after.contains(x) && after.contains(y))
        .collect();
    let a = non_closed_pairs(after);
    if let Some((x, y)) = a.symmetric_difference(&b).next() {
        return Err(MoveError::Uncertified(format!(
            "closedness of M({x}, {y}) would change"
        )));
    }
    Ok(())
}

fn finish(mut t: FlowScore) -> MoveResult {
    t.force_unknown_where_unsupported();
    let report = validate(&t);
    if !report.is_empty() {
        return Err(MoveError::Invalid(report));
    }
    Ok(t)
}

fn toggle_eta(t: &mut FlowScore, a: &str, b: &str) -> Result<(), MoveError> {
    let v = t.eta(a, b);
    t.set_eta(a, b, !v)?;
    Ok(())
}

fn add_eps(t: &mut FlowScore, a: &str, b: &str, v: Eps) -> Result<(), MoveError> {
    if v != Eps::Zero {
        let cur = t.eps(a, b);
        t.set_eps(a, b, cur + v)?;
    }
    Ok(())
}

/// `k` copies of an ε class. An even number of copies of a closed class
/// cancels; copies of a class with boundary are not tracked.
fn scaled_eps(e: Eps, odd: bool, supported: bool) -> Eps {
    if odd {
        e
    } else if supported {
        Eps::Zero
    } else {
        Eps::Unknown
    }
}

fn slide_raw(s: &FlowScore, x: &str, y: &str, sign: Sign, count: &BigInt) -> MoveResult {
    if x == y {
        return Err(MoveError::SameObject(x.to_string()));
    }
    let l = level_of(s, x)?;
    let ly = level_of(s, y)?;
    if l != ly {
        return Err(MoveError::LevelMismatch(format!(
            "`{x}` at level {l}, `{y}` at level {ly}"
        )));
    }
    if !count.is_positive() {
        return Err(pre("slide count must be positive"));
    }
    let m = sign.as_int() * count;
    let odd = count.is_odd();
    let mut t = s.clone();

    for (b, n) in s.points_out(y) {
        t.set_points(x, &b, s.points(x, &b) + &m * n)?;
    }
    if odd {
        for b in s.eta_out(y) {
            toggle_eta(&mut t, x, &b)?;
        }
    }
    if l == 3 {
        for b in s.at_level(0) {
            let add = scaled_eps(s.eps(y, &b), odd, s.eps_support_holds(y, &b));
            add_eps(&mut t, x, &b, add)?;
        }
    }

    for (a, n) in s.points_in(x) {
        t.set_points(&a, y, s.points(&a, y) - &m * n)?;
    }
    if odd {
        for a in s.eta_in(x) {
            toggle_eta(&mut t, &a, y)?;
        }
    }
    if l == 0 {
        for a in s.at_level(3) {
            let add = scaled_eps(s.eps(&a, x), odd, s.eps_support_holds(&a, x));
            add_eps(&mut t, &a, y, add)?;
        }
    }

    // Products M(y, b) × [0,1] × M(a, x) landing in a 2-dimensional space.
    if l == 1 {
        for a in s.eta_in(x) {
            for (b, _) in s.points_out(y) {
                t.set_eps(&a, &b, Eps::Unknown)?;
            }
        }
    }
    if l == 2 {
        for (a, _) in s.points_in(x) {
            for b in s.eta_out(y) {
                t.set_eps(&a, &b, Eps::Unknown)?;
            }
        }
    }
    finish(t)
}

/// Slides `x` over `y` once.
pub fn handle_slide(s: &FlowScore, x: &str, y: &str, sign: Sign) -> MoveResult {
    handle_slide_times(s, x, y, sign, &BigInt::one())
}

/// Slides `x` over `y` `count` times as one move.
pub fn handle_slide_times(
    s: &FlowScore,
    x: &str,
    y: &str,
    sign: Sign,
    count: &BigInt,
) -> MoveResult {
    let t = slide_raw(s, x, y, sign, count)?;
    certify(s, &t)?;
    Ok(t)
}

/// Adds a nullhomotopic framed circle to `M(b, c)`, changing the classes
/// it glues into.
pub fn trick2(s: &FlowScore, b: &str, c: &str) -> MoveResult {
    let lb = require_gap(s, b, c, 1)?;
    let lc = lb - 1;
    let mut t = s.clone();

    if lc >= 1 {
        for (d, n) in s.points_out(c) {
            if n.is_odd() {
                if !s.is_closed(b, &d) {
                    return Err(MoveError::Uncertified(format!("M({b}, {d}) is not closed")));
                }
                toggle_eta(&mut t, b, &d)?;
            }
        }
    }
    if lc == 2 {
        for d in s.at_level(0) {
            if !s.is_closed(c, &d) {
                t.set_eps(b, &d, Eps::Unknown)?;
            } else if s.eta(c, &d) {
                add_eps(&mut t, b, &d, Eps::One)?;
            }
        }
    }
    if lb <= 2 {
        for (a, n) in s.points_in(b) {
            if n.is_odd() {
                if !s.is_closed(&a, c) {
                    return Err(MoveError::Uncertified(format!("M({a}, {c}) is not closed")));
                }
                toggle_eta(&mut t, &a, c)?;
            }
        }
    }
    if lb == 1 {
        for a in s.at_level(3) {
            if !s.is_closed(&a, b) {
                t.set_eps(&a, c, Eps::Unknown)?;
            } else if s.eta(&a, b) {
                add_eps(&mut t, &a, c, Eps::One)?;
            }
        }
    }
    if lb == 2 {
        for (u, _) in s.points_in(b) {
            for (v, _) in s.points_out(c) {
                t.set_eps(&u, &v, Eps::Unknown)?;
            }
        }
    }
    finish(t)
}

/// Checks that `D(c, d)` is an odd edge forming an isolated pair. Only the
/// parity of the count enters the effect, so negative counts are accepted.
fn odd_isolated_pair(s: &FlowScore, c: &str, d: &str) -> Result<u8, MoveError> {
    let lc = require_gap(s, c, d, 1)?;
    let p = s.points(c, d);
    if !p.is_odd() {
        return Err(pre(format!("D({c}, {d}) = {p} is not odd")));
    }
    isolated_pair(s, c, d)?;
    Ok(lc)
}

fn isolated_pair(s: &FlowScore, c: &str, d: &str) -> Result<(), MoveError> {
    let only = |v: Vec<(ObjectId, BigInt)>, id: &str| v.len() == 1 && v[0].0 == id;
    if !only(s.points_out(c), d)
        || !only(s.points_in(d), c)
        || !s.points_in(c).is_empty()
        || !s.points_out(d).is_empty()
    {
        return Err(pre(format!("({c}, {d}) is not an isolated pair")));
    }
    Ok(())
}

/// Removes an η ending at the bottom of an odd pair (or, dually, starting at
/// its top), using a cancelling pair with framing chosen so that `2r + p = 1`.
pub fn trick1_eta(s: &FlowScore, b: &str, c: &str, d: &str, dual: bool) -> MoveResult {
    let lc = odd_isolated_pair(s, c, d)?;
    let mut t = s.clone();
    if !dual {
        require_gap(s, b, d, 2)?;
        if !s.eta(b, d) {
            return Err(pre(format!("no η in M({b}, {d})")));
        }
        t.set_eta(b, d, false)?;
        if lc == 1 {
            for (u, n) in s.points_in(b) {
                if n.is_odd() {
                    toggle_eta(&mut t, &u, c)?;
                }
                t.set_eps(&u, d, Eps::Unknown)?;
            }
        } else {
            for x in s.at_level(0) {
                if s.eta(c, &x) {
                    add_eps(&mut t, b, &x, Eps::One)?;
                }
            }
        }
    } else {
        require_gap(s, c, b, 2)?;
        if !s.eta(c, b) {
            return Err(pre(format!("no η in M({c}, {b})")));
        }
        t.set_eta(c, b, false)?;
        if lc == 3 {
            for (u, n) in s.points_out(b) {
                if n.is_odd() {
                    toggle_eta(&mut t, d, &u)?;
                }
                t.set_eps(c, &u, Eps::Unknown)?;
            }
        } else {
            for x in s.at_level(3) {
                if s.eta(&x, d) {
                    add_eps(&mut t, &x, b, Eps::One)?;
                }
            }
        }
    }
    finish(t)
}

/// Clears a closed ε ending at the bottom of an odd pair (or starting at its
/// top).
pub fn trick1_eps(s: &FlowScore, b: &str, c: &str, d: &str, dual: bool) -> MoveResult {
    odd_isolated_pair(s, c, d)?;
    let (from, to) = if dual { (c, b) } else { (b, d) };
    require_gap(s, from, to, 3)?;
    if !s.eps_support_holds(from, to) {
        return Err(pre(format!("M({from}, {to}) is not closed")));
    }
    let mut t = s.clone();
    t.set_eps(from, to, Eps::Zero)?;
    finish(t)
}

/// Trades two η classes across an odd edge for one ε, or back.
pub fn eta_square_eps(
    s: &FlowScore,
    a: &str,
    b: &str,
    c: &str,
    d: &str,
    direction: EpsDirection,
) -> MoveResult {
    require_levels(s, &[a, b, c, d], &[3, 2, 1, 0])?;
    if !s.points(b, c).is_odd() {
        return Err(pre(format!("D({b}, {c}) is not odd")));
    }
    if !s.points(a, b).is_zero() || !s.points(c, d).is_zero() {
        return Err(pre("D(a, b) and D(c, d) must vanish"));
    }
    isolated_pair(s, b, c)?;
    let xi_in = s.eta_in(c);
    let eta_out = s.eta_out(b);
    let mut t = s.clone();
    match direction {
        EpsDirection::Remove => {
            if xi_in != [a.to_string()] || eta_out != [d.to_string()] {
                return Err(pre("expected exactly H(a, c) = H(b, d) = 1 at the pair"));
            }
            t.set_eta(a, c, false)?;
            t.set_eta(b, d, false)?;
        }
        EpsDirection::Create => {
            if !xi_in.is_empty() || !eta_out.is_empty() {
                return Err(pre("the pair already carries η classes"));
            }
            if !s.eps(a, d).is_determinate() {
                return Err(pre(format!("E({a}, {d}) is unknown")));
            }
            t.set_eta(a, c, true)?;
            t.set_eta(b, d, true)?;
        }
    }
    add_eps(&mut t, a, d, Eps::One)?;
    finish(t)
}

/// Cancels a pair with `D(x, y) = ±1`.
pub fn cancel_unit(s: &FlowScore, x: &str, y: &str) -> MoveResult {
    let lx = require_gap(s, x, y, 1)?;
    let u = s.points(x, y);
    if u.abs() != BigInt::one() {
        return Err(pre(format!("D({x}, {y}) = {u} is not a unit")));
    }
    let ins_y: Vec<_> = s.points_in(y).into_iter().filter(|(a, _)| a != x).collect();
    let outs_x: Vec<_> = s
        .points_out(x)
        .into_iter()
        .filter(|(b, _)| b != y)
        .collect();

    // Products glued into surviving gap-2 spaces must come from closed factors.
    if !ins_y.is_empty() && lx >= 2 {
        if let Some(b) = s.at_level(lx - 2).into_iter().find(|b| !s.is_closed(x, b)) {
            return Err(MoveError::Uncertified(format!("M({x}, {b}) is not closed")));
        }
    }
    if !outs_x.is_empty() && lx <= 2 {
        if let Some(a) = s.at_level(lx + 1).into_iter().find(|a| !s.is_closed(a, y)) {
            return Err(MoveError::Uncertified(format!("M({a}, {y}) is not closed")));
        }
    }

    let mut t = s.clone();
    t.remove_object(x)?;
    t.remove_object(y)?;
    for (a, day) in &ins_y {
        for (b, dxb) in &outs_x {
            let v = s.points(a, b) - day * dxb * &u;
            t.set_points(a, b, v)?;
        }
    }
    for (a, day) in &ins_y {
        if day.is_odd() {
            for b in s.eta_out(x) {
                toggle_eta(&mut t, a, &b)?;
            }
        }
    }
    for (b, dxb) in &outs_x {
        if dxb.is_odd() {
            for a in s.eta_in(y) {
                toggle_eta(&mut t, &a, b)?;
            }
        }
    }
    match lx {
        3 => {
            for (a, day) in &ins_y {
                for b in s.at_level(0) {
                    let add = scaled_eps(s.eps(x, &b), day.is_odd(), s.eps_support_holds(x, &b));
                    add_eps(&mut t, a, &b, add)?;
                }
            }
        }
        2 => {
            for a in s.eta_in(y) {
                for b in s.eta_out(x) {
                    add_eps(&mut t, &a, &b, Eps::One)?;
                }
            }
        }
        _ => {
            for (b, dxb) in &outs_x {
                for a in s.at_level(3) {
                    let add = scaled_eps(s.eps(&a, y), dxb.is_odd(), s.eps_support_holds(&a, y));
                    add_eps(&mut t, &a, b, add)?;
                }
            }
        }
    }
    certify(s, &t)?;
    finish(t)
}

/// Adds a cancelling pair; the inverse of [`cancel_unit`].
pub fn insert_pair(s: &FlowScore, upper: &str, lower: &str, level: u8, sign: Sign) -> MoveResult {
    if !(1..=3).contains(&level) {
        return Err(pre(format!("cannot insert a pair with top level {level}")));
    }
    if upper == lower {
        return Err(MoveError::SameObject(upper.to_string()));
    }
    let mut t = s.clone();
    t.add_object(upper, level, upper)?;
    t.add_object(lower, level - 1, lower)?;
    t.set_points(upper, lower, sign.as_int())?;
    finish(t)
}

/// Sets the ε class in `D(a, b) = ±2, D(c, d) = ±2` with nothing between
/// `b` and `c`; a Whitney trick in `M(b, c)` realizes either value.
pub fn no_two_eps_two(
    s: &FlowScore,
    a: &str,
    b: &str,
    c: &str,
    d: &str,
    value: bool,
) -> MoveResult {
    require_levels(s, &[a, b, c, d], &[3, 2, 1, 0])?;
    let two = BigInt::from(2);
    if s.points(a, b).abs() != two || s.points(c, d).abs() != two {
        return Err(pre("expected |D(a, b)| = |D(c, d)| = 2"));
    }
    if !s.points(b, c).is_zero() || s.eta(a, c) || s.eta(b, d) {
        return Err(pre("expected nothing between b and c"));
    }
    let only = |v: Vec<(ObjectId, BigInt)>, id: &str| v.len() == 1 && v[0].0 == id;
    if !only(s.points_in(b), a) || !only(s.points_out(c), d) {
        return Err(pre("b and c must meet only a and d"));
    }
    if !s.eps_support_holds(a, d) {
        return Err(pre(format!("M({a}, {d}) is not closed")));
    }
    let mut t = s.clone();
    t.set_eps(a, d, Eps::from_bit(value))?;
    finish(t)
}

/// Slides twice through a ξ into the top of a `D = ±2` edge (or, dually, out
/// of an η from the bottom of one), which toggles a single ε.
pub fn eps_double_slide(s: &FlowScore, receiver: &str, giver: &str, dual: bool) -> MoveResult {
    let two = BigInt::from(2);
    let (target_from, target_to, mut t) = if !dual {
        require_levels(s, &[receiver, giver], &[3, 3])?;
        let xi = s.eta_out(giver);
        if !s.points_out(giver).is_empty() || xi.len() != 1 {
            return Err(pre(format!(
                "`{giver}` must carry exactly one ξ and no points"
            )));
        }
        let c = &xi[0];
        let outs = s.points_out(c);
        if outs.len() != 1 || outs[0].1.abs() != two {
            return Err(pre(format!("`{c}` must have a single edge of ±2 points")));
        }
        let d = outs[0].0.clone();
        if !s.eta_in(&d).is_empty() {
            return Err(pre(format!("`{d}` must not receive η")));
        }
        let t = slide_raw(s, receiver, giver, Sign::Plus, &two)?;
        (receiver.to_string(), d, t)
    } else {
        require_levels(s, &[receiver, giver], &[0, 0])?;
        let eta = s.eta_in(giver);
        if !s.points_in(giver).is_empty() || eta.len() != 1 {
            return Err(pre(format!(
                "`{giver}` must receive exactly one η and no points"
            )));
        }
        let b = &eta[0];
        let ins = s.points_in(b);
        if ins.len() != 1 || ins[0].1.abs() != two {
            return Err(pre(format!("`{b}` must have a single edge of ±2 points")));
        }
        let a = ins[0].0.clone();
        if !s.eta_out(&a).is_empty() {
            return Err(pre(format!("`{a}` must not emit ξ")));
        }
        let t = slide_raw(s, giver, receiver, Sign::Plus, &two)?;
        (a, receiver.to_string(), t)
    };
    let v = s.eps(&target_from, &target_to) + Eps::One;
    t.set_eps(&target_from, &target_to, v)?;
    certify(s, &t)?;
    finish(t)
}

fn binding<'a>(b: &'a BTreeMap<String, ObjectId>, role: &str) -> Result<&'a str, MoveError> {
    b.get(role)
        .map(|s| s.as_str())
        .ok_or_else(|| pre(format!("missing binding `{role}`")))
}

fn exact_quotient(num: &BigInt, den: &BigInt) -> Result<(Sign, BigInt), MoveError> {
    if den.is_zero() || !(num % den).is_zero() {
        return Err(pre(format!("{den} does not divide {num}")));
    }
    let q = num / den;
    Ok((Sign::of(&q), q.abs()))
}

fn slide_record(s: &FlowScore, src: &str, dst: &str, sign: Sign, count: BigInt) -> MoveRecord {
    MoveRecord::Slide {
        level: s.level(src).unwrap_or(0),
        src: src.to_string(),
        dst: dst.to_string(),
        sign,
        count,
    }
}

type Pair<'a> = (&'a str, &'a str);

/// The slide sequence of a hook lemma.
///
/// Case numbering, with `q` and `p` the point counts of the two edges:
///
/// * `be` 1, 2, 5: `η(b, d1)`, `η(b, d2)`, `D(c1, d1) = q`, `D(c2, d2) = p`.
///   Removes `η(b, d2)` by sliding `d1` over `d2`, then `c1` over `c2` `q/p`
///   times. Case 1 has `|q| > |p|`, case 2 `|q| = |p|`, case 5 has no `c1`.
/// * `be` 3, 4, 6: upside down; `η(b1, d)`, `η(b2, d)`, `D(b1, c1) = q`,
///   `D(b2, c2) = p`. Removes `η(b2, d)`; case 6 has no `c1`.
/// * `te` 1, 2, 3: `η(b1, d)`, `η(b2, d)`, `D(a1, b1) = q`, `D(a2, b2) = p`.
///   Removes `η(b1, d)`; case 3 has no `a1`.
/// * `te` 4, 5, 6: upside down; `η(b, d1)`, `η(b, d2)`, `D(d1, e1) = q`,
///   `D(d2, e2) = p`. Removes `η(b, d1)`; case 6 has no `e1`.
pub fn hook_slides(
    s: &FlowScore,
    lemma: HookLemma,
    case: u8,
    bindings: &BTreeMap<String, ObjectId>,
) -> Result<(FlowScore, Vec<MoveRecord>), MoveError> {
    let g = |r: &str| binding(bindings, r);
    // (first slide src, dst), eta that must vanish, optional (src, dst, defect, pivot).
    let (first, eta_pair, second): (Pair, Pair, Option<Pair>);
    let empty_case;
    match (lemma, case) {
        (HookLemma::Be, 1 | 2 | 5) => {
            let (b, d1, d2, c2) = (g("b")?, g("d1")?, g("d2")?, g("c2")?);
            require_gap(s, b, d1, 2)?;
            require_gap(s, b, d2, 2)?;
            if !s.eta(b, d1) || !s.eta(b, d2) {
                return Err(pre("expected η(b, d1) and η(b, d2)"));
            }
            hook_edge(s, c2, d2)?;
            empty_case = case == 5;
            first = (d1, d2);
            eta_pair = (b, d2);
            if empty_case {
                if !s.points_in(d1).is_empty() {
                    return Err(pre("d1 must not receive points"));
                }
                second = None;
            } else {
                let c1 = g("c1")?;
                compare_hook(case, &s.points(c1, d1), &s.points(c2, d2))?;
                second = Some((c1, c2));
            }
        }
        (HookLemma::Be, 3 | 4 | 6) => {
            let (d, b1, b2, c2) = (g("d")?, g("b1")?, g("b2")?, g("c2")?);
            if !s.eta(b1, d) || !s.eta(b2, d) {
                return Err(pre("expected η(b1, d) and η(b2, d)"));
            }
            hook_edge(s, b2, c2)?;
            empty_case = case == 6;
            first = (b2, b1);
            eta_pair = (b2, d);
            if empty_case {
                if !s.points_out(b1).is_empty() {
                    return Err(pre("b1 must not emit points"));
                }
                second = None;
            } else {
                let c1 = g("c1")?;
                compare_hook(case - 2, &s.points(b1, c1), &s.points(b2, c2))?;
                second = Some((c2, c1));
            }
        }
        (HookLemma::Te, 1..=3) => {
            let (d, b1, b2, a2) = (g("d")?, g("b1")?, g("b2")?, g("a2")?);
            if !s.eta(b1, d) || !s.eta(b2, d) {
                return Err(pre("expected η(b1, d) and η(b2, d)"));
            }
            hook_edge(s, a2, b2)?;
            empty_case = case == 3;
            first = (b1, b2);
            eta_pair = (b1, d);
            if empty_case {
                if !s.points_in(b1).is_empty() {
                    return Err(pre("b1 must not receive points"));
                }
                second = None;
            } else {
                let a1 = g("a1")?;
                compare_hook(case, &s.points(a1, b1), &s.points(a2, b2))?;
                second = Some((a1, a2));
            }
        }
        (HookLemma::Te, 4..=6) => {
            let (b, d1, d2, e2) = (g("b")?, g("d1")?, g("d2")?, g("e2")?);
            if !s.eta(b, d1) || !s.eta(b, d2) {
                return Err(pre("expected η(b, d1) and η(b, d2)"));
            }
            hook_edge(s, d2, e2)?;
            empty_case = case == 6;
            first = (d2, d1);
            eta_pair = (b, d1);
            if empty_case {
                if !s.points_out(d1).is_empty() {
                    return Err(pre("d1 must not emit points"));
                }
                second = None;
            } else {
                let e1 = g("e1")?;
                compare_hook(case - 3, &s.points(d1, e1), &s.points(d2, e2))?;
                second = Some((e2, e1));
            }
        }
        _ => {
            return Err(pre(format!(
                "hook lemma {} has no case {case}",
                lemma.name()
            )))
        }
    }

    let mut records = Vec::new();
    let mut t = slide_raw(s, first.0, first.1, Sign::Plus, &BigInt::one())?;
    records.push(slide_record(s, first.0, first.1, Sign::Plus, BigInt::one()));
    if let Some((src, dst)) = second {
        // The defect is the entry created by the first slide; the pivot is
        // the untouched edge it is cleared against.
        let (sign, k) = match (lemma, case) {
            (HookLemma::Be, 1 | 2) => {
                exact_quotient(&-t.points(src, first.1), &t.points(dst, first.1))?
            }
            (HookLemma::Be, _) => exact_quotient(&t.points(first.0, dst), &t.points(first.0, src))?,
            (HookLemma::Te, 1 | 2) => {
                exact_quotient(&-t.points(src, first.1), &t.points(dst, first.1))?
            }
            (HookLemma::Te, _) => exact_quotient(&t.points(first.0, dst), &t.points(first.0, src))?,
        };
        if !k.is_zero() {
            t = slide_raw(&t, src, dst, sign, &k)?;
            records.push(slide_record(s, src, dst, sign, k));
        }
    }
    if t.eta(eta_pair.0, eta_pair.1) {
        return Err(pre("hook pattern did not clear the η"));
    }
    certify(s, &t)?;
    Ok((t, records))
}

fn hook_edge(s: &FlowScore, upper: &str, lower: &str) -> Result<(), MoveError> {
    require_gap(s, upper, lower, 1)?;
    if s.points(upper, lower).is_zero() {
        return Err(pre(format!("expected points in M({upper}, {lower})")));
    }
    Ok(())
}

fn compare_hook(case: u8, q: &BigInt, p: &BigInt) -> Result<(), MoveError> {
    let (q, p) = (q.abs(), p.abs());
    let ok = match case {
        1 => q > p,
        _ => q == p,
    };
    if !ok || q.is_zero() {
        return Err(pre(format!(
            "point counts {q} and {p} do not fit case {case}"
        )));
    }
    Ok(())
}

/// Applies a hook lemma as one rewrite.
pub fn hook_composite(
    s: &FlowScore,
    lemma: HookLemma,
    case: u8,
    bindings: &BTreeMap<String, ObjectId>,
) -> MoveResult {
    hook_slides(s, lemma, case, bindings).map(|(t, _)| t)
}

/// Applies one record with full certification.
pub fn apply_move(s: &FlowScore, m: &MoveRecord) -> MoveResult {
    match m {
        MoveRecord::Slide {
            level,
            src,
            dst,
            sign,
            count,
        } => {
            check_slide_level(s, src, *level)?;
            handle_slide_times(s, src, dst, *sign, count)
        }
        MoveRecord::Trick2 { b, c } => trick2(s, b, c),
        MoveRecord::Trick1Eta { b, c, d, dual } => trick1_eta(s, b, c, d, *dual),
        MoveRecord::Trick1Eps { b, c, d, dual } => trick1_eps(s, b, c, d, *dual),
        MoveRecord::EtaSquareEps {
            a,
            b,
            c,
            d,
            direction,
        } => eta_square_eps(s, a, b, c, d, *direction),
        MoveRecord::HookComposite {
            lemma,
            case,
            bindings,
        } => hook_composite(s, *lemma, *case, bindings),
        MoveRecord::CancelUnit { x, y } => cancel_unit(s, x, y),
        MoveRecord::InsertPair {
            upper,
            lower,
            level,
            sign,
        } => insert_pair(s, upper, lower, *level, *sign),
        MoveRecord::NoTwoEpsTwo { a, b, c, d, value } => no_two_eps_two(s, a, b, c, d, *value),
        MoveRecord::EpsDoubleSlide {
            receiver,
            giver,
            dual,
        } => eps_double_slide(s, receiver, giver, *dual),
    }
}

fn check_slide_level(s: &FlowScore, src: &str, level: u8) -> Result<(), MoveError> {
    let l = level_of(s, src)?;
    if l != level {
        return Err(MoveError::LevelMismatch(format!(
            "record says level {level}, `{src}` is at level {l}"
        )));
    }
    Ok(())
}

/// Hex SHA-256 of a canonical encoding of the score.
pub fn digest(s: &FlowScore) -> String {
    let mut h = Sha256::new();
    h.update(format!("base {}\n", s.base_degree()).as_bytes());
    for o in s.objects() {
        h.update(format!("o {} {} {}\n", escape(&o.id), o.level, escape(&o.label)).as_bytes());
    }
    for (a, b, n) in s.points_entries() {
        h.update(format!("d {} {} {}\n", escape(a), escape(b), n).as_bytes());
    }
    for (a, b) in s.eta_entries() {
        h.update(format!("h {} {}\n", escape(a), escape(b)).as_bytes());
    }
    for (a, b, e) in s.eps_entries() {
        h.update(format!("e {} {} {}\n", escape(a), escape(b), e).as_bytes());
    }
    let out = h.finalize();
    let mut hex = String::with_capacity(64);
    for byte in out.iter() {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

fn escape(id: &str) -> String {
    let mut out = String::with_capacity(id.len());
    for ch in id.chars() {
        if ch.is_whitespace() || ch == '=' || ch == '%' {
            let mut buf = [0u8; 4];
            for b in ch.encode_utf8(&mut buf).bytes() {
                out.push_str(&format!("%{b:02X}"));
            }
        } else {
            out.push(ch);
        }
    }
    out
}

fn unescape(tok: &str) -> Result<String, MoveError> {
    let bytes = tok.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = tok
                .get(i + 1..i + 3)
                .and_then(|h| u8::from_str_radix(h, 16).ok())
                .ok_or_else(|| MoveError::Trace(format!("bad escape in `{tok}`")))?;
            out.push(hex);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| MoveError::Trace(format!("bad utf-8 in `{tok}`")))
}

fn bit(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

impl fmt::Display for MoveRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = |s: &str| escape(s);
        match self {
            MoveRecord::Slide {
                level,
                src,
                dst,
                sign,
                count,
            } => write!(
                f,
                "slide level={level} src={} dst={} sign={} count={count}",
                e(src),
                e(dst),
                sign.symbol()
            ),
            MoveRecord::Trick2 { b, c } => write!(f, "trick2 b={} c={}", e(b), e(c)),
            MoveRecord::Trick1Eta { b, c, d, dual } => write!(
                f,
                "trick1-eta b={} c={} d={} dual={}",
                e(b),
                e(c),
                e(d),
                bit(*dual)
            ),
            MoveRecord::Trick1Eps { b, c, d, dual } => write!(
                f,
                "trick1-eps b={} c={} d={} dual={}",
                e(b),
                e(c),
                e(d),
                bit(*dual)
            ),
            MoveRecord::EtaSquareEps {
                a,
                b,
                c,
                d,
                direction,
            } => write!(
                f,
                "eta-square-eps a={} b={} c={} d={} direction={}",
                e(a),
                e(b),
                e(c),
                e(d),
                match direction {
                    EpsDirection::Create => "create",
                    EpsDirection::Remove => "remove",
                }
            ),
            MoveRecord::HookComposite {
                lemma,
                case,
                bindings,
            } => {
                write!(f, "hook lemma={} case={case}", lemma.name())?;
                for (k, v) in bindings {
                    write!(f, " {}={}", e(k), e(v))?;
                }
                Ok(())
            }
            MoveRecord::CancelUnit { x, y } => write!(f, "cancel-unit x={} y={}", e(x), e(y)),
            MoveRecord::InsertPair {
                upper,
                lower,
                level,
                sign,
            } => write!(
                f,
                "insert-pair upper={} lower={} level={level} sign={}",
                e(upper),
                e(lower),
                sign.symbol()
            ),
            MoveRecord::NoTwoEpsTwo { a, b, c, d, value } => write!(
                f,
                "no-two-eps-two a={} b={} c={} d={} value={}",
                e(a),
                e(b),
                e(c),
                e(d),
                bit(*value)
            ),
            MoveRecord::EpsDoubleSlide {
                receiver,
                giver,
                dual,
            } => write!(
                f,
                "eps-double-slide receiver={} giver={} dual={}",
                e(receiver),
                e(giver),
                bit(*dual)
            ),
        }
    }
}

struct Fields {
    kind: String,
    map: BTreeMap<String, String>,
}

impl Fields {
    fn parse(line: &str) -> Result<Fields, MoveError> {
        let mut toks = line.split_whitespace();
        let kind = toks
            .next()
            .ok_or_else(|| MoveError::Trace("empty record".into()))?
            .to_string();
        let mut map = BTreeMap::new();
        for t in toks {
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| MoveError::Trace(format!("expected key=value, got `{t}`")))?;
            if map.insert(unescape(k)?, unescape(v)?).is_some() {
                return Err(MoveError::Trace(format!("duplicate field `{k}`")));
            }
        }
        Ok(Fields { kind, map })
    }

    fn take(&mut self, k: &str) -> Result<String, MoveError> {
        self.map
            .remove(k)
            .ok_or_else(|| MoveError::Trace(format!("`{}` record lacks `{k}`", self.kind)))
    }

    fn flag(&mut self, k: &str) -> Result<bool, MoveError> {
        match self.take(k)?.as_str() {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(MoveError::Trace(format!(
                "`{k}` must be 0 or 1, got `{other}`"
            ))),
        }
    }

    fn sign(&mut self) -> Result<Sign, MoveError> {
        match self.take("sign")?.as_str() {
            "+" => Ok(Sign::Plus),
            "-" => Ok(Sign::Minus),
            other => Err(MoveError::Trace(format!("bad sign `{other}`"))),
        }
    }

    fn level(&mut self) -> Result<u8, MoveError> {
        let v = self.take("level")?;
        v.parse()
            .ok()
            .filter(|l| *l <= 3)
            .ok_or_else(|| MoveError::Trace(format!("bad level `{v}`")))
    }

    fn done(self) -> Result<(), MoveError> {
        match self.map.keys().next() {
            Some(k) => Err(MoveError::Trace(format!("unexpected field `{k}`"))),
            None => Ok(()),
        }
    }
}

impl core::str::FromStr for MoveRecord {
    type Err = MoveError;

    fn from_str(line: &str) -> Result<MoveRecord, MoveError> {
        let mut f = Fields::parse(line)?;
        let rec = match f.kind.as_str() {
            "slide" => {
                let level = f.level()?;
                let src = f.take("src")?;
                let dst = f.take("dst")?;
                let sign = f.sign()?;
                let raw = f.take("count")?;
                let count: BigInt = raw
                    .parse()
                    .ok()
                    .filter(|c: &BigInt| c.is_positive())
                    .ok_or_else(|| MoveError::Trace(format!("bad count `{raw}`")))?;
                MoveRecord::Slide {
                    level,
                    src,
                    dst,
                    sign,
                    count,
                }
            }
            "trick2" => MoveRecord::Trick2 {
                b: f.take("b")?,
                c: f.take("c")?,
            },
            "trick1-eta" | "trick1-eps" => {
                let (b, c, d, dual) = (f.take("b")?, f.take("c")?, f.take("d")?, f.flag("dual")?);
                if f.kind == "trick1-eta" {
                    MoveRecord::Trick1Eta { b, c, d, dual }
                } else {
                    MoveRecord::Trick1Eps { b, c, d, dual }
                }
            }
            "eta-square-eps" => {
                let (a, b, c, d) = (f.take("a")?, f.take("b")?, f.take("c")?, f.take("d")?);
                let direction = match f.take("direction")?.as_str() {
                    "create" => EpsDirection::Create,
                    "remove" => EpsDirection::Remove,
                    other => return Err(MoveError::Trace(format!("bad direction `{other}`"))),
                };
                MoveRecord::EtaSquareEps {
                    a,
                    b,
                    c,
                    d,
                    direction,
                }
            }
            "hook" => {
                let lemma = match f.take("lemma")?.as_str() {
                    "be" => HookLemma::Be,
                    "te" => HookLemma::Te,
                    other => return Err(MoveError::Trace(format!("bad lemma `{other}`"))),
                };
                let raw = f.take("case")?;
                let case = raw
                    .parse()
                    .ok()
                    .filter(|c| (1..=6).contains(c))
                    .ok_or_else(|| MoveError::Trace(format!("bad case `{raw}`")))?;
                let bindings = core::mem::take(&mut f.map);
                MoveRecord::HookComposite {
                    lemma,
                    case,
                    bindings,
                }
            }
            "cancel-unit" => MoveRecord::CancelUnit {
                x: f.take("x")?,
                y: f.take("y")?,
            },
            "insert-pair" => MoveRecord::InsertPair {
                upper: f.take("upper")?,
                lower: f.take("lower")?,
                level: f.level()?,
                sign: f.sign()?,
            },
            "no-two-eps-two" => MoveRecord::NoTwoEpsTwo {
                a: f.take("a")?,
                b: f.take("b")?,
                c: f.take("c")?,
                d: f.take("d")?,
                value: f.flag("value")?,
            },
            "eps-double-slide" => MoveRecord::EpsDoubleSlide {
                receiver: f.take("receiver")?,
                giver: f.take("giver")?,
                dual: f.flag("dual")?,
            },
            other => return Err(MoveError::Trace(format!("unknown record kind `{other}`"))),
        };
        f.done()?;
        Ok(rec)
    }
}

const TRACE_HEADER: &str = "# flowcat trace v1";

/// Ordered moves together with the digests of the scores they connect.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct MoveLog {
    pub initial_digest: String,
    pub records: Vec<MoveRecord>,
    pub final_digest: Option<String>,
}

impl MoveLog {
    pub fn new(initial: &FlowScore) -> MoveLog {
        MoveLog {
            initial_digest: digest(initial),
            records: Vec::new(),
            final_digest: None,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends another log that starts where this one ends.
    pub fn extend(&mut self, other: MoveLog) {
        self.records.extend(other.records);
        self.final_digest = other.final_digest;
    }

    pub fn to_trace(&self) -> String {
        let mut out = String::new();
        out.push_str(TRACE_HEADER);
        out.push('\n');
        out.push_str(&format!("initial {}\n", self.initial_digest));
        for r in &self.records {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        if let Some(d) = &self.final_digest {
            out.push_str(&format!("final {d}\n"));
        }
        out
    }

    pub fn parse_trace(text: &str) -> Result<MoveLog, MoveError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some(TRACE_HEADER) {
            return Err(MoveError::Trace(format!("expected `{TRACE_HEADER}`")));
        }
        let initial_digest = lines
            .next()
            .and_then(|l| l.strip_prefix("initial "))
            .ok_or_else(|| MoveError::Trace("missing `initial` line".into()))?
            .trim()
            .to_string();
        let mut log = MoveLog {
            initial_digest,
            ..MoveLog::default()
        };
        for line in lines {
            if log.final_digest.is_some() {
                return Err(MoveError::Trace("records after `final`".into()));
            }
            if line.starts_with('#') {
                continue;
            }
            if let Some(d) = line.strip_prefix("final ") {
                log.final_digest = Some(d.trim().to_string());
            } else {
                log.records.push(line.parse()?);
            }
        }
        Ok(log)
    }

    /// Re-applies the log to `initial`, checking both digests.
    ///
    /// Slides are replayed without the closedness certificate, because hook
    /// composites log their inner slides and those may pass through scores
    /// with non-closed moduli.
    pub fn replay(&self, initial: &FlowScore) -> MoveResult {
        if digest(initial) != self.initial_digest {
            return Err(MoveError::Replay("initial digest does not match".into()));
        }
        let mut s = initial.clone();
        for (i, r) in self.records.iter().enumerate() {
            let next = match r {
                MoveRecord::Slide {
                    level,
                    src,
                    dst,
                    sign,
                    count,
                } => check_slide_level(&s, src, *level)
                    .and_then(|_| slide_raw(&s, src, dst, *sign, count)),
                other => apply_move(&s, other),
            };
            s = next.map_err(|e| MoveError::Replay(format!("record {}: {e}", i + 1)))?;
        }
        if let Some(d) = &self.final_digest {
            if digest(&s) != *d {
                return Err(MoveError::Replay("final digest does not match".into()));
            }
        }
        Ok(s)
    }
}

/// A score together with the log of moves applied to it.
#[derive(Clone, Debug)]
pub struct Session {
    score: FlowScore,
    log: MoveLog,
}

impl Session {
    pub fn new(score: FlowScore) -> Session {
        let log = MoveLog::new(&score);
        Session { score, log }
    }

    pub fn score(&self) -> &FlowScore {
        &self.score
    }

    pub fn log(&self) -> &MoveLog {
        &self.log
    }

    /// Applies a move and logs it. Hook composites are logged as their slides.
    pub fn apply(&mut self, m: MoveRecord) -> Result<(), MoveError> {
        if let MoveRecord::HookComposite {
            lemma,
            case,
            bindings,
        } = &m
        {
            let (t, recs) = hook_slides(&self.score, *lemma, *case, bindings)?;
            self.score = t;
            self.log.records.extend(recs);
            return Ok(());
        }
        self.score = apply_move(&self.score, &m)?;
        self.log.records.push(m);
        Ok(())
    }

    pub fn slide(&mut self, x: &str, y: &str, sign: Sign, count: BigInt) -> Result<(), MoveError> {
        let level = level_of(&self.score, x)?;
        self.apply(MoveRecord::Slide {
            level,
            src: x.to_string(),
            dst: y.to_string(),
            sign,
            count,
        })
    }

    /// Replaces the score after a step that was checked elsewhere.
    pub fn absorb(&mut self, score: FlowScore, log: MoveLog) {
        self.score = score;
        self.log.records.extend(log.records);
    }

    pub fn finish(mut self) -> (FlowScore, MoveLog) {
        self.log.final_digest = Some(digest(&self.score));
        (self.score, self.log)
    }
}

/// An id not yet used in `s`, derived from `stem`.
pub fn fresh_id(s: &FlowScore, stem: &str) -> ObjectId {
    if !s.contains(stem) {
        return stem.to_string();
    }
    (1..)
        .map(|i| format!("{stem}~{i}"))
        .find(|c| !s.contains(c))
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::homology;
    use alloc::vec;

    fn score(
        base: i64,
        objs: &[(&str, u8)],
        d: &[(&str, &str, i64)],
        h: &[(&str, &str)],
    ) -> FlowScore {
        let mut s = FlowScore::new(base);
        for (id, l) in objs {
            s.add_object(id, *l, id).unwrap();
        }
        for (a, b, n) in d {
            s.set_points(a, b, BigInt::from(*n)).unwrap();
        }
        for (a, b) in h {
            s.set_eta(a, b, true).unwrap();
        }
        s
    }

    fn fix_a() -> FlowScore {
        score(
            0,
            &[("a", 3), ("b", 2), ("c", 1), ("d", 0)],
            &[("b", "c", 3)],
            &[("a", "c"), ("b", "d")],
        )
    }

    fn n(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn slide_copies_moore_column() {
        let s = score(
            0,
            &[("a1", 1), ("b1", 0), ("a2", 1), ("b2", 0)],
            &[("a1", "b1", 2), ("a2", "b2", 2)],
            &[],
        );
        let t = handle_slide(&s, "a2", "a1", Sign::Plus).unwrap();
        assert_eq!(t.points("a2", "b1"), n(2));
        assert_eq!(t.points("a2", "b2"), n(2));
        assert_eq!(homology(&t).unwrap(), homology(&s).unwrap());
    }

    #[test]
    fn slide_and_inverse_restore_points_and_eta() {
        let s = score(
            0,
            &[("x", 2), ("y", 2), ("p", 1), ("q", 0), ("r", 0)],
            &[("y", "p", 2)],
            &[("y", "q"), ("x", "r")],
        );
        let t = handle_slide(&s, "x", "y", Sign::Plus).unwrap();
        assert_eq!(t.points("x", "p"), n(2));
        assert!(t.eta("x", "q"));
        let u = handle_slide(&t, "x", "y", Sign::Minus).unwrap();
        assert_eq!(
            u.points_entries().collect::<Vec<_>>(),
            s.points_entries().collect::<Vec<_>>()
        );
        assert_eq!(
            u.eta_entries().collect::<Vec<_>>(),
            s.eta_entries().collect::<Vec<_>>()
        );
    }

    #[test]
    fn level_three_slide_copies_xi_and_eps() {
        let mut s = score(
            0,
            &[("a1", 3), ("a2", 3), ("w", 1), ("z", 0)],
            &[],
            &[("a1", "w")],
        );
        s.set_eps("a1", "z", Eps::One).unwrap();
        let t = handle_slide(&s, "a2", "a1", Sign::Plus).unwrap();
        assert!(t.eta("a2", "w"));
        assert_eq!(t.eps("a2", "z"), Eps::One);
        let twice = handle_slide_times(&s, "a2", "a1", Sign::Plus, &n(2)).unwrap();
        assert!(!twice.eta("a2", "w"));
        assert_eq!(twice.eps("a2", "z"), Eps::Zero);
    }

    #[test]
    fn slide_errors() {
        let s = fix_a();
        assert_eq!(
            handle_slide(&s, "a", "a", Sign::Plus),
            Err(MoveError::SameObject("a".into()))
        );
        assert!(matches!(
            handle_slide(&s, "a", "b", Sign::Plus),
            Err(MoveError::LevelMismatch(_))
        ));
    }

    #[test]
    fn trick2_on_fix_b_cancels_the_eps() {
        let mut s = score(
            0,
            &[("a", 3), ("b", 2), ("c", 1), ("d", 0)],
            &[("b", "c", 3)],
            &[("b", "d")],
        );
        s.set_eps("a", "d", Eps::One).unwrap();
        let t = trick2(&s, "a", "b").unwrap();
        assert_eq!(t.eps("a", "d"), Eps::Zero);
        assert!(t.eta("a", "c"));
        assert_eq!(t, fix_a());
    }

    #[test]
    fn trick2_with_empty_neighbourhood_is_identity() {
        let s = score(0, &[("b", 2), ("c", 1), ("x", 0)], &[], &[]);
        assert_eq!(trick2(&s, "b", "c").unwrap(), s);
    }

    #[test]
    fn trick2_single_eta_toggles_one_eps() {
        let s = score(0, &[("b", 3), ("c", 2), ("d", 0)], &[], &[("c", "d")]);
        let t = trick2(&s, "b", "c").unwrap();
        assert_eq!(t.eps("b", "d"), Eps::One);
        assert!(t.eta("c", "d"));
        assert_eq!(t.eps_entries().count(), 1);
    }

    #[test]
    fn trick1_clears_eta_over_odd_edge() {
        let s = score(
            0,
            &[("b", 2), ("c", 1), ("d", 0)],
            &[("c", "d", 3)],
            &[("b", "d")],
        );
        let t = trick1_eta(&s, "b", "c", "d", false).unwrap();
        assert!(!t.eta("b", "d"));
        assert_eq!(t.points("c", "d"), n(3));
        let even = score(
            0,
            &[("b", 2), ("c", 1), ("d", 0)],
            &[("c", "d", 2)],
            &[("b", "d")],
        );
        assert!(matches!(
            trick1_eta(&even, "b", "c", "d", false),
            Err(MoveError::Precondition(_))
        ));
    }

    #[test]
    fn trick1_dual_clears_eta_above_odd_edge() {
        let s = score(
            0,
            &[("c", 3), ("d", 2), ("b", 1)],
            &[("c", "d", 5)],
            &[("c", "b")],
        );
        let t = trick1_eta(&s, "b", "c", "d", true).unwrap();
        assert!(!t.eta("c", "b"));
        assert_eq!(t.points("c", "d"), n(5));
    }

    #[test]
    fn trick1_eta_composition_matches_eta_square_eps() {
        let s = fix_a();
        let t = trick1_eta(&s, "d", "b", "c", true).unwrap();
        let t = trick1_eta(&t, "a", "b", "c", false).unwrap();
        let u = eta_square_eps(&s, "a", "b", "c", "d", EpsDirection::Remove).unwrap();
        assert_eq!(t, u);
    }

    #[test]
    fn eta_square_eps_on_fix_a() {
        let t = eta_square_eps(&fix_a(), "a", "b", "c", "d", EpsDirection::Remove).unwrap();
        assert_eq!(t.eta_entries().count(), 0);
        assert_eq!(t.eps("a", "d"), Eps::One);
        assert_eq!(t.points("b", "c"), n(3));
        let back = eta_square_eps(&t, "a", "b", "c", "d", EpsDirection::Create).unwrap();
        assert_eq!(back, fix_a());
    }

    #[test]
    fn trick1_eps_clears_closed_eps() {
        let mut s = score(0, &[("b", 3), ("c", 1), ("d", 0)], &[("c", "d", 3)], &[]);
        s.set_eps("b", "d", Eps::One).unwrap();
        let t = trick1_eps(&s, "b", "c", "d", false).unwrap();
        assert_eq!(t.eps("b", "d"), Eps::Zero);
    }

    fn be_one(q: i64, p: i64) -> FlowScore {
        score(
            0,
            &[("b", 2), ("c1", 1), ("d1", 0), ("c2", 1), ("d2", 0)],
            &[("c1", "d1", q), ("c2", "d2", p)],
            &[("b", "d1"), ("b", "d2")],
        )
    }

    fn binds(pairs: &[(&str, &str)]) -> BTreeMap<String, ObjectId> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn hook_be_one() {
        let s = be_one(4, 2);
        let b = binds(&[
            ("b", "b"),
            ("c1", "c1"),
            ("d1", "d1"),
            ("c2", "c2"),
            ("d2", "d2"),
        ]);
        let (t, recs) = hook_slides(&s, HookLemma::Be, 1, &b).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(t.eta("b", "d1"));
        assert!(!t.eta("b", "d2"));
        assert_eq!(t.points("c1", "d2"), n(0));
        assert_eq!(t.points("c1", "d1"), n(4));
        assert_eq!(t.points("c2", "d2"), n(2));
        assert_eq!(homology(&t).unwrap(), homology(&s).unwrap());
        assert!(hook_composite(&s, HookLemma::Be, 2, &b).is_err());
    }

    #[test]
    fn hook_be_five_single_slide() {
        let s = score(
            0,
            &[("b", 2), ("d1", 0), ("c2", 1), ("d2", 0)],
            &[("c2", "d2", 2)],
            &[("b", "d1"), ("b", "d2")],
        );
        let b = binds(&[("b", "b"), ("d1", "d1"), ("c2", "c2"), ("d2", "d2")]);
        let (t, recs) = hook_slides(&s, HookLemma::Be, 5, &b).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(!t.eta("b", "d2"));
        assert!(t.eta("b", "d1"));
    }

    #[test]
    fn hook_te_three_annihilates_eta() {
        let s = score(
            0,
            &[("b1", 2), ("b2", 2), ("a2", 3), ("d", 0)],
            &[("a2", "b2", 2)],
            &[("b1", "d"), ("b2", "d")],
        );
        let b = binds(&[("b1", "b1"), ("b2", "b2"), ("a2", "a2"), ("d", "d")]);
        let t = hook_composite(&s, HookLemma::Te, 3, &b).unwrap();
        assert!(!t.eta("b1", "d"));
        assert!(t.eta("b2", "d"));
    }

    #[test]
    fn cancel_unit_examples() {
        let s = score(0, &[("x", 1), ("y", 0), ("z", 2)], &[("x", "y", 1)], &[]);
        let t = cancel_unit(&s, "x", "y").unwrap();
        assert_eq!(t.len(), 1);
        let s = score(
            0,
            &[("x", 1), ("y", 0), ("a", 1), ("b", 0)],
            &[("x", "y", 1), ("a", "y", 2), ("x", "b", 3)],
            &[],
        );
        let t = cancel_unit(&s, "x", "y").unwrap();
        assert_eq!(t.points("a", "b"), n(-6));
        assert_eq!(homology(&t).unwrap(), homology(&s).unwrap());
    }

    #[test]
    fn insert_then_cancel_is_identity() {
        let s = fix_a();
        let t = insert_pair(&s, "u", "v", 2, Sign::Minus).unwrap();
        assert_eq!(cancel_unit(&t, "u", "v").unwrap(), s);
    }

    #[test]
    fn no_two_eps_two_pins_value() {
        let s = score(
            0,
            &[("a", 3), ("b", 2), ("c", 1), ("d", 0)],
            &[("a", "b", 2), ("c", "d", 2)],
            &[],
        );
        let t = no_two_eps_two(&s, "a", "b", "c", "d", true).unwrap();
        assert_eq!(t.eps("a", "d"), Eps::One);
        assert_eq!(no_two_eps_two(&t, "a", "b", "c", "d", false).unwrap(), s);
    }

    #[test]
    fn eps_double_slide_toggles() {
        let mut s = score(
            0,
            &[("a", 3), ("p", 3), ("c", 1), ("d", 0)],
            &[("c", "d", 2)],
            &[("a", "c")],
        );
        s.force_unknown_where_unsupported();
        let t = eps_double_slide(&s, "p", "a", false).unwrap();
        assert_eq!(t.eps("p", "d"), Eps::One);
        assert!(!t.eta("p", "c"));
        let u = eps_double_slide(&t, "p", "a", false).unwrap();
        assert_eq!(u, s);
    }

    #[test]
    fn trace_round_trip_and_replay() {
        let mut sess = Session::new(fix_a());
        sess.apply(MoveRecord::InsertPair {
            upper: "u v".into(),
            lower: "w".into(),
            level: 3,
            sign: Sign::Plus,
        })
        .unwrap();
        sess.slide("a", "u v", Sign::Minus, n(1)).unwrap();
        sess.apply(MoveRecord::EtaSquareEps {
            a: "a".into(),
            b: "b".into(),
            c: "c".into(),
            d: "d".into(),
            direction: EpsDirection::Remove,
        })
        .unwrap();
        let (out, log) = sess.finish();
        let text = log.to_trace();
        let parsed = MoveLog::parse_trace(&text).unwrap();
        assert_eq!(parsed, log);
        assert_eq!(parsed.replay(&fix_a()).unwrap(), out);
        let mut bad = parsed.clone();
        bad.final_digest = Some("00".into());
        assert!(bad.replay(&fix_a()).is_err());
        assert!(MoveLog::parse_trace("garbage").is_err());
        let _ = vec![0u8];
    }
}

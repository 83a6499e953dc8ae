//! The staged normalization pipeline and the equivalence decision.
//!
//! A valid, reduced score is brought to primary Smith form, then to Chang
//! form, then to almost Baues–Hennes form, and finally named as a
//! [`BHForm`]. Every stage works through certified moves recorded in a
//! [`MoveLog`], so the whole reduction can be replayed.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::linalg::{f2_canonical_form, is_prime_power, prime_power_refine, F2Block, F2Matrix};
use crate::moves::{fresh_id, MoveError, MoveLog, MoveRecord, Session, Sign};
use crate::score::{form_predicates, validate, Eps, FlowScore, ObjectId, ValidationReport};
use crate::words::{
    recognize, rho, sigma, sigma_bar, word_to_score, Ext, Letter, RationalSymbol, Summand, Symbol,
    Unrecognized, Word,
};

pub use crate::words::{BHForm, NamedSummand};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NormalizeError {
    Invalid(ValidationReport),
    /// Some 1-dimensional moduli space has boundary.
    NotReduced(String),
    /// The input is not in the form a stage requires.
    WrongForm(String),
    Move(MoveError),
    /// The reduction reached a configuration it cannot resolve.
    Unsupported(String),
    Unrecognized(Unrecognized),
}

impl fmt::Display for NormalizeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalizeError::Invalid(r) => write!(f, "invalid score: {r}"),
            NormalizeError::NotReduced(m) => write!(f, "score is not reduced: {m}"),
            NormalizeError::WrongForm(m) => write!(f, "wrong input form: {m}"),
            NormalizeError::Move(e) => write!(f, "{e}"),
            NormalizeError::Unsupported(m) => write!(f, "unsupported configuration: {m}"),
            NormalizeError::Unrecognized(u) => write!(f, "{u}"),
        }
    }
}

impl From<MoveError> for NormalizeError {
    fn from(e: MoveError) -> Self {
        NormalizeError::Move(e)
    }
}

type Result<T> = core::result::Result<T, NormalizeError>;

fn unsupported(msg: impl Into<String>) -> NormalizeError {
    NormalizeError::Unsupported(msg.into())
}

/// Slides `x` over `y` with signed multiplicity `m`; zero is a no-op.
fn slide_by(sess: &mut Session, x: &str, y: &str, m: &BigInt) -> Result<()> {
    if m.is_zero() {
        return Ok(());
    }
    sess.slide(x, y, Sign::of(m), m.abs())?;
    Ok(())
}

fn exact_div(a: &BigInt, b: &BigInt) -> Result<BigInt> {
    if b.is_zero() || !(a % b).is_zero() {
        return Err(unsupported(format!("{a} is not a multiple of {b}")));
    }
    Ok(a / b)
}

fn check_reduced(s: &FlowScore) -> Result<()> {
    let report = validate(s);
    if !report.is_empty() {
        return Err(NormalizeError::Invalid(report));
    }
    if let Some((a, c)) = crate::moves::non_closed_pairs(s).into_iter().next() {
        return Err(NormalizeError::NotReduced(format!(
            "M({a}, {c}) has boundary"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Primary Smith form

/// Diagonalizes every differential with prime-power entries.
///
/// Row and column operations are single handle slides among objects that
/// only emit (rows) or only receive (columns) points, so each slide is
/// certified in a reduced score. Unit entries are cancelled and composite
/// entries are split through an inserted cancelling pair.
pub fn to_primary_smith(s: &FlowScore) -> Result<(FlowScore, MoveLog)> {
    check_reduced(s)?;
    let mut sess = Session::new(s.clone());
    for level in (1..=3u8).rev() {
        diagonalize(&mut sess, level)?;
    }
    let entries: Vec<(ObjectId, ObjectId, BigInt)> = sess
        .score()
        .points_entries()
        .map(|(a, b, n)| (a.clone(), b.clone(), n.clone()))
        .collect();
    for (x, y, d) in entries {
        if d.abs().is_one() {
            sess.apply(MoveRecord::CancelUnit { x, y })?;
        } else if !is_prime_power(&d.abs()) {
            split_composite(&mut sess, &x, &y)?;
        }
    }
    Ok(sess.finish())
}

fn diagonalize(sess: &mut Session, level: u8) -> Result<()> {
    let mut done_rows: BTreeSet<ObjectId> = BTreeSet::new();
    let mut done_cols: BTreeSet<ObjectId> = BTreeSet::new();
    loop {
        let s = sess.score().clone();
        let mut pivot: Option<(BigInt, ObjectId, ObjectId)> = None;
        for r in s.at_level(level) {
            if done_rows.contains(&r) {
                continue;
            }
            for (c, v) in s.points_out(&r) {
                if done_cols.contains(&c) {
                    continue;
                }
                let a = v.abs();
                if pivot.as_ref().is_none_or(|(b, _, _)| a < *b) {
                    pivot = Some((a, r.clone(), c));
                }
            }
        }
        let Some((_, r, c)) = pivot else {
            return Ok(());
        };
        let v = s.points(&r, &c);
        let mut clean = true;
        for (c2, v2) in s.points_out(&r) {
            if c2 == c {
                continue;
            }
            let q = &v2 / &v;
            // col c2 -= q col c
            slide_by(sess, &c, &c2, &q)?;
            clean &= (&v2 % &v).is_zero();
        }
        for (r2, v2) in s.points_in(&c) {
            if r2 == r {
                continue;
            }
            let q = &v2 / &v;
            // row r2 -= q row r
            slide_by(sess, &r2, &r, &-q)?;
            clean &= (&v2 % &v).is_zero();
        }
        if clean {
            done_rows.insert(r);
            done_cols.insert(c);
        }
    }
}

/// An elementary operation on a 2×2 block: `row i += q row j` or
/// `col i += q col j`.
#[derive(Clone, Debug)]
struct Elem {
    row: bool,
    i: usize,
    j: usize,
    q: BigInt,
}

#[allow(clippy::needless_range_loop)]
fn apply_elem(m: &mut [[BigInt; 2]; 2], e: &Elem) {
    for k in 0..2 {
        if e.row {
            let add = &e.q * &m[e.j][k];
            m[e.i][k] += add;
        } else {
            let add = &e.q * &m[k][e.j];
            m[k][e.i] += add;
        }
    }
}

/// Operations taking `diag(a, b)` with coprime entries to `diag(±1, y)`.
fn euclid_ops(a: &BigInt, b: &BigInt) -> (Vec<Elem>, [[BigInt; 2]; 2]) {
    let z = BigInt::zero;
    let mut m = [[a.clone(), z()], [z(), b.clone()]];
    let mut ops = Vec::new();
    let mut push = |m: &mut [[BigInt; 2]; 2], e: Elem| {
        apply_elem(m, &e);
        ops.push(e);
    };
    push(
        &mut m,
        Elem {
            row: false,
            i: 0,
            j: 1,
            q: BigInt::one(),
        },
    );
    while !m[1][0].is_zero() {
        if m[0][0].is_zero() {
            push(
                &mut m,
                Elem {
                    row: true,
                    i: 0,
                    j: 1,
                    q: BigInt::one(),
                },
            );
        } else if m[0][0].abs() > m[1][0].abs() {
            let q = &m[0][0] / &m[1][0];
            push(
                &mut m,
                Elem {
                    row: true,
                    i: 0,
                    j: 1,
                    q: -q,
                },
            );
        } else {
            let q = &m[1][0] / &m[0][0];
            push(
                &mut m,
                Elem {
                    row: true,
                    i: 1,
                    j: 0,
                    q: -q,
                },
            );
        }
    }
    let q = -(&m[0][1] * &m[0][0]);
    push(
        &mut m,
        Elem {
            row: false,
            i: 1,
            j: 0,
            q,
        },
    );
    (ops, m)
}

/// Row operations multiplying a 2×2 block by `-1`.
fn negation_ops() -> Vec<Elem> {
    let t = |i, j, q: i32| Elem {
        row: true,
        i,
        j,
        q: BigInt::from(q),
    };
    let quarter = [t(0, 1, -1), t(1, 0, 1), t(0, 1, -1)];
    quarter.iter().chain(quarter.iter()).cloned().collect()
}

/// Splits `D(x, y)` into prime-power pairs through inserted cancelling pairs.
fn split_composite(sess: &mut Session, x: &str, y: &str) -> Result<()> {
    let d = sess.score().points(x, y);
    let factors = prime_power_refine(&d.abs()).map_err(|e| unsupported(e.to_string()))?;
    if factors.len() < 2 {
        return Ok(());
    }
    let level = sess
        .score()
        .level(x)
        .ok_or_else(|| NormalizeError::Move(MoveError::UnknownObject(x.to_string())))?;
    let m = factors[0].clone();
    let n: BigInt = factors[1..].iter().product();
    let signed_m = if d.is_negative() { -m } else { m };
    let (mut ops, mut end) = euclid_ops(&signed_m, &n);
    if end[1][1] != d {
        for e in negation_ops() {
            apply_elem(&mut end, &e);
            ops.push(e);
        }
    }
    if end[1][1] != d || !end[0][1].is_zero() || !end[1][0].is_zero() {
        return Err(unsupported(format!("cannot split D({x}, {y}) = {d}")));
    }
    let g = end[0][0].clone();
    let upper = fresh_id(sess.score(), &format!("{x}.s"));
    let lower = fresh_id(sess.score(), &format!("{y}.s"));
    sess.apply(MoveRecord::InsertPair {
        upper: upper.clone(),
        lower: lower.clone(),
        level,
        sign: Sign::of(&g),
    })?;
    let rows = [upper.as_str(), x];
    let cols = [lower.as_str(), y];
    for e in ops.iter().rev() {
        let q = -&e.q;
        if e.row {
            slide_by(sess, rows[e.i], rows[e.j], &q)?;
        } else {
            // col i += q col j
            slide_by(sess, cols[e.j], cols[e.i], &-q)?;
        }
    }
    split_composite(sess, x, y)
}

// ---------------------------------------------------------------------------
// Chang form

fn odd_pairs(s: &FlowScore) -> Vec<(ObjectId, ObjectId)> {
    s.points_entries()
        .filter(|(_, _, n)| n.is_odd())
        .map(|(a, b, _)| (a.clone(), b.clone()))
        .collect()
}

/// Brings a primary Smith score to Chang form.
///
/// Odd-torsion pairs are first cut loose with the odd-pair tricks. The η
/// matrix between levels 2 and 0 is then reduced by Gaussian elimination in
/// which columns are ordered by `S(x)` (incoming point count, or ∞ for free
/// objects) and rows by `S(b)` (1/s, 0 or -1/t). Each row or column addition
/// is a slide followed by one repair slide restoring the diagonal points.
pub fn to_chang(s: &FlowScore) -> Result<(FlowScore, MoveLog)> {
    check_reduced(s)?;
    let flags = form_predicates(s).map_err(|_| NormalizeError::Invalid(validate(s)))?;
    if !flags.is_primary_smith {
        return Err(NormalizeError::WrongForm(
            "not in primary Smith form".into(),
        ));
    }
    let mut sess = Session::new(s.clone());
    isolate_odd(&mut sess)?;
    eliminate_eta(&mut sess)?;
    Ok(sess.finish())
}

fn isolate_odd(sess: &mut Session) -> Result<()> {
    let limit = 64 * (sess.score().len() + 1) * (sess.score().len() + 1);
    for _ in 0..limit {
        let s = sess.score().clone();
        let Some(m) = next_odd_move(&s) else {
            for (c, d) in odd_pairs(&s) {
                let touched = !s.eta_in(&c).is_empty()
                    || !s.eta_out(&c).is_empty()
                    || !s.eta_in(&d).is_empty()
                    || !s.eta_out(&d).is_empty()
                    || s.eps_in(&d)
                        .iter()
                        .chain(s.eps_out(&c).iter())
                        .any(|(_, e)| *e != Eps::Zero);
                if touched {
                    return Err(unsupported(format!(
                        "cannot isolate the odd pair ({c}, {d})"
                    )));
                }
            }
            return Ok(());
        };
        sess.apply(m)?;
    }
    Err(unsupported("odd-pair isolation did not terminate"))
}

fn next_odd_move(s: &FlowScore) -> Option<MoveRecord> {
    for (c, d) in odd_pairs(s) {
        if let Some(b) = s.eta_in(&d).into_iter().next() {
            return Some(MoveRecord::Trick1Eta {
                b,
                c,
                d,
                dual: false,
            });
        }
        if let Some(b) = s.eta_out(&c).into_iter().next() {
            return Some(MoveRecord::Trick1Eta {
                b,
                c,
                d,
                dual: true,
            });
        }
        let live = |a: &str, e: &str, v: Eps| v != Eps::Zero && s.eps_support_holds(a, e);
        if let Some((b, _)) = s.eps_in(&d).into_iter().find(|(b, v)| live(b, &d, *v)) {
            return Some(MoveRecord::Trick1Eps {
                b,
                c,
                d,
                dual: false,
            });
        }
        if let Some((b, _)) = s.eps_out(&c).into_iter().find(|(b, v)| live(&c, b, *v)) {
            return Some(MoveRecord::Trick1Eps {
                b,
                c,
                d,
                dual: true,
            });
        }
    }
    None
}

/// `S(x)` for a level-0 object; `None` stands for ∞.
fn col_key(s: &FlowScore, x: &str) -> Option<BigInt> {
    s.points_in(x).first().map(|(_, n)| n.abs())
}

/// `S(b)` for a level-2 object.
fn row_key(s: &FlowScore, b: &str) -> BigRational {
    if let Some((_, n)) = s.points_in(b).first() {
        return BigRational::new(BigInt::one(), n.abs());
    }
    if let Some((_, n)) = s.points_out(b).first() {
        return BigRational::new(-BigInt::one(), n.abs());
    }
    BigRational::zero()
}

fn col_key_cmp(a: &Option<BigInt>, b: &Option<BigInt>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Greater,
        (Some(_), None) => Ordering::Less,
        (Some(x), Some(y)) => x.cmp(y),
    }
}

fn eliminate_eta(sess: &mut Session) -> Result<()> {
    let odd: BTreeSet<ObjectId> = odd_pairs(sess.score())
        .into_iter()
        .flat_map(|(a, b)| [a, b])
        .collect();
    let mut rows: BTreeSet<ObjectId> = sess.score().at_level(2).into_iter().collect();
    let mut cols: BTreeSet<ObjectId> = sess.score().at_level(0).into_iter().collect();
    rows.retain(|x| !odd.contains(x));
    cols.retain(|x| !odd.contains(x));
    loop {
        let s = sess.score().clone();
        let mut pivot_col: Option<ObjectId> = None;
        for x in &cols {
            if !s.eta_in(x).iter().any(|b| rows.contains(b)) {
                continue;
            }
            let better = pivot_col
                .as_ref()
                .is_none_or(|p| col_key_cmp(&col_key(&s, x), &col_key(&s, p)) == Ordering::Greater);
            if better {
                pivot_col = Some(x.clone());
            }
        }
        let Some(x) = pivot_col else {
            return Ok(());
        };
        let mut pivot_row: Option<ObjectId> = None;
        for b in s.eta_in(&x) {
            if !rows.contains(&b) {
                continue;
            }
            if pivot_row
                .as_ref()
                .is_none_or(|p| row_key(&s, &b) > row_key(&s, p))
            {
                pivot_row = Some(b);
            }
        }
        let b = pivot_row.expect("column has an entry");
        for b2 in s.eta_in(&x) {
            if b2 != b && rows.contains(&b2) {
                chang_row_add(sess, &b2, &b)?;
            }
        }
        let s = sess.score().clone();
        for x2 in s.eta_out(&b) {
            if x2 != x && cols.contains(&x2) {
                chang_col_add(sess, &x2, &x)?;
            }
        }
        rows.remove(&b);
        cols.remove(&x);
    }
}

/// Adds the η row of `src` to `dst` (both at level 2) and restores points.
fn chang_row_add(sess: &mut Session, dst: &str, src: &str) -> Result<()> {
    let s = sess.score().clone();
    sess.slide(dst, src, Sign::Plus, BigInt::one())?;
    if let [(z, _)] = s.points_out(src).as_slice() {
        let v = sess.score().points(dst, z);
        if !v.is_zero() {
            let outs = s.points_out(dst);
            let [(z2, t2)] = outs.as_slice() else {
                return Err(unsupported(format!(
                    "row {dst} cannot absorb points of {src}"
                )));
            };
            let m = exact_div(&v, t2)?;
            // col z -= m col z2
            slide_by(sess, z2, z, &m)?;
        }
    }
    if let [(a2, _)] = s.points_in(dst).as_slice() {
        let v = sess.score().points(a2, src);
        if !v.is_zero() {
            let ins = s.points_in(src);
            let [(a, s1)] = ins.as_slice() else {
                return Err(unsupported(format!(
                    "row {src} cannot absorb points of {dst}"
                )));
            };
            let m = exact_div(&-v, s1)?;
            // row a2 += m row a
            slide_by(sess, a2, a, &m)?;
        }
    }
    Ok(())
}

/// Adds the η column of `src` to `dst` (both at level 0) and restores points.
fn chang_col_add(sess: &mut Session, dst: &str, src: &str) -> Result<()> {
    let s = sess.score().clone();
    sess.slide(src, dst, Sign::Plus, BigInt::one())?;
    if let [(z, _)] = s.points_in(src).as_slice() {
        let v = sess.score().points(z, dst);
        if !v.is_zero() {
            let ins = s.points_in(dst);
            let [(z2, r2)] = ins.as_slice() else {
                return Err(unsupported(format!(
                    "column {dst} cannot absorb points of {src}"
                )));
            };
            let m = exact_div(&-v, r2)?;
            // row z += m row z2
            slide_by(sess, z, z2, &m)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Parts and partitions

/// A zigzag of objects read from its start `α` to its end `ω`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Part {
    pub id: usize,
    pub objects: Vec<ObjectId>,
    /// One letter between each pair of consecutive objects.
    pub word: Vec<Letter>,
}

impl Part {
    pub fn alpha(&self) -> &ObjectId {
        &self.objects[0]
    }

    pub fn omega(&self) -> &ObjectId {
        self.objects.last().expect("parts are nonempty")
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{} [{}]", self.id, self.objects.join(" "))?;
        if !self.word.is_empty() {
            f.write_str(" ")?;
            for (i, l) in self.word.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{l}")?;
            }
        }
        Ok(())
    }
}

/// A cover of the objects of a score by disjoint parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub parts: Vec<Part>,
    /// Ids of parts isolated as cyclic summands.
    pub cyclic: BTreeSet<usize>,
    next_id: usize,
}

impl Partition {
    fn new(parts: Vec<Part>) -> Partition {
        let next_id = parts.iter().map(|p| p.id + 1).max().unwrap_or(0);
        Partition {
            parts,
            cyclic: BTreeSet::new(),
            next_id,
        }
    }

    pub fn part(&self, id: usize) -> Option<&Part> {
        self.parts.iter().find(|p| p.id == id)
    }

    /// The part holding `x` and the position of `x` in it.
    pub fn locate(&self, x: &str) -> Option<(usize, usize)> {
        self.parts
            .iter()
            .find_map(|p| p.objects.iter().position(|o| o == x).map(|i| (p.id, i)))
    }

    /// `(level of α, level of ω)`; the part lies in `P_i` and `P̄_j`.
    pub fn class(&self, s: &FlowScore, id: usize) -> Option<(u8, u8)> {
        let p = self.part(id)?;
        Some((s.level(p.alpha())?, s.level(p.omega())?))
    }

    /// `τ` of a part starting at level 1 or 2: the size of the points
    /// between its start and its dual's start, signed by the start level.
    pub fn tau(&self, s: &FlowScore, id: usize) -> Option<Ext> {
        let p = self.part(id)?;
        match s.level(p.alpha())? {
            1 => Some(match s.points_in(p.alpha()).first() {
                Some((_, n)) => Ext::Fin(n.abs()),
                None => Ext::PosInf,
            }),
            2 => Some(match s.points_out(p.alpha()).first() {
                Some((_, n)) => Ext::Fin(-n.abs()),
                None => Ext::NegInf,
            }),
            _ => None,
        }
    }

    /// The part joined to this one by points between their starts.
    pub fn dual(&self, s: &FlowScore, id: usize) -> Option<usize> {
        let p = self.part(id)?;
        let other = match s.level(p.alpha())? {
            1 => s.points_in(p.alpha()).first()?.0.clone(),
            2 => s.points_out(p.alpha()).first()?.0.clone(),
            _ => return None,
        };
        match self.locate(&other)? {
            (q, 0) => Some(q),
            _ => None,
        }
    }

    /// Checks that the parts cover `s` disjointly and realize their words.
    pub fn check(&self, s: &FlowScore) -> core::result::Result<(), String> {
        let mut seen = BTreeSet::new();
        for p in &self.parts {
            if p.objects.is_empty() || p.word.len() + 1 != p.objects.len() {
                return Err(format!("part P{} is malformed", p.id));
            }
            for x in &p.objects {
                if !s.contains(x) {
                    return Err(format!("unknown object {x}"));
                }
                if !seen.insert(x.clone()) {
                    return Err(format!("object {x} lies in two parts"));
                }
            }
            for (i, l) in p.word.iter().enumerate() {
                if letter_between(s, &p.objects[i], &p.objects[i + 1]).as_ref() != Some(l) {
                    return Err(format!("part P{} does not realize `{l}`", p.id));
                }
            }
        }
        if seen.len() != s.len() {
            return Err("parts do not cover every object".into());
        }
        Ok(())
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{p}")?;
            if self.cyclic.contains(&p.id) {
                f.write_str(" (cyclic)")?;
            }
        }
        Ok(())
    }
}

/// The letter read when stepping from `p` to `q` along a part.
fn letter_between(s: &FlowScore, p: &str, q: &str) -> Option<Letter> {
    match (s.level(p)?, s.level(q)?) {
        (3, 2) => nonzero(s.points(p, q)).map(Letter::S),
        (2, 0) => s.eta(p, q).then_some(Letter::Eta),
        (0, 1) => nonzero(s.points(q, p)).map(Letter::R),
        (1, 3) => s.eta(q, p).then_some(Letter::Xi),
        _ => None,
    }
}

fn nonzero(n: BigInt) -> Option<BigInt> {
    (!n.is_zero()).then(|| n.abs())
}

const READING_ORDER: [u8; 4] = [3, 2, 0, 1];

/// Components after deleting every ξ entry and every point between levels
/// 2 and 1, each read in the order 3, 2, 0, 1.
pub fn base_partition(s: &FlowScore) -> Result<Partition> {
    let flags = form_predicates(s).map_err(|_| NormalizeError::Invalid(validate(s)))?;
    if !flags.is_chang {
        return Err(NormalizeError::WrongForm("not in Chang form".into()));
    }
    let mut seen: BTreeSet<ObjectId> = BTreeSet::new();
    let mut comps: Vec<Vec<ObjectId>> = Vec::new();
    for id in s.ids() {
        if seen.contains(id) {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut stack = vec![id.clone()];
        while let Some(x) = stack.pop() {
            if !comp.insert(x.clone()) {
                continue;
            }
            let lx = s.level(&x).unwrap_or(0);
            let mut nb: Vec<ObjectId> = Vec::new();
            match lx {
                3 => nb.extend(s.points_out(&x).into_iter().map(|(y, _)| y)),
                2 => {
                    nb.extend(s.points_in(&x).into_iter().map(|(y, _)| y));
                    nb.extend(s.eta_out(&x).into_iter().filter(|y| s.level(y) == Some(0)));
                }
                0 => {
                    nb.extend(s.points_in(&x).into_iter().map(|(y, _)| y));
                    nb.extend(s.eta_in(&x));
                }
                _ => nb.extend(s.points_out(&x).into_iter().map(|(y, _)| y)),
            }
            stack.extend(nb.into_iter().filter(|y| !comp.contains(y)));
        }
        seen.extend(comp.iter().cloned());
        let mut ordered: Vec<ObjectId> = comp.into_iter().collect();
        ordered.sort_by_key(|x| {
            let l = s.level(x).unwrap_or(0);
            READING_ORDER.iter().position(|&r| r == l)
        });
        comps.push(ordered);
    }
    comps.sort_by(|a, b| a[0].cmp(&b[0]));
    let mut parts = Vec::new();
    for (id, objects) in comps.into_iter().enumerate() {
        let mut word = Vec::new();
        for w in objects.windows(2) {
            let l = letter_between(s, &w[0], &w[1])
                .ok_or_else(|| unsupported(format!("component of {} is not a zigzag", w[0])))?;
            word.push(l);
        }
        parts.push(Part { id, objects, word });
    }
    Ok(Partition::new(parts))
}

/// The matrix `[P : P′]` for `P` starting at level 3 and `P′` ending at
/// level 1, with rows indexed by `P′` and columns by `P`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncidenceMatrix {
    /// Part ids ending at level 1.
    pub rows: Vec<usize>,
    /// Part ids starting at level 3.
    pub cols: Vec<usize>,
    pub matrix: F2Matrix,
}

impl IncidenceMatrix {
    /// `[from : to]`.
    pub fn entry(&self, from: usize, to: usize) -> Option<bool> {
        let i = self.rows.iter().position(|&r| r == to)?;
        let j = self.cols.iter().position(|&c| c == from)?;
        Some(self.matrix.get(i, j))
    }
}

pub fn incidence_matrix(s: &FlowScore, p: &Partition) -> IncidenceMatrix {
    let level = |x: &ObjectId| s.level(x).unwrap_or(0);
    let rows: Vec<usize> = p
        .parts
        .iter()
        .filter(|q| level(q.omega()) == 1)
        .map(|q| q.id)
        .collect();
    let cols: Vec<usize> = p
        .parts
        .iter()
        .filter(|q| level(q.alpha()) == 3)
        .map(|q| q.id)
        .collect();
    let mut matrix = F2Matrix::zeros(rows.len(), cols.len());
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            let (to, from) = (p.part(r).unwrap(), p.part(c).unwrap());
            matrix.set(i, j, s.eta(from.alpha(), to.omega()));
        }
    }
    IncidenceMatrix { rows, cols, matrix }
}

// ---------------------------------------------------------------------------
// Ripples

#[derive(Clone, Debug, PartialEq, Eq)]
enum Edge {
    /// Points; `down` when the edge leaves the earlier object of the walk.
    Points {
        down: bool,
        n: BigInt,
    },
    Eta {
        down: bool,
    },
}

fn edge(s: &FlowScore, p: &str, q: &str) -> Option<Edge> {
    let (lp, lq) = (s.level(p)?, s.level(q)?);
    if lp == lq + 1 {
        let n = s.points(p, q);
        return (!n.is_zero()).then_some(Edge::Points { down: true, n });
    }
    if lq == lp + 1 {
        let n = s.points(q, p);
        return (!n.is_zero()).then_some(Edge::Points { down: false, n });
    }
    if lp == lq + 2 {
        return s.eta(p, q).then_some(Edge::Eta { down: true });
    }
    if lq == lp + 2 {
        return s.eta(q, p).then_some(Edge::Eta { down: false });
    }
    None
}

fn walk_edges(s: &FlowScore, w: &[ObjectId]) -> Result<Vec<Edge>> {
    w.windows(2)
        .map(|p| {
            edge(s, &p[0], &p[1]).ok_or_else(|| unsupported(format!("no edge {} {}", p[0], p[1])))
        })
        .collect()
}

/// Slides `x[0]` over `y[0]` `k` times, then keeps sliding `x[i]` over
/// `y[i]` with the multiplicity that cancels the entry created by the
/// previous slide, until it vanishes or a walk ends.
fn ripple(sess: &mut Session, x: &[ObjectId], y: &[ObjectId], k0: BigInt) -> Result<()> {
    let s0 = sess.score().clone();
    let ex = walk_edges(&s0, x)?;
    let ey = walk_edges(&s0, y)?;
    let mut k = k0;
    slide_by(sess, &x[0], &y[0], &k)?;
    for i in 0..ex.len().min(ey.len()) {
        let next = match (&ex[i], &ey[i]) {
            (Edge::Points { down: true, n: vx }, Edge::Points { down: true, n: vy }) => {
                exact_div(&(&k * vy), vx)?
            }
            (Edge::Points { down: false, n: vx }, Edge::Points { down: false, n: vy }) => {
                exact_div(&(&k * vx), vy)?
            }
            (Edge::Eta { down: a }, Edge::Eta { down: b }) if a == b => {
                if k.is_odd() {
                    BigInt::one()
                } else {
                    BigInt::zero()
                }
            }
            _ => break,
        };
        if next.is_zero() {
            break;
        }
        if x[i + 1] == y[i + 1] {
            return Err(unsupported(format!("walks meet at {}", x[i + 1])));
        }
        slide_by(sess, &x[i + 1], &y[i + 1], &next)?;
        k = next;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Almost Baues–Hennes form

const REPAIR_LIMIT: usize = 256;

struct Engine {
    sess: Session,
    parts: Partition,
    loc: BTreeMap<ObjectId, (usize, usize)>,
}

/// Disallowed entries found by [`Engine::frame`].
struct Frame {
    /// ξ entries that do not run from a start to an end.
    stray_xi: Vec<(ObjectId, ObjectId)>,
    other: Vec<String>,
}

impl Engine {
    fn new(score: FlowScore, parts: Partition) -> Engine {
        let mut e = Engine {
            sess: Session::new(score),
            parts,
            loc: BTreeMap::new(),
        };
        e.reindex();
        e
    }

    fn s(&self) -> &FlowScore {
        self.sess.score()
    }

    fn reindex(&mut self) {
        self.loc.clear();
        for (pi, p) in self.parts.parts.iter().enumerate() {
            for (i, x) in p.objects.iter().enumerate() {
                self.loc.insert(x.clone(), (pi, i));
            }
        }
    }

    fn part(&self, pi: usize) -> &Part {
        &self.parts.parts[pi]
    }

    fn level(&self, x: &str) -> u8 {
        self.s().level(x).unwrap_or(0)
    }

    fn alpha_level(&self, pi: usize) -> u8 {
        self.level(self.part(pi).alpha())
    }

    fn omega_level(&self, pi: usize) -> u8 {
        self.level(self.part(pi).omega())
    }

    /// Odd-torsion pieces never take part in the reduction.
    fn is_odd(&self, pi: usize) -> bool {
        let p = self.part(pi);
        let odd_letter = p.word.iter().any(|l| match l {
            Letter::S(n) | Letter::R(n) => n.is_odd(),
            _ => false,
        });
        let a = p.alpha();
        odd_letter
            || self
                .s()
                .points_out(a)
                .iter()
                .chain(self.s().points_in(a).iter())
                .any(|(_, n)| n.is_odd())
    }

    fn active(&self, pi: usize) -> bool {
        !self.parts.cyclic.contains(&self.part(pi).id) && !self.is_odd(pi)
    }

    fn p3(&self) -> Vec<usize> {
        (0..self.parts.parts.len())
            .filter(|&p| self.active(p) && self.alpha_level(p) == 3)
            .collect()
    }

    fn pbar1(&self) -> Vec<usize> {
        (0..self.parts.parts.len())
            .filter(|&p| self.active(p) && self.omega_level(p) == 1)
            .collect()
    }

    fn inc(&self, p: usize, q: usize) -> bool {
        self.s().eta(self.part(p).alpha(), self.part(q).omega())
    }

    fn id(&self, pi: usize) -> usize {
        self.part(pi).id
    }

    fn sigma_key(&self, pi: usize) -> Result<Symbol> {
        let mut w = vec![Letter::Xi];
        w.extend(self.part(pi).word.iter().cloned());
        sigma(&w).map_err(|e| unsupported(e.to_string()))
    }

    fn sigma_bar_key(&self, pi: usize) -> Result<RationalSymbol> {
        let mut w = self.part(pi).word.clone();
        w.push(Letter::Xi);
        sigma_bar(&w).map_err(|e| unsupported(e.to_string()))
    }

    fn tau(&self, pi: usize) -> Option<Ext> {
        self.parts.tau(self.s(), self.id(pi))
    }

    fn dual(&self, pi: usize) -> Option<usize> {
        let id = self.parts.dual(self.s(), self.id(pi))?;
        self.parts.parts.iter().position(|p| p.id == id)
    }

    /// `p ⊴ q` on parts ending at level 1.
    fn trileq(&self, p: usize, q: usize) -> Result<bool> {
        let (sp, sq) = (self.sigma_bar_key(p)?, self.sigma_bar_key(q)?);
        match sp.cmp(&sq) {
            Ordering::Less => return Ok(true),
            Ordering::Greater => return Ok(false),
            Ordering::Equal => {}
        }
        let (tp, tq) = (self.tau(p), self.tau(q));
        let (Some(tp), Some(tq)) = (tp, tq) else {
            return Ok(true);
        };
        if tq == Ext::PosInf || tp == Ext::NegInf {
            return Ok(true);
        }
        match tp.cmp(&tq) {
            Ordering::Less => return Ok(true),
            Ordering::Greater => return Ok(false),
            Ordering::Equal => {}
        }
        let (Some(dp), Some(dq)) = (self.dual(p), self.dual(q)) else {
            return Ok(true);
        };
        let (wp, wq) = (&self.part(dp).word, &self.part(dq).word);
        let key = |w: &[Letter]| {
            if self.alpha_level(p) == 1 {
                rho(w)
            } else {
                sigma(w)
            }
        };
        let err = |e: crate::words::WordError| unsupported(e.to_string());
        Ok(key(wq).map_err(err)? <= key(wp).map_err(err)?)
    }

    fn same_word(&self, p: usize, q: usize) -> bool {
        self.part(p).word == self.part(q).word
    }

    /// The part's objects from position `from` to its end.
    fn walk_forward(&self, pi: usize, from: usize) -> Vec<ObjectId> {
        self.part(pi).objects[from..].to_vec()
    }

    /// The part's objects from position `from` back to its start, continued
    /// through the points at the start into the dual part.
    fn walk_backward(&self, pi: usize, from: usize) -> Vec<ObjectId> {
        let mut w: Vec<ObjectId> = self.part(pi).objects[..=from]
            .iter()
            .rev()
            .cloned()
            .collect();
        if let Some(d) = self.dual(pi) {
            w.extend(self.part(d).objects.iter().cloned());
        }
        w
    }

    fn frame(&self) -> Frame {
        let s = self.s();
        let mut chain: BTreeSet<(ObjectId, ObjectId)> = BTreeSet::new();
        for p in &self.parts.parts {
            for w in p.objects.windows(2) {
                chain.insert((w[0].clone(), w[1].clone()));
                chain.insert((w[1].clone(), w[0].clone()));
            }
        }
        let pos = |x: &ObjectId| self.loc.get(x).copied();
        let is_start = |x: &ObjectId| pos(x).is_some_and(|(_, i)| i == 0);
        let is_end = |x: &ObjectId| {
            pos(x).is_some_and(|(pi, i)| i + 1 == self.parts.parts[pi].objects.len())
        };
        let mut out = Frame {
            stray_xi: Vec::new(),
            other: Vec::new(),
        };
        for (a, b, _) in s.points_entries() {
            if chain.contains(&(a.clone(), b.clone())) {
                continue;
            }
            let t_edge = s.level(a) == Some(2)
                && is_start(a)
                && is_start(b)
                && s.points_out(a).len() == 1
                && s.points_in(b).len() == 1;
            if !t_edge {
                out.other.push(format!("points ({a}, {b})"));
            }
        }
        for (a, b) in s.eta_entries() {
            if chain.contains(&(a.clone(), b.clone())) {
                continue;
            }
            if s.level(a) == Some(3) {
                if !(is_start(a) && is_end(b)) {
                    out.stray_xi.push((a.clone(), b.clone()));
                }
            } else {
                out.other.push(format!("eta ({a}, {b})"));
            }
        }
        out
    }

    /// Removes stray ξ entries left behind by a ripple.
    fn settle(&mut self) -> Result<()> {
        for _ in 0..REPAIR_LIMIT {
            let f = self.frame();
            if let Some(o) = f.other.first() {
                return Err(unsupported(format!("reduction left a stray entry {o}")));
            }
            let Some((a, c)) = f.stray_xi.into_iter().next() else {
                return Ok(());
            };
            self.repair_xi(&a, &c)?;
        }
        Err(unsupported("repairs did not terminate"))
    }

    fn repair_xi(&mut self, a: &str, c: &str) -> Result<()> {
        let (pa, ia) = self.loc[a];
        let (pc, ic) = self.loc[c];
        let mut attempts: Vec<(Vec<ObjectId>, Vec<ObjectId>)> = Vec::new();
        if ic + 1 < self.part(pc).len() {
            // row a += row g, where g carries the chain ξ into c
            attempts.push((self.walk_forward(pa, ia), self.walk_forward(pc, ic + 1)));
        }
        if ia > 0 {
            // col c += col h, where h receives the chain ξ out of a
            attempts.push((self.walk_backward(pa, ia - 1), self.walk_backward(pc, ic)));
        }
        let mut last = unsupported(format!("cannot remove ξ ({a}, {c})"));
        for (x, y) in attempts {
            let mut trial = self.sess.clone();
            match ripple(&mut trial, &x, &y, BigInt::one()) {
                Ok(()) if !trial.score().eta(a, c) => {
                    self.sess = trial;
                    return Ok(());
                }
                Ok(()) => {}
                Err(e) => last = e,
            }
        }
        Err(last)
    }

    /// `E_α`: the start of `recv` receives the ξ entries of the start of
    /// `giver`.
    fn op_alpha(&mut self, recv: usize, giver: usize) -> Result<()> {
        let x = self.walk_forward(recv, 0);
        let y = self.walk_forward(giver, 0);
        ripple(&mut self.sess, &x, &y, BigInt::one())?;
        self.settle()
    }

    /// `E_ω`: the end of `recv` receives the ξ entries into the end of
    /// `giver`.
    fn op_omega(&mut self, recv: usize, giver: usize) -> Result<()> {
        let x = self.walk_backward(giver, self.part(giver).len() - 1);
        let y = self.walk_backward(recv, self.part(recv).len() - 1);
        ripple(&mut self.sess, &x, &y, BigInt::one())?;
        self.settle()
    }

    /// Joins parts in reading order with ξ letters between them.
    fn merge(&mut self, order: &[usize]) -> Result<()> {
        for w in order.windows(2) {
            if !self.inc(w[1], w[0]) {
                return Err(unsupported("merged parts are not joined by ξ"));
            }
        }
        let mut objects = Vec::new();
        let mut word = Vec::new();
        for (i, &pi) in order.iter().enumerate() {
            if i > 0 {
                word.push(Letter::Xi);
            }
            objects.extend(self.part(pi).objects.iter().cloned());
            word.extend(self.part(pi).word.iter().cloned());
        }
        let id = self.parts.next_id;
        self.parts.next_id += 1;
        let mut drop: Vec<usize> = order.to_vec();
        drop.sort_unstable();
        for pi in drop.into_iter().rev() {
            self.parts.parts.remove(pi);
        }
        self.parts.parts.push(Part { id, objects, word });
        self.reindex();
        Ok(())
    }

    /// Index of a maximal element of `items` for `leq`, earliest on ties.
    fn argmax(
        &self,
        items: &[usize],
        leq: impl Fn(&Engine, usize, usize) -> Result<bool>,
    ) -> Result<Option<usize>> {
        let mut best: Option<usize> = None;
        for &p in items {
            match best {
                None => best = Some(p),
                Some(b) => {
                    if !leq(self, p, b)? {
                        best = Some(p);
                    }
                }
            }
        }
        Ok(best)
    }

    fn by_id(&self, mut v: Vec<usize>) -> Vec<usize> {
        v.sort_by_key(|&p| self.id(p));
        v
    }

    fn run(&mut self) -> Result<()> {
        self.settle()?;
        let limit = 8 * (self.parts.parts.len() + 1);
        for _ in 0..limit {
            let p3 = self.by_id(self.p3());
            let pb1 = self.by_id(self.pbar1());
            let p3c: Vec<usize> = p3
                .iter()
                .copied()
                .filter(|&p| pb1.iter().any(|&q| self.inc(p, q)))
                .collect();
            if p3c.is_empty() {
                return Ok(());
            }
            let pmax0 = self
                .argmax(&p3c, |e, a, b| Ok(e.sigma_key(a)? <= e.sigma_key(b)?))?
                .expect("nonempty");
            let top = self.sigma_key(pmax0)?;
            let mut class = Vec::new();
            for &p in &p3c {
                if self.sigma_key(p)? == top {
                    class.push(p);
                }
            }
            let cprime: Vec<usize> = pb1
                .iter()
                .copied()
                .filter(|&q| class.iter().any(|&p| self.inc(p, q)))
                .collect();
            let mut pbar = self.argmax(&cprime, Engine::trileq)?.expect("nonempty");
            if !p3c.contains(&pbar) {
                for &q in &cprime {
                    if p3c.contains(&q) && self.trileq(q, pbar)? && self.trileq(pbar, q)? {
                        pbar = q;
                        break;
                    }
                }
            }
            let pmax = *class
                .iter()
                .find(|&&p| self.inc(p, pbar))
                .expect("pbar is hit by the class");
            if p3.contains(&pbar) && self.same_word(pmax, pbar) {
                self.case_two(pmax)?;
            } else {
                self.case_one(pmax, pbar)?;
            }
        }
        Err(unsupported(
            "almost Baues–Hennes reduction did not terminate",
        ))
    }

    fn clear_limit(&self) -> usize {
        4 * (self.parts.parts.len() + 1) * (self.parts.parts.len() + 1)
    }

    /// Clears the column of `pbar` and the row of `pmax` except for their
    /// common entry, then merges the two parts.
    fn case_one(&mut self, pmax: usize, pbar: usize) -> Result<()> {
        let (pmax_id, pbar_id) = (self.id(pmax), self.id(pbar));
        for _ in 0..self.clear_limit() {
            let Some(p) = self
                .by_id(self.p3())
                .into_iter()
                .find(|&p| p != pmax && self.inc(p, pbar))
            else {
                break;
            };
            self.op_alpha(p, pmax)?;
            if self.inc(p, pbar) {
                return Err(unsupported(format!(
                    "could not clear [P{} : P{pbar_id}]",
                    self.id(p)
                )));
            }
        }
        for _ in 0..self.clear_limit() {
            let Some(q) = self
                .by_id(self.pbar1())
                .into_iter()
                .find(|&q| q != pbar && self.inc(pmax, q))
            else {
                break;
            };
            self.op_omega(q, pbar)?;
            if self.inc(pmax, q) {
                return Err(unsupported(format!(
                    "could not clear [P{pmax_id} : P{}]",
                    self.id(q)
                )));
            }
        }
        if !self.inc(pmax, pbar) {
            return Err(unsupported("the pivot entry vanished"));
        }
        self.merge(&[pbar, pmax])
    }

    fn class_matrix(&self, class: &[usize]) -> F2Matrix {
        let n = class.len();
        let mut m = F2Matrix::zeros(n, n);
        for (i, &p) in class.iter().enumerate() {
            for (j, &q) in class.iter().enumerate() {
                m.set(i, j, self.inc(p, q));
            }
        }
        m
    }

    /// Equivalent parts: conjugate their incidence block to canonical form,
    /// then isolate an invertible block or merge a nilpotent chain.
    fn case_two(&mut self, pmax: usize) -> Result<()> {
        let class_ids: Vec<usize> = self
            .by_id(self.p3())
            .into_iter()
            .filter(|&p| self.same_word(p, pmax))
            .map(|p| self.id(p))
            .collect();
        let idx = |e: &Engine, ids: &[usize]| -> Vec<usize> {
            ids.iter()
                .map(|id| e.parts.parts.iter().position(|p| p.id == *id).unwrap())
                .collect()
        };
        let class = idx(self, &class_ids);
        let m = self.class_matrix(&class);
        let cf = f2_canonical_form(&m).map_err(|e| unsupported(e.to_string()))?;
        let q = cf
            .basis
            .inverse()
            .ok_or_else(|| unsupported("canonical basis is singular"))?;
        for (i, j) in transvections(&q).into_iter().rev() {
            let class = idx(self, &class_ids);
            self.op_alpha(class[i], class[j])?;
        }
        let class = idx(self, &class_ids);
        if self.class_matrix(&class) != cf.assembly() {
            return Err(unsupported("class block did not reach canonical form"));
        }
        let mut offset = 0;
        let mut blocks = Vec::new();
        for b in &cf.blocks {
            blocks.push((b.clone(), class_ids[offset..offset + b.size()].to_vec()));
            offset += b.size();
        }
        if let Some((b, ids)) = blocks
            .iter()
            .find(|(b, _)| matches!(b, F2Block::Invertible(_)))
        {
            return self.isolate_block(&class_ids, ids, &b.matrix());
        }
        self.merge_chains(&class_ids, &blocks)
    }

    fn index_of(&self, id: usize) -> usize {
        self.parts
            .parts
            .iter()
            .position(|p| p.id == id)
            .expect("live part")
    }

    fn isolate_block(&mut self, class_ids: &[usize], ids: &[usize], b: &F2Matrix) -> Result<()> {
        let inv = b
            .inverse()
            .ok_or_else(|| unsupported("block is not invertible"))?;
        let n = ids.len();
        for _ in 0..self.clear_limit() {
            let members: Vec<usize> = ids.iter().map(|&i| self.index_of(i)).collect();
            let outside = |e: &Engine, p: usize| !class_ids.contains(&e.id(p));
            let hit = members.iter().enumerate().find_map(|(r, &p)| {
                self.by_id(self.pbar1())
                    .into_iter()
                    .find(|&q| outside(self, q) && self.inc(p, q))
                    .map(|q| (r, q))
            });
            let Some((r, q)) = hit else {
                break;
            };
            let q_id = self.id(q);
            // columns c with Σ B[·][c] = e_r
            for (c, &cid) in ids.iter().enumerate().take(n) {
                if inv.get(c, r) {
                    let (qi, ci) = (self.index_of(q_id), self.index_of(cid));
                    self.op_omega(qi, ci)?;
                }
            }
        }
        for _ in 0..self.clear_limit() {
            let members: Vec<usize> = ids.iter().map(|&i| self.index_of(i)).collect();
            let hit = members.iter().enumerate().find_map(|(c, &q)| {
                self.by_id(self.p3())
                    .into_iter()
                    .find(|&p| !class_ids.contains(&self.id(p)) && self.inc(p, q))
                    .map(|p| (c, p))
            });
            let Some((c, p)) = hit else {
                break;
            };
            let p_id = self.id(p);
            // rows r with Σ B[r][·] = e_c
            for (r, &rid) in ids.iter().enumerate().take(n) {
                if inv.get(c, r) {
                    let (pi, ri) = (self.index_of(p_id), self.index_of(rid));
                    self.op_alpha(pi, ri)?;
                }
            }
        }
        let members: Vec<usize> = ids.iter().map(|&i| self.index_of(i)).collect();
        for &p in &members {
            for q in self.pbar1() {
                if !ids.contains(&self.id(q)) && self.inc(p, q) {
                    return Err(unsupported("cyclic block is still attached"));
                }
            }
            for r in self.p3() {
                if !ids.contains(&self.id(r)) && self.inc(r, p) {
                    return Err(unsupported("cyclic block is still attached"));
                }
            }
        }
        self.parts.cyclic.extend(ids.iter().copied());
        Ok(())
    }

    /// Nilpotent case: every block is a chain `b0 → b1 → … → b(n-1)` with
    /// `[b_i : b_(i+1)] = 1`. The longest chain is merged, behind the
    /// maximal part its head reaches outside the class.
    fn merge_chains(
        &mut self,
        class_ids: &[usize],
        blocks: &[(F2Block, Vec<usize>)],
    ) -> Result<()> {
        let chains: Vec<Vec<usize>> = blocks.iter().map(|(_, ids)| ids.clone()).collect();
        let nmax = chains.iter().map(Vec::len).max().unwrap_or(0);
        let outside = |e: &Engine, p: usize| !class_ids.contains(&e.id(p));
        for _ in 0..self.clear_limit() {
            self.clean_chains(class_ids, &chains)?;
            let heads: Vec<usize> = chains
                .iter()
                .filter(|c| c.len() == nmax)
                .map(|c| *c.last().unwrap())
                .collect();
            let head_idx: Vec<usize> = heads.iter().map(|&h| self.index_of(h)).collect();
            let cands: Vec<usize> = self
                .by_id(self.pbar1())
                .into_iter()
                .filter(|&q| outside(self, q) && head_idx.iter().any(|&h| self.inc(h, q)))
                .collect();
            let long = chains.iter().find(|c| c.len() == nmax).unwrap().clone();
            let Some(pbar) = self.argmax(&cands, Engine::trileq)? else {
                let order: Vec<usize> = long.iter().rev().map(|&i| self.index_of(i)).collect();
                return self.merge(&order);
            };
            let pbar_id = self.id(pbar);
            let h1 = *heads
                .iter()
                .find(|&&h| self.inc(self.index_of(h), pbar))
                .unwrap();
            let chain1 = chains
                .iter()
                .find(|c| *c.last().unwrap() == h1)
                .unwrap()
                .clone();
            let h1i = self.index_of(h1);
            let other = self
                .by_id(self.p3())
                .into_iter()
                .find(|&p| p != h1i && self.inc(p, self.index_of(pbar_id)));
            if let Some(p) = other {
                let p_id = self.id(p);
                if let Some(chain2) = chains.iter().find(|c| c.contains(&p_id)) {
                    // add the aligned tail of chain1 to chain2, keeping the
                    // Jordan structure
                    let m = chain2.len();
                    for k in 0..m {
                        let recv = self.index_of(chain2[m - 1 - k]);
                        let giver = self.index_of(chain1[nmax - 1 - k]);
                        self.op_alpha(recv, giver)?;
                    }
                } else {
                    self.op_alpha(p, h1i)?;
                }
                continue;
            }
            for _ in 0..self.clear_limit() {
                let h1i = self.index_of(h1);
                let pbi = self.index_of(pbar_id);
                let Some(q) = self
                    .by_id(self.pbar1())
                    .into_iter()
                    .find(|&q| q != pbi && self.inc(h1i, q))
                else {
                    break;
                };
                self.op_omega(q, pbi)?;
            }
            let mut order = vec![self.index_of(pbar_id)];
            order.extend(chain1.iter().rev().map(|&i| self.index_of(i)));
            return self.merge(&order);
        }
        Err(unsupported("chain merge did not terminate"))
    }

    /// Clears outside entries from every non-head row and every non-tail
    /// column of the chains.
    fn clean_chains(&mut self, class_ids: &[usize], chains: &[Vec<usize>]) -> Result<()> {
        for _ in 0..self.clear_limit() {
            let mut acted = false;
            for chain in chains {
                for i in 0..chain.len().saturating_sub(1) {
                    let bi = self.index_of(chain[i]);
                    let hit = self
                        .by_id(self.pbar1())
                        .into_iter()
                        .find(|&q| !class_ids.contains(&self.id(q)) && self.inc(bi, q));
                    if let Some(q) = hit {
                        let next = self.index_of(chain[i + 1]);
                        self.op_omega(q, next)?;
                        acted = true;
                    }
                }
            }
            if !acted {
                break;
            }
        }
        for _ in 0..self.clear_limit() {
            let mut acted = false;
            for chain in chains {
                for j in 1..chain.len() {
                    let bj = self.index_of(chain[j]);
                    let hit = self
                        .by_id(self.p3())
                        .into_iter()
                        .find(|&p| !class_ids.contains(&self.id(p)) && self.inc(p, bj));
                    if let Some(p) = hit {
                        let prev = self.index_of(chain[j - 1]);
                        self.op_alpha(p, prev)?;
                        acted = true;
                    }
                }
            }
            if !acted {
                return Ok(());
            }
        }
        Err(unsupported("chain cleaning did not terminate"))
    }
}

/// Elementary row additions `(i, j)`, meaning `row i += row j`, that reduce
/// `q` to the identity in the order listed.
fn transvections(q: &F2Matrix) -> Vec<(usize, usize)> {
    let n = q.rows();
    let mut a = q.clone();
    let mut ops = Vec::new();
    let add = |a: &mut F2Matrix, i: usize, j: usize| {
        for k in 0..n {
            if a.get(j, k) {
                a.flip(i, k);
            }
        }
    };
    for col in 0..n {
        if !a.get(col, col) {
            let r = (col + 1..n).find(|&r| a.get(r, col)).expect("invertible");
            add(&mut a, col, r);
            ops.push((col, r));
        }
        for r in 0..n {
            if r != col && a.get(r, col) {
                add(&mut a, r, col);
                ops.push((r, col));
            }
        }
    }
    ops
}

/// Reduces a Chang score until no ξ entry joins two different parts
/// except inside isolated cyclic groups.
pub fn to_almost_bh(s: &FlowScore) -> Result<(FlowScore, Partition, MoveLog)> {
    let parts = base_partition(s)?;
    let mut e = Engine::new(s.clone(), parts);
    e.run()?;
    let Engine { sess, parts, .. } = e;
    let (score, log) = sess.finish();
    parts.check(&score).map_err(unsupported)?;
    Ok((score, parts, log))
}

// ---------------------------------------------------------------------------
// Baues–Hennes form

/// A fully reduced score and its name.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub form: BHForm,
    pub score: FlowScore,
    pub log: MoveLog,
}

/// Runs every stage and names the result.
pub fn to_bh(s: &FlowScore) -> Result<Normalized> {
    let (smith, mut log) = to_primary_smith(s)?;
    let (chang, l2) = to_chang(&smith)?;
    log.extend(l2);
    let (almost, _, l3) = to_almost_bh(&chang)?;
    log.extend(l3);
    let mut sess = Session::new(almost);
    clear_eps(&mut sess)?;
    separate_links(&mut sess)?;
    let (score, l4) = sess.finish();
    log.extend(l4);
    let form = recognize(&score).map_err(NormalizeError::Unrecognized)?;
    Ok(Normalized { form, score, log })
}

/// Clears determinate ε entries that a neighbouring η or ξ can absorb.
fn clear_eps(sess: &mut Session) -> Result<()> {
    let limit = 4 * (sess.score().len() + 1) * (sess.score().len() + 1);
    for _ in 0..limit {
        let s = sess.score().clone();
        let mut next = None;
        for (a, d, e) in s.eps_entries() {
            if e != Eps::One || !s.eps_support_holds(a, d) {
                continue;
            }
            if let Some(c) = s.eta_in(d).into_iter().next() {
                next = Some(MoveRecord::Trick2 { b: a.clone(), c });
                break;
            }
            let single = s.eta_out(a).into_iter().find(|b| s.eta_in(b).len() == 1);
            if let Some(b) = single {
                next = Some(MoveRecord::Trick2 { b, c: d.clone() });
                break;
            }
        }
        let Some(m) = next else {
            return Ok(());
        };
        sess.apply(m)?;
    }
    Err(unsupported("ε clearing did not terminate"))
}

/// Components of the graph of points and η entries.
fn chain_pieces(s: &FlowScore) -> BTreeSet<BTreeSet<ObjectId>> {
    let mut seen: BTreeSet<ObjectId> = BTreeSet::new();
    let mut out = BTreeSet::new();
    for id in s.ids() {
        if seen.contains(id) {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut stack = vec![id.clone()];
        while let Some(x) = stack.pop() {
            if comp.insert(x.clone()) {
                stack.extend(
                    chain_neighbours(s, &x)
                        .into_iter()
                        .filter(|y| !comp.contains(y)),
                );
            }
        }
        seen.extend(comp.iter().cloned());
        out.insert(comp);
    }
    out
}

fn chain_neighbours(s: &FlowScore, x: &str) -> Vec<ObjectId> {
    let mut out: Vec<ObjectId> = s.points_out(x).into_iter().map(|(y, _)| y).collect();
    out.extend(s.points_in(x).into_iter().map(|(y, _)| y));
    out.extend(s.eta_out(x));
    out.extend(s.eta_in(x));
    out
}

/// ε entries that survive naming: nonzero, supported, and not removable by
/// a neighbouring η or ξ.
fn live_links(s: &FlowScore) -> Vec<(ObjectId, ObjectId, Eps)> {
    s.eps_entries()
        .filter(|(a, d, e)| {
            *e != Eps::Zero
                && s.eps_support_holds(a, d)
                && s.eta_out(a).is_empty()
                && s.eta_in(d).is_empty()
        })
        .map(|(a, d, e)| (a.clone(), d.clone(), e))
        .collect()
}

/// `(conflicts, unknown links)`: links beyond the first at each piece, and
/// links inside a single piece.
fn link_badness(s: &FlowScore) -> (usize, usize) {
    let pieces: Vec<BTreeSet<ObjectId>> = chain_pieces(s).into_iter().collect();
    let piece_of = |x: &ObjectId| pieces.iter().position(|p| p.contains(x));
    let mut touching: BTreeMap<Option<usize>, usize> = BTreeMap::new();
    let mut conflicts = 0;
    let mut unknown = 0;
    for (a, d, e) in live_links(s) {
        let (pa, pd) = (piece_of(&a), piece_of(&d));
        if pa == pd {
            conflicts += 1;
        }
        *touching.entry(pa).or_default() += 1;
        *touching.entry(pd).or_default() += 1;
        if e == Eps::Unknown {
            unknown += 1;
        }
    }
    conflicts += touching
        .values()
        .map(|n| n.saturating_sub(1))
        .sum::<usize>();
    (conflicts, unknown)
}

/// The objects of a path piece read from its end `x`.
fn walk_from_end(s: &FlowScore, x: &str) -> Option<Vec<ObjectId>> {
    let mut walk = vec![x.to_string()];
    let mut prev: Option<ObjectId> = None;
    loop {
        let cur = walk.last().unwrap().clone();
        let next: Vec<ObjectId> = chain_neighbours(s, &cur)
            .into_iter()
            .filter(|y| Some(y) != prev.as_ref())
            .collect();
        match next.as_slice() {
            [] => return Some(walk),
            [y] if !walk.contains(y) => {
                prev = Some(cur);
                walk.push(y.clone());
            }
            _ => return None,
        }
    }
}

/// Separates ε links so that each piece meets at most one of them.
///
/// Row operations among level-3 ends and column operations among level-0
/// ends are tried as ripples along the pieces; an operation is kept when the
/// pieces survive and the links get strictly better.
fn separate_links(sess: &mut Session) -> Result<()> {
    let limit = 4 * (sess.score().len() + 1);
    for _ in 0..limit {
        let s = sess.score().clone();
        let bad = link_badness(&s);
        if bad.0 == 0 {
            return Ok(());
        }
        let pieces = chain_pieces(&s);
        let is_end = |x: &ObjectId| chain_neighbours(&s, x).len() <= 1;
        let tops: Vec<ObjectId> = s.at_level(3).into_iter().filter(|x| is_end(x)).collect();
        let bottoms: Vec<ObjectId> = s.at_level(0).into_iter().filter(|x| is_end(x)).collect();
        let mut trials: Vec<(ObjectId, ObjectId)> = Vec::new();
        for ends in [&tops, &bottoms] {
            for x in ends.iter() {
                for y in ends.iter() {
                    if x != y {
                        trials.push((x.clone(), y.clone()));
                    }
                }
            }
        }
        let mut best: Option<((usize, usize), Session)> = None;
        for (x, y) in trials {
            let (Some(wx), Some(wy)) = (walk_from_end(&s, &x), walk_from_end(&s, &y)) else {
                continue;
            };
            if wx.iter().any(|o| wy.contains(o)) {
                continue;
            }
            let mut trial = sess.clone();
            if ripple(&mut trial, &wx, &wy, BigInt::one()).is_err() {
                continue;
            }
            if chain_pieces(trial.score()) != pieces {
                continue;
            }
            let b = link_badness(trial.score());
            if b < bad && best.as_ref().is_none_or(|(bb, _)| b < *bb) {
                best = Some((b, trial));
            }
        }
        match best {
            Some((_, trial)) => *sess = trial,
            None => return Ok(()),
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Equivalence

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Yes,
    No,
    /// The answer hinges on ε classes the data does not determine.
    Undetermined,
}

impl fmt::Display for Equivalence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equivalence::Yes => "equivalent",
            Equivalence::No => "not equivalent",
            Equivalence::Undetermined => "undetermined",
        })
    }
}

/// Normalizes both scores and compares their names.
pub fn move_equivalent(a: &FlowScore, b: &FlowScore) -> Result<Equivalence> {
    let fa = to_bh(a)?.form;
    let fb = to_bh(b)?.form;
    Ok(compare_forms(&fa, &fb))
}

/// Compares two names. A flagged ε-word summand may stand for itself or for
/// the two pieces it would split into if its ε class were zero. Other
/// flagged summands may take part in unknown ε-words with each other, so
/// such forms are compared with every ε-word split.
pub fn compare_forms(a: &BHForm, b: &BHForm) -> Equivalence {
    if !a.is_undetermined() && !b.is_undetermined() {
        return if a.names() == b.names() {
            Equivalence::Yes
        } else {
            Equivalence::No
        };
    }
    let loose = |f: &BHForm| {
        f.summands.iter().any(|s| {
            s.eps_undetermined
                && !matches!(
                    s.summand,
                    Summand::Bh {
                        word: Word::Eps { .. },
                        ..
                    }
                )
        })
    };
    if loose(a) || loose(b) {
        return if fully_split(a) == fully_split(b) {
            Equivalence::Undetermined
        } else {
            Equivalence::No
        };
    }
    let ra = resolutions(a);
    let rb = resolutions(b);
    if ra.iter().any(|x| rb.contains(x)) {
        Equivalence::Undetermined
    } else {
        Equivalence::No
    }
}

fn fully_split(f: &BHForm) -> Vec<Summand> {
    let mut out: Vec<Summand> = f
        .summands
        .iter()
        .flat_map(|s| split_names(&s.summand).unwrap_or_else(|| vec![s.summand.clone()]))
        .collect();
    out.sort();
    out
}

fn resolutions(f: &BHForm) -> BTreeSet<Vec<Summand>> {
    let mut out: BTreeSet<Vec<Summand>> = BTreeSet::new();
    out.insert(Vec::new());
    for ns in &f.summands {
        let choices: Vec<Vec<Summand>> = if ns.eps_undetermined {
            let mut c = vec![vec![ns.summand.clone()]];
            if let Some(split) = split_names(&ns.summand) {
                c.push(split);
            }
            c
        } else {
            vec![vec![ns.summand.clone()]]
        };
        let mut next = BTreeSet::new();
        for base in &out {
            for ch in &choices {
                let mut v = base.clone();
                v.extend(ch.iter().cloned());
                v.sort();
                next.insert(v);
            }
        }
        out = next;
    }
    out
}

/// Names of the pieces of an ε-word summand with its ε class set to zero.
fn split_names(s: &Summand) -> Option<Vec<Summand>> {
    let Summand::Bh {
        word: w @ Word::Eps { .. },
        n,
    } = s
    else {
        return None;
    };
    let ws = word_to_score(w, *n).ok()?;
    let mut score = ws.score;
    let links: Vec<(ObjectId, ObjectId)> = score
        .eps_entries()
        .map(|(a, d, _)| (a.clone(), d.clone()))
        .collect();
    for (a, d) in links {
        score.set_eps(&a, &d, Eps::Zero).ok()?;
    }
    Some(recognize(&score).ok()?.names())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::score::homology;

    fn big(n: i64) -> BigInt {
        BigInt::from(n)
    }

    fn score(base: i64, objs: &[(&str, u8)]) -> FlowScore {
        let mut s = FlowScore::new(base);
        for (id, l) in objs {
            s.add_object(id, *l, id).unwrap();
        }
        s
    }

    fn fix_c() -> FlowScore {
        let mut s = score(
            -1,
            &[
                ("v1", 0),
                ("v2", 1),
                ("v3", 2),
                ("v4", 3),
                ("v5", 1),
                ("v6", 2),
                ("v7", 1),
                ("v8", 2),
                ("v9", 1),
            ],
        );
        s.set_points("v2", "v1", big(2)).unwrap();
        s.set_eta("v3", "v1", true).unwrap();
        s.set_points("v4", "v3", big(2)).unwrap();
        for t in ["v2", "v5", "v7"] {
            s.set_eta("v4", t, true).unwrap();
        }
        s.set_points("v8", "v9", big(2)).unwrap();
        s.force_unknown_where_unsupported();
        s
    }

    fn fix_d() -> FlowScore {
        let mut s = score(
            5,
            &[
                ("A", 0),
                ("B", 2),
                ("C", 1),
                ("D", 2),
                ("E", 1),
                ("F", 3),
                ("G", 1),
                ("H", 2),
                ("I", 2),
                ("J", 1),
                ("K", 3),
                ("L", 2),
            ],
        );
        s.set_eta("B", "A", true).unwrap();
        s.set_points("B", "C", big(2)).unwrap();
        s.set_points("D", "E", big(2)).unwrap();
        s.set_eta("F", "C", true).unwrap();
        s.set_eta("F", "G", true).unwrap();
        s.set_points("F", "H", big(2)).unwrap();
        s.set_points("I", "J", big(2)).unwrap();
        s.set_eta("K", "J", true).unwrap();
        s.force_unknown_where_unsupported();
        s
    }

    fn fix_a(p: i64) -> FlowScore {
        let mut s = score(0, &[("a", 3), ("b", 2), ("c", 1), ("d", 0)]);
        s.set_points("b", "c", big(p)).unwrap();
        s.set_eta("a", "c", true).unwrap();
        s.set_eta("b", "d", true).unwrap();
        s.force_unknown_where_unsupported();
        s
    }

    fn fix_b(p: i64) -> FlowScore {
        let mut s = score(0, &[("a", 3), ("b", 2), ("c", 1), ("d", 0)]);
        s.set_points("b", "c", big(p)).unwrap();
        s.set_eps("a", "d", Eps::One).unwrap();
        s.set_eta("b", "d", true).unwrap();
        s.force_unknown_where_unsupported();
        s
    }

    fn named(text: &str) -> FlowScore {
        let mut out = FlowScore::new(0);
        for (i, part) in text.split('+').enumerate() {
            let (kind, arg) = part.trim().split_once(' ').unwrap();
            let piece = match kind {
                "M" => {
                    let (o, n) = arg.split_once(',').unwrap();
                    Summand::Moore {
                        order: o.parse().unwrap(),
                        n: n.parse().unwrap(),
                    }
                    .to_score(0)
                    .unwrap()
                }
                "S" => Summand::Sphere {
                    n: arg.parse().unwrap(),
                }
                .to_score(0)
                .unwrap(),
                _ => Summand::Bh {
                    word: arg.parse().unwrap(),
                    n: 0,
                }
                .to_score(0)
                .unwrap(),
            };
            out =
                crate::score::disjoint_union(&out, &piece.with_prefix(&format!("s{i}."))).unwrap();
        }
        out.force_unknown_where_unsupported();
        out
    }

    #[test]
    fn eta_pair_yields_epsilon() {
        let target = named("M 3,1 + B eps(u=; v=)");
        assert_eq!(
            move_equivalent(&fix_a(3), &target).unwrap(),
            Equivalence::Yes
        );
        assert_eq!(
            move_equivalent(&fix_a(5), &target).unwrap(),
            Equivalence::No
        );
    }

    #[test]
    fn epsilon_removal() {
        assert_eq!(
            move_equivalent(&fix_b(3), &fix_a(3)).unwrap(),
            Equivalence::Yes
        );
        let mut even = score(0, &[("a", 3), ("b", 2), ("c", 1), ("d", 0)]);
        even.set_points("b", "c", big(2)).unwrap();
        even.set_eta("b", "d", true).unwrap();
        even.force_unknown_where_unsupported();
        assert_eq!(move_equivalent(&fix_b(2), &even).unwrap(), Equivalence::Yes);
    }

    #[test]
    fn smith_diagonalizes_two_by_two() {
        let mut s = score(0, &[("a", 2), ("b", 2), ("c", 1), ("d", 1)]);
        for (x, y, n) in [("a", "c", 2), ("a", "d", 4), ("b", "c", 6), ("b", "d", 8)] {
            s.set_points(x, y, big(n)).unwrap();
        }
        let (t, log) = to_primary_smith(&s).unwrap();
        assert!(form_predicates(&t).unwrap().is_primary_smith);
        assert_eq!(homology(&t).unwrap(), homology(&s).unwrap());
        let mut sizes: Vec<BigInt> = t.points_entries().map(|(_, _, n)| n.abs()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![big(2), big(4)]);
        assert_eq!(log.replay(&s).unwrap(), t);
    }

    #[test]
    fn smith_splits_six() {
        let mut s = score(0, &[("a", 1), ("b", 0)]);
        s.set_points("a", "b", big(6)).unwrap();
        let (t, _) = to_primary_smith(&s).unwrap();
        let mut sizes: Vec<BigInt> = t.points_entries().map(|(_, _, n)| n.abs()).collect();
        sizes.sort();
        assert_eq!(sizes, vec![big(2), big(3)]);
        assert_eq!(homology(&t).unwrap(), homology(&s).unwrap());
    }

    #[test]
    fn smith_splits_negative_composites() {
        for d in [-6, 12, -30, 60] {
            let mut s = score(0, &[("a", 3), ("b", 2)]);
            s.set_points("a", "b", big(d)).unwrap();
            let (t, _) = to_primary_smith(&s).unwrap();
            assert!(form_predicates(&t).unwrap().is_primary_smith, "{d}");
            assert_eq!(homology(&t).unwrap(), homology(&s).unwrap());
        }
    }

    #[test]
    fn smith_leaves_smith_input_alone() {
        let (t, log) = to_primary_smith(&fix_c()).unwrap();
        assert!(log.is_empty());
        assert_eq!(t, fix_c());
    }

    #[test]
    fn smith_refuses_non_reduced_input() {
        let mut s = score(0, &[("a", 2), ("b", 1), ("c", 0)]);
        s.set_points("a", "b", big(2)).unwrap();
        s.set_points("b", "c", big(0)).unwrap();
        assert!(to_primary_smith(&s).is_ok());
        let mut s = score(0, &[("a", 3), ("b", 2), ("c", 1), ("d", 2)]);
        s.set_points("a", "b", big(1)).unwrap();
        s.set_points("b", "c", big(1)).unwrap();
        s.set_points("a", "d", big(1)).unwrap();
        s.set_points("d", "c", big(-1)).unwrap();
        assert!(matches!(
            to_primary_smith(&s),
            Err(NormalizeError::NotReduced(_))
        ));
    }

    #[test]
    fn chang_eliminates_double_eta() {
        // b1, b2 at level 2 both hit x at level 0
        let mut s = score(0, &[("b1", 2), ("b2", 2), ("x", 0), ("y", 0)]);
        s.set_eta("b1", "x", true).unwrap();
        s.set_eta("b2", "x", true).unwrap();
        s.set_eta("b2", "y", true).unwrap();
        let (t, _) = to_chang(&s).unwrap();
        assert!(form_predicates(&t).unwrap().is_chang);
        assert_eq!(homology(&t).unwrap(), homology(&s).unwrap());
    }

    #[test]
    fn chang_isolates_odd_moore() {
        let mut s = score(0, &[("a", 3), ("b", 2), ("c", 1), ("d", 0)]);
        s.set_points("b", "c", big(3)).unwrap();
        s.set_eta("a", "c", true).unwrap();
        s.set_eta("b", "d", true).unwrap();
        let (t, _) = to_chang(&s).unwrap();
        assert!(t.eta_entries().next().is_none());
        assert_eq!(homology(&t).unwrap(), homology(&s).unwrap());
    }

    #[test]
    fn base_partition_of_fix_c() {
        let p = base_partition(&fix_c()).unwrap();
        assert_eq!(p.parts.len(), 6);
        let main = p.parts.iter().find(|q| q.objects.len() == 4).unwrap();
        assert_eq!(main.objects, vec!["v4", "v3", "v1", "v2"]);
        assert_eq!(
            main.word,
            vec![Letter::S(big(2)), Letter::Eta, Letter::R(big(2))]
        );
        let inc = incidence_matrix(&fix_c(), &p);
        assert_eq!(inc.cols.len(), 1);
        assert_eq!(inc.entry(main.id, main.id), Some(true));
        p.check(&fix_c()).unwrap();
    }

    #[test]
    fn tau_and_duals() {
        let s = fix_d();
        let p = base_partition(&s).unwrap();
        let id_of = |x: &str| p.locate(x).unwrap().0;
        assert_eq!(p.tau(&s, id_of("C")), Some(Ext::Fin(big(2))));
        assert_eq!(p.tau(&s, id_of("G")), Some(Ext::PosInf));
        assert_eq!(p.tau(&s, id_of("B")), Some(Ext::Fin(big(-2))));
        assert_eq!(p.tau(&s, id_of("L")), Some(Ext::NegInf));
        assert_eq!(p.dual(&s, id_of("C")), Some(id_of("B")));
    }

    #[test]
    fn fix_c_names() {
        let n = to_bh(&fix_c()).unwrap();
        assert_eq!(
            n.form.to_string(),
            "BH(cyclic(xi ^2 eta _2; A=[[1]]), n=-1) + S(0) + S(0) + M(2,0) + S(1)"
        );
        assert_eq!(n.log.replay(&fix_c()).unwrap(), n.score);
    }

    #[test]
    fn fix_d_names() {
        let n = to_bh(&fix_d()).unwrap();
        assert_eq!(
            n.form.to_string(),
            "C(eta 2, n=5) + C(_2 eta, n=6) + C(eta 2, n=6) + M(2,6) + S(7)"
        );
        assert_eq!(homology(&n.score).unwrap(), homology(&fix_d()).unwrap());
    }

    #[test]
    fn undetermined_comparison() {
        let w: Word = "eps".parse().unwrap();
        let flagged = BHForm::new(vec![NamedSummand {
            summand: Summand::Bh {
                word: w.clone(),
                n: 0,
            },
            eps_undetermined: true,
        }]);
        let split = BHForm::new(
            split_names(&Summand::Bh { word: w, n: 0 })
                .unwrap()
                .into_iter()
                .map(|summand| NamedSummand {
                    summand,
                    eps_undetermined: false,
                })
                .collect(),
        );
        assert_eq!(compare_forms(&flagged, &split), Equivalence::Undetermined);
        assert_eq!(compare_forms(&split, &split), Equivalence::Yes);
    }
}

//! Baues–Hennes words, their symbols, and the dictionary between words and
//! scores.
//!
//! Letters move between levels as follows: `ξ` from level 1 up to level 3,
//! `^s` from 3 down to 2, `η` from 2 down to 0 and `_r` from 0 up to 1.
//! Consecutive letters share one object.

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

use crate::linalg::{f2_canonical_blocks, is_prime_power, F2Block, F2Matrix};
use crate::score::{validate, Eps, FlowScore, ObjectId};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    Xi,
    S(BigInt),
    Eta,
    R(BigInt),
    T(BigInt),
    Eps,
}

impl Letter {
    fn rank(&self) -> u8 {
        match self {
            Letter::Xi => 0,
            Letter::S(_) => 1,
            Letter::Eta => 2,
            Letter::R(_) => 3,
            Letter::T(_) => 4,
            Letter::Eps => 5,
        }
    }

    fn payload(&self) -> Option<&BigInt> {
        match self {
            Letter::S(n) | Letter::R(n) | Letter::T(n) => Some(n),
            _ => None,
        }
    }

    /// Levels of the first and second object of the letter.
    fn step(&self) -> Option<(u8, u8)> {
        match self {
            Letter::Xi => Some((1, 3)),
            Letter::S(_) => Some((3, 2)),
            Letter::Eta => Some((2, 0)),
            Letter::R(_) => Some((0, 1)),
            _ => None,
        }
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank()
            .cmp(&other.rank())
            .then_with(|| self.payload().cmp(&other.payload()))
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::Xi => f.write_str("xi"),
            Letter::S(s) => write!(f, "^{s}"),
            Letter::Eta => f.write_str("eta"),
            Letter::R(r) => write!(f, "_{r}"),
            Letter::T(t) => write!(f, "{t}"),
            Letter::Eps => f.write_str("eps"),
        }
    }
}

struct Letters<'a>(&'a [Letter]);

impl fmt::Display for Letters<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Word {
    Basic(Vec<Letter>),
    /// `ū t v`; `u` is read from the level-2 end of the `t` edge.
    Central {
        u: Vec<Letter>,
        t: BigInt,
        v: Vec<Letter>,
    },
    /// `ū ε v`; `u` is read from the level-0 end of the ε, `v` from the
    /// level-3 end.
    Eps {
        u: Vec<Letter>,
        v: Vec<Letter>,
    },
    Cyclic {
        w: Vec<Letter>,
        a: F2Matrix,
    },
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Word::Basic(w) => write!(f, "{}", Letters(w)),
            Word::Central { u, t, v } => {
                write!(f, "central(u={}; t={t}; v={})", Letters(u), Letters(v))
            }
            Word::Eps { u, v } => write!(f, "eps(u={}; v={})", Letters(u), Letters(v)),
            Word::Cyclic { w, a } => write!(f, "cyclic({}; A={a})", Letters(w)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordError(pub String);

impl fmt::Display for WordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn werr(msg: impl Into<String>) -> WordError {
    WordError(msg.into())
}

fn check_payload(l: &Letter) -> Result<(), WordError> {
    if let Some(n) = l.payload() {
        let two = BigInt::from(2);
        if *n < two || !is_prime_power(n) || !n.is_even() {
            return Err(werr(format!(
                "letter `{l}` needs a power of 2 that is at least 2"
            )));
        }
    }
    Ok(())
}

/// Checks the transition rules of a basic word.
pub fn validate_basic(w: &[Letter]) -> Result<(), WordError> {
    let Some(first) = w.first() else {
        return Err(werr("a basic word is non-empty"));
    };
    for l in w {
        if l.step().is_none() {
            return Err(werr(format!("letter `{l}` cannot occur in a basic word")));
        }
        check_payload(l)?;
    }
    let _ = first;
    for (i, pair) in w.windows(2).enumerate() {
        let (_, end) = pair[0].step().unwrap();
        let (start, _) = pair[1].step().unwrap();
        if end != start {
            return Err(werr(format!(
                "`{}` cannot follow `{}` (position {})",
                pair[1],
                pair[0],
                i + 2
            )));
        }
    }
    Ok(())
}

fn validate_side(w: &[Letter], first: fn(&Letter) -> bool, what: &str) -> Result<(), WordError> {
    if w.is_empty() {
        return Ok(());
    }
    validate_basic(w)?;
    if !first(&w[0]) {
        return Err(werr(format!("{what} must start with the right letter")));
    }
    Ok(())
}

/// True iff all structural rules hold.
pub fn validate_word(w: &Word) -> Result<(), WordError> {
    match w {
        Word::Basic(l) => validate_basic(l),
        Word::Central { u, t, v } => {
            check_payload(&Letter::T(t.clone()))?;
            validate_side(u, |l| *l == Letter::Eta, "u")?;
            validate_side(v, |l| *l == Letter::Xi, "v")
        }
        Word::Eps { u, v } => {
            validate_side(u, |l| matches!(l, Letter::R(_)), "u")?;
            validate_side(v, |l| matches!(l, Letter::S(_)), "v")
        }
        Word::Cyclic { w, a } => {
            validate_basic(w)?;
            if w.len() % 4 != 0 || w[0] != Letter::Xi {
                return Err(werr("a cyclic word has length 4k and starts with xi"));
            }
            if !a.is_square() || a.rows() == 0 || !a.is_invertible() {
                return Err(werr("the matrix of a cyclic word must be invertible"));
            }
            Ok(())
        }
    }
}

/// Entry of a symbol.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Ext {
    NegInf,
    Fin(BigInt),
    PosInf,
}

impl Ext {
    fn double(&self) -> Ext {
        match self {
            Ext::Fin(n) => Ext::Fin(n * 2),
            other => other.clone(),
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Ext::Fin(n) if n.is_zero())
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::NegInf => f.write_str("-inf"),
            Ext::Fin(n) => write!(f, "{n}"),
            Ext::PosInf => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    Sigma,
    SigmaStar,
    Rho,
    RhoStar,
}

/// A sequence compared lexicographically, with an implicit tail of zeros.
#[derive(Clone, Debug, Eq)]
pub struct Symbol {
    entries: Vec<Ext>,
}

impl Symbol {
    fn new(mut entries: Vec<Ext>) -> Symbol {
        while entries.last().is_some_and(Ext::is_zero) {
            entries.pop();
        }
        Symbol { entries }
    }

    pub fn entry(&self, i: usize) -> Ext {
        self.entries
            .get(i)
            .cloned()
            .unwrap_or(Ext::Fin(BigInt::zero()))
    }

    pub fn first(&self) -> Ext {
        self.entry(0)
    }

    pub fn entries(&self) -> &[Ext] {
        &self.entries
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        let n = self.entries.len().max(other.entries.len());
        (0..n)
            .map(|i| self.entry(i).cmp(&other.entry(i)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for e in &self.entries {
            write!(f, "{e}, ")?;
        }
        f.write_str("0, ...)")
    }
}

fn payload_of(l: Option<&Letter>, want: fn(&Letter) -> bool) -> Result<BigInt, WordError> {
    match l {
        Some(l) if want(l) => Ok(l.payload().cloned().unwrap_or_default()),
        other => Err(werr(format!(
            "unexpected letter {:?}",
            other.map(|l| l.to_string())
        ))),
    }
}

/// The alternating recursion shared by σ and ρ: `lead` must open the word,
/// followed by a `first` letter, the `mid` letter and a `second` letter.
fn alternating(
    w: &[Letter],
    lead: &Letter,
    first: fn(&Letter) -> bool,
    mid: &Letter,
    second: fn(&Letter) -> bool,
) -> Result<Vec<Ext>, WordError> {
    let mut out = Vec::new();
    let mut rest = w;
    loop {
        match rest.len() {
            0 => return Ok(out),
            _ if rest[0] != *lead => return Err(werr(format!("expected `{lead}`"))),
            1 => {
                out.push(Ext::PosInf);
                return Ok(out);
            }
            _ => {}
        }
        let a = payload_of(rest.get(1), first)?;
        out.push(Ext::Fin(a));
        match rest.get(2) {
            None => return Ok(out),
            Some(l) if l == mid => {}
            Some(_) => return Err(werr(format!("expected `{mid}`"))),
        }
        if rest.len() == 3 {
            out.push(Ext::NegInf);
            return Ok(out);
        }
        let b = payload_of(rest.get(3), second)?;
        out.push(Ext::Fin(-b));
        rest = &rest[4..];
    }
}

/// σ, σ*, ρ or ρ* of a word. σ needs `w` empty or starting with ξ, ρ needs
/// `w` empty or starting with η.
pub fn symbol(w: &[Letter], flavor: Flavor) -> Result<Symbol, WordError> {
    if !w.is_empty() {
        validate_basic(w)?;
    }
    let mut entries = match flavor {
        Flavor::Sigma | Flavor::SigmaStar => alternating(
            w,
            &Letter::Xi,
            |l| matches!(l, Letter::S(_)),
            &Letter::Eta,
            |l| matches!(l, Letter::R(_)),
        )?,
        Flavor::Rho | Flavor::RhoStar => alternating(
            w,
            &Letter::Eta,
            |l| matches!(l, Letter::R(_)),
            &Letter::Xi,
            |l| matches!(l, Letter::S(_)),
        )?,
    };
    if matches!(flavor, Flavor::SigmaStar | Flavor::RhoStar) {
        if let Some(e) = entries.first_mut() {
            *e = e.double();
        }
    }
    Ok(Symbol::new(entries))
}

pub fn sigma(w: &[Letter]) -> Result<Symbol, WordError> {
    symbol(w, Flavor::Sigma)
}

pub fn rho(w: &[Letter]) -> Result<Symbol, WordError> {
    symbol(w, Flavor::Rho)
}

/// σ̄ entries; compared lexicographically with a zero tail.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalSymbol {
    entries: Vec<BigRational>,
}

impl RationalSymbol {
    fn new(mut entries: Vec<BigRational>) -> Self {
        while entries.last().is_some_and(|e| e.is_zero()) {
            entries.pop();
        }
        RationalSymbol { entries }
    }

    pub fn entry(&self, i: usize) -> BigRational {
        self.entries
            .get(i)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn entries(&self) -> &[BigRational] {
        &self.entries
    }
}

impl Ord for RationalSymbol {
    fn cmp(&self, other: &Self) -> Ordering {
        let n = self.entries.len().max(other.entries.len());
        (0..n)
            .map(|i| self.entry(i).cmp(&other.entry(i)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

impl PartialOrd for RationalSymbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// σ̄ of a basic word ending in ξ, read from its last letter backwards.
pub fn sigma_bar(w: &[Letter]) -> Result<RationalSymbol, WordError> {
    validate_basic(w)?;
    if w.last() != Some(&Letter::Xi) {
        return Err(werr("σ̄ needs a word ending in xi"));
    }
    let rev: Vec<Letter> = w.iter().rev().cloned().collect();
    let inv = |n: &BigInt| BigRational::new(BigInt::one(), n.clone());
    let mut out = Vec::new();
    let mut rest = &rev[..];
    loop {
        let Some(Letter::R(q)) = rest.get(1) else {
            return Ok(RationalSymbol::new(out));
        };
        out.push(inv(q));
        if rest.len() == 2 {
            out.push(BigRational::one());
            break;
        }
        let Some(Letter::S(p)) = rest.get(3) else {
            break;
        };
        out.push(-inv(p));
        if rest.len() == 4 {
            out.push(-BigRational::one());
            break;
        }
        rest = &rest[4..];
    }
    Ok(RationalSymbol::new(out))
}

fn levels_of(w: &[Letter]) -> Vec<u8> {
    let mut out = Vec::new();
    if let Some((a, _)) = w.first().and_then(Letter::step) {
        out.push(a);
    }
    for l in w {
        if let Some((_, b)) = l.step() {
            out.push(b);
        }
    }
    out
}

fn with_prefix(first: Letter, w: &[Letter]) -> Vec<Letter> {
    let mut out = vec![first];
    out.extend(w.iter().cloned());
    out
}

/// Whether a word names a Baues–Hennes summand not already covered by the
/// Moore and Chang families.
pub fn is_special(w: &Word) -> Result<bool, WordError> {
    validate_word(w)?;
    Ok(match w {
        Word::Basic(l) => {
            let lv = levels_of(l);
            lv.contains(&3) && lv.contains(&0)
        }
        Word::Central { u, v, .. } => {
            let mut lv = vec![2, 1];
            lv.extend(levels_of(u));
            lv.extend(levels_of(v));
            lv.contains(&3) && lv.contains(&0)
        }
        Word::Eps { u, v } => {
            let xv = with_prefix(Letter::Xi, v);
            let hu = with_prefix(Letter::Eta, u);
            let s = sigma(&xv)?;
            let r = rho(&hu)?;
            let four = Ext::Fin(BigInt::from(4));
            let two = Ext::Fin(BigInt::from(2));
            let (s1, r1) = (s.first(), r.first());
            if s1 >= four && r1 >= four {
                true
            } else if s1 == two && r1 >= four {
                symbol(&v[1..], Flavor::RhoStar)? < r
            } else if s1 >= four && r1 == two {
                symbol(&u[1..], Flavor::SigmaStar)? < s
            } else {
                false
            }
        }
        Word::Cyclic { w, a } => primitive_period(w) == w.len() && !a.is_decomposable(),
    })
}

/// Shortest period of a cyclic word, in letters, as a multiple of 4.
fn primitive_period(w: &[Letter]) -> usize {
    let n = w.len();
    (4..=n)
        .step_by(4)
        .find(|&d| n.is_multiple_of(d) && (0..n).all(|i| w[i] == w[(i + d) % n]))
        .unwrap_or(n)
}

fn least_rotation(w: &[Letter]) -> Vec<Letter> {
    let n = w.len();
    (0..n)
        .step_by(4)
        .map(|k| {
            let mut r = w[k..].to_vec();
            r.extend_from_slice(&w[..k]);
            r
        })
        .min()
        .unwrap_or_default()
}

/// Canonical representative of a cyclic word's equivalence class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicCanonical {
    pub word: Vec<Letter>,
    pub blocks: Vec<F2Block>,
    pub special: bool,
}

impl CyclicCanonical {
    pub fn matrix(&self) -> F2Matrix {
        let mats: Vec<F2Matrix> = self.blocks.iter().map(F2Block::matrix).collect();
        F2Matrix::block_diagonal(&mats)
    }

    pub fn to_word(&self) -> Word {
        Word::Cyclic {
            w: self.word.clone(),
            a: self.matrix(),
        }
    }
}

/// Least rotation of the word paired with the canonical similarity blocks.
pub fn cyclic_canonical(w: &[Letter], a: &F2Matrix) -> Result<CyclicCanonical, WordError> {
    let word = Word::Cyclic {
        w: w.to_vec(),
        a: a.clone(),
    };
    validate_word(&word)?;
    Ok(CyclicCanonical {
        word: least_rotation(w),
        blocks: f2_canonical_blocks(a),
        special: is_special(&word)?,
    })
}

pub fn cyclic_equivalent(
    w1: &[Letter],
    a1: &F2Matrix,
    w2: &[Letter],
    a2: &F2Matrix,
) -> Result<bool, WordError> {
    let c1 = cyclic_canonical(w1, a1)?;
    let c2 = cyclic_canonical(w2, a2)?;
    Ok(c1.word == c2.word && c1.blocks == c2.blocks)
}

/// Rewrites `(w'^j, A)` over the base word `w'` with the `jm × jm` matrix
/// whose block `(0, j-1)` is `A` and whose blocks `(i, i-1)` are identities.
pub fn cyclic_base_word(w: &[Letter], a: &F2Matrix) -> (Vec<Letter>, F2Matrix) {
    let d = primitive_period(w);
    let j = w.len() / d;
    if j == 1 {
        return (w.to_vec(), a.clone());
    }
    let m = a.rows();
    let mut big = F2Matrix::zeros(j * m, j * m);
    for r in 0..m {
        for c in 0..m {
            big.set(r, (j - 1) * m + c, a.get(r, c));
        }
    }
    for i in 1..j {
        for r in 0..m {
            big.set(i * m + r, (i - 1) * m + r, true);
        }
    }
    (w[..d].to_vec(), big)
}

/// Splits a cyclic word into special cyclic words, canonically ordered.
pub fn cyclic_decompose(w: &[Letter], a: &F2Matrix) -> Result<Vec<Word>, WordError> {
    validate_word(&Word::Cyclic {
        w: w.to_vec(),
        a: a.clone(),
    })?;
    let (base, big) = cyclic_base_word(w, a);
    let word = least_rotation(&base);
    let mut out: Vec<Word> = f2_canonical_blocks(&big)
        .into_iter()
        .map(|b| Word::Cyclic {
            w: word.clone(),
            a: b.matrix(),
        })
        .collect();
    out.sort();
    Ok(out)
}

/// A word's score together with its distinguished objects.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordScore {
    pub score: FlowScore,
    pub start: Option<ObjectId>,
    pub end: Option<ObjectId>,
}

fn place_chain(
    s: &mut FlowScore,
    letters: &[Letter],
    first: &str,
    first_level: u8,
    name: &dyn Fn(usize) -> String,
) -> Result<ObjectId, WordError> {
    let mut prev = first.to_string();
    let mut level = first_level;
    for (i, l) in letters.iter().enumerate() {
        let (a, b) = l
            .step()
            .ok_or_else(|| werr(format!("`{l}` is not a chain letter")))?;
        if a != level {
            return Err(werr(format!("`{l}` cannot start at level {level}")));
        }
        let id = name(i + 1);
        s.add_object(&id, b, &id).map_err(|e| werr(e.to_string()))?;
        let res = match l {
            Letter::Xi => s.set_eta(&id, &prev, true),
            Letter::S(n) => s.set_points(&prev, &id, n.clone()),
            Letter::Eta => s.set_eta(&prev, &id, true),
            Letter::R(n) => s.set_points(&id, &prev, n.clone()),
            _ => unreachable!(),
        };
        res.map_err(|e| werr(e.to_string()))?;
        prev = id;
        level = b;
    }
    Ok(prev)
}

fn add(s: &mut FlowScore, id: &str, level: u8) -> Result<(), WordError> {
    s.add_object(id, level, id).map_err(|e| werr(e.to_string()))
}

/// The Baues–Hennes score of a word with level 0 at degree `n`.
pub fn word_to_score(w: &Word, n: i64) -> Result<WordScore, WordError> {
    validate_word(w)?;
    let mut s = FlowScore::new(n);
    let (start, end) = match w {
        Word::Basic(l) => {
            let lv = l[0].step().unwrap().0;
            add(&mut s, "x1", lv)?;
            let end = place_chain(&mut s, l, "x1", lv, &|i| format!("x{}", i + 1))?;
            (Some("x1".to_string()), Some(end))
        }
        Word::Central { u, t, v } => {
            add(&mut s, "x0", 2)?;
            add(&mut s, "x1", 1)?;
            s.set_points("x0", "x1", t.clone())
                .map_err(|e| werr(e.to_string()))?;
            place_chain(&mut s, u, "x0", 2, &|i| format!("x-{i}"))?;
            place_chain(&mut s, v, "x1", 1, &|i| format!("x{}", i + 1))?;
            (Some("x0".to_string()), Some("x1".to_string()))
        }
        Word::Eps { u, v } => {
            add(&mut s, "x0", 0)?;
            add(&mut s, "x1", 3)?;
            s.set_eps("x1", "x0", Eps::One)
                .map_err(|e| werr(e.to_string()))?;
            place_chain(&mut s, u, "x0", 0, &|i| format!("x-{i}"))?;
            place_chain(&mut s, v, "x1", 3, &|i| format!("x{}", i + 1))?;
            (Some("x0".to_string()), Some("x1".to_string()))
        }
        Word::Cyclic { w, a } => {
            let len = w.len();
            let m = a.rows();
            for j in 1..=m {
                let first = format!("x1.{j}");
                add(&mut s, &first, 3)?;
                place_chain(&mut s, &w[1..], &first, 3, &|i| format!("x{}.{j}", i + 1))?;
            }
            for i in 0..m {
                for j in 0..m {
                    if a.get(i, j) {
                        let from = format!("x1.{}", i + 1);
                        let to = format!("x{len}.{}", j + 1);
                        s.set_eta(&from, &to, true)
                            .map_err(|e| werr(e.to_string()))?;
                    }
                }
            }
            (None, None)
        }
    };
    s.force_unknown_where_unsupported();
    Ok(WordScore {
        score: s,
        start,
        end,
    })
}

/// Chang word `_q η p`: `q` points into the η target, `p` points out of the
/// η source.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChangWord {
    pub q: Option<BigInt>,
    pub p: Option<BigInt>,
}

impl fmt::Display for ChangWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(q) = &self.q {
            write!(f, "_{q} ")?;
        }
        f.write_str("eta")?;
        if let Some(p) = &self.p {
            write!(f, " {p}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Summand {
    Sphere { n: i64 },
    Moore { order: BigInt, n: i64 },
    Chang { word: ChangWord, n: i64 },
    Bh { word: Word, n: i64 },
}

impl Summand {
    pub fn degree(&self) -> i64 {
        match self {
            Summand::Sphere { n }
            | Summand::Moore { n, .. }
            | Summand::Chang { n, .. }
            | Summand::Bh { n, .. } => *n,
        }
    }

    fn kind(&self) -> u8 {
        match self {
            Summand::Bh { .. } => 0,
            Summand::Sphere { .. } => 1,
            Summand::Chang { .. } => 2,
            Summand::Moore { .. } => 3,
        }
    }

    /// The score this summand names, with level 0 at `base`.
    pub fn to_score(&self, base: i64) -> Result<FlowScore, WordError> {
        let mut s = FlowScore::new(base);
        let lvl = |d: i64| -> Result<u8, WordError> {
            u8::try_from(d - base)
                .ok()
                .filter(|l| *l <= 3)
                .ok_or_else(|| werr(format!("degree {d} does not fit above base {base}")))
        };
        let e = |r: Result<(), crate::score::ScoreError>| r.map_err(|e| werr(e.to_string()));
        match self {
            Summand::Sphere { n } => add(&mut s, "x", lvl(*n)?)?,
            Summand::Moore { order, n } => {
                let l = lvl(*n)?;
                add(&mut s, "x0", l)?;
                add(&mut s, "x1", lvl(*n + 1)?)?;
                e(s.set_points("x1", "x0", order.clone()))?;
            }
            Summand::Chang { word, n } => {
                let l = lvl(*n)?;
                add(&mut s, "c", l)?;
                add(&mut s, "a", lvl(*n + 2)?)?;
                e(s.set_eta("a", "c", true))?;
                if let Some(p) = &word.p {
                    add(&mut s, "b1", l + 1)?;
                    e(s.set_points("a", "b1", p.clone()))?;
                }
                if let Some(q) = &word.q {
                    add(&mut s, "b2", l + 1)?;
                    e(s.set_points("b2", "c", q.clone()))?;
                }
            }
            Summand::Bh { word, n } => {
                if *n != base {
                    return Err(werr("BH summands sit at the base degree"));
                }
                s = word_to_score(word, *n)?.score;
            }
        }
        Ok(s)
    }
}

impl Ord for Summand {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then(self.kind().cmp(&other.kind()))
            .then_with(|| match (self, other) {
                (Summand::Moore { order: a, .. }, Summand::Moore { order: b, .. }) => a.cmp(b),
                (Summand::Chang { word: a, .. }, Summand::Chang { word: b, .. }) => {
                    a.to_string().cmp(&b.to_string())
                }
                (Summand::Bh { word: a, .. }, Summand::Bh { word: b, .. }) => a.cmp(b),
                _ => Ordering::Equal,
            })
    }
}

impl PartialOrd for Summand {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Summand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Summand::Sphere { n } => write!(f, "S({n})"),
            Summand::Moore { order, n } => write!(f, "M({order},{n})"),
            Summand::Chang { word, n } => write!(f, "C({word}, n={n})"),
            Summand::Bh { word, n } => write!(f, "BH({word}, n={n})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NamedSummand {
    pub summand: Summand,
    /// Set when an ε this summand depends on is `unknown`.
    pub eps_undetermined: bool,
}

impl fmt::Display for NamedSummand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.summand)?;
        if self.eps_undetermined {
            f.write_str("?")?;
        }
        Ok(())
    }
}

/// Sorted multiset of named summands.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct BHForm {
    pub summands: Vec<NamedSummand>,
}

impl BHForm {
    pub fn new(mut summands: Vec<NamedSummand>) -> BHForm {
        summands.sort();
        BHForm { summands }
    }

    pub fn is_undetermined(&self) -> bool {
        self.summands.iter().any(|s| s.eps_undetermined)
    }

    /// Summands without their flags.
    pub fn names(&self) -> Vec<Summand> {
        self.summands.iter().map(|s| s.summand.clone()).collect()
    }

    pub fn merge(&self, other: &BHForm) -> BHForm {
        let mut all = self.summands.clone();
        all.extend(other.summands.iter().cloned());
        BHForm::new(all)
    }
}

impl fmt::Display for BHForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.summands.is_empty() {
            return f.write_str("0");
        }
        for (i, s) in self.summands.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unrecognized {
    pub objects: Vec<ObjectId>,
    pub reason: String,
}

impl fmt::Display for Unrecognized {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unrecognized summand {{{}}}: {}",
            self.objects.join(", "),
            self.reason
        )
    }
}

/// Neighbours along nonzero points and η entries.
fn chain_neighbours(s: &FlowScore, x: &str) -> Vec<ObjectId> {
    let mut out: Vec<ObjectId> = s.points_out(x).into_iter().map(|(y, _)| y).collect();
    out.extend(s.points_in(x).into_iter().map(|(y, _)| y));
    out.extend(s.eta_out(x));
    out.extend(s.eta_in(x));
    out
}

fn chain_components(s: &FlowScore) -> Vec<BTreeSet<ObjectId>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
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
        out.push(comp);
    }
    out
}

/// Reads the letter on the edge from `x` to `y`.
fn letter_between(s: &FlowScore, x: &str, y: &str) -> Option<Letter> {
    let (lx, ly) = (s.level(x)?, s.level(y)?);
    match (lx, ly) {
        (1, 3) if s.eta(y, x) => Some(Letter::Xi),
        (3, 2) if !s.points(x, y).is_zero() => Some(Letter::S(s.points(x, y).abs())),
        (2, 0) if s.eta(x, y) => Some(Letter::Eta),
        (0, 1) if !s.points(y, x).is_zero() => Some(Letter::R(s.points(y, x).abs())),
        _ => None,
    }
}

/// Reads the whole of `within` as a path starting at `start`.
fn read_path(s: &FlowScore, within: &BTreeSet<ObjectId>, start: &str) -> Option<Vec<Letter>> {
    let mut letters = Vec::new();
    let mut prev: Option<String> = None;
    let mut cur = start.to_string();
    let mut visited = BTreeSet::new();
    visited.insert(cur.clone());
    loop {
        let next: Vec<ObjectId> = chain_neighbours(s, &cur)
            .into_iter()
            .filter(|y| within.contains(y) && Some(y) != prev.as_ref())
            .collect();
        match next.len() {
            0 => break,
            1 => {
                let y = next.into_iter().next().unwrap();
                if !visited.insert(y.clone()) {
                    return None;
                }
                letters.push(letter_between(s, &cur, &y)?);
                prev = Some(cur);
                cur = y;
            }
            _ => return None,
        }
    }
    (visited.len() == within.len()).then_some(letters)
}

fn is_path(s: &FlowScore, comp: &BTreeSet<ObjectId>) -> bool {
    let mut edges = 0;
    for x in comp {
        let deg = chain_neighbours(s, x)
            .iter()
            .filter(|y| comp.contains(*y))
            .count();
        if deg > 2 {
            return false;
        }
        edges += deg;
    }
    edges / 2 + 1 == comp.len()
}

/// Reads a path component as a basic or central word.
fn read_chain_word(s: &FlowScore, comp: &BTreeSet<ObjectId>) -> Option<Word> {
    let t_edges: Vec<(ObjectId, ObjectId)> = comp
        .iter()
        .filter(|x| s.level(x) == Some(2))
        .flat_map(|x| {
            s.points_out(x)
                .into_iter()
                .map(move |(y, _)| (x.clone(), y))
        })
        .collect();
    match t_edges.len() {
        0 => {
            let ends: Vec<&ObjectId> = comp
                .iter()
                .filter(|x| chain_neighbours(s, x).len() <= 1)
                .collect();
            ends.into_iter()
                .find_map(|e| read_path(s, comp, e))
                .map(Word::Basic)
        }
        1 => {
            let (x0, x1) = &t_edges[0];
            let u_side = side_of(s, comp, x0, x1);
            let v_side = side_of(s, comp, x1, x0);
            let u = read_path(s, &u_side, x0)?;
            let v = read_path(s, &v_side, x1)?;
            Some(Word::Central {
                u,
                t: s.points(x0, x1).abs(),
                v,
            })
        }
        _ => None,
    }
}

/// Objects reachable from `from` without crossing `blocked`.
fn side_of(
    s: &FlowScore,
    comp: &BTreeSet<ObjectId>,
    from: &str,
    blocked: &str,
) -> BTreeSet<ObjectId> {
    let mut out = BTreeSet::new();
    let mut stack = vec![from.to_string()];
    while let Some(x) = stack.pop() {
        if x == blocked || !comp.contains(&x) || !out.insert(x.clone()) {
            continue;
        }
        stack.extend(chain_neighbours(s, &x));
    }
    out
}

/// Names a word that does not reach both level 3 and level 0.
fn chang_or_moore(s: &FlowScore, comp: &BTreeSet<ObjectId>) -> Option<Summand> {
    let etas: Vec<(ObjectId, ObjectId)> = comp
        .iter()
        .flat_map(|a| s.eta_out(a).into_iter().map(move |c| (a.clone(), c)))
        .collect();
    if etas.is_empty() {
        let (a, b, n) = s
            .points_entries()
            .find(|(a, _, _)| comp.contains(*a))
            .map(|(a, b, n)| (a.clone(), b.clone(), n.clone()))?;
        let _ = a;
        if comp.len() != 2 || !is_prime_power(&n.abs()) {
            return None;
        }
        return Some(Summand::Moore {
            order: n.abs(),
            n: s.degree(&b)?,
        });
    }
    if etas.len() != 1 {
        return None;
    }
    let (a, c) = &etas[0];
    let p = s.points_out(a).into_iter().next().map(|(_, n)| n.abs());
    let q = s.points_in(c).into_iter().next().map(|(_, n)| n.abs());
    let expected = 2 + usize::from(p.is_some()) + usize::from(q.is_some());
    if comp.len() != expected {
        return None;
    }
    Some(Summand::Chang {
        word: ChangWord { q, p },
        n: s.degree(c)?,
    })
}

fn name_word(s: &FlowScore, comp: &BTreeSet<ObjectId>, w: Word) -> Result<Vec<Summand>, String> {
    if validate_word(&w).is_err() {
        // Odd torsion only occurs in Moore pieces.
        return chang_or_moore(s, comp)
            .map(|x| vec![x])
            .ok_or_else(|| format!("`{w}` is not a valid word"));
    }
    if is_special(&w).unwrap_or(false) {
        return Ok(vec![Summand::Bh {
            word: w,
            n: s.base_degree(),
        }]);
    }
    chang_or_moore(s, comp)
        .map(|x| vec![x])
        .ok_or_else(|| format!("`{w}` is neither special nor a Chang word"))
}

/// Names a component of the chain graph that carries no ε links.
fn name_piece(s: &FlowScore, comp: &BTreeSet<ObjectId>) -> Result<Vec<Summand>, String> {
    if comp.len() == 1 {
        let x = comp.iter().next().unwrap();
        return Ok(vec![Summand::Sphere {
            n: s.degree(x).unwrap_or_default(),
        }]);
    }
    if is_path(s, comp) {
        let w = read_chain_word(s, comp).ok_or("path does not read as a word")?;
        return name_word(s, comp, w);
    }
    let (w, a) = read_cyclic(s, comp).ok_or("not a cyclic word score")?;
    let words = cyclic_decompose(&w, &a).map_err(|e| e.to_string())?;
    Ok(words
        .into_iter()
        .map(|word| Summand::Bh {
            word,
            n: s.base_degree(),
        })
        .collect())
}

/// Recovers `(w, A)` from a cyclic Baues–Hennes score.
fn read_cyclic(s: &FlowScore, comp: &BTreeSet<ObjectId>) -> Option<(Vec<Letter>, F2Matrix)> {
    // Pieces are what remains after removing the ξ edges.
    let mut piece_of: BTreeMap<ObjectId, usize> = BTreeMap::new();
    let mut pieces: Vec<(Vec<Letter>, ObjectId, ObjectId)> = Vec::new();
    for x in comp {
        if piece_of.contains_key(x) || s.level(x) != Some(3) {
            continue;
        }
        let mut letters = Vec::new();
        let mut cur = x.clone();
        let mut members = vec![cur.clone()];
        for _ in 0..3 {
            let next = match letters.len() {
                0 => s
                    .points_out(&cur)
                    .into_iter()
                    .map(|(y, _)| y)
                    .collect::<Vec<_>>(),
                1 => s.eta_out(&cur),
                _ => s.points_in(&cur).into_iter().map(|(y, _)| y).collect(),
            };
            if next.len() != 1 {
                return None;
            }
            let y = next[0].clone();
            letters.push(letter_between(s, &cur, &y)?);
            members.push(y.clone());
            cur = y;
        }
        if s.points_in(x).len() + s.eta_in(x).len() != 0 || s.points_out(&cur).len() != 1 {
            return None;
        }
        let idx = pieces.len();
        for m in &members {
            if piece_of.insert(m.clone(), idx).is_some() {
                return None;
            }
        }
        pieces.push((letters, x.clone(), cur));
    }
    if piece_of.len() != comp.len() || pieces.is_empty() {
        return None;
    }
    // start(p) -> end(q) puts p one step after q.
    let mut edges = Vec::new();
    for (p, (_, start, _)) in pieces.iter().enumerate() {
        for y in s.eta_out(start) {
            let q = *piece_of.get(&y)?;
            if pieces[q].2 != y {
                return None;
            }
            edges.push((p, q));
        }
    }
    for (_, _, end) in &pieces {
        if s.eta_in(end).is_empty() {
            return None;
        }
    }
    let n = pieces.len();
    let mut offset: Vec<Option<i64>> = vec![None; n];
    offset[0] = Some(0);
    let mut changed = true;
    while changed {
        changed = false;
        for &(p, q) in &edges {
            match (offset[p], offset[q]) {
                (Some(_), Some(_)) | (None, None) => {}
                (Some(op), None) => {
                    offset[q] = Some(op - 1);
                    changed = true;
                }
                (None, Some(oq)) => {
                    offset[p] = Some(oq + 1);
                    changed = true;
                }
            }
        }
    }
    let offset: Vec<i64> = offset.into_iter().collect::<Option<_>>()?;
    let k = edges
        .iter()
        .fold(0i64, |g, &(p, q)| g.gcd(&(offset[p] - offset[q] - 1)));
    if k == 0 {
        return None;
    }
    let class = |p: usize| offset[p].rem_euclid(k) as usize;
    let k = k as usize;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for p in 0..n {
        members[class(p)].push(p);
    }
    let m = members[0].len();
    if members.iter().any(|c| c.len() != m) {
        return None;
    }
    for c in &members {
        if c.iter().any(|&p| pieces[p].0 != pieces[c[0]].0) {
            return None;
        }
    }
    let pos = |p: usize| members[class(p)].iter().position(|&x| x == p).unwrap();
    let mut blocks = vec![F2Matrix::zeros(m, m); k];
    for &(p, q) in &edges {
        if (class(q) + 1) % k != class(p) {
            return None;
        }
        blocks[class(p)].flip(pos(p), pos(q));
    }
    if blocks.iter().any(|b| !b.is_invertible()) {
        return None;
    }
    let mut a = blocks[0].clone();
    for c in (1..k).rev() {
        a = a.mul(&blocks[c]).ok()?;
    }
    let mut w = Vec::new();
    for c in &members {
        w.push(Letter::Xi);
        w.extend(pieces[c[0]].0.iter().cloned());
    }
    Some((w, a))
}

/// Names every summand of a valid score.
///
/// ε classes that a trick2 move can toggle (a ξ leaves the top object or an
/// η enters the bottom one) carry no information and are ignored. The
/// remaining ε links pair up pieces into ε-words; a non-special ε-word is
/// named by its two pieces. Pieces met by unknown links that cannot all be
/// paired off are named on their own and flagged.
pub fn recognize(s: &FlowScore) -> Result<BHForm, Unrecognized> {
    let report = validate(s);
    if !report.is_empty() {
        return Err(Unrecognized {
            objects: s.ids().cloned().collect(),
            reason: report.to_string(),
        });
    }
    let comps = chain_components(s);
    let mut comp_of: BTreeMap<ObjectId, usize> = BTreeMap::new();
    for (i, c) in comps.iter().enumerate() {
        for x in c {
            comp_of.insert(x.clone(), i);
        }
    }
    let fail = |c: &BTreeSet<ObjectId>, reason: String| Unrecognized {
        objects: c.iter().cloned().collect(),
        reason,
    };

    let mut links: BTreeMap<usize, (ObjectId, ObjectId, Eps)> = BTreeMap::new();
    // Pieces met by an unknown link that cannot be paired off.
    let mut loose: BTreeSet<usize> = BTreeSet::new();
    let mut live: Vec<(ObjectId, ObjectId, Eps)> = s
        .eps_entries()
        .filter(|(a, d, e)| {
            *e != Eps::Zero
                && s.eps_support_holds(a, d)
                && s.eta_out(a).is_empty()
                && s.eta_in(d).is_empty()
        })
        .map(|(a, d, e)| (a.clone(), d.clone(), e))
        .collect();
    live.sort_by_key(|(_, _, e)| *e == Eps::Unknown);
    for (a, d, e) in live {
        let (ca, cd) = (comp_of[&a], comp_of[&d]);
        let clash = ca == cd || links.contains_key(&ca) || links.contains_key(&cd);
        if e == Eps::Unknown && (clash || loose.contains(&ca) || loose.contains(&cd)) {
            loose.extend([ca, cd]);
            continue;
        }
        if ca == cd {
            return Err(fail(
                &comps[ca],
                format!("ε between {a} and {d} in one word"),
            ));
        }
        if clash {
            let c = if links.contains_key(&ca) { ca } else { cd };
            return Err(fail(&comps[c], "several ε classes meet this piece".into()));
        }
        links.insert(ca, (a.clone(), d.clone(), e));
        links.insert(cd, (a, d, e));
    }
    // A loose piece that was paired off drags its partner along.
    for (c, (a, d, _)) in &links {
        if loose.contains(c) {
            let pair = [comp_of[a], comp_of[d]];
            loose.extend(pair);
        }
    }

    let mut out = Vec::new();
    let mut done = BTreeSet::new();
    for (i, comp) in comps.iter().enumerate() {
        if done.contains(&i) {
            continue;
        }
        done.insert(i);
        if let Some((a, d, e)) = links.get(&i) {
            let (ca, cd) = (comp_of[a], comp_of[d]);
            let e = if loose.contains(&ca) {
                &Eps::Unknown
            } else {
                e
            };
            done.insert(ca);
            done.insert(cd);
            let v = read_path(s, &comps[ca], a)
                .ok_or_else(|| fail(&comps[ca], format!("cannot read a word from {a}")))?;
            let u = read_path(s, &comps[cd], d)
                .ok_or_else(|| fail(&comps[cd], format!("cannot read a word from {d}")))?;
            let w = Word::Eps { u, v };
            if validate_word(&w).is_err() {
                return Err(fail(comp, format!("`{w}` is not a valid ε-word")));
            }
            if is_special(&w).unwrap_or(false) {
                out.push(NamedSummand {
                    summand: Summand::Bh {
                        word: w,
                        n: s.base_degree(),
                    },
                    eps_undetermined: *e == Eps::Unknown,
                });
                continue;
            }
            for c in [ca, cd] {
                let names = name_piece(s, &comps[c]).map_err(|r| fail(&comps[c], r))?;
                out.extend(names.into_iter().map(|summand| NamedSummand {
                    summand,
                    eps_undetermined: loose.contains(&c),
                }));
            }
            continue;
        }
        let names = name_piece(s, comp).map_err(|r| fail(comp, r))?;
        out.extend(names.into_iter().map(|summand| NamedSummand {
            summand,
            eps_undetermined: loose.contains(&i),
        }));
    }
    Ok(BHForm::new(out))
}

fn parse_int(tok: &str) -> Result<BigInt, WordError> {
    tok.parse().map_err(|_| werr(format!("bad number `{tok}`")))
}

const SUPERSCRIPTS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
const SUBSCRIPTS: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];

/// Parses letters such as `xi ^2 eta _4`, `ξ²η₄` or `xi^2eta_4`.
pub fn parse_letters(text: &str) -> Result<Vec<Letter>, WordError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let digits_at = |i: usize| -> (String, usize) {
        let mut j = i;
        let mut d = String::new();
        while j < chars.len() && chars[j].is_ascii_digit() {
            d.push(chars[j]);
            j += 1;
        }
        (d, j)
    };
    let script_at = |i: usize, table: &[char; 10]| -> (String, usize) {
        let mut j = i;
        let mut d = String::new();
        while let Some(k) = chars.get(j).and_then(|c| table.iter().position(|t| t == c)) {
            d.push(char::from(b'0' + k as u8));
            j += 1;
        }
        (d, j)
    };
    let rest = |i: usize| -> String { chars[i..].iter().collect() };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() || c == ',' {
            i += 1;
            continue;
        }
        let r = rest(i);
        if r.starts_with("xi") {
            out.push(Letter::Xi);
            i += 2;
        } else if r.starts_with("eta") {
            out.push(Letter::Eta);
            i += 3;
        } else if r.starts_with("eps") {
            out.push(Letter::Eps);
            i += 3;
        } else if c == 'ξ' {
            out.push(Letter::Xi);
            i += 1;
        } else if c == 'η' {
            out.push(Letter::Eta);
            i += 1;
        } else if c == 'ε' {
            out.push(Letter::Eps);
            i += 1;
        } else if c == '^' || c == '_' {
            let (d, j) = digits_at(i + 1);
            if d.is_empty() {
                return Err(werr(format!("`{c}` needs a number")));
            }
            let n = parse_int(&d)?;
            out.push(if c == '^' { Letter::S(n) } else { Letter::R(n) });
            i = j;
        } else if SUPERSCRIPTS.contains(&c) {
            let (d, j) = script_at(i, &SUPERSCRIPTS);
            out.push(Letter::S(parse_int(&d)?));
            i = j;
        } else if SUBSCRIPTS.contains(&c) {
            let (d, j) = script_at(i, &SUBSCRIPTS);
            out.push(Letter::R(parse_int(&d)?));
            i = j;
        } else {
            return Err(werr(format!("unexpected `{c}` in word")));
        }
    }
    Ok(out)
}

fn fields(inner: &str) -> Result<BTreeMap<String, String>, WordError> {
    let mut out = BTreeMap::new();
    for (i, part) in inner.split(';').enumerate() {
        let part = part.trim();
        match part.split_once('=') {
            Some((k, v)) if !k.contains('[') => {
                out.insert(k.trim().to_string(), v.trim().to_string());
            }
            _ if i == 0 => {
                out.insert("w".to_string(), part.to_string());
            }
            _ => return Err(werr(format!("expected key=value, got `{part}`"))),
        }
    }
    Ok(out)
}

/// Parses an F2 matrix written as `[[1,0],[1,1]]`.
pub fn parse_f2_matrix(text: &str) -> Result<F2Matrix, WordError> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let inner = t
        .strip_prefix("[[")
        .and_then(|x| x.strip_suffix("]]"))
        .ok_or_else(|| werr(format!("bad matrix `{text}`")))?;
    let rows: Vec<Vec<u8>> = inner
        .split("],[")
        .map(|r| {
            r.split(',')
                .map(|b| match b {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(werr(format!("matrix entry `{other}` is not 0 or 1"))),
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    if rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(werr("ragged matrix"));
    }
    Ok(F2Matrix::from_rows(&rows))
}

impl core::str::FromStr for Word {
    type Err = WordError;

    fn from_str(text: &str) -> Result<Word, WordError> {
        let t = text.trim();
        let call = |name: &str| {
            t.strip_prefix(name)
                .and_then(|r| r.trim_start().strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
        };
        let w = if let Some(inner) = call("central") {
            let f = fields(inner)?;
            let get = |k: &str| f.get(k).map(String::as_str).unwrap_or("");
            Word::Central {
                u: parse_letters(get("u"))?,
                t: parse_int(get("t"))?,
                v: parse_letters(get("v"))?,
            }
        } else if let Some(inner) = call("eps") {
            let f = fields(inner)?;
            let get = |k: &str| f.get(k).map(String::as_str).unwrap_or("");
            Word::Eps {
                u: parse_letters(get("u"))?,
                v: parse_letters(get("v"))?,
            }
        } else if let Some(inner) = call("cyclic") {
            let f = fields(inner)?;
            let w = parse_letters(f.get("w").map(String::as_str).unwrap_or(""))?;
            let a = parse_f2_matrix(f.get("A").ok_or_else(|| werr("cyclic word needs A"))?)?;
            Word::Cyclic { w, a }
        } else {
            let letters = parse_letters(t)?;
            match letters.iter().position(|l| *l == Letter::Eps) {
                Some(k) => Word::Eps {
                    u: letters[..k].iter().rev().cloned().collect(),
                    v: letters[k + 1..].to_vec(),
                },
                None => Word::Basic(letters),
            }
        };
        validate_word(&w)?;
        Ok(w)
    }
}

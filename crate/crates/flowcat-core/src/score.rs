//! Scores: the combinatorial model of a width-three framed flow category.
//!
//! Objects sit on four levels. Moduli spaces are stored by class only:
//! signed point counts between adjacent levels, an η flag two levels apart
//! and a tri-state ε entry between levels 3 and 0.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::Add;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use crate::linalg::{is_prime_power, prime_power_refine, smith_normal_form, IntMatrix};

/// Object identifiers are opaque strings; ordering is lexicographic.
pub type ObjectId = String;

/// Class of a 2-dimensional moduli space between levels 3 and 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Eps {
    #[default]
    Zero,
    One,
    Unknown,
}

impl Eps {
    pub fn from_bit(b: bool) -> Eps {
        if b {
            Eps::One
        } else {
            Eps::Zero
        }
    }

    pub fn is_determinate(self) -> bool {
        self != Eps::Unknown
    }
}

impl Add for Eps {
    type Output = Eps;

    fn add(self, rhs: Eps) -> Eps {
        match (self, rhs) {
            (Eps::Unknown, _) | (_, Eps::Unknown) => Eps::Unknown,
            (a, b) => Eps::from_bit((a == Eps::One) != (b == Eps::One)),
        }
    }
}

impl fmt::Display for Eps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Eps::Zero => "0",
            Eps::One => "1",
            Eps::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GradedObject {
    pub id: ObjectId,
    pub label: String,
    /// 0..=3; the degree is `base_degree + level`.
    pub level: u8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScoreError {
    DuplicateObject(ObjectId),
    UnknownObject(ObjectId),
    LevelOutOfRange(ObjectId, i64),
    /// An entry was placed between objects at the wrong level distance.
    LevelGap {
        kind: &'static str,
        from: ObjectId,
        to: ObjectId,
    },
    BaseDegreeMismatch(i64, i64),
    Invalid(ValidationReport),
}

impl fmt::Display for ScoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreError::DuplicateObject(id) => write!(f, "duplicate object id `{id}`"),
            ScoreError::UnknownObject(id) => write!(f, "unknown object `{id}`"),
            ScoreError::LevelOutOfRange(id, l) => {
                write!(f, "object `{id}` has level {l}, expected 0..=3")
            }
            ScoreError::LevelGap { kind, from, to } => {
                write!(
                    f,
                    "{kind} entry `{from}` -> `{to}` spans the wrong number of levels"
                )
            }
            ScoreError::BaseDegreeMismatch(a, b) => {
                write!(f, "base degrees differ ({a} vs {b})")
            }
            ScoreError::Invalid(r) => write!(f, "invalid score: {r}"),
        }
    }
}

/// A width-three score.
///
/// Only nonzero entries are stored. `d` holds points between adjacent
/// levels (upper object first), `h` holds η-classes two levels apart and `e`
/// holds the nonzero ε entries from level 3 to level 0.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct FlowScore {
    base_degree: i64,
    objects: BTreeMap<ObjectId, GradedObject>,
    d: BTreeMap<(ObjectId, ObjectId), BigInt>,
    h: BTreeSet<(ObjectId, ObjectId)>,
    e: BTreeMap<(ObjectId, ObjectId), Eps>,
}

impl FlowScore {
    pub fn new(base_degree: i64) -> Self {
        FlowScore {
            base_degree,
            ..Default::default()
        }
    }

    pub fn base_degree(&self) -> i64 {
        self.base_degree
    }

    pub fn set_base_degree(&mut self, n: i64) {
        self.base_degree = n;
    }

    pub fn add_object(&mut self, id: &str, level: u8, label: &str) -> Result<(), ScoreError> {
        if level > 3 {
            return Err(ScoreError::LevelOutOfRange(id.to_string(), level as i64));
        }
        if self.objects.contains_key(id) {
            return Err(ScoreError::DuplicateObject(id.to_string()));
        }
        self.objects.insert(
            id.to_string(),
            GradedObject {
                id: id.to_string(),
                label: label.to_string(),
                level,
            },
        );
        Ok(())
    }

    /// Removes an object and every entry touching it.
    pub fn remove_object(&mut self, id: &str) -> Result<GradedObject, ScoreError> {
        let obj = self
            .objects
            .remove(id)
            .ok_or_else(|| ScoreError::UnknownObject(id.to_string()))?;
        self.d.retain(|(a, b), _| a != id && b != id);
        self.h.retain(|(a, b)| a != id && b != id);
        self.e.retain(|(a, b), _| a != id && b != id);
        Ok(obj)
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.objects.contains_key(id)
    }

    pub fn object(&self, id: &str) -> Option<&GradedObject> {
        self.objects.get(id)
    }

    pub fn objects(&self) -> impl Iterator<Item = &GradedObject> {
        self.objects.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &ObjectId> {
        self.objects.keys()
    }

    pub fn level(&self, id: &str) -> Option<u8> {
        self.objects.get(id).map(|o| o.level)
    }

    pub fn degree(&self, id: &str) -> Option<i64> {
        self.level(id).map(|l| self.base_degree + l as i64)
    }

    /// Ids at one level, sorted.
    pub fn at_level(&self, level: u8) -> Vec<ObjectId> {
        self.objects
            .values()
            .filter(|o| o.level == level)
            .map(|o| o.id.clone())
            .collect()
    }

    fn gap(&self, from: &str, to: &str) -> Result<i64, ScoreError> {
        let a = self
            .level(from)
            .ok_or_else(|| ScoreError::UnknownObject(from.to_string()))?;
        let b = self
            .level(to)
            .ok_or_else(|| ScoreError::UnknownObject(to.to_string()))?;
        Ok(a as i64 - b as i64)
    }

    fn check_gap(
        &self,
        kind: &'static str,
        from: &str,
        to: &str,
        want: i64,
    ) -> Result<(), ScoreError> {
        if self.gap(from, to)? != want {
            return Err(ScoreError::LevelGap {
                kind,
                from: from.to_string(),
                to: to.to_string(),
            });
        }
        Ok(())
    }

    pub fn set_points(&mut self, from: &str, to: &str, n: BigInt) -> Result<(), ScoreError> {
        self.check_gap("points", from, to, 1)?;
        let key = (from.to_string(), to.to_string());
        if n.is_zero() {
            self.d.remove(&key);
        } else {
            self.d.insert(key, n);
        }
        Ok(())
    }

    pub fn set_eta(&mut self, from: &str, to: &str, v: bool) -> Result<(), ScoreError> {
        self.check_gap("eta", from, to, 2)?;
        let key = (from.to_string(), to.to_string());
        if v {
            self.h.insert(key);
        } else {
            self.h.remove(&key);
        }
        Ok(())
    }

    pub fn set_eps(&mut self, from: &str, to: &str, v: Eps) -> Result<(), ScoreError> {
        self.check_gap("epsilon", from, to, 3)?;
        let key = (from.to_string(), to.to_string());
        if v == Eps::Zero {
            self.e.remove(&key);
        } else {
            self.e.insert(key, v);
        }
        Ok(())
    }

    /// Signed point count of `M(from, to)`; zero off the stored entries.
    pub fn points(&self, from: &str, to: &str) -> BigInt {
        self.d
            .get(&(from.to_string(), to.to_string()))
            .cloned()
            .unwrap_or_default()
    }

    pub fn eta(&self, from: &str, to: &str) -> bool {
        self.h.contains(&(from.to_string(), to.to_string()))
    }

    pub fn eps(&self, from: &str, to: &str) -> Eps {
        self.e
            .get(&(from.to_string(), to.to_string()))
            .copied()
            .unwrap_or_default()
    }

    pub fn points_entries(&self) -> impl Iterator<Item = (&ObjectId, &ObjectId, &BigInt)> {
        self.d.iter().map(|((a, b), n)| (a, b, n))
    }

    pub fn eta_entries(&self) -> impl Iterator<Item = (&ObjectId, &ObjectId)> {
        self.h.iter().map(|(a, b)| (a, b))
    }

    pub fn eps_entries(&self) -> impl Iterator<Item = (&ObjectId, &ObjectId, Eps)> {
        self.e.iter().map(|((a, b), v)| (a, b, *v))
    }

    /// Nonzero point counts out of `x`.
    pub fn points_out(&self, x: &str) -> Vec<(ObjectId, BigInt)> {
        self.d
            .range(out_range(x))
            .take_while(|((a, _), _)| a == x)
            .map(|((_, b), n)| (b.clone(), n.clone()))
            .collect()
    }

    /// Nonzero point counts into `x`.
    pub fn points_in(&self, x: &str) -> Vec<(ObjectId, BigInt)> {
        self.d
            .iter()
            .filter(|((_, b), _)| b == x)
            .map(|((a, _), n)| (a.clone(), n.clone()))
            .collect()
    }

    pub fn eta_out(&self, x: &str) -> Vec<ObjectId> {
        self.h
            .range(out_range(x))
            .take_while(|(a, _)| a == x)
            .map(|(_, b)| b.clone())
            .collect()
    }

    pub fn eta_in(&self, x: &str) -> Vec<ObjectId> {
        self.h
            .iter()
            .filter(|(_, b)| b == x)
            .map(|(a, _)| a.clone())
            .collect()
    }

    pub fn eps_out(&self, x: &str) -> Vec<(ObjectId, Eps)> {
        self.e
            .range(out_range(x))
            .take_while(|((a, _), _)| a == x)
            .map(|((_, b), v)| (b.clone(), *v))
            .collect()
    }

    pub fn eps_in(&self, x: &str) -> Vec<(ObjectId, Eps)> {
        self.e
            .iter()
            .filter(|((_, b), _)| b == x)
            .map(|((a, _), v)| (a.clone(), *v))
            .collect()
    }

    /// True if `M(a, c)` for a gap-2 pair has empty boundary.
    pub fn is_closed(&self, a: &str, c: &str) -> bool {
        self.points_out(a)
            .iter()
            .all(|(z, n)| n.is_zero() || self.points(z, c).is_zero())
    }

    /// True if every gluing product feeding `∂M(a, e)` vanishes.
    pub fn eps_support_holds(&self, a: &str, e: &str) -> bool {
        let via_eta_then_points = self.eta_out(a).iter().any(|z| !self.points(z, e).is_zero());
        let via_points_then_eta = self.points_out(a).iter().any(|(z, _)| self.eta(z, e));
        !via_eta_then_points && !via_points_then_eta
    }

    /// Marks every ε entry whose support fails as unknown.
    pub fn force_unknown_where_unsupported(&mut self) {
        for a in self.at_level(3) {
            for e in self.at_level(0) {
                if !self.eps_support_holds(&a, &e) {
                    self.e.insert((a.clone(), e), Eps::Unknown);
                }
            }
        }
    }

    /// Shifts all degrees by `k`.
    pub fn suspend(&self, k: i64) -> FlowScore {
        let mut s = self.clone();
        s.base_degree += k;
        s
    }

    /// A copy with every id prefixed.
    pub fn with_prefix(&self, prefix: &str) -> FlowScore {
        let p = |x: &ObjectId| format!("{prefix}{x}");
        FlowScore {
            base_degree: self.base_degree,
            objects: self
                .objects
                .values()
                .map(|o| {
                    (
                        p(&o.id),
                        GradedObject {
                            id: p(&o.id),
                            label: o.label.clone(),
                            level: o.level,
                        },
                    )
                })
                .collect(),
            d: self
                .d
                .iter()
                .map(|((a, b), n)| ((p(a), p(b)), n.clone()))
                .collect(),
            h: self.h.iter().map(|(a, b)| (p(a), p(b))).collect(),
            e: self
                .e
                .iter()
                .map(|((a, b), v)| ((p(a), p(b)), *v))
                .collect(),
        }
    }

    /// Full subscore on the given objects.
    pub fn restrict(&self, keep: &BTreeSet<ObjectId>) -> FlowScore {
        FlowScore {
            base_degree: self.base_degree,
            objects: self
                .objects
                .iter()
                .filter(|(k, _)| keep.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            d: self
                .d
                .iter()
                .filter(|((a, b), _)| keep.contains(a) && keep.contains(b))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            h: self
                .h
                .iter()
                .filter(|(a, b)| keep.contains(a) && keep.contains(b))
                .cloned()
                .collect(),
            e: self
                .e
                .iter()
                .filter(|((a, b), _)| keep.contains(a) && keep.contains(b))
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        }
    }

    /// Integer matrix of the differential from `level` to `level - 1`, rows
    /// indexed by the upper objects in id order.
    pub fn differential(&self, level: u8) -> IntMatrix {
        let upper = self.at_level(level);
        let lower = self.at_level(level - 1);
        let mut m = IntMatrix::zeros(upper.len(), lower.len());
        for (i, a) in upper.iter().enumerate() {
            for (j, b) in lower.iter().enumerate() {
                let n = self.points(a, b);
                if !n.is_zero() {
                    m.set(i, j, n);
                }
            }
        }
        m
    }

    /// Neighbours through any nonzero D, H or E entry.
    pub fn neighbours(&self, x: &str) -> BTreeSet<ObjectId> {
        let mut out = BTreeSet::new();
        for (a, b) in self.d.keys().chain(self.h.iter()).chain(self.e.keys()) {
            if a == x {
                out.insert(b.clone());
            }
            if b == x {
                out.insert(a.clone());
            }
        }
        out
    }

    /// Degree span of the objects, as `(lowest level, highest level)`.
    pub fn level_span(&self) -> Option<(u8, u8)> {
        let lo = self.objects.values().map(|o| o.level).min()?;
        let hi = self.objects.values().map(|o| o.level).max()?;
        Some((lo, hi))
    }
}

fn out_range(x: &str) -> core::ops::RangeFrom<(ObjectId, ObjectId)> {
    (x.to_string(), String::new())..
}

/// Which invariant a violation breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Invariant {
    Chain,
    EtaSupport,
    EpsSupport,
    EtaParity,
}

impl fmt::Display for Invariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Invariant::Chain => "CHAIN",
            Invariant::EtaSupport => "ETA-SUPPORT",
            Invariant::EpsSupport => "EPS-SUPPORT",
            Invariant::EtaParity => "ETA-PARITY",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub invariant: Invariant,
    pub from: ObjectId,
    pub to: ObjectId,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{} at ({}, {})", v.invariant, v.from, v.to)?;
        }
        Ok(())
    }
}

/// Checks CHAIN, η-SUPPORT, ε-SUPPORT and η-PARITY.
pub fn validate(s: &FlowScore) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |invariant, from: &ObjectId, to: &ObjectId| {
        violations.push(Violation {
            invariant,
            from: from.clone(),
            to: to.clone(),
        })
    };

    for top in 2..=3u8 {
        for a in s.at_level(top) {
            for c in s.at_level(top - 2) {
                let sum: BigInt = s
                    .points_out(&a)
                    .iter()
                    .map(|(z, n)| n * s.points(z, &c))
                    .sum();
                if !sum.is_zero() {
                    push(Invariant::Chain, &a, &c);
                }
                if s.eta(&a, &c) && !s.is_closed(&a, &c) {
                    push(Invariant::EtaSupport, &a, &c);
                }
            }
        }
    }
    for a in s.at_level(3) {
        for e in s.at_level(0) {
            if s.eps(&a, &e).is_determinate() && !s.eps_support_holds(&a, &e) {
                push(Invariant::EpsSupport, &a, &e);
            }
            let mut parity = false;
            for z in s.eta_out(&a) {
                parity ^= s.points(&z, &e).is_odd();
            }
            for (z, n) in s.points_out(&a) {
                parity ^= n.is_odd() && s.eta(&z, &e);
            }
            if parity {
                push(Invariant::EtaParity, &a, &e);
            }
        }
    }
    ValidationReport { violations }
}

/// Homology in one degree.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DegreeHomology {
    pub free_rank: usize,
    /// Torsion prime powers, sorted ascending.
    pub torsion: Vec<BigInt>,
}

impl DegreeHomology {
    pub fn is_zero(&self) -> bool {
        self.free_rank == 0 && self.torsion.is_empty()
    }
}

/// Homology by degree; zero groups are omitted.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct HomologyProfile {
    pub groups: BTreeMap<i64, DegreeHomology>,
}

impl HomologyProfile {
    pub fn shifted(&self, k: i64) -> HomologyProfile {
        HomologyProfile {
            groups: self
                .groups
                .iter()
                .map(|(d, g)| (d + k, g.clone()))
                .collect(),
        }
    }

    /// Degreewise direct sum.
    pub fn sum(&self, other: &HomologyProfile) -> HomologyProfile {
        let mut groups = self.groups.clone();
        for (deg, g) in &other.groups {
            let slot = groups.entry(*deg).or_default();
            slot.free_rank += g.free_rank;
            slot.torsion.extend(g.torsion.iter().cloned());
            slot.torsion.sort();
        }
        HomologyProfile { groups }
    }

    /// Number of consecutive degrees from the lowest to the highest nonzero one.
    pub fn width(&self) -> usize {
        match (self.groups.keys().next(), self.groups.keys().next_back()) {
            (Some(lo), Some(hi)) => (hi - lo + 1) as usize,
            _ => 0,
        }
    }
}

impl fmt::Display for HomologyProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.groups.is_empty() {
            return f.write_str("0");
        }
        for (i, (deg, g)) in self.groups.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "H_{deg} = ")?;
            let mut parts: Vec<String> = Vec::new();
            if g.free_rank == 1 {
                parts.push("Z".to_string());
            } else if g.free_rank > 1 {
                parts.push(format!("Z^{}", g.free_rank));
            }
            for t in &g.torsion {
                parts.push(format!("Z/{t}"));
            }
            f.write_str(&parts.join(" + "))?;
        }
        Ok(())
    }
}

/// Cellular homology of the chain complex carried by the point counts.
pub fn homology(s: &FlowScore) -> Result<HomologyProfile, ScoreError> {
    let report = validate(s);
    if !report.is_empty() {
        return Err(ScoreError::Invalid(report));
    }
    Ok(homology_unchecked(s))
}

/// Homology without the validity check; CHAIN is still required for the
/// answer to mean anything.
pub fn homology_unchecked(s: &FlowScore) -> HomologyProfile {
    let counts: Vec<usize> = (0..=3).map(|l| s.at_level(l).len()).collect();
    let mut ranks = [0usize; 5];
    let mut torsion: [Vec<BigInt>; 4] = Default::default();
    for l in 1..=3u8 {
        let snf = smith_normal_form(&s.differential(l));
        let f = snf.invariant_factors();
        ranks[l as usize] = f.len();
        for x in f.iter().filter(|x| !x.is_one_abs()) {
            torsion[l as usize - 1].extend(prime_power_refine(x).expect("positive"));
        }
    }
    let mut groups = BTreeMap::new();
    for l in 0..=3usize {
        let mut t = core::mem::take(&mut torsion[l]);
        t.sort();
        let g = DegreeHomology {
            free_rank: counts[l] - ranks[l] - ranks[l + 1],
            torsion: t,
        };
        if !g.is_zero() {
            groups.insert(s.base_degree + l as i64, g);
        }
    }
    HomologyProfile { groups }
}

trait OneAbs {
    fn is_one_abs(&self) -> bool;
}

impl OneAbs for BigInt {
    fn is_one_abs(&self) -> bool {
        self.abs() == BigInt::from(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FormFlags {
    pub is_reduced: bool,
    pub is_primary_smith: bool,
    pub is_chang: bool,
}

/// Structural predicates of a valid score.
///
/// `is_reduced` holds when every gap-2 moduli space is closed, so that its
/// class alone describes it.
pub fn form_predicates(s: &FlowScore) -> Result<FormFlags, ScoreError> {
    let report = validate(s);
    if !report.is_empty() {
        return Err(ScoreError::Invalid(report));
    }
    let is_reduced = (2..=3u8).all(|top| {
        s.at_level(top)
            .iter()
            .all(|a| s.at_level(top - 2).iter().all(|c| s.is_closed(a, c)))
    });
    let mut is_primary_smith = s.points_entries().all(|(_, _, n)| is_prime_power(&n.abs()));
    let mut outs: BTreeMap<&str, usize> = BTreeMap::new();
    let mut ins: BTreeMap<&str, usize> = BTreeMap::new();
    for (a, b, _) in s.points_entries() {
        *outs.entry(a).or_default() += 1;
        *ins.entry(b).or_default() += 1;
    }
    if outs.values().chain(ins.values()).any(|&k| k > 1) {
        is_primary_smith = false;
    }
    let mut eta20: BTreeMap<&str, usize> = BTreeMap::new();
    for (a, b) in s.eta_entries() {
        if s.level(a) == Some(2) {
            *eta20.entry(a).or_default() += 1;
            *eta20.entry(b).or_default() += 1;
        }
    }
    let is_chang = is_primary_smith && eta20.values().all(|&k| k <= 1);
    Ok(FormFlags {
        is_reduced,
        is_primary_smith,
        is_chang,
    })
}

/// Block union of two scores with the same base degree and disjoint ids.
pub fn disjoint_union(a: &FlowScore, b: &FlowScore) -> Result<FlowScore, ScoreError> {
    if a.is_empty() {
        return Ok(b.clone());
    }
    if b.is_empty() {
        return Ok(a.clone());
    }
    if a.base_degree != b.base_degree {
        return Err(ScoreError::BaseDegreeMismatch(a.base_degree, b.base_degree));
    }
    if let Some(id) = b.objects.keys().find(|k| a.objects.contains_key(*k)) {
        return Err(ScoreError::DuplicateObject(id.clone()));
    }
    let mut s = a.clone();
    s.objects
        .extend(b.objects.iter().map(|(k, v)| (k.clone(), v.clone())));
    s.d.extend(b.d.iter().map(|(k, v)| (k.clone(), v.clone())));
    s.h.extend(b.h.iter().cloned());
    s.e.extend(b.e.iter().map(|(k, v)| (k.clone(), *v)));
    Ok(s)
}

/// Connected components of the graph of nonzero entries.
pub fn components(s: &FlowScore) -> Vec<BTreeSet<ObjectId>> {
    let mut seen: BTreeSet<ObjectId> = BTreeSet::new();
    let mut out = Vec::new();
    for id in s.ids() {
        if seen.contains(id) {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut stack = alloc::vec![id.clone()];
        while let Some(x) = stack.pop() {
            if !comp.insert(x.clone()) {
                continue;
            }
            for y in s.neighbours(&x) {
                if !comp.contains(&y) {
                    stack.push(y);
                }
            }
        }
        seen.extend(comp.iter().cloned());
        out.push(comp);
    }
    out
}

/// Splits a valid score into its connected summands, ordered by least id.
pub fn summand_split(s: &FlowScore) -> Result<Vec<FlowScore>, ScoreError> {
    let report = validate(s);
    if !report.is_empty() {
        return Err(ScoreError::Invalid(report));
    }
    Ok(components(s).iter().map(|c| s.restrict(c)).collect())
}

/// Kind of a drawn edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Points(BigInt),
    Eta,
    Eps(Eps),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeLayout {
    pub id: ObjectId,
    pub label: String,
    pub level: u8,
    pub x: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeLayout {
    pub from: ObjectId,
    pub to: ObjectId,
    pub kind: EdgeKind,
}

/// Placement of a score on a four-line stave.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub base_degree: i64,
    pub nodes: Vec<NodeLayout>,
    pub edges: Vec<EdgeLayout>,
    pub width: usize,
}

impl Layout {
    pub fn node(&self, id: &str) -> Option<&NodeLayout> {
        self.nodes.iter().find(|n| n.id == id)
    }
}

/// Deterministic stave layout.
///
/// Components are placed left to right; inside a component objects are
/// visited in id order and an object shares the column of a point-count
/// neighbour when that column is free at its level.
pub fn render_layout(s: &FlowScore) -> Layout {
    let mut nodes: Vec<NodeLayout> = Vec::new();
    let mut column_of: BTreeMap<ObjectId, usize> = BTreeMap::new();
    let mut occupied: BTreeSet<(usize, u8)> = BTreeSet::new();
    let mut next = 0usize;
    for comp in components(s) {
        for id in &comp {
            let obj = &s.objects[id];
            let partners = s
                .points_out(id)
                .into_iter()
                .chain(s.points_in(id))
                .map(|(z, _)| z);
            let shared = partners
                .filter_map(|z| column_of.get(&z).copied())
                .find(|&c| !occupied.contains(&(c, obj.level)));
            let x = shared.unwrap_or_else(|| {
                next += 1;
                next - 1
            });
            occupied.insert((x, obj.level));
            column_of.insert(id.clone(), x);
            nodes.push(NodeLayout {
                id: id.clone(),
                label: obj.label.clone(),
                level: obj.level,
                x,
            });
        }
    }
    let mut edges: Vec<EdgeLayout> = Vec::new();
    for (a, b, n) in s.points_entries() {
        edges.push(EdgeLayout {
            from: a.clone(),
            to: b.clone(),
            kind: EdgeKind::Points(n.clone()),
        });
    }
    for (a, b) in s.eta_entries() {
        edges.push(EdgeLayout {
            from: a.clone(),
            to: b.clone(),
            kind: EdgeKind::Eta,
        });
    }
    for (a, b, v) in s.eps_entries() {
        edges.push(EdgeLayout {
            from: a.clone(),
            to: b.clone(),
            kind: EdgeKind::Eps(v),
        });
    }
    Layout {
        base_degree: s.base_degree,
        nodes,
        edges,
        width: next,
    }
}

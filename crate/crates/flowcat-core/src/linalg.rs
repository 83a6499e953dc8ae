//! Exact linear algebra over the integers and over F2.
//!
//! Integer matrices carry unbounded entries. The Smith reduction records the
//! unimodular row and column transforms so that callers can replay them as
//! handle slides. F2 matrices come with a canonical similarity form built
//! from elementary divisors.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Errors raised by the linear algebra kernel.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LinalgError {
    /// Two operands have incompatible shapes.
    DimensionMismatch,
    /// The operation needs a square matrix.
    NotSquare,
    /// `prime_power_refine` was handed a non-positive integer.
    NonPositive,
}

impl fmt::Display for LinalgError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinalgError::DimensionMismatch => f.write_str("matrix dimensions do not match"),
            LinalgError::NotSquare => f.write_str("matrix is not square"),
            LinalgError::NonPositive => f.write_str("expected a positive integer"),
        }
    }
}

/// Dense integer matrix, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    /// Builds a matrix from row vectors.
    ///
    /// # Panics
    /// Panics if the rows have different lengths.
    pub fn from_rows<T: Clone + Into<BigInt>>(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend(r.iter().cloned().map(Into::into));
        }
        IntMatrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch);
        }
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self.get(i, j).is_zero()))
    }

    /// Determinant by Bareiss fraction-free elimination.
    pub fn determinant(&self) -> Result<BigInt, LinalgError> {
        if self.rows != self.cols {
            return Err(LinalgError::NotSquare);
        }
        let n = self.rows;
        if n == 0 {
            return Ok(BigInt::one());
        }
        let mut m = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m.get(k, k).is_zero() {
                match (k + 1..n).find(|&i| !m.get(i, k).is_zero()) {
                    Some(i) => {
                        m.swap_rows(k, i);
                        sign = -sign;
                    }
                    None => return Ok(BigInt::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (m.get(i, j) * m.get(k, k) - m.get(i, k) * m.get(k, j)) / &prev;
                    m.set(i, j, v);
                }
            }
            prev = m.get(k, k).clone();
        }
        Ok(sign * m.get(n - 1, n - 1))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += k * row[src]
    fn add_row(&mut self, dst: usize, src: usize, k: &BigInt) {
        for j in 0..self.cols {
            let v = self.get(src, j) * k;
            if !v.is_zero() {
                self.data[dst * self.cols + j] += v;
            }
        }
    }

    /// col[dst] += k * col[src]
    fn add_col(&mut self, dst: usize, src: usize, k: &BigInt) {
        for i in 0..self.rows {
            let v = self.get(i, src) * k;
            if !v.is_zero() {
                self.data[i * self.cols + dst] += v;
            }
        }
    }

    fn negate_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -self.get(r, j);
            self.set(r, j, v);
        }
    }
}

/// `d = u * a * v` with `u`, `v` unimodular and `d` in Smith form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithDecomposition {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl SmithDecomposition {
    /// Nonzero diagonal entries in order.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        (0..self.d.rows.min(self.d.cols))
            .map(|i| self.d.get(i, i).clone())
            .filter(|x| !x.is_zero())
            .collect()
    }

    pub fn rank(&self) -> usize {
        self.invariant_factors().len()
    }
}

/// Smith normal form by elementary operations.
///
/// The pivot is a nonzero entry of least absolute value in the active
/// submatrix, first by column and then by row on ties.
pub fn smith_normal_form(a: &IntMatrix) -> SmithDecomposition {
    let (m, n) = (a.rows, a.cols);
    let mut d = a.clone();
    let mut u = IntMatrix::identity(m);
    let mut v = IntMatrix::identity(n);

    for t in 0..m.min(n) {
        let Some((pi, pj)) = min_abs_entry(&d, t) else {
            break;
        };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);

        loop {
            let p = d.get(t, t).clone();
            for i in t + 1..m {
                if !d.get(i, t).is_zero() {
                    let q = -d.get(i, t).div_floor(&p);
                    d.add_row(i, t, &q);
                    u.add_row(i, t, &q);
                }
            }
            for j in t + 1..n {
                if !d.get(t, j).is_zero() {
                    let q = -d.get(t, j).div_floor(&p);
                    d.add_col(j, t, &q);
                    v.add_col(j, t, &q);
                }
            }

            let mut best: Option<(bool, usize, BigInt)> = None;
            for i in t + 1..m {
                let x = d.get(i, t).abs();
                if !x.is_zero() && best.as_ref().is_none_or(|b| x < b.2) {
                    best = Some((true, i, x));
                }
            }
            for j in t + 1..n {
                let x = d.get(t, j).abs();
                if !x.is_zero() && best.as_ref().is_none_or(|b| x < b.2) {
                    best = Some((false, j, x));
                }
            }
            if let Some((is_row, k, _)) = best {
                if is_row {
                    d.swap_rows(t, k);
                    u.swap_rows(t, k);
                } else {
                    d.swap_cols(t, k);
                    v.swap_cols(t, k);
                }
                continue;
            }

            let bad = (t + 1..n)
                .flat_map(|j| (t + 1..m).map(move |i| (i, j)))
                .find(|&(i, j)| !d.get(i, j).is_multiple_of(&p));
            match bad {
                Some((i, _)) => {
                    let one = BigInt::one();
                    d.add_row(t, i, &one);
                    u.add_row(t, i, &one);
                }
                None => break,
            }
        }

        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
        }
    }
    SmithDecomposition { u, d, v }
}

fn min_abs_entry(d: &IntMatrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, BigInt)> = None;
    for j in t..d.cols {
        for i in t..d.rows {
            let x = d.get(i, j).abs();
            if !x.is_zero() && best.as_ref().is_none_or(|b| x < b.2) {
                best = Some((i, j, x));
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

/// Splits `d` into prime powers, ordered by prime.
pub fn prime_power_refine(d: &BigInt) -> Result<Vec<BigInt>, LinalgError> {
    if !d.is_positive() {
        return Err(LinalgError::NonPositive);
    }
    let mut rest = d.clone();
    let mut out = Vec::new();
    let mut p = BigInt::from(2u32);
    while &p * &p <= rest {
        if rest.is_multiple_of(&p) {
            let mut pk = BigInt::one();
            while rest.is_multiple_of(&p) {
                rest /= &p;
                pk *= &p;
            }
            out.push(pk);
        }
        p += 1u32;
    }
    if rest > BigInt::one() {
        out.push(rest);
    }
    Ok(out)
}

/// True if `d` is `p^k` for a prime `p` and `k >= 1`.
pub fn is_prime_power(d: &BigInt) -> bool {
    d.is_positive() && prime_power_refine(d).is_ok_and(|v| v.len() == 1)
}

/// The prime underlying a prime power.
pub fn prime_of(d: &BigInt) -> Option<BigInt> {
    if !is_prime_power(d) {
        return None;
    }
    let mut p = BigInt::from(2u32);
    while &p * &p <= *d {
        if d.is_multiple_of(&p) {
            return Some(p);
        }
        p += 1u32;
    }
    Some(d.clone())
}

/// Dense matrix over F2.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct F2Matrix {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl F2Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        F2Matrix {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = F2Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, true);
        }
        m
    }

    /// Builds a matrix from rows of 0/1 values; any nonzero entry is a one.
    ///
    /// # Panics
    /// Panics if the rows have different lengths.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = F2Matrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            for (j, &x) in r.iter().enumerate() {
                m.set(i, j, x & 1 == 1);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.bits[i * self.cols + j] = v;
    }

    pub fn flip(&mut self, i: usize, j: usize) {
        self.bits[i * self.cols + j] ^= true;
    }

    pub fn is_zero(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) as u8).collect())
            .collect()
    }

    pub fn mul(&self, other: &F2Matrix) -> Result<F2Matrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch);
        }
        let mut out = F2Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.get(i, k) {
                    for j in 0..other.cols {
                        if other.get(k, j) {
                            out.flip(i, j);
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &F2Matrix) -> Result<F2Matrix, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch);
        }
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(F2Matrix {
            rows: self.rows,
            cols: self.cols,
            bits,
        })
    }

    pub fn transpose(&self) -> F2Matrix {
        let mut t = F2Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn rank(&self) -> usize {
        row_echelon(self.clone()).1.len()
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    pub fn inverse(&self) -> Option<F2Matrix> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let mut aug = F2Matrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, n + i, true);
        }
        let (red, pivots) = row_echelon(aug);
        if pivots.len() < n || pivots.iter().any(|&p| p >= n) {
            return None;
        }
        let mut inv = F2Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, red.get(i, n + j));
            }
        }
        Some(inv)
    }

    pub fn pow(&self, mut e: usize) -> F2Matrix {
        let mut base = self.clone();
        let mut acc = F2Matrix::identity(self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base).expect("square");
            }
            base = base.mul(&base).expect("square");
            e >>= 1;
        }
        acc
    }

    /// Basis of the right kernel, each vector of length `cols`.
    pub fn kernel(&self) -> Vec<Vec<bool>> {
        let (red, pivots) = row_echelon(self.clone());
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|c| !pivots.contains(c)) {
            let mut v = vec![false; self.cols];
            v[free] = true;
            for (r, &pc) in pivots.iter().enumerate() {
                if red.get(r, free) {
                    v[pc] = true;
                }
            }
            basis.push(v);
        }
        basis
    }

    /// Basis of the column space.
    pub fn image(&self) -> Vec<Vec<bool>> {
        let (_, pivots) = row_echelon(self.clone());
        pivots
            .iter()
            .map(|&c| (0..self.rows).map(|i| self.get(i, c)).collect())
            .collect()
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(n: usize, cols: &[Vec<bool>]) -> F2Matrix {
        let mut m = F2Matrix::zeros(n, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, &b) in c.iter().enumerate() {
                m.set(i, j, b);
            }
        }
        m
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> F2Matrix {
        let mut m = F2Matrix::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                m.set(a, b, self.get(i, j));
            }
        }
        m
    }

    pub fn block_diagonal(blocks: &[F2Matrix]) -> F2Matrix {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let c: usize = blocks.iter().map(|b| b.cols).sum();
        let mut m = F2Matrix::zeros(n, c);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    m.set(r0 + i, c0 + j, b.get(i, j));
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        m
    }

    /// True if `self` is conjugate to a block diagonal matrix with at least
    /// two blocks.
    pub fn is_decomposable(&self) -> bool {
        self.rows > 0 && f2_canonical_blocks(self).len() > 1
    }
}

impl fmt::Display for F2Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str("[")?;
            for j in 0..self.cols {
                if j > 0 {
                    f.write_str(",")?;
                }
                f.write_str(if self.get(i, j) { "1" } else { "0" })?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

/// Reduced row echelon form and the pivot columns.
fn row_echelon(mut m: F2Matrix) -> (F2Matrix, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..m.cols {
        if r == m.rows {
            break;
        }
        let Some(p) = (r..m.rows).find(|&i| m.get(i, c)) else {
            continue;
        };
        if p != r {
            for j in 0..m.cols {
                m.bits.swap(p * m.cols + j, r * m.cols + j);
            }
        }
        for i in 0..m.rows {
            if i != r && m.get(i, c) {
                for j in 0..m.cols {
                    if m.get(r, j) {
                        m.flip(i, j);
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    (m, pivots)
}

/// Polynomial over F2, coefficient `i` of `x^i`, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct F2Poly(Vec<bool>);

impl F2Poly {
    fn one() -> Self {
        F2Poly(vec![true])
    }

    fn x() -> Self {
        F2Poly(vec![false, true])
    }

    fn trimmed(mut v: Vec<bool>) -> Self {
        while v.last() == Some(&false) {
            v.pop();
        }
        F2Poly(v)
    }

    fn from_bits(bits: u64, degree: usize) -> Self {
        F2Poly::trimmed((0..=degree).map(|i| bits >> i & 1 == 1).collect())
    }

    fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    fn add(&self, o: &F2Poly) -> F2Poly {
        let n = self.0.len().max(o.0.len());
        F2Poly::trimmed(
            (0..n)
                .map(|i| {
                    self.0.get(i).copied().unwrap_or(false) ^ o.0.get(i).copied().unwrap_or(false)
                })
                .collect(),
        )
    }

    fn mul(&self, o: &F2Poly) -> F2Poly {
        if self.0.is_empty() || o.0.is_empty() {
            return F2Poly(Vec::new());
        }
        let mut v = vec![false; self.0.len() + o.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            if a {
                for (j, &b) in o.0.iter().enumerate() {
                    v[i + j] ^= b;
                }
            }
        }
        F2Poly::trimmed(v)
    }

    fn pow(&self, e: usize) -> F2Poly {
        (0..e).fold(F2Poly::one(), |acc, _| acc.mul(self))
    }

    fn divrem(&self, d: &F2Poly) -> (F2Poly, F2Poly) {
        let dd = d.degree().expect("division by zero polynomial");
        let mut r = self.0.clone();
        let mut q = vec![false; r.len().saturating_sub(dd).max(1)];
        while r.len() > dd {
            let shift = r.len() - 1 - dd;
            q[shift] = true;
            for (i, &b) in d.0.iter().enumerate() {
                r[shift + i] ^= b;
            }
            while r.last() == Some(&false) {
                r.pop();
            }
        }
        (F2Poly::trimmed(q), F2Poly::trimmed(r))
    }

    fn eval(&self, a: &F2Matrix) -> F2Matrix {
        let mut acc = F2Matrix::zeros(a.rows, a.cols);
        for &c in self.0.iter().rev() {
            acc = acc.mul(a).expect("square");
            if c {
                for i in 0..a.rows {
                    acc.flip(i, i);
                }
            }
        }
        acc
    }
}

/// Characteristic polynomial via reduction to Hessenberg form.
fn char_poly(a: &F2Matrix) -> F2Poly {
    let n = a.rows;
    let mut h = a.clone();
    for k in 0..n.saturating_sub(2) {
        let Some(p) = (k + 1..n).find(|&i| h.get(i, k)) else {
            continue;
        };
        if p != k + 1 {
            for j in 0..n {
                h.bits.swap(p * n + j, (k + 1) * n + j);
            }
            for i in 0..n {
                h.bits.swap(i * n + p, i * n + k + 1);
            }
        }
        for i in k + 2..n {
            if h.get(i, k) {
                // row i += row k+1, then col k+1 += col i to stay similar
                for j in 0..n {
                    if h.get(k + 1, j) {
                        h.flip(i, j);
                    }
                }
                for r in 0..n {
                    if h.get(r, i) {
                        h.flip(r, k + 1);
                    }
                }
            }
        }
    }
    let mut ps: Vec<F2Poly> = vec![F2Poly::one()];
    for m in 0..n {
        let mut next = ps[m].mul(&F2Poly::x());
        if h.get(m, m) {
            next = next.add(&ps[m]);
        }
        let mut prod = true;
        for i in (0..m).rev() {
            prod &= h.get(i + 1, i);
            if !prod {
                break;
            }
            if h.get(i, m) {
                next = next.add(&ps[i]);
            }
        }
        ps.push(next);
    }
    ps.pop().unwrap()
}

/// Irreducible factors with multiplicities, sorted.
fn factor(mut f: F2Poly) -> Vec<(F2Poly, usize)> {
    let mut out = Vec::new();
    let mut d = 1;
    while f.degree().is_some_and(|df| df >= 2 * d) {
        let lo = 1u64 << d;
        for bits in lo..lo << 1 {
            let cand = F2Poly::from_bits(bits, d);
            let mut e = 0;
            loop {
                let (q, r) = f.divrem(&cand);
                if r.0.is_empty() {
                    f = q;
                    e += 1;
                } else {
                    break;
                }
            }
            if e > 0 {
                out.push((cand, e));
            }
        }
        d += 1;
    }
    if f.degree().is_some_and(|df| df > 0) {
        match out.iter_mut().find(|(p, _)| *p == f) {
            Some(entry) => entry.1 += 1,
            None => out.push((f, 1)),
        }
    }
    out.sort();
    out
}

/// One block of the F2 canonical form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum F2Block {
    /// Companion-like block: first column `a_1..a_n` with `a_n = 1`, ones on
    /// the superdiagonal, zero elsewhere.
    Invertible(Vec<bool>),
    /// Jordan block with zero diagonal.
    Nilpotent(usize),
}

impl F2Block {
    pub fn size(&self) -> usize {
        match self {
            F2Block::Invertible(a) => a.len(),
            F2Block::Nilpotent(n) => *n,
        }
    }

    /// First-column bits; all zero for nilpotent blocks.
    pub fn first_column(&self) -> Vec<bool> {
        match self {
            F2Block::Invertible(a) => a.clone(),
            F2Block::Nilpotent(n) => vec![false; *n],
        }
    }

    pub fn matrix(&self) -> F2Matrix {
        let a = self.first_column();
        let n = a.len();
        let mut m = F2Matrix::zeros(n, n);
        for (i, &b) in a.iter().enumerate() {
            m.set(i, 0, b);
            if i + 1 < n {
                m.set(i, i + 1, true);
            }
        }
        m
    }

    fn from_elementary_divisor(p: &F2Poly, k: usize) -> F2Block {
        if *p == F2Poly::x() {
            return F2Block::Nilpotent(k);
        }
        let q = p.pow(k);
        let n = q.degree().unwrap();
        F2Block::Invertible((1..=n).map(|i| q.0[n - i]).collect())
    }
}

impl Ord for F2Block {
    fn cmp(&self, other: &Self) -> Ordering {
        self.size()
            .cmp(&other.size())
            .then_with(|| self.first_column().cmp(&other.first_column()))
    }
}

impl PartialOrd for F2Block {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical similarity form over F2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct F2CanonicalForm {
    pub blocks: Vec<F2Block>,
    /// Columns are the new basis: `basis^-1 * A * basis = assembly()`.
    pub basis: F2Matrix,
}

impl F2CanonicalForm {
    pub fn assembly(&self) -> F2Matrix {
        assemble(&self.blocks)
    }
}

fn assemble(blocks: &[F2Block]) -> F2Matrix {
    let mats: Vec<F2Matrix> = blocks.iter().map(F2Block::matrix).collect();
    F2Matrix::block_diagonal(&mats)
}

/// Sorted elementary-divisor blocks of a square matrix.
///
/// # Panics
/// Panics if `a` is not square.
pub fn f2_canonical_blocks(a: &F2Matrix) -> Vec<F2Block> {
    assert!(a.is_square(), "f2_canonical_blocks needs a square matrix");
    let n = a.rows;
    let mut blocks = Vec::new();
    for (p, e) in factor(char_poly(a)) {
        let dp = p.degree().unwrap();
        let t = p.eval(a);
        let mut ranks = vec![n];
        let mut tj = F2Matrix::identity(n);
        for _ in 0..e {
            tj = tj.mul(&t).unwrap();
            ranks.push(tj.rank());
        }
        let at_least = |j: usize| -> usize {
            if j > e {
                0
            } else {
                (ranks[j - 1] - ranks[j]) / dp
            }
        };
        for j in 1..=e {
            for _ in 0..at_least(j) - at_least(j + 1) {
                blocks.push(F2Block::from_elementary_divisor(&p, j));
            }
        }
    }
    blocks.sort();
    blocks
}

/// Canonical form with an explicit change of basis.
///
/// The matrix is first split into its Fitting components (kernel and image
/// of `A^n`); on each component a basis is found by solving the intertwining
/// equation `A P = P B` and picking an invertible solution.
pub fn f2_canonical_form(a: &F2Matrix) -> Result<F2CanonicalForm, LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare);
    }
    let n = a.rows;
    let an = a.pow(n);
    let mut cols = an.kernel();
    let nil_dim = cols.len();
    cols.extend(an.image());
    let split = F2Matrix::from_columns(n, &cols);
    let split_inv = split.inverse().expect("Fitting decomposition spans");
    let a2 = split_inv.mul(a)?.mul(&split)?;

    let nil_idx: Vec<usize> = (0..nil_dim).collect();
    let inv_idx: Vec<usize> = (nil_dim..n).collect();
    let mut blocks = Vec::new();
    let mut local = Vec::new();
    for idx in [&nil_idx, &inv_idx] {
        let part = a2.submatrix(idx, idx);
        let bl = f2_canonical_blocks(&part);
        local.push(intertwiner(&part, &assemble(&bl)));
        blocks.extend(bl);
    }
    // Local blocks are each sorted; merge keeps the component order stable.
    let q = F2Matrix::block_diagonal(&local);
    let mut basis = split.mul(&q)?;

    let assembled_local: Vec<F2Block> = blocks.clone();
    blocks.sort();
    let perm = sort_permutation(&assembled_local, &blocks);
    basis = basis.mul(&perm)?;
    Ok(F2CanonicalForm { blocks, basis })
}

/// Block permutation matrix taking the `from` block order to `to`.
fn sort_permutation(from: &[F2Block], to: &[F2Block]) -> F2Matrix {
    let n: usize = from.iter().map(F2Block::size).sum();
    let mut offsets = Vec::new();
    let mut o = 0;
    for b in from {
        offsets.push(o);
        o += b.size();
    }
    let mut used = vec![false; from.len()];
    let mut p = F2Matrix::zeros(n, n);
    let mut col = 0;
    for b in to {
        let k = (0..from.len())
            .find(|&k| !used[k] && from[k] == *b)
            .expect("same multiset");
        used[k] = true;
        for i in 0..b.size() {
            p.set(offsets[k] + i, col + i, true);
        }
        col += b.size();
    }
    p
}

/// An invertible `P` with `A P = P B`, assuming `A` and `B` are similar.
fn intertwiner(a: &F2Matrix, b: &F2Matrix) -> F2Matrix {
    let n = a.rows;
    if n == 0 {
        return F2Matrix::zeros(0, 0);
    }
    // Unknown P[k][c] sits at index k * n + c.
    let mut sys = F2Matrix::zeros(n * n, n * n);
    for r in 0..n {
        for c in 0..n {
            let eq = r * n + c;
            for k in 0..n {
                if a.get(r, k) {
                    sys.flip(eq, k * n + c);
                }
                if b.get(k, c) {
                    sys.flip(eq, r * n + k);
                }
            }
        }
    }
    let sols = sys.kernel();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_f2f2);
    let build = |pick: &dyn Fn(usize) -> bool| {
        let mut p = F2Matrix::zeros(n, n);
        for (s, v) in sols.iter().enumerate() {
            if pick(s) {
                for (idx, &bit) in v.iter().enumerate() {
                    if bit {
                        p.flip(idx / n, idx % n);
                    }
                }
            }
        }
        p
    };
    loop {
        let mut choice = vec![false; sols.len()];
        for c in choice.iter_mut() {
            *c = rng.next_u32() & 1 == 1;
        }
        let p = build(&|s| choice[s]);
        if p.is_invertible() {
            return p;
        }
    }
}

/// Similarity test over F2.
pub fn f2_similar(a: &F2Matrix, b: &F2Matrix) -> Result<bool, LinalgError> {
    if !a.is_square() || !b.is_square() {
        return Err(LinalgError::NotSquare);
    }
    if a.rows != b.rows {
        return Err(LinalgError::DimensionMismatch);
    }
    Ok(f2_canonical_blocks(a) == f2_canonical_blocks(b))
}

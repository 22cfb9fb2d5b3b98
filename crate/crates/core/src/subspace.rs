//! Subspaces of F_q^n in canonical reduced row echelon form.
//!
//! Vectors are written as strings of `n` base-q digits with coordinate 1 on
//! the left. A [`Subspace`] stores its RREF basis flattened row-major; two
//! subspaces are equal as sets of vectors exactly when these bases agree, so
//! the derived `Eq`/`Hash`/`Ord` are the set semantics.
//!
//! Ordering compares `(q, n, dim)` first and then the basis digits
//! lexicographically. [`Grassmannian`] emits subspaces in that order.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::gf::{Elem, Field};

/// Largest ambient dimension accepted.
pub const MAX_AMBIENT: usize = 16;

/// Default guard on the number of subspaces an enumeration may produce.
pub const ENUMERATION_LIMIT: u128 = 200_000_000;

/// Default guard on materialized (collected) enumerations.
pub const MATERIALIZE_LIMIT: u128 = 5_000_000;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    q: u8,
    n: u8,
    k: u8,
    rows: Vec<Elem>,
}

/// Reduces `rows` in place to reduced row echelon form, dropping zero rows.
/// Returns the pivot column of each remaining row.
pub(crate) fn rref(field: &Field, rows: &mut Vec<Vec<Elem>>, width: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..width {
        if r == rows.len() {
            break;
        }
        let Some(sel) = (r..rows.len()).find(|&i| rows[i][col] != 0) else {
            continue;
        };
        rows.swap(r, sel);
        let lead = rows[r][col];
        if lead != 1 {
            let inv = field.inv_nz(lead);
            for x in rows[r].iter_mut() {
                *x = field.mul(*x, inv);
            }
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let c = row[col];
            if c != 0 {
                for (x, &y) in row.iter_mut().zip(&pivot_row) {
                    if y != 0 {
                        *x = field.sub(*x, field.mul(c, y));
                    }
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    rows.truncate(r);
    pivots
}

/// Parses a vector literal: `n` base-q digits, coordinate 1 first.
pub fn parse_vector(s: &str, q: u8) -> Result<Vec<Elem>> {
    s.chars()
        .map(|c| {
            c.to_digit(10)
                .filter(|&d| d < q as u32)
                .map(|d| d as Elem)
                .ok_or_else(|| Error::precondition(format!("invalid digit {c:?} in vector {s:?} over F_{q}")))
        })
        .collect()
}

pub fn format_vector(v: &[Elem]) -> String {
    v.iter().map(|&d| char::from(b'0' + d)).collect()
}

/// Unit vector `e_i` of length `n`, with `i` 1-based.
pub fn unit_vector(n: usize, i: usize) -> Vec<Elem> {
    let mut v = vec![0; n];
    v[i - 1] = 1;
    v
}

fn check_ambient(n: usize) -> Result<()> {
    if n > MAX_AMBIENT {
        Err(Error::capacity("ambient dimension", n as u128, MAX_AMBIENT as u128))
    } else {
        Ok(())
    }
}

impl Subspace {
    pub(crate) fn from_canonical_unchecked(q: u8, n: usize, rows: Vec<Vec<Elem>>) -> Subspace {
        let k = rows.len();
        let flat: Vec<Elem> = rows.into_iter().flatten().collect();
        debug_assert_eq!(flat.len(), k * n);
        Subspace {
            q,
            n: n as u8,
            k: k as u8,
            rows: flat,
        }
    }

    /// Row-reduces without validating element ranges.
    pub(crate) fn from_rows(field: &Field, n: usize, mut rows: Vec<Vec<Elem>>) -> Subspace {
        rref(field, &mut rows, n);
        Self::from_canonical_unchecked(field.order(), n, rows)
    }

    /// Linear span of `vectors` in F_q^n.
    pub fn span(field: &Field, n: usize, vectors: &[Vec<Elem>]) -> Result<Subspace> {
        check_ambient(n)?;
        for v in vectors {
            if v.len() != n {
                return Err(Error::dimension(format!(
                    "vector of length {} in F_{}^{}",
                    v.len(),
                    field.order(),
                    n
                )));
            }
            for &x in v {
                field.check(x as u32)?;
            }
        }
        Ok(Self::from_rows(field, n, vectors.to_vec()))
    }

    /// Span of vector literals such as `"0000110"`.
    pub fn span_str(field: &Field, vectors: &[&str]) -> Result<Subspace> {
        let n = vectors.first().map_or(0, |v| v.len());
        let rows = vectors
            .iter()
            .map(|s| parse_vector(s, field.order()))
            .collect::<Result<Vec<_>>>()?;
        Self::span(field, n, &rows)
    }

    /// Accepts `rows` only if they already are the canonical basis of their span.
    pub fn from_canonical(field: &Field, n: usize, rows: Vec<Vec<Elem>>) -> Result<Subspace> {
        let s = Self::span(field, n, &rows)?;
        if s.dim() != rows.len() || s.rows().zip(&rows).any(|(a, b)| a != b.as_slice()) {
            return Err(Error::precondition(
                "rows are not a canonical reduced row echelon basis",
            ));
        }
        Ok(s)
    }

    pub fn zero(q: u8, n: usize) -> Subspace {
        Subspace {
            q,
            n: n as u8,
            k: 0,
            rows: Vec::new(),
        }
    }

    pub fn full(q: u8, n: usize) -> Subspace {
        let rows = (1..=n).map(|i| unit_vector(n, i)).collect();
        Self::from_canonical_unchecked(q, n, rows)
    }

    /// Span of the unit vectors at the given 1-based coordinates.
    pub fn coordinate_span(q: u8, n: usize, coords: &[usize]) -> Subspace {
        let mut cs = coords.to_vec();
        cs.sort_unstable();
        cs.dedup();
        let rows = cs.into_iter().map(|i| unit_vector(n, i)).collect();
        Self::from_canonical_unchecked(q, n, rows)
    }

    #[inline]
    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn field(&self) -> &'static Field {
        Field::shared(self.q as u32).expect("subspace built over a supported field")
    }

    #[inline]
    pub fn ambient_dim(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.k as usize
    }

    pub fn row(&self, i: usize) -> &[Elem] {
        let n = self.n as usize;
        &self.rows[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[Elem]> + '_ {
        (0..self.dim()).map(move |i| self.row(i))
    }

    pub fn basis(&self) -> Vec<Vec<Elem>> {
        self.rows().map(|r| r.to_vec()).collect()
    }

    /// Pivot column (0-based) of each basis row.
    pub fn pivots(&self) -> Vec<usize> {
        self.rows().map(|r| r.iter().position(|&x| x != 0).unwrap()).collect()
    }

    /// Column `j` (1-based) across the basis rows.
    pub fn column(&self, j: usize) -> Vec<Elem> {
        self.rows().map(|r| r[j - 1]).collect()
    }

    pub fn same_ambient(&self, other: &Subspace) -> Result<()> {
        if self.q != other.q || self.n != other.n {
            return Err(Error::AmbientMismatch {
                expected_q: self.q,
                expected_n: self.ambient_dim(),
                found_q: other.q,
                found_n: other.ambient_dim(),
            });
        }
        Ok(())
    }

    /// Reduces `v` against the basis; the result is zero iff `v` is in the span.
    fn residue(&self, v: &[Elem]) -> Vec<Elem> {
        let f = self.field();
        let mut w = v.to_vec();
        for (row, p) in self.rows().zip(self.pivots()) {
            let c = w[p];
            if c != 0 {
                for (x, &y) in w.iter_mut().zip(row) {
                    if y != 0 {
                        *x = f.sub(*x, f.mul(c, y));
                    }
                }
            }
        }
        w
    }

    pub fn contains(&self, v: &[Elem]) -> Result<bool> {
        if v.len() != self.ambient_dim() {
            return Err(Error::AmbientMismatch {
                expected_q: self.q,
                expected_n: self.ambient_dim(),
                found_q: self.q,
                found_n: v.len(),
            });
        }
        Ok(self.contains_unchecked(v))
    }

    pub(crate) fn contains_unchecked(&self, v: &[Elem]) -> bool {
        self.residue(v).iter().all(|&x| x == 0)
    }

    pub fn contains_subspace(&self, other: &Subspace) -> Result<bool> {
        self.same_ambient(other)?;
        Ok(other.dim() <= self.dim() && other.rows().all(|r| self.contains_unchecked(r)))
    }

    pub fn sum(&self, other: &Subspace) -> Result<Subspace> {
        self.same_ambient(other)?;
        let rows = self.rows().chain(other.rows()).map(|r| r.to_vec()).collect();
        Ok(Self::from_rows(self.field(), self.ambient_dim(), rows))
    }

    /// Intersection by the Zassenhaus construction.
    pub fn intersect(&self, other: &Subspace) -> Result<Subspace> {
        self.same_ambient(other)?;
        let f = self.field();
        let n = self.ambient_dim();
        let mut rows: Vec<Vec<Elem>> = self
            .rows()
            .map(|r| r.iter().chain(r).copied().collect())
            .chain(
                other
                    .rows()
                    .map(|r| r.iter().copied().chain(std::iter::repeat_n(0, n)).collect()),
            )
            .collect();
        rref(f, &mut rows, 2 * n);
        let meet: Vec<Vec<Elem>> = rows
            .into_iter()
            .filter(|r| r[..n].iter().all(|&x| x == 0))
            .map(|r| r[n..].to_vec())
            .collect();
        Ok(Self::from_rows(f, n, meet))
    }

    /// All q^k vectors of the subspace, in odometer order of the coefficients.
    pub fn vectors(&self) -> Vec<Vec<Elem>> {
        let f = self.field();
        let n = self.ambient_dim();
        let mut out = vec![vec![0; n]];
        for row in self.rows() {
            let mut next = Vec::with_capacity(out.len() * self.q as usize);
            for v in &out {
                for c in f.elements() {
                    next.push(v.iter().zip(row).map(|(&x, &y)| f.add(x, f.mul(c, y))).collect());
                }
            }
            out = next;
        }
        out
    }

    /// Every `t`-subspace contained in `self`.
    pub fn subspaces(&self, t: usize) -> Vec<Subspace> {
        let k = self.dim();
        if t > k {
            return Vec::new();
        }
        let f = self.field();
        let n = self.ambient_dim();
        Grassmannian::unguarded(f, k, t)
            .map(|c| {
                // C in RREF and B in RREF make C·B canonical already.
                let rows = c
                    .rows()
                    .map(|coef| {
                        let mut v = vec![0; n];
                        for (j, &a) in coef.iter().enumerate() {
                            if a != 0 {
                                for (x, &y) in v.iter_mut().zip(self.row(j)) {
                                    *x = f.add(*x, f.mul(a, y));
                                }
                            }
                        }
                        v
                    })
                    .collect();
                Subspace::from_canonical_unchecked(self.q, n, rows)
            })
            .collect()
    }

    /// Basis rows joined by `,`; the zero subspace is `-`.
    pub fn key(&self) -> String {
        if self.dim() == 0 {
            "-".to_string()
        } else {
            self.rows().map(format_vector).collect::<Vec<_>>().join(",")
        }
    }

    pub fn parse_key(field: &Field, n: usize, key: &str) -> Result<Subspace> {
        if key == "-" {
            return Ok(Subspace::zero(field.order(), n));
        }
        let rows = key
            .split(',')
            .map(|s| {
                let v = parse_vector(s, field.order())?;
                if v.len() != n {
                    return Err(Error::dimension(format!("row {s:?} has length {} not {n}", v.len())));
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        Subspace::from_canonical(field, n, rows)
    }
}

impl fmt::Display for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.dim() == 0 {
            return f.write_str("-");
        }
        for (i, r) in self.rows().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(&format_vector(r))?;
        }
        Ok(())
    }
}

impl serde::Serialize for Subspace {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.key())
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subspace(F_{}^{}, [{}])", self.q, self.n, self)
    }
}

/// Gaussian binomial coefficient `[n k]_q`; zero when `k > n`.
pub fn gaussian_binomial(n: u32, k: u32, q: u32) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let q = BigUint::from(q);
    let one = BigUint::one();
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for i in 0..k {
        num *= q.pow(n - i) - &one;
        den *= q.pow(i + 1) - &one;
    }
    num / den
}

/// `[n k]_q` as a `u128`, saturating on overflow.
pub fn gaussian_count(n: u32, k: u32, q: u32) -> u128 {
    gaussian_binomial(n, k, q).to_u128().unwrap_or(u128::MAX)
}

/// Streaming enumeration of G_q(n, k) in lexicographic order of canonical bases.
///
/// Depth-first over basis rows: row `d` ranges over vectors with a leading one
/// at a column free in all earlier rows, rows are tried in increasing digit
/// order, and a row is accepted only if enough all-zero columns remain after
/// its pivot for the rows still to come. That last test is also sufficient
/// (unit rows complete it), so the walk never dead-ends.
pub struct Grassmannian<'a> {
    field: &'a Field,
    n: usize,
    k: usize,
    stack: Vec<Frame>,
    started: bool,
    done: bool,
}

struct Frame {
    pivot: usize,
    row: Vec<Elem>,
}

impl<'a> Grassmannian<'a> {
    pub fn new(field: &'a Field, n: usize, k: usize) -> Result<Self> {
        check_ambient(n)?;
        if k > n {
            return Err(Error::dimension(format!("k={k} exceeds n={n}")));
        }
        let count = gaussian_count(n as u32, k as u32, field.order() as u32);
        if count > ENUMERATION_LIMIT {
            return Err(Error::capacity(
                format!("enumeration of G_{}({n},{k})", field.order()),
                count,
                ENUMERATION_LIMIT,
            ));
        }
        Ok(Self::unguarded(field, n, k))
    }

    pub(crate) fn unguarded(field: &'a Field, n: usize, k: usize) -> Self {
        Grassmannian {
            field,
            n,
            k,
            stack: Vec::with_capacity(k),
            started: false,
            done: k > n,
        }
    }

    fn valid(&self, row: &[Elem], pivot: usize) -> bool {
        if self.stack.iter().any(|f| f.row[pivot] != 0) {
            return false;
        }
        let needed = self.k - self.stack.len() - 1;
        let free = (pivot + 1..self.n)
            .filter(|&c| row[c] == 0 && self.stack.iter().all(|f| f.row[c] == 0))
            .count();
        free >= needed
    }

    fn min_pivot(&self) -> usize {
        self.stack.last().map_or(0, |f| f.pivot + 1)
    }

    fn first(&self) -> Option<Frame> {
        if self.min_pivot() >= self.n {
            return None;
        }
        let mut frame = Frame {
            pivot: self.n - 1,
            row: unit_vector(self.n, self.n),
        };
        if self.valid(&frame.row, frame.pivot) || self.step(&mut frame) {
            Some(frame)
        } else {
            None
        }
    }

    /// Moves `frame` to the next valid row in increasing order.
    fn step(&self, frame: &mut Frame) -> bool {
        let q = self.field.order();
        loop {
            let mut carried = true;
            for c in (frame.pivot + 1..self.n).rev() {
                frame.row[c] += 1;
                if frame.row[c] < q {
                    carried = false;
                    break;
                }
                frame.row[c] = 0;
            }
            if carried {
                if frame.pivot == self.min_pivot() {
                    return false;
                }
                frame.pivot -= 1;
                frame.row = unit_vector(self.n, frame.pivot + 1);
            }
            if self.valid(&frame.row, frame.pivot) {
                return true;
            }
        }
    }

    fn fill(&mut self) -> bool {
        while self.stack.len() < self.k {
            match self.first() {
                Some(f) => self.stack.push(f),
                None => return false,
            }
        }
        true
    }

    fn emit(&self) -> Subspace {
        let rows = self.stack.iter().map(|f| f.row.clone()).collect();
        Subspace::from_canonical_unchecked(self.field.order(), self.n, rows)
    }
}

impl Iterator for Grassmannian<'_> {
    type Item = Subspace;

    fn next(&mut self) -> Option<Subspace> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            if self.k == 0 {
                self.done = true;
                return Some(Subspace::zero(self.field.order(), self.n));
            }
            if !self.fill() {
                self.done = true;
                return None;
            }
            return Some(self.emit());
        }
        if self.k == 0 {
            self.done = true;
            return None;
        }
        while let Some(mut frame) = self.stack.pop() {
            if self.step(&mut frame) {
                self.stack.push(frame);
                let ok = self.fill();
                debug_assert!(ok, "feasibility check guarantees completion");
                return Some(self.emit());
            }
        }
        self.done = true;
        None
    }
}

/// Streaming enumeration of G_q(n, k); see [`Grassmannian`].
pub fn enumerate_grassmannian(field: &Field, n: usize, k: usize) -> Result<Grassmannian<'_>> {
    Grassmannian::new(field, n, k)
}

/// Collected enumeration, guarded by [`MATERIALIZE_LIMIT`].
pub fn grassmannian(field: &Field, n: usize, k: usize) -> Result<Vec<Subspace>> {
    let count = gaussian_count(n as u32, k.min(n) as u32, field.order() as u32);
    if count > MATERIALIZE_LIMIT {
        return Err(Error::capacity(
            format!("materializing G_{}({n},{k})", field.order()),
            count,
            MATERIALIZE_LIMIT,
        ));
    }
    Ok(Grassmannian::new(field, n, k)?.collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn f(q: u32) -> &'static Field {
        Field::shared(q).unwrap()
    }

    #[test]
    fn span_examples() {
        let z = Subspace::span(f(2), 4, &[]).unwrap();
        assert_eq!(z.dim(), 0);
        assert_eq!(z.ambient_dim(), 4);

        let s = Subspace::span_str(f(2), &["0000110", "0000011"]).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.to_string(), "0000101 0000011");

        let d = Subspace::span_str(f(2), &["1100", "0110", "1010"]).unwrap();
        assert_eq!(d.dim(), 2);
    }

    #[test]
    fn span_rejects_bad_input() {
        assert!(Subspace::span(f(2), 3, &[vec![1, 0]]).is_err());
        assert!(Subspace::span(f(2), 2, &[vec![2, 0]]).is_err());
        assert!(Subspace::span(f(2), 17, &[]).is_err());
    }

    #[test]
    fn lattice_examples() {
        let s = Subspace::span_str(f(3), &["1200", "0011"]).unwrap();
        assert!(s.contains(&[0, 0, 0, 0]).unwrap());
        assert_eq!(s.intersect(&s).unwrap(), s);
        assert!(s.contains(&[2, 1, 1, 1]).unwrap());
        assert!(!s.contains(&[1, 0, 0, 0]).unwrap());
        let t = Subspace::span_str(f(3), &["1000", "0100"]).unwrap();
        assert_eq!(s.intersect(&t).unwrap(), Subspace::span_str(f(3), &["1200"]).unwrap());
        assert_eq!(s.sum(&t).unwrap().dim(), 3);
        let other = Subspace::zero(2, 4);
        assert!(s.sum(&other).is_err());
    }

    #[test]
    fn gaussian_values() {
        assert_eq!(gaussian_binomial(5, 0, 2), BigUint::one());
        assert_eq!(gaussian_binomial(4, 2, 2), BigUint::from(35u32));
        assert_eq!(gaussian_binomial(7, 2, 2), BigUint::from(2667u32));
        assert_eq!(gaussian_binomial(3, 2, 2), BigUint::from(7u32));
        assert_eq!(gaussian_binomial(4, 2, 3), BigUint::from(130u32));
        assert_eq!(gaussian_binomial(2, 3, 2), BigUint::zero());
    }

    #[test]
    fn gaussian_matches_enumeration_of_g2_4_2() {
        // count distinct spans of all vector pairs in F_2^4
        let all: Vec<Vec<Elem>> = (0..16u8)
            .map(|v| (0..4).map(|i| (v >> (3 - i)) & 1).collect())
            .collect();
        let mut seen = HashSet::new();
        for a in &all {
            for b in &all {
                let s = Subspace::span(f(2), 4, &[a.clone(), b.clone()]).unwrap();
                if s.dim() == 2 {
                    seen.insert(s);
                }
            }
        }
        assert_eq!(seen.len(), 35);
    }

    #[test]
    fn enumeration_counts_sorted_and_distinct() {
        for (q, nmax) in [(2u32, 7usize), (3, 5), (4, 4)] {
            for n in 0..=nmax {
                for k in 0..=n {
                    let subs: Vec<_> = enumerate_grassmannian(f(q), n, k).unwrap().collect();
                    assert_eq!(
                        subs.len() as u128,
                        gaussian_count(n as u32, k as u32, q),
                        "q={q} n={n} k={k}"
                    );
                    assert!(subs.windows(2).all(|w| w[0] < w[1]), "order q={q} n={n} k={k}");
                    for s in &subs {
                        assert_eq!(s.dim(), k);
                        assert_eq!(&Subspace::span(f(q), n, &s.basis()).unwrap(), s);
                    }
                }
            }
        }
    }

    #[test]
    fn enumeration_small_examples() {
        assert_eq!(enumerate_grassmannian(f(2), 3, 3).unwrap().count(), 1);
        assert_eq!(enumerate_grassmannian(f(2), 4, 2).unwrap().count(), 35);
        assert_eq!(enumerate_grassmannian(f(3), 4, 2).unwrap().count(), 130);
        assert!(enumerate_grassmannian(f(2), 3, 4).is_err());
        assert!(matches!(
            enumerate_grassmannian(f(9), 16, 8),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn duality_of_counts() {
        for q in [2, 3, 4, 5, 7, 8, 9] {
            for n in 0..=8 {
                for k in 0..=n {
                    assert_eq!(gaussian_binomial(n, k, q), gaussian_binomial(n, n - k, q));
                }
            }
        }
    }

    #[test]
    fn subspaces_of_a_subspace() {
        let s = Subspace::span_str(f(2), &["1010000", "0101000", "0000111"]).unwrap();
        let lines = s.subspaces(2);
        assert_eq!(lines.len(), 7);
        for l in &lines {
            assert!(s.contains_subspace(l).unwrap());
        }
        assert_eq!(s.subspaces(1).len(), 7);
        assert_eq!(s.subspaces(0).len(), 1);
    }

    #[test]
    fn key_round_trip() {
        let s = Subspace::span_str(f(3), &["1200", "0011"]).unwrap();
        assert_eq!(Subspace::parse_key(f(3), 4, &s.key()).unwrap(), s);
        assert_eq!(Subspace::parse_key(f(3), 4, "-").unwrap(), Subspace::zero(3, 4));
        assert!(Subspace::parse_key(f(3), 4, "0011,1200").is_err());
    }

    fn vec_strategy(q: u8, n: usize) -> impl Strategy<Value = Vec<Elem>> {
        proptest::collection::vec(0..q, n)
    }

    proptest! {
        #[test]
        fn canonical_under_shuffle_and_rescale(
            rows in proptest::collection::vec(vec_strategy(3, 6), 0..5),
            perm_seed in any::<u64>(),
            scales in proptest::collection::vec(1u8..3, 5),
        ) {
            let field = f(3);
            let s = Subspace::span(field, 6, &rows).unwrap();
            let mut shuffled: Vec<Vec<Elem>> = rows
                .iter()
                .zip(&scales)
                .map(|(r, &c)| r.iter().map(|&x| field.mul(x, c)).collect())
                .collect();
            let len = shuffled.len();
            if len > 1 {
                shuffled.rotate_left((perm_seed as usize) % len);
            }
            prop_assert_eq!(Subspace::span(field, 6, &shuffled).unwrap(), s);
        }

        #[test]
        fn modular_law(
            a in proptest::collection::vec(vec_strategy(2, 6), 0..5),
            b in proptest::collection::vec(vec_strategy(2, 6), 0..5),
        ) {
            let field = f(2);
            let s = Subspace::span(field, 6, &a).unwrap();
            let t = Subspace::span(field, 6, &b).unwrap();
            let sum = s.sum(&t).unwrap();
            let meet = s.intersect(&t).unwrap();
            prop_assert_eq!(sum.dim() + meet.dim(), s.dim() + t.dim());
            // vector-level oracle for the intersection
            let vs: HashSet<Vec<Elem>> = s.vectors().into_iter().collect();
            let common = t.vectors().into_iter().filter(|v| vs.contains(v)).count();
            prop_assert_eq!(common, 1usize << meet.dim());
        }
    }
}

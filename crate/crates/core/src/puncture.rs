//! Puncturing (coordinate deletion), extension (its inverse, always at the
//! last coordinate), and invertible column substitutions.
//!
//! A t-subspace of F_q^n extends to exactly q^t t-subspaces of F_q^{n+1}
//! (one per choice of new-coordinate values on the t canonical rows) and to
//! exactly one (t+1)-subspace (adjoin `e_{n+1}`). Iterating these steps
//! reaches every p-fold extension; a chain of steps is recovered from its end
//! by puncturing the trailing coordinates one at a time, so p-fold
//! extensions are reported as subspaces, never as chains.

use crate::error::{Error, Result};
use crate::gf::{Elem, Field};
use crate::subspace::{unit_vector, Subspace};

/// Distinct 1-based coordinates of an ambient space of dimension `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateSet {
    coords: Vec<usize>,
}

impl CoordinateSet {
    pub fn new(coords: &[usize], n: usize) -> Result<Self> {
        let mut sorted = coords.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::precondition(format!("repeated coordinate in {coords:?}")));
        }
        if let Some(&bad) = sorted.iter().find(|&&c| c == 0 || c > n) {
            return Err(Error::precondition(format!("coordinate {bad} outside 1..={n}")));
        }
        Ok(CoordinateSet {
            coords: coords.to_vec(),
        })
    }

    /// The last `p` coordinates of F_q^n.
    pub fn last(p: usize, n: usize) -> Result<Self> {
        if p > n {
            return Err(Error::precondition(format!("cannot take {p} coordinates of {n}")));
        }
        Ok(CoordinateSet {
            coords: (n - p + 1..=n).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.coords
    }
}

fn delete_columns(s: &Subspace, drop: &[bool]) -> Subspace {
    let n = s.ambient_dim();
    let m = n - drop.iter().filter(|&&d| d).count();
    let rows = s
        .rows()
        .map(|r| r.iter().zip(drop).filter(|(_, &d)| !d).map(|(&x, _)| x).collect())
        .collect();
    Subspace::from_rows(s.field(), m, rows)
}

/// Deletes coordinate `i` (1-based) from every vector of `s`.
pub fn puncture(s: &Subspace, i: usize) -> Result<Subspace> {
    let n = s.ambient_dim();
    if i == 0 || i > n {
        return Err(Error::precondition(format!("coordinate {i} outside 1..={n}")));
    }
    let mut drop = vec![false; n];
    drop[i - 1] = true;
    Ok(delete_columns(s, &drop))
}

/// Deletes every coordinate in `coords`; the result does not depend on order.
pub fn puncture_multi(s: &Subspace, coords: &CoordinateSet) -> Result<Subspace> {
    let n = s.ambient_dim();
    let mut drop = vec![false; n];
    for &c in coords.as_slice() {
        if c == 0 || c > n {
            return Err(Error::precondition(format!("coordinate {c} outside 1..={n}")));
        }
        drop[c - 1] = true;
    }
    Ok(delete_columns(s, &drop))
}

/// Deletes the last `p` coordinates.
pub fn puncture_last(s: &Subspace, p: usize) -> Subspace {
    let n = s.ambient_dim();
    assert!(p <= n);
    let drop: Vec<bool> = (0..n).map(|c| c >= n - p).collect();
    delete_columns(s, &drop)
}

/// All q^t same-dimension extensions of `s` to F_q^{n+1}, new coordinate last,
/// ordered by the odometer over the new column (last row fastest).
pub fn extensions_same_dim(s: &Subspace) -> Vec<Subspace> {
    let q = s.q();
    let n = s.ambient_dim();
    let t = s.dim();
    let total = (q as usize).pow(t as u32);
    let mut out = Vec::with_capacity(total);
    let mut col = vec![0 as Elem; t];
    for _ in 0..total {
        // the new column is not a pivot column, so [R | c] is still RREF
        let rows = s
            .rows()
            .zip(&col)
            .map(|(r, &c)| {
                let mut v = r.to_vec();
                v.push(c);
                v
            })
            .collect();
        out.push(Subspace::from_canonical_unchecked(q, n + 1, rows));
        for c in col.iter_mut().rev() {
            *c += 1;
            if *c < q {
                break;
            }
            *c = 0;
        }
    }
    out
}

/// The unique (t+1)-dimensional extension: `s` padded with a zero coordinate
/// plus the new unit vector `e_{n+1}`.
pub fn extension_up_dim(s: &Subspace) -> Subspace {
    let n = s.ambient_dim();
    let mut rows: Vec<Vec<Elem>> = s
        .rows()
        .map(|r| {
            let mut v = r.to_vec();
            v.push(0);
            v
        })
        .collect();
    rows.push(unit_vector(n + 1, n + 1));
    Subspace::from_canonical_unchecked(s.q(), n + 1, rows)
}

fn check_extension_dims(dim: usize, p: usize, target: usize) -> Result<()> {
    if dim > target || target - dim > p {
        return Err(Error::dimension(format!(
            "a {dim}-subspace has no {target}-dimensional {p}-fold extension"
        )));
    }
    Ok(())
}

/// Every `target`-subspace of F_q^{m+p} whose puncture on the last `p`
/// coordinates is `x`, sorted canonically.
pub fn enumerate_p_extensions(x: &Subspace, p: usize, target: usize) -> Result<Vec<Subspace>> {
    check_extension_dims(x.dim(), p, target)?;
    if x.ambient_dim() + p > crate::subspace::MAX_AMBIENT {
        return Err(Error::capacity(
            "extended ambient dimension",
            (x.ambient_dim() + p) as u128,
            crate::subspace::MAX_AMBIENT as u128,
        ));
    }
    let mut out = Vec::new();
    extend_rec(x, p, target, &mut out);
    out.sort_unstable();
    Ok(out)
}

fn extend_rec(x: &Subspace, p: usize, target: usize, out: &mut Vec<Subspace>) {
    if p == 0 {
        out.push(x.clone());
        return;
    }
    let ups = target - x.dim();
    if ups > 0 {
        extend_rec(&extension_up_dim(x), p - 1, target, out);
    }
    if ups < p {
        for e in extensions_same_dim(x) {
            extend_rec(&e, p - 1, target, out);
        }
    }
}

/// Number of `target`-dimensional p-fold extensions of a `dim`-subspace,
/// without materializing them.
pub fn count_p_extensions(q: u32, dim: usize, p: usize, target: usize) -> u128 {
    if dim > target || target - dim > p {
        return 0;
    }
    if p == 0 {
        return 1;
    }
    let mut total = 0u128;
    if target > dim {
        total += count_p_extensions(q, dim + 1, p - 1, target);
    }
    if target - dim < p {
        total += (q as u128).pow(dim as u32) * count_p_extensions(q, dim, p - 1, target);
    }
    total
}

/// Objects whose basis vectors can be pushed through a linear substitution
/// of F_q^n.
pub trait ColumnMapped: Sized {
    fn ambient(&self) -> (u8, usize);
    fn map_vectors(&self, map: &dyn Fn(&[Elem]) -> Vec<Elem>) -> Self;
}

impl ColumnMapped for Subspace {
    fn ambient(&self) -> (u8, usize) {
        (self.q(), self.ambient_dim())
    }

    fn map_vectors(&self, map: &dyn Fn(&[Elem]) -> Vec<Elem>) -> Self {
        let rows = self.rows().map(map).collect();
        Subspace::from_rows(self.field(), self.ambient_dim(), rows)
    }
}

/// Replaces column `j` by `sum_c coeffs[c] * column_c`, with `coeffs[j] != 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnTransform {
    q: u8,
    column: usize,
    coeffs: Vec<Elem>,
}

impl ColumnTransform {
    /// `column` is 1-based; `coeffs` has one entry per coordinate.
    pub fn new(field: &Field, column: usize, coeffs: Vec<Elem>) -> Result<Self> {
        let n = coeffs.len();
        if column == 0 || column > n {
            return Err(Error::precondition(format!("column {column} outside 1..={n}")));
        }
        for &c in &coeffs {
            field.check(c as u32)?;
        }
        if coeffs[column - 1] == 0 {
            return Err(Error::precondition(format!(
                "coefficient of column {column} in its own replacement must be nonzero"
            )));
        }
        Ok(ColumnTransform {
            q: field.order(),
            column,
            coeffs,
        })
    }

    /// `column_j <- column_j + factor * column_src`.
    pub fn add_multiple(field: &Field, n: usize, column: usize, src: usize, factor: Elem) -> Result<Self> {
        if src == column {
            return Err(Error::precondition("source column equals target column"));
        }
        let mut coeffs = vec![0; n];
        coeffs[column - 1] = 1;
        *coeffs
            .get_mut(src.wrapping_sub(1))
            .ok_or_else(|| Error::precondition(format!("column {src} outside 1..={n}")))? = factor;
        Self::new(field, column, coeffs)
    }

    pub fn identity(field: &Field, n: usize, column: usize) -> Result<Self> {
        Self::new(field, column, unit_vector(n, column))
    }

    pub fn column(&self) -> usize {
        self.column
    }

    pub fn coeffs(&self) -> &[Elem] {
        &self.coeffs
    }

    fn field(&self) -> &'static Field {
        Field::shared(self.q as u32).unwrap()
    }

    pub fn apply_vector(&self, v: &[Elem]) -> Vec<Elem> {
        let f = self.field();
        let mut w = v.to_vec();
        w[self.column - 1] = v
            .iter()
            .zip(&self.coeffs)
            .fold(0, |acc, (&x, &c)| f.add(acc, f.mul(x, c)));
        w
    }

    pub fn inverse(&self) -> ColumnTransform {
        let f = self.field();
        let j = self.column - 1;
        let inv = f.inv_nz(self.coeffs[j]);
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if i == j { inv } else { f.neg(f.mul(c, inv)) })
            .collect();
        ColumnTransform {
            q: self.q,
            column: self.column,
            coeffs,
        }
    }

    pub fn apply<T: ColumnMapped>(&self, target: &T) -> Result<T> {
        let (q, n) = target.ambient();
        if q != self.q || n != self.coeffs.len() {
            return Err(Error::AmbientMismatch {
                expected_q: self.q,
                expected_n: self.coeffs.len(),
                found_q: q,
                found_n: n,
            });
        }
        Ok(target.map_vectors(&|v| self.apply_vector(v)))
    }
}

/// Applies the column substitution described by `(j, coeffs)` to `target`.
pub fn column_transform<T: ColumnMapped>(target: &T, j: usize, coeffs: &[Elem]) -> Result<T> {
    let (q, _) = target.ambient();
    let field = Field::shared(q as u32)?;
    ColumnTransform::new(field, j, coeffs.to_vec())?.apply(target)
}

/// Exchanges coordinates `i` and `j` (1-based).
pub fn column_swap<T: ColumnMapped>(target: &T, i: usize, j: usize) -> Result<T> {
    let (_, n) = target.ambient();
    for c in [i, j] {
        if c == 0 || c > n {
            return Err(Error::precondition(format!("column {c} outside 1..={n}")));
        }
    }
    Ok(target.map_vectors(&|v| {
        let mut w = v.to_vec();
        w.swap(i - 1, j - 1);
        w
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::{grassmannian, Grassmannian};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn f(q: u32) -> &'static Field {
        Field::shared(q).unwrap()
    }

    fn z1(q: u8) -> Subspace {
        Subspace::coordinate_span(q, 7, &[5, 6, 7])
    }

    fn random_subspace(rng: &mut ChaCha8Rng, field: &Field, n: usize) -> Subspace {
        let k = rng.random_range(0..=n);
        let rows: Vec<Vec<Elem>> = (0..k)
            .map(|_| (0..n).map(|_| rng.random_range(0..field.order())).collect())
            .collect();
        Subspace::span(field, n, &rows).unwrap()
    }

    #[test]
    fn puncture_examples() {
        let p = puncture(&z1(2), 7).unwrap();
        assert_eq!((p.ambient_dim(), p.dim()), (6, 2));

        let whole = Subspace::full(2, 3);
        assert_eq!(puncture(&whole, 2).unwrap(), Subspace::full(2, 2));

        let s = Subspace::span_str(f(2), &["1010", "0101"]).unwrap();
        let p = puncture(&s, 4).unwrap();
        assert_eq!(p, Subspace::span_str(f(2), &["101", "010"]).unwrap());

        assert!(puncture(&s, 0).is_err());
        assert!(puncture(&s, 5).is_err());
    }

    #[test]
    fn dim_drops_iff_unit_vector_contained() {
        for s in grassmannian(f(3), 4, 2).unwrap() {
            for i in 1..=4 {
                let drops = s.contains(&unit_vector(4, i)).unwrap();
                let p = puncture(&s, i).unwrap();
                assert_eq!(p.dim() + usize::from(drops), s.dim());
            }
        }
    }

    #[test]
    fn puncture_multi_examples() {
        let coords = CoordinateSet::new(&[5, 6, 7], 7).unwrap();
        let p = puncture_multi(&z1(2), &coords).unwrap();
        assert_eq!((p.ambient_dim(), p.dim()), (4, 0));

        let p = puncture_multi(&z1(2), &CoordinateSet::new(&[7, 6], 7).unwrap()).unwrap();
        assert_eq!((p.ambient_dim(), p.dim()), (5, 1));

        assert!(CoordinateSet::new(&[1, 1], 4).is_err());
        assert!(CoordinateSet::new(&[0], 4).is_err());
        assert!(CoordinateSet::new(&[5], 4).is_err());
    }

    #[test]
    fn puncture_multi_is_order_independent_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let s = random_subspace(&mut rng, f(3), 6);
            let a = puncture_multi(&s, &CoordinateSet::new(&[2, 5, 6], 6).unwrap()).unwrap();
            let b = puncture(&puncture(&puncture(&s, 2).unwrap(), 4).unwrap(), 4).unwrap();
            assert_eq!(a, b);
            let k = s.dim();
            assert!(a.dim() >= k.saturating_sub(3) && a.dim() <= k.min(3));
        }
    }

    #[test]
    fn same_dim_extension_examples() {
        let zero = Subspace::zero(2, 3);
        assert_eq!(extensions_same_dim(&zero).len(), 1);

        let s = Subspace::span_str(f(2), &["1100", "0011"]).unwrap();
        let ext = extensions_same_dim(&s);
        assert_eq!(ext.len(), 4);
        assert_eq!(ext.iter().collect::<HashSet<_>>().len(), 4);

        let s = Subspace::span_str(f(3), &["1002", "0101", "0012"]).unwrap();
        let ext = extensions_same_dim(&s);
        assert_eq!(ext.len(), 27);
        for e in &ext {
            assert_eq!(e.dim(), 3);
            assert_eq!(&puncture(e, 5).unwrap(), &s);
        }
    }

    #[test]
    fn up_dim_extension_examples() {
        let zero = Subspace::zero(3, 4);
        assert_eq!(extension_up_dim(&zero), Subspace::coordinate_span(3, 5, &[5]));

        let s = Subspace::span_str(f(2), &["1100", "0011"]).unwrap();
        let up = extension_up_dim(&s);
        assert_eq!((up.ambient_dim(), up.dim()), (5, 3));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let s = random_subspace(&mut rng, f(4), 5);
            let up = extension_up_dim(&s);
            assert_eq!(puncture(&up, 6).unwrap(), s);
            assert_eq!(up.dim(), s.dim() + 1);
        }
    }

    #[test]
    fn up_dim_extension_is_unique_exhaustively() {
        for (q, nmax) in [(2u32, 4usize), (3, 3)] {
            for n in 0..=nmax {
                for k in 0..=n {
                    for s in grassmannian(f(q), n, k).unwrap() {
                        let hits: Vec<_> = Grassmannian::new(f(q), n + 1, k + 1)
                            .unwrap()
                            .filter(|y| puncture(y, n + 1).unwrap() == s)
                            .collect();
                        assert_eq!(hits, vec![extension_up_dim(&s)]);
                    }
                }
            }
        }
    }

    #[test]
    fn p_extension_examples() {
        let zero = Subspace::zero(2, 4);
        let ext = enumerate_p_extensions(&zero, 3, 2).unwrap();
        assert_eq!(ext.len(), 7);
        let tail = Subspace::coordinate_span(2, 7, &[5, 6, 7]);
        for e in &ext {
            assert!(tail.contains_subspace(e).unwrap());
        }

        let s = Subspace::span_str(f(3), &["1020", "0112"]).unwrap();
        let mut one = enumerate_p_extensions(&s, 1, 2).unwrap();
        let mut direct = extensions_same_dim(&s);
        one.sort();
        direct.sort();
        assert_eq!(one, direct);

        assert!(enumerate_p_extensions(&s, 1, 4).is_err());
        assert!(enumerate_p_extensions(&s, 3, 1).is_err());
    }

    #[test]
    fn p_extension_fibers_partition_the_grassmannian() {
        for (q, m, p, t) in [(2u32, 4usize, 3usize, 2usize), (2, 3, 2, 3), (3, 2, 2, 2)] {
            let mut seen = HashSet::new();
            let mut total = 0u128;
            for s in 0..=t.min(m) {
                for x in grassmannian(f(q), m, s).unwrap() {
                    let Ok(ext) = enumerate_p_extensions(&x, p, t) else {
                        continue;
                    };
                    assert_eq!(ext.len() as u128, count_p_extensions(q, s, p, t));
                    for e in ext {
                        assert_eq!(puncture_last(&e, p), x);
                        assert!(seen.insert(e));
                        total += 1;
                    }
                }
            }
            let all = grassmannian(f(q), m + p, t).unwrap();
            assert_eq!(total, all.len() as u128);
            assert!(all.iter().all(|y| seen.contains(y)));
        }
    }

    #[test]
    fn column_transform_basics() {
        let field = f(3);
        let s = Subspace::span_str(field, &["1020", "0112"]).unwrap();
        let id = column_transform(&s, 2, &[0, 1, 0, 0]).unwrap();
        assert_eq!(id, s);

        let t = ColumnTransform::new(field, 3, vec![1, 2, 2, 1]).unwrap();
        let moved = t.apply(&s).unwrap();
        assert_eq!(t.inverse().apply(&moved).unwrap(), s);

        assert!(ColumnTransform::new(field, 3, vec![1, 2, 0, 1]).is_err());
        assert!(column_transform(&s, 5, &[1, 0, 0, 0]).is_err());
    }

    #[test]
    fn column_transform_is_a_bijection_on_grassmannians() {
        let field = f(2);
        let t = ColumnTransform::new(field, 2, vec![1, 1, 0, 1, 1]).unwrap();
        for k in 0..=5 {
            let all = grassmannian(field, 5, k).unwrap();
            let image: HashSet<_> = all.iter().map(|s| t.apply(s).unwrap()).collect();
            assert_eq!(image.len(), all.len());
        }
    }

    #[test]
    fn column_swap_basics() {
        let s = Subspace::span_str(f(2), &["1100", "0011"]).unwrap();
        assert_eq!(column_swap(&s, 2, 2).unwrap(), s);
        let once = column_swap(&s, 1, 3).unwrap();
        assert_ne!(once, s);
        assert_eq!(column_swap(&once, 1, 3).unwrap(), s);
        assert!(column_swap(&s, 0, 1).is_err());
    }

    #[test]
    fn lemma_counts_on_random_subspaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for i in 0..300 {
            let q = [2, 3, 4][i % 3];
            let s = random_subspace(&mut rng, f(q), 5);
            let ext = extensions_same_dim(&s);
            assert_eq!(ext.len(), (q as usize).pow(s.dim() as u32));
            assert_eq!(ext.iter().collect::<HashSet<_>>().len(), ext.len());
            assert!(ext.iter().all(|e| puncture(e, 6).unwrap() == s));
        }
    }
}

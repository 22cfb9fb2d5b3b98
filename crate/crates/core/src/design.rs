//! Designs as multisets of subspaces: coverage verification, divisibility
//! conditions, derived designs, spreads, and parallelisms of PG(3, q).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::ControlFlow;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;

use crate::dlx::ExactCover;
use crate::error::{Error, Result};
use crate::gf::{first_irreducible, Elem, Field, PolyQuotient};
use crate::puncture::{self, ColumnMapped, ColumnTransform};
use crate::subspace::{gaussian_binomial, gaussian_count, grassmannian, Grassmannian, Subspace, MATERIALIZE_LIMIT};

/// Guard on the number of (block, t-subspace) incidences a coverage count may touch.
pub const COVERAGE_LIMIT: u128 = 100_000_000;

/// A multiset of subspaces of a common ambient space F_q^n, keyed by
/// canonical basis.
#[derive(Clone, PartialEq, Eq)]
pub struct DesignMultiset {
    q: u8,
    n: usize,
    blocks: BTreeMap<Subspace, u64>,
}

impl fmt::Debug for DesignMultiset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "DesignMultiset(F_{}^{}, {} blocks, {} distinct)",
            self.q,
            self.n,
            self.total_size(),
            self.blocks.len()
        )
    }
}

impl DesignMultiset {
    pub fn new(q: u8, n: usize) -> Result<Self> {
        Field::shared(q as u32)?;
        if n > crate::subspace::MAX_AMBIENT {
            return Err(Error::capacity(
                "ambient dimension",
                n as u128,
                crate::subspace::MAX_AMBIENT as u128,
            ));
        }
        Ok(DesignMultiset {
            q,
            n,
            blocks: BTreeMap::new(),
        })
    }

    /// Collects blocks, each with multiplicity one; duplicates merge.
    pub fn from_blocks<I: IntoIterator<Item = Subspace>>(q: u8, n: usize, blocks: I) -> Result<Self> {
        let mut d = Self::new(q, n)?;
        for b in blocks {
            d.insert(b, 1)?;
        }
        Ok(d)
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn field(&self) -> &'static Field {
        Field::shared(self.q as u32).unwrap()
    }

    pub fn insert(&mut self, block: Subspace, multiplicity: u64) -> Result<()> {
        if block.q() != self.q || block.ambient_dim() != self.n {
            return Err(Error::AmbientMismatch {
                expected_q: self.q,
                expected_n: self.n,
                found_q: block.q(),
                found_n: block.ambient_dim(),
            });
        }
        if multiplicity > 0 {
            *self.blocks.entry(block).or_insert(0) += multiplicity;
        }
        Ok(())
    }

    /// Removes one copy of `block`; returns false if absent.
    pub fn remove_one(&mut self, block: &Subspace) -> bool {
        match self.blocks.get_mut(block) {
            Some(m) if *m > 1 => {
                *m -= 1;
                true
            }
            Some(_) => {
                self.blocks.remove(block);
                true
            }
            None => false,
        }
    }

    pub fn multiplicity(&self, block: &Subspace) -> u64 {
        self.blocks.get(block).copied().unwrap_or(0)
    }

    pub fn contains(&self, block: &Subspace) -> bool {
        self.blocks.contains_key(block)
    }

    /// Distinct blocks with multiplicities, in canonical order.
    pub fn blocks(&self) -> impl Iterator<Item = (&Subspace, u64)> + '_ {
        self.blocks.iter().map(|(s, &m)| (s, m))
    }

    /// Every block repeated by its multiplicity.
    pub fn expanded(&self) -> impl Iterator<Item = &Subspace> + '_ {
        self.blocks
            .iter()
            .flat_map(|(s, &m)| std::iter::repeat_n(s, m as usize))
    }

    pub fn distinct_count(&self) -> usize {
        self.blocks.len()
    }

    /// Sum of multiplicities.
    pub fn total_size(&self) -> u64 {
        self.blocks.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Total multiplicity per block dimension.
    pub fn dimension_profile(&self) -> BTreeMap<usize, u64> {
        let mut out = BTreeMap::new();
        for (b, m) in self.blocks() {
            *out.entry(b.dim()).or_insert(0) += m;
        }
        out
    }

    /// Multiset union.
    pub fn union(&self, other: &DesignMultiset) -> Result<DesignMultiset> {
        let mut out = self.clone();
        for (b, m) in other.blocks() {
            out.insert(b.clone(), m)?;
        }
        Ok(out)
    }

    pub fn filter(&self, mut keep: impl FnMut(&Subspace) -> bool) -> DesignMultiset {
        DesignMultiset {
            q: self.q,
            n: self.n,
            blocks: self
                .blocks
                .iter()
                .filter(|(b, _)| keep(b))
                .map(|(b, &m)| (b.clone(), m))
                .collect(),
        }
    }

    /// Applies `map` to every block, merging any blocks that collide.
    pub fn map_blocks(&self, n: usize, mut map: impl FnMut(&Subspace) -> Subspace) -> DesignMultiset {
        let mut blocks = BTreeMap::new();
        for (b, &m) in &self.blocks {
            *blocks.entry(map(b)).or_insert(0) += m;
        }
        DesignMultiset { q: self.q, n, blocks }
    }
}

impl ColumnMapped for DesignMultiset {
    fn ambient(&self) -> (u8, usize) {
        (self.q, self.n)
    }

    fn map_vectors(&self, map: &dyn Fn(&[Elem]) -> Vec<Elem>) -> Self {
        self.map_blocks(self.n, |b| b.map_vectors(map))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyMode {
    /// Every t-subspace covered exactly once.
    Exact,
    /// Every t-subspace covered at most once.
    Packing,
}

impl std::str::FromStr for VerifyMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(VerifyMode::Exact),
            "packing" => Ok(VerifyMode::Packing),
            other => Err(Error::precondition(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ExactDesign,
    Packing,
    Violation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MultiCover {
    pub subspace: Subspace,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DimensionViolation {
    pub block: Subspace,
    pub dim: usize,
    pub multiplicity: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub t: usize,
    pub k: usize,
    pub mode: VerifyMode,
    pub verdict: Verdict,
    pub blocks: u64,
    pub covered: u128,
    pub total: u128,
    pub uncovered: Vec<Subspace>,
    pub multiply_covered: Vec<MultiCover>,
    pub dimension_violations: Vec<DimensionViolation>,
}

impl CoverageReport {
    /// Whether the verdict satisfies the requested mode.
    pub fn passes(&self) -> bool {
        match self.mode {
            VerifyMode::Exact => self.verdict == Verdict::ExactDesign,
            VerifyMode::Packing => self.verdict != Verdict::Violation,
        }
    }
}

/// Coverage count of every t-subspace lying in some block (absent = 0).
pub fn cover_count_map(d: &DesignMultiset, t: usize) -> Result<HashMap<Subspace, u64>> {
    let incidences: u128 = d
        .blocks()
        .map(|(b, _)| gaussian_count(b.dim() as u32, t as u32, d.q as u32))
        .sum();
    if incidences > COVERAGE_LIMIT {
        return Err(Error::capacity("coverage incidences", incidences, COVERAGE_LIMIT));
    }
    let blocks: Vec<(&Subspace, u64)> = d.blocks().collect();
    let map = blocks
        .par_iter()
        .fold(HashMap::new, |mut acc: HashMap<Subspace, u64>, (b, m)| {
            for s in b.subspaces(t) {
                *acc.entry(s).or_insert(0) += m;
            }
            acc
        })
        .reduce(HashMap::new, |mut a, b| {
            if a.len() < b.len() {
                return merge_counts(b, a);
            }
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });
    Ok(map)
}

fn merge_counts(mut a: HashMap<Subspace, u64>, b: HashMap<Subspace, u64>) -> HashMap<Subspace, u64> {
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

/// Checks `d` as an S_q(t, k, n) (exact mode) or as a packing.
pub fn verify_steiner(d: &DesignMultiset, t: usize, k: usize, mode: VerifyMode) -> Result<CoverageReport> {
    let n = d.ambient_dim();
    if t > k || k > n {
        return Err(Error::dimension(format!("need t <= k <= n, got t={t} k={k} n={n}")));
    }
    let q = d.q() as u32;
    let dimension_violations: Vec<DimensionViolation> = d
        .blocks()
        .filter(|(b, _)| b.dim() != k)
        .map(|(b, m)| DimensionViolation {
            block: b.clone(),
            dim: b.dim(),
            multiplicity: m,
        })
        .collect();
    let counts = cover_count_map(d, t)?;
    let mut multiply_covered: Vec<MultiCover> = counts
        .iter()
        .filter(|(_, &c)| c > 1)
        .map(|(s, &c)| MultiCover {
            subspace: s.clone(),
            count: c,
        })
        .collect();
    multiply_covered.sort_by(|a, b| a.subspace.cmp(&b.subspace));
    let total = gaussian_count(n as u32, t as u32, q);
    let covered = counts.len() as u128;
    let uncovered = if covered < total {
        if total > MATERIALIZE_LIMIT {
            return Err(Error::capacity(
                "listing uncovered t-subspaces",
                total,
                MATERIALIZE_LIMIT,
            ));
        }
        Grassmannian::new(d.field(), n, t)?
            .filter(|s| !counts.contains_key(s))
            .collect()
    } else {
        Vec::new()
    };
    let verdict = if !dimension_violations.is_empty() || !multiply_covered.is_empty() {
        Verdict::Violation
    } else if uncovered.is_empty() && d.blocks().all(|(_, m)| m == 1) && !d.is_empty() {
        Verdict::ExactDesign
    } else {
        Verdict::Packing
    };
    Ok(CoverageReport {
        t,
        k,
        mode,
        verdict,
        blocks: d.total_size(),
        covered,
        total,
        uncovered,
        multiply_covered,
        dimension_violations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Admissibility {
    pub admissible: bool,
    /// `[n-i, t-i]_q / [k-i, t-i]_q` for `i = 0..t`, as reduced fractions.
    #[serde(serialize_with = "ratios_as_strings")]
    pub ratios: Vec<BigRational>,
}

fn ratios_as_strings<S: serde::Serializer>(r: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(r.iter().map(|x| x.to_string()))
}

/// Divisibility conditions for S_q(t, k, n).
pub fn admissible(t: u32, k: u32, n: u32, q: u32) -> Result<Admissibility> {
    if t == 0 || t > k || k > n {
        return Err(Error::dimension(format!("need 0 < t <= k <= n, got t={t} k={k} n={n}")));
    }
    let ratios: Vec<BigRational> = (0..t)
        .map(|i| {
            let num = BigInt::from(gaussian_binomial(n - i, t - i, q));
            let den = BigInt::from(gaussian_binomial(k - i, t - i, q));
            BigRational::new(num, den)
        })
        .collect();
    Ok(Admissibility {
        admissible: ratios.iter().all(|r| r.is_integer()),
        ratios,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum ColumnMove {
    Swap(usize, usize),
    Combine(ColumnTransform),
}

impl ColumnMove {
    fn apply(&self, s: &Subspace) -> Subspace {
        match self {
            ColumnMove::Swap(i, j) => puncture::column_swap(s, *i, *j).unwrap(),
            ColumnMove::Combine(t) => t.apply(s).unwrap(),
        }
    }
}

/// Column operations sending the nonzero vector `v` to `e_n`.
fn moves_to_last_unit(field: &Field, v: &[Elem]) -> Vec<ColumnMove> {
    let n = v.len();
    let lead = v.iter().position(|&x| x != 0).expect("nonzero vector");
    let inv = field.inv_nz(v[lead]);
    let mut w: Vec<Elem> = v.iter().map(|&x| field.mul(x, inv)).collect();
    let mut moves = Vec::new();
    if lead != n - 1 {
        moves.push(ColumnMove::Swap(lead + 1, n));
        w.swap(lead, n - 1);
    }
    for (j, x) in w.iter_mut().enumerate().take(n - 1) {
        if *x != 0 {
            let t = ColumnTransform::add_multiple(field, n, j + 1, n, field.neg(*x)).unwrap();
            moves.push(ColumnMove::Combine(t));
            *x = 0;
        }
    }
    moves
}

/// The design derived at the point `point`: blocks through it, taken modulo
/// the point. The quotient is realised by an invertible column substitution
/// sending the point to `e_n` followed by deleting coordinate n.
///
/// The input is not required to verify; callers should verify the output.
pub fn derived_design(d: &DesignMultiset, t: usize, point: &Subspace) -> Result<DesignMultiset> {
    if t < 2 {
        return Err(Error::precondition(format!("derived designs need t >= 2, got t={t}")));
    }
    if point.dim() != 1 {
        return Err(Error::dimension(format!(
            "point must be a 1-subspace, got dimension {}",
            point.dim()
        )));
    }
    if point.q() != d.q() || point.ambient_dim() != d.ambient_dim() {
        return Err(Error::AmbientMismatch {
            expected_q: d.q(),
            expected_n: d.ambient_dim(),
            found_q: point.q(),
            found_n: point.ambient_dim(),
        });
    }
    let n = d.ambient_dim();
    let moves = moves_to_last_unit(d.field(), point.row(0));
    let through = d.filter(|b| b.contains_subspace(point).unwrap_or(false));
    Ok(through.map_blocks(n - 1, |b| {
        let moved = moves.iter().fold(b.clone(), |acc, m| m.apply(&acc));
        puncture::puncture(&moved, n).unwrap()
    }))
}

/// Vectors of (F_{q^k})^m whose first nonzero coordinate is one, each
/// coordinate as `k` coefficients over F_q (constant term first).
fn normalized_vectors(q: usize, k: usize, m: usize) -> Vec<Vec<Vec<Elem>>> {
    let elems: Vec<Vec<Elem>> = (0..q.pow(k as u32))
        .map(|mut v| {
            (0..k)
                .map(|_| {
                    let d = (v % q) as Elem;
                    v /= q;
                    d
                })
                .collect()
        })
        .collect();
    let one: Vec<Elem> = (0..k).map(|i| Elem::from(i == 0)).collect();
    let zero = vec![0; k];
    let mut out = Vec::new();
    for lead in 0..m {
        let tail = m - lead - 1;
        let count = elems.len().pow(tail as u32);
        for mut idx in 0..count {
            let mut v = vec![zero.clone(); lead];
            v.push(one.clone());
            let mut rest = vec![zero.clone(); tail];
            for slot in rest.iter_mut().rev() {
                *slot = elems[idx % elems.len()].clone();
                idx /= elems.len();
            }
            v.extend(rest);
            out.push(v);
        }
    }
    out
}

/// The Desarguesian spread S_q(1, k, n): the points of PG(n/k - 1, q^k) read
/// as k-subspaces of F_q^n through the basis `1, x, ..., x^{k-1}` of
/// F_{q^k} = F_q[x] / (first monic irreducible of degree k).
pub fn spread_field_reduction(q: u32, k: usize, n: usize) -> Result<DesignMultiset> {
    if k == 0 || !n.is_multiple_of(k) {
        return Err(Error::precondition(format!("k={k} must divide n={n}")));
    }
    let field = Field::shared(q)?;
    let m = n / k;
    let size = ((q as u128).pow(n as u32) - 1) / ((q as u128).pow(k as u32) - 1);
    if size > MATERIALIZE_LIMIT {
        return Err(Error::capacity("spread size", size, MATERIALIZE_LIMIT));
    }
    let ext = PolyQuotient::new(field, first_irreducible(field, k));
    let powers: Vec<Vec<Elem>> = (0..k).map(|j| (0..k).map(|i| Elem::from(i == j)).collect()).collect();
    let mut d = DesignMultiset::new(q as u8, n)?;
    for v in normalized_vectors(q as usize, k, m) {
        let rows: Vec<Vec<Elem>> = powers
            .iter()
            .map(|xj| v.iter().flat_map(|c| ext.mul(xj, c)).collect())
            .collect();
        d.insert(Subspace::from_rows(field, n, rows), 1)?;
    }
    debug_assert_eq!(d.total_size() as u128, size);
    Ok(d)
}

/// Node guard for the parallelism search.
const PARALLELISM_NODE_LIMIT: u64 = 50_000_000;

/// A generator of F_{q^2}^* / F_q^* (order q+1), first in label order.
fn projective_generator(ext: &PolyQuotient<'_>, q: usize) -> Vec<Elem> {
    let proj_order = |x: &[Elem]| {
        let mut acc = x.to_vec();
        let mut k = 1;
        while acc[1] != 0 {
            acc = ext.mul(&acc, x);
            k += 1;
        }
        k
    };
    (q..q * q)
        .map(|v| vec![(v % q) as Elem, (v / q) as Elem])
        .find(|x| proj_order(x) == q + 1)
        .expect("F_{q^2}^* / F_q^* is cyclic")
}

/// Lines of F_q^4 with their points, shared by both parallelism searches.
struct LineTable {
    q: u32,
    lines: Vec<Subspace>,
    line_points: Vec<Vec<usize>>,
    points: usize,
    first: DesignMultiset,
    in_first: Vec<bool>,
}

impl LineTable {
    fn new(q: u32) -> Result<Self> {
        let field = Field::shared(q)?;
        let lines = grassmannian(field, 4, 2)?;
        let points = grassmannian(field, 4, 1)?;
        let point_index: HashMap<&Subspace, usize> = points.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let line_points = lines
            .iter()
            .map(|l| l.subspaces(1).iter().map(|p| point_index[p]).collect())
            .collect();
        let first = spread_field_reduction(q, 2, 4)?;
        let in_first = lines.iter().map(|l| first.contains(l)).collect();
        Ok(LineTable {
            q,
            points: points.len(),
            lines,
            line_points,
            first,
            in_first,
        })
    }

    fn spread(&self, members: impl IntoIterator<Item = usize>) -> Result<DesignMultiset> {
        DesignMultiset::from_blocks(self.q as u8, 4, members.into_iter().map(|l| self.lines[l].clone()))
    }
}

fn solve_first(ec: &mut ExactCover, option_of: &[(usize, usize)], q: u32) -> Result<Option<Vec<(usize, usize)>>> {
    let mut chosen = None;
    let stats = ec.solve(Some(PARALLELISM_NODE_LIMIT), |sol| {
        chosen = Some(sol.iter().map(|&o| option_of[o]).collect());
        ControlFlow::Break(())
    });
    if chosen.is_none() && stats.stopped {
        return Err(Error::capacity(
            format!("parallelism search nodes for q={q}"),
            stats.nodes as u128,
            PARALLELISM_NODE_LIMIT as u128,
        ));
    }
    Ok(chosen)
}

/// Spreads 1.. invariant under multiplication by a generator `g` of
/// F_{q^2}^* / F_q^*, which fixes every line of spread 0 and moves the other
/// lines in orbits of size q+1. Colour classes `c < q` each pick one line per
/// orbit and cover every point once; class `c` yields `S_c, gS_c, ...,
/// g^q S_c`. The least line outside spread 0 is forced into class 0.
fn invariant_parallelism(t: &LineTable) -> Result<Option<Vec<DesignMultiset>>> {
    let field = Field::shared(t.q)?;
    let qs = t.q as usize;
    let ext = PolyQuotient::new(field, first_irreducible(field, 2));
    let g = projective_generator(&ext, qs);
    let line_index: HashMap<&Subspace, usize> = t.lines.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let image: Vec<usize> = t
        .lines
        .iter()
        .map(|l| {
            let rows: Vec<Vec<Elem>> = l
                .rows()
                .map(|v| [ext.mul(&g, &v[..2]), ext.mul(&g, &v[2..])].concat())
                .collect();
            line_index[&Subspace::from_rows(field, 4, rows)]
        })
        .collect();

    let mut orbit = vec![usize::MAX; t.lines.len()];
    let mut orbits = 0;
    for l in 0..t.lines.len() {
        if t.in_first[l] || orbit[l] != usize::MAX {
            continue;
        }
        let mut x = l;
        while orbit[x] == usize::MAX {
            orbit[x] = orbits;
            x = image[x];
        }
        orbits += 1;
    }

    let mut ec = ExactCover::new(orbits + t.points * qs, 0);
    let mut option_of = Vec::new();
    for (l, pts) in t.line_points.iter().enumerate() {
        if t.in_first[l] {
            continue;
        }
        for c in 0..qs {
            let mut items = vec![orbit[l]];
            items.extend(pts.iter().map(|&p| orbits + p * qs + c));
            ec.add_option(&items);
            option_of.push((l, c));
        }
    }
    ec.force(0);
    let Some(mut chosen) = solve_first(&mut ec, &option_of, t.q)? else {
        return Ok(None);
    };
    chosen.push(option_of[0]);

    let mut spreads = vec![t.first.clone()];
    for c in 0..qs {
        let mut current: Vec<usize> = chosen.iter().filter(|x| x.1 == c).map(|x| x.0).collect();
        for _ in 0..=qs {
            spreads.push(t.spread(current.iter().copied())?);
            current = current.iter().map(|&l| image[l]).collect();
        }
    }
    Ok(Some(spreads))
}

/// One exact cover over all spreads at once: an option puts a line into
/// spread `c`, items are the lines and the (point, spread) pairs. The
/// remaining lines through the first point are forced into spreads 1, 2, ...
fn coloured_parallelism(t: &LineTable) -> Result<Option<Vec<DesignMultiset>>> {
    let slots = (t.q * t.q + t.q + 1) as usize;
    let nl = t.lines.len();
    let mut forced: Vec<Option<usize>> = t.in_first.iter().map(|&f| f.then_some(0)).collect();
    let mut next = 1;
    for (l, pts) in t.line_points.iter().enumerate() {
        if pts.contains(&0) && forced[l].is_none() {
            forced[l] = Some(next);
            next += 1;
        }
    }
    let mut ec = ExactCover::new(nl + t.points * slots, 0);
    let mut option_of = Vec::new();
    let mut to_force = Vec::new();
    for (l, pts) in t.line_points.iter().enumerate() {
        for c in 0..slots {
            if forced[l].is_some_and(|f| f != c) {
                continue;
            }
            let mut items = vec![l];
            items.extend(pts.iter().map(|&p| nl + p * slots + c));
            let o = ec.add_option(&items);
            option_of.push((l, c));
            if forced[l] == Some(c) {
                to_force.push(o);
            }
        }
    }
    for o in to_force {
        if !ec.force(o) {
            return Ok(None);
        }
    }
    let Some(chosen) = solve_first(&mut ec, &option_of, t.q)? else {
        return Ok(None);
    };
    let mut colour = forced;
    for (l, c) in chosen {
        colour[l] = Some(c);
    }
    (0..slots)
        .map(|c| t.spread((0..nl).filter(|&l| colour[l] == Some(c))))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// A partition of the lines (2-subspaces) of F_q^4 into q^2+q+1 spreads.
///
/// Spread 0 is [`spread_field_reduction`]`(q, 2, 4)`. The rest come from the
/// first solution of an exact-cover search over lines in canonical order:
/// first restricted to families invariant under F_{q^2}^* (small, and the
/// only approach that finishes for q=4), then, if that has no solution, over
/// all spreads at once.
pub fn parallelism_pg3(q: u32) -> Result<Vec<DesignMultiset>> {
    if !matches!(q, 2..=4) {
        return Err(Error::capacity(format!("parallelism search for q={q}"), q as u128, 4));
    }
    let table = LineTable::new(q)?;
    if let Some(s) = invariant_parallelism(&table)? {
        return Ok(s);
    }
    coloured_parallelism(&table)?.ok_or_else(|| Error::SearchFailed(format!("no parallelism found for q={q}")))
}

/// True if `spreads` partition G_q(4, 2) into spreads of PG(3, q).
pub fn check_parallelism(q: u32, spreads: &[DesignMultiset]) -> Result<bool> {
    let field = Field::shared(q)?;
    let mut union = DesignMultiset::new(q as u8, 4)?;
    for s in spreads {
        if s.q() != q as u8 || s.ambient_dim() != 4 {
            return Ok(false);
        }
        if !verify_steiner(s, 1, 2, VerifyMode::Exact)?.passes() {
            return Ok(false);
        }
        union = union.union(s)?;
    }
    let all = grassmannian(field, 4, 2)?;
    Ok(union.total_size() == all.len() as u64 && all.iter().all(|l| union.multiplicity(l) == 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn f(q: u32) -> &'static Field {
        Field::shared(q).unwrap()
    }

    #[test]
    fn trivial_design_is_exact() {
        let d = DesignMultiset::from_blocks(2, 7, [Subspace::full(2, 7)]).unwrap();
        let r = verify_steiner(&d, 2, 7, VerifyMode::Exact).unwrap();
        assert_eq!(r.verdict, Verdict::ExactDesign);
        assert!(r.passes());
    }

    #[test]
    fn empty_design_is_a_packing_not_exact() {
        let d = DesignMultiset::new(2, 4).unwrap();
        let exact = verify_steiner(&d, 1, 2, VerifyMode::Exact).unwrap();
        assert_eq!(exact.verdict, Verdict::Packing);
        assert!(!exact.passes());
        assert_eq!(exact.uncovered.len(), 15);
        assert!(verify_steiner(&d, 1, 2, VerifyMode::Packing).unwrap().passes());
        assert!(cover_count_map(&d, 2).unwrap().is_empty());
    }

    #[test]
    fn violations_are_reported() {
        let a = Subspace::span_str(f(2), &["1000", "0100"]).unwrap();
        let b = Subspace::span_str(f(2), &["1000", "0010"]).unwrap();
        let c = Subspace::span_str(f(2), &["1000"]).unwrap();
        let mut d = DesignMultiset::from_blocks(2, 4, [a.clone(), b]).unwrap();
        d.insert(c, 1).unwrap();
        let r = verify_steiner(&d, 1, 2, VerifyMode::Packing).unwrap();
        assert_eq!(r.verdict, Verdict::Violation);
        assert_eq!(r.multiply_covered.len(), 1);
        assert_eq!(r.multiply_covered[0].count, 3);
        assert_eq!(r.dimension_violations.len(), 1);

        let mut twice = DesignMultiset::new(2, 4).unwrap();
        twice.insert(a, 2).unwrap();
        assert_eq!(
            verify_steiner(&twice, 1, 2, VerifyMode::Packing).unwrap().verdict,
            Verdict::Violation
        );
    }

    #[test]
    fn spread_sizes() {
        for (q, k, n, size) in [
            (2, 2, 4, 5u64),
            (2, 2, 6, 21),
            (3, 2, 4, 10),
            (2, 3, 6, 9),
            (4, 2, 4, 17),
            (2, 1, 3, 7),
        ] {
            let s = spread_field_reduction(q, k, n).unwrap();
            assert_eq!(s.total_size(), size);
            let r = verify_steiner(&s, 1, k, VerifyMode::Exact).unwrap();
            assert_eq!(r.verdict, Verdict::ExactDesign, "q={q} k={k} n={n}");
            let blocks: Vec<_> = s.blocks().map(|(b, _)| b.clone()).collect();
            for (i, a) in blocks.iter().enumerate() {
                for b in &blocks[i + 1..] {
                    assert_eq!(a.intersect(b).unwrap().dim(), 0);
                }
            }
        }
        assert!(spread_field_reduction(2, 2, 5).is_err());
        assert!(spread_field_reduction(6, 2, 4).is_err());
    }

    #[test]
    fn admissibility_examples() {
        let a = admissible(2, 3, 7, 2).unwrap();
        assert!(a.admissible);
        let vals: Vec<i64> = a.ratios.iter().map(|r| r.to_integer().to_i64().unwrap()).collect();
        assert_eq!(vals, vec![381, 21]);

        let b = admissible(2, 3, 8, 2).unwrap();
        assert!(!b.admissible);
        assert_eq!(b.ratios[0].to_string(), "10795/7");

        assert!(admissible(1, 2, 6, 2).unwrap().admissible);
        assert!(!admissible(1, 2, 5, 2).unwrap().admissible);
        assert!(admissible(0, 2, 5, 2).is_err());
    }

    #[test]
    fn derived_design_of_trivial_systems() {
        for q in [2u32, 3] {
            for n in 2..=5usize {
                for t in 2..=3usize.min(n) {
                    let d = DesignMultiset::from_blocks(q as u8, n, [Subspace::full(q as u8, n)]).unwrap();
                    for p in grassmannian(f(q), n, 1).unwrap() {
                        let dd = derived_design(&d, t, &p).unwrap();
                        assert_eq!(dd.ambient_dim(), n - 1);
                        let r = verify_steiner(&dd, t - 1, n - 1, VerifyMode::Exact).unwrap();
                        assert!(r.passes(), "q={q} n={n} t={t} p={p}");
                    }
                }
            }
        }
    }

    #[test]
    fn derived_design_preconditions() {
        let d = DesignMultiset::from_blocks(2, 4, [Subspace::full(2, 4)]).unwrap();
        let p = Subspace::span_str(f(2), &["0110"]).unwrap();
        assert!(derived_design(&d, 1, &p).is_err());
        let line = Subspace::span_str(f(2), &["0110", "0001"]).unwrap();
        assert!(derived_design(&d, 2, &line).is_err());
    }

    #[test]
    fn derived_design_of_corrupted_input_fails_verification() {
        // all 2-subspaces of F_2^4 is not an S_2(2,3,4); neither is its derivation an S_2(1,2,3)
        let d = DesignMultiset::from_blocks(2, 4, grassmannian(f(2), 4, 3).unwrap()).unwrap();
        assert!(!verify_steiner(&d, 2, 3, VerifyMode::Exact).unwrap().passes());
        let p = Subspace::span_str(f(2), &["1011"]).unwrap();
        let dd = derived_design(&d, 2, &p).unwrap();
        let r = verify_steiner(&dd, 1, 2, VerifyMode::Exact).unwrap();
        assert!(!r.passes());
        assert!(!r.multiply_covered.is_empty());
    }

    #[test]
    fn moves_send_point_to_last_unit() {
        let field = f(3);
        for p in grassmannian(field, 4, 1).unwrap() {
            let moves = moves_to_last_unit(field, p.row(0));
            let image = moves.iter().fold(p.clone(), |acc, m| m.apply(&acc));
            assert_eq!(image, Subspace::coordinate_span(3, 4, &[4]));
        }
    }

    #[test]
    fn cover_map_on_disjoint_blocks() {
        let z1 = Subspace::coordinate_span(2, 7, &[5, 6, 7]);
        let z2 = Subspace::coordinate_span(2, 7, &[1, 2, 3]);
        let d = DesignMultiset::from_blocks(2, 7, [z1, z2]).unwrap();
        let m = cover_count_map(&d, 2).unwrap();
        assert_eq!(m.len(), 14);
        assert!(m.values().all(|&c| c == 1));
        let spread = spread_field_reduction(2, 2, 6).unwrap();
        assert!(cover_count_map(&spread, 1).unwrap().values().all(|&c| c == 1));
    }

    #[test]
    fn parallelism_q2() {
        let spreads = parallelism_pg3(2).unwrap();
        assert_eq!(spreads.len(), 7);
        assert!(spreads.iter().all(|s| s.total_size() == 5));
        assert_eq!(spreads[0], spread_field_reduction(2, 2, 4).unwrap());
        assert!(check_parallelism(2, &spreads).unwrap());
        assert_eq!(parallelism_pg3(2).unwrap(), spreads);
    }

    #[test]
    fn parallelism_q3_q4() {
        for q in [3u32, 4] {
            let spreads = parallelism_pg3(q).unwrap();
            assert_eq!(spreads.len() as u32, q * q + q + 1);
            assert!(spreads.iter().all(|s| s.total_size() == (q * q + 1) as u64));
            assert_eq!(spreads[0], spread_field_reduction(q, 2, 4).unwrap());
            assert!(check_parallelism(q, &spreads).unwrap());
        }
    }

    #[test]
    fn projective_generator_has_order_q_plus_one() {
        for q in [2usize, 3, 4] {
            let field = f(q as u32);
            let ext = PolyQuotient::new(field, first_irreducible(field, 2));
            let g = projective_generator(&ext, q);
            let mut acc = g.clone();
            let mut k = 1;
            while acc[1] != 0 {
                acc = ext.mul(&acc, &g);
                k += 1;
            }
            assert_eq!(k, q + 1);
        }
    }

    #[test]
    fn parallelism_rejects_large_q() {
        assert!(matches!(parallelism_pg3(5), Err(Error::Capacity { .. })));
        assert!(matches!(parallelism_pg3(7), Err(Error::Capacity { .. })));
    }

    #[test]
    fn check_parallelism_rejects_broken_partition() {
        let mut spreads = parallelism_pg3(2).unwrap();
        spreads.swap_remove(3);
        assert!(!check_parallelism(2, &spreads).unwrap());
    }
}

//! Structure of a putative S_q(2,3,7): the forced blocks Z1, Z2, Z3, the
//! block classes A and B, counting formulas, and the column substitutions
//! that move a design into normal form.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::design::{verify_steiner, CoverageReport, DesignMultiset, VerifyMode};
use crate::error::{Error, Result};
use crate::gf::{Elem, Field};
use crate::puncture::{self, column_swap, puncture_last, ColumnTransform};
use crate::punctured::q_fano_size;
use crate::subspace::{grassmannian, unit_vector, Subspace};

/// Closed-form sizes of the block classes of an S_q(2,3,7).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StructureAudit {
    pub q: u32,
    #[serde(rename = "sizeA")]
    pub size_a: u128,
    #[serde(rename = "sizeB")]
    pub size_b: u128,
    #[serde(rename = "sizeAB")]
    pub size_ab: u128,
    #[serde(rename = "sizeAonly")]
    pub size_a_only: u128,
    pub residual: u128,
    pub total: u128,
}

impl StructureAudit {
    /// 2 |A \ B| + |A ∩ B| + 2 + residual = total.
    pub fn identity_holds(&self) -> bool {
        2 * self.size_a_only + self.size_ab + 2 + self.residual == self.total
            && self.size_a == self.size_a_only + self.size_ab
    }
}

pub fn audit_formulas(q: u32) -> StructureAudit {
    let q = q as u128;
    let q2 = q * q;
    let plane = q2 + q + 1;
    let size_a = q2 * (q2 + 1) * plane;
    let residual = q * (q.pow(7) + q2 + 2 * q + 2 - q.pow(5) - q.pow(4) - 2 * q.pow(3));
    StructureAudit {
        q: q as u32,
        size_a,
        size_b: size_a,
        size_ab: plane * plane,
        size_a_only: plane * (q.pow(4) - q - 1),
        residual,
        total: q_fano_size(q as u32),
    }
}

/// The forced blocks of F_q^7.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForcedBlocks {
    /// Zero on columns 1-4.
    pub z1: Subspace,
    /// Zero on columns 4-7.
    pub z2: Subspace,
    /// Zero on columns 1, 2, 5, 6.
    pub z3: Subspace,
}

impl ForcedBlocks {
    pub fn new(q: u8) -> Self {
        ForcedBlocks {
            z1: Subspace::coordinate_span(q, 7, &[5, 6, 7]),
            z2: Subspace::coordinate_span(q, 7, &[1, 2, 3]),
            z3: Subspace::coordinate_span(q, 7, &[3, 4, 7]),
        }
    }
}

fn check_f7(d: &DesignMultiset) -> Result<ForcedBlocks> {
    if d.ambient_dim() != 7 {
        return Err(Error::AmbientMismatch {
            expected_q: d.q(),
            expected_n: 7,
            found_q: d.q(),
            found_n: d.ambient_dim(),
        });
    }
    Ok(ForcedBlocks::new(d.q()))
}

/// Dimension of the part of `b` that is zero on columns 1-4.
fn leading_special_dim(b: &Subspace, z: &ForcedBlocks) -> usize {
    b.intersect(&z.z1).map_or(0, |s| s.dim())
}

/// Dimension of the part of `b` that is zero on columns 4-7.
fn trailing_special_dim(b: &Subspace, z: &ForcedBlocks) -> usize {
    b.intersect(&z.z2).map_or(0, |s| s.dim())
}

pub fn in_a(b: &Subspace, z: &ForcedBlocks) -> bool {
    b != &z.z1 && leading_special_dim(b, z) > 0
}

pub fn in_b(b: &Subspace, z: &ForcedBlocks) -> bool {
    b != &z.z2 && trailing_special_dim(b, z) > 0
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub z_blocks: DesignMultiset,
    pub a_only: DesignMultiset,
    pub b_only: DesignMultiset,
    pub ab: DesignMultiset,
    pub rest: DesignMultiset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ClassCounts {
    pub z: u64,
    pub a_only: u64,
    pub b_only: u64,
    pub ab: u64,
    pub rest: u64,
    pub total: u64,
}

impl Classification {
    pub fn counts(&self) -> ClassCounts {
        let c = ClassCounts {
            z: self.z_blocks.total_size(),
            a_only: self.a_only.total_size(),
            b_only: self.b_only.total_size(),
            ab: self.ab.total_size(),
            rest: self.rest.total_size(),
            total: 0,
        };
        ClassCounts {
            total: c.z + c.a_only + c.b_only + c.ab + c.rest,
            ..c
        }
    }
}

impl ClassCounts {
    /// Whether every class fits within the sizes it has in a full system.
    pub fn within(&self, audit: &StructureAudit) -> bool {
        let (a, b, ab) = (self.a_only as u128, self.b_only as u128, self.ab as u128);
        a + ab <= audit.size_a
            && b + ab <= audit.size_b
            && ab <= audit.size_ab
            && self.z <= 2
            && self.total as u128 <= audit.total
    }
}

/// Splits `d` into the Z blocks, A \ B, B \ A, A ∩ B, and the rest.
pub fn classify_blocks(d: &DesignMultiset) -> Result<Classification> {
    let z = check_f7(d)?;
    if let Some((b, _)) = d.blocks().find(|(b, _)| b.dim() != 3) {
        return Err(Error::dimension(format!(
            "block {} has dimension {}, not 3",
            b.key(),
            b.dim()
        )));
    }
    let empty = DesignMultiset::new(d.q(), 7)?;
    let mut c = Classification {
        z_blocks: empty.clone(),
        a_only: empty.clone(),
        b_only: empty.clone(),
        ab: empty.clone(),
        rest: empty,
    };
    for (b, m) in d.blocks() {
        let class = if b == &z.z1 || b == &z.z2 {
            &mut c.z_blocks
        } else {
            match (in_a(b, &z), in_b(b, &z)) {
                (true, true) => &mut c.ab,
                (true, false) => &mut c.a_only,
                (false, true) => &mut c.b_only,
                (false, false) => &mut c.rest,
            }
        };
        class.insert(b.clone(), m)?;
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Leading,
    Trailing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpecialViolation {
    pub block: Subspace,
    pub side: Side,
    /// Dimension of the block's intersection with Z1 (leading) or Z2 (trailing).
    pub dim: usize,
}

/// Blocks other than Z1 (resp. Z2) holding two independent vectors with four
/// leading (resp. trailing) zeroes.
pub fn no_double_special(d: &DesignMultiset) -> Result<Vec<SpecialViolation>> {
    let z = check_f7(d)?;
    let mut out = Vec::new();
    for (b, _) in d.blocks() {
        if let Some(v) = double_special(b, &z) {
            out.push(v);
        }
    }
    Ok(out)
}

pub(crate) fn double_special(b: &Subspace, z: &ForcedBlocks) -> Option<SpecialViolation> {
    let lead = leading_special_dim(b, z);
    if b != &z.z1 && lead >= 2 {
        return Some(SpecialViolation {
            block: b.clone(),
            side: Side::Leading,
            dim: lead,
        });
    }
    let trail = trailing_special_dim(b, z);
    if b != &z.z2 && trail >= 2 {
        return Some(SpecialViolation {
            block: b.clone(),
            side: Side::Trailing,
            dim: trail,
        });
    }
    None
}

/// The least block whose puncture on the last three coordinates is `target`.
fn witness(d: &DesignMultiset, target: &Subspace) -> Option<Subspace> {
    d.blocks()
        .map(|(b, _)| b)
        .find(|b| b.dim() == 3 && &puncture_last(b, 3) == target)
        .cloned()
}

fn require_z1(d: &DesignMultiset, z: &ForcedBlocks) -> Result<()> {
    if !d.contains(&z.z1) {
        return Err(Error::precondition("Z1 is not a block of the design"));
    }
    Ok(())
}

/// `column_j <- column_j - sum_i c_i column_i` as a column substitution.
fn subtract_columns(field: &Field, j: usize, terms: &[(usize, Elem)]) -> Result<ColumnTransform> {
    let mut coeffs = unit_vector(7, j);
    for &(i, c) in terms {
        coeffs[i - 1] = field.sub(coeffs[i - 1], c);
    }
    ColumnTransform::new(field, j, coeffs)
}

/// Moves `d` to a design containing Z1 and Z2 by clearing columns 5-7 of the
/// least block whose last-three puncture is span{e1, e2, e3}.
pub fn normalize_z1_z2(d: &DesignMultiset) -> Result<DesignMultiset> {
    let z = check_f7(d)?;
    require_z1(d, &z)?;
    let field = d.field();
    let target = Subspace::coordinate_span(d.q(), 4, &[1, 2, 3]);
    let x = witness(d, &target).ok_or_else(|| Error::precondition("no block punctures to span{e1, e2, e3}"))?;
    // x has rows [e_i | 0 | M_i], i = 1..3
    let mut out = d.clone();
    for j in 5..=7 {
        let terms: Vec<(usize, Elem)> = (1..=3).map(|i| (i, x.row(i - 1)[j - 1])).collect();
        out = subtract_columns(field, j, &terms)?.apply(&out)?;
    }
    debug_assert!(out.contains(&z.z1) && out.contains(&z.z2));
    Ok(out)
}

/// Moves `d` to a design containing Z1 and Z3, starting from the least block
/// whose last-three puncture is span{e3, e4}.
pub fn normalize_z1_z3(d: &DesignMultiset) -> Result<DesignMultiset> {
    let z = check_f7(d)?;
    require_z1(d, &z)?;
    let field = d.field();
    let target = Subspace::coordinate_span(d.q(), 4, &[3, 4]);
    let y = witness(d, &target).ok_or_else(|| Error::precondition("no block punctures to span{e3, e4}"))?;
    let mut out = d.clone();
    // the third row spans y ∩ Z1
    let mut y = y;
    let w = y.row(2).to_vec();
    if w[6] == 0 {
        let other = if w[4] != 0 { 5 } else { 6 };
        out = column_swap(&out, other, 7)?;
        y = column_swap(&y, other, 7)?;
    }
    let w = y.intersect(&z.z1)?.row(0).to_vec();
    let inv = field.inv_nz(w[6]);
    for j in [5, 6] {
        let t = subtract_columns(field, j, &[(7, field.mul(w[j - 1], inv))])?;
        out = t.apply(&out)?;
        y = t.apply(&y)?;
    }
    // y now contains e7 and two rows (0,0,1,0,a,b,*), (0,0,0,1,c,d,*)
    let (r3, r4) = (y.row(0).to_vec(), y.row(1).to_vec());
    for j in [5, 6] {
        let t = subtract_columns(field, j, &[(3, r3[j - 1]), (4, r4[j - 1])])?;
        out = t.apply(&out)?;
        y = t.apply(&y)?;
    }
    debug_assert_eq!(y, z.z3);
    debug_assert!(out.contains(&z.z1) && out.contains(&z.z3));
    Ok(out)
}

/// Blocks through `e_i`, taken modulo `e_i`, checked as a spread of F_q^6.
/// Exact mode applies when `d` has the full q-Fano block count.
pub fn spread_through_point_check(d: &DesignMultiset, i: usize) -> Result<CoverageReport> {
    check_f7(d)?;
    if i == 0 || i > 7 {
        return Err(Error::precondition(format!("coordinate {i} outside 1..=7")));
    }
    let point = Subspace::coordinate_span(d.q(), 7, &[i]);
    let through = d.filter(|b| b.contains_subspace(&point).unwrap_or(false));
    let derived = through.map_blocks(6, |b| puncture::puncture(b, i).expect("coordinate in range"));
    let mode = if d.total_size() as u128 == q_fano_size(d.q() as u32) {
        VerifyMode::Exact
    } else {
        VerifyMode::Packing
    };
    verify_steiner(&derived, 1, 2, mode)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrefixTally {
    /// A 1-subspace of Z1.
    pub point: Subspace,
    /// Blocks other than Z1 through `point`.
    pub blocks: u64,
    /// For each 1-subspace of F_q^4 (canonical order), how many punctured
    /// blocks contain it.
    pub tallies: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PrefixReport {
    pub q: u32,
    /// q^2: the value every tally takes in a full system.
    pub expected: u64,
    /// q^2 (q^2 + 1): blocks through each point of Z1 besides Z1 in a full system.
    pub expected_blocks: u64,
    pub points: Vec<PrefixTally>,
    /// True when every tally equals `expected`.
    pub complete: bool,
    /// Tallies above `expected`.
    pub over_bound: usize,
}

/// For every point L of Z1, punctures the other blocks through L on the last
/// three coordinates and counts, per 1-subspace of F_q^4, how many of the
/// resulting 2-subspaces contain it.
pub fn prefix_distribution_check(d: &DesignMultiset) -> Result<PrefixReport> {
    let z = check_f7(d)?;
    require_z1(d, &z)?;
    let q = d.q() as u64;
    let field = d.field();
    let directions = grassmannian(field, 4, 1)?;
    let index: BTreeMap<&Subspace, usize> = directions.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let expected = q * q;
    let mut points = Vec::new();
    for l in z.z1.subspaces(1) {
        let mut tallies = vec![0u64; directions.len()];
        let mut blocks = 0;
        for (b, m) in d.blocks() {
            if b == &z.z1 || !b.contains_subspace(&l)? {
                continue;
            }
            blocks += m;
            for dir in puncture_last(b, 3).subspaces(1) {
                tallies[index[&dir]] += m;
            }
        }
        points.push(PrefixTally {
            point: l,
            blocks,
            tallies,
        });
    }
    let all: Vec<u64> = points.iter().flat_map(|p| p.tallies.iter().copied()).collect();
    Ok(PrefixReport {
        q: q as u32,
        expected,
        expected_blocks: q * q * (q * q + 1),
        complete: all.iter().all(|&t| t == expected),
        over_bound: all.iter().filter(|&&t| t > expected).count(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::Verdict;

    fn f(q: u32) -> &'static Field {
        Field::shared(q).unwrap()
    }

    #[test]
    fn audit_values() {
        let a = audit_formulas(2);
        assert_eq!(
            (a.size_a, a.size_b, a.size_ab, a.size_a_only, a.residual, a.total),
            (140, 140, 49, 91, 148, 381)
        );
        let b = audit_formulas(3);
        assert_eq!(
            (b.size_a, b.size_ab, b.size_a_only, b.residual, b.total),
            (1170, 169, 1001, 5478, 7651)
        );
        for q in 2..=9 {
            assert!(audit_formulas(q).identity_holds(), "q={q}");
        }
        let json = serde_json::to_value(a).unwrap();
        assert_eq!(json["sizeA"], 140);
        assert_eq!(json["sizeAonly"], 91);
    }

    #[test]
    fn forced_blocks_have_their_zero_columns() {
        for q in [2u8, 3, 4] {
            let z = ForcedBlocks::new(q);
            for (b, zero) in [(&z.z1, [1, 2, 3, 4]), (&z.z2, [4, 5, 6, 7]), (&z.z3, [1, 2, 5, 6])] {
                assert_eq!(b.dim(), 3);
                for c in 1..=7 {
                    let all_zero = b.column(c).iter().all(|&x| x == 0);
                    assert_eq!(all_zero, zero.contains(&c), "{b} column {c}");
                }
            }
        }
    }

    #[test]
    fn classification_examples() {
        let z = ForcedBlocks::new(2);
        let d = DesignMultiset::from_blocks(2, 7, [z.z1.clone(), z.z2.clone()]).unwrap();
        let c = classify_blocks(&d).unwrap().counts();
        assert_eq!((c.z, c.a_only, c.b_only, c.ab, c.rest), (2, 0, 0, 0, 0));

        let a = Subspace::span_str(f(2), &["0000101", "1001000", "0100010"]).unwrap();
        assert!(in_a(&a, &z));
        let ab = Subspace::span_str(f(2), &["0000101", "1000000", "0101010"]).unwrap();
        let rest = Subspace::span_str(f(2), &["1000100", "0100010", "0010001"]).unwrap();
        let d = DesignMultiset::from_blocks(2, 7, [a, ab, rest, z.z3.clone()]).unwrap();
        let cl = classify_blocks(&d).unwrap();
        let c = cl.counts();
        assert_eq!(c.total, 4);
        assert_eq!(c.ab, 2, "Z3 meets both Z1 and Z2");
        assert_eq!((c.a_only, c.rest), (1, 1));
        assert!(c.within(&audit_formulas(2)));

        let bad = DesignMultiset::from_blocks(2, 6, [Subspace::full(2, 6)]).unwrap();
        assert!(classify_blocks(&bad).is_err());
    }

    #[test]
    fn double_special_examples() {
        let z = ForcedBlocks::new(2);
        let d = DesignMultiset::from_blocks(2, 7, [z.z1.clone(), z.z2.clone()]).unwrap();
        assert!(no_double_special(&d).unwrap().is_empty());
        let b = Subspace::span_str(f(2), &["0000110", "0000011", "1000000"]).unwrap();
        let v = no_double_special(&DesignMultiset::from_blocks(2, 7, [b]).unwrap()).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].side, Side::Leading);
        let t = Subspace::span_str(f(2), &["1100000", "0010000", "0000001"]).unwrap();
        let v = no_double_special(&DesignMultiset::from_blocks(2, 7, [t]).unwrap()).unwrap();
        assert_eq!(v[0].side, Side::Trailing);
    }

    #[test]
    fn normalize_z2_examples() {
        let z = ForcedBlocks::new(2);
        let x = Subspace::span_str(f(2), &["1000100", "0100010", "0010001"]).unwrap();
        let d = DesignMultiset::from_blocks(2, 7, [z.z1.clone(), x]).unwrap();
        let out = normalize_z1_z2(&d).unwrap();
        assert_eq!(
            out,
            DesignMultiset::from_blocks(2, 7, [z.z1.clone(), z.z2.clone()]).unwrap()
        );
        assert_eq!(normalize_z1_z2(&out).unwrap(), out);

        let no_z1 = DesignMultiset::from_blocks(2, 7, [z.z2.clone()]).unwrap();
        assert!(normalize_z1_z2(&no_z1).is_err());
        let no_witness = DesignMultiset::from_blocks(2, 7, [z.z1.clone()]).unwrap();
        assert!(normalize_z1_z2(&no_witness).is_err());
    }

    #[test]
    fn normalize_z3_examples() {
        for q in [2u32, 3] {
            let z = ForcedBlocks::new(q as u8);
            let fixed = DesignMultiset::from_blocks(q as u8, 7, [z.z1.clone(), z.z3.clone()]).unwrap();
            assert_eq!(normalize_z1_z3(&fixed).unwrap(), fixed);
            // kernel vector without a 7th coordinate forces a swap
            let y = Subspace::span_str(f(q), &["0010110", "0001011", "0000110"]).unwrap();
            let d = DesignMultiset::from_blocks(q as u8, 7, [z.z1.clone(), y]).unwrap();
            let out = normalize_z1_z3(&d).unwrap();
            assert!(out.contains(&z.z1) && out.contains(&z.z3));
            assert_eq!(out.total_size(), 2);
        }
    }

    #[test]
    fn spread_through_point_examples() {
        let z = ForcedBlocks::new(2);
        let d = DesignMultiset::from_blocks(2, 7, [z.z1.clone()]).unwrap();
        let r = spread_through_point_check(&d, 7).unwrap();
        assert_eq!(r.verdict, Verdict::Packing);
        assert_eq!(r.blocks, 1);
        let a = Subspace::span_str(f(2), &["1000000", "0100000", "0000001"]).unwrap();
        let b = Subspace::span_str(f(2), &["1000000", "0010000", "0000001"]).unwrap();
        let d = DesignMultiset::from_blocks(2, 7, [a, b]).unwrap();
        let r = spread_through_point_check(&d, 7).unwrap();
        assert_eq!(r.verdict, Verdict::Violation);
    }

    #[test]
    fn prefix_tallies_of_z1_alone_are_zero() {
        let z = ForcedBlocks::new(2);
        let d = DesignMultiset::from_blocks(2, 7, [z.z1.clone()]).unwrap();
        let r = prefix_distribution_check(&d).unwrap();
        assert_eq!(r.points.len(), 7);
        assert_eq!(r.expected, 4);
        assert_eq!(r.expected_blocks, 20);
        assert!(r.points.iter().all(|p| p.tallies.iter().all(|&t| t == 0)));
        assert!(!r.complete);
        let wrong = DesignMultiset::new(2, 5).unwrap();
        assert!(prefix_distribution_check(&wrong).is_err());
    }
}

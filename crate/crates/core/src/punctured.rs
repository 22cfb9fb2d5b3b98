//! p-punctured q-Steiner systems S_q(t, t+1, n; m): the coverage equation
//! system over F_q^m, uniform solutions, and the S_q(2,3,7;5) construction
//! from a parallelism of PG(3, q).

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::design::{check_parallelism, DesignMultiset};
use crate::error::{Error, Result};
use crate::gf::Field;
use crate::puncture::{
    count_p_extensions, enumerate_p_extensions, extension_up_dim, extensions_same_dim, puncture_last,
};
use crate::subspace::{gaussian_binomial, gaussian_count, Grassmannian, Subspace, ENUMERATION_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PuncturedParams {
    pub q: u32,
    pub t: usize,
    pub k: usize,
    pub n: usize,
    pub p: usize,
    pub m: usize,
}

impl PuncturedParams {
    pub fn new(q: u32, t: usize, n: usize, p: usize) -> Result<Self> {
        Field::shared(q)?;
        let k = t + 1;
        if k > n {
            return Err(Error::dimension(format!("need t+1 <= n, got t={t} n={n}")));
        }
        if p == 0 || p >= n {
            return Err(Error::dimension(format!("need 1 <= p <= n-1, got p={p} n={n}")));
        }
        if n > crate::subspace::MAX_AMBIENT {
            return Err(Error::capacity(
                "ambient dimension",
                n as u128,
                crate::subspace::MAX_AMBIENT as u128,
            ));
        }
        Ok(PuncturedParams {
            q,
            t,
            k,
            n,
            p,
            m: n - p,
        })
    }

    pub fn field(&self) -> &'static Field {
        Field::shared(self.q).unwrap()
    }

    /// Dimensions of the subspaces X of F_q^m that index equations.
    pub fn equation_dims(&self) -> std::ops::RangeInclusive<usize> {
        self.t.saturating_sub(self.p)..=self.t.min(self.m)
    }

    /// Dimensions of the variables Y that may appear in the equation of an s-subspace.
    pub fn variable_dims(&self, s: usize) -> std::ops::RangeInclusive<usize> {
        s.max(self.k.saturating_sub(self.p))..=(s + 1).min(self.m)
    }

    /// Union of [`Self::variable_dims`] over all equation dimensions.
    pub fn all_variable_dims(&self) -> BTreeSet<usize> {
        self.equation_dims().flat_map(|s| self.variable_dims(s)).collect()
    }

    fn check_ambient(&self, s: &Subspace) -> Result<()> {
        if s.q() as u32 != self.q || s.ambient_dim() != self.m {
            return Err(Error::AmbientMismatch {
                expected_q: self.q as u8,
                expected_n: self.m,
                found_q: s.q(),
                found_n: s.ambient_dim(),
            });
        }
        Ok(())
    }
}

/// t-subspaces of `k_space` whose puncture on the last `p` coordinates is `x`.
fn covered_by(x: &Subspace, k_space: &Subspace, t: usize, p: usize) -> u64 {
    k_space
        .subspaces(t)
        .iter()
        .filter(|s| &puncture_last(s, p) == x)
        .count() as u64
}

/// Number of t-subspaces of a k-dimensional p-fold extension K of `y` whose
/// p-fold puncture is `x`, evaluated on the canonically least such K.
pub fn coefficient(x: &Subspace, y: &Subspace, params: &PuncturedParams) -> Result<u64> {
    params.check_ambient(x)?;
    params.check_ambient(y)?;
    if !y.contains_subspace(x)? {
        return Err(Error::precondition(format!(
            "{} is not contained in {}",
            x.key(),
            y.key()
        )));
    }
    let ks = enumerate_p_extensions(y, params.p, params.k)?;
    let k_space = ks
        .first()
        .ok_or_else(|| Error::dimension(format!("{} has no {}-dimensional extension", y.key(), params.k)))?;
    Ok(covered_by(x, k_space, params.t, params.p))
}

/// True if the coefficient is the same for every k-dimensional p-fold extension of `y`.
pub fn coefficient_well_defined(x: &Subspace, y: &Subspace, params: &PuncturedParams) -> Result<bool> {
    let expected = coefficient(x, y, params)?;
    Ok(enumerate_p_extensions(y, params.p, params.k)?
        .iter()
        .all(|k| covered_by(x, k, params.t, params.p) == expected))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Equation {
    pub x: Subspace,
    pub rhs: u128,
    /// (variable index, coefficient), by variable index.
    pub terms: Vec<(usize, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquationSystem {
    pub params: PuncturedParams,
    /// Variables sorted canonically (by dimension, then basis).
    pub variables: Vec<Subspace>,
    /// Equations sorted canonically by their subspace X.
    pub equations: Vec<Equation>,
}

impl EquationSystem {
    pub fn variable_index(&self, y: &Subspace) -> Option<usize> {
        self.variables.binary_search(y).ok()
    }

    pub fn equation_for(&self, x: &Subspace) -> Option<&Equation> {
        self.equations
            .binary_search_by(|e| e.x.cmp(x))
            .ok()
            .map(|i| &self.equations[i])
    }
}

fn guarded_grassmannian(field: &'static Field, m: usize, r: usize) -> Result<Vec<Subspace>> {
    let count = gaussian_count(m as u32, r as u32, field.order() as u32);
    if count > ENUMERATION_LIMIT / 64 {
        return Err(Error::capacity(
            format!("G_q({m},{r}) for an equation system"),
            count,
            ENUMERATION_LIMIT / 64,
        ));
    }
    Ok(Grassmannian::new(field, m, r)?.collect())
}

pub fn build_equation_system(params: &PuncturedParams) -> Result<EquationSystem> {
    let field = params.field();
    let mut variables = Vec::new();
    for r in params.all_variable_dims() {
        variables.extend(guarded_grassmannian(field, params.m, r)?);
    }
    let mut equations = Vec::new();
    for s in params.equation_dims() {
        for x in guarded_grassmannian(field, params.m, s)? {
            equations.push(Equation {
                x,
                rhs: count_p_extensions(params.q, s, params.p, params.t),
                terms: Vec::new(),
            });
        }
    }
    let eq_index: HashMap<&Subspace, usize> = equations.iter().enumerate().map(|(i, e)| (&e.x, i)).collect();

    // each variable contributes to the equations of its own subspaces
    let contributions: Vec<(usize, usize, u64)> = variables
        .par_iter()
        .enumerate()
        .map(|(vi, y)| -> Result<Vec<(usize, usize, u64)>> {
            let r = y.dim();
            let mut out = Vec::new();
            for s in [r.wrapping_sub(1), r] {
                if s > r || !params.equation_dims().contains(&s) || !params.variable_dims(s).contains(&r) {
                    continue;
                }
                let k_space = enumerate_p_extensions(y, params.p, params.k)?
                    .into_iter()
                    .next()
                    .expect("variable dimensions admit an extension");
                for x in y.subspaces(s) {
                    out.push((eq_index[&x], vi, covered_by(&x, &k_space, params.t, params.p)));
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    for (ei, vi, c) in contributions {
        equations[ei].terms.push((vi, c));
    }
    for e in &mut equations {
        e.terms.sort_unstable();
    }
    Ok(EquationSystem {
        params: *params,
        variables,
        equations,
    })
}

/// Multiplicity X_{r,m} for every r-subspace of F_q^m, indexed by r.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UniformSolution {
    pub m: usize,
    pub values: Vec<u64>,
}

impl UniformSolution {
    pub fn new(m: usize, values: Vec<u64>) -> Self {
        UniformSolution { m, values }
    }

    /// (1, 0, q^2, q^4 (q-1)) over F_q^4: the uniform 3-punctured q-Fano plane.
    pub fn q_fano_p3(q: u64) -> Self {
        UniformSolution::new(4, vec![1, 0, q * q, q.pow(4) * (q - 1)])
    }

    pub fn value(&self, r: usize) -> u64 {
        self.values.get(r).copied().unwrap_or(0)
    }

    /// The uniform assignment written out as a multiset over F_q^m.
    pub fn materialize(&self, q: u32) -> Result<DesignMultiset> {
        let field = Field::shared(q)?;
        let mut d = DesignMultiset::new(q as u8, self.m)?;
        for (r, &v) in self.values.iter().enumerate() {
            if v > 0 && r <= self.m {
                for s in guarded_grassmannian(field, self.m, r)? {
                    d.insert(s, v)?;
                }
            }
        }
        Ok(d)
    }
}

/// Σ_r X_{r,m} · [m r]_q: the number of blocks of the unpunctured system.
pub fn uniform_total(params: &PuncturedParams, u: &UniformSolution) -> u128 {
    u.values
        .iter()
        .enumerate()
        .filter(|&(r, _)| r <= params.m)
        .map(|(r, &v)| v as u128 * gaussian_count(params.m as u32, r as u32, params.q))
        .sum()
}

pub enum Assignment<'a> {
    Design(&'a DesignMultiset),
    Uniform(&'a UniformSolution),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EquationViolation {
    pub x: Subspace,
    pub lhs: u128,
    pub rhs: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolutionReport {
    pub consistent: bool,
    pub equations: usize,
    pub satisfied: usize,
    pub violations: Vec<EquationViolation>,
    /// Blocks whose dimension is not a variable of the system.
    pub stray_blocks: Vec<Subspace>,
}

/// Evaluates every equation on `assignment`.
pub fn check_solution(system: &EquationSystem, assignment: Assignment<'_>) -> Result<SolutionReport> {
    let params = &system.params;
    let var_dims = params.all_variable_dims();
    let (values, stray_blocks): (Vec<u64>, Vec<Subspace>) = match assignment {
        Assignment::Design(d) => {
            if d.q() as u32 != params.q || d.ambient_dim() != params.m {
                return Err(Error::AmbientMismatch {
                    expected_q: params.q as u8,
                    expected_n: params.m,
                    found_q: d.q(),
                    found_n: d.ambient_dim(),
                });
            }
            let values = system.variables.iter().map(|y| d.multiplicity(y)).collect();
            let stray = d
                .blocks()
                .filter(|(b, _)| !var_dims.contains(&b.dim()))
                .map(|(b, _)| b.clone())
                .collect();
            (values, stray)
        }
        Assignment::Uniform(u) => {
            if u.m != params.m {
                return Err(Error::dimension(format!(
                    "uniform solution over F_q^{} for a system over F_q^{}",
                    u.m, params.m
                )));
            }
            let values = system.variables.iter().map(|y| u.value(y.dim())).collect();
            let stray = Vec::new();
            let extra = u
                .values
                .iter()
                .enumerate()
                .any(|(r, &v)| v > 0 && !var_dims.contains(&r));
            if extra {
                return Err(Error::precondition(
                    "uniform solution assigns dimensions outside the variable set",
                ));
            }
            (values, stray)
        }
    };
    let mut violations: Vec<EquationViolation> = system
        .equations
        .par_iter()
        .filter_map(|e| {
            let lhs: u128 = e.terms.iter().map(|&(v, c)| c as u128 * values[v] as u128).sum();
            (lhs != e.rhs).then(|| EquationViolation {
                x: e.x.clone(),
                lhs,
                rhs: e.rhs,
            })
        })
        .collect();
    violations.sort_by(|a, b| a.x.cmp(&b.x));
    Ok(SolutionReport {
        consistent: violations.is_empty() && stray_blocks.is_empty(),
        equations: system.equations.len(),
        satisfied: system.equations.len() - violations.len(),
        violations,
        stray_blocks,
    })
}

/// Builds the system for `params` and checks `d` against it.
pub fn verify_punctured(d: &DesignMultiset, params: &PuncturedParams) -> Result<SolutionReport> {
    let system = build_equation_system(params)?;
    check_solution(&system, Assignment::Design(d))
}

/// Machine-readable listing: a `QSE1` header, then one
/// `E <X-key> <rhs> <Y-key>:<coef> ...` row per equation.
pub fn export_rows(system: &EquationSystem) -> String {
    let p = &system.params;
    let mut out = format!("QSE1 q={} n={} p={} t={}\n", p.q, p.n, p.p, p.t);
    for e in &system.equations {
        write!(out, "E {} {}", e.x.key(), e.rhs).unwrap();
        for &(v, c) in &e.terms {
            write!(out, " {}:{}", system.variables[v].key(), c).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Reads the output of [`export_rows`].
pub fn parse_rows(text: &str) -> Result<EquationSystem> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| Error::parse(1, "missing QSE1 header"))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("QSE1") {
        return Err(Error::parse(hl, "expected QSE1 header"));
    }
    let mut fields = HashMap::new();
    for f in parts {
        let (k, v) = f
            .split_once('=')
            .ok_or_else(|| Error::parse(hl, format!("malformed header field {f:?}")))?;
        let v: usize = v
            .parse()
            .map_err(|_| Error::parse(hl, format!("malformed number in {f:?}")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| Error::parse(hl, format!("header lacks {k}")))
    };
    let params = PuncturedParams::new(get("q")? as u32, get("t")?, get("n")?, get("p")?)
        .map_err(|e| Error::parse(hl, e.to_string()))?;
    let field = params.field();

    let mut raw = Vec::new();
    let mut vars = BTreeSet::new();
    for (ln, line) in lines {
        let mut parts = line.split_whitespace();
        if parts.next() != Some("E") {
            return Err(Error::parse(ln, "expected an equation row"));
        }
        let x = parts
            .next()
            .ok_or_else(|| Error::parse(ln, "missing equation subspace"))
            .and_then(|k| Subspace::parse_key(field, params.m, k).map_err(|e| Error::parse(ln, e.to_string())))?;
        let rhs: u128 = parts
            .next()
            .and_then(|r| r.parse().ok())
            .ok_or_else(|| Error::parse(ln, "missing or malformed right-hand side"))?;
        let mut terms = Vec::new();
        for t in parts {
            let (k, c) = t
                .rsplit_once(':')
                .ok_or_else(|| Error::parse(ln, format!("malformed term {t:?}")))?;
            let y = Subspace::parse_key(field, params.m, k).map_err(|e| Error::parse(ln, e.to_string()))?;
            let c: u64 = c
                .parse()
                .map_err(|_| Error::parse(ln, format!("malformed coefficient in {t:?}")))?;
            vars.insert(y.clone());
            terms.push((y, c));
        }
        raw.push((x, rhs, terms));
    }
    let variables: Vec<Subspace> = vars.into_iter().collect();
    let mut equations: Vec<Equation> = raw
        .into_iter()
        .map(|(x, rhs, terms)| {
            let mut terms: Vec<(usize, u64)> = terms
                .into_iter()
                .map(|(y, c)| (variables.binary_search(&y).unwrap(), c))
                .collect();
            terms.sort_unstable();
            Equation { x, rhs, terms }
        })
        .collect();
    equations.sort_by(|a, b| a.x.cmp(&b.x));
    Ok(EquationSystem {
        params,
        variables,
        equations,
    })
}

/// CPLEX-LP style listing with integer variables `y<i>`; comment lines map
/// each variable to its subspace.
pub fn export_lp(system: &EquationSystem) -> String {
    let p = &system.params;
    let mut out = format!("\\ coverage equations q={} n={} p={} t={}\n", p.q, p.n, p.p, p.t);
    for (i, y) in system.variables.iter().enumerate() {
        writeln!(out, "\\ y{i} = {}", y.key()).unwrap();
    }
    out.push_str("Minimize\n obj: 0 y0\nSubject To\n");
    for (i, e) in system.equations.iter().enumerate() {
        let terms: Vec<String> = e
            .terms
            .iter()
            .filter(|&&(_, c)| c > 0)
            .map(|&(v, c)| format!("{c} y{v}"))
            .collect();
        let lhs = if terms.is_empty() {
            "0 y0".to_string()
        } else {
            terms.join(" + ")
        };
        writeln!(out, " e{i}: {lhs} = {}", e.rhs).unwrap();
    }
    out.push_str("General\n");
    for i in 0..system.variables.len() {
        writeln!(out, " y{i}").unwrap();
    }
    out.push_str("End\n");
    out
}

/// The four parts of the S_q(2,3,7;5) construction, each a multiset over F_q^5.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct S2375Parts {
    /// Every 3-subspace of F_q^4, each of its q^3 same-dimension extensions q(q-1) times.
    pub planes: DesignMultiset,
    /// Lines of the A spreads, each unique up-extension q^2 times.
    pub a_lines: DesignMultiset,
    /// Lines of the B spreads, each of the q^2 same-dimension extensions once.
    pub b_lines: DesignMultiset,
    /// The up-extension of the zero subspace, once.
    pub zero: DesignMultiset,
}

impl S2375Parts {
    pub fn union(&self) -> DesignMultiset {
        [&self.a_lines, &self.b_lines, &self.zero]
            .into_iter()
            .fold(self.planes.clone(), |acc, d| acc.union(d).expect("common ambient"))
    }
}

/// Expected block count (q^6+...+q+1)(q^2-q+1) of S_q(2,3,7).
pub fn q_fano_size(q: u32) -> u128 {
    let q = q as u128;
    (0..=6).map(|i| q.pow(i)).sum::<u128>() * (q * q - q + 1)
}

pub fn construct_s237_5_parts(q: u32, parallelism: &[DesignMultiset], a_indices: &[usize]) -> Result<S2375Parts> {
    let field = Field::shared(q)?;
    let qq = q as u64;
    if parallelism.len() as u64 != qq * qq + qq + 1 || !check_parallelism(q, parallelism)? {
        return Err(Error::precondition(format!("not a parallelism of PG(3,{q})")));
    }
    let a: BTreeSet<usize> = a_indices.iter().copied().collect();
    if a.len() != a_indices.len() || a.len() as u64 != qq * qq || a.iter().any(|&i| i >= parallelism.len()) {
        return Err(Error::precondition(format!(
            "A must be {} distinct spread indices below {}",
            qq * qq,
            parallelism.len()
        )));
    }
    let q8 = q as u8;
    let mut planes = DesignMultiset::new(q8, 5)?;
    for plane in Grassmannian::new(field, 4, 3)? {
        for e in extensions_same_dim(&plane) {
            planes.insert(e, qq * (qq - 1))?;
        }
    }
    let mut a_lines = DesignMultiset::new(q8, 5)?;
    let mut b_lines = DesignMultiset::new(q8, 5)?;
    for (i, spread) in parallelism.iter().enumerate() {
        for (line, _) in spread.blocks() {
            if a.contains(&i) {
                a_lines.insert(extension_up_dim(line), qq * qq)?;
            } else {
                for e in extensions_same_dim(line) {
                    b_lines.insert(e, 1)?;
                }
            }
        }
    }
    let mut zero = DesignMultiset::new(q8, 5)?;
    zero.insert(extension_up_dim(&Subspace::zero(q8, 4)), 1)?;
    Ok(S2375Parts {
        planes,
        a_lines,
        b_lines,
        zero,
    })
}

/// A 2-punctured q-Fano plane candidate over F_q^5 built from a parallelism
/// of PG(3, q) split into q^2 spreads A and q+1 spreads B.
pub fn construct_s237_5(q: u32, parallelism: &[DesignMultiset], a_indices: &[usize]) -> Result<DesignMultiset> {
    Ok(construct_s237_5_parts(q, parallelism, a_indices)?.union())
}

/// Number of t-subspaces of F_q^n; the RHS over all equations sums to this.
pub fn t_subspace_count(params: &PuncturedParams) -> num_bigint::BigUint {
    gaussian_binomial(params.n as u32, params.t as u32, params.q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::parallelism_pg3;
    use crate::subspace::grassmannian;

    fn p(q: u32, n: usize, pp: usize) -> PuncturedParams {
        PuncturedParams::new(q, 2, n, pp).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(PuncturedParams::new(2, 2, 7, 0).is_err());
        assert!(PuncturedParams::new(2, 2, 7, 7).is_err());
        assert!(PuncturedParams::new(2, 7, 7, 1).is_err());
        assert!(PuncturedParams::new(6, 2, 7, 1).is_err());
        let pr = p(2, 7, 3);
        assert_eq!((pr.k, pr.m), (3, 4));
        assert_eq!(pr.equation_dims(), 0..=2);
        assert_eq!(pr.all_variable_dims().into_iter().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let p6 = p(2, 7, 1);
        assert_eq!(p6.equation_dims(), 1..=2);
        assert_eq!(p6.all_variable_dims().into_iter().collect::<Vec<_>>(), vec![2, 3]);
    }

    #[test]
    fn coefficient_examples() {
        let pr = p(2, 7, 3);
        let f = pr.field();
        let zero = Subspace::zero(2, 4);
        assert_eq!(coefficient(&zero, &zero, &pr).unwrap(), 7);
        let x = Subspace::span_str(f, &["1000"]).unwrap();
        let y = Subspace::span_str(f, &["0100", "0010"]).unwrap();
        assert!(coefficient(&x, &y, &pr).is_err());
        let plane = Subspace::span_str(f, &["1000", "0100"]).unwrap();
        // K meets the puncture kernel in one vector; the 4 planes avoiding it survive
        assert_eq!(coefficient(&plane, &plane, &pr).unwrap(), 4);
    }

    #[test]
    fn coefficients_vanish_beyond_one_dimension_up() {
        // a K of dimension t+1 cannot puncture to more than s+1 dimensions above its t-subspaces
        let pr = p(2, 7, 3);
        let f = pr.field();
        let zero = Subspace::zero(2, 4);
        for y in grassmannian(f, 4, 2).unwrap() {
            assert_eq!(coefficient(&zero, &y, &pr).unwrap(), 0);
        }
        let x = Subspace::span_str(f, &["0001"]).unwrap();
        for y in grassmannian(f, 4, 3)
            .unwrap()
            .iter()
            .filter(|y| y.contains_subspace(&x).unwrap())
        {
            assert_eq!(coefficient(&x, y, &pr).unwrap(), 0);
        }
    }

    #[test]
    fn system_sizes_and_rhs() {
        let pr = p(2, 7, 3);
        let sys = build_equation_system(&pr).unwrap();
        assert_eq!(sys.equations.len(), 51);
        assert_eq!(sys.variables.len(), 66);
        let zero = Subspace::zero(2, 4);
        assert_eq!(sys.equation_for(&zero).unwrap().rhs, 7);
        let rhs_sum: u128 = sys.equations.iter().map(|e| e.rhs).sum();
        assert_eq!(rhs_sum, 2667);
        for e in &sys.equations {
            let exts = enumerate_p_extensions(&e.x, 3, 2).unwrap();
            assert_eq!(exts.len() as u128, e.rhs);
        }
    }

    #[test]
    fn p1_m6_counts() {
        let pr = p(2, 7, 1);
        let sys = build_equation_system(&pr).unwrap();
        assert_eq!(sys.equations.len(), 714);
        assert_eq!(sys.variables.len(), 651 + 1395);
        let rhs_sum: u128 = sys.equations.iter().map(|e| e.rhs).sum();
        assert_eq!(rhs_sum, 2667);
    }

    #[test]
    fn well_defined_exhaustive_m4() {
        let pr = p(2, 7, 3);
        let sys = build_equation_system(&pr).unwrap();
        for e in &sys.equations {
            for &(v, _) in &e.terms {
                assert!(coefficient_well_defined(&e.x, &sys.variables[v], &pr).unwrap());
            }
        }
    }

    #[test]
    fn uniform_solutions() {
        for q in [2u32, 3] {
            let pr = p(q, 7, 3);
            let sys = build_equation_system(&pr).unwrap();
            let u = UniformSolution::q_fano_p3(q as u64);
            let r = check_solution(&sys, Assignment::Uniform(&u)).unwrap();
            assert!(r.consistent, "q={q}: {:?}", r.violations.first());
            assert_eq!(uniform_total(&pr, &u), q_fano_size(q));
        }
        let pr = p(2, 7, 3);
        assert_eq!(uniform_total(&pr, &UniformSolution::q_fano_p3(2)), 381);
        assert_eq!(uniform_total(&pr, &UniformSolution::new(4, vec![0; 4])), 0);
        assert_eq!(q_fano_size(3), 7651);
    }

    #[test]
    fn zero_assignment_violates_every_positive_equation() {
        let pr = p(2, 7, 3);
        let sys = build_equation_system(&pr).unwrap();
        let r = check_solution(&sys, Assignment::Uniform(&UniformSolution::new(4, vec![0; 4]))).unwrap();
        assert_eq!(r.violations.len(), sys.equations.iter().filter(|e| e.rhs > 0).count());
    }

    #[test]
    fn materialized_uniform_design_is_consistent() {
        let pr = p(2, 7, 3);
        let d = UniformSolution::q_fano_p3(2).materialize(2).unwrap();
        assert_eq!(d.total_size(), 381);
        assert!(verify_punctured(&d, &pr).unwrap().consistent);
    }

    #[test]
    fn export_round_trip() {
        let sys = build_equation_system(&p(2, 7, 3)).unwrap();
        let text = export_rows(&sys);
        assert!(text.starts_with("QSE1 q=2 n=7 p=3 t=2\nE - 7 -:7 "));
        assert_eq!(parse_rows(&text).unwrap(), sys);
        let lp = export_lp(&sys);
        assert!(lp.contains("Subject To"));
        assert_eq!(lp.matches(" = ").count(), 51 + 66);
        assert!(parse_rows("QSE1 q=2 n=7 p=3\n").is_err());
        assert!(parse_rows("QSE1 q=2 n=7 p=3 t=2\nE - x\n").is_err());
    }

    #[test]
    fn construction_q2() {
        let par = parallelism_pg3(2).unwrap();
        let pr = p(2, 7, 2);
        let sys = build_equation_system(&pr).unwrap();
        for a in [[0, 1, 2, 3], [3, 4, 5, 6], [0, 2, 4, 6]] {
            let parts = construct_s237_5_parts(2, &par, &a).unwrap();
            assert_eq!(parts.planes.total_size(), 240);
            assert_eq!(parts.a_lines.total_size(), 80);
            assert_eq!(parts.b_lines.total_size(), 60);
            assert_eq!(parts.zero.total_size(), 1);
            let d = parts.union();
            assert_eq!(d.total_size(), 381);
            let r = check_solution(&sys, Assignment::Design(&d)).unwrap();
            assert!(r.consistent, "{a:?}: {:?}", r.violations.first());

            let mut without_zero = d.clone();
            without_zero.remove_one(parts.zero.blocks().next().unwrap().0);
            assert!(
                !check_solution(&sys, Assignment::Design(&without_zero))
                    .unwrap()
                    .consistent
            );
        }
    }

    #[test]
    fn construction_rejects_bad_input() {
        let par = parallelism_pg3(2).unwrap();
        assert!(construct_s237_5(2, &par, &[0, 1, 2]).is_err());
        assert!(construct_s237_5(2, &par, &[0, 1, 2, 2]).is_err());
        assert!(construct_s237_5(2, &par, &[0, 1, 2, 9]).is_err());
        assert!(construct_s237_5(2, &par[1..], &[0, 1, 2, 3]).is_err());
    }

    #[test]
    fn deleting_a_block_is_detected() {
        let par = parallelism_pg3(2).unwrap();
        let mut d = construct_s237_5(2, &par, &[0, 1, 2, 3]).unwrap();
        let first = d.blocks().next().unwrap().0.clone();
        d.remove_one(&first);
        let r = verify_punctured(&d, &p(2, 7, 2)).unwrap();
        assert!(!r.consistent);
        assert!(!r.violations.is_empty());
    }
}

//! Table-driven arithmetic in small finite fields F_q.
//!
//! Elements are labeled `0..q`. For a prime field the label is the residue.
//! For `q = p^e` with `e > 1` the label of `c_0 + c_1 x + ... + c_{e-1} x^{e-1}`
//! is `c_0 + c_1 p + ... + c_{e-1} p^{e-1}`, and multiplication reduces modulo
//! a fixed monic irreducible polynomial. The polynomial is the first monic
//! irreducible of degree `e` when candidates are ordered by the same base-p
//! label of their lower coefficients:
//!
//! | q | reduction polynomial |
//! |---|----------------------|
//! | 4 | x^2 + x + 1          |
//! | 8 | x^3 + x + 1          |
//! | 9 | x^2 + 1              |

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Field element label.
pub type Elem = u8;

/// Field orders accepted by [`Field::new`].
pub const SUPPORTED_ORDERS: [u32; 7] = [2, 3, 4, 5, 7, 8, 9];

#[derive(Clone, PartialEq, Eq)]
pub struct Field {
    q: u8,
    p: u8,
    e: u8,
    modulus: Vec<Elem>,
    add: Vec<Elem>,
    mul: Vec<Elem>,
    neg: Vec<Elem>,
    inv: Vec<Elem>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)
    }
}

fn prime_power(q: u32) -> Option<(u8, u8)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut rest = q;
    let mut e = 0u8;
    while rest.is_multiple_of(p) {
        rest /= p;
        e += 1;
    }
    (rest == 1).then_some((p as u8, e))
}

impl Field {
    /// Builds the tables for F_q. Fails for orders outside [`SUPPORTED_ORDERS`].
    pub fn new(q: u32) -> Result<Field> {
        if !SUPPORTED_ORDERS.contains(&q) {
            return Err(Error::UnsupportedField(q));
        }
        let (p, e) = prime_power(q).ok_or(Error::UnsupportedField(q))?;
        if e == 1 {
            Ok(Self::prime(p))
        } else {
            let base = Self::prime(p);
            let modulus = first_irreducible(&base, e as usize);
            Ok(Self::extension(&base, modulus))
        }
    }

    /// Shared, lazily built instance for a supported order.
    pub fn shared(q: u32) -> Result<&'static Field> {
        static CELLS: [OnceLock<Field>; 10] = [const { OnceLock::new() }; 10];
        if !SUPPORTED_ORDERS.contains(&q) {
            return Err(Error::UnsupportedField(q));
        }
        let cell = &CELLS[q as usize];
        if let Some(f) = cell.get() {
            return Ok(f);
        }
        let field = Field::new(q)?;
        Ok(cell.get_or_init(|| field))
    }

    fn prime(p: u8) -> Field {
        let q = p as usize;
        let mut add = vec![0; q * q];
        let mut mul = vec![0; q * q];
        for a in 0..q {
            for b in 0..q {
                add[a * q + b] = ((a + b) % q) as Elem;
                mul[a * q + b] = ((a * b) % q) as Elem;
            }
        }
        Self::finish(p, 1, vec![0, 1], add, mul)
    }

    fn extension(base: &Field, modulus: Vec<Elem>) -> Field {
        let p = base.q;
        let e = modulus.len() - 1;
        let q = (p as usize).pow(e as u32);
        let coeffs = |label: usize| -> Vec<Elem> {
            let mut out = vec![0; e];
            let mut v = label;
            for c in out.iter_mut() {
                *c = (v % p as usize) as Elem;
                v /= p as usize;
            }
            out
        };
        let label = |c: &[Elem]| -> usize { c.iter().rev().fold(0usize, |acc, &d| acc * p as usize + d as usize) };
        let arith = PolyQuotient::new(base, modulus.clone());
        let mut add = vec![0; q * q];
        let mut mul = vec![0; q * q];
        for a in 0..q {
            let ca = coeffs(a);
            for b in 0..q {
                let cb = coeffs(b);
                let sum: Vec<Elem> = ca.iter().zip(&cb).map(|(&x, &y)| base.add(x, y)).collect();
                add[a * q + b] = label(&sum) as Elem;
                mul[a * q + b] = label(&arith.mul(&ca, &cb)) as Elem;
            }
        }
        Self::finish(p, e as u8, modulus, add, mul)
    }

    fn finish(p: u8, e: u8, modulus: Vec<Elem>, add: Vec<Elem>, mul: Vec<Elem>) -> Field {
        let q = (p as usize).pow(e as u32);
        let mut neg = vec![0; q];
        let mut inv = vec![0; q];
        for a in 0..q {
            neg[a] = (0..q).find(|&b| add[a * q + b] == 0).unwrap() as Elem;
            if a != 0 {
                inv[a] = (1..q).find(|&b| mul[a * q + b] == 1).unwrap() as Elem;
            }
        }
        Field {
            q: q as u8,
            p,
            e,
            modulus,
            add,
            mul,
            neg,
            inv,
        }
    }

    #[inline]
    pub fn order(&self) -> u8 {
        self.q
    }

    #[inline]
    pub fn characteristic(&self) -> u8 {
        self.p
    }

    #[inline]
    pub fn degree(&self) -> u8 {
        self.e
    }

    /// Coefficients of the reduction polynomial, constant term first.
    /// For prime fields this is `x`.
    pub fn reduction_polynomial(&self) -> &[Elem] {
        &self.modulus
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        0..self.q
    }

    pub fn check(&self, a: u32) -> Result<Elem> {
        if a < self.q as u32 {
            Ok(a as Elem)
        } else {
            Err(Error::InvalidElement { element: a, q: self.q })
        }
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        self.add[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        self.mul[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        self.neg[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.neg(b))
    }

    /// Multiplicative inverse; `inv(0)` is a domain error.
    pub fn inv(&self, a: Elem) -> Result<Elem> {
        if a == 0 {
            Err(Error::DivisionByZero(self.q))
        } else {
            Ok(self.inv[a as usize])
        }
    }

    /// Inverse of a value already known to be nonzero.
    #[inline]
    pub(crate) fn inv_nz(&self, a: Elem) -> Elem {
        debug_assert!(a != 0);
        self.inv[a as usize]
    }

    pub fn pow(&self, a: Elem, mut exp: u32) -> Elem {
        let mut base = a;
        let mut acc = 1;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }
}

/// Arithmetic in `base[x] / (modulus)`, elements as coefficient vectors
/// (constant term first, length `deg(modulus)`).
#[derive(Debug, Clone)]
pub struct PolyQuotient<'a> {
    base: &'a Field,
    modulus: Vec<Elem>,
}

impl<'a> PolyQuotient<'a> {
    /// `modulus` must be monic.
    pub fn new(base: &'a Field, modulus: Vec<Elem>) -> Self {
        assert_eq!(*modulus.last().unwrap(), 1, "modulus must be monic");
        PolyQuotient { base, modulus }
    }

    pub fn degree(&self) -> usize {
        self.modulus.len() - 1
    }

    pub fn base(&self) -> &Field {
        self.base
    }

    pub fn add(&self, a: &[Elem], b: &[Elem]) -> Vec<Elem> {
        a.iter().zip(b).map(|(&x, &y)| self.base.add(x, y)).collect()
    }

    pub fn mul(&self, a: &[Elem], b: &[Elem]) -> Vec<Elem> {
        let f = self.base;
        let d = self.degree();
        let mut prod = vec![0; 2 * d];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = f.add(prod[i + j], f.mul(x, y));
            }
        }
        for top in (d..prod.len()).rev() {
            let c = prod[top];
            if c == 0 {
                continue;
            }
            prod[top] = 0;
            for (i, &m) in self.modulus[..d].iter().enumerate() {
                let idx = top - d + i;
                prod[idx] = f.sub(prod[idx], f.mul(c, m));
            }
        }
        prod.truncate(d);
        prod
    }
}

/// Every monic polynomial of degree `deg` over `base`, in label order of the
/// lower coefficients.
fn monic_polys(base: &Field, deg: usize) -> impl Iterator<Item = Vec<Elem>> + '_ {
    let q = base.q as usize;
    (0..q.pow(deg as u32)).map(move |mut v| {
        let mut c = vec![0; deg + 1];
        for slot in c.iter_mut().take(deg) {
            *slot = (v % q) as Elem;
            v /= q;
        }
        c[deg] = 1;
        c
    })
}

fn poly_rem(base: &Field, num: &[Elem], den: &[Elem]) -> Vec<Elem> {
    let mut r = num.to_vec();
    let dd = den.len() - 1;
    let lead_inv = base.inv_nz(den[dd]);
    while r.len() > dd {
        let top = r.len() - 1;
        let c = base.mul(r[top], lead_inv);
        if c != 0 {
            for (i, &d) in den.iter().enumerate() {
                let idx = top - dd + i;
                r[idx] = base.sub(r[idx], base.mul(c, d));
            }
        }
        r.pop();
    }
    r
}

pub fn is_irreducible(base: &Field, poly: &[Elem]) -> bool {
    let deg = poly.len() - 1;
    if deg == 0 {
        return false;
    }
    (1..=deg / 2).all(|d| monic_polys(base, d).all(|div| poly_rem(base, poly, &div).iter().any(|&c| c != 0)))
}

/// First monic irreducible polynomial of the given degree over `base`.
pub fn first_irreducible(base: &Field, deg: usize) -> Vec<Elem> {
    monic_polys(base, deg)
        .find(|p| is_irreducible(base, p))
        .expect("irreducible polynomials exist in every degree")
}

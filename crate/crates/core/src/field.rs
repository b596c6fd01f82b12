//! Exact arithmetic in finite fields GF(p^k).
//!
//! Elements are plain values: a [`FieldElem`] packs the coefficient vector
//! `(c_0, ..., c_{k-1})` of `c_0 + c_1 u + ... + c_{k-1} u^{k-1}` as the
//! base-`p` integer `sum c_i p^i`. Every operation goes through a
//! [`FieldCtx`], which owns the modulus and the lookup tables.
//!
//! The defining polynomial of GF(p^k) is the lexicographically first monic
//! irreducible of degree `k`, ordering candidates by `(c_{k-1}, ..., c_0)`.
//! This makes contexts reproducible: building `GF(3^2)` always yields
//! `u^2 + 1`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::upoly;

pub const MAX_EXTENSION_DEGREE: u32 = 16;

/// Default bound on field sizes for operations that loop over every element.
pub const DEFAULT_ENUMERATION_LIMIT: u64 = 1 << 20;

/// Extension fields up to this order get exp/log tables.
const TABLE_LIMIT: u64 = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElem(u64);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);

    /// Packed base-`p` index of the element, in `0..q`.
    #[inline]
    pub fn index(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub(crate) fn raw(index: u64) -> Self {
        FieldElem(index)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add(FieldElem),
    Sub(FieldElem),
    Mul(FieldElem),
    Div(FieldElem),
    Pow(u64),
}

struct Tables {
    /// `exp[i] = g^i`, stored twice over so that `log a + log b` needs no reduction.
    exp: Vec<u64>,
    log: Vec<u32>,
}

struct Inner {
    p: u64,
    k: u32,
    q: u64,
    /// Low-order coefficients `c_0..c_{k-1}` of the monic modulus; empty for prime fields.
    modulus: Vec<u64>,
    wide: bool,
    tables: Option<Tables>,
}

/// A finite field GF(p^k). Cloning is cheap; contexts for the same `(p, k)`
/// compare equal and share their tables.
#[derive(Clone)]
pub struct FieldCtx {
    inner: Arc<Inner>,
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.p == other.inner.p
                && self.inner.k == other.inner.k
                && self.inner.modulus == other.inner.modulus)
    }
}

impl Eq for FieldCtx {}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.spec_string())
    }
}

fn cache() -> &'static Mutex<HashMap<(u64, u32), FieldCtx>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u32), FieldCtx>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl FieldCtx {
    /// Builds GF(p^k). Results are memoized per `(p, k)`.
    pub fn new(p: u64, k: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if k == 0 || k > MAX_EXTENSION_DEGREE {
            return Err(Error::DegreeOutOfRange(k));
        }
        let q = p.checked_pow(k).ok_or(Error::FieldTooLarge { p, k })?;
        if let Some(ctx) = cache().lock().unwrap().get(&(p, k)) {
            return Ok(ctx.clone());
        }
        let modulus = if k == 1 { Vec::new() } else { first_irreducible(p, k)? };
        let mut inner = Inner { p, k, q, modulus, wide: p > u32::MAX as u64, tables: None };
        if k > 1 && q <= TABLE_LIMIT {
            inner.tables = Some(build_tables(&inner));
        }
        let ctx = FieldCtx { inner: Arc::new(inner) };
        cache().lock().unwrap().insert((p, k), ctx.clone());
        Ok(ctx)
    }

    pub fn prime(p: u64) -> Result<Self> {
        Self::new(p, 1)
    }

    /// Parses `"p"` or `"p^k"`.
    pub fn parse_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (p, k) = match spec.split_once('^') {
            Some((p, k)) => (p.trim(), k.trim()),
            None => (spec, "1"),
        };
        let p: u64 = p.parse().map_err(|_| Error::Parse(format!("bad field spec {spec:?}")))?;
        let k: u32 = k.parse().map_err(|_| Error::Parse(format!("bad field spec {spec:?}")))?;
        Self::new(p, k)
    }

    pub fn spec_string(&self) -> String {
        if self.inner.k == 1 {
            self.inner.p.to_string()
        } else {
            format!("{}^{}", self.inner.p, self.inner.k)
        }
    }

    #[inline]
    pub fn characteristic(&self) -> u64 {
        self.inner.p
    }

    #[inline]
    pub fn degree(&self) -> u32 {
        self.inner.k
    }

    /// Number of elements `q = p^k`.
    #[inline]
    pub fn order(&self) -> u64 {
        self.inner.q
    }

    /// The monic modulus as a low-to-high coefficient vector of length `k + 1`;
    /// empty for a prime field.
    pub fn min_poly(&self) -> Vec<u64> {
        if self.inner.k == 1 {
            return Vec::new();
        }
        let mut v = self.inner.modulus.clone();
        v.push(1);
        v
    }

    #[inline]
    pub fn zero(&self) -> FieldElem {
        FieldElem::ZERO
    }

    #[inline]
    pub fn one(&self) -> FieldElem {
        FieldElem::ONE
    }

    /// The image of the integer `n` under `Z -> GF(p^k)`.
    #[inline]
    pub fn from_u64(&self, n: u64) -> FieldElem {
        FieldElem(n % self.inner.p)
    }

    pub fn from_i64(&self, n: i64) -> FieldElem {
        let p = self.inner.p as i128;
        FieldElem((n as i128).rem_euclid(p) as u64)
    }

    pub fn from_index(&self, index: u64) -> Result<FieldElem> {
        if index < self.inner.q {
            Ok(FieldElem(index))
        } else {
            Err(Error::InvalidElement(vec![index]))
        }
    }

    /// Builds an element from its coordinate vector (length `k`, entries in `[0, p)`).
    pub fn elem(&self, coeffs: &[u64]) -> Result<FieldElem> {
        if coeffs.len() != self.inner.k as usize || coeffs.iter().any(|&c| c >= self.inner.p) {
            return Err(Error::InvalidElement(coeffs.to_vec()));
        }
        Ok(FieldElem(self.pack(coeffs)))
    }

    pub fn coeffs(&self, a: FieldElem) -> Vec<u64> {
        let mut out = vec![0; self.inner.k as usize];
        self.unpack(a.0, &mut out);
        out
    }

    #[inline]
    pub fn contains(&self, a: FieldElem) -> bool {
        a.0 < self.inner.q
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElem> {
        (0..self.inner.q).map(FieldElem)
    }

    /// Like [`FieldCtx::elements`], refusing fields larger than `limit`.
    pub fn elements_bounded(&self, limit: u64) -> Result<impl Iterator<Item = FieldElem>> {
        self.check_enumerable(limit)?;
        Ok(self.elements())
    }

    pub fn check_enumerable(&self, limit: u64) -> Result<()> {
        if self.inner.q > limit {
            return Err(Error::BoundExceeded(format!(
                "field of order {} exceeds enumeration limit {limit}",
                self.inner.q
            )));
        }
        Ok(())
    }

    fn pack(&self, coeffs: &[u64]) -> u64 {
        coeffs.iter().rev().fold(0u64, |acc, &c| acc * self.inner.p + c)
    }

    fn unpack(&self, mut a: u64, out: &mut [u64]) {
        let p = self.inner.p;
        for slot in out.iter_mut() {
            *slot = a % p;
            a /= p;
        }
    }

    #[inline]
    fn mul_mod_p(&self, a: u64, b: u64) -> u64 {
        if self.inner.wide {
            ((a as u128 * b as u128) % self.inner.p as u128) as u64
        } else {
            (a * b) % self.inner.p
        }
    }

    #[inline]
    fn add_mod_p(&self, a: u64, b: u64) -> u64 {
        let p = self.inner.p;
        let s = a.wrapping_add(b);
        if s >= p || s < a {
            s.wrapping_sub(p)
        } else {
            s
        }
    }

    #[inline]
    fn sub_mod_p(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a.wrapping_sub(b).wrapping_add(self.inner.p)
        }
    }

    #[inline]
    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        debug_assert!(self.contains(a) && self.contains(b));
        let inner = &*self.inner;
        if inner.k == 1 {
            return FieldElem(self.add_mod_p(a.0, b.0));
        }
        if inner.p == 2 {
            return FieldElem(a.0 ^ b.0);
        }
        let p = inner.p;
        let (mut x, mut y) = (a.0, b.0);
        let (mut acc, mut place) = (0u64, 1u64);
        for i in 0..inner.k {
            acc += self.add_mod_p(x % p, y % p) * place;
            x /= p;
            y /= p;
            if i + 1 < inner.k {
                place *= p;
            }
        }
        FieldElem(acc)
    }

    #[inline]
    pub fn neg(&self, a: FieldElem) -> FieldElem {
        let inner = &*self.inner;
        if a.0 == 0 || inner.p == 2 {
            return a;
        }
        if inner.k == 1 {
            return FieldElem(inner.p - a.0);
        }
        let p = inner.p;
        let mut x = a.0;
        let (mut acc, mut place) = (0u64, 1u64);
        for i in 0..inner.k {
            let c = x % p;
            if c != 0 {
                acc += (p - c) * place;
            }
            x /= p;
            if i + 1 < inner.k {
                place *= p;
            }
        }
        FieldElem(acc)
    }

    #[inline]
    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        if self.inner.k == 1 {
            return FieldElem(self.sub_mod_p(a.0, b.0));
        }
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        debug_assert!(self.contains(a) && self.contains(b));
        let inner = &*self.inner;
        if inner.k == 1 {
            return FieldElem(self.mul_mod_p(a.0, b.0));
        }
        if a.0 == 0 || b.0 == 0 {
            return FieldElem::ZERO;
        }
        match &inner.tables {
            Some(t) => FieldElem(t.exp[t.log[a.0 as usize] as usize + t.log[b.0 as usize] as usize]),
            None => FieldElem(mul_poly_mode(inner, a.0, b.0)),
        }
    }

    /// `a * b + c`, the inner step of every Horner loop.
    #[inline]
    pub fn mul_add(&self, a: FieldElem, b: FieldElem, c: FieldElem) -> FieldElem {
        self.add(self.mul(a, b), c)
    }

    pub fn inv(&self, a: FieldElem) -> Option<FieldElem> {
        if a.0 == 0 {
            return None;
        }
        let inner = &*self.inner;
        if inner.k == 1 {
            return Some(FieldElem(inv_mod(a.0, inner.p)));
        }
        match &inner.tables {
            Some(t) => {
                let order = (inner.q - 1) as usize;
                let l = t.log[a.0 as usize] as usize;
                Some(FieldElem(t.exp[(order - l) % order]))
            }
            None => Some(self.pow(a, inner.q - 2)),
        }
    }

    pub fn div(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem> {
        let inv = self.inv(b).ok_or(Error::DivisionByZero)?;
        Ok(self.mul(a, inv))
    }

    pub fn pow(&self, a: FieldElem, mut e: u64) -> FieldElem {
        if e == 0 {
            return FieldElem::ONE;
        }
        if a.0 == 0 {
            return FieldElem::ZERO;
        }
        if let Some(t) = &self.inner.tables {
            let order = (self.inner.q - 1) as u128;
            let l = t.log[a.0 as usize] as u128;
            return FieldElem(t.exp[((l * e as u128) % order) as usize]);
        }
        let mut base = a;
        let mut acc = FieldElem::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn arith(&self, a: FieldElem, op: ArithOp) -> Result<FieldElem> {
        Ok(match op {
            ArithOp::Add(b) => self.add(a, b),
            ArithOp::Sub(b) => self.sub(a, b),
            ArithOp::Mul(b) => self.mul(a, b),
            ArithOp::Div(b) => self.div(a, b)?,
            ArithOp::Pow(e) => self.pow(a, e),
        })
    }

    pub fn sum<I: IntoIterator<Item = FieldElem>>(&self, it: I) -> FieldElem {
        it.into_iter().fold(FieldElem::ZERO, |acc, x| self.add(acc, x))
    }

    /// Renders an element: an integer for prime fields, comma-separated
    /// coordinates `c_0,...,c_{k-1}` otherwise.
    pub fn format(&self, a: FieldElem) -> String {
        if self.inner.k == 1 {
            return a.0.to_string();
        }
        self.coeffs(a).iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
    }

    /// Inverse of [`FieldCtx::format`]. A bare integer in an extension field
    /// is read as the constant `n mod p`.
    pub fn parse_elem(&self, s: &str) -> Result<FieldElem> {
        let s = s.trim();
        if s.contains(',') {
            let coeffs = s
                .split(',')
                .map(|c| c.trim().parse::<u64>().map_err(|_| Error::Parse(format!("bad element {s:?}"))))
                .collect::<Result<Vec<_>>>()?;
            return self.elem(&coeffs);
        }
        let n: i64 = s.parse().map_err(|_| Error::Parse(format!("bad element {s:?}")))?;
        if n < 0 || n as u64 >= self.inner.p {
            return Err(Error::InvalidElement(vec![n.unsigned_abs()]));
        }
        Ok(FieldElem(n as u64))
    }

    /// All roots of `sum coeffs[i] t^i`, found by testing every element.
    pub fn univariate_roots(&self, coeffs: &[FieldElem]) -> Result<Vec<FieldElem>> {
        univariate_roots(self, coeffs)
    }

    /// GF(q^j) together with the embedding of `self` into it.
    pub fn extension(&self, j: u32) -> Result<(FieldCtx, Embedding)> {
        let k = self.inner.k.checked_mul(j).ok_or(Error::DegreeOutOfRange(u32::MAX))?;
        let big = FieldCtx::new(self.inner.p, k)?;
        let emb = Embedding::new(self, &big)?;
        Ok((big, emb))
    }
}

/// All roots of `sum coeffs[i] t^i` in the field, by exhaustive scan.
pub fn univariate_roots(ctx: &FieldCtx, coeffs: &[FieldElem]) -> Result<Vec<FieldElem>> {
    if coeffs.iter().all(|c| c.is_zero()) {
        return Err(Error::ZeroPolynomial);
    }
    Ok(ctx
        .elements()
        .filter(|&x| upoly::eval(ctx, coeffs, x).is_zero())
        .collect())
}

/// Field embedding GF(p^k) -> GF(p^{kj}), determined by the image of the
/// generator `u` (the least root of the source modulus in the target).
#[derive(Clone, Debug)]
pub struct Embedding {
    src: FieldCtx,
    dst: FieldCtx,
    powers: Vec<FieldElem>,
}

impl Embedding {
    pub fn new(src: &FieldCtx, dst: &FieldCtx) -> Result<Self> {
        if src.characteristic() != dst.characteristic() || dst.degree() % src.degree() != 0 {
            return Err(Error::FieldMismatch);
        }
        let k = src.degree() as usize;
        let powers = if k == 1 {
            vec![FieldElem::ONE]
        } else {
            let modulus: Vec<FieldElem> = src.min_poly().into_iter().map(FieldElem).collect();
            let roots = upoly::roots(dst, &modulus)?;
            let u = *roots.first().ok_or(Error::FieldMismatch)?;
            let mut powers = Vec::with_capacity(k);
            let mut acc = FieldElem::ONE;
            for _ in 0..k {
                powers.push(acc);
                acc = dst.mul(acc, u);
            }
            powers
        };
        Ok(Embedding { src: src.clone(), dst: dst.clone(), powers })
    }

    pub fn identity(ctx: &FieldCtx) -> Self {
        let u = FieldElem(if ctx.degree() == 1 { 0 } else { ctx.characteristic() });
        let mut powers = Vec::with_capacity(ctx.degree() as usize);
        let mut acc = FieldElem::ONE;
        for _ in 0..ctx.degree() {
            powers.push(acc);
            acc = ctx.mul(acc, u);
        }
        Embedding { src: ctx.clone(), dst: ctx.clone(), powers }
    }

    pub fn source(&self) -> &FieldCtx {
        &self.src
    }

    pub fn target(&self) -> &FieldCtx {
        &self.dst
    }

    pub fn map(&self, a: FieldElem) -> FieldElem {
        if self.powers.len() == 1 {
            return a;
        }
        let coeffs = self.src.coeffs(a);
        self.dst.sum(
            coeffs
                .iter()
                .zip(&self.powers)
                .filter(|(c, _)| **c != 0)
                .map(|(&c, &pw)| self.dst.mul(FieldElem(c), pw)),
        )
    }
}

fn mul_poly_mode(inner: &Inner, a: u64, b: u64) -> u64 {
    let p = inner.p as u128;
    let k = inner.k as usize;
    let mut x = [0u64; MAX_EXTENSION_DEGREE as usize];
    let mut y = [0u64; MAX_EXTENSION_DEGREE as usize];
    let (mut aa, mut bb) = (a, b);
    for i in 0..k {
        x[i] = aa % inner.p;
        y[i] = bb % inner.p;
        aa /= inner.p;
        bb /= inner.p;
    }
    let mut prod = [0u128; 2 * MAX_EXTENSION_DEGREE as usize];
    for i in 0..k {
        if x[i] == 0 {
            continue;
        }
        for j in 0..k {
            prod[i + j] = (prod[i + j] + x[i] as u128 * y[j] as u128) % p;
        }
    }
    for i in (k..2 * k - 1).rev() {
        let c = prod[i];
        if c == 0 {
            continue;
        }
        prod[i] = 0;
        for (j, &m) in inner.modulus.iter().enumerate() {
            // subtract c * m_j from slot i - k + j
            let t = (c * m as u128) % p;
            prod[i - k + j] = (prod[i - k + j] + p - t) % p;
        }
    }
    let mut acc = 0u64;
    for i in (0..k).rev() {
        acc = acc * inner.p + prod[i] as u64;
    }
    acc
}

fn build_tables(inner: &Inner) -> Tables {
    let q = inner.q;
    let order = q - 1;
    let factors = prime_factors(order);
    let pow = |mut base: u64, mut e: u64| {
        let mut acc = 1u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = mul_poly_mode(inner, acc, base);
            }
            base = mul_poly_mode(inner, base, base);
            e >>= 1;
        }
        acc
    };
    let g = (2..q)
        .find(|&g| factors.iter().all(|&r| pow(g, order / r) != 1))
        .unwrap_or(1);
    let mut exp = Vec::with_capacity(2 * order as usize);
    let mut log = vec![0u32; q as usize];
    let mut acc = 1u64;
    for i in 0..order {
        exp.push(acc);
        log[acc as usize] = i as u32;
        acc = mul_poly_mode(inner, acc, g);
    }
    exp.extend_from_within(..);
    Tables { exp, log }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n % f == 0 {
            out.push(f);
            while n % f == 0 {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn inv_mod(a: u64, p: u64) -> u64 {
    let (mut r0, mut r1) = (p as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    t0.rem_euclid(p as i128) as u64
}

fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod_u64(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod_u64(acc, a, m);
        }
        a = mul_mod_u64(a, a, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n % b == 0 {
            return n == b;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &a in &BASES {
        let mut x = pow_mod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Lexicographically first monic irreducible of degree `k` over GF(p),
/// returned as its low-order coefficients `c_0..c_{k-1}`.
fn first_irreducible(p: u64, k: u32) -> Result<Vec<u64>> {
    let base = FieldCtx::prime(p)?;
    let mut digits = vec![0u64; k as usize];
    loop {
        let mut f: Vec<FieldElem> = digits.iter().map(|&c| FieldElem(c)).collect();
        f.push(FieldElem::ONE);
        if upoly::is_irreducible(&base, &f) {
            return Ok(digits);
        }
        // advance (c_{k-1}, ..., c_0) lexicographically: c_0 is the fastest digit
        let mut i = 0;
        loop {
            if i == digits.len() {
                return Err(Error::DegreeOutOfRange(k));
            }
            digits[i] += 1;
            if digits[i] < p {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn make_field_examples() {
        let f2 = FieldCtx::new(2, 1).unwrap();
        assert!(f2.min_poly().is_empty());
        assert_eq!(FieldCtx::new(2, 2).unwrap().min_poly(), vec![1, 1, 1]);
        assert_eq!(FieldCtx::new(3, 2).unwrap().min_poly(), vec![1, 0, 1]);
    }

    #[test]
    fn make_field_errors() {
        assert_eq!(FieldCtx::new(4, 1).unwrap_err(), Error::NotPrime(4));
        assert_eq!(FieldCtx::new(1, 1).unwrap_err(), Error::NotPrime(1));
        assert_eq!(FieldCtx::new(2, 0).unwrap_err(), Error::DegreeOutOfRange(0));
        assert_eq!(FieldCtx::new(2, 17).unwrap_err(), Error::DegreeOutOfRange(17));
        assert!(matches!(FieldCtx::new(1_000_003, 4), Err(Error::FieldTooLarge { .. })));
    }

    /// Brute force: a monic quadratic is irreducible iff it has no root.
    #[test]
    fn gf9_modulus_is_lex_first_irreducible() {
        let p = 3u64;
        let mut first = None;
        'outer: for c1 in 0..p {
            for c0 in 0..p {
                let has_root = (0..p).any(|x| (x * x + c1 * x + c0) % p == 0);
                if !has_root {
                    first = Some(vec![c0, c1, 1]);
                    break 'outer;
                }
            }
        }
        assert_eq!(FieldCtx::new(3, 2).unwrap().min_poly(), first.unwrap());
    }

    #[test]
    fn division_examples() {
        let f7 = FieldCtx::prime(7).unwrap();
        assert_eq!(f7.div(FieldElem(3), FieldElem(5)).unwrap(), FieldElem(2));
        assert_eq!(f7.div(FieldElem(3), FieldElem(0)), Err(Error::DivisionByZero));
        assert_eq!(f7.arith(FieldElem(3), ArithOp::Pow(2)).unwrap(), FieldElem(2));
    }

    #[test]
    fn gf4_generator_squared() {
        let f4 = FieldCtx::new(2, 2).unwrap();
        let u = f4.elem(&[0, 1]).unwrap();
        assert_eq!(f4.mul(u, u), f4.elem(&[1, 1]).unwrap());
    }

    #[test]
    fn frobenius_and_inverses_small_fields() {
        for (p, k) in [(2, 1), (3, 1), (2, 2), (5, 1), (7, 1), (2, 3), (3, 2), (2, 4), (5, 2), (3, 3), (7, 2), (3, 4)] {
            let f = FieldCtx::new(p, k).unwrap();
            let q = f.order();
            assert!(q <= 81);
            let elems: Vec<_> = f.elements().collect();
            assert_eq!(elems.len() as u64, q);
            for &a in &elems {
                assert_eq!(f.pow(a, q), a, "Frobenius in GF({p}^{k})");
                if !a.is_zero() {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), f.one());
                }
            }
        }
    }

    #[test]
    fn table_and_poly_modes_agree() {
        let f = FieldCtx::new(3, 4).unwrap();
        for a in f.elements() {
            for b in f.elements().step_by(7) {
                assert_eq!(f.mul(a, b).index(), mul_poly_mode(&f.inner, a.index(), b.index()));
            }
        }
    }

    #[test]
    fn scan_roots_examples() {
        let f5 = FieldCtx::prime(5).unwrap();
        let one = f5.one();
        assert_eq!(f5.univariate_roots(&[one, FieldElem(0), one]).unwrap(), vec![FieldElem(2), FieldElem(3)]);
        let f2 = FieldCtx::prime(2).unwrap();
        assert!(f2.univariate_roots(&[one, one, one]).unwrap().is_empty());
        let f4 = FieldCtx::new(2, 2).unwrap();
        let u = f4.elem(&[0, 1]).unwrap();
        let u1 = f4.elem(&[1, 1]).unwrap();
        assert_eq!(f4.univariate_roots(&[one, one, one]).unwrap(), vec![u, u1]);
        assert_eq!(f5.univariate_roots(&[FieldElem(0), FieldElem(0)]), Err(Error::ZeroPolynomial));
    }

    #[test]
    fn parse_and_format() {
        let f = FieldCtx::parse_spec("2^4").unwrap();
        assert_eq!(f.order(), 16);
        assert_eq!(f.spec_string(), "2^4");
        let a = f.elem(&[1, 0, 1, 1]).unwrap();
        assert_eq!(f.parse_elem(&f.format(a)).unwrap(), a);
        assert!(FieldCtx::parse_spec("x").is_err());
        assert!(FieldCtx::parse_spec("6").is_err());
    }

    #[test]
    fn large_prime_field() {
        let p = (1u64 << 61) - 1;
        let f = FieldCtx::prime(p).unwrap();
        let a = f.from_u64(123456789123456789);
        let b = f.inv(a).unwrap();
        assert_eq!(f.mul(a, b), f.one());
        assert_eq!(f.pow(a, p), a);
    }

    #[test]
    fn embedding_is_a_ring_map() {
        let small = FieldCtx::new(2, 2).unwrap();
        let (big, emb) = small.extension(2).unwrap();
        assert_eq!(big.order(), 16);
        for a in small.elements() {
            for b in small.elements() {
                assert_eq!(emb.map(small.mul(a, b)), big.mul(emb.map(a), emb.map(b)));
                assert_eq!(emb.map(small.add(a, b)), big.add(emb.map(a), emb.map(b)));
            }
        }
        let id = Embedding::identity(&small);
        for a in small.elements() {
            assert_eq!(id.map(a), a);
        }
    }

    fn field_strategy() -> impl Strategy<Value = FieldCtx> {
        prop::sample::select(vec![(2u64, 1u32), (101, 1), (2, 8), (3, 5), (101, 2), (7, 3), (3, 13), (65537, 1)])
            .prop_map(|(p, k)| FieldCtx::new(p, k).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn field_axioms(ctx in field_strategy(), seeds in prop::collection::vec(any::<u64>(), 3 * 160)) {
            let q = ctx.order();
            for t in seeds.chunks(3) {
                let (a, b, c) = (FieldElem(t[0] % q), FieldElem(t[1] % q), FieldElem(t[2] % q));
                prop_assert_eq!(ctx.add(ctx.add(a, b), c), ctx.add(a, ctx.add(b, c)));
                prop_assert_eq!(ctx.mul(ctx.mul(a, b), c), ctx.mul(a, ctx.mul(b, c)));
                prop_assert_eq!(ctx.add(a, b), ctx.add(b, a));
                prop_assert_eq!(ctx.mul(a, b), ctx.mul(b, a));
                prop_assert_eq!(ctx.mul(a, ctx.add(b, c)), ctx.add(ctx.mul(a, b), ctx.mul(a, c)));
                prop_assert_eq!(ctx.sub(ctx.add(a, b), b), a);
                prop_assert_eq!(ctx.add(a, ctx.neg(a)), FieldElem::ZERO);
            }
        }
    }
}

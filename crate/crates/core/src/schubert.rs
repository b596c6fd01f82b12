//! Schubert calculus on the Grassmannian `G` of lines in `P^n` and on the
//! point-line flag variety `Γ = P(Q)`, the projectivized rank-2 quotient
//! bundle over `G`.
//!
//! Classes on `G` are integer combinations of `σ_{a,b}` with
//! `n - 1 >= a >= b >= 0`. On `Γ` every class is written as `x + y·h`
//! with `x, y` classes on `G`, where `h` is the pullback of the hyperplane
//! class of `P^n`; products are reduced with `h^2 = σ_1·h - σ_{1,1}`.
//!
//! For a degree-`d` form `F`, `Y_{F,m}` is the zero locus of a section of a
//! bundle with a filtration whose graded pieces have first Chern classes
//! `(d - k)·h + k·(σ_1 - h)`, `k = 0..m-1`, so its class is the product of
//! these.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::flags::Multiplicity;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Partition2 {
    pub a: u32,
    pub b: u32,
}

impl Partition2 {
    pub fn new(a: u32, b: u32) -> Result<Self> {
        if a < b {
            return Err(Error::Precondition(format!("partition ({a},{b}) is not decreasing")));
        }
        Ok(Partition2 { a, b })
    }

    pub fn size(self) -> u32 {
        self.a + self.b
    }

    pub fn fits(self, n: usize) -> bool {
        (self.a as usize) < n
    }
}

impl fmt::Display for Partition2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{},{}", self.a, self.b)
    }
}

/// A class on `G(2, n + 1)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChowClassG {
    n: usize,
    terms: BTreeMap<Partition2, BigInt>,
}

impl ChowClassG {
    pub fn zero(n: usize) -> Self {
        ChowClassG { n, terms: BTreeMap::new() }
    }

    pub fn one(n: usize) -> Self {
        Self::sigma(n, 0, 0)
    }

    /// `σ_{a,b}`; zero outside the `2 x (n - 1)` box.
    pub fn sigma(n: usize, a: u32, b: u32) -> Self {
        let mut out = Self::zero(n);
        out.add_term(Partition2 { a, b }, BigInt::one());
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Partition2, &BigInt)> {
        self.terms.iter()
    }

    pub fn coeff(&self, a: u32, b: u32) -> BigInt {
        self.terms.get(&Partition2 { a, b }).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, lam: Partition2, c: BigInt) {
        if c.is_zero() || lam.a < lam.b || !lam.fits(self.n) {
            return;
        }
        let slot = self.terms.entry(lam).or_default();
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&lam);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&lam, c) in &other.terms {
            out.add_term(lam, c.clone());
        }
        out
    }

    pub fn scale(&self, s: &BigInt) -> Self {
        let mut out = Self::zero(self.n);
        for (&lam, c) in &self.terms {
            out.add_term(lam, c * s);
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(&BigInt::from(-1))
    }

    /// `σ_c · self`.
    pub fn pieri(&self, c: u32) -> Self {
        let mut out = Self::zero(self.n);
        for (&lam, coef) in &self.terms {
            for t in pieri(lam, c, self.n).terms {
                out.add_term(t.0, coef * t.1);
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        product_g(self, other)
    }

    /// Coefficient of the point class `σ_{n-1,n-1}`.
    pub fn integrate(&self) -> BigInt {
        let top = self.n as u32 - 1;
        self.coeff(top, top)
    }
}

/// `σ_c · σ_{a,b}` in `G(2, n + 1)`: the sum of `σ_{a',b'}` with
/// `a' + b' = a + b + c` and `n - 1 >= a' >= a >= b' >= b`.
pub fn pieri(lam: Partition2, c: u32, n: usize) -> ChowClassG {
    let mut out = ChowClassG::zero(n);
    if !lam.fits(n) {
        return out;
    }
    let total = lam.a + lam.b + c;
    for b2 in lam.b..=lam.a {
        let Some(a2) = total.checked_sub(b2) else { continue };
        if a2 >= lam.a {
            out.add_term(Partition2 { a: a2, b: b2 }, BigInt::one());
        }
    }
    out
}

/// Product in `A(G)`, expanding the second factor by Giambelli
/// `σ_{a,b} = σ_a σ_b - σ_{a+1} σ_{b-1}`.
pub fn product_g(x: &ChowClassG, y: &ChowClassG) -> ChowClassG {
    let mut out = ChowClassG::zero(x.n);
    for (&lam, c) in &y.terms {
        let mut term = x.pieri(lam.a).pieri(lam.b);
        if lam.b > 0 {
            term = term.add(&x.pieri(lam.a + 1).pieri(lam.b - 1).neg());
        }
        out = out.add(&term.scale(c));
    }
    out
}

/// A class `base + h·hpart` on `Γ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChowClassGamma {
    pub base: ChowClassG,
    pub hpart: ChowClassG,
}

impl ChowClassGamma {
    pub fn zero(n: usize) -> Self {
        ChowClassGamma { base: ChowClassG::zero(n), hpart: ChowClassG::zero(n) }
    }

    pub fn one(n: usize) -> Self {
        ChowClassGamma { base: ChowClassG::one(n), hpart: ChowClassG::zero(n) }
    }

    pub fn h(n: usize) -> Self {
        ChowClassGamma { base: ChowClassG::zero(n), hpart: ChowClassG::one(n) }
    }

    pub fn from_g(x: ChowClassG) -> Self {
        let n = x.n;
        ChowClassGamma { base: x, hpart: ChowClassG::zero(n) }
    }

    pub fn sigma(n: usize, a: u32, b: u32) -> Self {
        Self::from_g(ChowClassG::sigma(n, a, b))
    }

    /// `σ_1 - h`.
    pub fn q(n: usize) -> Self {
        Self::sigma(n, 1, 0).sub(&Self::h(n))
    }

    pub fn n(&self) -> usize {
        self.base.n
    }

    pub fn is_zero(&self) -> bool {
        self.base.is_zero() && self.hpart.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        ChowClassGamma { base: self.base.add(&o.base), hpart: self.hpart.add(&o.hpart) }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&BigInt::from(-1)))
    }

    pub fn scale(&self, s: &BigInt) -> Self {
        ChowClassGamma { base: self.base.scale(s), hpart: self.hpart.scale(s) }
    }

    pub fn mul(&self, o: &Self) -> Self {
        product_gamma(self, o)
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(self.n()), |acc, _| acc.mul(self))
    }

    /// Terms `(a, b, e, c)` meaning `c · σ_{a,b} · h^e`.
    pub fn terms(&self) -> Vec<(u32, u32, u32, BigInt)> {
        let mut out: Vec<_> = self.base.terms().map(|(l, c)| (l.a, l.b, 0, c.clone())).collect();
        out.extend(self.hpart.terms().map(|(l, c)| (l.a, l.b, 1, c.clone())));
        out
    }

    pub fn integrate(&self) -> BigInt {
        integrate_gamma(self)
    }
}

impl fmt::Display for ChowClassGamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.terms();
        if terms.is_empty() {
            return f.write_str("0");
        }
        let parts: Vec<String> = terms
            .iter()
            .map(|(a, b, e, c)| if *e == 0 { format!("{c}*s{a},{b}") } else { format!("{c}*s{a},{b}*h") })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// `(x0 + x1 h)(y0 + y1 h) = x0 y0 - x1 y1 σ_{1,1} + (x0 y1 + x1 y0 + x1 y1 σ_1) h`.
pub fn product_gamma(x: &ChowClassGamma, y: &ChowClassGamma) -> ChowClassGamma {
    let n = x.n();
    let hh = x.hpart.mul(&y.hpart);
    let base = x.base.mul(&y.base).add(&hh.mul(&ChowClassG::sigma(n, 1, 1)).neg());
    let hpart = x.base.mul(&y.hpart).add(&x.hpart.mul(&y.base)).add(&hh.pieri(1));
    ChowClassGamma { base, hpart }
}

/// Degree of the zero-dimensional part: the coefficient of `h·σ_{n-1,n-1}`.
pub fn integrate_gamma(x: &ChowClassGamma) -> BigInt {
    x.hpart.integrate()
}

fn order_rows(d: u32, m: Multiplicity) -> Result<u32> {
    match m {
        Multiplicity::Finite(k) if (1..=d).contains(&k) => Ok(k),
        Multiplicity::Finite(k) => Err(Error::InvalidOrder(format!("m = {k} outside 1..={d}"))),
        Multiplicity::Infinite => Ok(d + 1),
    }
}

/// `∏_{k<m} ((d - k)·h + k·(σ_1 - h))`, the class of `Y_{F,m}` for general `F`
/// (`m = ∞` takes all `d + 1` factors).
pub fn euler_class(n: usize, d: u32, m: Multiplicity) -> Result<ChowClassGamma> {
    if n < 2 {
        return Err(Error::InvalidRing { n, d });
    }
    let rows = order_rows(d, m)?;
    let h = ChowClassGamma::h(n);
    let q = ChowClassGamma::q(n);
    let mut out = ChowClassGamma::one(n);
    for k in 0..rows {
        let factor = h.scale(&BigInt::from(d - k)).add(&q.scale(&BigInt::from(k)));
        out = out.mul(&factor);
    }
    Ok(out)
}

/// JSON numbers when they fit in `i64`, decimal strings otherwise.
fn ser_big<S: Serializer>(x: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x.to_i64() {
        Some(v) => s.serialize_i64(v),
        None => s.serialize_str(&x.to_string()),
    }
}

fn ser_big_opt<S: Serializer>(x: &Option<BigInt>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => ser_big(v, s),
        None => s.serialize_none(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Degree {
    /// Exponent of `h`.
    pub h: u32,
    /// Exponent of `σ_1`.
    pub sigma1: u32,
    #[serde(serialize_with = "ser_big")]
    pub value: BigInt,
}

/// `coeff · σ_{a,b} · h^e` with `e` in `{0, 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EulerTerm {
    pub a: u32,
    pub b: u32,
    pub h: u32,
    #[serde(serialize_with = "ser_big")]
    pub coeff: BigInt,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Prediction {
    pub n: usize,
    pub d: u32,
    pub m: Multiplicity,
    /// `2n - 1 - (number of equations)`; negative means empty for general `F`.
    pub expected_dim: i64,
    /// Number of points when `expected_dim = 0`.
    #[serde(serialize_with = "ser_big_opt")]
    pub count: Option<BigInt>,
    /// `∫ [Y]·h^a·σ_1^b` for `a + b = expected_dim`.
    pub degrees: Vec<Degree>,
    pub euler_class_terms: Vec<EulerTerm>,
}

pub fn predict(n: usize, d: u32, m: Multiplicity) -> Result<Prediction> {
    let e = euler_class(n, d, m)?;
    let rows = order_rows(d, m)?;
    let expected_dim = 2 * n as i64 - 1 - rows as i64;
    let mut degrees = Vec::new();
    if expected_dim >= 0 {
        let dim = expected_dim as u32;
        let h = ChowClassGamma::h(n);
        let s1 = ChowClassGamma::sigma(n, 1, 0);
        for a in 0..=dim {
            let value = e.mul(&h.pow(a)).mul(&s1.pow(dim - a)).integrate();
            degrees.push(Degree { h: a, sigma1: dim - a, value });
        }
    }
    let count = (expected_dim == 0).then(|| e.integrate());
    let euler_class_terms = e.terms().into_iter().map(|(a, b, h, coeff)| EulerTerm { a, b, h, coeff }).collect();
    Ok(Prediction { n, d, m, expected_dim, count, degrees, euler_class_terms })
}

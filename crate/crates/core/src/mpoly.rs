//! Sparse homogeneous polynomials in `n + 1` variables over a finite field.
//!
//! A [`MultiPoly`] is a form of fixed degree `d`; every stored monomial has
//! total degree exactly `d` and every stored coefficient is nonzero. The
//! central operation is restriction to a line: given a point `p` and a
//! direction `v`, [`MultiPoly::restrict_to_line_general`] returns the
//! coefficients of `t -> F(p + t v)`, whose order of vanishing at `t = 0` is
//! the intersection multiplicity of the line with the hypersurface at `p`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Embedding, FieldCtx, FieldElem};
use crate::linalg::{self, Matrix};

pub type Exponent = Vec<u32>;

/// All exponent vectors of `nvars` variables and total degree `d`, in
/// descending lexicographic order (`x_0^d` first).
pub fn monomials(nvars: usize, d: u32) -> Vec<Exponent> {
    fn rec(nvars: usize, d: u32, prefix: &mut Exponent, out: &mut Vec<Exponent>) {
        if prefix.len() + 1 == nvars {
            prefix.push(d);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=d).rev() {
            prefix.push(e);
            rec(nvars, d - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if nvars > 0 {
        rec(nvars, d, &mut Vec::with_capacity(nvars), &mut out);
    }
    out
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// The space `Sym^d V` of degree-`d` forms in `n + 1` variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyRing {
    ctx: FieldCtx,
    n: usize,
    d: u32,
}

impl PolyRing {
    pub fn new(ctx: &FieldCtx, n: usize, d: u32) -> Result<Self> {
        if n < 2 || d < 1 {
            return Err(Error::InvalidRing { n, d });
        }
        Ok(PolyRing { ctx: ctx.clone(), n, d })
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn monomials(&self) -> Vec<Exponent> {
        monomials(self.n + 1, self.d)
    }

    /// `binom(n + d, n)`.
    pub fn dimension(&self) -> usize {
        binomial((self.n as u64) + self.d as u64, self.n as u64) as usize
    }

    /// Builds a form from its coefficient vector in [`PolyRing::monomials`] order.
    pub fn from_dense(&self, coeffs: &[FieldElem]) -> Result<MultiPoly> {
        let mons = self.monomials();
        if coeffs.len() != mons.len() {
            return Err(Error::Arity { expected: mons.len(), got: coeffs.len() });
        }
        MultiPoly::new(&self.ctx, self.n, self.d, mons.into_iter().zip(coeffs.iter().copied()))
    }

    /// Uniform sample over nonzero coefficient vectors; equal seeds give equal forms.
    pub fn sample(&self, seed: u64) -> MultiPoly {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mons = self.monomials();
        let q = self.ctx.order();
        loop {
            let coeffs: Vec<FieldElem> = mons.iter().map(|_| FieldElem::raw(rng.gen_range(0..q))).collect();
            if coeffs.iter().any(|c| !c.is_zero()) {
                return self.from_dense(&coeffs).expect("dense vector has the right length");
            }
        }
    }

    /// Every nonzero coefficient vector once (scalar multiples are not identified).
    pub fn enumerate(&self, bound: u64) -> Result<PolyEnumerator> {
        let mons = self.monomials();
        let q = self.ctx.order();
        let total = (mons.len() as u32)
            .try_into()
            .ok()
            .and_then(|e: u32| q.checked_pow(e))
            .filter(|&t| t <= bound)
            .ok_or_else(|| {
                Error::BoundExceeded(format!("q^{} polynomials exceed bound {bound}", mons.len()))
            })?;
        Ok(PolyEnumerator { ring: self.clone(), digits: vec![0; mons.len()], remaining: total - 1 })
    }
}

pub fn sample_poly(ring: &PolyRing, seed: u64) -> MultiPoly {
    ring.sample(seed)
}

pub struct PolyEnumerator {
    ring: PolyRing,
    digits: Vec<u64>,
    remaining: u64,
}

impl Iterator for PolyEnumerator {
    type Item = MultiPoly;

    fn next(&mut self) -> Option<MultiPoly> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let q = self.ring.ctx.order();
        for d in self.digits.iter_mut().rev() {
            *d += 1;
            if *d < q {
                break;
            }
            *d = 0;
        }
        let coeffs: Vec<FieldElem> = self.digits.iter().map(|&i| FieldElem::raw(i)).collect();
        Some(self.ring.from_dense(&coeffs).unwrap())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let r = self.remaining as usize;
        (r, Some(r))
    }
}

/// Coefficients `f_0..f_d` of a form restricted to a parametrized line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RestrictionCoeffs {
    pub f: Vec<FieldElem>,
}

impl RestrictionCoeffs {
    /// Order of vanishing at `t = 0`; `None` when the restriction is identically zero.
    pub fn valuation(&self) -> Option<usize> {
        self.f.iter().position(|c| !c.is_zero())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiPoly {
    ctx: FieldCtx,
    n: usize,
    d: u32,
    terms: BTreeMap<Exponent, FieldElem>,
}

impl MultiPoly {
    /// Sums the given terms; rejects monomials of the wrong arity or degree.
    pub fn new<I>(ctx: &FieldCtx, n: usize, d: u32, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponent, FieldElem)>,
    {
        let mut out = MultiPoly::zero(ctx, n, d);
        for (e, c) in terms {
            out.check_exponent(&e)?;
            out.add_term(e, c);
        }
        Ok(out)
    }

    pub fn zero(ctx: &FieldCtx, n: usize, d: u32) -> Self {
        MultiPoly { ctx: ctx.clone(), n, d, terms: BTreeMap::new() }
    }

    /// Convenience constructor from integer coefficients.
    pub fn from_ints(ctx: &FieldCtx, n: usize, d: u32, terms: &[(i64, &[u32])]) -> Result<Self> {
        MultiPoly::new(ctx, n, d, terms.iter().map(|(c, e)| (e.to_vec(), ctx.from_i64(*c))))
    }

    fn check_exponent(&self, e: &[u32]) -> Result<()> {
        if e.len() != self.n + 1 {
            return Err(Error::Arity { expected: self.n + 1, got: e.len() });
        }
        if e.iter().sum::<u32>() != self.d {
            return Err(Error::NotHomogeneous { exponents: e.to_vec(), degree: self.d });
        }
        Ok(())
    }

    fn add_term(&mut self, e: Exponent, c: FieldElem) {
        if c.is_zero() {
            return;
        }
        let ctx = &self.ctx;
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = ctx.add(*o.get(), c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exponent, FieldElem)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn coeff(&self, e: &[u32]) -> FieldElem {
        self.terms.get(e).copied().unwrap_or_default()
    }

    /// Dense coefficient vector in [`monomials`] order.
    pub fn to_dense(&self) -> Vec<FieldElem> {
        monomials(self.n + 1, self.d).iter().map(|e| self.coeff(e)).collect()
    }

    fn check_point(&self, pt: &[FieldElem]) -> Result<()> {
        if pt.len() != self.n + 1 {
            return Err(Error::Arity { expected: self.n + 1, got: pt.len() });
        }
        Ok(())
    }

    pub fn evaluate(&self, pt: &[FieldElem]) -> Result<FieldElem> {
        self.check_point(pt)?;
        Ok(self.eval_unchecked(pt))
    }

    #[inline]
    pub fn eval_unchecked(&self, pt: &[FieldElem]) -> FieldElem {
        let ctx = &self.ctx;
        let mut acc = FieldElem::ZERO;
        for (e, &c) in &self.terms {
            let mut m = c;
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    m = ctx.mul(m, pt[i]);
                }
            }
            acc = ctx.add(acc, m);
        }
        acc
    }

    pub fn partial(&self, i: usize) -> MultiPoly {
        let mut out = MultiPoly::zero(&self.ctx, self.n, self.d.saturating_sub(1));
        for (e, &c) in &self.terms {
            if e[i] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[i] -= 1;
            out.add_term(e2, self.ctx.mul(c, self.ctx.from_u64(e[i] as u64)));
        }
        out
    }

    /// Formal partial derivatives `dF/dx_0, ..., dF/dx_n`.
    pub fn partials(&self) -> Vec<MultiPoly> {
        (0..=self.n).map(|i| self.partial(i)).collect()
    }

    /// Coefficients of `t -> F(p + t v)`, accumulated one linear factor at a time.
    pub fn restrict_along(&self, p: &[FieldElem], v: &[FieldElem]) -> Vec<FieldElem> {
        let ctx = &self.ctx;
        let d = self.d as usize;
        let mut out = vec![FieldElem::ZERO; d + 1];
        let mut acc = vec![FieldElem::ZERO; d + 1];
        for (e, &c) in &self.terms {
            acc[0] = c;
            let mut len = 1;
            for (i, &k) in e.iter().enumerate() {
                let (a, b) = (p[i], v[i]);
                for _ in 0..k {
                    // acc *= (a + b t)
                    acc[len] = ctx.mul(acc[len - 1], b);
                    for j in (1..len).rev() {
                        acc[j] = ctx.add(ctx.mul(acc[j], a), ctx.mul(acc[j - 1], b));
                    }
                    acc[0] = ctx.mul(acc[0], a);
                    len += 1;
                }
            }
            for j in 0..len {
                out[j] = ctx.add(out[j], acc[j]);
            }
        }
        out
    }

    /// `F(1, t + xi_1, zeta_2 t + xi_2, ..., zeta_n t + xi_n) = sum f_k t^k`.
    pub fn restrict_to_chart_line(&self, xi: &[FieldElem], zeta: &[FieldElem]) -> Result<RestrictionCoeffs> {
        if xi.len() != self.n {
            return Err(Error::Arity { expected: self.n, got: xi.len() });
        }
        if zeta.len() + 1 != self.n {
            return Err(Error::Arity { expected: self.n - 1, got: zeta.len() });
        }
        let mut p = vec![FieldElem::ONE];
        p.extend_from_slice(xi);
        let mut v = vec![FieldElem::ZERO, FieldElem::ONE];
        v.extend_from_slice(zeta);
        Ok(RestrictionCoeffs { f: self.restrict_along(&p, &v) })
    }

    /// Coefficients of `t -> F(p + t v)` for projectively independent `p`, `v`.
    pub fn restrict_to_line_general(&self, p: &[FieldElem], v: &[FieldElem]) -> Result<RestrictionCoeffs> {
        self.check_point(p)?;
        self.check_point(v)?;
        let m = Matrix::from_rows(vec![p.to_vec(), v.to_vec()])?;
        if linalg::rank(&self.ctx, &m) < 2 {
            return Err(Error::DependentPoints);
        }
        Ok(RestrictionCoeffs { f: self.restrict_along(p, v) })
    }

    /// `G(y) = F(A y)`.
    pub fn transform(&self, a: &Matrix) -> Result<MultiPoly> {
        let nv = self.n + 1;
        if a.rows() != nv || a.cols() != nv {
            return Err(Error::Arity { expected: nv, got: a.rows() });
        }
        if linalg::determinant(&self.ctx, a)?.is_zero() {
            return Err(Error::SingularMatrix);
        }
        Ok(self.substitute_linear(a))
    }

    fn substitute_linear(&self, a: &Matrix) -> MultiPoly {
        let ctx = &self.ctx;
        let nv = self.n + 1;
        let mut out = MultiPoly::zero(ctx, self.n, self.d);
        for (e, &c) in &self.terms {
            let mut acc: BTreeMap<Exponent, FieldElem> = BTreeMap::new();
            acc.insert(vec![0; nv], c);
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    let mut next: BTreeMap<Exponent, FieldElem> = BTreeMap::new();
                    for (m, &coef) in &acc {
                        for j in 0..nv {
                            let aij = a.get(i, j);
                            if aij.is_zero() {
                                continue;
                            }
                            let mut m2 = m.clone();
                            m2[j] += 1;
                            let slot = next.entry(m2).or_default();
                            *slot = ctx.mul_add(coef, aij, *slot);
                        }
                    }
                    acc = next;
                }
            }
            for (m, coef) in acc {
                out.add_term(m, coef);
            }
        }
        out
    }

    fn check_same_space(&self, other: &MultiPoly) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(Error::FieldMismatch);
        }
        if self.n != other.n || self.d != other.d {
            return Err(Error::InvalidRing { n: other.n, d: other.d });
        }
        Ok(())
    }

    pub fn add(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.check_same_space(other)?;
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.add(&other.scale(self.ctx.neg(FieldElem::ONE)))
    }

    pub fn scale(&self, s: FieldElem) -> MultiPoly {
        let mut out = MultiPoly::zero(&self.ctx, self.n, self.d);
        for (e, &c) in &self.terms {
            out.add_term(e.clone(), self.ctx.mul(c, s));
        }
        out
    }

    pub fn mul(&self, other: &MultiPoly) -> Result<MultiPoly> {
        if self.ctx != other.ctx {
            return Err(Error::FieldMismatch);
        }
        if self.n != other.n {
            return Err(Error::Arity { expected: self.n + 1, got: other.n + 1 });
        }
        let mut out = MultiPoly::zero(&self.ctx, self.n, self.d + other.d);
        for (e1, &c1) in &self.terms {
            for (e2, &c2) in &other.terms {
                let e: Exponent = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term(e, self.ctx.mul(c1, c2));
            }
        }
        Ok(out)
    }

    /// The same form with coefficients pushed into a larger field.
    pub fn embed(&self, emb: &Embedding) -> Result<MultiPoly> {
        if emb.source() != &self.ctx {
            return Err(Error::FieldMismatch);
        }
        let dst = emb.target();
        let mut out = MultiPoly::zero(dst, self.n, self.d);
        for (e, &c) in &self.terms {
            out.add_term(e.clone(), emb.map(c));
        }
        Ok(out)
    }

    /// Taylor forms at `p`: `Q_k(v) = [t^k] F(p + t v)` for `k = 0..=kmax`,
    /// each a form of degree `k` in `v` (Hasse derivatives, valid in every
    /// characteristic).
    pub fn taylor_forms(&self, p: &[FieldElem], kmax: usize) -> Vec<MultiPoly> {
        let ctx = &self.ctx;
        let nv = self.n + 1;
        let kmax = kmax.min(self.d as usize);
        let mut forms: Vec<MultiPoly> = (0..=kmax).map(|k| MultiPoly::zero(ctx, self.n, k as u32)).collect();
        let d = self.d as usize;
        // ppow[i][e] = p_i^e
        let mut ppow = vec![vec![FieldElem::ONE; d + 1]; nv];
        for i in 0..nv {
            for e in 1..=d {
                ppow[i][e] = ctx.mul(ppow[i][e - 1], p[i]);
            }
        }
        let mut beta = vec![0u32; nv];
        for (e, &c) in &self.terms {
            sub_indices(e, 0, 0, kmax as u32, &mut beta, &mut |beta, k| {
                let mut coef = c;
                for i in 0..nv {
                    let b = binomial(e[i] as u64, beta[i] as u64);
                    if b != 1 {
                        coef = ctx.mul(coef, ctx.from_u64(b));
                    }
                    coef = ctx.mul(coef, ppow[i][(e[i] - beta[i]) as usize]);
                }
                forms[k as usize].add_term(beta.to_vec(), coef);
            });
        }
        forms
    }
}

fn sub_indices(e: &[u32], i: usize, used: u32, kmax: u32, beta: &mut Vec<u32>, f: &mut impl FnMut(&[u32], u32)) {
    if i == e.len() {
        f(beta, used);
        return;
    }
    for b in 0..=e[i].min(kmax - used) {
        beta[i] = b;
        sub_indices(e, i + 1, used + b, kmax, beta, f);
    }
    beta[i] = 0;
}

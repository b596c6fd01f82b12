//! Dense univariate polynomials over a [`FieldCtx`], stored low degree first.
//!
//! Besides the usual ring operations this holds the root finder used by the
//! point enumerators: `gcd(f, t^q - t)` isolates the distinct rational roots,
//! which are then split apart by equal-degree factorization.

use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem};

pub type UPoly = Vec<FieldElem>;

pub fn trim(f: &mut UPoly) {
    while f.last().is_some_and(|c| c.is_zero()) {
        f.pop();
    }
}

/// Degree, or `None` for the zero polynomial.
pub fn degree(f: &[FieldElem]) -> Option<usize> {
    f.iter().rposition(|c| !c.is_zero())
}

pub fn eval(ctx: &FieldCtx, f: &[FieldElem], x: FieldElem) -> FieldElem {
    f.iter().rev().fold(FieldElem::ZERO, |acc, &c| ctx.mul_add(acc, x, c))
}

pub fn add(ctx: &FieldCtx, a: &[FieldElem], b: &[FieldElem]) -> UPoly {
    let mut out: UPoly = (0..a.len().max(b.len()))
        .map(|i| {
            let x = a.get(i).copied().unwrap_or_default();
            let y = b.get(i).copied().unwrap_or_default();
            ctx.add(x, y)
        })
        .collect();
    trim(&mut out);
    out
}

pub fn sub(ctx: &FieldCtx, a: &[FieldElem], b: &[FieldElem]) -> UPoly {
    let mut out: UPoly = (0..a.len().max(b.len()))
        .map(|i| {
            let x = a.get(i).copied().unwrap_or_default();
            let y = b.get(i).copied().unwrap_or_default();
            ctx.sub(x, y)
        })
        .collect();
    trim(&mut out);
    out
}

pub fn mul(ctx: &FieldCtx, a: &[FieldElem], b: &[FieldElem]) -> UPoly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![FieldElem::ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = ctx.mul_add(x, y, out[i + j]);
        }
    }
    trim(&mut out);
    out
}

/// Quotient and remainder; `m` must be nonzero.
pub fn divrem(ctx: &FieldCtx, a: &[FieldElem], m: &[FieldElem]) -> (UPoly, UPoly) {
    let dm = degree(m).expect("division by the zero polynomial");
    let lead_inv = ctx.inv(m[dm]).expect("nonzero leading coefficient");
    let mut r: UPoly = a.to_vec();
    trim(&mut r);
    if r.len() <= dm {
        return (Vec::new(), r);
    }
    let mut quo = vec![FieldElem::ZERO; r.len() - dm];
    for i in (dm..r.len()).rev() {
        let c = r[i];
        if c.is_zero() {
            continue;
        }
        let factor = ctx.mul(c, lead_inv);
        quo[i - dm] = factor;
        for j in 0..=dm {
            r[i - dm + j] = ctx.sub(r[i - dm + j], ctx.mul(factor, m[j]));
        }
    }
    r.truncate(dm);
    trim(&mut r);
    trim(&mut quo);
    (quo, r)
}

pub fn rem(ctx: &FieldCtx, a: &[FieldElem], m: &[FieldElem]) -> UPoly {
    divrem(ctx, a, m).1
}

pub fn monic(ctx: &FieldCtx, f: &[FieldElem]) -> UPoly {
    let mut f = f.to_vec();
    trim(&mut f);
    if let Some(&lead) = f.last() {
        let inv = ctx.inv(lead).expect("nonzero");
        for c in f.iter_mut() {
            *c = ctx.mul(*c, inv);
        }
    }
    f
}

/// Monic gcd; `gcd(0, 0) = 0`.
pub fn gcd(ctx: &FieldCtx, a: &[FieldElem], b: &[FieldElem]) -> UPoly {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    trim(&mut x);
    trim(&mut y);
    while !y.is_empty() {
        let r = rem(ctx, &x, &y);
        x = y;
        y = r;
    }
    monic(ctx, &x)
}

/// `base^e mod m`.
pub fn powmod(ctx: &FieldCtx, base: &[FieldElem], mut e: u64, m: &[FieldElem]) -> UPoly {
    let mut acc = rem(ctx, &[FieldElem::ONE], m);
    let mut b = rem(ctx, base, m);
    while e > 0 {
        if e & 1 == 1 {
            acc = rem(ctx, &mul(ctx, &acc, &b), m);
        }
        e >>= 1;
        if e > 0 {
            b = rem(ctx, &mul(ctx, &b, &b), m);
        }
    }
    acc
}

/// Rabin's test over a prime field.
pub fn is_irreducible(ctx: &FieldCtx, f: &[FieldElem]) -> bool {
    let Some(k) = degree(f) else { return false };
    if k == 0 {
        return false;
    }
    if k == 1 {
        return true;
    }
    let q = ctx.order();
    let x = vec![FieldElem::ZERO, FieldElem::ONE];
    // frob[i] = x^{q^i} mod f
    let mut frob = vec![rem(ctx, &x, f)];
    for i in 0..k {
        let next = powmod(ctx, &frob[i], q, f);
        frob.push(next);
    }
    if frob[k] != rem(ctx, &x, f) {
        return false;
    }
    let mut n = k;
    let mut r = 2;
    let mut prime_divisors = Vec::new();
    while r * r <= n {
        if n % r == 0 {
            prime_divisors.push(r);
            while n % r == 0 {
                n /= r;
            }
        }
        r += 1;
    }
    if n > 1 {
        prime_divisors.push(n);
    }
    prime_divisors.into_iter().all(|r| {
        let h = sub(ctx, &frob[k / r], &x);
        degree(&gcd(ctx, &h, f)) == Some(0)
    })
}

/// Distinct roots of `f` in the field, sorted by index. Fast path used by the
/// enumerators; agrees with the exhaustive scan in [`crate::field::univariate_roots`].
pub fn roots(ctx: &FieldCtx, f: &[FieldElem]) -> Result<Vec<FieldElem>> {
    let mut f = f.to_vec();
    trim(&mut f);
    let Some(deg) = degree(&f) else { return Err(Error::ZeroPolynomial) };
    let mut out = Vec::new();
    if deg == 0 {
        return Ok(out);
    }
    let f = monic(ctx, &f);
    let split_part = if deg == 1 {
        f
    } else {
        let x = vec![FieldElem::ZERO, FieldElem::ONE];
        let xq = powmod(ctx, &x, ctx.order(), &f);
        gcd(ctx, &f, &sub(ctx, &xq, &x))
    };
    split_linear(ctx, &split_part, &mut out);
    out.sort();
    Ok(out)
}

/// Splits a monic squarefree product of distinct linear factors.
fn split_linear(ctx: &FieldCtx, g: &[FieldElem], out: &mut Vec<FieldElem>) {
    match degree(g) {
        None | Some(0) => return,
        Some(1) => {
            out.push(ctx.neg(ctx.mul(g[0], ctx.inv(g[1]).unwrap())));
            return;
        }
        _ => {}
    }
    let q = ctx.order();
    let p = ctx.characteristic();
    for a in ctx.elements().skip(if p == 2 { 1 } else { 0 }) {
        let h = if p == 2 {
            // absolute trace of a*t, reduced mod g
            let e = q.trailing_zeros();
            let mut term = rem(ctx, &[FieldElem::ZERO, a], g);
            let mut acc = term.clone();
            for _ in 1..e {
                term = rem(ctx, &mul(ctx, &term, &term), g);
                acc = add(ctx, &acc, &term);
            }
            gcd(ctx, g, &acc)
        } else {
            let shifted = powmod(ctx, &[a, FieldElem::ONE], (q - 1) / 2, g);
            gcd(ctx, g, &sub(ctx, &shifted, &[FieldElem::ONE]))
        };
        let dh = degree(&h).unwrap_or(0);
        if dh > 0 && dh < degree(g).unwrap() {
            let (other, _) = divrem(ctx, g, &h);
            split_linear(ctx, &h, out);
            split_linear(ctx, &monic(ctx, &other), out);
            return;
        }
    }
    unreachable!("distinct roots are always separated by some shift");
}

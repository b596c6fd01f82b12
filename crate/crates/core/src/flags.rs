//! Points, lines and point-line flags of `P^n` over a finite field, and
//! enumeration of the schemes `X_F`, `Y_{F,m}` and `Z_F`.
//!
//! Points are stored with first nonzero coordinate equal to 1. A flag
//! `(p, L)` stores `p` together with the unique direction `v` spanning `L`
//! that vanishes at the pivot of `p` and is itself normalized, so equal flags
//! compare equal.
//!
//! `Y_{F,m}` is enumerated point by point. For `p` in `X_F` the line through
//! `p` with direction `v` meets `X_F` with multiplicity at least `m` exactly
//! when the Taylor forms `Q_1, ..., Q_{m-1}` of `F` at `p` all vanish at `v`.
//! `Q_1` is the gradient, which cuts the candidate directions down to a
//! hyperplane; on a projective line of candidates the remaining forms become
//! univariate and are solved by root finding.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::ControlFlow;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem, DEFAULT_ENUMERATION_LIMIT};
use crate::linalg::{self, Matrix};
use crate::mpoly::MultiPoly;
use crate::upoly;

pub type Point = Vec<FieldElem>;

fn pivot(x: &[FieldElem]) -> Option<usize> {
    x.iter().position(|c| !c.is_zero())
}

/// Scales `x` so that its first nonzero coordinate is 1.
pub fn canonical_point(ctx: &FieldCtx, x: &[FieldElem]) -> Result<Point> {
    let i = pivot(x).ok_or(Error::ZeroVector)?;
    let inv = ctx.inv(x[i]).unwrap();
    Ok(x.iter().map(|&c| ctx.mul(c, inv)).collect())
}

/// `(q^{k+1} - 1) / (q - 1)`, the number of rational points of `P^k`.
pub fn count_points(q: u64, k: usize) -> u64 {
    (0..=k as u32).map(|i| q.pow(i)).sum()
}

/// Number of rational flags of `P^n`.
pub fn count_flags(q: u64, n: usize) -> u64 {
    count_points(q, n) * count_points(q, n - 1)
}

/// Number of rational lines of `P^n`.
pub fn count_lines(q: u64, n: usize) -> u64 {
    count_flags(q, n) / (q + 1)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Flag {
    p: Point,
    v: Point,
}

impl Flag {
    /// Canonical flag of the point `p` on the line spanned by `p` and `v`.
    pub fn new(ctx: &FieldCtx, p: &[FieldElem], v: &[FieldElem]) -> Result<Flag> {
        if p.len() != v.len() {
            return Err(Error::Arity { expected: p.len(), got: v.len() });
        }
        let p = canonical_point(ctx, p)?;
        let i0 = pivot(&p).unwrap();
        let c = v[i0];
        let reduced: Vec<FieldElem> = v.iter().zip(&p).map(|(&vi, &pi)| ctx.sub(vi, ctx.mul(c, pi))).collect();
        let v = canonical_point(ctx, &reduced).map_err(|_| Error::DependentPoints)?;
        Ok(Flag { p, v })
    }

    /// `p = (1:0:...:0)` on the line `x_2 = ... = x_n = 0`.
    pub fn standard(n: usize) -> Flag {
        let mut p = vec![FieldElem::ZERO; n + 1];
        let mut v = p.clone();
        p[0] = FieldElem::ONE;
        v[1] = FieldElem::ONE;
        Flag { p, v }
    }

    pub fn p(&self) -> &[FieldElem] {
        &self.p
    }

    pub fn v(&self) -> &[FieldElem] {
        &self.v
    }

    pub fn n(&self) -> usize {
        self.p.len() - 1
    }

    pub fn line(&self, ctx: &FieldCtx) -> Line {
        Line::through(ctx, &self.p, &self.v).expect("flag points are independent")
    }

    /// Image of the flag under the linear map `x -> M x`.
    pub fn apply(&self, ctx: &FieldCtx, m: &Matrix) -> Result<Flag> {
        let p = linalg::mul_vec(ctx, m, &self.p)?;
        let v = linalg::mul_vec(ctx, m, &self.v)?;
        Flag::new(ctx, &p, &v)
    }

    /// Chart coordinates `(xi, zeta)` with `p = (1 : xi)` and `L` spanned by
    /// `p` and `(0 : 1 : zeta)`; `None` outside the chart.
    pub fn chart_coords(&self) -> Option<(Vec<FieldElem>, Vec<FieldElem>)> {
        if self.p[0] != FieldElem::ONE || self.v[1] != FieldElem::ONE {
            return None;
        }
        Some((self.p[1..].to_vec(), self.v[2..].to_vec()))
    }

    pub fn from_chart(ctx: &FieldCtx, xi: &[FieldElem], zeta: &[FieldElem]) -> Result<Flag> {
        if zeta.len() + 1 != xi.len() {
            return Err(Error::Arity { expected: xi.len() - 1, got: zeta.len() });
        }
        let mut p = vec![FieldElem::ONE];
        p.extend_from_slice(xi);
        let mut v = vec![FieldElem::ZERO, FieldElem::ONE];
        v.extend_from_slice(zeta);
        Flag::new(ctx, &p, &v)
    }
}

/// A line of `P^n`, stored as the reduced row echelon form of a 2-row basis.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Line {
    rows: [Point; 2],
}

impl Line {
    pub fn through(ctx: &FieldCtx, a: &[FieldElem], b: &[FieldElem]) -> Result<Line> {
        let m = Matrix::from_rows(vec![a.to_vec(), b.to_vec()])?;
        let (red, pivots) = linalg::row_reduce(ctx, &m);
        if pivots.len() < 2 {
            return Err(Error::DependentPoints);
        }
        Ok(Line { rows: [red.row(0).to_vec(), red.row(1).to_vec()] })
    }

    pub fn basis(&self) -> &[Point; 2] {
        &self.rows
    }

    /// The `q + 1` rational points of the line.
    pub fn points(&self, ctx: &FieldCtx) -> Vec<Point> {
        let [a, b] = &self.rows;
        let mut out = vec![b.clone()];
        for s in ctx.elements() {
            out.push(a.iter().zip(b).map(|(&x, &y)| ctx.mul_add(s, y, x)).collect());
        }
        out
    }

    pub fn contains(&self, ctx: &FieldCtx, x: &[FieldElem]) -> bool {
        let m = Matrix::from_rows(vec![self.rows[0].clone(), self.rows[1].clone(), x.to_vec()]).unwrap();
        linalg::rank(ctx, &m) < 3
    }
}

/// Intersection multiplicity of a line with `X_F` at a point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Multiplicity {
    Finite(u32),
    Infinite,
}

impl Multiplicity {
    pub fn is_infinite(self) -> bool {
        self == Multiplicity::Infinite
    }
}

impl fmt::Display for Multiplicity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Multiplicity::Finite(m) => write!(f, "{m}"),
            Multiplicity::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Multiplicity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Multiplicity::Infinite),
            t => t.parse().map(Multiplicity::Finite).map_err(|_| Error::InvalidOrder(s.to_string())),
        }
    }
}

impl Serialize for Multiplicity {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Multiplicity::Finite(m) => s.serialize_u32(*m),
            Multiplicity::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> serde::Deserialize<'de> for Multiplicity {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(serde::Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(m) => Ok(Multiplicity::Finite(m)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Checks `1 <= m <= d` for finite orders.
pub fn check_order(m: Multiplicity, d: u32) -> Result<()> {
    match m {
        Multiplicity::Finite(k) if k < 1 || k > d => {
            Err(Error::InvalidOrder(format!("m = {k} outside 1..={d}")))
        }
        _ => Ok(()),
    }
}

/// Basis matrix with columns `p`, `v`, then unit vectors chosen greedily in
/// index order. `F ∘ A` sees the flag as the standard flag.
pub fn adapted_basis(ctx: &FieldCtx, flag: &Flag) -> Matrix {
    let nv = flag.p.len();
    let mut cols = vec![flag.p.clone(), flag.v.clone()];
    for j in 0..nv {
        if cols.len() == nv {
            break;
        }
        let mut e = vec![FieldElem::ZERO; nv];
        e[j] = FieldElem::ONE;
        cols.push(e);
        let m = Matrix::from_cols(&cols).unwrap();
        if linalg::rank(ctx, &m) < cols.len() {
            cols.pop();
        }
    }
    Matrix::from_cols(&cols).unwrap()
}

/// Indices `j` of the unit vectors completing `(p, v)` in [`adapted_basis`].
pub fn completing_indices(ctx: &FieldCtx, flag: &Flag) -> Vec<usize> {
    let a = adapted_basis(ctx, flag);
    (2..a.cols()).map(|c| pivot(&a.col(c)).unwrap()).collect()
}

pub fn multiplicity(f: &MultiPoly, flag: &Flag) -> Multiplicity {
    let r = f.restrict_along(&flag.p, &flag.v);
    match r.iter().position(|c| !c.is_zero()) {
        Some(k) => Multiplicity::Finite(k as u32),
        None => Multiplicity::Infinite,
    }
}

/// All rational points of `P^dim`, pivot position ascending.
pub struct ProjectivePoints {
    ctx: FieldCtx,
    dim: usize,
    pivot: usize,
    counter: u64,
    total: u64,
}

impl ProjectivePoints {
    pub fn new(ctx: &FieldCtx, dim: usize) -> Self {
        let total = ctx.order().pow(dim as u32);
        ProjectivePoints { ctx: ctx.clone(), dim, pivot: 0, counter: 0, total }
    }
}

impl Iterator for ProjectivePoints {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        if self.pivot > self.dim {
            return None;
        }
        let q = self.ctx.order();
        let mut x = vec![FieldElem::ZERO; self.dim + 1];
        x[self.pivot] = FieldElem::ONE;
        let mut c = self.counter;
        for slot in x[self.pivot + 1..].iter_mut().rev() {
            *slot = FieldElem::raw(c % q);
            c /= q;
        }
        self.counter += 1;
        if self.counter == self.total {
            self.pivot += 1;
            self.counter = 0;
            self.total /= q;
        }
        Some(x)
    }
}

fn check_bound(count: u64, limit: u64, what: &str) -> Result<()> {
    if count > limit {
        return Err(Error::BoundExceeded(format!("{count} {what} exceed limit {limit}")));
    }
    Ok(())
}

pub fn enumerate_points(ctx: &FieldCtx, n: usize, limit: u64) -> Result<ProjectivePoints> {
    check_bound(count_points(ctx.order(), n), limit, "points")?;
    Ok(ProjectivePoints::new(ctx, n))
}

/// Every rational flag of `P^n` exactly once.
pub fn enumerate_flags(ctx: &FieldCtx, n: usize, limit: u64) -> Result<impl Iterator<Item = Flag>> {
    if n < 2 {
        return Err(Error::Precondition(format!("flags need n >= 2, got {n}")));
    }
    check_bound(count_flags(ctx.order(), n), limit, "flags")?;
    let ctx = ctx.clone();
    Ok(ProjectivePoints::new(&ctx, n).flat_map(move |p| {
        let i0 = pivot(&p).unwrap();
        ProjectivePoints::new(&ctx, n - 1).map(move |w| {
            let mut v = w;
            v.insert(i0, FieldElem::ZERO);
            Flag { p: p.clone(), v }
        })
    }))
}

/// Every rational line of `P^n` exactly once.
pub fn enumerate_lines(ctx: &FieldCtx, n: usize, limit: u64) -> Result<Vec<Line>> {
    check_bound(count_lines(ctx.order(), n), limit, "lines")?;
    let mut out = Vec::new();
    let q = ctx.order();
    for c1 in 0..=n {
        for c2 in c1 + 1..=n {
            let free1: Vec<usize> = (c1 + 1..=n).filter(|&j| j != c2).collect();
            let free2: Vec<usize> = (c2 + 1..=n).collect();
            let nfree = (free1.len() + free2.len()) as u32;
            for mut code in 0..q.pow(nfree) {
                let mut a = vec![FieldElem::ZERO; n + 1];
                let mut b = vec![FieldElem::ZERO; n + 1];
                a[c1] = FieldElem::ONE;
                b[c2] = FieldElem::ONE;
                for &j in free1.iter() {
                    a[j] = FieldElem::raw(code % q);
                    code /= q;
                }
                for &j in free2.iter() {
                    b[j] = FieldElem::raw(code % q);
                    code /= q;
                }
                out.push(Line { rows: [a, b] });
            }
        }
    }
    Ok(out)
}

/// Which incidence scheme to enumerate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    X,
    Y(Multiplicity),
    Z,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Members {
    Points(Vec<Point>),
    Flags(Vec<Flag>),
    Lines(Vec<Line>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemeCount {
    pub count: u64,
    pub members: Members,
}

/// Rational points of `X_F` over `f.ctx()`, in [`ProjectivePoints`] order.
pub fn for_each_point<B>(f: &MultiPoly, limit: u64, mut visit: impl FnMut(&Point) -> ControlFlow<B>) -> Result<Option<B>> {
    let ctx = f.ctx();
    let n = f.n();
    let q = ctx.order();
    check_bound(count_points(q, n), limit, "points")?;
    let terms: Vec<(Vec<u32>, FieldElem)> = f.terms().map(|(e, c)| (e.clone(), c)).collect();
    let d = f.d() as usize;
    let scan = q <= 64;
    let mut x = vec![FieldElem::ZERO; n + 1];
    let mut pw = vec![vec![FieldElem::ONE; d + 1]; n];
    let mut uni = vec![FieldElem::ZERO; d + 1];
    for piv in 0..n {
        x.iter_mut().for_each(|c| *c = FieldElem::ZERO);
        x[piv] = FieldElem::ONE;
        let nfree = n - 1 - piv;
        for code in 0..q.pow(nfree as u32) {
            let mut c = code;
            for slot in x[piv + 1..n].iter_mut().rev() {
                *slot = FieldElem::raw(c % q);
                c /= q;
            }
            for j in piv..n {
                for e in 1..=d {
                    pw[j][e] = ctx.mul(pw[j][e - 1], x[j]);
                }
            }
            uni.iter_mut().for_each(|c| *c = FieldElem::ZERO);
            for (e, coef) in &terms {
                if e[..piv].iter().any(|&k| k > 0) {
                    continue;
                }
                let mut m = *coef;
                for j in piv + 1..n {
                    m = ctx.mul(m, pw[j][e[j] as usize]);
                }
                uni[e[n] as usize] = ctx.add(uni[e[n] as usize], m);
            }
            let roots: Vec<FieldElem> = if uni.iter().all(|c| c.is_zero()) {
                ctx.elements().collect()
            } else if scan {
                ctx.elements().filter(|&t| upoly::eval(ctx, &uni, t).is_zero()).collect()
            } else {
                upoly::roots(ctx, &uni)?
            };
            for r in roots {
                x[n] = r;
                if let ControlFlow::Break(b) = visit(&x) {
                    return Ok(Some(b));
                }
            }
        }
    }
    x.iter_mut().for_each(|c| *c = FieldElem::ZERO);
    x[n] = FieldElem::ONE;
    if f.eval_unchecked(&x).is_zero() {
        if let ControlFlow::Break(b) = visit(&x) {
            return Ok(Some(b));
        }
    }
    Ok(None)
}

/// Directions `v` (canonical, `v[pivot(p)] = 0`) with `Q_k(v) = 0` for
/// `1 <= k <= kmax`, where `Q_k` are the Taylor forms of `f` at `p`.
pub fn tangent_directions(f: &MultiPoly, p: &[FieldElem], kmax: usize) -> Vec<Point> {
    let ctx = f.ctx();
    let nv = p.len();
    let i0 = pivot(p).expect("nonzero point");
    let forms = f.taylor_forms(p, kmax);
    let mut constraints = vec![{
        let mut e = vec![FieldElem::ZERO; nv];
        e[i0] = FieldElem::ONE;
        e
    }];
    if kmax >= 1 {
        let grad: Vec<FieldElem> = (0..nv)
            .map(|j| {
                let mut e = vec![0u32; nv];
                e[j] = 1;
                forms[1].coeff(&e)
            })
            .collect();
        constraints.push(grad);
    }
    let basis = linalg::kernel(ctx, &Matrix::from_rows(constraints).unwrap());
    let higher = &forms[forms.len().min(2)..];
    let passes = |v: &[FieldElem]| higher.iter().all(|q| q.eval_unchecked(v).is_zero());
    let combine = |coeffs: &[FieldElem]| -> Point {
        let mut v = vec![FieldElem::ZERO; nv];
        for (c, b) in coeffs.iter().zip(&basis) {
            if c.is_zero() {
                continue;
            }
            for (vi, &bi) in v.iter_mut().zip(b) {
                *vi = ctx.mul_add(*c, bi, *vi);
            }
        }
        canonical_point(ctx, &v).unwrap()
    };
    let mut out = Vec::new();
    match basis.len() {
        0 => {}
        1 => {
            let v = canonical_point(ctx, &basis[0]).unwrap();
            if passes(&v) {
                out.push(v);
            }
        }
        2 => {
            // v = b0 + s b1 for s in the field, plus v = b1
            let mut g: Vec<FieldElem> = Vec::new();
            for q in higher {
                let h = q.restrict_along(&basis[0], &basis[1]);
                g = upoly::gcd(ctx, &g, &h);
            }
            let ss: Vec<FieldElem> = if g.is_empty() {
                ctx.elements().collect()
            } else {
                upoly::roots(ctx, &g).unwrap()
            };
            for s in ss {
                out.push(combine(&[FieldElem::ONE, s]));
            }
            let v = canonical_point(ctx, &basis[1]).unwrap();
            if passes(&v) {
                out.push(v);
            }
        }
        r => {
            for c in ProjectivePoints::new(ctx, r - 1) {
                let v = combine(&c);
                if passes(&v) {
                    out.push(v);
                }
            }
        }
    }
    out.sort();
    out
}

/// Number of Taylor forms that must vanish for `Y(m)`.
fn order_depth(m: Multiplicity, d: u32) -> usize {
    match m {
        Multiplicity::Finite(k) => k as usize - 1,
        Multiplicity::Infinite => d as usize,
    }
}

/// Rational flags of `Y_{F,m}` over `f.ctx()`.
pub fn for_each_flag<B>(
    f: &MultiPoly,
    m: Multiplicity,
    limit: u64,
    mut visit: impl FnMut(&Flag) -> ControlFlow<B>,
) -> Result<Option<B>> {
    check_order(m, f.d())?;
    let kmax = order_depth(m, f.d());
    for_each_point(f, limit, |p| {
        for v in tangent_directions(f, p, kmax) {
            let flag = Flag { p: p.clone(), v };
            visit(&flag)?;
        }
        ControlFlow::Continue(())
    })
}

fn embedded(f: &MultiPoly, ctx: &FieldCtx) -> Result<MultiPoly> {
    if f.ctx() == ctx {
        return Ok(f.clone());
    }
    let emb = crate::field::Embedding::new(f.ctx(), ctx)?;
    f.embed(&emb)
}

/// Rational points of `X_F`, `Y_{F,m}` or `Z_F` over `ctx`, which may be an
/// extension of the coefficient field of `f`.
pub fn enumerate_scheme(f: &MultiPoly, which: Scheme, ctx: &FieldCtx, limit: u64) -> Result<SchemeCount> {
    let g = embedded(f, ctx)?;
    let members = match which {
        Scheme::X => {
            let mut pts = Vec::new();
            for_each_point::<()>(&g, limit, |p| {
                pts.push(p.clone());
                ControlFlow::Continue(())
            })?;
            Members::Points(pts)
        }
        Scheme::Y(m) => {
            let mut flags = Vec::new();
            for_each_flag::<()>(&g, m, limit, |fl| {
                flags.push(fl.clone());
                ControlFlow::Continue(())
            })?;
            Members::Flags(flags)
        }
        Scheme::Z => Members::Lines(fano_lines(&g, limit)?),
    };
    let count = match &members {
        Members::Points(v) => v.len(),
        Members::Flags(v) => v.len(),
        Members::Lines(v) => v.len(),
    } as u64;
    Ok(SchemeCount { count, members })
}

/// Rational lines contained in `X_F`, sorted.
pub fn fano_lines(f: &MultiPoly, limit: u64) -> Result<Vec<Line>> {
    let ctx = f.ctx();
    let mut lines = BTreeSet::new();
    for_each_flag::<()>(f, Multiplicity::Infinite, limit, |fl| {
        lines.insert(fl.line(ctx));
        ControlFlow::Continue(())
    })?;
    Ok(lines.into_iter().collect())
}

/// Number of rational flags of `Y_{F,m}`.
pub fn count_y(f: &MultiPoly, m: Multiplicity, limit: u64) -> Result<u64> {
    let mut count = 0u64;
    for_each_flag::<()>(f, m, limit, |_| {
        count += 1;
        ControlFlow::Continue(())
    })?;
    Ok(count)
}

/// Number of rational points of `X_F`.
pub fn count_x(f: &MultiPoly, limit: u64) -> Result<u64> {
    let mut count = 0u64;
    for_each_point::<()>(f, limit, |_| {
        count += 1;
        ControlFlow::Continue(())
    })?;
    Ok(count)
}

/// Searches for a point of `Y_{F,m}` over `GF(q^j)`, `j = 1..=max_deg`.
/// Returns the first degree with a witness; `(false, None)` only means that
/// nothing was found within the bound.
pub fn nonempty_over_extensions(f: &MultiPoly, m: Multiplicity, max_deg: u32, limit: u64) -> Result<(bool, Option<u32>)> {
    if max_deg < 1 {
        return Err(Error::Precondition("max_deg must be at least 1".into()));
    }
    check_order(m, f.d())?;
    for j in 1..=max_deg {
        let (_, emb) = f.ctx().extension(j)?;
        let g = f.embed(&emb)?;
        if for_each_flag(&g, m, limit, |_| ControlFlow::Break(()))?.is_some() {
            return Ok((true, Some(j)));
        }
    }
    Ok((false, None))
}

pub fn default_limit() -> u64 {
    DEFAULT_ENUMERATION_LIMIT
}

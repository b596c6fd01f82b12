//! Dense matrices over a finite field and exact Gaussian elimination.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElem>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![FieldElem::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, FieldElem::ONE);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<FieldElem>>) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Arity { expected: cols, got: bad.len() });
        }
        let n = rows.len();
        Ok(Matrix { rows: n, cols, data: rows.into_iter().flatten().collect() })
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[Vec<FieldElem>]) -> Result<Self> {
        let rows = cols.first().map_or(0, |c| c.len());
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::Arity { expected: rows, got: c.len() });
            }
            for (i, &x) in c.iter().enumerate() {
                m.set(i, j, x);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> FieldElem {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, x: FieldElem) {
        self.data[i * self.cols + j] = x;
    }

    pub fn row(&self, i: usize) -> &[FieldElem] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<FieldElem> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<FieldElem>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// The first `k` rows.
    pub fn top_rows(&self, k: usize) -> Matrix {
        let k = k.min(self.rows);
        Matrix { rows: k, cols: self.cols, data: self.data[..k * self.cols].to_vec() }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a != b {
            for j in 0..self.cols {
                self.data.swap(a * self.cols + j, b * self.cols + j);
            }
        }
    }
}

/// Reduced row echelon form and pivot columns.
pub fn row_reduce(ctx: &FieldCtx, m: &Matrix) -> (Matrix, Vec<usize>) {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..a.cols {
        if r == a.rows {
            break;
        }
        let Some(pr) = (r..a.rows).find(|&i| !a.get(i, c).is_zero()) else { continue };
        a.swap_rows(r, pr);
        let inv = ctx.inv(a.get(r, c)).unwrap();
        for j in c..a.cols {
            a.set(r, j, ctx.mul(a.get(r, j), inv));
        }
        for i in 0..a.rows {
            if i == r {
                continue;
            }
            let f = a.get(i, c);
            if f.is_zero() {
                continue;
            }
            for j in c..a.cols {
                let v = ctx.sub(a.get(i, j), ctx.mul(f, a.get(r, j)));
                a.set(i, j, v);
            }
        }
        pivots.push(c);
        r += 1;
    }
    (a, pivots)
}

/// Exact rank by forward elimination.
pub fn rank(ctx: &FieldCtx, m: &Matrix) -> usize {
    let mut a = m.clone();
    let mut r = 0;
    for c in 0..a.cols {
        if r == a.rows {
            break;
        }
        let Some(pr) = (r..a.rows).find(|&i| !a.get(i, c).is_zero()) else { continue };
        a.swap_rows(r, pr);
        let inv = ctx.inv(a.get(r, c)).unwrap();
        for i in r + 1..a.rows {
            let f = a.get(i, c);
            if f.is_zero() {
                continue;
            }
            let f = ctx.mul(f, inv);
            for j in c..a.cols {
                let v = ctx.sub(a.get(i, j), ctx.mul(f, a.get(r, j)));
                a.set(i, j, v);
            }
        }
        r += 1;
    }
    r
}

pub fn determinant(ctx: &FieldCtx, m: &Matrix) -> Result<FieldElem> {
    if m.rows != m.cols {
        return Err(Error::Arity { expected: m.rows, got: m.cols });
    }
    let mut a = m.clone();
    let mut det = FieldElem::ONE;
    for c in 0..a.cols {
        let Some(pr) = (c..a.rows).find(|&i| !a.get(i, c).is_zero()) else { return Ok(FieldElem::ZERO) };
        if pr != c {
            a.swap_rows(c, pr);
            det = ctx.neg(det);
        }
        let pivot = a.get(c, c);
        det = ctx.mul(det, pivot);
        let inv = ctx.inv(pivot).unwrap();
        for i in c + 1..a.rows {
            let f = ctx.mul(a.get(i, c), inv);
            if f.is_zero() {
                continue;
            }
            for j in c..a.cols {
                let v = ctx.sub(a.get(i, j), ctx.mul(f, a.get(c, j)));
                a.set(i, j, v);
            }
        }
    }
    Ok(det)
}

pub fn inverse(ctx: &FieldCtx, m: &Matrix) -> Result<Matrix> {
    let n = m.rows;
    if n != m.cols {
        return Err(Error::SingularMatrix);
    }
    let mut aug = Matrix::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug.set(i, j, m.get(i, j));
        }
        aug.set(i, n + i, FieldElem::ONE);
    }
    let (red, pivots) = row_reduce(ctx, &aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return Err(Error::SingularMatrix);
    }
    let mut inv = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            inv.set(i, j, red.get(i, n + j));
        }
    }
    Ok(inv)
}

pub fn mul(ctx: &FieldCtx, a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::Arity { expected: a.cols, got: b.rows });
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let x = a.get(i, k);
            if x.is_zero() {
                continue;
            }
            for j in 0..b.cols {
                out.set(i, j, ctx.mul_add(x, b.get(k, j), out.get(i, j)));
            }
        }
    }
    Ok(out)
}

pub fn mul_vec(ctx: &FieldCtx, a: &Matrix, v: &[FieldElem]) -> Result<Vec<FieldElem>> {
    if a.cols != v.len() {
        return Err(Error::Arity { expected: a.cols, got: v.len() });
    }
    Ok((0..a.rows)
        .map(|i| a.row(i).iter().zip(v).fold(FieldElem::ZERO, |acc, (&x, &y)| ctx.mul_add(x, y, acc)))
        .collect())
}

/// Basis of the right null space `{x : m x = 0}`.
pub fn kernel(ctx: &FieldCtx, m: &Matrix) -> Vec<Vec<FieldElem>> {
    let (red, pivots) = row_reduce(ctx, m);
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![FieldElem::ZERO; m.cols];
            x[f] = FieldElem::ONE;
            for (r, &pc) in pivots.iter().enumerate() {
                x[pc] = ctx.neg(red.get(r, f));
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(ctx: &FieldCtx, rows: &[&[i64]]) -> Matrix {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| ctx.from_i64(x)).collect()).collect()).unwrap()
    }

    #[test]
    fn rank_examples() {
        let f = FieldCtx::prime(7).unwrap();
        assert_eq!(rank(&f, &Matrix::zeros(3, 4)), 0);
        assert_eq!(rank(&f, &Matrix::identity(5)), 5);
        // B~ for B = [[1,0],[0,1],[0,0]]
        let bt = mat(&f, &[&[1, 0, 0, 0], &[0, 1, 1, 0], &[0, 0, 0, 1]]);
        assert_eq!(rank(&f, &bt), 3);
        let bt = mat(&f, &[&[1, 0, 0, 0], &[2, 0, 1, 0], &[4, 0, 2, 0]]);
        assert_eq!(rank(&f, &bt), 2);
    }

    #[test]
    fn inverse_and_determinant() {
        let f = FieldCtx::prime(11).unwrap();
        let a = mat(&f, &[&[2, 3, 1], &[0, 1, 4], &[5, 0, 6]]);
        let inv = inverse(&f, &a).unwrap();
        assert_eq!(mul(&f, &a, &inv).unwrap(), Matrix::identity(3));
        assert!(!determinant(&f, &a).unwrap().is_zero());
        let s = mat(&f, &[&[1, 2], &[2, 4]]);
        assert_eq!(inverse(&f, &s), Err(Error::SingularMatrix));
        assert!(determinant(&f, &s).unwrap().is_zero());
    }

    #[test]
    fn kernel_vectors_are_annihilated() {
        let f = FieldCtx::new(3, 2).unwrap();
        let m = mat(&f, &[&[1, 2, 0, 1], &[0, 1, 1, 1]]);
        let ker = kernel(&f, &m);
        assert_eq!(ker.len(), 2);
        for v in &ker {
            assert!(mul_vec(&f, &m, v).unwrap().iter().all(|x| x.is_zero()));
        }
    }
}

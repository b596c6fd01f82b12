//! Plain-text polynomial files.
//!
//! ```text
//! poly n=2 d=3 field=7
//! 1 3 0 0
//! 1 0 3 0
//! 1 0 0 3
//! ```
//!
//! The header names the projective dimension, the degree and the field
//! (`p` or `p^k`). Each following line is one term `c e0 ... en`, where `c`
//! is an integer or comma-separated extension coordinates. Blank lines and
//! lines starting with `#` are ignored.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::mpoly::MultiPoly;

pub fn write_poly(f: &MultiPoly) -> String {
    let ctx = f.ctx();
    let mut out = format!("poly n={} d={} field={}\n", f.n(), f.d(), ctx.spec_string());
    for (e, c) in f.terms().rev() {
        out.push_str(&ctx.format(c));
        for x in e {
            write!(out, " {x}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_poly(text: &str) -> Result<MultiPoly> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Parse("empty polynomial file".into()))?;
    let mut words = header.split_whitespace();
    if words.next() != Some("poly") {
        return Err(Error::Parse(format!("expected `poly` header, got {header:?}")));
    }
    let (mut n, mut d, mut field) = (None, None, None);
    for w in words {
        let (key, val) = w.split_once('=').ok_or_else(|| Error::Parse(format!("bad header field {w:?}")))?;
        let bad = || Error::Parse(format!("bad header value {w:?}"));
        match key {
            "n" => n = Some(val.parse::<usize>().map_err(|_| bad())?),
            "d" => d = Some(val.parse::<u32>().map_err(|_| bad())?),
            "field" => field = Some(FieldCtx::parse_spec(val)?),
            _ => return Err(Error::Parse(format!("unknown header field {key:?}"))),
        }
    }
    let missing = |k: &str| Error::Parse(format!("header lacks {k}="));
    let n = n.ok_or_else(|| missing("n"))?;
    let d = d.ok_or_else(|| missing("d"))?;
    let ctx = field.ok_or_else(|| missing("field"))?;

    let mut seen = BTreeSet::new();
    let mut terms = Vec::new();
    for line in lines {
        let mut parts = line.split_whitespace();
        let c = ctx.parse_elem(parts.next().unwrap())?;
        let e = parts
            .map(|x| x.parse::<u32>().map_err(|_| Error::Parse(format!("bad exponent {x:?} in {line:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if !seen.insert(e.clone()) {
            return Err(Error::Parse(format!("repeated monomial in {line:?}")));
        }
        terms.push((e, c));
    }
    MultiPoly::new(&ctx, n, d, terms)
}

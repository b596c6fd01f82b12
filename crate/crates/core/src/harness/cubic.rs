//! For cubics in characteristic other than 3, `X_F` is smooth exactly when
//! `Y_{F,3}` has no degenerate flag. Degenerate flags are searched over
//! `GF(q^j)` and turned into singular points, which are verified by
//! evaluating all partial derivatives.

use std::ops::ControlFlow;

use serde_json::{json, Value};

use super::{capped, item_seeds, rng, ExperimentConfig, Report, ReportBuilder};
use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::flags::{for_each_flag, Flag, Multiplicity};
use crate::mpoly::{MultiPoly, PolyRing};
use crate::smoothness::{has_rational_singular_point, is_singular_point, plant_singular_form, singular_point_from_degenerate_flag, Classifier};

use super::sampling::Search;

fn precondition(cfg: &ExperimentConfig) -> Result<FieldCtx> {
    let ctx = cfg.ctx()?;
    if cfg.d != 3 {
        return Err(Error::Precondition(format!("{} needs d = 3, got {}", cfg.experiment, cfg.d)));
    }
    if ctx.characteristic() == 3 {
        return Err(Error::Precondition(format!("{} needs characteristic other than 3", cfg.experiment)));
    }
    Ok(ctx)
}

fn embedded(f: &MultiPoly, j: u32) -> Result<MultiPoly> {
    let (_, emb) = f.ctx().extension(j)?;
    f.embed(&emb)
}

/// Smallest `j` in `1..=bound` with a singular point of `X_F` over `GF(q^j)`.
fn singular_degree(f: &MultiPoly, bound: u32, limit: u64) -> Result<Search> {
    for j in 1..=bound {
        match capped(has_rational_singular_point(&embedded(f, j)?, limit))? {
            None => return Ok(Search::Capped(j)),
            Some(true) => return Ok(Search::Found(j)),
            Some(false) => {}
        }
    }
    Ok(Search::NotFound)
}

/// A degenerate flag of `Y_{F,3}` over the smallest `GF(q^j)`, `j <= bound`,
/// with `F` embedded there.
fn degenerate_flag(f: &MultiPoly, bound: u32, limit: u64) -> Result<(Search, Option<(MultiPoly, Flag)>)> {
    let m = Multiplicity::Finite(3);
    for j in 1..=bound {
        let g = embedded(f, j)?;
        let cls = Classifier::new(&g);
        let hit = for_each_flag(&g, m, limit, |fl| {
            if cls.classify(fl, m).expect("order checked").rank.expect("flag in Y") < 3 {
                ControlFlow::Break(fl.clone())
            } else {
                ControlFlow::Continue(())
            }
        });
        match capped(hit)? {
            None => return Ok((Search::Capped(j), None)),
            Some(Some(fl)) => return Ok((Search::Found(j), Some((g, fl)))),
            Some(None) => {}
        }
    }
    Ok((Search::NotFound, None))
}

fn fmt_point(ctx: &FieldCtx, pt: &[crate::field::FieldElem]) -> Vec<String> {
    pt.iter().map(|&c| ctx.format(c)).collect()
}

/// Extracts and verifies the singular point attached to a degenerate flag.
fn extract(g: &MultiPoly, fl: &Flag) -> Result<(bool, Value)> {
    let w = singular_point_from_degenerate_flag(g, fl)?;
    let ok = is_singular_point(g, &w.field, &w.point)?;
    let info = json!({
        "field": w.field.spec_string(),
        "point": fmt_point(&w.field, &w.point),
        "branch": w.branch,
    });
    Ok((ok, info))
}

fn degree_of(s: Search) -> Value {
    match s {
        Search::Found(j) => json!(j),
        Search::NotFound => Value::Null,
        Search::Capped(j) => json!(format!("capped at {j}")),
    }
}

/// Every nonzero cubic over the field: no form may have both a certified
/// smooth `X_F` and a degenerate flag, or a degenerate flag whose extracted
/// point is not singular.
pub(super) fn exhaustive(cfg: &ExperimentConfig) -> Result<Report> {
    let ctx = precondition(cfg)?;
    let mut rb = ReportBuilder::new(cfg);
    let ring = PolyRing::new(&ctx, cfg.n, 3)?;
    let limit = cfg.caps.max_flags;
    let (mut smooth, mut singular, mut undecided) = (0u64, 0u64, 0u64);
    let mut contradictions = Vec::new();
    for (item, f) in ring.enumerate(cfg.caps.max_polys)?.enumerate() {
        if rb.out_of_time() {
            break;
        }
        let sing = singular_degree(&f, cfg.ext_bound, limit)?;
        let (w, hit) = degenerate_flag(&f, cfg.ext_bound, limit)?;
        let mut extracted = Value::Null;
        let verdict = match (sing, w) {
            (Search::Capped(_), _) | (_, Search::Capped(_)) => {
                rb.cap("enumeration exceeds max_flags");
                "undecided"
            }
            (Search::NotFound, Search::NotFound) => "smooth",
            (Search::NotFound, Search::Found(_)) => "contradiction",
            (Search::Found(_), Search::NotFound) => "undecided",
            (Search::Found(_), Search::Found(_)) => {
                let (g, fl) = hit.as_ref().expect("flag found");
                let (ok, info) = extract(g, fl)?;
                extracted = info;
                if ok {
                    "singular"
                } else {
                    "contradiction"
                }
            }
        };
        match verdict {
            "smooth" => smooth += 1,
            "singular" => singular += 1,
            "undecided" => undecided += 1,
            _ => contradictions.push(item as u64),
        }
        rb.record(
            item as u64,
            json!({ "singular_degree": degree_of(sing), "degenerate_flag_degree": degree_of(w), "verdict": verdict, "extracted": extracted }),
        );
    }
    rb.stat("smooth", smooth);
    rb.stat("singular", singular);
    rb.stat("undecided", undecided);
    rb.check("no_contradictions", contradictions.is_empty(), &contradictions, "none");
    Ok(rb.finish())
}

/// Cubics with a planted rational singular point: a degenerate flag exists
/// and yields a verified singular point.
pub(super) fn planted(cfg: &ExperimentConfig) -> Result<Report> {
    let ctx = precondition(cfg)?;
    let mut rb = ReportBuilder::new(cfg);
    let mut rng = rng(cfg.seed);
    let mut verified = 0u64;
    for item in 0..cfg.samples {
        if rb.out_of_time() {
            break;
        }
        let (f, p) = plant_singular_form(&ctx, cfg.n, 3, &mut rng)?;
        if !is_singular_point(&f, &ctx, &p)? {
            return Err(Error::Inconsistent("planted point is not singular".into()));
        }
        let (w, hit) = degenerate_flag(&f, cfg.ext_bound, cfg.caps.max_flags)?;
        if let Search::Capped(j) = w {
            rb.cap(format!("enumeration over degree {j} exceeds max_flags"));
        }
        let (ok, info) = match &hit {
            Some((g, fl)) => extract(g, fl)?,
            None => (false, Value::Null),
        };
        verified += ok as u64;
        rb.record(item, json!({ "planted": fmt_point(&ctx, &p), "flag_degree": degree_of(w), "verified": ok, "extracted": info }));
    }
    rb.rate_check("verified_singular_points", verified, cfg.samples, cfg.threshold.unwrap_or(1.0), false);
    Ok(rb.finish())
}

/// Random cubics certified smooth up to `cert_bound` have no degenerate flag
/// up to `ext_bound`.
pub(super) fn smooth(cfg: &ExperimentConfig) -> Result<Report> {
    let ctx = precondition(cfg)?;
    let mut rb = ReportBuilder::new(cfg);
    let ring = PolyRing::new(&ctx, cfg.n, 3)?;
    let (mut accepted, mut rejected, mut clean) = (0u64, 0u64, 0u64);
    let max_attempts = 20 * cfg.samples;
    for (attempt, seed) in item_seeds(cfg.seed).enumerate() {
        if accepted == cfg.samples || rb.out_of_time() {
            break;
        }
        if attempt as u64 == max_attempts {
            rb.cap("too many singular samples");
            break;
        }
        let f = ring.sample(seed);
        match singular_degree(&f, cfg.cert_bound, cfg.caps.max_flags)? {
            Search::Found(_) => {
                rejected += 1;
                continue;
            }
            Search::Capped(j) => {
                rb.cap(format!("certification over degree {j} exceeds max_flags"));
                break;
            }
            Search::NotFound => {}
        }
        let (w, _) = degenerate_flag(&f, cfg.ext_bound, cfg.caps.max_flags)?;
        if let Search::Capped(j) = w {
            rb.cap(format!("enumeration over degree {j} exceeds max_flags"));
        }
        let none = w == Search::NotFound;
        clean += none as u64;
        rb.record(accepted, json!({ "seed": seed, "degenerate_flag_degree": degree_of(w) }));
        accepted += 1;
    }
    rb.stat("certified_smooth", accepted);
    rb.stat("rejected_singular", rejected);
    rb.rate_check("no_degenerate_flag", clean, cfg.samples, cfg.threshold.unwrap_or(0.99), false);
    Ok(rb.finish())
}

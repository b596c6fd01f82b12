//! Codimensions estimated from point counts: if a locus of dimension
//! `dim - c` in an ambient space of dimension `dim` has `≈ C q^{dim - c}`
//! points, the least-squares slope of `log #locus` against `log q` rounds to
//! `dim - c`. Counts are taken on affine cones (all nonzero matrices, all
//! coordinate tuples of a fiber), which does not change codimensions.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use serde_json::json;

use super::{capped, ExperimentConfig, Report, ReportBuilder};
use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::flags::{count_flags, for_each_flag, Multiplicity};
use crate::mpoly::PolyRing;
use crate::smoothness::{count_delta, count_w_fiber, Classifier, FlagClass, WFiberCounts};

/// Least-squares slope of `ln count` against `ln q`; `None` with fewer than
/// two distinct `q` or a zero count.
pub fn fit_exponent(points: &[(u64, u64)]) -> Option<f64> {
    if points.iter().any(|&(_, c)| c == 0) {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|&(q, _)| (q as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, c)| (c as f64).ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx < 1e-12 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

fn fitted_codim(dim: u32, points: &[(u64, u64)]) -> (Option<f64>, Option<i64>) {
    let slope = fit_exponent(points);
    (slope, slope.map(|s| dim as i64 - s.round() as i64))
}

fn contexts(cfg: &ExperimentConfig) -> Result<Vec<FieldCtx>> {
    let specs = if cfg.fields.is_empty() { std::slice::from_ref(&cfg.field) } else { &cfg.fields[..] };
    specs.iter().map(|s| FieldCtx::parse_spec(s)).collect()
}

/// `codim-delta`: the codimensions of `Δ(l, r)` and `Δ⁰(l, r)` are
/// `min{r, 2r - l + 1}` and `2r - l + 1` for `3 <= l <= 2r`.
pub(super) fn delta(cfg: &ExperimentConfig) -> Result<Report> {
    let (l, r) = (cfg.l, cfg.r);
    if !(3 <= l && l <= 2 * r) {
        return Err(Error::Precondition(format!("need 3 <= l <= 2r, got l = {l}, r = {r}")));
    }
    let mut rb = ReportBuilder::new(cfg);
    let dim = (l * r) as u32;
    let (mut pd, mut pd0) = (Vec::new(), Vec::new());
    for (item, ctx) in contexts(cfg)?.iter().enumerate() {
        if rb.out_of_time() {
            return Ok(rb.finish());
        }
        let q = ctx.order();
        let Some(c) = capped(count_delta(l, r, ctx, cfg.caps.max_polys))? else {
            rb.cap(format!("q = {q}: matrices exceed max_polys"));
            return Ok(rb.finish());
        };
        pd.push((q, c.affine_delta));
        pd0.push((q, c.affine_delta0));
        rb.record(item as u64, json!({ "q": q, "delta": c.affine_delta, "delta0": c.affine_delta0, "projective_delta": c.projective_delta, "projective_delta0": c.projective_delta0 }));
    }
    let want = r.min(2 * r + 1 - l) as i64;
    let want0 = (2 * r + 1 - l) as i64;
    for (name, pts, want) in [("codim_delta", &pd, want), ("codim_delta0", &pd0, want0)] {
        let (slope, codim) = fitted_codim(dim, pts);
        rb.check(name, codim == Some(want), json!({ "slope": slope, "codim": codim }), want.to_string());
    }
    rb.stat("ambient_dim", dim);
    Ok(rb.finish())
}

/// Codimensions of `W_{d,m}` and `W⁰_{d,m}` in `Y_{d,m}` where the paper
/// states them; `divisible` means the characteristic divides `m`.
pub fn expected_w_codim(n: usize, m: usize, divisible: bool) -> (Option<usize>, Option<usize>) {
    match m {
        1 => (Some(n), None),
        2 => (Some(n - 1), None),
        _ if m == 2 * n - 1 && !divisible => (Some(1), None),
        _ if 3 <= m && m + 2 <= 2 * n => {
            let w0 = if divisible { 2 * n - m - 1 } else { 2 * n - m };
            (Some((n - 1).min(w0)), Some(w0))
        }
        _ => (None, None),
    }
}

/// Exhaustive `(F, flag)` sweep: numbers of pairs in `Y_{F,m}` and in each
/// degenerate class.
fn exhaustive_pairs(ctx: &FieldCtx, n: usize, d: u32, m: u32, cfg: &ExperimentConfig) -> Result<[u64; 4]> {
    let ring = PolyRing::new(ctx, n, d)?;
    let mm = Multiplicity::Finite(m);
    let mut out = [0u64; 4];
    // F = 0 lies in every Y and is degenerate at every flag: J_m = 0
    let all = count_flags(ctx.order(), n);
    out[0] += all;
    out[1] += all;
    if m >= 2 {
        out[2] += all;
    } else {
        out[3] += all;
    }
    for f in ring.enumerate(cfg.caps.max_polys)? {
        let cls = Classifier::new(&f);
        for_each_flag::<()>(&f, mm, cfg.caps.max_flags, |fl| {
            out[0] += 1;
            match cls.classify(fl, mm).expect("order checked").class {
                FlagClass::W2 => {
                    out[1] += 1;
                    out[2] += 1;
                }
                FlagClass::W0 => {
                    out[1] += 1;
                    out[3] += 1;
                }
                _ => {}
            }
            ControlFlow::Continue(())
        })?;
    }
    Ok(out)
}

/// `codim-w`: codimensions of `W_{d,m}` and `W⁰_{d,m}` by characteristic,
/// counted on one fiber `Y_{d,m}(p, L)`.
pub(super) fn w_locus(cfg: &ExperimentConfig) -> Result<Report> {
    let m = cfg.finite_m()? as usize;
    let n = cfg.n;
    crate::flags::check_order(cfg.m, cfg.d)?;
    let mut rb = ReportBuilder::new(cfg);
    let dim = (1 + m * (n - 1)) as u32;
    rb.stat("fiber_dim", dim);
    let mut by_char: BTreeMap<u64, Vec<(u64, WFiberCounts)>> = BTreeMap::new();
    for (item, ctx) in contexts(cfg)?.iter().enumerate() {
        if rb.out_of_time() {
            return Ok(rb.finish());
        }
        let q = ctx.order();
        let Some(c) = capped(count_w_fiber(ctx, n, m, cfg.caps.max_polys))? else {
            rb.cap(format!("q = {q}: fiber exceeds max_polys"));
            return Ok(rb.finish());
        };
        let mut rec = json!({ "q": q, "char": ctx.characteristic(), "total": c.total, "w": c.w, "w2": c.w2, "w0": c.w0 });
        if cfg.exhaustive {
            let big_n = PolyRing::new(ctx, n, cfg.d)?.dimension() as u32;
            let free = big_n as i64 - m as i64 - dim as i64;
            if free < 0 {
                return Err(Error::Precondition("fiber coordinates exceed the coefficients of F".into()));
            }
            let Some(pairs) = capped(exhaustive_pairs(ctx, n, cfg.d, m as u32, cfg))? else {
                rb.cap(format!("q = {q}: exhaustive sweep exceeds max_polys"));
                return Ok(rb.finish());
            };
            let scale = count_flags(q, n) * q.pow(free as u32);
            let predicted = [c.total, c.w, c.w2, c.w0].map(|x| x * scale);
            rb.check(
                &format!("exhaustive_matches_fiber_q{q}"),
                pairs == predicted,
                json!({ "y": pairs[0], "w": pairs[1], "w2": pairs[2], "w0": pairs[3] }),
                format!("{predicted:?}"),
            );
            rec["pairs_y"] = json!(pairs[0]);
            rec["pairs_w"] = json!(pairs[1]);
        }
        rb.record(item as u64, rec);
        by_char.entry(ctx.characteristic()).or_default().push((q, c));
    }
    let mut w0_codims = Vec::new();
    for (p, rows) in &by_char {
        let divisible = m as u64 % p == 0;
        let (want_w, want_w0) = expected_w_codim(n, m, divisible);
        let w_pts: Vec<(u64, u64)> = rows.iter().map(|(q, c)| (*q, c.w)).collect();
        let w0_pts: Vec<(u64, u64)> = rows.iter().map(|(q, c)| (*q, c.w0)).collect();
        let (sw, cw) = fitted_codim(dim, &w_pts);
        let (sw0, cw0) = fitted_codim(dim, &w0_pts);
        rb.stat(&format!("char{p}"), json!({ "divisible": divisible, "slope_w": sw, "codim_w": cw, "slope_w0": sw0, "codim_w0": cw0 }));
        if rows.len() < 2 {
            rb.note(format!("characteristic {p} has a single field; no fit"));
            continue;
        }
        if let Some(want) = want_w {
            rb.check(&format!("codim_w_char{p}"), cw == Some(want as i64), json!({ "slope": sw, "codim": cw }), want.to_string());
        }
        if let Some(want) = want_w0 {
            rb.check(&format!("codim_w0_char{p}"), cw0 == Some(want as i64), json!({ "slope": sw0, "codim": cw0 }), want.to_string());
            w0_codims.push((divisible, cw0));
        }
    }
    let div: Vec<_> = w0_codims.iter().filter(|x| x.0).map(|x| x.1).collect();
    let prime: Vec<_> = w0_codims.iter().filter(|x| !x.0).map(|x| x.1).collect();
    if let (Some(&Some(a)), Some(&Some(b))) = (div.first(), prime.first()) {
        rb.check("w0_char_contrast", b - a == 1, json!({ "divisible": a, "prime_to_char": b }), "differ by 1");
    } else if !div.is_empty() && !prime.is_empty() {
        rb.check("w0_char_contrast", false, json!({ "divisible": div, "prime_to_char": prime }), "differ by 1");
    }
    if rb.checks.is_empty() {
        rb.note("no codimension formula applies to these parameters");
    }
    Ok(rb.finish())
}

#[cfg(test)]
mod tests {
    use super::super::{run, Experiment, ExperimentConfig, Outcome};
    use super::*;

    #[test]
    fn exact_fits() {
        let pts: Vec<(u64, u64)> = [2u64, 3, 5].iter().map(|&q| (q, 7 * q.pow(4))).collect();
        assert!((fit_exponent(&pts).unwrap() - 4.0).abs() < 1e-9);
        assert_eq!(fit_exponent(&[(2, 5)]), None);
        assert_eq!(fit_exponent(&[(2, 5), (3, 0)]), None);
    }

    #[test]
    fn paper_formulas() {
        assert_eq!(expected_w_codim(3, 4, false), (Some(2), Some(2)));
        assert_eq!(expected_w_codim(3, 4, true), (Some(1), Some(1)));
        assert_eq!(expected_w_codim(3, 5, false), (Some(1), None));
        assert_eq!(expected_w_codim(3, 5, true), (None, None));
        assert_eq!(expected_w_codim(4, 3, false), (Some(3), Some(5)));
        assert_eq!(expected_w_codim(2, 1, true), (Some(2), None));
    }

    #[test]
    fn delta_shapes() {
        for (l, r) in [(3, 2), (4, 2)] {
            let cfg = ExperimentConfig { l, r, ..ExperimentConfig::preset(Experiment::CodimDelta) };
            let rep = run(&cfg).unwrap();
            assert_eq!(rep.outcome, Outcome::Pass, "{}", rep.to_json());
        }
        let cfg = ExperimentConfig { l: 5, r: 2, ..ExperimentConfig::preset(Experiment::CodimDelta) };
        assert!(run(&cfg).is_err());
    }

    #[test]
    fn tangent_flags_of_plane_cubics_exhaustively() {
        // W_{3,1} has codimension n = 2; the sweep over all (F, flag) agrees with the fiber count
        let cfg = ExperimentConfig {
            n: 2,
            d: 3,
            m: Multiplicity::Finite(1),
            fields: vec!["2".into(), "3".into()],
            exhaustive: true,
            ..ExperimentConfig::preset(Experiment::CodimW)
        };
        let rep = run(&cfg).unwrap();
        assert_eq!(rep.outcome, Outcome::Pass, "{}", rep.to_json());
        assert!(rep.check("exhaustive_matches_fiber_q3").unwrap().passed);
    }

    #[test]
    fn exhaustive_sweep_for_flexes() {
        let cfg = ExperimentConfig {
            n: 2,
            d: 3,
            m: Multiplicity::Finite(3),
            fields: vec!["2".into()],
            exhaustive: true,
            ..ExperimentConfig::preset(Experiment::CodimW)
        };
        let rep = run(&cfg).unwrap();
        assert!(rep.check("exhaustive_matches_fiber_q2").unwrap().passed, "{}", rep.to_json());
    }
}

//! Experiments over uniformly sampled forms: emptiness and non-emptiness of
//! `Y_{F,m}` and `Y_{F,∞}`, and smoothness with point-count scaling.

use std::ops::ControlFlow;

use serde_json::json;

use super::{capped, item_seeds, Experiment, ExperimentConfig, Report, ReportBuilder};
use crate::error::{Error, Result};
use crate::flags::{count_points, fano_lines, for_each_flag, Multiplicity};
use crate::mpoly::{MultiPoly, PolyRing};
use crate::smoothness::survey_y;

/// Result of searching `GF(q^j)` for a flag of `Y_{F,m}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Search {
    Found(u32),
    NotFound,
    /// The enumeration over this degree exceeded the caps.
    Capped(u32),
}

impl Search {
    fn degree(self) -> Option<u32> {
        match self {
            Search::Found(j) => Some(j),
            _ => None,
        }
    }
}

pub(crate) fn search_degrees(f: &MultiPoly, m: Multiplicity, degrees: std::ops::RangeInclusive<u32>, limit: u64) -> Result<Search> {
    for j in degrees {
        let (_, emb) = f.ctx().extension(j)?;
        let g = f.embed(&emb)?;
        match capped(for_each_flag(&g, m, limit, |_| ControlFlow::Break(())))? {
            None => return Ok(Search::Capped(j)),
            Some(Some(())) => return Ok(Search::Found(j)),
            Some(None) => {}
        }
    }
    Ok(Search::NotFound)
}

fn order(cfg: &ExperimentConfig) -> Result<Multiplicity> {
    match cfg.experiment {
        Experiment::FanoI | Experiment::FanoII | Experiment::FanoIII => Ok(Multiplicity::Infinite),
        _ => {
            let m = cfg.finite_m()?;
            crate::flags::check_order(cfg.m, cfg.d)?;
            Ok(Multiplicity::Finite(m))
        }
    }
}

fn expected_dim(cfg: &ExperimentConfig, m: Multiplicity) -> i64 {
    let rows = match m {
        Multiplicity::Finite(k) => k as i64,
        Multiplicity::Infinite => cfg.d as i64 + 1,
    };
    2 * cfg.n as i64 - 1 - rows
}

fn fano_range(cfg: &ExperimentConfig, empty: bool) -> Result<()> {
    let (n, d) = (cfg.n as u32, cfg.d);
    let ok = if empty { d + 2 >= 2 * n } else { d + 3 <= 2 * n };
    if ok {
        Ok(())
    } else {
        let need = if empty { "d >= 2n - 2" } else { "d <= 2n - 3" };
        Err(Error::Precondition(format!("{} needs {need}, got n = {n}, d = {d}", cfg.experiment)))
    }
}

/// `gensm-i` and `fano-i`: the fraction of sampled `F` with a flag over some
/// `GF(q^j)`, `j <= ext_bound`, must stay below the threshold.
pub(super) fn emptiness(cfg: &ExperimentConfig) -> Result<Report> {
    let m = order(cfg)?;
    if cfg.experiment == Experiment::FanoI {
        fano_range(cfg, true)?;
    }
    let mut rb = ReportBuilder::new(cfg);
    let ring = PolyRing::new(&cfg.ctx()?, cfg.n, cfg.d)?;
    let dim = expected_dim(cfg, m);
    rb.stat("expected_dim", dim);
    if dim >= 0 {
        rb.note(format!("expected dimension {dim} is not negative, so emptiness is not predicted"));
    }
    let (mut done, mut nonempty) = (0u64, 0u64);
    for (item, seed) in item_seeds(cfg.seed).take(cfg.samples as usize).enumerate() {
        if rb.out_of_time() {
            break;
        }
        let f = ring.sample(seed);
        let s = search_degrees(&f, m, 1..=cfg.ext_bound, cfg.caps.max_flags)?;
        if let Search::Capped(j) = s {
            rb.cap(format!("enumeration over degree {j} exceeds max_flags"));
        } else {
            done += 1;
        }
        if s.degree().is_some() {
            nonempty += 1;
        }
        rb.record(item as u64, json!({ "seed": seed, "witness_degree": s.degree(), "capped": matches!(s, Search::Capped(_)) }));
    }
    rb.stat("decided", done);
    rb.stat("nonempty", nonempty);
    rb.rate_check("nonempty_fraction", nonempty, cfg.samples, cfg.threshold.unwrap_or(0.05), true);
    Ok(rb.finish())
}

/// `gensm-ii` and `fano-ii`: every sampled `F` should have a witness within
/// `ext_bound`; the others are escalated up to `escalation_bound`.
pub(super) fn nonemptiness(cfg: &ExperimentConfig) -> Result<Report> {
    let m = order(cfg)?;
    let dim = expected_dim(cfg, m);
    if cfg.experiment == Experiment::FanoII {
        fano_range(cfg, false)?;
    } else if dim < 0 {
        return Err(Error::Precondition(format!("gensm-ii needs m <= 2n - 1, got m = {m}")));
    }
    let mut rb = ReportBuilder::new(cfg);
    let ring = PolyRing::new(&cfg.ctx()?, cfg.n, cfg.d)?;
    rb.stat("expected_dim", dim);
    let mut found = 0u64;
    let mut by_degree = std::collections::BTreeMap::<u32, u64>::new();
    let mut escalation = Vec::new();
    for (item, seed) in item_seeds(cfg.seed).take(cfg.samples as usize).enumerate() {
        if rb.out_of_time() {
            break;
        }
        let f = ring.sample(seed);
        let s = search_degrees(&f, m, 1..=cfg.ext_bound, cfg.caps.max_flags)?;
        let mut escalated = None;
        match s {
            Search::Found(j) => {
                found += 1;
                *by_degree.entry(j).or_default() += 1;
            }
            Search::Capped(j) => rb.cap(format!("enumeration over degree {j} exceeds max_flags")),
            Search::NotFound => {
                let e = search_degrees(&f, m, cfg.ext_bound + 1..=cfg.escalation_bound, cfg.caps.max_flags)?;
                let result = match e {
                    Search::Found(j) => json!({ "found_at": j }),
                    Search::NotFound => json!("none"),
                    Search::Capped(j) => {
                        rb.cap(format!("escalation to degree {j} exceeds max_flags"));
                        json!({ "capped_at": j })
                    }
                };
                escalation.push(json!({ "item": item, "seed": seed, "result": result }));
                escalated = Some(result);
            }
        }
        rb.record(item as u64, json!({ "seed": seed, "witness_degree": s.degree(), "escalation": escalated }));
    }
    rb.stat("witness_degrees", &by_degree);
    rb.stat("escalation_log", &escalation);
    rb.rate_check("witness_fraction", found, cfg.samples, cfg.threshold.unwrap_or(0.99), false);
    Ok(rb.finish())
}

/// Window `[q^D / 4, 9 q^D]` for `#Y(F_q)`.
fn in_window(count: u64, q: u64, dim: u32) -> bool {
    let qd = (q as f64).powi(dim as i32);
    (count as f64) >= qd / 4.0 && (count as f64) <= 9.0 * qd
}

/// `gensm-iii`: all rational flags of `Y_{F,m}` are smooth and their number
/// is of order `q^{2n-m-1}`.
pub(super) fn smoothness(cfg: &ExperimentConfig) -> Result<Report> {
    let m = order(cfg)?;
    let k = cfg.finite_m()?;
    let ctx = cfg.ctx()?;
    if k as u64 % ctx.characteristic() == 0 {
        return Err(Error::Precondition(format!("m = {k} is divisible by the characteristic")));
    }
    let dim = expected_dim(cfg, m);
    if dim < 0 {
        return Err(Error::Precondition(format!("expected dimension {dim} is negative")));
    }
    let dim = dim as u32;
    let q = ctx.order();
    let mut rb = ReportBuilder::new(cfg);
    let ring = PolyRing::new(&ctx, cfg.n, cfg.d)?;
    rb.stat("expected_dim", dim);
    rb.note("the count window [q^D/4, 9 q^D] is a heuristic tolerance");
    let (mut smooth, mut window) = (0u64, 0u64);
    for (item, seed) in item_seeds(cfg.seed).take(cfg.samples as usize).enumerate() {
        if rb.out_of_time() {
            break;
        }
        let f = ring.sample(seed);
        let Some(s) = capped(survey_y(&f, m, cfg.caps.max_flags))? else {
            rb.cap("point enumeration exceeds max_flags");
            break;
        };
        let ok = s.degenerate() == 0;
        let w = in_window(s.count, q, dim);
        smooth += ok as u64;
        window += w as u64;
        rb.record(item as u64, json!({ "seed": seed, "count": s.count, "smooth": s.smooth, "w2": s.w2, "w0": s.w0, "in_window": w }));
    }
    rb.rate_check("all_flags_smooth", smooth, cfg.samples, cfg.threshold.unwrap_or(0.95), false);
    rb.rate_check("count_in_window", window, cfg.samples, cfg.count_threshold.unwrap_or(0.90), false);
    Ok(rb.finish())
}

/// `fano-iii`: `#Y_{F,∞} = (q + 1) #Z_F` for every sample and all flags of
/// `Y_{F,∞}` are smooth for most.
pub(super) fn fano_smoothness(cfg: &ExperimentConfig) -> Result<Report> {
    fano_range(cfg, false)?;
    let ctx = cfg.ctx()?;
    let q = ctx.order();
    let mut rb = ReportBuilder::new(cfg);
    let ring = PolyRing::new(&ctx, cfg.n, cfg.d)?;
    rb.stat("expected_dim", expected_dim(cfg, Multiplicity::Infinite));
    let (mut smooth, mut bundle_ok, mut done) = (0u64, 0u64, 0u64);
    let mut bad = Vec::new();
    for (item, seed) in item_seeds(cfg.seed).take(cfg.samples as usize).enumerate() {
        if rb.out_of_time() {
            break;
        }
        let f = ring.sample(seed);
        let lines = capped(fano_lines(&f, cfg.caps.max_flags))?;
        let survey = capped(survey_y(&f, Multiplicity::Infinite, cfg.caps.max_flags))?;
        let (Some(lines), Some(s)) = (lines, survey) else {
            rb.cap("point enumeration exceeds max_flags");
            break;
        };
        done += 1;
        let z = lines.len() as u64;
        let bundle = s.count == (q + 1) * z;
        bundle_ok += bundle as u64;
        if !bundle {
            bad.push(seed);
        }
        smooth += (s.degenerate() == 0) as u64;
        rb.record(item as u64, json!({ "seed": seed, "lines": z, "flags": s.count, "degenerate": s.degenerate() }));
    }
    rb.check("bundle_identity", bundle_ok == done, json!({ "holds": bundle_ok, "failing_seeds": bad }), format!("all {done}"));
    rb.rate_check("all_flags_smooth", smooth, cfg.samples, cfg.threshold.unwrap_or(0.95), false);
    rb.stat("points_of_p1", count_points(q, 1));
    Ok(rb.finish())
}

#[cfg(test)]
mod tests {
    use super::super::{run, Experiment, ExperimentConfig, Outcome};
    use super::*;
    use crate::field::FieldCtx;

    #[test]
    fn flexes_found_over_small_extensions() {
        let cfg = ExperimentConfig { samples: 20, ..ExperimentConfig::preset(Experiment::GensmII) };
        let r = run(&cfg).unwrap();
        assert_eq!(r.outcome, Outcome::Pass, "{}", r.to_json());
    }

    #[test]
    fn hyperflexes_rare() {
        let cfg = ExperimentConfig { field: "31".into(), samples: 20, ext_bound: 1, ..ExperimentConfig::preset(Experiment::GensmI) };
        let r = run(&cfg).unwrap();
        assert_eq!(r.outcome, Outcome::Pass, "{}", r.to_json());
    }

    #[test]
    fn tangent_flags_scale_like_q() {
        let cfg = ExperimentConfig { field: "31".into(), samples: 20, ..ExperimentConfig::preset(Experiment::GensmIII) };
        let r = run(&cfg).unwrap();
        assert_eq!(r.outcome, Outcome::Pass, "{}", r.to_json());
        let cfg = ExperimentConfig { m: Multiplicity::Finite(1), ..cfg };
        let r = run(&cfg).unwrap();
        assert_eq!(r.outcome, Outcome::Pass, "{}", r.to_json());
    }

    #[test]
    fn quadric_surfaces() {
        let cfg = ExperimentConfig { field: "53".into(), samples: 10, ..ExperimentConfig::preset(Experiment::FanoIII) };
        let r = run(&cfg).unwrap();
        assert_eq!(r.outcome, Outcome::Pass, "{}", r.to_json());
        let cfg = ExperimentConfig { samples: 20, ..ExperimentConfig::preset(Experiment::FanoII) };
        assert_eq!(run(&cfg).unwrap().outcome, Outcome::Pass);
    }

    #[test]
    fn smooth_quadric_has_two_rulings() {
        let ctx = FieldCtx::prime(5).unwrap();
        // x0 x1 - x2 x3
        let f = MultiPoly::from_ints(&ctx, 3, 2, &[(1, &[1, 1, 0, 0]), (-1, &[0, 0, 1, 1])]).unwrap();
        assert_eq!(fano_lines(&f, u64::MAX).unwrap().len(), 12);
        let s = survey_y(&f, Multiplicity::Infinite, u64::MAX).unwrap();
        assert_eq!((s.count, s.smooth), (72, 72));
    }

    #[test]
    fn preconditions() {
        let bad = [
            ExperimentConfig { d: 4, ..ExperimentConfig::preset(Experiment::FanoII) },
            ExperimentConfig { n: 3, d: 2, ..ExperimentConfig::preset(Experiment::FanoI) },
            ExperimentConfig { m: Multiplicity::Finite(5), d: 5, ..ExperimentConfig::preset(Experiment::GensmII) },
            ExperimentConfig { field: "2".into(), ..ExperimentConfig::preset(Experiment::GensmIII) },
            ExperimentConfig { m: Multiplicity::Finite(4), ..ExperimentConfig::preset(Experiment::GensmIII) },
        ];
        for cfg in bad {
            assert!(run(&cfg).is_err(), "{:?}", cfg.experiment);
        }
    }

    #[test]
    fn search_reports_caps() {
        let ctx = FieldCtx::prime(5).unwrap();
        let f = PolyRing::new(&ctx, 2, 3).unwrap().sample(1);
        assert_eq!(search_degrees(&f, Multiplicity::Finite(3), 1..=2, 10).unwrap(), Search::Capped(1));
    }
}

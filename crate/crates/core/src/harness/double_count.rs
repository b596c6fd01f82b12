//! Each flag imposes `m` independent linear conditions on the coefficients
//! of `F`, so summing `#Y_{F,m}(F_q)` over all coefficient vectors gives
//! `#flags · q^{N-m}`. The sweep tallies, for every flag, how many `F` meet
//! it with each multiplicity, which yields every `m` at once.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use serde_json::json;

use super::{ExperimentConfig, Report, ReportBuilder};
use crate::error::Result;
use crate::flags::{count_flags, enumerate_flags, for_each_flag, multiplicity, Flag, Multiplicity};
use crate::mpoly::PolyRing;

pub(super) fn run(cfg: &ExperimentConfig) -> Result<Report> {
    let mut rb = ReportBuilder::new(cfg);
    let ctx = cfg.ctx()?;
    let ring = PolyRing::new(&ctx, cfg.n, cfg.d)?;
    let d = cfg.d as usize;
    let q = ctx.order();
    let big_n = ring.dimension() as u32;
    let total = q.checked_pow(big_n).filter(|&t| t <= cfg.caps.max_polys);
    let Some(total) = total else {
        rb.cap(format!("q^{big_n} coefficient vectors exceed max_polys"));
        return Ok(rb.finish());
    };
    let flags: Vec<Flag> = enumerate_flags(&ctx, cfg.n, cfg.caps.max_flags)?.collect();
    let index: BTreeMap<&Flag, usize> = flags.iter().enumerate().map(|(i, f)| (f, i)).collect();
    // hist[flag][k]: forms meeting the flag with multiplicity exactly k (k = d + 1 for infinity)
    let mut hist = vec![vec![0u64; d + 2]; flags.len()];
    // F = 0 contains every flag
    for h in hist.iter_mut() {
        h[d + 1] += 1;
    }
    for f in ring.enumerate(cfg.caps.max_polys)? {
        if rb.out_of_time() {
            return Ok(rb.finish());
        }
        for_each_flag::<()>(&f, Multiplicity::Finite(1), cfg.caps.max_flags, |fl| {
            let k = match multiplicity(&f, fl) {
                Multiplicity::Finite(k) => k as usize,
                Multiplicity::Infinite => d + 1,
            };
            hist[index[fl]][k] += 1;
            ControlFlow::Continue(())
        })?;
    }
    // at_least[flag][k] = #F with multiplicity >= k
    let at_least: Vec<Vec<u64>> = hist
        .iter()
        .map(|h| {
            let mut acc = vec![0u64; d + 2];
            let mut run = 0;
            for k in (0..=d + 1).rev() {
                run += h[k];
                acc[k] = run;
            }
            acc
        })
        .collect();
    let nflags = flags.len() as u64;
    rb.stat("coefficient_vectors", total);
    rb.stat("flags", nflags);
    rb.stat("N", big_n);
    let orders: Vec<(Multiplicity, usize, u32)> = (1..=cfg.d)
        .map(|k| (Multiplicity::Finite(k), k as usize, k))
        .chain(std::iter::once((Multiplicity::Infinite, d + 1, cfg.d + 1)))
        .collect();
    let mut sums = Vec::new();
    for (item, &(m, slot, conditions)) in orders.iter().enumerate() {
        let fiber = q.pow(big_n - conditions);
        let lhs: u64 = at_least.iter().map(|a| a[slot]).sum();
        let rhs = nflags * fiber;
        let bad = flags.iter().zip(&at_least).find(|(_, a)| a[slot] != fiber);
        rb.record(item as u64, json!({ "m": m, "sum_y": lhs, "flags_times_fiber": rhs, "fiber": fiber }));
        let observed = json!({ "sum_y": lhs, "counterexample_flag": bad.map(|(fl, a)| json!({ "flag": fl, "count": a[slot] })) });
        let name = if m == cfg.m { "double_count".to_string() } else { format!("double_count_m{m}") };
        rb.check(&name, lhs == rhs && bad.is_none(), observed, format!("{nflags}*{q}^{} = {rhs}", big_n - conditions));
        sums.push(lhs);
    }
    let decreasing = sums.windows(2).all(|w| w[0] > w[1]);
    rb.check("strictly_decreasing_in_m", decreasing, &sums, "strictly decreasing");
    if flags.len() as u64 != count_flags(q, cfg.n) {
        rb.check("flag_count", false, nflags, count_flags(q, cfg.n).to_string());
    }
    Ok(rb.finish())
}

#[cfg(test)]
mod tests {
    use super::super::{run, Experiment, ExperimentConfig, Outcome};
    use crate::flags::Multiplicity;

    #[test]
    fn plane_cubics_over_gf2() {
        let cfg = ExperimentConfig::preset(Experiment::DoubleCount);
        let r = run(&cfg).unwrap();
        assert_eq!(r.outcome, Outcome::Pass, "{}", r.to_json());
        assert_eq!(r.check("double_count").unwrap().observed["sum_y"], 2688);
        assert_eq!(r.check("double_count_m1").unwrap().observed["sum_y"], 21 * 512);
        assert_eq!(r.records.len(), 4);
    }

    #[test]
    fn other_shapes() {
        for (field, n, d, m) in [("3", 2, 2, 2), ("2", 3, 2, 1), ("2^2", 2, 2, 1)] {
            let cfg = ExperimentConfig {
                field: field.into(),
                n,
                d,
                m: Multiplicity::Finite(m),
                ..ExperimentConfig::preset(Experiment::DoubleCount)
            };
            let r = run(&cfg).unwrap();
            assert_eq!(r.outcome, Outcome::Pass, "{field} n={n} d={d}");
        }
    }

    #[test]
    fn cap_leaves_report_undecided() {
        let mut cfg = ExperimentConfig::preset(Experiment::DoubleCount);
        cfg.caps.max_polys = 100;
        assert_eq!(run(&cfg).unwrap().outcome, Outcome::Undecided);
    }
}

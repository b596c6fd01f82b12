//! Experiment driver: each experiment checks one of the structural statements
//! about `Y_{F,m}` over finite fields and returns a JSON-serializable report.
//!
//! Reports are deterministic functions of the configuration. Random forms
//! are drawn from a ChaCha stream seeded by `seed`, each item gets its own
//! sub-seed (recorded), and wall-clock time is kept out of the report.

mod codim;
mod cubic;
mod double_count;
mod predict;
mod sampling;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::field::FieldCtx;
use crate::flags::Multiplicity;

pub use codim::{expected_w_codim, fit_exponent};
pub use predict::{closed_point_census, hessian_bezout, ClosedPointCensus, HessianBezout};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Experiment {
    #[serde(rename = "double-count")]
    DoubleCount,
    #[serde(rename = "gensm-i")]
    GensmI,
    #[serde(rename = "gensm-ii")]
    GensmII,
    #[serde(rename = "gensm-iii")]
    GensmIII,
    #[serde(rename = "fano-i")]
    FanoI,
    #[serde(rename = "fano-ii")]
    FanoII,
    #[serde(rename = "fano-iii")]
    FanoIII,
    #[serde(rename = "codim-delta")]
    CodimDelta,
    #[serde(rename = "codim-w")]
    CodimW,
    #[serde(rename = "cubic-exhaustive")]
    CubicExhaustive,
    #[serde(rename = "cubic-planted")]
    CubicPlanted,
    #[serde(rename = "cubic-smooth")]
    CubicSmooth,
    #[serde(rename = "predict-vs-count")]
    PredictVsCount,
}

impl Experiment {
    pub const ALL: [Experiment; 13] = [
        Experiment::DoubleCount,
        Experiment::GensmI,
        Experiment::GensmII,
        Experiment::GensmIII,
        Experiment::FanoI,
        Experiment::FanoII,
        Experiment::FanoIII,
        Experiment::CodimDelta,
        Experiment::CodimW,
        Experiment::CubicExhaustive,
        Experiment::CubicPlanted,
        Experiment::CubicSmooth,
        Experiment::PredictVsCount,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::DoubleCount => "double-count",
            Experiment::GensmI => "gensm-i",
            Experiment::GensmII => "gensm-ii",
            Experiment::GensmIII => "gensm-iii",
            Experiment::FanoI => "fano-i",
            Experiment::FanoII => "fano-ii",
            Experiment::FanoIII => "fano-iii",
            Experiment::CodimDelta => "codim-delta",
            Experiment::CodimW => "codim-w",
            Experiment::CubicExhaustive => "cubic-exhaustive",
            Experiment::CubicPlanted => "cubic-planted",
            Experiment::CubicSmooth => "cubic-smooth",
            Experiment::PredictVsCount => "predict-vs-count",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown experiment {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResourceCaps {
    /// Largest projective space (in rational points) an enumeration may scan.
    pub max_flags: u64,
    /// Largest number of coefficient vectors or matrices in an exhaustive sweep.
    pub max_polys: u64,
    /// Wall-clock budget; hitting it leaves the report undecided.
    pub timeout_ms: Option<u64>,
}

impl Default for ResourceCaps {
    fn default() -> Self {
        ResourceCaps { max_flags: 1 << 34, max_polys: 1 << 24, timeout_ms: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// `p` or `p^k`.
    pub field: String,
    /// Fields of a scaling sweep (`codim-*`).
    pub fields: Vec<String>,
    pub n: usize,
    pub d: u32,
    pub m: Multiplicity,
    /// Shape of the matrices of `codim-delta`.
    pub l: usize,
    pub r: usize,
    pub samples: u64,
    pub seed: u64,
    /// Largest extension degree searched for witnesses.
    pub ext_bound: u32,
    /// Largest degree stragglers are escalated to.
    pub escalation_bound: u32,
    /// Extension degree up to which `cubic-smooth` certifies smoothness.
    pub cert_bound: u32,
    /// Polynomial in the text format, for `predict-vs-count`; sampled when absent.
    pub poly: Option<String>,
    /// `codim-w`: also sweep every `(F, flag)` pair.
    pub exhaustive: bool,
    /// Pass rate (or, for emptiness experiments, the largest allowed nonempty rate).
    pub threshold: Option<f64>,
    /// Pass rate of the point-count window.
    pub count_threshold: Option<f64>,
    pub caps: ResourceCaps,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: Experiment::DoubleCount,
            field: "2".into(),
            fields: Vec::new(),
            n: 2,
            d: 3,
            m: Multiplicity::Finite(3),
            l: 3,
            r: 2,
            samples: 100,
            seed: 0,
            ext_bound: 4,
            escalation_bound: 9,
            cert_bound: 4,
            poly: None,
            exhaustive: false,
            threshold: None,
            count_threshold: None,
            caps: ResourceCaps::default(),
        }
    }
}

impl ExperimentConfig {
    /// The standard parameters of each experiment.
    pub fn preset(experiment: Experiment) -> Self {
        let base = ExperimentConfig { experiment, ..Default::default() };
        let fin = Multiplicity::Finite;
        match experiment {
            Experiment::DoubleCount => base,
            Experiment::GensmI => ExperimentConfig { field: "101".into(), d: 4, m: fin(4), ext_bound: 2, ..base },
            Experiment::GensmII => ExperimentConfig { field: "5".into(), samples: 200, ..base },
            Experiment::GensmIII => ExperimentConfig { field: "101".into(), m: fin(2), ..base },
            Experiment::FanoI => ExperimentConfig { field: "101".into(), m: Multiplicity::Infinite, ext_bound: 2, ..base },
            Experiment::FanoII => ExperimentConfig {
                field: "5".into(),
                n: 3,
                d: 2,
                m: Multiplicity::Infinite,
                ext_bound: 2,
                escalation_bound: 4,
                ..base
            },
            Experiment::FanoIII => {
                ExperimentConfig { field: "101".into(), n: 3, d: 2, m: Multiplicity::Infinite, samples: 50, ..base }
            }
            Experiment::CodimDelta => ExperimentConfig { fields: vec!["2".into(), "3".into(), "5".into()], ..base },
            Experiment::CodimW => ExperimentConfig {
                fields: ["2", "2^2", "2^3", "3", "3^2"].map(String::from).to_vec(),
                n: 3,
                d: 4,
                m: fin(4),
                ..base
            },
            Experiment::CubicExhaustive => base,
            Experiment::CubicPlanted => ExperimentConfig { field: "11".into(), ext_bound: 2, ..base },
            Experiment::CubicSmooth => ExperimentConfig { field: "11".into(), ext_bound: 2, ..base },
            Experiment::PredictVsCount => ExperimentConfig {
                field: "7".into(),
                samples: 1,
                poly: Some("poly n=2 d=3 field=7\n1 3 0 0\n1 0 3 0\n1 0 0 3\n".into()),
                ..base
            },
        }
    }

    /// Starts from the preset of the experiment named in `value` (or
    /// `experiment`) and overrides the keys present in `value`.
    pub fn from_json(value: &Value, experiment: Option<Experiment>) -> Result<Self> {
        let named = match value.get("experiment") {
            Some(v) => Some(serde_json::from_value::<Experiment>(v.clone()).map_err(|e| Error::Parse(e.to_string()))?),
            None => None,
        };
        let exp = match (experiment, named) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Precondition(format!("config is for {b}, not {a}")));
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(Error::Parse("config does not name an experiment".into())),
        };
        let mut merged = serde_json::to_value(Self::preset(exp)).expect("config serializes");
        let Value::Object(over) = value else {
            return Err(Error::Parse("config must be a JSON object".into()));
        };
        for (k, v) in over {
            if k == "caps" {
                if let (Some(Value::Object(dst)), Value::Object(src)) = (merged.get_mut("caps"), v) {
                    for (ck, cv) in src {
                        dst.insert(ck.clone(), cv.clone());
                    }
                    continue;
                }
            }
            merged[k] = v.clone();
        }
        let cfg: Self = serde_json::from_value(merged).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("samples", self.samples),
            ("ext_bound", self.ext_bound as u64),
            ("escalation_bound", self.escalation_bound as u64),
            ("cert_bound", self.cert_bound as u64),
            ("caps.max_flags", self.caps.max_flags),
            ("caps.max_polys", self.caps.max_polys),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Precondition(format!("{name} must be positive")));
            }
        }
        if self.caps.timeout_ms == Some(0) {
            return Err(Error::Precondition("caps.timeout_ms must be positive".into()));
        }
        if self.escalation_bound < self.ext_bound {
            return Err(Error::Precondition("escalation_bound is below ext_bound".into()));
        }
        for t in [self.threshold, self.count_threshold].into_iter().flatten() {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::Precondition(format!("threshold {t} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn ctx(&self) -> Result<FieldCtx> {
        FieldCtx::parse_spec(&self.field)
    }

    pub(crate) fn finite_m(&self) -> Result<u32> {
        match self.m {
            Multiplicity::Finite(k) => Ok(k),
            Multiplicity::Infinite => Err(Error::Precondition(format!("{} needs a finite m", self.experiment))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Undecided,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Undecided => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub observed: Value,
    pub expected: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub item: u64,
    #[serde(flatten)]
    pub fields: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub outcome: Outcome,
    pub checks: Vec<Check>,
    pub stats: BTreeMap<String, Value>,
    pub notes: Vec<String>,
    /// Resource caps that were hit.
    pub capped: Vec<String>,
    pub records: Vec<Record>,
}

impl Report {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Records as CSV, one column per field name.
    pub fn records_csv(&self) -> Result<String> {
        let mut cols: Vec<&String> = self.records.iter().flat_map(|r| r.fields.keys()).collect();
        cols.sort();
        cols.dedup();
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Parse(e.to_string());
        let mut header = vec!["item".to_string()];
        header.extend(cols.iter().map(|c| c.to_string()));
        w.write_record(&header).map_err(io)?;
        for r in &self.records {
            let mut row = vec![r.item.to_string()];
            for c in &cols {
                row.push(match r.fields.get(*c) {
                    None | Some(Value::Null) => String::new(),
                    Some(Value::String(s)) => s.clone(),
                    Some(v) => v.to_string(),
                });
            }
            w.write_record(&row).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub(crate) struct ReportBuilder {
    config: ExperimentConfig,
    checks: Vec<Check>,
    stats: BTreeMap<String, Value>,
    notes: Vec<String>,
    capped: Vec<String>,
    records: Vec<Record>,
    deadline: Option<Instant>,
}

impl ReportBuilder {
    pub(crate) fn new(config: &ExperimentConfig) -> Self {
        let deadline = config.caps.timeout_ms.map(|ms| Instant::now() + Duration::from_millis(ms));
        ReportBuilder {
            config: config.clone(),
            checks: Vec::new(),
            stats: BTreeMap::new(),
            notes: Vec::new(),
            capped: Vec::new(),
            records: Vec::new(),
            deadline,
        }
    }

    pub(crate) fn record(&mut self, item: u64, fields: Value) {
        let Value::Object(map) = fields else { panic!("records are JSON objects") };
        self.records.push(Record { item, fields: map.into_iter().collect() });
    }

    pub(crate) fn stat(&mut self, key: &str, value: impl Serialize) {
        self.stats.insert(key.to_string(), json!(value));
    }

    pub(crate) fn check(&mut self, name: &str, passed: bool, observed: impl Serialize, expected: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, observed: json!(observed), expected: expected.into() });
    }

    /// Checks `hits / total >= rate` (or `<=` when `at_most`).
    pub(crate) fn rate_check(&mut self, name: &str, hits: u64, total: u64, rate: f64, at_most: bool) {
        let frac = if total == 0 { 0.0 } else { hits as f64 / total as f64 };
        let passed = total > 0 && if at_most { frac <= rate } else { frac >= rate };
        let expected = format!("{} {rate}", if at_most { "<=" } else { ">=" });
        self.check(name, passed, json!({ "hits": hits, "total": total, "fraction": frac }), expected);
    }

    pub(crate) fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub(crate) fn cap(&mut self, what: impl Into<String>) {
        let what = what.into();
        if !self.capped.contains(&what) {
            self.capped.push(what);
        }
    }

    /// True once the timeout has passed; records the cap.
    pub(crate) fn out_of_time(&mut self) -> bool {
        match self.deadline {
            Some(t) if Instant::now() >= t => {
                self.cap("timeout");
                true
            }
            _ => false,
        }
    }

    pub(crate) fn finish(self) -> Report {
        let outcome = if self.checks.iter().any(|c| !c.passed) {
            Outcome::Fail
        } else if !self.capped.is_empty() || self.checks.is_empty() {
            Outcome::Undecided
        } else {
            Outcome::Pass
        };
        Report {
            config: self.config,
            outcome,
            checks: self.checks,
            stats: self.stats,
            notes: self.notes,
            capped: self.capped,
            records: self.records,
        }
    }
}

/// `Ok(None)` for a resource-cap error, so that callers can mark an item undecided.
pub(crate) fn capped<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::BoundExceeded(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Per-item seeds drawn from the configured seed.
pub(crate) fn item_seeds(seed: u64) -> impl Iterator<Item = u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::iter::repeat_with(move || rng.gen())
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn run(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    match config.experiment {
        Experiment::DoubleCount => double_count::run(config),
        Experiment::GensmI | Experiment::FanoI => sampling::emptiness(config),
        Experiment::GensmII | Experiment::FanoII => sampling::nonemptiness(config),
        Experiment::GensmIII => sampling::smoothness(config),
        Experiment::FanoIII => sampling::fano_smoothness(config),
        Experiment::CodimDelta => codim::delta(config),
        Experiment::CodimW => codim::w_locus(config),
        Experiment::CubicExhaustive => cubic::exhaustive(config),
        Experiment::CubicPlanted => cubic::planted(config),
        Experiment::CubicSmooth => cubic::smooth(config),
        Experiment::PredictVsCount => predict::run(config),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
            assert_eq!(serde_json::to_value(e).unwrap(), json!(e.name()));
        }
        assert!("gensm-iv".parse::<Experiment>().is_err());
    }

    #[test]
    fn config_overrides_preset() {
        let v = json!({ "experiment": "gensm-ii", "samples": 7, "caps": { "timeout_ms": 1000 } });
        let cfg = ExperimentConfig::from_json(&v, None).unwrap();
        assert_eq!(cfg.samples, 7);
        assert_eq!(cfg.field, "5");
        assert_eq!(cfg.caps.timeout_ms, Some(1000));
        assert_eq!(cfg.caps.max_flags, ResourceCaps::default().max_flags);
        assert_eq!(ExperimentConfig::from_json(&json!({ "m": "inf" }), Some(Experiment::FanoI)).unwrap().m, Multiplicity::Infinite);
        assert!(ExperimentConfig::from_json(&v, Some(Experiment::GensmI)).is_err());
        assert!(ExperimentConfig::from_json(&json!({ "samples": 0 }), Some(Experiment::GensmI)).is_err());
        assert!(ExperimentConfig::from_json(&json!({ "sample": 3 }), Some(Experiment::GensmI)).is_err());
        assert!(ExperimentConfig::from_json(&json!({}), None).is_err());
    }

    #[test]
    fn presets_are_valid_and_serialize() {
        for e in Experiment::ALL {
            let cfg = ExperimentConfig::preset(e);
            cfg.validate().unwrap();
            let back = ExperimentConfig::from_json(&serde_json::to_value(&cfg).unwrap(), None).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn seeds_are_reproducible() {
        let a: Vec<u64> = item_seeds(5).take(4).collect();
        assert_eq!(a, item_seeds(5).take(4).collect::<Vec<_>>());
        assert_ne!(a, item_seeds(6).take(4).collect::<Vec<_>>());
    }
}

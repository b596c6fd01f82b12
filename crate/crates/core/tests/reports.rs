use incidence::harness::{run, Experiment, ExperimentConfig, Outcome};

fn small(e: Experiment) -> ExperimentConfig {
    let base = ExperimentConfig::preset(e);
    match e {
        Experiment::GensmII => ExperimentConfig { samples: 10, ..base },
        Experiment::GensmIII => ExperimentConfig { field: "13".into(), samples: 5, ..base },
        Experiment::FanoIII => ExperimentConfig { field: "13".into(), samples: 5, ..base },
        Experiment::CubicPlanted => ExperimentConfig { samples: 5, ..base },
        _ => base,
    }
}

#[test]
fn same_config_gives_identical_reports() {
    for e in [Experiment::DoubleCount, Experiment::GensmII, Experiment::GensmIII, Experiment::FanoIII, Experiment::CubicPlanted] {
        let cfg = small(e);
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.to_json(), b.to_json(), "{e}");
        assert_eq!(a.records_csv().unwrap(), b.records_csv().unwrap());
    }
}

#[test]
fn seed_changes_samples() {
    let cfg = small(Experiment::GensmIII);
    let a = run(&cfg).unwrap();
    let b = run(&ExperimentConfig { seed: 17, ..cfg }).unwrap();
    assert_ne!(a.records, b.records);
}

#[test]
fn timeout_leaves_report_undecided() {
    let mut cfg = ExperimentConfig { samples: 1_000_000, ..small(Experiment::GensmII) };
    cfg.caps.timeout_ms = Some(50);
    let r = run(&cfg).unwrap();
    assert!(r.capped.iter().any(|c| c == "timeout"));
    assert_ne!(r.outcome, Outcome::Pass);
}

#[test]
fn report_json_has_documented_shape() {
    let r = run(&small(Experiment::DoubleCount)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
    for key in ["config", "outcome", "checks", "stats", "notes", "capped", "records"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(v.get("runtime_ms").is_none());
}

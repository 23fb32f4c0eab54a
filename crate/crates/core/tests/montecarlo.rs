use contigsieve::model::ModelSpec;
use contigsieve::montecarlo::{
    read_replications, run_experiment, run_replications, summarize_file, ExperimentConfig, FitBasis, KRule,
};
use contigsieve::Error;

fn config(model: &str, n_grid: Vec<usize>, reps: usize) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelSpec::standard(model).unwrap(),
        n_grid,
        k_rule: KRule::Default,
        basis: FitBasis::default(),
        known_sigma: false,
        reps,
        master_seed: 99,
        workers: None,
        outputs: None,
    }
}

#[test]
fn records_independent_of_thread_count() {
    let mut c = config("plm", vec![200, 400], 100);
    c.workers = Some(1);
    let one = run_replications(&c).unwrap();
    c.workers = Some(4);
    let four = run_replications(&c).unwrap();
    assert_eq!(one, four);
    assert_eq!(one.len(), 200);
}

#[test]
fn summary_reproducible_from_raw_file() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("exp");
    let mut c = config("cox", vec![300], 100);
    c.outputs = Some(prefix.to_string_lossy().into_owned());
    let out = run_experiment(&c).unwrap();
    let raw = dir.path().join("exp.raw.csv");
    let records = read_replications(std::fs::File::open(&raw).unwrap()).unwrap();
    assert_eq!(records, out.records);
    let again = summarize_file(&raw, &c.model).unwrap();
    assert_eq!(again, out.summary);
    assert!(dir.path().join("exp.summary.json").exists());
}

#[test]
fn oversized_sieve_exhausts_failure_budget() {
    let mut c = config("plm", vec![20], 100);
    c.k_rule = KRule::Fixed { k: 40 };
    match run_experiment(&c) {
        Err(Error::TooManyFailures { n, failed, reps, .. }) => {
            assert_eq!((n, reps), (20, 100));
            assert!(failed > 5);
        }
        other => panic!("expected failure budget error, got {other:?}"),
    }
}

#[test]
fn config_validation() {
    assert!(config("plm", vec![100], 50).validate().is_err());
    assert!(config("plm", vec![200, 100], 100).validate().is_err());
    assert!(config("plm", vec![100, 200], 100).validate().is_ok());
}

#[test]
fn config_json_round_trip() {
    let mut c = config("cox", vec![100, 400], 200);
    c.k_rule = KRule::Power { scale: 1.0, exponent: 0.5, min: 2 };
    let s = serde_json::to_string(&c).unwrap();
    let back: ExperimentConfig = serde_json::from_str(&s).unwrap();
    assert_eq!(back, c);
}

use rmlab::experiments::{self, from_json, summarize, to_csv, to_json, ExperimentConfig, ExperimentKind, OutputFormat};
use rmlab::{EntryDistribution, Error};

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind, EntryDistribution::Rademacher, vec![12, 20], 6, 99);
    match kind {
        ExperimentKind::RegularSmallBall => {
            c.n_list = vec![64];
            c.trials = 2;
            c.params.mc_trials = 5000;
        }
        ExperimentKind::Allocation => c.n_list = vec![50, 100],
        ExperimentKind::ProfileCensus => c.n_list = vec![64, 128],
        ExperimentKind::BoundCalibration => c.n_list = vec![],
        _ => {}
    }
    c
}

#[test]
fn csv_has_one_row_per_trial_and_dimension() {
    let c = small(ExperimentKind::SigmaMinTail);
    let csv = to_csv(&experiments::run(&c).unwrap());
    let data: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "trial,n,dist,seed,sigma_min,op_norm,singular_flag,elapsed_ms");
    assert_eq!(data.len() - 1, c.trials * c.n_list.len());
}

#[test]
fn reruns_and_thread_counts_give_identical_bytes() {
    for kind in ExperimentKind::ALL {
        let serial = ExperimentConfig { threads: Some(1), ..small(kind) };
        let wide = ExperimentConfig { threads: Some(3), ..small(kind) };
        let a = to_csv(&experiments::run(&serial).unwrap());
        let b = to_csv(&experiments::run(&serial).unwrap());
        let c = to_csv(&experiments::run(&wide).unwrap());
        assert_eq!(a, b, "{}", kind.name());
        assert_eq!(a, c, "{}", kind.name());
    }
}

#[test]
fn json_round_trip_preserves_the_result() {
    for kind in ExperimentKind::ALL {
        let result = experiments::run(&small(kind)).unwrap();
        let back = from_json(&to_json(&result)).unwrap();
        assert_eq!(back.summary, result.summary, "{}", kind.name());
        assert_eq!(back.rows, result.rows, "{}", kind.name());
        assert_eq!(to_csv(&back), to_csv(&result));
    }
}

#[test]
fn summary_is_a_function_of_the_rows() {
    for kind in ExperimentKind::ALL {
        let result = experiments::run(&small(kind)).unwrap();
        assert_eq!(summarize(&result.config, &result.columns, &result.rows), result.summary);
    }
}

#[test]
fn emit_writes_the_chosen_format() {
    let dir = tempfile::tempdir().unwrap();
    let result = experiments::run(&small(ExperimentKind::OpNorm)).unwrap();
    let path = dir.path().join("out.json");
    experiments::emit(&result, OutputFormat::from_path(&path), &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(from_json(&text).unwrap(), result);
    let missing = dir.path().join("no/such/dir.csv");
    assert!(matches!(experiments::emit(&result, OutputFormat::Csv, &missing), Err(Error::Io { .. })));
}

#[test]
fn invalid_configs_are_rejected() {
    let zero = ExperimentConfig { trials: 0, ..small(ExperimentKind::SigmaMinTail) };
    let err = experiments::run(&zero).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let mut impossible = small(ExperimentKind::RegularSmallBall);
    impossible.params.max_attempts = 1;
    impossible.params.q = 1.0 + 1e-9;
    let err = experiments::run(&impossible).unwrap_err();
    assert!(matches!(err, Error::Trial { .. }), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn timing_is_opt_in() {
    let mut c = small(ExperimentKind::OpNorm);
    assert!(experiments::run(&c).unwrap().rows.iter().all(|r| r.elapsed_ms == 0.0));
    c.record_timing = true;
    let timed = experiments::run(&c).unwrap();
    assert!(timed.summary.runtime_ms > 0.0);
}

#[test]
fn toml_configs_in_the_repo_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        ExperimentConfig::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}

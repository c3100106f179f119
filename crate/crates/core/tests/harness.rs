use std::process::{Command, Stdio};

use unate::harness::{
    hypergeometric_tail, overlap_check, run_experiment, trial_seed, CsvSink, ExperimentConfig, FamilyTemplate,
    ResultRow, SCHEMA_LINE,
};
use unate::tester::{BudgetConfig, TesterKind};

const HEADER: &str =
    "function,n,eps,tester,trials,rejections,rejection_rate,queries_p50,queries_p90,queries_max,capped,wall_ms";

fn capped_budget() -> BudgetConfig {
    BudgetConfig { global_cap: Some(20_000), branch_cap: Some(2_000), ..BudgetConfig::default() }
}

fn small_config(out: Option<std::path::PathBuf>) -> ExperimentConfig {
    let families = ["constant:1", "xor", "dictator:2", "majority"].map(|f| FamilyTemplate::parse(f).unwrap());
    let mut cfg = ExperimentConfig::new(families.to_vec(), vec![3, 5], vec![0.1, 0.3], 12);
    cfg.testers = vec![TesterKind::Main, TesterKind::Baseline];
    cfg.budget = capped_budget();
    cfg.seed = 77;
    cfg.out = out;
    cfg
}

#[test]
fn constant_functions_are_never_rejected() {
    let mut cfg = ExperimentConfig::new(vec![FamilyTemplate::parse("constant:0").unwrap()], vec![4, 8], vec![0.2], 30);
    cfg.budget = capped_budget();
    for row in run_experiment(&cfg).unwrap() {
        assert_eq!(row.rejections, 0);
        assert_eq!(row.rejection_rate, 0.0);
    }
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let rows_a = run_experiment(&small_config(Some(a.clone()))).unwrap();
    let rows_b = run_experiment(&small_config(Some(b.clone()))).unwrap();
    assert_eq!(rows_a, rows_b);
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(SCHEMA_LINE));
    assert_eq!(lines.next(), Some(HEADER));
    assert_eq!(lines.count(), rows_a.len());
    // Cells follow family, then n, then eps, then tester.
    assert_eq!(rows_a.len(), 4 * 2 * 2 * 2);
    assert_eq!((rows_a[0].n, rows_a[0].eps, rows_a[0].tester.as_str()), (3, 0.1, "main"));
    assert_eq!((rows_a[1].n, rows_a[1].eps, rows_a[1].tester.as_str()), (3, 0.1, "baseline"));
    assert_eq!((rows_a[2].n, rows_a[2].eps), (3, 0.3));
    assert_eq!(rows_a[4].n, 5);
    for r in &rows_a {
        assert!(r.rejections <= r.trials);
        assert!(r.queries_p50 <= r.queries_p90 && r.queries_p90 <= r.queries_max);
        assert_eq!(r.wall_ms, 0.0);
    }
}

#[test]
fn different_seeds_differ() {
    let a = run_experiment(&small_config(None)).unwrap();
    let mut cfg = small_config(None);
    cfg.seed = 78;
    let b = run_experiment(&cfg).unwrap();
    assert_ne!(a, b);
}

#[test]
fn xor_on_two_bits_is_caught() {
    let mut cfg = ExperimentConfig::new(vec![FamilyTemplate::parse("xor").unwrap()], vec![2], vec![0.2], 200);
    cfg.budget = BudgetConfig { global_cap: Some(200_000), ..BudgetConfig::default() };
    for kind in [TesterKind::Main, TesterKind::Baseline] {
        cfg.testers = vec![kind];
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(3 * rows[0].rejections >= 2 * 200, "{kind}: {}", rows[0].rejections);
    }
}

#[test]
fn sink_writes_schema_then_rows() {
    let mut buf = Vec::new();
    {
        let mut sink = CsvSink::new(&mut buf).unwrap();
        sink.write(&ResultRow {
            function: "dictator:1".into(),
            n: 4,
            eps: 0.5,
            tester: "main".into(),
            trials: 3,
            rejections: 0,
            rejection_rate: 0.0,
            queries_p50: 10,
            queries_p90: 12,
            queries_max: 12,
            capped: 3,
            wall_ms: 0.0,
        })
        .unwrap();
    }
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text, format!("{SCHEMA_LINE}\n{HEADER}\ndictator:1,4,0.5,main,3,0,0.0,10,12,12,3,0.0\n"));
}

#[test]
fn trial_streams_are_distinct() {
    let mut seen = std::collections::HashSet::new();
    for cell in 0..20 {
        for trial in 0..50 {
            assert!(seen.insert(trial_seed(9, cell, trial)));
        }
    }
    assert_eq!(trial_seed(9, 3, 4), trial_seed(9, 3, 4));
    assert_ne!(trial_seed(9, 3, 4), trial_seed(10, 3, 4));
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = ExperimentConfig::new(vec![FamilyTemplate::parse("dictator:9").unwrap()], vec![4], vec![0.1], 1);
    assert!(run_experiment(&cfg).is_err());
    cfg.families = vec![FamilyTemplate::parse("dictator:1").unwrap()];
    cfg.trials = 0;
    assert!(run_experiment(&cfg).is_err());
    cfg.trials = 1;
    cfg.eps = vec![1.5];
    assert!(run_experiment(&cfg).is_err());
    assert!(FamilyTemplate::parse("bogus").is_err());
}

#[test]
fn overlap_edge_cases() {
    let full = overlap_check(50, 50, 50, 200, 1).unwrap();
    assert_eq!(full.mean, 50.0);
    // Both thresholds exceed n when alpha = n.
    assert!(full.tails.iter().all(|t| t.threshold > 50 && t.hits == 0));
    assert_eq!(hypergeometric_tail(50, 50, 50, 50), 1.0);
    assert!((hypergeometric_tail(40, 1, 1, 1) - 1.0 / 40.0).abs() < 1e-12);
    let single = overlap_check(40, 1, 1, 40_000, 2).unwrap();
    assert!((single.mean - 1.0 / 40.0).abs() < 0.005, "{}", single.mean);
}

#[test]
fn overlap_tail_at_unit_alpha() {
    let r = overlap_check(10_000, 100, 100, 100_000, 5).unwrap();
    assert!((r.alpha - 1.0).abs() < 1e-12);
    let t8 = r.tail(8).unwrap();
    assert!(t8.frequency < 0.02);
    assert!(t8.exact < 0.02);
    assert!(r.pass());
}

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_unate-lab"))
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let budget = dir.path().join("b.json");
    std::fs::write(&budget, r#"{"global_cap": 2000, "branch_cap": 500}"#).unwrap();
    let st = lab()
        .args(["run", "--family", "dictator:1", "--n", "4", "--eps", "0.2", "--trials", "5", "--seed", "3"])
        .arg("--budget")
        .arg(&budget)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with(SCHEMA_LINE));
    let bad = dir.path().join("bad.csv");
    for (family, eps) in [("nonsense", "0.2"), ("xor", "7"), ("dictator:9", "0.2")] {
        let st = lab()
            .args(["run", "--family", family, "--n", "4", "--eps", eps, "--out"])
            .arg(&bad)
            .stderr(Stdio::null())
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(2), "{family} {eps}");
    }
}

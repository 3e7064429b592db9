use std::fs;
use std::time::Duration;

use bktf::harness::{
    read_profile_matrix, run_experiment, write_outputs, Experiment, ExperimentConfig, ExternalObjective, Method,
    Objective,
};
use bktf::Error;

fn small_config(methods: &str, budget: usize, reps: usize) -> ExperimentConfig {
    ExperimentConfig::from_toml(&format!(
        r#"
        name = "small"
        methods = [{methods}]
        replications = {reps}
        seed = 11
        budget = {budget}
        [objective]
        function = "branin"
        [grid]
        points = [12, 10]
        [bktf]
        iterations = 30
        burn_in = 15
        [gp]
        direct_budget = 200
        restarts = 1
        "#
    ))
    .unwrap()
}

const ALL: &str = r#""bktf", "gp-ei", "gp-ucb", "gpgrid-ei", "gpgrid-ucb""#;

#[test]
fn zero_budget_records_only_the_design() {
    let res = run_experiment(&small_config(ALL, 0, 1)).unwrap();
    assert_eq!(res.traces.len(), 5);
    for t in &res.traces {
        assert!(t.failure.is_none());
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows.iter().all(|r| r.iter <= 0));
    }
}

#[test]
fn every_method_runs_and_design_is_shared() {
    let res = run_experiment(&small_config(ALL, 3, 2)).unwrap();
    assert_eq!(res.traces.len(), 10);
    for t in &res.traces {
        assert!(t.failure.is_none(), "{:?}", t.failure);
        assert_eq!(t.rows.len(), 5);
        let iters: Vec<i64> = t.rows.iter().map(|r| r.iter).collect();
        assert_eq!(iters, vec![-1, 0, 1, 2, 3]);
        let mut best = f64::INFINITY;
        for r in &t.rows {
            best = best.min(r.y);
            assert_eq!(r.best, best);
            assert!(r.abs_err.unwrap() >= 0.0);
            assert_eq!(r.ms, 0);
        }
    }
    for run in 0..2 {
        let designs: Vec<Vec<Vec<f64>>> = res
            .traces
            .iter()
            .filter(|t| t.run == run)
            .map(|t| t.rows[..2].iter().map(|r| r.x.clone()).collect())
            .collect();
        assert!(designs.windows(2).all(|w| w[0] == w[1]));
    }
    let d0: Vec<_> = res.traces_for(Method::Bktf).map(|t| t.rows[0].x.clone()).collect();
    assert_ne!(d0[0], d0[1]);
}

#[test]
fn grid_methods_never_repeat_an_entry() {
    let res = run_experiment(&small_config(r#""bktf", "gpgrid-ucb""#, 8, 1)).unwrap();
    for t in &res.traces {
        let mut xs: Vec<String> = t.rows.iter().map(|r| format!("{:?}", r.x)).collect();
        xs.sort();
        xs.dedup();
        assert_eq!(xs.len(), t.rows.len());
    }
}

#[test]
fn reruns_are_identical() {
    let cfg = small_config(r#""bktf", "gp-ei""#, 3, 2);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.traces, b.traces);

    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_outputs(da.path(), &a).unwrap();
    write_outputs(db.path(), &b).unwrap();
    for f in ["trace_bktf.csv", "trace_gp-ei.csv", "runs.csv", "profiles.csv", "auc.csv", "manifest.toml"] {
        assert_eq!(fs::read(da.path().join(f)).unwrap(), fs::read(db.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn outputs_and_manifest_round_trip() {
    let cfg = small_config(r#""bktf", "gpgrid-ei""#, 2, 2);
    let res = run_experiment(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = write_outputs(dir.path(), &res).unwrap().unwrap();
    assert_eq!(p.rho.len(), 3);

    let trace = fs::read_to_string(dir.path().join("trace_bktf.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "run,iter,x1,x2,y,best,abs_err,ms");
    assert_eq!(lines.count(), 8);
    let profiles = fs::read_to_string(dir.path().join("profiles.csv")).unwrap();
    assert_eq!(profiles.lines().count(), 1 + 2 * 3);

    let manifest = ExperimentConfig::load(&dir.path().join("manifest.toml")).unwrap();
    assert_eq!(manifest.n_init, Some(2));
    assert_eq!(manifest.grid.points, Some(vec![12, 10]));
    let again = run_experiment(&manifest).unwrap();
    assert_eq!(again.traces, res.traces);

    let m = read_profile_matrix(&[dir.path(), dir.path()]).unwrap();
    assert_eq!(m.experiments(), 4);
    assert_eq!(m.methods, vec!["bktf", "gpgrid-ei"]);
}

#[test]
fn benchmark_overrides_are_rejected() {
    let mut cfg = small_config(r#""bktf""#, 1, 1);
    cfg.objective.bounds = Some(vec![(0.0, 1.0), (0.0, 1.0)]);
    assert!(matches!(Experiment::resolve(&cfg), Err(Error::Config(_))));
}

#[test]
fn oversized_budget_fails_the_run_not_the_experiment() {
    let mut cfg = small_config(r#""gpgrid-ucb""#, 200, 1);
    cfg.grid.points = Some(vec![5, 5]);
    let res = run_experiment(&cfg).unwrap();
    assert!(res.traces[0].failure.as_deref().unwrap().contains("exceeds"));
}

fn sum_child() -> Vec<String> {
    let script = r#"
import sys
for line in sys.stdin:
    parts = line.split()
    assert parts[:2] == ["EVAL", "v1"]
    sys.stdout.write("OK %r\r\n" % sum(float(v) for v in parts[2:]))
    sys.stdout.flush()
"#;
    vec!["python3".into(), "-c".into(), script.into()]
}

#[test]
fn external_child_protocol() {
    let mut obj = ExternalObjective::spawn(&sum_child(), Duration::from_secs(30)).unwrap();
    assert_eq!(obj.evaluate(&[0.25, 0.5]).unwrap(), 0.75);
    assert_eq!(obj.evaluate(&[1.0, -3.0, 0.5]).unwrap(), -1.5);

    let mut err = ExternalObjective::spawn(
        &["sh".into(), "-c".into(), "read line; echo 'ERR oom'".into()],
        Duration::from_secs(30),
    )
    .unwrap();
    assert!(matches!(err.evaluate(&[1.0]), Err(Error::Objective(m)) if m.contains("oom")));

    let mut dead = ExternalObjective::spawn(&["true".into()], Duration::from_secs(30)).unwrap();
    assert!(dead.evaluate(&[1.0]).is_err());

    let mut slow = ExternalObjective::spawn(&["sleep".into(), "5".into()], Duration::from_millis(200)).unwrap();
    assert!(matches!(slow.evaluate(&[1.0]), Err(Error::Objective(m)) if m.contains("no reply")));
}

#[test]
fn external_objective_in_an_experiment() {
    let cmd: Vec<String> = sum_child();
    let cmd = cmd.iter().map(|s| format!("{s:?}")).collect::<Vec<_>>().join(", ");
    let cfg = ExperimentConfig::from_toml(&format!(
        r#"
        name = "ext"
        methods = ["gpgrid-ucb", "gp-ei"]
        budget = 3
        [objective]
        command = [{cmd}]
        bounds = [[0.0, 1.0], [0.0, 1.0]]
        sense = "maximize"
        optimum = 2.0
        [grid]
        points = [5, 5]
        [gp]
        direct_budget = 100
        restarts = 1
        "#
    ))
    .unwrap();
    let res = run_experiment(&cfg).unwrap();
    for t in &res.traces {
        assert!(t.failure.is_none(), "{:?}", t.failure);
        for r in &t.rows {
            assert!((r.y - r.x.iter().sum::<f64>()).abs() < 1e-12);
        }
    }
    let last = res.traces[0].rows.last().unwrap();
    assert!(last.abs_err.unwrap() <= 2.0);
}

#[test]
fn initial_designs_look_uniform_across_replications() {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let mut cfg = small_config(r#""gpgrid-ucb""#, 0, 2000);
    cfg.grid.points = Some(vec![4, 5]);
    cfg.n_init = Some(1);
    let res = run_experiment(&cfg).unwrap();
    let grid = bktf::GridSpace::uniform(&[(-5.0, 10.0), (0.0, 15.0)], &[4, 5]).unwrap();
    let mut counts = [0usize; 20];
    for t in &res.traces {
        let ix = grid.snap(&t.rows[0].x).unwrap();
        counts[grid.flat_index(&ix).unwrap()] += 1;
    }
    let expected = 2000.0 / 20.0;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(19.0).unwrap().cdf(stat);
    assert!(p > 0.001, "chi-square {stat}, p = {p}");
}

#[test]
fn error_column_never_increases() {
    let res = run_experiment(&small_config(ALL, 6, 2)).unwrap();
    for t in &res.traces {
        let errs = t.errors().unwrap();
        assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{:?}", errs);
    }
}

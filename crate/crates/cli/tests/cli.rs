use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bktf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bktf")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("exp.toml");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn oracle_finds_damavandi_optimum() {
    let o = bktf(&["oracle", "--function", "damavandi", "--grid", "71,71"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("x          [2.0, 2.0]"), "{s}");
    assert!(s.contains("grid f*    0\n"), "{s}");
}

#[test]
fn oracle_rejects_unknown_function() {
    let o = bktf(&["oracle", "--function", "rosenbrock"]);
    assert!(!o.status.success());
}

#[test]
fn run_then_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        r#"
name = "schaffer-small"
methods = ["bktf", "gpgrid-ucb"]
replications = 2
seed = 3
budget = 4
[objective]
function = "schaffer"
[grid]
points = [11, 11]
[bktf]
iterations = 30
burn_in = 15
"#,
    );
    let o = bktf(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["trace_bktf.csv", "trace_gpgrid-ucb.csv", "runs.csv", "profiles.csv", "auc.csv", "manifest.toml"] {
        assert!(out.join(f).exists(), "{f}");
    }

    let pooled = dir.path().join("pooled");
    let o =
        bktf(&["profiles", "--in", out.to_str().unwrap(), out.to_str().unwrap(), "--out", pooled.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("gpgrid-ucb"));
    let rows = fs::read_to_string(pooled.join("profiles.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 5);

    let again = dir.path().join("again");
    let o = bktf(&["run", "--config", out.join("manifest.toml").to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success());
    for f in ["trace_bktf.csv", "trace_gpgrid-ucb.csv", "runs.csv", "profiles.csv"] {
        assert_eq!(fs::read(out.join(f)).unwrap(), fs::read(again.join(f)).unwrap(), "{f}");
    }
}

fn external_config(dir: &Path, script: &str) -> String {
    let child = dir.join("child.sh");
    fs::write(&child, script).unwrap();
    write_config(
        dir,
        &format!(
            r#"
name = "ext"
methods = ["gpgrid-ei"]
budget = 3
[objective]
command = ["sh", "{}"]
bounds = [[0.0, 1.0], [0.0, 2.0]]
optimum = 0.0
[grid]
points = [4, 5]
"#,
            child.display()
        ),
    )
}

#[test]
fn external_objective_with_crlf_replies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = external_config(
        dir.path(),
        "while read -r tag ver a b; do printf 'OK %s\\r\\n' \"$(awk -v a=\"$a\" -v b=\"$b\" 'BEGIN{printf \"%.17g\", a + b}')\"; done\n",
    );
    let out = dir.path().join("out");
    let o = bktf(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_to_string(out.join("trace_gpgrid-ei.csv")).unwrap();
    let mut rows = trace.lines();
    assert_eq!(rows.next().unwrap(), "run,iter,x1,x2,y,best,abs_err,ms");
    let mut n = 0;
    for line in rows {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[4] - (v[2] + v[3])).abs() < 1e-9, "{line}");
        n += 1;
    }
    assert_eq!(n, 5);
}

#[test]
fn external_objective_error_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = external_config(dir.path(), "read -r line; echo 'ERR oom'\n");
    let out = dir.path().join("out");
    let o = bktf(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("oom"));
    let runs = fs::read_to_string(out.join("runs.csv")).unwrap();
    assert!(runs.contains("failed") && runs.contains("oom"), "{runs}");
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "name = \"x\"\nmethods = [\"bktf\"]\nbudget = 1\nbogus = 3\n[objective]\nfunction = \"branin\"\n",
    );
    let o = bktf(&["run", "--config", &cfg]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));
}

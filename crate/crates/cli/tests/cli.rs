use std::path::Path;
use std::process::{Command, Output};

fn fdpr(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fdpr"));
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("FDPR_THREADS", t),
        None => cmd.env_remove("FDPR_THREADS"),
    };
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn convergence_run_is_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "run.cfg",
        "nodes = 8,16,32\nperturb = 0.2\nseed = 42\ndegree = 2\nengine = l1-warm\ngrid = 301\n",
    );
    let a = dir.path().join("a.csv").display().to_string();
    let b = dir.path().join("b.csv").display().to_string();
    let o = fdpr(&["converge", "--config", &cfg, "--out", &a], Some("1"));
    assert!(o.status.success(), "{}", stderr(&o));
    let o = fdpr(&["converge", "--config", &cfg, "--out", &b], Some("4"));
    assert!(o.status.success(), "{}", stderr(&o));
    let (a, b) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(a, b);

    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("N,h,q,delta,sup_error,lebesgue,slope_running"));
    assert!(text.contains("# engine=l1-warm"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "8");
    let errors: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(errors[2] < errors[0] / 10.0, "{errors:?}");
}

#[test]
fn polynomial_target_reports_noise_floor() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "p.cfg",
        "target = polynomial:1,-2,0.5\ndegree = 2\nnodes = 8,16\ngrid = 101\n",
    );
    let o = fdpr(&["converge", "--config", &cfg], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# slope=undefined"), "{text}");
    for r in data_rows(&text) {
        assert!(r[4].parse::<f64>().unwrap() < 1e-11);
    }
}

#[test]
fn shepard_lebesgue_constant_is_one() {
    let o = fdpr(
        &[
            "lebesgue", "--engine", "shepard", "--degree", "0", "--nodes", "9,17", "--grid", "201",
        ],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    for r in data_rows(&text) {
        assert!((r[5].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
        assert!(r[4].is_empty());
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "o.cfg",
        "engine = shepard\ndegree = 0\nnodes = 9\ngrid = 21\n",
    );
    let o = fdpr(
        &["basis", "--config", &cfg, "--engine", "l1-cold", "--degree", "1"],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("# engine=l1-cold"));
    assert!(text.lines().any(|l| l.starts_with("x,a0") && l.ends_with(",nonzeros")));
}

#[test]
fn config_errors_exit_with_two_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "# comment\ndegree = 1\nweight = gaussian\n");
    let o = fdpr(&["converge", "--config", &cfg], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3:"), "{}", stderr(&o));

    let o = fdpr(&["lebesgue", "--engine", "shepard", "--degree", "2"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("shepard requires degree 0"));

    let o = fdpr(&["converge", "--nodes", "8", "--grid", "1"], None);
    assert_eq!(o.status.code(), Some(2));

    let o = fdpr(&["converge"], Some("zero"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn inadmissible_weights_exit_with_four() {
    let o = fdpr(&["converge", "--weight", "algebraic:k=4", "--nodes", "8"], None);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let o = fdpr(&["theory", "--weight", "algebraic:k=1", "--degree", "0"], None);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn numerical_failures_exit_with_three() {
    // Three nodes cannot carry a quartic.
    let o = fdpr(&["converge", "--nodes", "3", "--degree", "4"], None);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn theory_prints_constants() {
    let o = fdpr(&["theory", "--degree", "1"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    for key in [
        "c1",
        "c2",
        "h0",
        "decay_c",
        "decay_phi",
        "weight_series_k",
        "lebesgue_bound",
    ] {
        assert!(text.lines().any(|l| l.starts_with(&format!("{key},"))), "missing {key}");
    }
}

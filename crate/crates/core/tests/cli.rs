use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diovqa"))
        .args(args)
        .env_remove("DIOVQA_LOG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn single_matrix(entry: f64) -> String {
    format!(r#"{{"matrices": [{{"dim": 2, "re": [{entry}, 0.0, 0.0, 0.1], "im": [0, 0, 0, 0]}}]}}"#)
}

#[test]
fn dof_rows() {
    let o = run(&["dof", "--L", "58", "--n", "5"]);
    assert!(o.status.success());
    let dofs: Vec<String> = stdout(&o)
        .lines()
        .map(|l| l.rsplit('\t').next().unwrap().to_string())
        .collect();
    assert_eq!(dofs, ["8", "25", "5", "290"]);
}

#[test]
fn decide_writes_witness() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("decision.json");
    let o = run(&[
        "decide",
        "--input",
        data("one_qubit.json").to_str().unwrap(),
        "--threshold",
        "-0.5",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["answer"], "YES");
    let w = v["witness"][0].as_f64().unwrap();
    assert!((w - std::f64::consts::FRAC_PI_2).abs() < 1e-15);

    let o = run(&["decide", "--input", data("one_qubit.json").to_str().unwrap(), "--threshold", "-2"]);
    assert!(stdout(&o).contains("\"NO\""));
}

#[test]
fn single_matrix_classification_follows_spectral_radius() {
    let dir = tempfile::tempdir().unwrap();
    for (entry, expected) in [(0.5, "converges"), (2.0, "diverges"), (-1.7, "diverges")] {
        let p = write(dir.path(), "v.json", &single_matrix(entry));
        let o = run(&["jsr", "--input", &p, "--depth", "6"]);
        assert!(o.status.success());
        let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["classification"], expected, "entry {entry}");
    }
}

#[test]
fn strict_undecided_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "v.json", &single_matrix(1.0));
    assert_eq!(run(&["jsr", "--input", &p, "--depth", "4"]).status.code(), Some(0));
    assert_eq!(run(&["jsr", "--input", &p, "--depth", "4", "--strict"]).status.code(), Some(4));
}

#[test]
fn qaoa_vocabulary_and_reduction() {
    let dir = tempfile::tempdir().unwrap();
    let inst = r#"{
        "h_b": {"dim": 2, "re": [-1, 0, 0, 1], "im": [0, 0, 0, 0]},
        "h_c": {"dim": 2, "re": [0, 1, 1, 0], "im": [0, 0, 0, 0]},
        "layers": 1
    }"#;
    let p = write(dir.path(), "q.json", inst);
    let o = run(&["jsr", "--input", &p, "--betas", "0.1,0.4", "--gammas", "0.2", "--depth", "6"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    // products of unitaries
    assert!((v["lower"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    let o = run(&["jsr", "--input", &p, "--betas", "0.1", "--depth", "6"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["jsr", "--input", &p, "--betas", "0.1,0.4", "--gammas", "0.2", "--reduce", "--depth", "6"]);
    assert!(o.status.success());
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("sys.json");
    let o = run(&[
        "encode",
        "--input",
        data("quartic.json").to_str().unwrap(),
        "--n",
        "3",
        "--output",
        sys.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut outputs = Vec::new();
    for (k, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("sol{k}.json"));
        let o = run(&[
            "solve",
            "--input",
            sys.to_str().unwrap(),
            "--starts",
            "3",
            "--seed",
            "11",
            "--threads",
            threads,
            "--output",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);

    let o = run(&[
        "verify",
        "--input",
        sys.to_str().unwrap(),
        "--solution",
        dir.path().join("sol0.json").to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["points"], 25);
}

#[test]
fn budget_and_cap_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let mut point = vec!["0"; 28];
    point[1] = "2";
    let p = write(dir.path(), "u.json", &serde_json::json!({ "point": point }).to_string());
    let o = run(&["ude-eval", "--input", &p]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("b^"));
    // capped tower evaluates
    let o = run(&["ude-eval", "--input", &p, "--exponent-cap", "2"]);
    assert_eq!(o.status.code(), Some(0));

    let o = run(&["decide", "--input", data("one_qubit.json").to_str().unwrap(), "--threshold", "0", "--cap", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", "{ not json");
    let o = run(&["simulate", "--input", &bad, "--phi", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.json"));
    let o = run(&["simulate", "--input", "/nonexistent.json", "--phi", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["simulate", "--input", data("one_qubit.json").to_str().unwrap(), "--phi", "0,1"]);
    assert_eq!(o.status.code(), Some(2));
    let asym = write(
        dir.path(),
        "bk.json",
        r#"{"energies": [0.1, 0.2], "adjacency": [[0, 1], [0, 0]], "tau": 0.01}"#,
    );
    assert_eq!(run(&["qaoa-landscape", "--input", &asym]).status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_diovqa"))
        .args(["dof", "--L", "2", "--n", "3"])
        .env("DIOVQA_LOG", "verbose")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dry_run_plans_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.json");
    let o = run(&[
        "decide",
        "--input",
        data("one_qubit.json").to_str().unwrap(),
        "--threshold",
        "0",
        "--dry-run",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("plan:"));
    assert!(!out.exists());
    let o = run(&["jsr", "--input", data("golden_pair.json").to_str().unwrap(), "--depth", "30", "--dry-run"]);
    assert!(stdout(&o).contains("depth 30"));
}

#[test]
fn landscape_csv_and_simulation() {
    let o = run(&[
        "qaoa-landscape",
        "--input",
        data("bk_d2.json").to_str().unwrap(),
        "--beta",
        "0:1:4",
        "--gamma",
        "0:100:5",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "beta,gamma,E_closed,E_direct");
    assert_eq!(lines.len(), 1 + 4 * 5);
    for l in &lines[1..] {
        let v: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((v[2] - v[3]).abs() < 1e-8);
    }

    let o = run(&["simulate", "--input", data("one_qubit.json").to_str().unwrap(), "--phi", "1.5707963267948966"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["objective"].as_f64().unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn export_ideal_lists_every_equation() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("sys.json");
    assert!(run(&[
        "encode",
        "--input",
        data("quartic.json").to_str().unwrap(),
        "--n",
        "3",
        "--free-kappa",
        "--anchor",
        "0.5,-1.5",
        "--output",
        sys.to_str().unwrap(),
    ])
    .status
    .success());
    let o = run(&["export-ideal", "--input", sys.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    let body = text.lines().filter(|l| !l.starts_with('#')).count();
    // 15 monomials of degree ≤ 4 in two variables, real and imaginary parts
    assert_eq!(body, 30);
    assert!(text.contains("[0.5, -1.5]"));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use polyattn::annreduce::gen::planted_instance;
use polyattn::annreduce::write_points;

fn polyattn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyattn"))
        .args(args)
        .env_remove("POLYATTN_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn verify_passes() {
    let out = polyattn(&["verify", "--n", "128", "--d", "8", "--B", "1", "--eps", "1e-4", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("PASS"), "{text}");
    let err: f64 = text
        .split("max error ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(err <= 1e-4);
}

#[test]
fn flags_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_polyattn"))
        .arg("verify")
        .env("POLYATTN_N", "32")
        .env("POLYATTN_D", "4")
        .env("POLYATTN_B", "0.5")
        .env("POLYATTN_EPS", "1e-3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(polyattn(&["verify", "--n", "8"]).status.code(), Some(2));
    assert_eq!(polyattn(&["no-such-command"]).status.code(), Some(2));
    // eps outside (0, 0.1)
    let out = polyattn(&["verify", "--n", "8", "--d", "2", "--B", "1", "--eps", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exact_on_single_token_returns_v() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("qkv.txt");
    let output = dir.path().join("out.txt");
    fs::write(&input, "1 1\n0.5\n1 1\n-0.25\n1 1\n0.7\n").unwrap();
    let out = polyattn(&["attn-exact", path(&input), path(&output)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(&output).unwrap(), "1 1\n0.7\n");
}

#[test]
fn malformed_matrix_file_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("qkv.txt");
    fs::write(&input, "1 2\n0.5 0.1\n1 2\n0.3 oops\n1 2\n0 0\n").unwrap();
    let out = polyattn(&["attn-exact", path(&input), path(&dir.path().join("o.txt"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));

    fs::write(&input, "1 2\n0.5 0.1\n").unwrap();
    let out = polyattn(&["attn-exact", path(&input), path(&dir.path().join("o.txt"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn poly_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("qkv.txt");
    let output = dir.path().join("out.bin");
    fs::write(&input, "2 2\n0.1 0.2\n0.3 -0.4\n2 2\n0.5 0.5\n-0.1 0.0\n2 2\n1 0\n0 1\n").unwrap();
    let out = polyattn(&["attn-poly", path(&input), path(&output), "--B", "1", "--eps", "1e-3", "--binary"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("g = ") && text.contains("r = ") && text.contains("factors"), "{text}");
    let m = polyattn::linalg::read_matrices(fs::File::open(&output).unwrap()).unwrap();
    assert_eq!(m[0].shape(), (2, 2));
}

#[test]
fn ann_routes_agree() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.txt");
    let inst = planted_instance(32, 24, 3, 1.0, 9, 77).unwrap();
    write_points(fs::File::create(&pts).unwrap(), inst.points_a(), inst.points_b()).unwrap();

    let decisions = |flag: &str| {
        let out = polyattn(&["ann", "--points", path(&pts), "--t", "3", "--eps", "1.0", flag]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let text = stdout(&out);
        assert!(text.contains("0 mismatches"), "{text}");
        text.lines()
            .filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit()))
            .map(str::to_owned)
            .collect::<Vec<_>>()
    };
    let brute = decisions("--force-brute");
    let attention = decisions("--force-attention");
    assert_eq!(brute.len(), 32);
    assert_eq!(brute, attention);
}

#[test]
fn ann_search_and_bad_points() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("pts.txt");
    fs::write(&pts, "2 3\n0 0 0\n1 1 1\n0 0 1\n1 1 0\n").unwrap();
    let out = polyattn(&["ann-search", "--points", path(&pts), "--eps", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("t* = 1"), "{}", stdout(&out));

    fs::write(&pts, "2 3\n0 0 0\n1 1 1\n0 2 1\n1 1 0\n").unwrap();
    let out = polyattn(&["ann-search", "--points", path(&pts), "--eps", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));
}

#[test]
fn bench_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.toml");
    fs::write(
        &cfg,
        "n_values = [32, 64]\nd = 4\nmethods = [\"exact\", \"poly\"]\nseed = 3\n\
         b_rule = { kind = \"constant\", value = 0.5 }\neps_rule = { kind = \"constant\", value = 1e-3 }\n",
    )
    .unwrap();
    let csv = dir.path().join("out.csv");
    let out = polyattn(&["bench", "--config", path(&cfg), "--out", path(&csv), "--threads", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("n,d,B,eps_a,method,g,r,wall_time_seconds,max_abs_error,seed\n"));

    let out = polyattn(&["bench", "--config", path(&cfg), "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);

    fs::write(&cfg, "n_values = [32]\nd = \"four\"\n").unwrap();
    let out = polyattn(&["bench", "--config", path(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

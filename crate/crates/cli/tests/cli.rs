use std::path::PathBuf;
use std::process::{Command, Output};

fn optsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optsp")).args(args).output().unwrap()
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Value of `key` in a `key: value` report.
fn field(o: &Output, key: &str) -> Option<String> {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")).map(str::to_string))
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("optsp-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

#[test]
fn solve_toy_with_baseline() {
    let o = optsp(&["solve", &data("toy.struct"), &data("toy.formula"), "--engine", "baseline"]);
    assert!(o.status.success());
    assert_eq!(field(&o, "value").as_deref(), Some("2"));
    assert_eq!(field(&o, "witness").as_deref(), Some("a b"));
}

#[test]
fn solve_toy_with_exact_reduction() {
    let o = optsp(&[
        "solve",
        &data("toy.struct"),
        &data("toy.formula"),
        "--engine",
        "reduction",
        "--ip",
        "exact",
        "--verify",
    ]);
    assert!(o.status.success());
    assert_eq!(field(&o, "value").as_deref(), Some("2"));
    assert_eq!(field(&o, "verdict").as_deref(), Some("ok"));
    assert!(field(&o, "stage.lift").is_some());
}

#[test]
fn solve_toy_with_approximate_reduction() {
    let o = optsp(&[
        "solve",
        &data("toy.struct"),
        &data("toy.formula"),
        "--engine",
        "reduction",
        "--ip",
        "approx:2",
        "--eps",
        "0.1",
        "--verify",
    ]);
    assert!(o.status.success());
    let v: f64 = field(&o, "value").unwrap().parse().unwrap();
    assert!((2.0 / 2.1..=2.0).contains(&v));
    assert_eq!(field(&o, "verdict").as_deref(), Some("ok"));
}

#[test]
fn trace_file_matches_report() {
    let dir = tmp("trace");
    let trace = dir.join("run.trace");
    let o = optsp(&[
        "solve",
        &data("toy.struct"),
        &data("toy.formula"),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(trace).unwrap(), stdout(&o));
}

#[test]
fn gen_is_deterministic() {
    let a = optsp(&["gen", "--seed", "11", "--k", "3"]);
    let b = optsp(&["gen", "--seed", "11", "--k", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = optsp(&["gen", "--seed", "12", "--k", "3"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn gen_with_zero_density_has_no_records() {
    let dir = tmp("gen0");
    let prefix = dir.join("inst");
    let o = optsp(&["gen", "--seed", "1", "--density", "0", "--out", prefix.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(prefix.with_extension("struct")).unwrap();
    assert!(text.lines().all(|l| l.starts_with('#') || l.starts_with("obj") || l.starts_with("rel")));
}

#[test]
fn generated_files_solve() {
    let dir = tmp("genloop");
    for seed in 0..10 {
        let prefix = dir.join(format!("i{seed}"));
        assert!(optsp(&["gen", "--seed", &seed.to_string(), "--out", prefix.to_str().unwrap()]).status.success());
        let o = optsp(&[
            "solve",
            prefix.with_extension("struct").to_str().unwrap(),
            prefix.with_extension("formula").to_str().unwrap(),
            "--verify",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(field(&o, "verdict").as_deref(), Some("ok"));
    }
}

#[test]
fn verify_exact_hundred_seeds() {
    let o = optsp(&["verify", "--seeds", "100", "--k", "3", "--n", "12"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(field(&o, "matches").as_deref(), Some("100"));
}

#[test]
fn verify_approximate_hundred_seeds() {
    let o = optsp(&["verify", "--seeds", "100", "--ip", "approx:2", "--eps", "0.1"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(field(&o, "matches").as_deref(), Some("100"));
}

#[test]
fn verify_without_seeds_is_vacuous() {
    let o = optsp(&["verify", "--seeds", "0"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
}

#[test]
fn verify_multicount_route() {
    let o = optsp(&["verify", "--seeds", "30", "--l", "2", "--n", "8"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(field(&o, "matches").as_deref(), Some("30"));
}

#[test]
fn multicount_engine_refuses_one_count_variable() {
    let o = optsp(&["solve", &data("toy.struct"), &data("toy.formula"), "--engine", "multicount"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("multicount"));
}

#[test]
fn reduce_dumps_instances_and_ip_round_trips() {
    let dir = tmp("reduce");
    let out = dir.join("art");
    let o = optsp(&[
        "reduce",
        &data("toy.struct"),
        &data("toy.formula"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    for f in ["normalized.struct", "relaxed.struct", "parallel.struct", "hybrid-0.hyb", "ip-0.ip"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert_eq!(field(&o, "value").as_deref(), Some("2"));
    let ip = optsp(&["solve", "--ip-input", out.join("ip-0.ip").to_str().unwrap(), "--kind", "max"]);
    assert!(ip.status.success());
    assert!(field(&ip, "value").is_some());
}

#[test]
fn solve_ip_file() {
    let o = optsp(&["solve", "--ip-input", &data("small.ip"), "--kind", "max"]);
    assert!(o.status.success());
    assert_eq!(field(&o, "value").as_deref(), Some("2"));
    let o = optsp(&["solve", "--ip-input", &data("small.ip"), "--kind", "min"]);
    assert_eq!(field(&o, "value").as_deref(), Some("0"));
}

#[test]
fn errors_name_the_stage() {
    let dir = tmp("err");
    let bad = dir.join("bad.formula");
    std::fs::write(&bad, "max x . count y . E(x,y").unwrap();
    let o = optsp(&["solve", &data("toy.struct"), bad.to_str().unwrap()]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("parsing formula"), "{err}");

    let o = optsp(&["solve", "/nonexistent.struct", &data("toy.formula")]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("reading structure"));
}

#[test]
fn bad_ip_flag_is_rejected() {
    let o = optsp(&["solve", &data("toy.struct"), &data("toy.formula"), "--ip", "approx:0.5"]);
    assert!(!o.status.success());
}

#[test]
fn help_documents_formats() {
    let o = optsp(&["--help"]);
    let text = stdout(&o);
    for s in ["FORMULA DSL", "STRUCTURE FILE", "IP FILE", "HYBRID FILE"] {
        assert!(text.contains(s), "{s}");
    }
}

use std::path::Path;
use std::process::{Command, Output};

fn smoothdiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smoothdiv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn estimate_from_sample_file_matches_drawn_sample() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let csv = csv.to_str().unwrap();
    assert!(smoothdiv(&["sample", "--n", "1500", "--seed", "9", "--out", csv]).status.success());

    let from_file = smoothdiv(&["estimate", "--sample-file", csv]);
    let drawn = smoothdiv(&["estimate", "--n", "1500", "--seed", "9"]);
    assert!(from_file.status.success(), "{}", String::from_utf8_lossy(&from_file.stderr));
    let (a, b) = (stdout(&from_file), stdout(&drawn));
    assert_eq!(value(&a, "theta_hat"), value(&b, "theta_hat"));
    assert!((value(&a, "theta_hat") - 0.4).abs() < 0.05);
}

#[test]
fn estimate_writes_profile_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("est");
    let res = smoothdiv(&["estimate", "--n", "500", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    let profile = std::fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(profile.starts_with("theta,objective,a_star,feasible,on_boundary\n"));
    assert_eq!(profile.lines().count(), 42);
    assert_eq!(std::fs::read_to_string(out.join("summary.txt")).unwrap(), stdout(&res));
}

#[test]
fn population_recovers_truth() {
    let res = smoothdiv(&["estimate", "--population"]);
    assert!(res.status.success());
    let text = stdout(&res);
    assert!((value(&text, "theta_hat") - 0.4).abs() < 1e-6);
    assert!((value(&text, "a_hat") - 4.0).abs() < 1e-4);
    assert!(text.contains("n = population"));
}

#[test]
fn missing_sample_file_fails_cleanly() {
    let res = smoothdiv(&["estimate", "--sample-file", "/definitely/not/here.csv"]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.starts_with("error: /definitely/not/here.csv"), "{err}");
}

#[test]
fn malformed_sample_file_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "x seed=0 source=test\n0.5\nabc\n").unwrap();
    let res = smoothdiv(&["estimate", "--sample-file", csv.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 3"));
}

#[test]
fn project_reports_member() {
    let res = smoothdiv(&["project", "--theta", "0.4", "--population"]);
    assert!(res.status.success());
    let text = stdout(&res);
    assert!((value(&text, "a") - 4.0).abs() < 1e-6);
    assert!((value(&text, "b") + 5.2).abs() < 1e-6);
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn experiment_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (one, two) = (dir.path().join("one"), dir.path().join("two"));
    for out in [&one, &two] {
        let res = smoothdiv(&["experiment", "--n", "50,500", "--reps", "3", "--seed", "4", "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    for name in ["sweep.csv", "mu_convergence.svg", "a_convergence.svg"] {
        assert_eq!(read(&one, name), read(&two, name), "{name} differs");
    }
    assert!(one.join("timing.csv").exists());
    let sweep = String::from_utf8(read(&one, "sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 7);
}

#[test]
fn check_model_defaults_pass() {
    let res = smoothdiv(&["check-model"]);
    assert!(res.status.success(), "{}", stdout(&res));
    assert!(stdout(&res).contains("overall      PASS"));
}

#[test]
fn check_model_without_floor_fails() {
    let res = smoothdiv(&["check-model", "--gamma", "0"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stdout(&res).lines().any(|l| l.starts_with("floor") && l.contains("FAIL")));
}

#[test]
fn check_model_reports_unattainable_means() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("wide.txt");
    std::fs::write(&file, "# full unit interval\ntheta_min = 0\ntheta_max = 1\n").unwrap();
    let res = smoothdiv(&["check-model", file.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let text = stdout(&res);
    let line = text.lines().find(|l| l.starts_with("feasibility")).unwrap();
    assert!(line.contains("FAIL") && line.contains(" 0.2 ") && line.contains(" 0.8 "), "{line}");
}

#[test]
fn bad_model_key_names_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.txt");
    std::fs::write(&file, "alpha = 0.5\nbogus = 1\n").unwrap();
    let res = smoothdiv(&["check-model", file.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("line 2") && err.contains("bogus"), "{err}");
}

//! End-to-end runs of the alphares binary: output bytes, exit codes, scenario
//! loading, and the output-directory environment variable.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_alphares"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn temp_out(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("alphares_cli_{}_{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary should launch")
}

#[test]
fn ml_eval_prints_the_exponential_byte_for_byte() {
    let out = temp_out("mleval");
    let o = run(&["ml-eval", "--alpha", "1", "--beta", "1", "--z", "1"], &out);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "2.718281828459045");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn ml_eval_accepts_negative_and_complex_arguments() {
    let out = temp_out("mlneg");
    let o = run(&["ml-eval", "--alpha", "2", "--beta", "1", "--z", "-4"], &out);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "-0.4161468365471424");

    let o = run(
        &["ml-eval", "--alpha", "1.5", "--beta", "1", "--z", "-1", "--zi", "2"],
        &out,
    );
    assert!(o.status.success());
    let printed = String::from_utf8_lossy(&o.stdout);
    assert!(printed.contains('i'), "complex output should carry an imaginary part: {printed}");
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn exit_codes_separate_usage_from_numerics() {
    let out = temp_out("codes");
    // Unknown flag: usage error.
    let o = bin().arg("ml-eval").arg("--bogus").output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    // Missing required value: usage error.
    let o = bin().args(["ml-eval", "--alpha", "1", "--beta", "1"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));

    // Argument outside the validated domain: numerical error.
    let o = run(&["ml-eval", "--alpha", "1", "--beta", "1", "--z", "99"], &out);
    assert_eq!(o.status.code(), Some(3));

    // Unreadable scenario: validation error.
    let o = run(&["solve", "--scenario", "/nonexistent/nope.json"], &out);
    assert_eq!(o.status.code(), Some(2));

    // Scenario with an unknown field: validation error.
    let bad = std::env::temp_dir().join(format!("alphares_bad_{}.json", std::process::id()));
    std::fs::write(&bad, r#"{"alpha": 1.5, "A": [[-1.0]], "x": [1.0], "typo": 1}"#).unwrap();
    let o = run(&["solve", "--scenario", bad.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    let _ = std::fs::remove_file(&bad);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn solve_reproduces_the_scenario_constants() {
    let out = temp_out("solve");
    let o = run(
        &["solve", "--scenario", scenario("zero_generator.json").to_str().unwrap()],
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("solve.json")).unwrap()).unwrap();
    let u_final = report["u_final"][0].as_f64().unwrap();
    assert!(
        (u_final - 1.2522527780636750492641).abs() <= 1e-8,
        "u(1) = {u_final}"
    );

    let csv = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,u_0,residual");
    assert_eq!(lines.count(), 513);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let out_a = temp_out("det_a");
    let out_b = temp_out("det_b");
    for (args, file) in [
        (
            vec!["verify", "--scenario", scenario("verify_default.json").to_str().unwrap(), "--N", "64"],
            "verify.json",
        ),
        (
            vec!["solve", "--scenario", scenario("planar_rotation.json").to_str().unwrap(), "--N", "128"],
            "solve.json",
        ),
        (vec!["semivariation", "--alpha", "1.5", "--N", "128"], "semivariation.json"),
    ] {
        let oa = run(&args, &out_a);
        let ob = run(&args, &out_b);
        assert!(oa.status.success(), "{}", String::from_utf8_lossy(&oa.stderr));
        assert!(ob.status.success());
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
        assert!(!a.is_empty());
    }
    let _ = std::fs::remove_dir_all(&out_a);
    let _ = std::fs::remove_dir_all(&out_b);
}

#[test]
fn verify_passes_on_the_bundled_scenario() {
    let out = temp_out("verify");
    let o = run(
        &["verify", "--scenario", scenario("verify_default.json").to_str().unwrap(), "--N", "128"],
        &out,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("[PASS]"));
    assert!(!table.contains("[FAIL]"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
    assert!(report["checks"].as_array().unwrap().len() >= 17);
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn out_dir_env_var_is_honoured() {
    let dir = temp_out("envvar");
    let o = bin()
        .args(["ml-eval", "--alpha", "1", "--beta", "2", "--z", "0.5"])
        .env("ALPHARES_OUT", &dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.join("ml_eval.json").exists(), "report should land in ALPHARES_OUT");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn family_report_carries_both_routes_when_stable() {
    let out = temp_out("family");
    let o = run(&["family", "--alpha", "1.5", "--N", "64"], &out);
    assert!(o.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("family.json")).unwrap()).unwrap();
    assert!(report["route_sup_difference"].as_f64().unwrap() < 1e-3);

    // A stiff generator pushes the march outside its stability envelope; the
    // report then omits the comparison instead of shipping garbage.
    let o = run(
        &["family", "--scenario", scenario("stiff_diagonal.json").to_str().unwrap(), "--N", "64"],
        &out,
    );
    assert!(o.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("family.json")).unwrap()).unwrap();
    assert!(report["route_sup_difference"].is_null());
    let _ = std::fs::remove_dir_all(&out);
}

use std::path::Path;
use std::process::{Command, Output};

use centrep::instance::targeted_instance;
use centrep::witness::CaseTag;
use serde_json::Value;

fn centrep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_centrep"))
        .args(args)
        .env_remove("CENTREP_MAX_DIM")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn read_json(path: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_targeted_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = centrep(&["generate", "--dim-i", "6", "--seed", "42", "--case", "terminal-2-3", "--out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let o = centrep(&["verify", "--input", a.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["case_tag"], "terminal-2-3");
}

#[test]
fn generate_rejects_small_dimension_and_unknown_case() {
    assert_eq!(centrep(&["generate", "--dim-i", "1", "--seed", "1"]).status.code(), Some(2));
    assert_eq!(centrep(&["generate", "--dim-i", "4", "--seed", "1", "--case", "nope"]).status.code(), Some(2));
    assert_eq!(centrep(&["generate", "--dim-i", "3", "--seed", "1", "--case", "terminal-2-3"]).status.code(), Some(2));
    assert_eq!(centrep(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn verify_even_m_template() {
    let dir = tempfile::tempdir().unwrap();
    let inst = targeted_instance(CaseTag::EvenM, 0).unwrap();
    let input = write(dir.path(), "e1.json", &inst.to_json());
    let report = dir.path().join("r.json");
    let o = centrep(&["verify", "--input", &input, "--report", report.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(report.to_str().unwrap());
    assert_eq!(r["case_tag"], "even-M");
    assert_eq!(r["outcome"], "pass");
    for k in ["A", "B", "C", "D"] {
        assert_eq!(r["checks"][k], true, "check {k}");
    }
    assert!(r.get("timing_ms").is_none());

    let report2 = dir.path().join("r2.json");
    centrep(&["verify", "--input", &input, "--report", report2.to_str().unwrap()]);
    assert_eq!(std::fs::read(&report).unwrap(), std::fs::read(&report2).unwrap());

    let o = centrep(&["verify", "--input", &input, "--json", "--timing"]);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["timing_ms"].is_u64());
}

#[test]
fn verify_terminal_with_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let inst = targeted_instance(CaseTag::Terminal23, 0).unwrap();
    let input = write(dir.path(), "e2.json", &inst.to_json());
    let o = centrep(&["verify", "--input", &input, "--oracle", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["central_action"]["nontrivial"], true);
    assert!(r["central_action"]["degree"].is_u64());
    assert_eq!(r["oracle"]["contraction_not_exact"], true);
    assert_eq!(r["betti"][0], 1);
}

#[test]
fn verify_hypothesis_and_format_errors() {
    let dir = tempfile::tempdir().unwrap();
    // Ω = e1∧e3 = θ(e2∧e3) with θ e2 = e1
    let in_image = r#"{"dim":3,"theta":[["0","1","0"],["0","0","0"],["0","0","0"]],
        "omega":[{"i":1,"j":3,"c":"1"}],"epsilon":["0","0","1"],"seed":null,"spec_version":"1"}"#;
    let p = write(dir.path(), "img.json", in_image);
    let o = centrep(&["verify", "--input", &p]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("image of theta"));

    let report = dir.path().join("r.json");
    centrep(&["verify", "--input", &p, "--report", report.to_str().unwrap()]);
    assert_eq!(read_json(report.to_str().unwrap())["outcome"], "error");

    let p = write(dir.path(), "junk.json", "{\"dim\": 2");
    assert_eq!(centrep(&["verify", "--input", &p]).status.code(), Some(2));
    assert_eq!(centrep(&["verify", "--input", "/nonexistent/x.json"]).status.code(), Some(2));
}

#[test]
fn max_dim_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let inst = targeted_instance(CaseTag::EvenM, 0).unwrap();
    let input = write(dir.path(), "e1.json", &inst.to_json());
    let o = Command::new(env!("CARGO_BIN_EXE_centrep"))
        .args(["verify", "--input", &input])
        .env("CENTREP_MAX_DIM", "4")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_centrep"))
        .args(["verify", "--input", &input, "--oracle"])
        .env("CENTREP_MAX_DIM", "6")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cohomology_tables() {
    let dir = tempfile::tempdir().unwrap();
    let h3 = write(dir.path(), "h3.json", r#"{"dim":3,"brackets":[{"i":1,"j":2,"coeffs":{"3":"1"}}]}"#);
    let o = centrep(&["cohomology", "--algebra", &h3]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("betti: 1 2 2 1"));
    assert!(text.contains("nontrivial"));
    assert!(text.contains("degree 2"));

    let ab = write(dir.path(), "ab.json", r#"{"dim":3,"brackets":[]}"#);
    let o = centrep(&["cohomology", "--algebra", &ab]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("betti: 1 3 3 1"));

    let fil = write(
        dir.path(),
        "fil.json",
        r#"{"dim":4,"brackets":[{"i":1,"j":2,"coeffs":{"3":"1"}},{"i":1,"j":3,"coeffs":{"4":"1"}}]}"#,
    );
    let o = centrep(&["cohomology", "--algebra", &fil, "--json"]);
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["betti"], serde_json::json!([1, 2, 2, 2, 1]));

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"dim":3,"brackets":[{"i":1,"j":2,"coeffs":{"3":"1"}},{"i":1,"j":3,"coeffs":{"1":"1"}}]}"#,
    );
    assert_eq!(centrep(&["cohomology", "--algebra", &bad]).status.code(), Some(3));
}

#[test]
fn canonical_and_lefschetz() {
    let dir = tempfile::tempdir().unwrap();
    let flat = r#"{"dim":4,"theta":[["0","0","0","0"],["0","0","0","0"],["0","0","0","0"],["0","0","0","0"]],
        "omega":[{"i":1,"j":2,"c":"1"},{"i":3,"j":4,"c":"1"}],"epsilon":["0","0","0","0"],"seed":null,"spec_version":"1"}"#;
    let p = write(dir.path(), "flat.json", flat);
    let o = centrep(&["lefschetz", "--input", &p, "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["canonical"]["p"], 2);
    assert_eq!(r["lefschetz"].as_array().unwrap().len(), 3);

    // θ e2 = e1, Ω = e2∧e1
    let chain = r#"{"dim":2,"theta":[["0","1"],["0","0"]],
        "omega":[{"i":1,"j":2,"c":"-1"}],"epsilon":["0","0"],"seed":null,"spec_version":"1"}"#;
    let p = write(dir.path(), "chain.json", chain);
    let o = centrep(&["canonical", "--input", &p, "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["canonical"]["q"], 1);
    assert_eq!(r["canonical"]["p"], 0);

    // θ e2 = e1, Ω = e2∧e3: θΩ = e1∧e3 ≠ 0
    let bad = r#"{"dim":3,"theta":[["0","1","0"],["0","0","0"],["0","0","0"]],
        "omega":[{"i":2,"j":3,"c":"1"}],"epsilon":["0","0","0"],"seed":null,"spec_version":"1"}"#;
    let p = write(dir.path(), "bad.json", bad);
    assert_eq!(centrep(&["canonical", "--input", &p]).status.code(), Some(3));
    assert_eq!(centrep(&["lefschetz", "--input", &p]).status.code(), Some(3));
}

#[test]
fn oracle_command_runs_full_check() {
    let dir = tempfile::tempdir().unwrap();
    let inst = targeted_instance(CaseTag::EvenM, 0).unwrap();
    let input = write(dir.path(), "e1.json", &inst.to_json());
    let o = centrep(&["oracle", "--input", &input, "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["checks"]["oracle"], true);
    assert_eq!(r["command"], "oracle");
}

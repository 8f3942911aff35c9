use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_zn-thomae"))
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

#[test]
fn periods_report_is_deterministic() {
    let (c1, a) = run(&["periods", "--n", "3", "--m", "2", "--seed", "7"]);
    let (c2, b) = run(&["periods", "--n", "3", "--m", "2", "--seed", "7"]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["genus"], 4);
    assert_eq!(v["basis_fingerprint"].as_str().unwrap().len(), 64);
}

#[test]
fn explicit_genus_one_curve() {
    let (code, out) = run(&["periods", "--n", "2", "--lambdas", "1,0;-1,0.5;0.3,1.7;-0.2,-1.4"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["tau"].as_array().unwrap().len(), 1);
    assert!(v["tau"][0][0][0].as_f64().unwrap() < 0.0);
}

#[test]
fn input_errors_exit_with_2() {
    assert_eq!(run(&["periods", "--n", "2", "--lambdas", "0,0;1,0;1,1;1,1"]).0, 2);
    assert_eq!(run(&["verify", "--precision", "extended:128"]).0, 2);
    assert_eq!(run(&["verify", "--check", "nonsense"]).0, 2);
    assert_eq!(run(&["verify", "--partition", "1,2|3"]).0, 2);
    assert_eq!(run(&["periods", "--n", "2", "--m", "1"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
}

#[test]
fn verify_passes_and_a_tight_tolerance_fails() {
    let (code, out) = run(&["verify", "--n", "2", "--m", "3", "--seed", "1", "--check", "thomae,vanishing,exchange", "--control"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["details"]["control_ratio"].as_f64().unwrap() > 1e-2);
    let (code, _) = run(&["verify", "--n", "2", "--m", "3", "--seed", "1", "--check", "thomae", "--tol-spread", "1e-30"]);
    assert_eq!(code, 1);
}

#[test]
fn csv_mirror_and_report_file() {
    let dir = std::env::temp_dir().join(format!("zn-thomae-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let rep = dir.join("szego.json");
    let csv = dir.join("szego.csv");
    let (code, out) = run(&[
        "szego", "--n", "3", "--m", "2", "--pairs", "5", "--parallel", "2",
        "--report", rep.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("x_re,x_im,y_re,y_im,abs_r,abs_f,deviation,fay_residual"));
    assert_eq!(text.lines().count(), 6);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(v["comparison"]["sign"], 1);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn tables_and_variation_commands() {
    let (code, out) = run(&["tables", "--n", "5", "--m", "1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["mu"], "6/5");
    let (code, _) = run(&["variation", "--n", "2", "--m", "2", "--seed", "3", "--branches", "1,3"]);
    assert_eq!(code, 0);
    assert_eq!(run(&["variation", "--n", "2", "--m", "2", "--branches", "9"]).0, 2);
}

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbit-approx"))
        .args(args)
        .env_remove("ORBIT_APPROX_ORACLE_CAP")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn convergents_table_and_equivalent_inputs() {
    let surd = run(&["convergents", "--xi", "surd:(-1+1*sqrt(5))/2", "--n", "5", "--format", "csv"]);
    let cf = run(&["convergents", "--xi", "cf:[0;1]repeat:[1]", "--n", "5", "--format", "csv"]);
    assert_eq!(code(&surd), 0);
    assert_eq!(stdout(&surd), stdout(&cf));
    let last = stdout(&surd).lines().last().unwrap().to_string();
    assert_eq!(last, "5,1,5,8,-,1/26,1/13");
}

#[test]
fn rational_input_is_rejected() {
    let o = run(&["convergents", "--xi", "rat:22/7"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("rational input"));
}

#[test]
fn rational_construction_over_a_range() {
    let o = run(&["approx", "--method", "rational", "--y", "1,2", "--k", "6..12", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let items = v.as_array().unwrap();
    assert_eq!(items.len(), 7);
    assert!(items.iter().all(|i| i["status"] == "PASS"));
    assert_eq!(items[0]["result"]["gamma"], serde_json::json!([[-115, 72], [-238, 149]]));
}

#[test]
fn origin_and_signed_constructions() {
    let o = run(&["approx", "--method", "origin", "--k", "2..10", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).lines().filter(|l| l.ends_with(",PASS")).count(), 9);
    let o = run(&[
        "approx", "--method", "signed", "--k", "odd", "9..21", "--mu", "3/10",
        "--xi", "surd:(1-1*sqrt(5))/2", "--y", "1,surd:(1+1*sqrt(5))/2",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().filter(|l| l.ends_with("PASS")).count() >= 5);
    let wrong = run(&["approx", "--method", "signed", "--k", "9", "--y", "1,2"]);
    assert_eq!(code(&wrong), 2);
}

#[test]
fn verify_commands() {
    let o = run(&["verify", "lemma1", "--k", "6"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("lemma1 PASS"));
    assert!(stdout(&o).contains("minimizer"));
    let o = run(&["verify", "thm4", "--y", "1,2", "--k", "6", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["T"], 136);
    assert_eq!(v["bound"], "1/104");
    assert_eq!(v["passed"], true);
    let o = run(&["verify", "thm4", "--y", "1,2", "--k", "4"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("precondition failed"));
}

#[test]
fn exponents_report_theory_next_to_estimates() {
    let o = run(&["exponents", "--y", "0,0", "--T", "10000", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let est = &v["estimate"];
    assert_eq!(est["theory"]["mu"], "1");
    assert_eq!(est["theory"]["mu_hat"], "1");
    assert_eq!(est["window"], serde_json::json!([100, 10000]));
    assert!((est["mu_hat"].as_f64().unwrap() - 1.0).abs() < 0.15);
    let o = run(&["exponents", "--y", "1,2", "--T", "4096", "--window-min", "8", "--omega-xi", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("theory: μ = 1/2, μ̂ = 1/2"));
}

#[test]
fn insufficient_records_exit_five() {
    let o = run(&["exponents", "--y", "1,2", "--T", "100", "--window-min", "50"]);
    assert_eq!(code(&o), 5);
}

#[test]
fn oracle_cap_comes_from_flag_or_environment() {
    let o = run(&["exponents", "--T", "20000"]);
    assert_eq!(code(&o), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_orbit-approx"))
        .args(["enumerate", "--T", "60", "--count"])
        .env("ORBIT_APPROX_ORACLE_CAP", "50")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let o = run(&["enumerate", "--T", "60", "--count", "--cap", "60"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn enumeration_output() {
    let o = run(&["enumerate", "--T", "1", "--count"]);
    assert_eq!(stdout(&o).trim(), "20");
    let o = run(&["enumerate", "--T", "1", "--format", "csv"]);
    assert_eq!(stdout(&o).lines().count(), 21);
}

#[test]
fn outputs_are_byte_stable() {
    let args = ["exponents", "--y", "1,2", "--T", "2048", "--window-min", "4", "--format", "json"];
    assert_eq!(stdout(&run(&args)), stdout(&run(&args)));
}

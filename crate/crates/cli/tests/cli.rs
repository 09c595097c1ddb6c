use std::process::{Command, Output};

use divsum::arithmetic::divisor_sieve;
use serde_json::Value;

fn divsum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_divsum"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = divsum(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn keys(v: &Value) -> Vec<&str> {
    v.as_object().expect("object").keys().map(String::as_str).collect()
}

#[test]
fn sum_at_zero_is_the_divisor_total() {
    let v = json(&["sum", "--m1", "1", "--m2", "100", "--alpha", "0"]);
    let total: u64 = divisor_sieve(1, 100)
        .unwrap()
        .values
        .iter()
        .map(|&d| u64::from(d))
        .sum();
    assert_eq!(v["re"].as_f64(), Some(total as f64));
    assert_eq!(v["im"].as_f64(), Some(0.0));
    assert_eq!(keys(&v), ["m1", "m2", "h", "k", "eta", "weighted", "re", "im", "terms"]);
}

#[test]
fn farey_example() {
    let v = json(&["farey", "--alpha", "0.3", "--order", "5"]);
    assert_eq!(v["h"], 1);
    assert_eq!(v["k"], 3);
    assert!((v["eta"].as_f64().unwrap() + 1.0 / 30.0).abs() < 1e-15);
    assert_eq!(keys(&v), ["h", "k", "eta", "eta_tail", "h_bar", "order"]);
}

#[test]
fn sharpness_matches_closed_form() {
    let v = json(&["afe", "--sharpness", "--m", "10000"]);
    assert!(v["closed_form_rel_err"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["dual_terms"], 1);
    assert_eq!(v["k"], 100);
}

#[test]
fn sharpness_needs_a_square() {
    assert_eq!(divsum(&["afe", "--sharpness", "--m", "10001"]).status.code(), Some(1));
}

#[test]
fn sweep_grid_csv_is_stable() {
    let out = divsum(&[
        "sweep",
        "--m",
        "10000",
        "--k",
        "1",
        "--f-targets",
        "10,20,30",
        "--output",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(
        lines[0],
        "m1,m2,h,k,eta,f,lhs_re,lhs_im,rhs_re,rhs_im,err,norm_classic,\
         norm_improved_0.05,norm_improved_0.1,norm_improved_0.2,dual_terms,hypotheses_ok,conditions_passed"
    );
    // Reals carry 17 significant digits.
    let f = lines[1].split(',').nth(5).unwrap();
    assert_eq!(f.split('e').next().unwrap().len(), 18);
    assert!((f.parse::<f64>().unwrap() - 10.0).abs() < 1e-9);
}

#[test]
fn random_sweep_reports_fit() {
    let v = json(&[
        "sweep", "--m", "100000", "--random", "30", "--f-max", "3000", "--seed", "4",
    ]);
    assert_eq!(v["reports"].as_array().unwrap().len(), 30);
    assert!(v.get("fit_exponent").is_some());
}

#[test]
fn empty_grid_fails() {
    let out = divsum(&["sweep", "--m", "10000"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(divsum(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(divsum(&["farey", "--alpha", "0.3"]).status.code(), Some(1));
    assert_eq!(
        divsum(&["farey", "--alpha", "inf", "--order", "3"]).status.code(),
        Some(1)
    );
    assert_eq!(
        divsum(&["farey", "--alpha", "0.3", "--order", "0"]).status.code(),
        Some(1)
    );
    assert_eq!(
        divsum(&["sum", "--m1", "10", "--m2", "5", "--alpha", "0"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(divsum(&["--help"]).status.code(), Some(0));
}

#[test]
fn exhausted_quadrature_exits_two() {
    // About 10^6 oscillations across the support, beyond the evaluation budget.
    let out = divsum(&[
        "saddle", "--m", "1000000", "--delta", "1000000", "--u", "60000", "--j", "4", "--n", "250000", "--k", "1",
        "--eta", "0.408",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["quadrature_reference"].is_null());
}

#[test]
fn thread_count_from_environment() {
    let args = ["measure", "--m", "100000", "--samples", "5000", "--seed", "9"];
    let a = Command::new(env!("CARGO_BIN_EXE_divsum"))
        .args(args)
        .env("DIVSUM_THREADS", "1")
        .output()
        .unwrap();
    let b = Command::new(env!("CARGO_BIN_EXE_divsum"))
        .args(args)
        .env("DIVSUM_THREADS", "3")
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn meansq_reports_both_sides() {
    let v = json(&["meansq", "--m", "16"]);
    assert_eq!(v["coefficient_sum"].as_f64(), Some(184.0));
    assert!(v["rel_diff"].as_f64().unwrap() <= 1e-10);
}

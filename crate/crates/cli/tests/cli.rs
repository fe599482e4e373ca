use std::path::PathBuf;
use std::process::{Command, Output};

fn fwt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fwt")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = fwt(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

fn temp_file(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fwt-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn two_by_two(name: &str, pmf: impl Fn(&str, &str) -> [(&'static str, &'static str, &'static str); 4]) -> String {
    let contexts: Vec<String> = [("1", "1"), ("1", "2"), ("2", "1"), ("2", "2")]
        .iter()
        .map(|(x, y)| {
            let entries: Vec<String> =
                pmf(x, y).iter().map(|(a, b, p)| format!(r#"{{"a":"{a}","b":"{b}","p":"{p}"}}"#)).collect();
            format!(r#"{{"x":"{x}","y":"{y}","pmf":[{}]}}"#, entries.join(","))
        })
        .collect();
    format!(
        r#"{{"name":"{name}","a_settings":["1","2"],"b_settings":["1","2"],
        "a_alphabet":{{"1":["0","1"],"2":["0","1"]}},"b_alphabet":{{"1":["0","1"],"2":["0","1"]}},
        "contexts":[{}]}}"#,
        contexts.join(",")
    )
}

#[test]
fn analyze_builtins() {
    assert_eq!(json(&["analyze", "--builtin", "conspiracy"])["verdict"], "contextual");
    assert_eq!(json(&["analyze", "--builtin", "ksp_support"])["verdict"], "no_ns_realizations");
    let d = json(&["analyze", "--builtin", "d_eprb"]);
    assert_eq!(d["verdict"], "noncontextual");
    assert_eq!(d["decomposition"][0]["weight"], "1");
}

#[test]
fn analyze_signaling_is_a_verdict_not_a_failure() {
    let r = json(&["analyze", "--builtin", "d_prime_eprb"]);
    assert_eq!(r["verdict"], "signaling");
    assert_eq!(r["nonsignaling"]["side"], "A");
}

#[test]
fn invalid_input_exits_2() {
    let out = fwt(&["analyze", "definitely-missing.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert!(out.stdout.is_empty());
    let float = temp_file(
        "float.json",
        &two_by_two("f", |_, _| [("0", "0", "1/2"), ("1", "1", "1/2"), ("0", "1", "0"), ("1", "0", "0")])
            .replacen("\"1/2\"", "0.5", 1),
    );
    assert_eq!(fwt(&["analyze", float.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(fwt(&["analyze", "--builtin", "nope"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(fwt(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(fwt(&["analyze"]).status.code(), Some(1));
    assert_eq!(fwt(&["analyze", "x.json", "--builtin", "d1"]).status.code(), Some(1));
    assert_eq!(fwt(&["--help"]).status.code(), Some(0));
}

#[test]
fn limit_exceeded_exits_2() {
    let out = fwt(&["realizations", "--builtin", "eprb_shape", "--limit", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("limit"));
}

#[test]
fn nonsignaling_reports() {
    let w = json(&["nonsignaling", "--builtin", "d_prime_eprb"]);
    assert_eq!(w["nonsignaling"]["side"], "A");
    assert_eq!(w["nonsignaling"]["setting"], "1");
    assert_eq!(json(&["nonsignaling", "--builtin", "d_eprb"])["nonsignaling"], true);
    let single = temp_file(
        "single.json",
        r#"{"name":"one","a_settings":["1"],"b_settings":["1"],"a_alphabet":{"1":["0","1"]},
        "b_alphabet":{"1":["0","1"]},"contexts":[{"x":"1","y":"1","pmf":[{"a":"0","b":"1","p":"1/3"},{"a":"1","b":"0","p":"2/3"}]}]}"#,
    );
    assert_eq!(json(&["nonsignaling", single.to_str().unwrap()])["nonsignaling"], true);
}

#[test]
fn realization_counts() {
    assert_eq!(stdout(&["realizations", "--builtin", "eprb_shape", "--mode", "all", "--count-only"]), "4^4 = 256\n");
    assert_eq!(stdout(&["realizations", "--builtin", "eprb_shape", "--mode", "ns", "--count-only"]), "16\n");
    assert_eq!(stdout(&["realizations", "--builtin", "ksp_support", "--mode", "all", "--count-only"]), "6^1320\n");
    assert_eq!(stdout(&["realizations", "--builtin", "eprb_shape"]).lines().count(), 16);
    assert_eq!(stdout(&["realizations", "--builtin", "eprb_shape", "--mode", "all"]).lines().count(), 256);
}

#[test]
fn peres_listings() {
    assert_eq!(stdout(&["peres", "--emit", "rays"]).lines().count(), 33);
    assert_eq!(stdout(&["peres", "--emit", "triads"]).lines().count(), 40);
    let search = stdout(&["peres", "--emit", "search"]);
    assert!(search.starts_with("INFEASIBLE nodes="), "{search}");
    assert!(stdout(&["peres", "--emit", "search", "--rule", "one"]).starts_with("INFEASIBLE"));
    assert!(stdout(&["peres", "--complete-only"]).starts_with("COLORABLE"));
}

#[test]
fn chsh_values() {
    assert_eq!(stdout(&["chsh", "--builtin", "conspiracy"]), "4\n");
    let uniform = temp_file(
        "uniform.json",
        &two_by_two("uniform", |_, _| [("0", "0", "1/4"), ("0", "1", "1/4"), ("1", "0", "1/4"), ("1", "1", "1/4")]),
    );
    assert_eq!(stdout(&["chsh", uniform.to_str().unwrap()]), "0\n");
    let d1d2 = temp_file(
        "d1d2.json",
        &two_by_two("d1d2", |_, _| [("0", "0", "1/2"), ("1", "1", "1/2"), ("0", "1", "0"), ("1", "0", "0")]),
    );
    assert_eq!(stdout(&["chsh", d1d2.to_str().unwrap()]), "2\n");
}

#[test]
fn catalog_lists_and_emits() {
    let listing = stdout(&["catalog"]);
    let ids: Vec<&str> = listing.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(ids, ["d_eprb", "d_prime_eprb", "d1", "d2", "d3", "d4", "conspiracy", "eprb_shape", "ksp_support"]);
    let file = temp_file("d3.json", &stdout(&["catalog", "d3"]));
    assert_eq!(json(&["analyze", file.to_str().unwrap()])["verdict"], "noncontextual");
}

#[test]
fn output_is_byte_stable_and_reverifiable() {
    let a = stdout(&["analyze", "--builtin", "conspiracy"]);
    assert_eq!(a, stdout(&["analyze", "--builtin", "conspiracy"]));
    let system = fwt_core::catalog::get("conspiracy").unwrap().system;
    let report: fwt_core::format::VerdictReport = serde_json::from_str(&a).unwrap();
    fwt_core::format::verify_report(&report, &system, 1000).unwrap();
}

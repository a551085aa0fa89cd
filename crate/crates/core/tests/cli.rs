//! Command-line behaviour: exit codes, report contents, determinism and
//! robustness against malformed input.

use std::path::PathBuf;
use std::process::Command;

use polycert::cli::{run, RunOutput};
use proptest::prelude::*;
use serde_json::Value;

fn polycert(args: &[&str]) -> RunOutput {
    run(std::iter::once("polycert").chain(args.iter().copied()))
}

fn machine(args: &[&str]) -> (u8, Value) {
    let mut full = vec!["--format", "machine"];
    full.extend_from_slice(args);
    let out = polycert(&full);
    let json = serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", out.stdout));
    (out.code, json)
}

fn section<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["sections"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["name"] == name)
        .map(|s| &s["data"])
        .unwrap_or_else(|| panic!("no section {name:?} in {report}"))
}

struct TempDoc(PathBuf);

impl TempDoc {
    fn new(tag: &str, contents: &[u8]) -> Self {
        let path = std::env::temp_dir().join(format!("polycert-cli-{}-{tag}.toml", std::process::id()));
        std::fs::write(&path, contents).unwrap();
        TempDoc(path)
    }

    fn path(&self) -> &str {
        self.0.to_str().unwrap()
    }
}

impl Drop for TempDoc {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

fn demo_source(name: &str) -> String {
    polycert::cli::demos::document(name).unwrap().source
}

#[test]
fn validate_exit_codes() {
    assert_eq!(polycert(&["validate", "--demo", "ex2.7"]).code, 0);

    let (code, report) = machine(&["validate", "--demo", "ex2.7-nonmetric"]);
    assert_eq!(code, 1);
    assert_eq!(report["outcome"], "fail");
    assert!(report.to_string().contains("(x2, x1, x4)"), "{report}");

    let source = demo_source("ex2.7");
    let cut = TempDoc::new("truncated", &source.as_bytes()[..source.find("dist").unwrap() + 8]);
    let (code, report) = machine(&["validate", cut.path()]);
    assert_eq!(code, 2);
    assert_eq!(report["outcome"], "input-error");
    assert!(report["error"].as_str().unwrap().contains("line"), "{report}");
}

#[test]
fn verify_exit_codes() {
    let (code, report) = machine(&["verify", "--demo", "ex2.7"]);
    assert_eq!(code, 0);
    let v = section(&report, "polynomial contraction");
    assert_eq!(v["min_feasible_lambda"], "3/4");

    let (code, report) = machine(&["verify", "--demo", "ex2.7", "--kind", "banach"]);
    assert_eq!(code, 1);
    assert!(report["failures"][0].as_str().unwrap().contains("ratio 1 "), "{report}");

    assert_eq!(polycert(&["verify", "--demo", "ex3.6"]).code, 0);
}

fn orbit(report: &Value, start: &str) -> (String, u64) {
    let o = section(report, &format!("orbit from {start}"));
    (o["limit"].as_str().unwrap().to_string(), o["steps_to_limit"].as_u64().unwrap())
}

#[test]
fn iterate_reports_limits() {
    let (code, report) = machine(&["iterate", "--demo", "ex2.7", "--start", "x2"]);
    assert_eq!(code, 0);
    assert_eq!(orbit(&report, "x2"), ("x1".to_string(), 3));

    let (code, report) = machine(&["iterate", "--demo", "ex2.10", "--start", "1", "--bound-check"]);
    assert_eq!(code, 0);
    assert_eq!(orbit(&report, "1").0, "1/4");

    let (_, from3) = machine(&["iterate", "--demo", "ex3.6", "--start", "x3"]);
    let (_, from2) = machine(&["iterate", "--demo", "ex3.6", "--start", "x2"]);
    assert_eq!(orbit(&from3, "x3").0, "x1");
    assert_eq!(orbit(&from2, "x2").0, "x2");

    assert_eq!(polycert(&["iterate", "--demo", "ex2.7", "--start", "x9"]).code, 2);
    assert_eq!(polycert(&["iterate", "--demo", "ex2.10", "--start", "2"]).code, 2);
}

#[test]
fn iterate_stops_at_max_iter() {
    let doc = TempDoc::new(
        "swap",
        br#"format = "polycert/1"
[space]
type = "finite"
points = ["a", "b"]
dist = "discrete"
[map]
table = ["b", "a"]
"#,
    );
    let (code, report) = machine(&["iterate", doc.path(), "--start", "a", "--max-iter", "5"]);
    assert_eq!(code, 1);
    assert_eq!(section(&report, "orbit from a")["status"], "cycle-detected");
}

fn lambda_of(report: &Value) -> f64 {
    let s = section(report, "search")["lambda"].as_str().unwrap().to_string();
    let (n, d) = s.split_once('/').unwrap_or((&s, "1"));
    n.parse::<f64>().unwrap() / d.parse::<f64>().unwrap()
}

#[test]
fn search_exit_codes() {
    let (code, report) = machine(&["search", "--demo", "ex2.7", "--k", "1", "--mode", "full"]);
    assert_eq!(code, 0);
    assert!(lambda_of(&report) <= 0.75);
    assert_eq!(section(&report, "re-verification")["status"], "pass");

    assert_eq!(polycert(&["search", "--demo", "ex2.7", "--mode", "constant"]).code, 1);

    let (code, report) = machine(&["search", "--demo", "ex3.6", "--mode", "almost", "--k", "2"]);
    assert_eq!(code, 0);
    assert!(lambda_of(&report) <= 2.0 / 3.0);

    assert_eq!(polycert(&["search", "--demo", "ex2.10"]).code, 2);
    assert_eq!(polycert(&["search", "--demo", "ex2.7", "--k", "0"]).code, 2);
    assert_eq!(polycert(&["search", "--demo", "ex2.7", "--lambda-tol", "2"]).code, 2);
}

#[test]
fn searched_certificate_round_trips_through_a_document() {
    let (_, report) = machine(&["search", "--demo", "ex2.7", "--lambda-tol", "1/64"]);
    let fragment = section(&report, "certificate")["toml"].as_str().unwrap().to_string();
    let source = demo_source("ex2.7");
    let head = &source[..source.find("[family]").unwrap()];
    let doc = TempDoc::new("roundtrip", format!("{head}\n{fragment}").as_bytes());
    let out = polycert(&["verify", doc.path()]);
    assert_eq!(out.code, 0, "{}", out.stdout);
}

#[test]
fn demos_pass_and_unknown_names_fail() {
    for name in ["ex2.7", "ex2.9", "ex3.6"] {
        let out = polycert(&["demo", name]);
        assert_eq!(out.code, 0, "{name}:\n{}", out.stdout);
        assert!(!out.stdout.contains("MISMATCH"), "{}", out.stdout);
    }
    let ex27 = polycert(&["demo", "ex2.7"]).stdout;
    for row in ["(x1, x2)", "(x2, x4)", "3/7"] {
        assert!(ex27.contains(row), "{ex27}");
    }
    let (code, report) = machine(&["demo", "ex2.9"]);
    assert_eq!(code, 0);
    let rows = section(&report, "continuity at b").as_array().unwrap();
    assert!(rows.iter().all(|r| r["jump_at_b"] == "1/2" && r["max_jump_elsewhere"] == "0"), "{report}");
    assert_eq!(polycert(&["demo", "ex9.9"]).code, 2);
}

#[test]
fn usage_errors_exit_2() {
    for args in [&["frobnicate"][..], &["verify"], &["verify", "--demo", "ex2.7", "--kind", "nope"], &[]] {
        let out = polycert(args);
        assert_eq!(out.code, 2, "{args:?}");
        assert!(out.stdout.is_empty() && !out.stderr.is_empty());
    }
    assert_eq!(polycert(&["--help"]).code, 0);
    assert_eq!(polycert(&["--version"]).code, 0);
    assert_eq!(polycert(&["verify", "/nonexistent/doc.toml"]).code, 2);
}

#[test]
fn reports_are_deterministic() {
    for args in [
        &["--format", "machine", "verify", "--demo", "ex2.10"][..],
        &["--format", "machine", "search", "--demo", "ex2.7", "--lambda-tol", "1/256"],
        &["demo", "ex3.6"],
    ] {
        assert_eq!(polycert(args), polycert(args), "{args:?}");
    }
}

#[test]
fn binary_matches_library() {
    let bin = env!("CARGO_BIN_EXE_polycert");
    for args in [&["verify", "--demo", "ex2.7"][..], &["verify", "--demo", "ex2.7", "--kind", "banach"], &["bogus"]] {
        let out = Command::new(bin).args(args).output().unwrap();
        let lib = polycert(args);
        assert_eq!(out.status.code(), Some(i32::from(lib.code)), "{args:?}");
        assert_eq!(String::from_utf8(out.stdout).unwrap(), lib.stdout);
    }
}

const COMMANDS: &[&[&str]] = &[
    &["validate"],
    &["verify"],
    &["iterate"],
    &["iterate", "--bound-check"],
    &["search", "--lambda-tol", "1/16"],
];

fn run_all(tag: &str, bytes: &[u8]) -> Result<(), TestCaseError> {
    let doc = TempDoc::new(tag, bytes);
    for cmd in COMMANDS {
        let mut args = cmd.to_vec();
        args.insert(1, doc.path());
        let out = polycert(&args);
        prop_assert!(out.code <= 2);
        let mut machine_args = vec!["--format", "machine"];
        machine_args.extend(args);
        let out = polycert(&machine_args);
        prop_assert!(serde_json::from_str::<Value>(&out.stdout).is_ok());
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        run_all("bytes", &bytes)?;
    }

    #[test]
    fn mutated_documents_never_panic(
        which in 0usize..4,
        at in any::<prop::sample::Index>(),
        len in 0usize..12,
        insert in prop::sample::select(vec!["", "\"", "[", "]", "=", "-1", "1/0", "0.5", "x^99", "{", "\n[map]\n", "abs("]),
    ) {
        let name = ["ex2.7", "ex3.6", "ex2.9", "ex2.7-nonmetric"][which];
        let source = demo_source(name);
        let mut chars: Vec<char> = source.chars().collect();
        let start = at.index(chars.len());
        let end = (start + len).min(chars.len());
        chars.splice(start..end, insert.chars());
        let mutated: String = chars.into_iter().collect();
        // grid documents are shrunk so each case stays quick
        let mutated = mutated.replace("grid = 101", "grid = 11");
        run_all("mutated", mutated.as_bytes())?;
    }
}

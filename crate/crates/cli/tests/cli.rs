use std::path::{Path, PathBuf};
use std::process::Command;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn symdeffix(args: &[&str], out: &Path) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_symdeffix"))
        .current_dir(root())
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap();
    (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into_owned())
}

fn schema() -> jsonschema::JSONSchema {
    let text = std::fs::read_to_string(root().join("docs/report-schema.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    jsonschema::JSONSchema::compile(&json).unwrap()
}

fn report(out: &Path, stem: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(format!("{stem}.report.json"))).unwrap()).unwrap()
}

#[test]
fn exit_codes_follow_verdicts_on_the_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let schema = schema();
    let mut names: Vec<String> = std::fs::read_dir(root().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in names {
        let stem = name.trim_end_matches(".c");
        let (code, _) = symdeffix(&["repair", &format!("corpus/{name}")], dir.path());
        let r = report(dir.path(), stem);
        assert!(schema.is_valid(&r), "{name}");
        let want = match r["verdict"].as_str().unwrap() {
            "Repaired" => 0,
            "NoBugFound" => 1,
            "BugNoPatch" => 2,
            _ => 4,
        };
        assert_eq!(code, want, "{name}");
        assert_eq!(r["exit_code"], want, "{name}");
        let diff = dir.path().join(format!("{stem}.patch.diff"));
        assert_eq!(diff.exists(), code == 0, "{name}");
        assert!(dir.path().join(format!("{stem}.instrumented.c")).exists());
        let expect_clean = name == "safe.c" || name == "guarded_safe.c";
        assert_eq!(code == 1, expect_clean, "{name}");
    }
}

#[test]
fn flagship_report_and_diff() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = symdeffix(&["repair", "corpus/heap_overflow.c"], dir.path());
    assert_eq!(code, 0);
    assert!(stdout.contains("CFC: access(buffer) < base(buffer)+size(buffer)"), "{stdout}");
    let text = std::fs::read_to_string(dir.path().join("heap_overflow.report.json")).unwrap();
    assert!(text.contains(r#""cfc": "access(buffer) < base(buffer)+size(buffer)""#));
    let r = report(dir.path(), "heap_overflow");
    assert_eq!(r["crash_reports"][0]["trace"], serde_json::json!([["IN", "main"]]));
    let diff = std::fs::read_to_string(dir.path().join("heap_overflow.patch.diff")).unwrap();
    assert!(diff.contains("-    for (i; i < sizeof(content); i++)"));
    let inst = std::fs::read_to_string(dir.path().join("heap_overflow.instrumented.c")).unwrap();
    assert!(inst.contains("GLOBAL_MS__heap_overflow__malloc_7 = 5;"));
}

#[test]
fn no_patch_within_budget_exits_2_without_diff() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = symdeffix(&["repair", "corpus/div_by_zero.c", "--max-expr-size", "1"], dir.path());
    assert_eq!(code, 2);
    assert!(!dir.path().join("div_by_zero.patch.diff").exists());
    let r = report(dir.path(), "div_by_zero");
    assert_eq!(r["verdict"], "BugNoPatch");
    assert!(schema().is_valid(&r));
}

#[test]
fn path_cap_without_bug_is_unconfirmed() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = symdeffix(&["repair", "corpus/guarded_safe.c", "--max-paths", "1"], dir.path());
    assert_eq!(code, 4);
}

#[test]
fn parse_error_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.c");
    std::fs::write(&bad, "int main() { goto x; }").unwrap();
    let (code, _) = symdeffix(&["repair", bad.to_str().unwrap()], dir.path());
    assert_eq!(code, 3);
    let (code, _) = symdeffix(&["repair", "corpus/does_not_exist.c"], dir.path());
    assert_eq!(code, 3);
}

#[test]
fn single_trace_records_discrepancy() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = symdeffix(&["repair", "corpus/two_path_overflow.c", "--single-trace"], dir.path());
    assert_eq!(code, 0);
    let r = report(dir.path(), "two_path_overflow");
    assert_eq!(r["mode"], "SingleTrace");
    assert_eq!(r["cross_mode_check"]["passed"], false);
    assert!(schema().is_valid(&r));
}

#[test]
fn timings_only_on_request() {
    let dir = tempfile::tempdir().unwrap();
    symdeffix(&["repair", "corpus/safe.c"], dir.path());
    assert!(report(dir.path(), "safe").get("timings").is_none());
    symdeffix(&["repair", "corpus/safe.c", "--timings"], dir.path());
    let r = report(dir.path(), "safe");
    assert!(r.get("timings").is_some());
    assert!(schema().is_valid(&r));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    symdeffix(&["repair", "corpus/two_bugs.c"], dir.path());
    let a = std::fs::read(dir.path().join("two_bugs.report.json")).unwrap();
    let d1 = std::fs::read(dir.path().join("two_bugs.patch.diff")).unwrap();
    symdeffix(&["repair", "corpus/two_bugs.c"], dir.path());
    assert_eq!(a, std::fs::read(dir.path().join("two_bugs.report.json")).unwrap());
    assert_eq!(d1, std::fs::read(dir.path().join("two_bugs.patch.diff")).unwrap());
}

#[test]
fn solve_subcommand() {
    let run = |f: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_symdeffix")).args(["solve", f]).output().unwrap();
        (o.status.code().unwrap(), String::from_utf8_lossy(&o.stdout).into_owned())
    };
    let (code, out) = run("(and (< x 3) (> x 1))");
    assert_eq!(code, 0);
    assert!(out.contains("x = 2"), "{out}");
    assert_eq!(run("(and (< x 1) (> x 1))").0, 1);
    assert_eq!(run("(and (< x").0, 3);
}

use std::path::{Path, PathBuf};

use symdeffix_core::driver::*;
use symdeffix_core::instrument::ErrorClasses;
use symdeffix_core::lang::parse;
use symdeffix_core::symex::{execute, ExecOptions};
use symdeffix_core::wp::WpMode;

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn run(name: &str, opts: &RepairOptions) -> RepairOutcome {
    let path = corpus_dir().join(name);
    let src = std::fs::read_to_string(&path).unwrap();
    repair_source(&src, Path::new(name), opts).unwrap()
}

#[test]
fn flagship_is_repaired() {
    let out = run("heap_overflow.c", &RepairOptions::default());
    let r = &out.report;
    assert_eq!(r.verdict, Verdict::Repaired);
    assert_eq!(r.crash_reports[0].cfc, "access(buffer) < base(buffer)+size(buffer)");
    assert_eq!(r.patches.len(), 1);
    assert!(r.patches[0].verified);
    let diff = out.diff.unwrap();
    assert!(diff.contains("-    for (i; i < sizeof(content); i++)"), "{diff}");
    assert!(diff.contains("i < GLOBAL_MS__heap_overflow__malloc_7"), "{diff}");
}

#[test]
fn safe_program_has_no_bug() {
    let out = run("safe.c", &RepairOptions::default());
    assert_eq!(out.report.verdict, Verdict::NoBugFound);
    assert!(out.report.crash_reports.is_empty());
    assert!(out.diff.is_none());
    let json = emit_report(&out.report);
    assert!(json.contains("\"crash_reports\": []"), "{json}");
}

#[test]
fn two_path_modes_disagree() {
    let all = run("two_path_overflow.c", &RepairOptions::default());
    assert_eq!(all.report.verdict, Verdict::Repaired);
    assert!(all.report.cross_mode_check.is_none());

    let single = run("two_path_overflow.c", &RepairOptions { mode: WpMode::SingleTrace, ..Default::default() });
    assert_eq!(single.report.verdict, Verdict::Repaired);
    let cross = single.report.cross_mode_check.clone().unwrap();
    assert!(!cross.passed);
    assert_eq!(cross.remaining_crash_lines, vec![14]);
}

#[test]
fn class_filter_hides_other_bugs() {
    let heap = run("div_by_zero.c", &RepairOptions { classes: ErrorClasses { heap_overflow: true, divide_by_zero: false }, ..Default::default() });
    assert_eq!(heap.report.verdict, Verdict::NoBugFound);
}

#[test]
fn report_is_deterministic() {
    let a = emit_report(&run("two_bugs.c", &RepairOptions::default()).report);
    let b = emit_report(&run("two_bugs.c", &RepairOptions::default()).report);
    assert_eq!(a, b);
    assert!(!a.contains("timings"));
    let t = emit_report(&run("heap_overflow.c", &RepairOptions { timings: true, ..Default::default() }).report);
    assert!(t.contains("\"timings\""));
}

#[test]
fn verified_patches_survive_reverification() {
    let mut names: Vec<String> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".c"))
        .collect();
    names.sort();
    for name in names {
        let out = run(&name, &RepairOptions::default());
        let r = &out.report;
        eprintln!("{name}: {:?} patches={}", r.verdict, r.patches.len());
        assert_eq!(r.verdict == Verdict::NoBugFound, r.crash_reports.is_empty(), "{name}");
        if r.patches.iter().any(|p| p.verified) {
            assert_eq!(r.verdict, Verdict::Repaired);
            let fixed = out.patched.as_ref().unwrap();
            let again = parse(&symdeffix_core::lang::print_program(fixed), Path::new(&name)).unwrap();
            let inst = reinstrument(&out.instrumented, &again, ErrorClasses::ALL);
            let res = execute(&inst, &ExecOptions::default());
            assert!(res.crash_reports.is_empty(), "{name}");
        } else {
            assert!(out.diff.is_none(), "{name}");
        }
    }
}

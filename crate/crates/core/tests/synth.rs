use std::path::{Path, PathBuf};

use symdeffix_core::fixloc::*;
use symdeffix_core::instrument::{instrument, ErrorClasses, Instrumented};
use symdeffix_core::lang::*;
use symdeffix_core::solver::*;
use symdeffix_core::symex::*;
use symdeffix_core::synth::*;
use symdeffix_core::wp::*;

fn corpus(name: &str) -> (String, PathBuf) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    (std::fs::read_to_string(&path).unwrap(), path)
}

struct Setup {
    inst: Instrumented,
    report: CrashReport,
    locs: Vec<FixLocation>,
}

fn setup_src(src: &str, path: &Path) -> Setup {
    let p = parse(src, path).unwrap();
    let inst = instrument(&p, ErrorClasses::ALL);
    let res = execute(&inst, &ExecOptions::default());
    let report = res.crash_reports[0].clone();
    let paths: Vec<&FailingPath> = report.failing_paths.iter().collect();
    let locs = find_fix_locations(&inst.program, &report, &paths, 10).unwrap();
    Setup { inst, report, locs }
}

fn setup(name: &str) -> Setup {
    let (src, path) = corpus(name);
    setup_src(&src, &path)
}

fn first_patch(s: &Setup, loc: usize, mode: WpMode) -> Patch {
    let paths: Vec<&FailingPath> = s.report.failing_paths.iter().collect();
    let ob = propagate(&s.locs[loc], &paths, mode).unwrap();
    let solver = Solver::new(SolverConfig::default());
    match synthesize(&s.inst.program, &ob, &SynthConfig::default(), &solver) {
        SynthOutcome::Found(p) => p[0].clone(),
        o => panic!("{o:?}"),
    }
}

fn guard_text(p: &Program, node: NodeId) -> String {
    match p.index().get(&node).map(|i| i.node) {
        Some(NodeRef::Stmt(s)) => expr_to_string(s.cond().unwrap()),
        _ => panic!(),
    }
}

#[test]
fn flagship_patch_is_index_below_size_global() {
    let s = setup("heap_overflow.c");
    let patch = first_patch(&s, 0, WpMode::AllPaths);
    assert_eq!(patch.template, Template::GuardStrengthen);
    assert_eq!(patch.text, "i < GLOBAL_MS__heap_overflow__malloc_7");
    assert_eq!(patch.size, 3);
    let fixed = apply_patch(&s.inst.program, &patch).unwrap();
    assert_eq!(guard_text(&fixed, patch.location.node), "i < sizeof(content) && i < GLOBAL_MS__heap_overflow__malloc_7");
    let diff = patch_diff(&s.inst.program, &fixed, "heap_overflow.c");
    assert!(diff.contains("+    for (i; i < sizeof(content) && i < GLOBAL_MS__heap_overflow__malloc_7; i++)"), "{diff}");
    assert_eq!(diff.lines().filter(|l| l.starts_with('+') && !l.starts_with("+++")).count(), 1);
}

#[test]
fn patched_nodes_get_fresh_ids() {
    let s = setup("heap_overflow.c");
    let patch = first_patch(&s, 0, WpMode::AllPaths);
    let fixed = apply_patch(&s.inst.program, &patch).unwrap();
    let ids = fixed.node_ids();
    let uniq: std::collections::BTreeSet<_> = ids.iter().collect();
    assert_eq!(uniq.len(), ids.len());
    assert!(fixed.max_node_id() > s.inst.program.max_node_id());
}

#[test]
fn two_path_all_paths_patch_mentions_size_global() {
    let s = setup("two_path_overflow.c");
    let guard = s.locs.iter().position(|l| l.kind == FixKind::LoopGuard).unwrap();
    let patch = first_patch(&s, guard, WpMode::AllPaths);
    assert!(patch.text.contains("GLOBAL_MS__two_path_overflow__malloc_5"), "{}", patch.text);
    let single = first_patch(&s, guard, WpMode::SingleTrace);
    assert!(single.text.contains('k'), "{}", single.text);
}

#[test]
fn already_safe_guard_is_reported() {
    let src = "int main() { buf b = malloc(4); int n = nondet_int(); if (n < 4) { if (n >= 0) { b[n] = 1; } } b[n] = 2; return 0; }";
    let s = setup_src(src, Path::new("safe_inner.c"));
    // obligation built by hand at the inner guard
    let paths: Vec<&FailingPath> = s.report.failing_paths.iter().collect();
    let solver = Solver::new(SolverConfig::default());
    let p = &s.inst.program;
    let inner_if = p.main().body.iter().find_map(|st| match &st.kind {
        StmtKind::If { then_branch, .. } => Some(then_branch.clone()),
        _ => None,
    });
    let inner = match &inner_if.unwrap().kind {
        StmtKind::Block(v) => v[0].clone(),
        _ => panic!(),
    };
    let loc = FixLocation {
        node: inner.id,
        line: inner.line,
        kind: FixKind::BranchGuard,
        function: "main".into(),
        scope_vars: vec!["n".into()],
        scope_arrays: vec![],
        rank: 1,
    };
    let ob = Obligation {
        location: loc,
        mode: WpMode::AllPaths,
        per_path: vec![],
        formula: sexpr::parse_constraint("(>= n 0)").unwrap(),
        snapshots: vec![],
        paths_used: paths.len(),
    };
    assert_eq!(synthesize(p, &ob, &SynthConfig::default(), &solver), SynthOutcome::AlreadySafe);
}

#[test]
fn identity_patch_has_empty_diff() {
    let s = setup("heap_overflow.c");
    assert_eq!(patch_diff(&s.inst.program, &s.inst.program.clone(), "x.c"), "");
}

#[test]
fn missing_node_is_an_error() {
    let s = setup("heap_overflow.c");
    let mut patch = first_patch(&s, 0, WpMode::AllPaths);
    patch.location.node = NodeId(424242);
    assert_eq!(apply_patch(&s.inst.program, &patch), Err(SynthError::NodeNotFound(NodeId(424242))));
}

#[test]
fn grammar_enumerates_by_size_then_lexicographically() {
    let g = Grammar::new(&["a".into(), "b".into()], &[], &[], 9);
    let mut seen = Default::default();
    let mut budget = usize::MAX;
    let threes = g.comparisons(3, &mut seen, &mut budget);
    let texts: Vec<String> = threes.iter().map(|(c, _)| { let mut i = 0; expr_to_string(&c.expr(&mut i, 0)) }).collect();
    assert_eq!(texts[0], "a < b");
    assert!(texts.iter().all(|t| t.split(' ').count() == 3));
    // `a + 1 <= b` is the same constraint as `a < b`
    let fives = g.comparisons(5, &mut seen, &mut budget);
    let five_texts: Vec<String> = fives.iter().map(|(c, _)| { let mut i = 0; expr_to_string(&c.expr(&mut i, 0)) }).collect();
    assert!(!five_texts.contains(&"a + 1 <= b".to_string()));
    let mut sorted = fives.iter().map(|(c, _)| c.clone()).collect::<Vec<_>>();
    sorted.sort();
    assert_eq!(sorted, fives.iter().map(|(c, _)| c.clone()).collect::<Vec<_>>());
}

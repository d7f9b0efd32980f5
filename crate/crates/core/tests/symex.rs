use std::path::{Path, PathBuf};

use symdeffix_core::instrument::{instrument, CheckKind, ErrorClasses};
use symdeffix_core::interp::{self, Outcome};
use symdeffix_core::lang::*;
use symdeffix_core::solver::{CmpOp, Constraint, LinExpr, Solver, SolverConfig};
use symdeffix_core::symex::*;

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn load(name: &str) -> Program {
    let path = corpus_dir().join(name);
    parse(&std::fs::read_to_string(&path).unwrap(), &path).unwrap()
}

fn run_src(src: &str, bounds: ExecBounds) -> ExecutionResult {
    let p = parse(src, "t.c").unwrap();
    let inst = instrument(&p, ErrorClasses::ALL);
    execute(&inst, &ExecOptions { bounds, ..Default::default() })
}

#[test]
fn heap_overflow_flagship_report() {
    let p = load("heap_overflow.c");
    let inst = instrument(&p, ErrorClasses::ALL);
    let res = execute(&inst, &ExecOptions::default());
    assert_eq!(res.crash_reports.len(), 1);
    let r = &res.crash_reports[0];
    assert_eq!(r.cfc, "access(buffer) < base(buffer)+size(buffer)");
    assert_eq!(r.cfc_template, CheckKind::HeapBoundUpper);
    assert_eq!(r.crash_line, 19);
    assert_eq!(r.trace, vec![("IN".to_string(), "main".to_string())]);
    assert_eq!(r.failing_paths.len(), 1);
    assert_eq!(r.failing_paths[0].witness_value, Some(5));
    assert!(!res.bound_hit);
}

#[test]
fn two_path_overflow_has_two_exclusive_failing_paths() {
    let p = load("two_path_overflow.c");
    let inst = instrument(&p, ErrorClasses::ALL);
    let res = execute(&inst, &ExecOptions::default());
    assert_eq!(res.crash_reports.len(), 1, "{:#?}", res.crash_reports.iter().map(|r| &r.cfc).collect::<Vec<_>>());
    let r = &res.crash_reports[0];
    assert_eq!(r.failing_paths.len(), 2);
    let solver = Solver::new(SolverConfig::default());
    let both = Constraint::and([r.failing_paths[0].path_condition.clone(), r.failing_paths[1].path_condition.clone()]);
    assert!(solver.check_sat(&both).is_unsat());
}

#[test]
fn no_checks_one_branch_gives_two_paths() {
    let res = run_src("int main() { int x = nondet_int(); int y = 0; if (x > 0) { y = 1; } return y; }", ExecBounds::default());
    assert!(res.crash_reports.is_empty());
    assert_eq!(res.paths_explored, 2);
}

#[test]
fn infeasible_branch_is_pruned() {
    let res = run_src(
        "int main() { int x = nondet_int(); if (x >= 3) { if (x < 0) { x = 1; } } return x; }",
        ExecBounds::default(),
    );
    assert_eq!(res.paths_explored, 2);
    assert!(res.paths.iter().all(|p| p.id.len() <= 2));
}

#[test]
fn unroll_bound_limits_body_visits() {
    let src = "int main() { buf b = malloc(200); int i = 0; while (i < 100) { b[i] = 1; i++; } return i; }";
    let p = parse(src, "t.c").unwrap();
    let inst = instrument(&p, ErrorClasses::ALL);
    let res = execute(&inst, &ExecOptions { bounds: ExecBounds { unroll: 4, max_paths: 100 }, ..Default::default() });
    assert!(res.bound_hit);
    assert_eq!(res.paths_explored, 1);
    assert_eq!(res.paths[0].end, PathEnd::Truncated);
    // One bit per guard decision: four body visits, then the truncated fifth.
    assert_eq!(res.paths[0].id, "11111");
    let src2 = "int main() { buf b = malloc(3); int i = 0; while (i < 100) { b[i] = 1; i++; } return i; }";
    let res2 = run_src(src2, ExecBounds { unroll: 4, max_paths: 100 });
    // Offsets 0..3 visited; the fourth visit (offset 3) overflows.
    assert_eq!(res2.crash_reports.len(), 1);
    assert_eq!(res2.crash_reports[0].failing_paths[0].witness_value, Some(3));
}

#[test]
fn unroll_four_visits_exactly_four_times() {
    let src = "int g = 0; void tick() { g = g + 1; } int main() { int i = 0; while (i < 100) { tick(); i++; } return g; }";
    let p = parse(src, "t.c").unwrap();
    let inst = instrument(&p, ErrorClasses::ALL);
    let res = execute(&inst, &ExecOptions { bounds: ExecBounds { unroll: 4, max_paths: 10 }, ..Default::default() });
    assert!(res.bound_hit);
    assert_eq!(res.paths.len(), 1);
    assert_eq!(res.paths[0].end, PathEnd::Truncated);
    let src = "int main() { buf b = malloc(2); int i = 0; int n = nondet_int(); while (i < 100) { b[n] = i; i++; } return 0; }";
    let res = run_src(src, ExecBounds { unroll: 4, max_paths: 10 });
    // The violation is found on the first visit, then assumed away.
    assert_eq!(res.crash_reports.iter().map(|r| r.failing_paths.len()).sum::<usize>(), 2);
}

#[test]
fn assignment_substitutes_symbolic_value() {
    let res = run_src("int main() { int x = nondet_int(); int y = x + 1; return y; }", ExecBounds::default());
    assert_eq!(res.paths.len(), 1);
    assert_eq!(res.paths[0].end, PathEnd::Returned(LinExpr::var("$in0").offset(1)));
}

#[test]
fn execution_is_deterministic() {
    for entry in std::fs::read_dir(corpus_dir()).unwrap() {
        let path = entry.unwrap().path();
        let p = parse(&std::fs::read_to_string(&path).unwrap(), &path).unwrap();
        let inst = instrument(&p, ErrorClasses::ALL);
        let a = execute(&inst, &ExecOptions::default());
        let b = execute(&inst, &ExecOptions::default());
        assert_eq!(a, b, "{}", path.display());
    }
}

#[test]
fn sibling_path_conditions_partition_the_parent() {
    let solver = Solver::new(SolverConfig::default());
    for name in ["two_path_overflow.c", "branch_select.c", "safe.c", "guarded_safe.c"] {
        let p = load(name);
        let inst = instrument(&p, ErrorClasses::ALL);
        let res = execute(&inst, &ExecOptions::default());
        // Pairwise exclusive leaves whose disjunction is valid.
        let pcs: Vec<Constraint> = res.paths.iter().map(|p| p.path_condition.clone()).collect();
        for i in 0..pcs.len() {
            for j in i + 1..pcs.len() {
                let both = Constraint::and([pcs[i].clone(), pcs[j].clone()]);
                assert!(solver.check_sat(&both).is_unsat(), "{name}: paths {i} and {j} overlap");
            }
        }
        if !res.bound_hit && res.crash_reports.is_empty() {
            assert!(solver.check_valid(&Constraint::or(pcs)).is_valid(), "{name}");
        }
    }
}

#[test]
fn witnesses_replay_concretely() {
    for entry in std::fs::read_dir(corpus_dir()).unwrap() {
        let path = entry.unwrap().path();
        let p = parse(&std::fs::read_to_string(&path).unwrap(), &path).unwrap();
        let inst = instrument(&p, ErrorClasses::ALL);
        let res = execute(&inst, &ExecOptions::default());
        for r in &res.crash_reports {
            for fp in &r.failing_paths {
                assert!(fp.path_condition.eval_model(&fp.witness).unwrap_or(false));
                assert_eq!(fp.violation.eval_model(&fp.witness), Some(true));
                let out = interp::run(&inst.program, &fp.witness_inputs(), 1_000_000);
                match out {
                    Outcome::Violation { kind, node, line } => {
                        assert_eq!((kind, node, line), (r.cfc_template, r.crash_node, r.crash_line), "{}", path.display());
                    }
                    other => panic!("{}: witness {:?} gave {other:?}", path.display(), fp.witness_inputs()),
                }
            }
        }
    }
}

#[test]
fn lower_bound_and_division_renderings() {
    let p = load("negative_index.c");
    let res = execute(&instrument(&p, ErrorClasses::ALL), &ExecOptions::default());
    let cfcs: Vec<&str> = res.crash_reports.iter().map(|r| r.cfc.as_str()).collect();
    assert!(cfcs.contains(&"access(buf) >= base(buf)"), "{cfcs:?}");
    let p = load("div_by_zero.c");
    let res = execute(&instrument(&p, ErrorClasses::ALL), &ExecOptions::default());
    assert_eq!(res.crash_reports.len(), 1);
    assert_eq!(res.crash_reports[0].cfc, "d != 0");
    let heap_only = ErrorClasses { heap_overflow: true, divide_by_zero: false };
    assert!(execute(&instrument(&p, heap_only), &ExecOptions::default()).crash_reports.is_empty());
}

#[test]
fn callee_crash_trace() {
    let p = load("func_call.c");
    let res = execute(&instrument(&p, ErrorClasses::ALL), &ExecOptions::default());
    assert_eq!(res.crash_reports.len(), 1);
    let r = &res.crash_reports[0];
    assert_eq!(r.cfc, "access(dst) < base(dst)+size(dst)");
    assert_eq!(r.function, "fill");
    assert_eq!(r.trace, vec![("IN".to_string(), "main".to_string()), ("IN".to_string(), "fill".to_string())]);
}

#[test]
fn constant_division_is_exact() {
    let src = "int main() { int x = nondet_int(); int q = x / 3; int r = x % -4; if (q * 3 + x % 3 != x) { q = 10 / 0; } return r; }";
    let p = parse(src, "t.c").unwrap();
    let res = execute(&instrument(&p, ErrorClasses::ALL), &ExecOptions::default());
    // `q * 3` is linear (constant factor), so the impossible branch is pruned.
    assert!(res.crash_reports.is_empty(), "{:?}", res.crash_reports.iter().map(|r| &r.cfc).collect::<Vec<_>>());
    let _ = (CmpOp::Eq, LinExpr::constant(0));
}

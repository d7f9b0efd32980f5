//! Failing-input sets from symbolic execution against concrete brute force.

use std::collections::BTreeSet;
use std::path::Path;

use symdeffix_core::instrument::{instrument, ErrorClasses};
use symdeffix_core::interp;
use symdeffix_core::lang::*;
use symdeffix_core::solver::{CmpOp, Constraint, LinExpr, Solver, SolverConfig};
use symdeffix_core::symex::*;

fn failing_sets(p: &Program) -> (BTreeSet<Vec<i64>>, BTreeSet<Vec<i64>>) {
    let k = interp::nondet_sites(p);
    assert!(k <= 2);
    let mut grid: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..k {
        grid = grid.into_iter().flat_map(|v| (0..=7).map(move |x| [v.clone(), vec![x]].concat())).collect();
    }
    let inst = instrument(p, ErrorClasses::ALL);
    let res = execute(&inst, &ExecOptions::default());
    assert!(!res.bound_hit);
    let solver = Solver::new(SolverConfig::default());
    let pcs: Vec<&Constraint> = res.crash_reports.iter().flat_map(|r| r.failing_paths.iter().map(|f| &f.path_condition)).collect();
    let mut symbolic = BTreeSet::new();
    let mut concrete = BTreeSet::new();
    for input in &grid {
        let pin = Constraint::and(
            input.iter().enumerate().map(|(i, v)| Constraint::cmp(&LinExpr::var(format!("$in{i}")), CmpOp::Eq, &LinExpr::constant(*v))),
        );
        if pcs.iter().any(|pc| solver.check_sat(&Constraint::and([(*pc).clone(), pin.clone()])).is_sat()) {
            symbolic.insert(input.clone());
        }
        if interp::run(p, input, 1_000_000).is_violation() {
            concrete.insert(input.clone());
        }
    }
    (symbolic, concrete)
}

#[test]
fn corpus_failing_sets_match_brute_force() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut checked = 0;
    let mut entries: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries {
        let p = parse(&std::fs::read_to_string(&path).unwrap(), &path).unwrap();
        if interp::nondet_sites(&p) > 2 {
            continue;
        }
        let (sym, conc) = failing_sets(&p);
        eprintln!("{}: {} failing inputs", path.file_name().unwrap().to_string_lossy(), conc.len());
        assert_eq!(sym, conc, "{}", path.display());
        checked += 1;
    }
    assert!(checked >= 10);
}

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symdeffix_core::fixloc::*;
use symdeffix_core::instrument::{instrument, ErrorClasses};
use symdeffix_core::interp::{self, Outcome};
use symdeffix_core::lang::*;
use symdeffix_core::solver::*;
use symdeffix_core::symex::*;
use symdeffix_core::wp::*;

fn corpus(name: &str) -> (String, PathBuf) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name);
    (std::fs::read_to_string(&path).unwrap(), path)
}

fn obligations(name: &str, mode: WpMode) -> Vec<Obligation> {
    let (src, path) = corpus(name);
    let p = parse(&src, &path).unwrap();
    let inst = instrument(&p, ErrorClasses::ALL);
    let res = execute(&inst, &ExecOptions::default());
    let r = &res.crash_reports[0];
    let paths: Vec<&FailingPath> = r.failing_paths.iter().collect();
    let locs = find_fix_locations(&inst.program, r, &paths, 10).unwrap();
    locs.iter().filter_map(|l| propagate(l, &paths, mode)).collect()
}

fn equivalent(a: &Constraint, b: &Constraint) -> bool {
    Solver::new(SolverConfig::default()).check_valid(&a.iff(b)).is_valid()
}

fn lin(s: &str) -> Constraint {
    sexpr::parse_constraint(s).unwrap()
}

#[test]
fn flagship_guard_obligation_is_index_below_size() {
    let obs = obligations("heap_overflow.c", WpMode::AllPaths);
    let g = &obs[0];
    assert_eq!(g.location.kind, FixKind::LoopGuard);
    let want = lin("(< i GLOBAL_MS__heap_overflow__malloc_7)");
    assert!(equivalent(&g.formula, &want), "{}", g.formula);
    assert!(!g.snapshots.is_empty());
}

#[test]
fn two_path_all_paths_obligation_covers_both_paths() {
    let obs = obligations("two_path_overflow.c", WpMode::AllPaths);
    let g = obs.iter().find(|o| o.location.kind == FixKind::LoopGuard).unwrap();
    assert_eq!(g.paths_used, 2);
    let want = lin("(and (or (<= k 3) (< (+ i 2) GLOBAL_MS__two_path_overflow__malloc_5)) (or (> k 3) (< i GLOBAL_MS__two_path_overflow__malloc_5)))");
    assert!(equivalent(&g.formula, &want), "{}", g.formula);

    let single = obligations("two_path_overflow.c", WpMode::SingleTrace);
    let s = single.iter().find(|o| o.location.kind == FixKind::LoopGuard).unwrap();
    assert_eq!(s.paths_used, 1);
    assert!(!equivalent(&s.formula, &want));
    // the all-paths obligation is at least as strong as the single-trace one
    let solver = Solver::new(SolverConfig::default());
    assert!(solver.check_valid(&g.formula.implies(&s.formula)).is_valid());
}

#[test]
fn location_not_on_any_path_is_dropped() {
    let (src, path) = corpus("heap_overflow.c");
    let p = parse(&src, &path).unwrap();
    let inst = instrument(&p, ErrorClasses::ALL);
    let res = execute(&inst, &ExecOptions::default());
    let r = &res.crash_reports[0];
    let paths: Vec<&FailingPath> = r.failing_paths.iter().collect();
    let bogus = FixLocation {
        node: NodeId(9999),
        line: 1,
        kind: FixKind::BranchGuard,
        function: "main".into(),
        scope_vars: vec![],
        scope_arrays: vec![],
        rank: 1,
    };
    assert!(propagate(&bogus, &paths, WpMode::AllPaths).is_none());
}

// Random straight-line programs: wp evaluated at each input agrees with running the program.

const VARS: [&str; 3] = ["a", "b", "c"];

fn term(rng: &mut ChaCha8Rng, div: bool) -> String {
    let v = VARS[rng.gen_range(0..3)];
    match rng.gen_range(0..if div { 6 } else { 5 }) {
        0 => format!("{v}"),
        1 => format!("{v} + {}", rng.gen_range(-3..4)),
        2 => format!("{} * {v}", rng.gen_range(-3..4)),
        3 => format!("{v} - {}", VARS[rng.gen_range(0..3)]),
        4 => format!("{v} + {} - {}", VARS[rng.gen_range(0..3)], rng.gen_range(0..4)),
        _ => format!("{v} / {}", [2, 3, -2][rng.gen_range(0..3)]),
    }
}

fn cmp(rng: &mut ChaCha8Rng) -> String {
    let op = ["<", "<=", "==", "!=", ">", ">="][rng.gen_range(0..6)];
    format!("{} {op} {}", term(rng, false), rng.gen_range(-4..5))
}

fn random_program(rng: &mut ChaCha8Rng, div: bool) -> String {
    let mut body = String::new();
    for _ in 0..rng.gen_range(1..6) {
        let x = VARS[rng.gen_range(0..3)];
        if rng.gen_bool(0.25) {
            let y = VARS[rng.gen_range(0..3)];
            body += &format!("if ({}) {{ {x} = {}; }} else {{ {y} = {}; }}\n", cmp(rng), term(rng, div), term(rng, div));
        } else {
            body += &format!("{x} = {};\n", term(rng, div));
        }
    }
    format!(
        "int main() {{ int a = nondet_int(); int b = nondet_int(); int c = nondet_int();\n{body}int r = 0; if ({}) {{ r = 1; }} return r; }}",
        cmp(rng)
    )
}

fn split(p: &Program) -> (Stmt, Constraint) {
    let body = &p.main().body;
    let n = body.len();
    let middle = Stmt { id: NodeId(u32::MAX), line: 0, kind: StmtKind::Block(body[3..n - 3].to_vec()), synthetic: false };
    let q = lower_cond(body[n - 2].cond().unwrap()).unwrap();
    (middle, q)
}

#[test]
fn wp_matches_execution_on_random_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let src = random_program(&mut rng, true);
        let p = parse(&src, "w.c").unwrap();
        let (mid, q) = split(&p);
        let w = wp_stmt(&mid, &q).unwrap();
        for a in -8..=8 {
            for b in -8..=8 {
                for c in -8..=8 {
                    let got = w.eval(&|n| match n {
                        "a" => Some(a),
                        "b" => Some(b),
                        "c" => Some(c),
                        _ => None,
                    });
                    let want = match interp::run(&p, &[a, b, c], 10_000) {
                        Outcome::Returned(r) => r == 1,
                        o => panic!("{o:?}"),
                    };
                    assert_eq!(got, Some(want), "{src}\nwp = {w}\nat a={a} b={b} c={c}");
                }
            }
        }
    }
}

#[test]
fn wp_is_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let solver = Solver::new(SolverConfig::default());
    for _ in 0..100 {
        let src = random_program(&mut rng, false);
        let p = parse(&src, "m.c").unwrap();
        let (mid, q1) = split(&p);
        let extra = parse(&format!("int main() {{ int a = 0; int b = 0; int c = 0; if ({}) {{ a = 1; }} return 0; }}", cmp(&mut rng)), "e.c").unwrap();
        let r = lower_cond(extra.main().body[3].cond().unwrap()).unwrap();
        let q2 = Constraint::or([q1.clone(), r]);
        let w1 = wp_stmt(&mid, &q1).unwrap();
        let w2 = wp_stmt(&mid, &q2).unwrap();
        assert!(solver.check_valid(&w1.implies(&w2)).is_valid(), "{src}");
    }
}

#[test]
fn all_paths_formula_implies_each_path_and_stays_in_scope() {
    let solver = Solver::new(SolverConfig::default());
    for name in ["heap_overflow.c", "two_path_overflow.c", "loop_overflow.c", "negative_index.c", "branch_select.c", "div_by_zero.c"] {
        for ob in obligations(name, WpMode::AllPaths) {
            assert_eq!(ob.formula, Constraint::and(ob.per_path.iter().map(|(_, c)| c.clone())));
            for (_, c) in &ob.per_path {
                assert!(solver.check_valid(&ob.formula.implies(c)).is_valid(), "{name}");
            }
            // havocked values carry a quote; an assignment's own target is replaced during synthesis
            let outside: Vec<String> = ob
                .formula
                .free_names()
                .into_iter()
                .filter(|n| !ob.location.scope_vars.contains(n) && !n.contains('\''))
                .collect();
            let allowed = if ob.location.kind == FixKind::AssignRhs { 1 } else { 0 };
            assert!(outside.len() <= allowed, "{name}: {outside:?} not in {:?}", ob.location.scope_vars);
        }
    }
}

//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symdeffix_core::driver::{reinstrument, repair_source, RepairOptions, Verdict};
use symdeffix_core::instrument::{instrument, ErrorClasses};
use symdeffix_core::interp::{self, Outcome};
use symdeffix_core::lang::*;
use symdeffix_core::solver::{sexpr, CmpOp, Constraint, LinExpr, SatResult, Solver, SolverConfig, Validity};
use symdeffix_core::symex::{execute, ExecOptions};
use symdeffix_core::wp::{lower_cond, wp_stmt, WpMode};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corpus_files() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(root().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "c"))
        .collect();
    v.sort();
    v
}

/// Prints past the test harness's output capture.
fn verdict(n: u32, name: &str, result: Result<String, String>) {
    let line = match &result {
        Ok(detail) => format!("acceptance {n} ({name}): PASS - {detail}\n"),
        Err(why) => format!("acceptance {n} ({name}): FAIL - {why}\n"),
    };
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    if let Err(why) = result {
        panic!("acceptance {n} failed: {why}");
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn cli(args: &[&str], out: &Path) -> (i32, serde_json::Value, Duration) {
    let t = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_symdeffix"))
        .current_dir(root())
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .unwrap();
    let took = t.elapsed();
    let stem = Path::new(args[1]).file_stem().unwrap().to_string_lossy().into_owned();
    let text = std::fs::read_to_string(out.join(format!("{stem}.report.json"))).unwrap_or_else(|_| "null".into());
    (o.status.code().unwrap_or(-1), serde_json::from_str(&text).unwrap(), took)
}

fn load(path: &Path) -> Program {
    parse(&std::fs::read_to_string(path).unwrap(), path).unwrap()
}

#[test]
fn acceptance_1_flagship() {
    let run = || -> Result<String, String> {
        let dir = tempfile::tempdir().unwrap();
        let (code, r, took) = cli(&["repair", "corpus/heap_overflow.c"], dir.path());
        ensure(code == 0, format!("exit code {code}"))?;
        ensure(took < Duration::from_secs(10), format!("took {took:?}"))?;
        let c = &r["crash_reports"][0];
        ensure(c["cfc"] == "access(buffer) < base(buffer)+size(buffer)", format!("cfc {}", c["cfc"]))?;
        let trace = serde_json::to_string(&c["trace"]).unwrap();
        ensure(trace == r#"[["IN","main"]]"#, format!("trace {trace}"))?;
        ensure(c["crash_line"] == 19, format!("crash line {}", c["crash_line"]))?;
        ensure(r["patches"][0]["verified"] == true, "patch not verified")?;

        let path = root().join("corpus/heap_overflow.c");
        let out = repair_source(&std::fs::read_to_string(&path).unwrap(), Path::new("corpus/heap_overflow.c"), &RepairOptions::default())
            .map_err(|e| e.to_string())?;
        let fixed = out.patched.ok_or("no patched program")?;
        let mut guard = None;
        for s in &fixed.main().body {
            s.walk(&mut |s| {
                if s.line == 19 && matches!(s.kind, StmtKind::For { .. }) {
                    guard = s.cond().cloned();
                }
            });
        }
        let guard = guard.ok_or("no for loop on line 19")?;
        let got = lower_cond(&guard).ok_or("guard not linear")?;
        let want = sexpr::parse_constraint("(and (< i 10) (< i GLOBAL_MS__heap_overflow__malloc_7))").unwrap();
        let solver = Solver::new(SolverConfig::default());
        ensure(solver.check_valid(&got.iff(&want)).is_valid(), format!("guard `{}` not equivalent", expr_to_string(&guard)))?;
        Ok(format!("guard `{}`, {:.2?}", expr_to_string(&guard), took))
    };
    verdict(1, "flagship repair", run());
}

#[test]
fn acceptance_2_two_path_modes() {
    let run = || -> Result<String, String> {
        let t = Instant::now();
        let dir = tempfile::tempdir().unwrap();
        let (code, all, _) = cli(&["repair", "corpus/two_path_overflow.c"], dir.path());
        ensure(code == 0, format!("all-paths exit {code}"))?;
        let patches = all["patches"].as_array().cloned().unwrap_or_default();
        ensure(!patches.is_empty() && patches.iter().all(|p| p["verified"] == true), "all-paths patch not verified")?;

        let (code, single, _) = cli(&["repair", "corpus/two_path_overflow.c", "--single-trace"], dir.path());
        ensure(code == 0, format!("single-trace exit {code}"))?;
        ensure(single["cross_mode_check"]["passed"] == false, "discrepancy not recorded")?;

        // independent re-verification of both patched programs in all-paths mode
        let path = root().join("corpus/two_path_overflow.c");
        let src = std::fs::read_to_string(&path).unwrap();
        let reverify = |mode: WpMode| -> Result<usize, String> {
            let out = repair_source(&src, &path, &RepairOptions { mode, ..Default::default() }).map_err(|e| e.to_string())?;
            let fixed = out.patched.ok_or("no patched program")?;
            let again = parse(&print_program(&fixed), &path).map_err(|e| e.to_string())?;
            Ok(execute(&reinstrument(&out.instrumented, &again, ErrorClasses::ALL), &ExecOptions::default()).crash_reports.len())
        };
        ensure(reverify(WpMode::AllPaths)? == 0, "all-paths patch fails re-verification")?;
        ensure(reverify(WpMode::SingleTrace)? > 0, "single-trace patch passes all-paths re-verification")?;
        let took = t.elapsed();
        ensure(took < Duration::from_secs(20), format!("took {took:?}"))?;
        Ok(format!(
            "all-paths `{}`, single-trace `{}`, {:.2?}",
            patches[0]["expr"].as_str().unwrap_or("?"),
            single["patches"][0]["expr"].as_str().unwrap_or("?"),
            took
        ))
    };
    verdict(2, "all-paths vs single-trace", run());
}

#[test]
fn acceptance_3_oracle_equivalence() {
    let run = || -> Result<String, String> {
        let solver = Solver::new(SolverConfig::default());
        let mut checked = vec![];
        for path in corpus_files() {
            let p = load(&path);
            let k = interp::nondet_sites(&p);
            if k > 2 {
                continue;
            }
            let mut grid: Vec<Vec<i64>> = vec![vec![]];
            for _ in 0..k {
                grid = grid.into_iter().flat_map(|v| (0..=7).map(move |x| [v.clone(), vec![x]].concat())).collect();
            }
            let res = execute(&instrument(&p, ErrorClasses::ALL), &ExecOptions::default());
            let pcs: Vec<Constraint> =
                res.crash_reports.iter().flat_map(|r| r.failing_paths.iter().map(|f| f.path_condition.clone())).collect();
            let mut symbolic = BTreeSet::new();
            let mut concrete = BTreeSet::new();
            for input in &grid {
                let pin = Constraint::and(input.iter().enumerate().map(|(i, v)| {
                    Constraint::cmp(&LinExpr::var(format!("$in{i}")), CmpOp::Eq, &LinExpr::constant(*v))
                }));
                if pcs.iter().any(|pc| solver.check_sat(&Constraint::and([pc.clone(), pin.clone()])).is_sat()) {
                    symbolic.insert(input.clone());
                }
                if interp::run(&p, input, 1_000_000).is_violation() {
                    concrete.insert(input.clone());
                }
            }
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            ensure(symbolic == concrete, format!("{name}: symbolic {} vs concrete {}", symbolic.len(), concrete.len()))?;
            checked.push(format!("{name}={}", concrete.len()));
        }
        ensure(checked.len() >= 10, format!("only {} programs", checked.len()))?;
        Ok(format!("{} programs [{}]", checked.len(), checked.join(" ")))
    };
    verdict(3, "oracle equivalence", run());
}

fn random_straight_line(rng: &mut ChaCha8Rng) -> String {
    const V: [&str; 3] = ["a", "b", "c"];
    let term = |rng: &mut ChaCha8Rng| -> String {
        let x = V[rng.gen_range(0..3)];
        let y = V[rng.gen_range(0..3)];
        match rng.gen_range(0..4) {
            0 => format!("{x} + {}", rng.gen_range(-5..6)),
            1 => format!("{} * {x} + {y}", rng.gen_range(-3..4)),
            2 => format!("{x} - {y} - {}", rng.gen_range(-5..6)),
            _ => format!("{x} + {} * {y}", rng.gen_range(-3..4)),
        }
    };
    let mut body = String::new();
    for _ in 0..rng.gen_range(1..=5) {
        body += &format!("{} = {};\n", V[rng.gen_range(0..3)], term(rng));
    }
    let op = ["<", "<=", "==", "!=", ">", ">="][rng.gen_range(0..6)];
    let q = format!("{} {op} {}", term(rng), rng.gen_range(-6..7));
    format!("int main() {{ int a = nondet_int(); int b = nondet_int(); int c = nondet_int();\n{body}int r = 0; if ({q}) {{ r = 1; }} return r; }}")
}

#[test]
fn acceptance_4_wp_straight_line() {
    let run = || -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut points = 0u64;
        for case in 0..200 {
            let src = random_straight_line(&mut rng);
            let p = parse(&src, "wp.c").map_err(|e| e.to_string())?;
            let body = &p.main().body;
            let n = body.len();
            let q = lower_cond(body[n - 2].cond().unwrap()).ok_or("Q not linear")?;
            let mut w = q.clone();
            for s in body[3..n - 3].iter().rev() {
                w = wp_stmt(s, &w).ok_or("unsupported statement")?;
            }
            for a in -8..=8 {
                for b in -8..=8 {
                    for c in -8..=8 {
                        let env = |v: &str| match v {
                            "a" => Some(a),
                            "b" => Some(b),
                            "c" => Some(c),
                            _ => None,
                        };
                        let expected = matches!(interp::run(&p, &[a, b, c], 10_000), Outcome::Returned(1));
                        if w.eval(&env) != Some(expected) {
                            return Err(format!("case {case} at ({a},{b},{c}):\n{src}"));
                        }
                        points += 1;
                    }
                }
            }
        }
        Ok(format!("200 programs, {points} input vectors"))
    };
    verdict(4, "weakest preconditions", run());
}

/// `Σ coeffs·(x,y,z) + k  op  0`, kept apart from the solver's own types.
#[derive(Clone, Debug)]
struct Atom {
    coeffs: [i64; 3],
    k: i64,
    op: CmpOp,
}

#[derive(Clone, Debug)]
enum F {
    A(Atom),
    Not(Box<F>),
    And(Box<F>, Box<F>),
    Or(Box<F>, Box<F>),
}

impl F {
    fn eval(&self, p: [i64; 3]) -> bool {
        match self {
            F::A(a) => a.op.holds(a.coeffs[0] * p[0] + a.coeffs[1] * p[1] + a.coeffs[2] * p[2] + a.k, 0),
            F::Not(f) => !f.eval(p),
            F::And(x, y) => x.eval(p) && y.eval(p),
            F::Or(x, y) => x.eval(p) || y.eval(p),
        }
    }

    fn lower(&self) -> Constraint {
        match self {
            F::A(a) => {
                let mut e = LinExpr::constant(a.k);
                for (i, n) in ["x", "y", "z"].iter().enumerate() {
                    e = e.add(&LinExpr::var(*n).scale(a.coeffs[i]));
                }
                Constraint::cmp(&e, a.op, &LinExpr::constant(0))
            }
            F::Not(f) => f.lower().negate(),
            F::And(x, y) => Constraint::and([x.lower(), y.lower()]),
            F::Or(x, y) => Constraint::or([x.lower(), y.lower()]),
        }
    }
}

fn random_linear(rng: &mut ChaCha8Rng) -> F {
    const OPS: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];
    let nsym = rng.gen_range(1..=3);
    let mut parts: Vec<F> = (0..rng.gen_range(1..=4))
        .map(|_| {
            let mut coeffs = [0; 3];
            for c in coeffs.iter_mut().take(nsym) {
                *c = rng.gen_range(-4..=4);
            }
            F::A(Atom { coeffs, k: rng.gen_range(-8..=8), op: OPS[rng.gen_range(0..6)] })
        })
        .collect();
    while parts.len() > 1 {
        let a = parts.remove(rng.gen_range(0..parts.len()));
        let b = parts.remove(rng.gen_range(0..parts.len()));
        let f = if rng.gen_bool(0.6) { F::And(Box::new(a), Box::new(b)) } else { F::Or(Box::new(a), Box::new(b)) };
        parts.push(if rng.gen_bool(0.2) { F::Not(Box::new(f)) } else { f });
    }
    parts.pop().unwrap()
}

fn box_sat(f: &F) -> bool {
    (-64..=64).any(|x| (-64..=64).any(|y| (-64..=64).any(|z| f.eval([x, y, z]))))
}

fn point(m: &std::collections::BTreeMap<String, i64>) -> [i64; 3] {
    ["x", "y", "z"].map(|n| m.get(n).copied().unwrap_or(0))
}

fn check_formula(f: &F, solver: &Solver) -> Result<(), String> {
    let c = f.lower();
    let sat = box_sat(f);
    match solver.check_sat(&c) {
        SatResult::Sat(m) => {
            ensure(sat, format!("solver sat, oracle unsat: {c}"))?;
            ensure(f.eval(point(&m)), format!("model {m:?} fails {c}"))?;
        }
        SatResult::Unsat => ensure(!sat, format!("solver unsat, oracle sat: {c}"))?,
        SatResult::Unknown(r) => return Err(format!("unknown ({r}): {c}")),
    }
    let neg = F::Not(Box::new(f.clone()));
    match solver.check_valid(&c) {
        Validity::Valid => ensure(!box_sat(&neg), format!("solver valid, oracle has a counterexample: {c}")),
        Validity::Invalid(m) => ensure(!f.eval(point(&m)), format!("counter-model {m:?} satisfies {c}")),
        Validity::Unknown(r) => Err(format!("unknown validity ({r}): {c}")),
    }
}

#[test]
fn acceptance_5_solver_exactness() {
    let run = || -> Result<String, String> {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let formulas: Vec<F> = (0..1000).map(|_| random_linear(&mut rng)).collect();
        let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(8);
        let chunk = formulas.len().div_ceil(workers);
        let results: Vec<Result<usize, String>> = std::thread::scope(|s| {
            let handles: Vec<_> = formulas
                .chunks(chunk)
                .map(|fs| {
                    s.spawn(move || {
                        let solver = Solver::new(SolverConfig::default());
                        let mut sat = 0;
                        for f in fs {
                            check_formula(f, &solver)?;
                            sat += box_sat(f) as usize;
                        }
                        Ok(sat)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut sat = 0;
        for r in results {
            sat += r?;
        }
        Ok(format!("1000 formulas ({sat} sat, {} unsat)", 1000 - sat))
    };
    verdict(5, "solver exactness", run());
}

#[test]
fn acceptance_6_soundness_gate() {
    let run = || -> Result<String, String> {
        let dir = tempfile::tempdir().unwrap();
        let mut verified = 0;
        let mut summary = vec![];
        for path in corpus_files() {
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let rel = format!("corpus/{name}");
            let (code, r, _) = cli(&["repair", &rel], dir.path());
            let stem = name.trim_end_matches(".c");
            let diff_written = dir.path().join(format!("{stem}.patch.diff")).exists();
            let patches = r["patches"].as_array().cloned().unwrap_or_default();
            let all_verified = !patches.is_empty() && patches.iter().all(|p| p["verified"] == true);
            ensure(diff_written == (code == 0 && all_verified), format!("{name}: diff written = {diff_written}, exit {code}"))?;

            let src = std::fs::read_to_string(&path).unwrap();
            let opts = RepairOptions::default();
            let out = repair_source(&src, Path::new(&rel), &opts).map_err(|e| e.to_string())?;
            if out.report.patches.iter().any(|p| p.verified) {
                ensure(out.report.verdict == Verdict::Repaired, format!("{name}: verified patch without Repaired"))?;
                let fixed = out.patched.as_ref().ok_or(format!("{name}: no patched program"))?;
                let again = parse(&print_program(fixed), Path::new(&rel)).map_err(|e| format!("{name}: {e}"))?;
                let exec = ExecOptions { bounds: opts.bounds, ..Default::default() };
                let res = execute(&reinstrument(&out.instrumented, &again, ErrorClasses::ALL), &exec);
                ensure(res.crash_reports.is_empty(), format!("{name}: {} reports after patching", res.crash_reports.len()))?;
                verified += out.report.patches.len();
            } else {
                ensure(out.diff.is_none(), format!("{name}: diff for unverified patch"))?;
            }
            summary.push(format!("{name}={:?}", out.report.verdict));
        }
        Ok(format!("{verified} verified patches re-checked [{}]", summary.join(" ")))
    };
    verdict(6, "soundness gate", run());
}

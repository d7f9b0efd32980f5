//! The repair pipeline and its JSON report.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::fixloc::{find_fix_locations, FixKind, FixLocation};
use crate::instrument::{insert_sanitizer_checks, instrument, CheckKind, ErrorClasses, Instrumented};
use crate::lang::{parse, LangError, NodeId, Program};
use crate::solver::{CmpOp, Constraint, LinExpr, Solver, SolverConfig};
use crate::symex::{execute, CrashReport, ExecBounds, ExecOptions, ExecutionResult, FailingPath};
use crate::synth::{apply_patch, patch_diff, synthesize, Patch, SynthConfig, SynthOutcome, Template};
use crate::wp::{propagate, WpMode};

pub const SCHEMA_VERSION: &str = "1.0";

#[derive(Debug, Clone)]
pub struct RepairOptions {
    pub bounds: ExecBounds,
    pub classes: ErrorClasses,
    pub mode: WpMode,
    pub synth: SynthConfig,
    pub solver_timeout: Duration,
    pub max_locations: usize,
    pub out_dir: PathBuf,
    pub timings: bool,
}

impl Default for RepairOptions {
    fn default() -> Self {
        RepairOptions {
            bounds: ExecBounds::default(),
            classes: ErrorClasses::ALL,
            mode: WpMode::AllPaths,
            synth: SynthConfig::default(),
            solver_timeout: Duration::from_millis(2000),
            max_locations: 10,
            out_dir: PathBuf::from("./tmp/"),
            timings: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Repaired,
    NoBugFound,
    BugNoPatch,
    Unconfirmed,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Repaired => 0,
            Verdict::NoBugFound => 1,
            Verdict::BugNoPatch => 2,
            Verdict::Unconfirmed => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundsReport {
    pub unroll_bound: u32,
    pub max_paths: usize,
    pub max_expr_size: usize,
    pub max_patches: usize,
    pub solver_timeout_ms: u64,
    pub error_class: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrashSummary {
    pub cfc: String,
    pub cfc_template: CheckKind,
    pub trace: Vec<(String, String)>,
    pub crash_line: u32,
    pub function: String,
    pub failing_paths: usize,
    pub path_ids: Vec<String>,
    /// Inputs of the first failing path, in consumption order.
    pub witness_inputs: Vec<i64>,
    pub unconfirmed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CandidateOutcome {
    Patched,
    AlreadySafe,
    NoPatch,
    /// No failing path passes the location, or the constraint is not expressible.
    Dropped,
    NotTried,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CandidateReport {
    pub crash_line: u32,
    pub rank: u32,
    pub line: u32,
    pub kind: FixKind,
    pub node: u32,
    pub scope_vars: Vec<String>,
    /// Propagated constraint in s-expression form.
    pub constraint: Option<String>,
    pub per_path: Vec<(String, String)>,
    pub outcome: CandidateOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatchReport {
    pub crash_line: u32,
    pub location_rank: u32,
    pub line: u32,
    pub template: Template,
    pub expr: String,
    pub size: usize,
    pub verified: bool,
    pub diff: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossModeCheck {
    pub mode: WpMode,
    pub passed: bool,
    pub remaining_crash_lines: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Exploration {
    pub paths_explored: usize,
    pub bound_hit: bool,
    pub path_cap_hit: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Timings {
    pub instrument_ms: u64,
    pub symex_ms: u64,
    pub fixloc_ms: u64,
    pub wp_ms: u64,
    pub synth_ms: u64,
    pub verify_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RepairReport {
    pub schema_version: String,
    pub input_path: String,
    pub instrumented_path: String,
    pub mode: WpMode,
    pub bounds: BoundsReport,
    pub verdict: Verdict,
    pub exit_code: i32,
    pub exploration: Exploration,
    pub crash_reports: Vec<CrashSummary>,
    pub fix_candidates: Vec<CandidateReport>,
    pub patches: Vec<PatchReport>,
    pub cross_mode_check: Option<CrossModeCheck>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RepairOutcome {
    pub report: RepairReport,
    pub instrumented_text: String,
    /// Written only when the repair is verified.
    pub diff: Option<String>,
    pub instrumented: Instrumented,
    pub patched: Option<Program>,
}

pub fn emit_report(r: &RepairReport) -> String {
    let mut s = serde_json::to_string_pretty(r).expect("report serializes");
    s.push('\n');
    s
}

/// Parse and repair a source file's contents.
pub fn repair_source(src: &str, path: &Path, opts: &RepairOptions) -> Result<RepairOutcome, LangError> {
    let p = parse(src, path)?;
    Ok(repair(&p, opts))
}

pub fn instrumented_path(opts: &RepairOptions, source: &Path) -> PathBuf {
    opts.out_dir.join(format!("{}.instrumented.c", stem_of(source)))
}

/// File stem used for output names.
pub fn stem_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

type Key = (NodeId, CheckKind);

fn keys(res: &ExecutionResult) -> BTreeSet<Key> {
    res.crash_reports.iter().map(|r| (r.crash_node, r.cfc_template)).collect()
}

fn key(r: &CrashReport) -> Key {
    (r.crash_node, r.cfc_template)
}

struct Run<'a> {
    opts: &'a RepairOptions,
    exec: ExecOptions,
    solver: Solver,
    timings: Timings,
    candidates: Vec<CandidateReport>,
}

fn ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

pub fn repair(p: &Program, opts: &RepairOptions) -> RepairOutcome {
    let solver_cfg = SolverConfig { timeout: opts.solver_timeout, ..SolverConfig::default() };
    let mut run = Run {
        opts,
        exec: ExecOptions { bounds: opts.bounds, solver: solver_cfg.clone(), assume: None },
        solver: Solver::new(solver_cfg),
        timings: Timings::default(),
        candidates: vec![],
    };
    let ipath = instrumented_path(opts, &p.source_path);

    let t = Instant::now();
    let inst = instrument(p, opts.classes);
    let instrumented_text = inst.text();
    run.timings.instrument_ms = ms(t);

    let t = Instant::now();
    let mut first = execute(&inst, &run.exec);
    run.timings.symex_ms = ms(t);
    for r in &mut first.crash_reports {
        r.instrumented_path = ipath.clone();
    }

    let (accepted, final_prog, cross, verdict) = if first.crash_reports.is_empty() {
        let v = if first.path_cap_hit || first.has_unconfirmed() { Verdict::Unconfirmed } else { Verdict::NoBugFound };
        (vec![], None, None, v)
    } else {
        match opts.mode {
            WpMode::AllPaths => run.all_paths(&inst, &first),
            WpMode::SingleTrace => run.single_trace(&inst, &first),
        }
    };

    let diff = match (&final_prog, verdict) {
        (Some(fp), Verdict::Repaired) => Some(patch_diff(&inst.program, fp, &p.source_path.to_string_lossy())),
        _ => None,
    };

    let report = RepairReport {
        schema_version: SCHEMA_VERSION.into(),
        input_path: p.source_path.to_string_lossy().into_owned(),
        instrumented_path: ipath.to_string_lossy().into_owned(),
        mode: opts.mode,
        bounds: BoundsReport {
            unroll_bound: opts.bounds.unroll,
            max_paths: opts.bounds.max_paths,
            max_expr_size: opts.synth.max_expr_size,
            max_patches: opts.synth.max_patches,
            solver_timeout_ms: opts.solver_timeout.as_millis() as u64,
            error_class: class_name(opts.classes).into(),
        },
        verdict,
        exit_code: verdict.exit_code(),
        exploration: Exploration {
            paths_explored: first.paths_explored,
            bound_hit: first.bound_hit,
            path_cap_hit: first.path_cap_hit,
        },
        crash_reports: first.crash_reports.iter().map(summarize).collect(),
        fix_candidates: run.candidates,
        patches: accepted,
        cross_mode_check: cross,
        timings: opts.timings.then_some(run.timings),
    };
    RepairOutcome { report, instrumented_text, diff, instrumented: inst, patched: final_prog }
}

fn class_name(c: ErrorClasses) -> &'static str {
    match (c.heap_overflow, c.divide_by_zero) {
        (true, true) => "all",
        (true, false) => "heap-overflow",
        (false, true) => "divide-by-zero",
        (false, false) => "none",
    }
}

fn summarize(r: &CrashReport) -> CrashSummary {
    CrashSummary {
        cfc: r.cfc.clone(),
        cfc_template: r.cfc_template,
        trace: r.trace.clone(),
        crash_line: r.crash_line,
        function: r.function.clone(),
        failing_paths: r.failing_paths.len(),
        path_ids: r.failing_paths.iter().map(|f| f.path_id.clone()).collect(),
        witness_inputs: r.failing_paths.first().map(|f| f.witness_inputs()).unwrap_or_default(),
        unconfirmed: r.unconfirmed,
    }
}

/// Same program with checks recomputed; the malloc-site globals are already present.
pub fn reinstrument(base: &Instrumented, program: &Program, classes: ErrorClasses) -> Instrumented {
    let (program, checks) = insert_sanitizer_checks(program, classes);
    Instrumented { program, globals: base.globals.clone(), checks }
}

/// Pins every input the path consumed to its witness value.
pub fn witness_assumption(fp: &FailingPath) -> Constraint {
    Constraint::and(
        fp.witness_inputs()
            .into_iter()
            .enumerate()
            .map(|(k, v)| Constraint::cmp(&LinExpr::var(format!("$in{k}")), CmpOp::Eq, &LinExpr::constant(v))),
    )
}

type Finish = (Vec<PatchReport>, Option<Program>, Option<CrossModeCheck>, Verdict);

impl Run<'_> {
    fn all_paths(&mut self, inst: &Instrumented, first: &ExecutionResult) -> Finish {
        let mut current = inst.program.clone();
        let mut res = first.clone();
        let mut failed: BTreeSet<Key> = BTreeSet::new();
        let mut accepted: Vec<PatchReport> = vec![];
        let limit = 2 * first.crash_reports.len() + 2;
        for _ in 0..limit {
            let Some(target) = res.crash_reports.iter().find(|r| !failed.contains(&key(r))).cloned() else { break };
            let paths: Vec<&FailingPath> = target.failing_paths.iter().collect();
            let before = keys(&res);
            let found = self.try_locations(&current, &target, &paths, |run, patched| {
                let t = Instant::now();
                let out = execute(&reinstrument(inst, patched, run.opts.classes), &run.exec);
                run.timings.verify_ms += ms(t);
                let after = keys(&out);
                let ok = !out.path_cap_hit && !after.contains(&key(&target)) && after.is_subset(&before);
                ok.then_some(out)
            });
            match found {
                Some((patch, patched, out)) => {
                    accepted.push(patch_report(&target, &patch, &current, &patched, false));
                    current = patched;
                    res = out;
                }
                None => {
                    failed.insert(key(&target));
                }
            }
        }
        let clean = res.crash_reports.is_empty() && !res.path_cap_hit && !accepted.is_empty();
        if clean {
            for a in &mut accepted {
                a.verified = true;
            }
            return (accepted, Some(current), None, Verdict::Repaired);
        }
        let unconfirmed = res.crash_reports.iter().any(|r| r.unconfirmed && failed.contains(&key(r)));
        let v = if unconfirmed { Verdict::Unconfirmed } else { Verdict::BugNoPatch };
        (accepted, None, None, v)
    }

    /// One failing path per crash report; each patch is checked against that path's inputs only.
    fn single_trace(&mut self, inst: &Instrumented, first: &ExecutionResult) -> Finish {
        let mut current = inst.program.clone();
        let mut accepted: Vec<PatchReport> = vec![];
        let mut all_ok = true;
        for target in &first.crash_reports {
            let Some(fp) = target.failing_paths.first() else {
                all_ok = false;
                continue;
            };
            let paths = vec![fp];
            let assume = witness_assumption(fp);
            let found = self.try_locations(&current, target, &paths, |run, patched| {
                let t = Instant::now();
                let opts = ExecOptions { assume: Some(assume.clone()), ..run.exec.clone() };
                let out = execute(&reinstrument(inst, patched, run.opts.classes), &opts);
                run.timings.verify_ms += ms(t);
                (out.crash_reports.is_empty() && !out.path_cap_hit).then_some(out)
            });
            match found {
                Some((patch, patched, _)) => {
                    accepted.push(patch_report(target, &patch, &current, &patched, true));
                    current = patched;
                }
                None => all_ok = false,
            }
        }
        if !all_ok || accepted.is_empty() {
            let v = if first.has_unconfirmed() { Verdict::Unconfirmed } else { Verdict::BugNoPatch };
            return (accepted, None, None, v);
        }
        let t = Instant::now();
        let check = execute(&reinstrument(inst, &current, self.opts.classes), &self.exec);
        self.timings.verify_ms += ms(t);
        let cross = CrossModeCheck {
            mode: WpMode::AllPaths,
            passed: check.crash_reports.is_empty() && !check.path_cap_hit,
            remaining_crash_lines: check.crash_reports.iter().map(|r| r.crash_line).collect(),
        };
        (accepted, Some(current), Some(cross), Verdict::Repaired)
    }

    /// Walk fix locations in rank order; the first patch that `verify` accepts wins.
    fn try_locations(
        &mut self,
        current: &Program,
        target: &CrashReport,
        paths: &[&FailingPath],
        mut verify: impl FnMut(&mut Self, &Program) -> Option<ExecutionResult>,
    ) -> Option<(Patch, Program, ExecutionResult)> {
        let t = Instant::now();
        let locs = find_fix_locations(current, target, paths, self.opts.max_locations);
        self.timings.fixloc_ms += ms(t);
        let locs = locs.ok()?;
        let mut found = None;
        for loc in &locs {
            if found.is_some() {
                self.candidates.push(candidate(target, loc, None, CandidateOutcome::NotTried));
                continue;
            }
            let t = Instant::now();
            let ob = propagate(loc, paths, self.opts.mode);
            self.timings.wp_ms += ms(t);
            let Some(ob) = ob else {
                self.candidates.push(candidate(target, loc, None, CandidateOutcome::Dropped));
                continue;
            };
            let t = Instant::now();
            let outcome = synthesize(current, &ob, &self.opts.synth, &self.solver);
            self.timings.synth_ms += ms(t);
            let status = match outcome {
                SynthOutcome::AlreadySafe => CandidateOutcome::AlreadySafe,
                SynthOutcome::NotFound => CandidateOutcome::NoPatch,
                SynthOutcome::Found(patches) => {
                    for patch in patches {
                        let Ok(patched) = apply_patch(current, &patch) else { continue };
                        if let Some(out) = verify(self, &patched) {
                            found = Some((patch, patched, out));
                            break;
                        }
                    }
                    if found.is_some() {
                        CandidateOutcome::Patched
                    } else {
                        CandidateOutcome::NoPatch
                    }
                }
            };
            let mut c = candidate(target, loc, Some(&ob.formula), status);
            c.per_path = ob.per_path.iter().map(|(id, f)| (id.clone(), f.to_sexpr())).collect();
            self.candidates.push(c);
        }
        found
    }
}

fn candidate(target: &CrashReport, loc: &FixLocation, f: Option<&Constraint>, outcome: CandidateOutcome) -> CandidateReport {
    CandidateReport {
        crash_line: target.crash_line,
        rank: loc.rank,
        line: loc.line,
        kind: loc.kind,
        node: loc.node.0,
        scope_vars: loc.scope_vars.clone(),
        constraint: f.map(|c| c.to_sexpr()),
        per_path: vec![],
        outcome,
    }
}

fn patch_report(target: &CrashReport, patch: &Patch, before: &Program, after: &Program, verified: bool) -> PatchReport {
    PatchReport {
        crash_line: target.crash_line,
        location_rank: patch.location.rank,
        line: patch.location.line,
        template: patch.template,
        expr: patch.text.clone(),
        size: patch.size,
        verified,
        diff: patch_diff(before, after, &before.source_path.to_string_lossy()),
    }
}


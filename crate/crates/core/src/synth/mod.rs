//! Patch synthesis by bounded enumeration and validity checking.

mod grammar;
mod patch;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

pub use grammar::{Cmp, Grammar, Leaf, Sign, Term, OPS};
pub use patch::{apply_patch, patch_diff, SynthError};

use crate::fixloc::{FixKind, FixLocation};
use crate::lang::{expr_to_string, Expr, NodeRef, Program, StmtKind, DeclKind, LValue};
use crate::solver::{Constraint, Model, SatResult, Solver, Validity};
use crate::wp::{lower_cond, lower_expr, Obligation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Template {
    GuardStrengthen,
    GuardInsert,
    RhsReplace,
    GuardReplace,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Candidate {
    Cond(Cmp),
    Rhs(Term),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Patch {
    pub location: FixLocation,
    pub template: Template,
    pub candidate: Candidate,
    /// Size of the synthesized expression in grammar nodes.
    pub size: usize,
    /// The new guard or right-hand side, as it will be printed.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthOutcome {
    Found(Vec<Patch>),
    /// The existing code at the location already implies the obligation.
    AlreadySafe,
    NotFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthConfig {
    pub max_expr_size: usize,
    pub max_patches: usize,
    /// Upper bound on enumerated candidates per template.
    pub max_candidates: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { max_expr_size: 9, max_patches: 5, max_candidates: 250_000 }
    }
}

pub fn templates(kind: FixKind) -> &'static [Template] {
    match kind {
        FixKind::LoopGuard | FixKind::BranchGuard => &[Template::GuardStrengthen, Template::GuardReplace],
        FixKind::InsertBefore => &[Template::GuardInsert],
        FixKind::AssignRhs => &[Template::RhsReplace],
    }
}

/// Candidates at the obligation's location whose validity condition holds,
/// best first: smaller expressions, then template preference.
pub fn synthesize(p: &Program, ob: &Obligation, config: &SynthConfig, solver: &Solver) -> SynthOutcome {
    let loc = &ob.location;
    let index = p.index();
    let Some(NodeRef::Stmt(stmt)) = index.get(&loc.node).map(|i| i.node) else {
        return SynthOutcome::NotFound;
    };
    let f = &ob.formula;
    let existing_guard = stmt.cond().filter(|_| loc.kind != FixKind::InsertBefore).map(lower_cond);

    let already = match (loc.kind, &existing_guard) {
        (FixKind::LoopGuard | FixKind::BranchGuard, Some(Some(c))) => Some(c.implies(f)),
        (FixKind::InsertBefore, _) => Some(f.clone()),
        _ => None,
    };
    if let Some(q) = already {
        if solver.check_valid(&q).is_valid() {
            return SynthOutcome::AlreadySafe;
        }
    }

    let grammar = Grammar::new(&loc.scope_vars, &loc.scope_arrays, &p.int_constants(), config.max_expr_size);
    let mut out = vec![];
    for &t in templates(loc.kind) {
        let found = match t {
            Template::RhsReplace => {
                let Some((var, old)) = rhs_of(stmt) else { continue };
                rhs_patches(&grammar, ob, config, solver, &var, old.as_ref(), t)
            }
            Template::GuardStrengthen => {
                let Some(Some(c)) = &existing_guard else { continue };
                guard_patches(&grammar, ob, config, solver, Some(c), t)
            }
            _ => guard_patches(&grammar, ob, config, solver, None, t),
        };
        out.extend(found);
    }
    if out.is_empty() {
        return SynthOutcome::NotFound;
    }
    // stable: enumeration order breaks ties
    out.sort_by_key(|p| (p.size, p.template));
    out.truncate(config.max_patches);
    SynthOutcome::Found(out)
}

fn rhs_of(s: &crate::lang::Stmt) -> Option<(String, Option<crate::solver::LinExpr>)> {
    match &s.kind {
        StmtKind::Decl { name, kind: DeclKind::Int(Some(e)) } => Some((name.clone(), lower_expr(e))),
        StmtKind::Assign { target: LValue::Var(x), value } => Some((x.clone(), lower_expr(value))),
        _ => None,
    }
}

/// Counterexamples from failed validity checks, used to reject candidates cheaply.
struct Cex(Vec<Model>);

impl Cex {
    fn refutes(&self, q: &Constraint) -> bool {
        self.0.iter().any(|m| q.eval_model(m) == Some(false))
    }

    fn valid(&mut self, solver: &Solver, q: &Constraint) -> bool {
        if self.refutes(q) {
            return false;
        }
        match solver.check_valid(q) {
            Validity::Valid => true,
            Validity::Invalid(m) => {
                self.0.push(m);
                false
            }
            Validity::Unknown(_) => false,
        }
    }
}

/// Valid guards are gathered size by size. Within a size the weakest come
/// first: a guard implied by more of the other valid guards restricts less.
fn guard_patches(
    g: &Grammar,
    ob: &Obligation,
    config: &SynthConfig,
    solver: &Solver,
    existing: Option<&Constraint>,
    t: Template,
) -> Vec<Patch> {
    let mut out = vec![];
    let mut seen = BTreeSet::new();
    let mut budget = config.max_candidates;
    let mut cex = Cex(vec![]);
    let pool_cap = (3 * config.max_patches).max(16);
    for size in (3..=config.max_expr_size).step_by(2) {
        let mut pool: Vec<(Cmp, Constraint)> = vec![];
        for (cmp, e) in g.comparisons(size, &mut seen, &mut budget) {
            let guard = match existing {
                Some(c) => Constraint::and([c.clone(), e.clone()]),
                None => e.clone(),
            };
            if !cex.valid(solver, &guard.implies(&ob.formula)) || !reachable(solver, ob, &guard) {
                continue;
            }
            pool.push((cmp, guard));
            if pool.len() >= pool_cap {
                break;
            }
        }
        let scores: Vec<usize> = (0..pool.len())
            .map(|a| {
                (0..pool.len())
                    .filter(|&b| b != a && solver.check_valid(&pool[b].1.implies(&pool[a].1)).is_valid())
                    .count()
            })
            .collect();
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(scores[i]));
        for i in order {
            let cmp = pool[i].0.clone();
            let mut ids = 0;
            let text = expr_to_string(&cmp.expr(&mut ids, 0));
            out.push(Patch { location: ob.location.clone(), template: t, size, candidate: Candidate::Cond(cmp), text });
            if out.len() >= config.max_patches {
                return out;
            }
        }
        if budget == 0 {
            break;
        }
    }
    out
}

fn rhs_patches(
    g: &Grammar,
    ob: &Obligation,
    config: &SynthConfig,
    solver: &Solver,
    var: &str,
    old: Option<&crate::solver::LinExpr>,
    t: Template,
) -> Vec<Patch> {
    let mut out = vec![];
    let mut seen = BTreeSet::new();
    let mut cex = Cex(vec![]);
    let mut budget = config.max_candidates;
    for size in (1..=config.max_expr_size).step_by(2) {
        for term in g.terms(size) {
            if budget == 0 {
                return out;
            }
            budget -= 1;
            let lin = term.lin();
            if Some(&lin) == old || !seen.insert(lin.clone()) {
                continue;
            }
            if !cex.valid(solver, &ob.formula.substitute(var, &lin)) {
                continue;
            }
            let mut ids = 0;
            let text = expr_to_string(&term.expr(&mut ids, 0));
            out.push(Patch { location: ob.location.clone(), template: t, size, candidate: Candidate::Rhs(term.clone()), text });
            if out.len() >= config.max_patches {
                return out;
            }
        }
    }
    out
}

/// The guard can be true at some recorded traversal of the location.
fn reachable(solver: &Solver, ob: &Obligation, guard: &Constraint) -> bool {
    if ob.snapshots.is_empty() {
        return true;
    }
    ob.snapshots.iter().any(|s| {
        let g = bind(guard, &s.env);
        !matches!(solver.check_sat(&Constraint::and(s.pc.iter().cloned().chain([g]))), SatResult::Unsat)
    })
}

fn bind(c: &Constraint, env: &BTreeMap<String, crate::solver::LinExpr>) -> Constraint {
    c.free_names().iter().fold(c.clone(), |c, n| match env.get(n) {
        Some(v) => c.substitute(n, v),
        None => c,
    })
}

/// The synthesized expression as an AST with fresh ids above `*ids`.
pub fn candidate_expr(c: &Candidate, ids: &mut u32, line: u32) -> Expr {
    match c {
        Candidate::Cond(cmp) => cmp.expr(ids, line),
        Candidate::Rhs(t) => t.expr(ids, line),
    }
}

use std::collections::BTreeMap;

use crate::fixloc::{FixKind, FixLocation};
use crate::lang::{DeclKind, LValue, Stmt, StmtKind};
use crate::solver::{Constraint, LinExpr};
use crate::symex::{FailingPath, LogKind};

use super::lower::{lower_cond, lower_expr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum WpMode {
    AllPaths,
    SingleTrace,
}

/// State at one traversal of a fix location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    /// Path-condition conjuncts in force, over input symbols.
    pub pc: Vec<Constraint>,
    /// Integer program variables in terms of input symbols.
    pub env: BTreeMap<String, LinExpr>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Obligation {
    pub location: FixLocation,
    pub mode: WpMode,
    /// Path id and that path's constraint, for the paths through the location.
    pub per_path: Vec<(String, Constraint)>,
    /// Condition over program variables at the location that keeps every
    /// considered failing path from crashing.
    pub formula: Constraint,
    pub snapshots: Vec<Snapshot>,
    /// Paths that pass through the location.
    pub paths_used: usize,
}

/// Weakest precondition of the crash-free constraint at `loc`, along the
/// failing paths. `None` when no path passes through it or a check is not
/// expressible over program variables.
pub fn propagate(loc: &FixLocation, paths: &[&FailingPath], mode: WpMode) -> Option<Obligation> {
    let paths: &[&FailingPath] = match mode {
        WpMode::AllPaths => paths,
        WpMode::SingleTrace => &paths[..paths.len().min(1)],
    };
    let mut per_path = vec![];
    let mut snapshots = vec![];
    for fp in paths {
        let check = fp.check_prog.clone()?;
        let Some(anchor) = anchor(loc, fp) else { continue };
        per_path.push((fp.path_id.clone(), backward(fp, anchor, check)));
        snapshots.extend(traversals(loc, fp));
    }
    if per_path.is_empty() {
        return None;
    }
    let formula = Constraint::and(per_path.iter().map(|(_, c)| c.clone()));
    Some(Obligation { location: loc.clone(), mode, paths_used: per_path.len(), per_path, formula, snapshots })
}

/// Log index of the last traversal of `loc` in the crashing frame.
fn anchor(loc: &FixLocation, fp: &FailingPath) -> Option<usize> {
    fp.log.iter().rposition(|ev| ev.frame == fp.frame && is_traversal(loc, &ev.kind))
}

fn is_traversal(loc: &FixLocation, k: &LogKind) -> bool {
    match (loc.kind, k) {
        (FixKind::LoopGuard | FixKind::BranchGuard, LogKind::Branch { owner, taken: true, .. }) => *owner == loc.node,
        (FixKind::AssignRhs, LogKind::Assign { node, .. }) => *node == loc.node,
        (FixKind::InsertBefore, LogKind::Stmt { node, .. }) => *node == loc.node,
        _ => false,
    }
}

fn traversals(loc: &FixLocation, fp: &FailingPath) -> Vec<Snapshot> {
    let mut out = vec![];
    for ev in fp.log.iter().filter(|ev| ev.frame == fp.frame) {
        let env = match (&ev.kind, loc.kind) {
            (LogKind::Branch { owner, env, .. }, FixKind::LoopGuard | FixKind::BranchGuard) if *owner == loc.node => env,
            (LogKind::Stmt { node, env }, FixKind::AssignRhs | FixKind::InsertBefore) if *node == loc.node => env,
            _ => continue,
        };
        let snap = Snapshot { pc: fp.pc_parts[..ev.pc_len.min(fp.pc_parts.len())].to_vec(), env: env.clone() };
        if !out.contains(&snap) {
            out.push(snap);
        }
    }
    out
}

/// Walk the log from the crash back to (not including) `stop`.
fn backward(fp: &FailingPath, stop: usize, mut q: Constraint) -> Constraint {
    let mut fresh = 0;
    for ev in fp.log[stop + 1..].iter().rev().filter(|ev| ev.frame == fp.frame) {
        q = match &ev.kind {
            LogKind::Stmt { .. } => q,
            LogKind::Assign { var, value: Some(v), .. } => q.substitute(var, v),
            LogKind::Assign { var, value: None, .. } => havoc(q, var, &mut fresh),
            LogKind::Havoc { vars, .. } => vars.iter().fold(q, |q, v| havoc(q, v, &mut fresh)),
            LogKind::Branch { taken, cond: Some(c), .. } => {
                let c = if *taken { c.clone() } else { c.negate() };
                c.implies(&q)
            }
            LogKind::Branch { cond: None, .. } => q,
            LogKind::Assume { check: Some(c), .. } => c.implies(&q),
            LogKind::Assume { check: None, .. } => q,
        };
    }
    q
}

fn havoc(q: Constraint, var: &str, fresh: &mut usize) -> Constraint {
    *fresh += 1;
    q.substitute(var, &LinExpr::var(format!("{var}'{fresh}")))
}

/// Weakest precondition of `q` over a statement, from the AST. Loops and
/// statements touching memory or calls are not supported.
pub fn wp_stmt(s: &Stmt, q: &Constraint) -> Option<Constraint> {
    Some(match &s.kind {
        StmtKind::Decl { name, kind: DeclKind::Int(Some(e)) } => q.substitute(name, &lower_expr(e)?),
        StmtKind::Decl { name, kind: DeclKind::Int(None) } => q.substitute(name, &LinExpr::constant(0)),
        StmtKind::Assign { target: LValue::Var(x), value } => q.substitute(x, &lower_expr(value)?),
        StmtKind::Block(list) => {
            let mut q = q.clone();
            for s in list.iter().rev() {
                q = wp_stmt(s, &q)?;
            }
            q
        }
        StmtKind::If { cond, then_branch, else_branch } => {
            let c = lower_cond(cond)?;
            let t = wp_stmt(then_branch, q)?;
            let e = match else_branch {
                Some(e) => wp_stmt(e, q)?,
                None => q.clone(),
            };
            Constraint::and([c.implies(&t), c.negate().implies(&e)])
        }
        _ => return None,
    })
}


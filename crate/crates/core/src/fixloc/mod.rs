//! Candidate fix locations from control and data dependence.

mod dataflow;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

pub use dataflow::{def_use_chains, reaching_at, reaching_in, Def};

use crate::lang::*;
use crate::symex::{CrashReport, FailingPath};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FixKind {
    LoopGuard,
    BranchGuard,
    AssignRhs,
    InsertBefore,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixLocation {
    /// Guard owner (If/While/For), assignment, or the crash statement.
    pub node: NodeId,
    pub line: u32,
    pub kind: FixKind,
    pub function: String,
    /// Integer variables in scope, malloc-site globals included.
    pub scope_vars: Vec<String>,
    /// Arrays in scope with their lengths, for `sizeof`.
    pub scope_arrays: Vec<(String, i64)>,
    pub rank: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FixLocError {
    #[error("no fix location found for the crash at line {0}")]
    EmptyCandidates(u32),
}

/// Rank-ordered candidates for `report`, using the given failing paths.
pub fn find_fix_locations(
    p: &Program,
    report: &CrashReport,
    paths: &[&FailingPath],
    cap: usize,
) -> Result<Vec<FixLocation>, FixLocError> {
    let f = p.function(&report.function).expect("crash function exists");
    let cfg = build_cfg(p, f);
    let crash = report.crash_stmt;
    let index = p.index();
    let scopes = scopes(p, f);
    let dom = dominators(&cfg);
    let Some((crash_block, _)) = cfg.position(crash) else {
        return Err(FixLocError::EmptyCandidates(report.crash_line));
    };

    let mut found: BTreeMap<NodeId, FixKind> = BTreeMap::new();

    // Guards the crash is (transitively) control dependent on.
    for b in control_ancestors(&cfg, crash_block) {
        if let Some(last) = cfg.blocks[b].stmts.last().filter(|s| s.is_cond) {
            let owner = stmt(&index, last.id);
            let kind = if matches!(owner.kind, StmtKind::If { .. }) { FixKind::BranchGuard } else { FixKind::LoopGuard };
            found.insert(last.id, kind);
        }
    }

    // Assignments flowing into the variables of the crash-free constraint.
    let mut wanted: BTreeSet<String> = BTreeSet::new();
    for fp in paths {
        if let Some(c) = &fp.check_prog {
            wanted.extend(c.free_names());
        }
    }
    if wanted.is_empty() {
        if let Some(cs) = cfg.position(crash).map(|(b, i)| &cfg.blocks[b].stmts[i]) {
            wanted.extend(cs.uses.iter().cloned());
        }
    }
    let inn = reaching_in(&cfg);
    let mut seen: BTreeSet<(NodeId, String)> = BTreeSet::new();
    let mut work: Vec<(NodeId, String)> = wanted.into_iter().map(|v| (crash, v)).collect();
    while let Some((at, var)) = work.pop() {
        if !seen.insert((at, var.clone())) {
            continue;
        }
        for (d, v) in reaching_at(&cfg, &inn, at) {
            if v != var {
                continue;
            }
            let s = stmt(&index, d);
            if let Some((b, i)) = cfg.position(d) {
                for u in &cfg.blocks[b].stmts[i].uses {
                    work.push((d, u.clone()));
                }
            }
            if !s.synthetic && is_rhs_candidate(s) {
                found.entry(d).or_insert(FixKind::AssignRhs);
            }
        }
    }

    let mut cands: Vec<(usize, u32, NodeId, FixKind)> = Vec::new();
    for (node, kind) in found {
        if !cfg.stmt_dominates(&dom, node, crash) || node == crash {
            continue;
        }
        let Some(dist) = cfg.stmt_distance(node, crash) else { continue };
        cands.push((dist, stmt(&index, node).line, node, kind));
    }
    cands.sort();
    let crash_stmt = stmt(&index, crash);
    // Integer declarations are split before wrapping; buffers and arrays are not.
    let insert_ok = match &crash_stmt.kind {
        StmtKind::While { .. } | StmtKind::For { .. } => false,
        StmtKind::Decl { kind, .. } => matches!(kind, DeclKind::Int(Some(_))),
        _ => true,
    };
    let keep = if insert_ok { cap.saturating_sub(1) } else { cap };
    cands.truncate(keep);

    let mut out: Vec<FixLocation> = cands
        .into_iter()
        .map(|(_, line, node, kind)| FixLocation {
            node,
            line,
            kind,
            function: f.name.clone(),
            scope_vars: location_scope(&scopes, stmt(&index, node), kind),
            scope_arrays: scopes.get(&node).map(|s| s.arrays.clone()).unwrap_or_default(),
            rank: 0,
        })
        .collect();
    if insert_ok && cap > 0 {
        out.push(FixLocation {
            node: crash,
            line: crash_stmt.line,
            kind: FixKind::InsertBefore,
            function: f.name.clone(),
            scope_vars: scopes.get(&crash).map(|s| s.ints.clone()).unwrap_or_default(),
            scope_arrays: scopes.get(&crash).map(|s| s.arrays.clone()).unwrap_or_default(),
            rank: 0,
        });
    }
    for (i, loc) in out.iter_mut().enumerate() {
        loc.rank = i as u32 + 1;
    }
    if out.is_empty() {
        return Err(FixLocError::EmptyCandidates(report.crash_line));
    }
    Ok(out)
}

fn stmt<'a>(index: &NodeIndex<'a>, id: NodeId) -> &'a Stmt {
    match index.get(&id).map(|i| i.node) {
        Some(NodeRef::Stmt(s)) => s,
        _ => panic!("{id} is not a statement"),
    }
}

fn is_rhs_candidate(s: &Stmt) -> bool {
    let no_call = |e: &Expr| {
        let mut calls = false;
        e.walk(&mut |x| calls |= matches!(x.kind, ExprKind::Call { .. }));
        !calls
    };
    match &s.kind {
        StmtKind::Decl { kind: DeclKind::Int(Some(e)), .. } => no_call(e),
        StmtKind::Assign { target: LValue::Var(_), value } => value.ty == Type::Int && no_call(value),
        _ => false,
    }
}

fn location_scope(scopes: &BTreeMap<NodeId, Scope>, s: &Stmt, kind: FixKind) -> Vec<String> {
    let mut v = scopes.get(&s.id).map(|s| s.ints.clone()).unwrap_or_default();
    if kind == FixKind::AssignRhs {
        if let StmtKind::Decl { name, .. } = &s.kind {
            v.retain(|x| x != name);
        }
    }
    v
}

/// Blocks ending in a branch that `b` is transitively control dependent on.
pub fn control_ancestors(cfg: &Cfg, b: BlockId) -> Vec<BlockId> {
    let pdom = post_dominators(cfg);
    let direct = |y: BlockId| -> Vec<BlockId> {
        (0..cfg.len())
            .filter(|&x| {
                let succs = cfg.succs(x);
                succs.len() > 1
                    && succs.iter().any(|&s| pdom[s].contains(&y))
                    && !(pdom[x].contains(&y) && x != y)
            })
            .collect()
    };
    let mut out: Vec<BlockId> = Vec::new();
    let mut stack = vec![b];
    while let Some(y) = stack.pop() {
        for x in direct(y) {
            if !out.contains(&x) {
                out.push(x);
                stack.push(x);
            }
        }
    }
    out.sort();
    out
}

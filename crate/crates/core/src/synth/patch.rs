use crate::fixloc::FixKind;
use crate::lang::{print_program, BinOp, Expr, ExprKind, LValue, NodeId, Program, Stmt, StmtKind, Type, DeclKind};

use super::{candidate_expr, Patch, Template};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("node {0} not found in the program")]
    NodeNotFound(NodeId),
    #[error("template {0:?} does not apply at node {1}")]
    Mismatch(Template, NodeId),
}

/// A copy of `p` with the patch applied. New nodes get ids above the current maximum.
pub fn apply_patch(p: &Program, patch: &Patch) -> Result<Program, SynthError> {
    let mut out = p.clone();
    let mut ids = p.max_node_id().0;
    let target = patch.location.node;
    let mut result = Err(SynthError::NodeNotFound(target));
    for f in &mut out.functions {
        if f.name != patch.location.function {
            continue;
        }
        if let Some(r) = rewrite_list(&mut f.body, target, patch, &mut ids) {
            result = r;
        }
    }
    result.map(|_| out)
}

fn rewrite(s: &mut Stmt, target: NodeId, patch: &Patch, ids: &mut u32) -> Option<Result<(), SynthError>> {
    if s.id == target {
        return Some(edit(s, patch, ids));
    }
    match &mut s.kind {
        StmtKind::Block(list) => rewrite_list(list, target, patch, ids),
        StmtKind::If { then_branch, else_branch, .. } => {
            rewrite(then_branch, target, patch, ids).or_else(|| else_branch.as_mut().and_then(|e| rewrite(e, target, patch, ids)))
        }
        StmtKind::While { body, .. } => rewrite(body, target, patch, ids),
        StmtKind::For { init, step, body, .. } => init
            .as_mut()
            .and_then(|i| rewrite(i, target, patch, ids))
            .or_else(|| step.as_mut().and_then(|st| rewrite(st, target, patch, ids)))
            .or_else(|| rewrite(body, target, patch, ids)),
        _ => None,
    }
}

fn rewrite_list(list: &mut Vec<Stmt>, target: NodeId, patch: &Patch, ids: &mut u32) -> Option<Result<(), SynthError>> {
    if let Some(i) = list.iter().position(|s| s.id == target) {
        if patch.template == Template::GuardInsert {
            if let StmtKind::Decl { name, kind: DeclKind::Int(Some(init)) } = &list[i].kind {
                let (name, init, line) = (name.clone(), init.clone(), list[i].line);
                let decl_id = list[i].id;
                let zero = fresh(ids, line, Type::Int, ExprKind::IntLit(0));
                let assign_id = NodeId({
                    *ids += 1;
                    *ids
                });
                let assign = Stmt { id: assign_id, line, kind: StmtKind::Assign { target: LValue::Var(name.clone()), value: init }, synthetic: false };
                list[i] = Stmt { id: decl_id, line, kind: StmtKind::Decl { name, kind: DeclKind::Int(Some(zero)) }, synthetic: false };
                let mut guarded = assign;
                // the guard goes around the assignment; the declaration stays visible
                let r = edit(&mut guarded, patch, ids);
                list.insert(i + 1, guarded);
                return Some(r);
            }
        }
    }
    list.iter_mut().find_map(|c| rewrite(c, target, patch, ids))
}

fn fresh(ids: &mut u32, line: u32, ty: Type, kind: ExprKind) -> Expr {
    *ids += 1;
    Expr { id: NodeId(*ids), line, ty, kind }
}

fn edit(s: &mut Stmt, patch: &Patch, ids: &mut u32) -> Result<(), SynthError> {
    let line = s.line;
    let mismatch = || SynthError::Mismatch(patch.template, s.id);
    match (patch.template, patch.location.kind) {
        (Template::GuardStrengthen | Template::GuardReplace, FixKind::LoopGuard | FixKind::BranchGuard) => {
            let cond = match &mut s.kind {
                StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::For { cond, .. } => cond,
                _ => return Err(mismatch()),
            };
            let e = candidate_expr(&patch.candidate, ids, line);
            *cond = if patch.template == Template::GuardStrengthen {
                *ids += 1;
                Expr {
                    id: NodeId(*ids),
                    line,
                    ty: Type::Bool,
                    kind: ExprKind::Binary(BinOp::And, Box::new(cond.clone()), Box::new(e)),
                }
            } else {
                e
            };
            Ok(())
        }
        (Template::RhsReplace, FixKind::AssignRhs) => {
            let e = candidate_expr(&patch.candidate, ids, line);
            match &mut s.kind {
                StmtKind::Decl { kind: DeclKind::Int(Some(v)), .. } | StmtKind::Assign { target: LValue::Var(_), value: v } => {
                    *v = e;
                    Ok(())
                }
                _ => Err(mismatch()),
            }
        }
        (Template::GuardInsert, FixKind::InsertBefore) => {
            let e = candidate_expr(&patch.candidate, ids, line);
            *ids += 1;
            let inner = s.clone();
            *s = Stmt {
                id: NodeId(*ids),
                line,
                kind: StmtKind::If { cond: e, then_branch: Box::new(inner), else_branch: None },
                synthetic: false,
            };
            Ok(())
        }
        _ => Err(mismatch()),
    }
}

/// Unified diff between the printed programs.
pub fn patch_diff(before: &Program, after: &Program, path: &str) -> String {
    let (a, b) = (print_program(before), print_program(after));
    if a == b {
        return String::new();
    }
    similar::TextDiff::from_lines(&a, &b)
        .unified_diff()
        .context_radius(3)
        .header(&format!("a/{path}"), &format!("b/{path}"))
        .to_string()
}

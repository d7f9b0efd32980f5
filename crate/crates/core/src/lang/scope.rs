use std::collections::BTreeMap;

use super::ast::*;

/// Names visible just before a statement.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Scope {
    pub ints: Vec<String>,
    /// Fixed-size arrays and their lengths.
    pub arrays: Vec<(String, i64)>,
}

/// Scope before each statement of `f`, globals included.
/// A `for` statement's own init declaration counts as visible at the `for`.
pub fn scopes(p: &Program, f: &FunctionDef) -> BTreeMap<NodeId, Scope> {
    let mut out = BTreeMap::new();
    let mut vis: Vec<Name> = p.globals.iter().map(|g| Name::Int(g.name.clone())).collect();
    vis.extend(f.params.iter().filter(|p| p.ty == Type::Int).map(|p| Name::Int(p.name.clone())));
    walk_list(&f.body, &mut vis, &mut out);
    out
}

/// Just the integer names from [`scopes`].
pub fn int_scopes(p: &Program, f: &FunctionDef) -> BTreeMap<NodeId, Vec<String>> {
    scopes(p, f).into_iter().map(|(k, v)| (k, v.ints)).collect()
}

#[derive(Clone)]
enum Name {
    Int(String),
    Array(String, i64),
}

type Out = BTreeMap<NodeId, Scope>;

fn walk_list(list: &[Stmt], vis: &mut Vec<Name>, out: &mut Out) {
    let mark = vis.len();
    for s in list {
        walk(s, vis, out);
    }
    vis.truncate(mark);
}

fn walk(s: &Stmt, vis: &mut Vec<Name>, out: &mut Out) {
    match &s.kind {
        StmtKind::For { init, step, body, .. } => {
            let mark = vis.len();
            if let Some(i) = init {
                walk(i, vis, out);
            }
            out.insert(s.id, snapshot(vis));
            walk_arm(body, vis, out);
            if let Some(st) = step {
                walk(st, vis, out);
            }
            vis.truncate(mark);
        }
        _ => {
            out.insert(s.id, snapshot(vis));
            match &s.kind {
                StmtKind::Decl { name, kind: DeclKind::Int(_) } => vis.push(Name::Int(name.clone())),
                StmtKind::Decl { name, kind: DeclKind::Array { len, .. } } => vis.push(Name::Array(name.clone(), *len)),
                StmtKind::Block(list) => walk_list(list, vis, out),
                StmtKind::If { then_branch, else_branch, .. } => {
                    walk_arm(then_branch, vis, out);
                    if let Some(e) = else_branch {
                        walk_arm(e, vis, out);
                    }
                }
                StmtKind::While { body, .. } => walk_arm(body, vis, out),
                _ => {}
            }
        }
    }
}

fn walk_arm(s: &Stmt, vis: &mut Vec<Name>, out: &mut Out) {
    let mark = vis.len();
    walk(s, vis, out);
    vis.truncate(mark);
}

fn snapshot(v: &[Name]) -> Scope {
    let mut sc = Scope::default();
    for n in v {
        match n {
            Name::Int(x) => sc.ints.push(x.clone()),
            Name::Array(x, k) => sc.arrays.push((x.clone(), *k)),
        }
    }
    sc.ints.sort();
    sc.ints.dedup();
    sc.arrays.sort();
    sc
}

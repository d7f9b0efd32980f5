//! Malloc-size globals and sanitizer checks.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::lang::pretty::print_program_annotated;
use crate::lang::*;
use crate::solver::{Constraint, LinExpr, Rel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CheckKind {
    HeapBoundUpper,
    HeapBoundLower,
    DivByZero,
}

impl CheckKind {
    pub fn is_heap(self) -> bool {
        !matches!(self, CheckKind::DivByZero)
    }
}

/// Which error classes get sanitizer checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ErrorClasses {
    pub heap_overflow: bool,
    pub divide_by_zero: bool,
}

impl ErrorClasses {
    pub const ALL: ErrorClasses = ErrorClasses { heap_overflow: true, divide_by_zero: true };
    pub const NONE: ErrorClasses = ErrorClasses { heap_overflow: false, divide_by_zero: false };

    pub fn enables(&self, kind: CheckKind) -> bool {
        if kind.is_heap() {
            self.heap_overflow
        } else {
            self.divide_by_zero
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MallocSiteGlobal {
    pub name: String,
    pub site_line: u32,
    pub size_expr: Expr,
    pub file_stem: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SanitizerCheck {
    pub kind: CheckKind,
    /// The Index or Binary(/, %) expression being guarded.
    pub guarded_node: NodeId,
    /// Innermost statement containing the guarded node.
    pub stmt: NodeId,
    pub function: String,
    /// Over the intrinsic symbols `access(p)`, `base(p)`, `size(p)` for heap checks.
    pub check_expr: Constraint,
    pub line: u32,
    /// Buffer variable for heap checks.
    pub buffer: Option<String>,
    /// Statically known size source: a malloc-site global or an array length.
    pub size_source: Option<String>,
    /// Divisor text for division checks.
    pub divisor: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Instrumented {
    pub program: Program,
    pub globals: Vec<MallocSiteGlobal>,
    pub checks: Vec<SanitizerCheck>,
}

impl Instrumented {
    /// Instrumented source, with each check as a comment above its statement.
    pub fn text(&self) -> String {
        let mut notes: BTreeMap<NodeId, Vec<String>> = BTreeMap::new();
        for c in &self.checks {
            let mut s = format!("sanitizer: {:?} {}", c.kind, render_check(c));
            if let Some(src) = &c.size_source {
                s.push_str(&format!(" [size = {src}]"));
            }
            notes.entry(c.stmt).or_default().push(s);
        }
        print_program_annotated(&self.program, &|id| notes.get(&id).cloned().unwrap_or_default())
    }

    pub fn check_for(&self, node: NodeId, kind: CheckKind) -> Option<&SanitizerCheck> {
        self.checks.iter().find(|c| c.guarded_node == node && c.kind == kind)
    }

    pub fn global_names(&self) -> Vec<String> {
        self.globals.iter().map(|g| g.name.clone()).collect()
    }
}

/// Surface form of a check, e.g. `access(buffer) < base(buffer)+size(buffer)`.
pub fn render_check(c: &SanitizerCheck) -> String {
    match c.kind {
        CheckKind::HeapBoundUpper => {
            let v = c.buffer.as_deref().unwrap_or("?");
            format!("access({v}) < base({v})+size({v})")
        }
        CheckKind::HeapBoundLower => {
            let v = c.buffer.as_deref().unwrap_or("?");
            format!("access({v}) >= base({v})")
        }
        CheckKind::DivByZero => format!("{} != 0", c.divisor.as_deref().unwrap_or("?")),
    }
}

pub fn file_stem(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    stem.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

/// Full instrumentation: size globals first, then checks for the enabled classes.
pub fn instrument(p: &Program, classes: ErrorClasses) -> Instrumented {
    let (prog, globals) = insert_malloc_globals(p);
    let (program, checks) = insert_sanitizer_checks(&prog, classes);
    Instrumented { program, globals, checks }
}

struct Site {
    line: u32,
    ordinal: usize,
    total_on_line: usize,
}

fn is_malloc_stmt(s: &Stmt) -> bool {
    let e = match &s.kind {
        StmtKind::Decl { kind: DeclKind::Buf(Some(e)), .. } => e,
        StmtKind::Assign { target: LValue::Var(_), value } => value,
        _ => return false,
    };
    matches!(e.kind, ExprKind::Call { callee: Callee::Malloc, .. })
}

/// Add one global per malloc site and assign the size to it just before the call.
pub fn insert_malloc_globals(p: &Program) -> (Program, Vec<MallocSiteGlobal>) {
    let stem = file_stem(&p.source_path);
    let mut sites: Vec<(NodeId, u32)> = Vec::new();
    for f in &p.functions {
        for s in &f.body {
            s.walk(&mut |s| {
                if is_malloc_stmt(s) {
                    sites.push((s.id, s.line));
                }
            });
        }
    }
    if sites.is_empty() {
        return (p.clone(), vec![]);
    }
    sites.sort_by_key(|&(id, line)| (line, id));
    let mut per_line: BTreeMap<u32, usize> = BTreeMap::new();
    for &(_, line) in &sites {
        *per_line.entry(line).or_default() += 1;
    }
    let mut seen: BTreeMap<u32, usize> = BTreeMap::new();
    let mut info: BTreeMap<NodeId, Site> = BTreeMap::new();
    for &(id, line) in &sites {
        let ord = seen.entry(line).or_default();
        info.insert(id, Site { line, ordinal: *ord, total_on_line: per_line[&line] });
        *ord += 1;
    }

    let mut taken = user_names(p);
    let mut names: BTreeMap<NodeId, String> = BTreeMap::new();
    for &(id, _) in &sites {
        let s = &info[&id];
        let mut name = format!("GLOBAL_MS__{stem}__malloc_{}", s.line);
        if s.total_on_line > 1 {
            name.push_str(&format!("_{}", s.ordinal));
        }
        while taken.contains(&name) {
            name.push('_');
        }
        taken.push(name.clone());
        names.insert(id, name);
    }

    let mut out = p.clone();
    let mut next = p.max_node_id().0 + 1;
    let mut found: BTreeMap<NodeId, Expr> = BTreeMap::new();
    for f in &mut out.functions {
        rewrite_list(&mut f.body, &names, &mut next, &mut found);
    }
    let mut globals_out = Vec::new();
    let mut decls = Vec::new();
    for &(id, line) in &sites {
        let name = names[&id].clone();
        decls.push(GlobalDecl { id: fresh(&mut next), line, name: name.clone(), init: None, synthetic: true });
        globals_out.push(MallocSiteGlobal { name, site_line: line, size_expr: found[&id].clone(), file_stem: stem.clone() });
    }
    decls.extend(out.globals);
    out.globals = decls;
    (out, globals_out)
}

fn user_names(p: &Program) -> Vec<String> {
    let mut out: Vec<String> = p.globals.iter().map(|g| g.name.clone()).collect();
    for f in &p.functions {
        out.push(f.name.clone());
        out.extend(local_names(f));
    }
    out
}

fn fresh(next: &mut u32) -> NodeId {
    let id = NodeId(*next);
    *next += 1;
    id
}

fn rewrite_list(list: &mut Vec<Stmt>, names: &BTreeMap<NodeId, String>, next: &mut u32, found: &mut BTreeMap<NodeId, Expr>) {
    let mut out = Vec::with_capacity(list.len());
    for mut s in std::mem::take(list) {
        rewrite_children(&mut s, names, next, found);
        if let Some(name) = names.get(&s.id) {
            let (pre, s) = split_site(s, name, next, found);
            out.push(pre);
            out.push(s);
        } else {
            out.push(s);
        }
    }
    *list = out;
}

fn rewrite_arm(arm: &mut Box<Stmt>, names: &BTreeMap<NodeId, String>, next: &mut u32, found: &mut BTreeMap<NodeId, Expr>) {
    rewrite_children(arm, names, next, found);
    if let Some(name) = names.get(&arm.id) {
        let line = arm.line;
        let s = std::mem::replace(arm.as_mut(), Stmt { id: NodeId(0), line, kind: StmtKind::Block(vec![]), synthetic: true });
        let (pre, s) = split_site(s, name, next, found);
        **arm = Stmt { id: fresh(next), line, kind: StmtKind::Block(vec![pre, s]), synthetic: true };
    }
}

fn rewrite_children(s: &mut Stmt, names: &BTreeMap<NodeId, String>, next: &mut u32, found: &mut BTreeMap<NodeId, Expr>) {
    match &mut s.kind {
        StmtKind::Block(list) => rewrite_list(list, names, next, found),
        StmtKind::If { then_branch, else_branch, .. } => {
            rewrite_arm(then_branch, names, next, found);
            if let Some(e) = else_branch {
                rewrite_arm(e, names, next, found);
            }
        }
        StmtKind::While { body, .. } | StmtKind::For { body, .. } => rewrite_arm(body, names, next, found),
        _ => {}
    }
}

/// `p = malloc(E)` becomes `G = E; p = malloc(G)`.
fn split_site(mut s: Stmt, global: &str, next: &mut u32, found: &mut BTreeMap<NodeId, Expr>) -> (Stmt, Stmt) {
    let line = s.line;
    let call = match &mut s.kind {
        StmtKind::Decl { kind: DeclKind::Buf(Some(e)), .. } => e,
        StmtKind::Assign { value, .. } => value,
        _ => unreachable!("checked by is_malloc_stmt"),
    };
    let ExprKind::Call { args, .. } = &mut call.kind else { unreachable!() };
    let size = std::mem::replace(
        &mut args[0],
        Expr { id: fresh(next), line, ty: Type::Int, kind: ExprKind::Var(global.to_string()) },
    );
    found.insert(s.id, size.clone());
    let pre = Stmt {
        id: fresh(next),
        line,
        kind: StmtKind::Assign { target: LValue::Var(global.to_string()), value: size },
        synthetic: true,
    };
    (pre, s)
}

/// Static size source of each buffer variable that is bound to exactly one allocation.
fn size_sources(p: &Program, f: &FunctionDef) -> BTreeMap<String, String> {
    let mut out: BTreeMap<String, Option<String>> = BTreeMap::new();
    for s in &f.body {
        s.walk(&mut |s| {
            let (name, src) = match &s.kind {
                StmtKind::Decl { name, kind: DeclKind::Array { len, .. } } => (name, Some(len.to_string())),
                StmtKind::Decl { name, kind: DeclKind::Buf(Some(e)) } => (name, malloc_arg(p, e)),
                StmtKind::Assign { target: LValue::Var(name), value } if value.ty == Type::Buf => (name, malloc_arg(p, value)),
                _ => return,
            };
            out.entry(name.clone()).and_modify(|v| *v = None).or_insert(src);
        });
    }
    out.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))).collect()
}

fn malloc_arg(p: &Program, e: &Expr) -> Option<String> {
    match &e.kind {
        ExprKind::Call { callee: Callee::Malloc, args } => match &args[0].kind {
            ExprKind::Var(g) if p.global(g).is_some_and(|g| g.synthetic) => Some(g.clone()),
            _ => None,
        },
        _ => None,
    }
}

/// Record a check for every Index node and, when enabled, every division.
pub fn insert_sanitizer_checks(p: &Program, classes: ErrorClasses) -> (Program, Vec<SanitizerCheck>) {
    let mut checks = Vec::new();
    for f in &p.functions {
        let sizes = size_sources(p, f);
        for s in &f.body {
            s.walk(&mut |s| {
                for e in s.exprs() {
                    e.walk(&mut |e| match &e.kind {
                        ExprKind::Index { base, .. } if classes.heap_overflow => {
                            let v = base.as_var().expect("index base is a variable").to_string();
                            let access = LinExpr::symbol(crate::solver::Symbol::named(format!("access({v})")));
                            let basev = LinExpr::symbol(crate::solver::Symbol::named(format!("base({v})")));
                            let size = LinExpr::symbol(crate::solver::Symbol::named(format!("size({v})")));
                            for kind in [CheckKind::HeapBoundUpper, CheckKind::HeapBoundLower] {
                                let check_expr = if kind == CheckKind::HeapBoundUpper {
                                    // access - base - size + 1 <= 0
                                    Constraint::atom(access.sub(&basev).sub(&size).offset(1), Rel::Le)
                                } else {
                                    Constraint::atom(basev.sub(&access), Rel::Le)
                                };
                                checks.push(SanitizerCheck {
                                    kind,
                                    guarded_node: e.id,
                                    stmt: s.id,
                                    function: f.name.clone(),
                                    check_expr,
                                    line: e.line,
                                    buffer: Some(v.clone()),
                                    size_source: sizes.get(&v).cloned(),
                                    divisor: None,
                                });
                            }
                        }
                        ExprKind::Binary(op, _, d) if op.is_division() && classes.divide_by_zero => {
                            let text = expr_to_string(d);
                            let lhs = crate::wp::lower_expr(d)
                                .unwrap_or_else(|| LinExpr::symbol(crate::solver::Symbol::named(text.clone())));
                            checks.push(SanitizerCheck {
                                kind: CheckKind::DivByZero,
                                guarded_node: e.id,
                                stmt: s.id,
                                function: f.name.clone(),
                                check_expr: Constraint::atom(lhs, Rel::Ne),
                                line: e.line,
                                buffer: None,
                                size_source: None,
                                divisor: Some(text),
                            });
                        }
                        _ => {}
                    });
                }
            });
        }
    }
    (p.clone(), checks)
}

//! Typed AST for the Mini-C subset.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, serde::Serialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Type {
    Int,
    Bool,
    /// Reference to a heap buffer or fixed-size array.
    Buf,
    Void,
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Type::Int => "int",
            Type::Bool => "bool",
            Type::Buf => "buf",
            Type::Void => "void",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    pub globals: Vec<GlobalDecl>,
    pub functions: Vec<FunctionDef>,
    pub source_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalDecl {
    pub id: NodeId,
    pub line: u32,
    pub name: String,
    pub init: Option<i64>,
    /// Introduced by instrumentation rather than written by the user.
    pub synthetic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionDef {
    pub id: NodeId,
    pub line: u32,
    pub name: String,
    pub ret: Type,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub id: NodeId,
    pub line: u32,
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElemType {
    Char,
    Int,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeclKind {
    /// `int x;` / `int x = e;`
    Int(Option<Expr>),
    /// `char a[K];` / `int a[K];`
    Array { elem: ElemType, len: i64 },
    /// `buf p;` / `buf p = e;`
    Buf(Option<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LValue {
    Var(String),
    /// Always an `ExprKind::Index` node.
    Index(Expr),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stmt {
    pub id: NodeId,
    pub line: u32,
    pub kind: StmtKind,
    pub synthetic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StmtKind {
    Decl { name: String, kind: DeclKind },
    Assign { target: LValue, value: Expr },
    If { cond: Expr, then_branch: Box<Stmt>, else_branch: Option<Box<Stmt>> },
    While { cond: Expr, body: Box<Stmt> },
    For { init: Option<Box<Stmt>>, cond: Expr, step: Option<Box<Stmt>>, body: Box<Stmt> },
    Return(Option<Expr>),
    Expr(Expr),
    Block(Vec<Stmt>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }

    pub fn is_division(self) -> bool {
        matches!(self, BinOp::Div | BinOp::Rem)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Callee {
    Malloc,
    NondetInt,
    User(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expr {
    pub id: NodeId,
    pub line: u32,
    pub ty: Type,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExprKind {
    IntLit(i64),
    Var(String),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Index { base: Box<Expr>, offset: Box<Expr> },
    Call { callee: Callee, args: Vec<Expr> },
    /// Size of a fixed-size array, a compile-time constant.
    SizeOf { name: String, size: i64 },
}

impl Expr {
    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::IntLit(_) | ExprKind::Var(_) | ExprKind::SizeOf { .. } => vec![],
            ExprKind::Binary(_, a, b) => vec![a, b],
            ExprKind::Unary(_, a) => vec![a],
            ExprKind::Index { base, offset } => vec![base, offset],
            ExprKind::Call { args, .. } => args.iter().collect(),
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let ExprKind::Var(v) = &e.kind {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        });
        out
    }

    pub fn as_var(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Var(v) => Some(v),
            _ => None,
        }
    }

    /// True when evaluation can fail a sanitizer check or consume input.
    pub fn has_effects(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| match &e.kind {
            ExprKind::Index { .. } | ExprKind::Call { .. } => found = true,
            ExprKind::Binary(op, ..) if op.is_division() => found = true,
            _ => {}
        });
        found
    }

    pub fn user_call(&self) -> Option<(&str, &[Expr])> {
        match &self.kind {
            ExprKind::Call { callee: Callee::User(name), args } => Some((name, args)),
            _ => None,
        }
    }
}

impl Stmt {
    /// Direct sub-statements.
    pub fn children(&self) -> Vec<&Stmt> {
        match &self.kind {
            StmtKind::If { then_branch, else_branch, .. } => {
                let mut v = vec![then_branch.as_ref()];
                if let Some(e) = else_branch {
                    v.push(e);
                }
                v
            }
            StmtKind::While { body, .. } => vec![body],
            StmtKind::For { init, step, body, .. } => {
                let mut v = Vec::new();
                if let Some(i) = init {
                    v.push(i.as_ref());
                }
                if let Some(s) = step {
                    v.push(s.as_ref());
                }
                v.push(body);
                v
            }
            StmtKind::Block(stmts) => stmts.iter().collect(),
            _ => vec![],
        }
    }

    /// Expressions owned directly by this statement (not by sub-statements).
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Decl { kind: DeclKind::Int(Some(e)) | DeclKind::Buf(Some(e)), .. } => vec![e],
            StmtKind::Decl { .. } => vec![],
            StmtKind::Assign { target, value } => match target {
                LValue::Var(_) => vec![value],
                LValue::Index(ix) => vec![ix, value],
            },
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::For { cond, .. } => vec![cond],
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Expr(e) => vec![e],
            StmtKind::Block(_) => vec![],
        }
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    pub fn is_compound(&self) -> bool {
        matches!(
            self.kind,
            StmtKind::If { .. } | StmtKind::While { .. } | StmtKind::For { .. } | StmtKind::Block(_)
        )
    }

    pub fn cond(&self) -> Option<&Expr> {
        match &self.kind {
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } | StmtKind::For { cond, .. } => Some(cond),
            _ => None,
        }
    }

    /// Integer variable written by this statement, if any.
    pub fn defined_var(&self) -> Option<&str> {
        match &self.kind {
            StmtKind::Decl { name, kind: DeclKind::Int(_) } => Some(name),
            StmtKind::Assign { target: LValue::Var(v), value } if value.ty != Type::Buf => Some(v),
            _ => None,
        }
    }
}

/// Borrowed view of any AST node, for id lookups.
#[derive(Debug, Clone, Copy)]
pub enum NodeRef<'a> {
    Function(&'a FunctionDef),
    Param(&'a Param),
    Global(&'a GlobalDecl),
    Stmt(&'a Stmt),
    Expr(&'a Expr),
}

impl NodeRef<'_> {
    pub fn line(&self) -> u32 {
        match self {
            NodeRef::Function(f) => f.line,
            NodeRef::Param(p) => p.line,
            NodeRef::Global(g) => g.line,
            NodeRef::Stmt(s) => s.line,
            NodeRef::Expr(e) => e.line,
        }
    }
}

/// Where a node sits: its function and the innermost enclosing statement.
#[derive(Debug, Clone)]
pub struct NodeInfo<'a> {
    pub node: NodeRef<'a>,
    pub function: Option<&'a FunctionDef>,
    pub stmt: Option<&'a Stmt>,
}

pub type NodeIndex<'a> = BTreeMap<NodeId, NodeInfo<'a>>;

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn main(&self) -> &FunctionDef {
        self.function("main").expect("validated program has main")
    }

    pub fn global(&self, name: &str) -> Option<&GlobalDecl> {
        self.globals.iter().find(|g| g.name == name)
    }

    /// Every node by id, with its enclosing function and statement.
    pub fn index(&self) -> NodeIndex<'_> {
        let mut out = NodeIndex::new();
        for g in &self.globals {
            out.insert(g.id, NodeInfo { node: NodeRef::Global(g), function: None, stmt: None });
        }
        for f in &self.functions {
            out.insert(f.id, NodeInfo { node: NodeRef::Function(f), function: None, stmt: None });
            for p in &f.params {
                out.insert(p.id, NodeInfo { node: NodeRef::Param(p), function: Some(f), stmt: None });
            }
            for s in &f.body {
                s.walk(&mut |s| {
                    out.insert(s.id, NodeInfo { node: NodeRef::Stmt(s), function: Some(f), stmt: Some(s) });
                    for e in s.exprs() {
                        e.walk(&mut |e| {
                            out.insert(e.id, NodeInfo { node: NodeRef::Expr(e), function: Some(f), stmt: Some(s) });
                        });
                    }
                });
            }
        }
        out
    }

    /// All node ids in traversal order (duplicates indicate a malformed AST).
    pub fn node_ids(&self) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self.globals.iter().map(|g| g.id).collect();
        for f in &self.functions {
            out.push(f.id);
            out.extend(f.params.iter().map(|p| p.id));
            for s in &f.body {
                s.walk(&mut |s| {
                    out.push(s.id);
                    for e in s.exprs() {
                        e.walk(&mut |e| out.push(e.id));
                    }
                });
            }
        }
        out
    }

    pub fn max_node_id(&self) -> NodeId {
        self.node_ids().into_iter().max().unwrap_or_default()
    }

    /// Copy with every id and line number zeroed, for structural comparison.
    pub fn erase_positions(&self) -> Program {
        let mut p = self.clone();
        p.source_path = PathBuf::new();
        for g in &mut p.globals {
            g.id = NodeId(0);
            g.line = 0;
            g.synthetic = false;
        }
        for f in &mut p.functions {
            f.id = NodeId(0);
            f.line = 0;
            for prm in &mut f.params {
                prm.id = NodeId(0);
                prm.line = 0;
            }
            for s in &mut f.body {
                erase_stmt(s);
            }
        }
        p
    }

    /// Integer literals appearing anywhere in the program, sorted.
    pub fn int_constants(&self) -> Vec<i64> {
        let mut out = std::collections::BTreeSet::new();
        for f in &self.functions {
            for s in &f.body {
                s.walk(&mut |s| {
                    if let StmtKind::Decl { kind: DeclKind::Array { len, .. }, .. } = &s.kind {
                        out.insert(*len);
                    }
                    for e in s.exprs() {
                        e.walk(&mut |e| {
                            if let ExprKind::IntLit(v) = e.kind {
                                out.insert(v);
                            }
                        });
                    }
                });
            }
        }
        out.into_iter().collect()
    }

    /// Globals assigned by `func` or anything it calls.
    pub fn globals_written(&self, func: &str) -> Vec<String> {
        let mut seen = vec![func.to_string()];
        let mut out: Vec<String> = Vec::new();
        let mut i = 0;
        while i < seen.len() {
            let Some(f) = self.function(&seen[i]) else {
                i += 1;
                continue;
            };
            let locals = local_names(f);
            for s in &f.body {
                s.walk(&mut |s| {
                    if let Some(v) = s.defined_var() {
                        if !locals.contains(&v.to_string()) && self.global(v).is_some() && !out.iter().any(|o| o == v) {
                            out.push(v.to_string());
                        }
                    }
                    for e in s.exprs() {
                        e.walk(&mut |e| {
                            if let Some((callee, _)) = e.user_call() {
                                if !seen.iter().any(|n| n == callee) {
                                    seen.push(callee.to_string());
                                }
                            }
                        });
                    }
                });
            }
            i += 1;
        }
        out.sort();
        out
    }
}

/// Parameters and locally declared names of a function.
pub fn local_names(f: &FunctionDef) -> Vec<String> {
    let mut out: Vec<String> = f.params.iter().map(|p| p.name.clone()).collect();
    for s in &f.body {
        s.walk(&mut |s| {
            if let StmtKind::Decl { name, .. } = &s.kind {
                out.push(name.clone());
            }
        });
    }
    out
}

fn erase_stmt(s: &mut Stmt) {
    s.id = NodeId(0);
    s.line = 0;
    s.synthetic = false;
    match &mut s.kind {
        StmtKind::Decl { kind: DeclKind::Int(Some(e)) | DeclKind::Buf(Some(e)), .. } => erase_expr(e),
        StmtKind::Decl { .. } => {}
        StmtKind::Assign { target, value } => {
            if let LValue::Index(e) = target {
                erase_expr(e);
            }
            erase_expr(value);
        }
        StmtKind::If { cond, then_branch, else_branch } => {
            erase_expr(cond);
            erase_stmt(then_branch);
            if let Some(e) = else_branch {
                erase_stmt(e);
            }
        }
        StmtKind::While { cond, body } => {
            erase_expr(cond);
            erase_stmt(body);
        }
        StmtKind::For { init, cond, step, body } => {
            if let Some(i) = init {
                erase_stmt(i);
            }
            erase_expr(cond);
            if let Some(s) = step {
                erase_stmt(s);
            }
            erase_stmt(body);
        }
        StmtKind::Return(e) => {
            if let Some(e) = e {
                erase_expr(e);
            }
        }
        StmtKind::Expr(e) => erase_expr(e),
        StmtKind::Block(ss) => ss.iter_mut().for_each(erase_stmt),
    }
}

fn erase_expr(e: &mut Expr) {
    e.id = NodeId(0);
    e.line = 0;
    match &mut e.kind {
        ExprKind::Binary(_, a, b) => {
            erase_expr(a);
            erase_expr(b);
        }
        ExprKind::Unary(_, a) => erase_expr(a),
        ExprKind::Index { base, offset } => {
            erase_expr(base);
            erase_expr(offset);
        }
        ExprKind::Call { args, .. } => args.iter_mut().for_each(erase_expr),
        _ => {}
    }
}

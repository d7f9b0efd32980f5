//! Recursive-descent parser with inline type checking.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::LangError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarKind {
    Int,
    Buf,
    Array(i64),
}

#[derive(Debug, Clone)]
struct Signature {
    ret: Type,
    params: Vec<Type>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_id: u32,
    globals: BTreeMap<String, VarKind>,
    functions: BTreeMap<String, Signature>,
    /// Block scopes of the function being parsed.
    scopes: Vec<BTreeMap<String, VarKind>>,
    /// Every name declared so far in the current function.
    fn_names: HashSet<String>,
    current_fn: Option<(String, Type)>,
}

/// Parse and type-check Mini-C source text.
pub fn parse(source: &str, path: impl AsRef<Path>) -> Result<Program, LangError> {
    let toks = tokenize(source)?;
    let mut p = Parser {
        toks,
        pos: 0,
        next_id: 1,
        globals: BTreeMap::new(),
        functions: BTreeMap::new(),
        scopes: Vec::new(),
        fn_names: HashSet::new(),
        current_fn: None,
    };
    p.program(path.as_ref())
}

type PResult<T> = Result<T, LangError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn line(&self) -> u32 {
        self.toks[self.pos].line
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(LangError::Syntax { line: t.line, col: t.col, msg: msg.into() })
    }

    fn type_err<T>(line: u32, msg: impl Into<String>) -> PResult<T> {
        Err(LangError::Type { line, msg: msg.into() })
    }

    fn expect(&mut self, tok: Tok) -> PResult<Token> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            let found = self.peek().describe();
            self.syntax(format!("expected {}, found {found}", tok.describe()))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<(String, u32)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let line = self.line();
                self.bump();
                Ok((s, line))
            }
            other => self.syntax(format!("expected identifier, found {}", other.describe())),
        }
    }

    fn id(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    // ---- scopes ----

    fn lookup(&self, name: &str) -> Option<VarKind> {
        for s in self.scopes.iter().rev() {
            if let Some(k) = s.get(name) {
                return Some(*k);
            }
        }
        self.globals.get(name).copied()
    }

    fn declare(&mut self, name: &str, kind: VarKind, line: u32) -> PResult<()> {
        if is_builtin(name) || self.functions.contains_key(name) || self.globals.contains_key(name) {
            return Self::type_err(line, format!("`{name}` is already declared"));
        }
        if !self.fn_names.insert(name.to_string()) {
            return Self::type_err(line, format!("`{name}` is already declared in this function"));
        }
        self.scopes.last_mut().expect("inside a function").insert(name.to_string(), kind);
        Ok(())
    }

    // ---- top level ----

    fn program(&mut self, path: &Path) -> PResult<Program> {
        let mut globals = Vec::new();
        let mut functions = Vec::new();
        while *self.peek() != Tok::Eof {
            let line = self.line();
            let ret = match self.peek() {
                Tok::KwInt => Type::Int,
                Tok::KwVoid => Type::Void,
                other => return self.syntax(format!("expected declaration, found {}", other.describe())),
            };
            self.bump();
            let (name, _) = self.ident()?;
            if *self.peek() == Tok::LParen {
                functions.push(self.function(name, ret, line)?);
            } else {
                if ret != Type::Int {
                    return Self::type_err(line, "globals must have type int");
                }
                globals.push(self.global(name, line)?);
            }
        }
        if !functions.iter().any(|f: &FunctionDef| f.name == "main") {
            return Err(LangError::Type { line: 1, msg: "program has no `main` function".into() });
        }
        Ok(Program { globals, functions, source_path: path.to_path_buf() })
    }

    fn global(&mut self, name: String, line: u32) -> PResult<GlobalDecl> {
        if is_builtin(&name) || self.globals.contains_key(&name) || self.functions.contains_key(&name) {
            return Self::type_err(line, format!("`{name}` is already declared"));
        }
        let init = if self.eat(&Tok::Assign) {
            let neg = self.eat(&Tok::Minus);
            match self.bump().tok {
                Tok::Int(v) => Some(if neg { -v } else { v }),
                _ => return Self::type_err(line, "global initializers must be integer constants"),
            }
        } else {
            None
        };
        self.expect(Tok::Semi)?;
        self.globals.insert(name.clone(), VarKind::Int);
        Ok(GlobalDecl { id: self.id(), line, name, init, synthetic: false })
    }

    fn function(&mut self, name: String, ret: Type, line: u32) -> PResult<FunctionDef> {
        if is_builtin(&name) || self.globals.contains_key(&name) || self.functions.contains_key(&name) {
            return Self::type_err(line, format!("`{name}` is already declared"));
        }
        let id = self.id();
        self.expect(Tok::LParen)?;
        self.scopes = vec![BTreeMap::new()];
        self.fn_names.clear();
        self.current_fn = Some((name.clone(), ret));
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let pline = self.line();
                let ty = self.param_type()?;
                let (pname, _) = self.ident()?;
                self.declare(&pname, if ty == Type::Buf { VarKind::Buf } else { VarKind::Int }, pline)?;
                params.push(Param { id: self.id(), line: pline, name: pname, ty });
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma)?;
            }
        }
        if name == "main" && (ret != Type::Int || !params.is_empty()) {
            return Self::type_err(line, "`main` must be declared as `int main()`");
        }
        let body = match self.block()?.kind {
            StmtKind::Block(b) => b,
            _ => unreachable!(),
        };
        self.functions.insert(name.clone(), Signature { ret, params: params.iter().map(|p| p.ty).collect() });
        self.current_fn = None;
        self.scopes.clear();
        Ok(FunctionDef { id, line, name, ret, params, body })
    }

    fn param_type(&mut self) -> PResult<Type> {
        match self.peek() {
            Tok::Ident(s) if s == "buf" => {
                self.bump();
                Ok(Type::Buf)
            }
            Tok::KwInt | Tok::KwChar => {
                let is_char = *self.peek() == Tok::KwChar;
                self.bump();
                if self.eat(&Tok::Star) {
                    Ok(Type::Buf)
                } else if is_char {
                    self.syntax("`char` parameters must be pointers")
                } else {
                    Ok(Type::Int)
                }
            }
            other => self.syntax(format!("expected parameter type, found {}", other.describe())),
        }
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Stmt> {
        let line = self.line();
        self.expect(Tok::LBrace)?;
        self.scopes.push(BTreeMap::new());
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                self.scopes.pop();
                return self.syntax("expected `}`, found end of input");
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        self.scopes.pop();
        Ok(Stmt { id: self.id(), line, kind: StmtKind::Block(stmts), synthetic: false })
    }

    /// A branch arm gets its own scope even when it is not a block.
    fn arm(&mut self) -> PResult<Stmt> {
        self.scopes.push(BTreeMap::new());
        let s = self.stmt();
        self.scopes.pop();
        s
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let line = self.line();
        match self.peek() {
            Tok::LBrace => self.block(),
            Tok::Semi => {
                self.bump();
                Ok(Stmt { id: self.id(), line, kind: StmtKind::Block(vec![]), synthetic: false })
            }
            _ if self.at_decl() => {
                let s = self.decl()?;
                self.expect(Tok::Semi)?;
                Ok(s)
            }
            Tok::KwIf => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.condition()?;
                self.expect(Tok::RParen)?;
                let then_branch = Box::new(self.arm()?);
                let else_branch = if self.eat(&Tok::KwElse) { Some(Box::new(self.arm()?)) } else { None };
                Ok(Stmt { id: self.id(), line, kind: StmtKind::If { cond, then_branch, else_branch }, synthetic: false })
            }
            Tok::KwWhile => {
                self.bump();
                self.expect(Tok::LParen)?;
                let cond = self.condition()?;
                self.expect(Tok::RParen)?;
                let body = Box::new(self.arm()?);
                Ok(Stmt { id: self.id(), line, kind: StmtKind::While { cond, body }, synthetic: false })
            }
            Tok::KwFor => self.for_stmt(),
            Tok::KwReturn => {
                self.bump();
                let (_, ret) = self.current_fn.clone().expect("inside a function");
                let value = if *self.peek() == Tok::Semi {
                    if ret != Type::Void {
                        return Self::type_err(line, "missing return value");
                    }
                    None
                } else {
                    if ret == Type::Void {
                        return Self::type_err(line, "void function cannot return a value");
                    }
                    let e = self.expr()?;
                    if e.ty != Type::Int {
                        return Self::type_err(line, "return value must be an integer");
                    }
                    Some(e)
                };
                self.expect(Tok::Semi)?;
                Ok(Stmt { id: self.id(), line, kind: StmtKind::Return(value), synthetic: false })
            }
            _ => {
                let s = self.simple()?;
                self.expect(Tok::Semi)?;
                Ok(s)
            }
        }
    }

    fn for_stmt(&mut self) -> PResult<Stmt> {
        let line = self.line();
        self.bump();
        self.expect(Tok::LParen)?;
        self.scopes.push(BTreeMap::new());
        let init = match self.peek() {
            Tok::Semi => None,
            _ if self.at_decl() => Some(Box::new(self.decl()?)),
            _ => Some(Box::new(self.simple()?)),
        };
        self.expect(Tok::Semi)?;
        let cond = self.condition()?;
        self.expect(Tok::Semi)?;
        let step = if *self.peek() == Tok::RParen { None } else { Some(Box::new(self.simple()?)) };
        self.expect(Tok::RParen)?;
        for s in init.iter().chain(step.iter()) {
            if s.exprs().iter().any(|e| matches!(e.kind, ExprKind::Call { callee: Callee::Malloc, .. })) {
                return Self::type_err(line, "malloc is not allowed in a for header");
            }
        }
        let body = Box::new(self.arm()?);
        self.scopes.pop();
        Ok(Stmt { id: self.id(), line, kind: StmtKind::For { init, cond, step, body }, synthetic: false })
    }

    /// `buf` is only a type name when an identifier follows it.
    fn at_decl(&self) -> bool {
        match self.peek() {
            Tok::KwInt | Tok::KwChar => true,
            Tok::Ident(s) => s == "buf" && matches!(self.peek_at(1), Tok::Ident(_)),
            _ => false,
        }
    }

    fn decl(&mut self) -> PResult<Stmt> {
        let line = self.line();
        let base = self.bump().tok;
        let is_buf = matches!(&base, Tok::Ident(s) if s == "buf");
        let pointer = self.eat(&Tok::Star);
        let (name, _) = self.ident()?;
        let kind = if !pointer && !is_buf && *self.peek() == Tok::LBracket {
            self.bump();
            let len = match self.bump().tok {
                Tok::Int(v) if v > 0 => v,
                _ => return Self::type_err(line, "array length must be a positive integer constant"),
            };
            self.expect(Tok::RBracket)?;
            self.declare(&name, VarKind::Array(len), line)?;
            DeclKind::Array { elem: if base == Tok::KwChar { ElemType::Char } else { ElemType::Int }, len }
        } else if pointer || is_buf {
            if !self.eat(&Tok::Assign) {
                return Self::type_err(line, format!("buffer `{name}` needs an initializer"));
            }
            let init = Some(self.buf_rhs(line)?);
            self.declare(&name, VarKind::Buf, line)?;
            DeclKind::Buf(init)
        } else if base == Tok::KwChar {
            return self.syntax("scalar `char` variables are not supported; use `int`");
        } else {
            let init = if self.eat(&Tok::Assign) { Some(self.int_rhs(line)?) } else { None };
            self.declare(&name, VarKind::Int, line)?;
            DeclKind::Int(init)
        };
        Ok(Stmt { id: self.id(), line, kind: StmtKind::Decl { name, kind }, synthetic: false })
    }

    /// Right-hand side of an integer assignment; user calls are allowed here.
    fn int_rhs(&mut self, line: u32) -> PResult<Expr> {
        let e = if self.is_user_call() { self.user_call(true)? } else { self.expr()? };
        match e.ty {
            Type::Int => Ok(e),
            t => Self::type_err(line, format!("expected an integer value, found {t}")),
        }
    }

    /// Right-hand side of a buffer assignment: `malloc(E)` or another buffer.
    fn buf_rhs(&mut self, line: u32) -> PResult<Expr> {
        if let Tok::Ident(name) = self.peek().clone() {
            if name == "malloc" {
                let eline = self.line();
                self.bump();
                self.expect(Tok::LParen)?;
                let arg = self.expr()?;
                if arg.ty != Type::Int {
                    return Self::type_err(eline, "malloc size must be an integer");
                }
                self.expect(Tok::RParen)?;
                return Ok(Expr {
                    id: self.id(),
                    line: eline,
                    ty: Type::Buf,
                    kind: ExprKind::Call { callee: Callee::Malloc, args: vec![arg] },
                });
            }
            if matches!(self.lookup(&name), Some(VarKind::Buf | VarKind::Array(_))) {
                let eline = self.line();
                self.bump();
                return Ok(Expr { id: self.id(), line: eline, ty: Type::Buf, kind: ExprKind::Var(name) });
            }
        }
        Self::type_err(line, "buffer must be initialized with `malloc(...)` or another buffer")
    }

    fn is_user_call(&self) -> bool {
        matches!((self.peek(), self.peek_at(1)), (Tok::Ident(n), Tok::LParen) if !is_builtin(n))
    }

    /// Assignment, increment, or call statement (no trailing `;`).
    fn simple(&mut self) -> PResult<Stmt> {
        let line = self.line();
        if self.is_user_call() {
            let call = self.user_call(false)?;
            return Ok(Stmt { id: self.id(), line, kind: StmtKind::Expr(call), synthetic: false });
        }
        if let Tok::Ident(name) = self.peek().clone() {
            match self.peek_at(1) {
                Tok::PlusPlus | Tok::MinusMinus => {
                    let op = if *self.peek_at(1) == Tok::PlusPlus { BinOp::Add } else { BinOp::Sub };
                    self.bump();
                    self.bump();
                    if self.lookup(&name) != Some(VarKind::Int) {
                        return Self::type_err(line, format!("`{name}` is not an integer variable"));
                    }
                    let var = Expr { id: self.id(), line, ty: Type::Int, kind: ExprKind::Var(name.clone()) };
                    let one = Expr { id: self.id(), line, ty: Type::Int, kind: ExprKind::IntLit(1) };
                    let value =
                        Expr { id: self.id(), line, ty: Type::Int, kind: ExprKind::Binary(op, Box::new(var), Box::new(one)) };
                    return Ok(Stmt {
                        id: self.id(),
                        line,
                        kind: StmtKind::Assign { target: LValue::Var(name), value },
                        synthetic: false,
                    });
                }
                Tok::Assign => {
                    self.bump();
                    self.bump();
                    let value = match self.lookup(&name) {
                        Some(VarKind::Int) => self.int_rhs(line)?,
                        Some(VarKind::Buf) => self.buf_rhs(line)?,
                        Some(VarKind::Array(_)) => return Self::type_err(line, format!("cannot assign to array `{name}`")),
                        None => return Self::type_err(line, format!("`{name}` is not declared")),
                    };
                    return Ok(Stmt {
                        id: self.id(),
                        line,
                        kind: StmtKind::Assign { target: LValue::Var(name), value },
                        synthetic: false,
                    });
                }
                _ => {}
            }
        }
        let e = self.expr()?;
        if self.eat(&Tok::Assign) {
            if !matches!(e.kind, ExprKind::Index { .. }) {
                return self.syntax("left side of assignment must be a variable or an indexed buffer");
            }
            let value = self.int_rhs(line)?;
            return Ok(Stmt { id: self.id(), line, kind: StmtKind::Assign { target: LValue::Index(e), value }, synthetic: false });
        }
        Ok(Stmt { id: self.id(), line, kind: StmtKind::Expr(e), synthetic: false })
    }

    fn user_call(&mut self, need_value: bool) -> PResult<Expr> {
        let (name, line) = self.ident()?;
        if let Some((cur, _)) = &self.current_fn {
            if *cur == name {
                return Self::type_err(line, format!("recursive call to `{name}` is not supported"));
            }
        }
        let Some(sig) = self.functions.get(&name).cloned() else {
            return Self::type_err(line, format!("function `{name}` is not declared before use"));
        };
        if need_value && sig.ret == Type::Void {
            return Self::type_err(line, format!("`{name}` returns no value"));
        }
        self.expect(Tok::LParen)?;
        let mut args = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let aline = self.line();
                let want = sig.params.get(args.len()).copied();
                let arg = if want == Some(Type::Buf) {
                    match self.peek().clone() {
                        Tok::Ident(n) if matches!(self.lookup(&n), Some(VarKind::Buf | VarKind::Array(_))) => {
                            self.bump();
                            Expr { id: self.id(), line: aline, ty: Type::Buf, kind: ExprKind::Var(n) }
                        }
                        _ => return Self::type_err(aline, "expected a buffer argument"),
                    }
                } else {
                    let a = self.expr()?;
                    if a.ty != Type::Int {
                        return Self::type_err(aline, format!("expected an integer argument, found {}", a.ty));
                    }
                    a
                };
                args.push(arg);
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma)?;
            }
        }
        if args.len() != sig.params.len() {
            return Self::type_err(line, format!("`{name}` expects {} arguments, got {}", sig.params.len(), args.len()));
        }
        Ok(Expr { id: self.id(), line, ty: sig.ret, kind: ExprKind::Call { callee: Callee::User(name), args } })
    }

    // ---- expressions ----

    fn condition(&mut self) -> PResult<Expr> {
        let e = self.expr()?;
        self.to_bool(e)
    }

    fn to_bool(&mut self, e: Expr) -> PResult<Expr> {
        match e.ty {
            Type::Bool => Ok(e),
            Type::Int => {
                let line = e.line;
                let zero = Expr { id: self.id(), line, ty: Type::Int, kind: ExprKind::IntLit(0) };
                Ok(Expr { id: self.id(), line, ty: Type::Bool, kind: ExprKind::Binary(BinOp::Ne, Box::new(e), Box::new(zero)) })
            }
            t => Self::type_err(e.line, format!("expected a condition, found {t}")),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let line = self.line();
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = self.make_binary(op, lhs, rhs, line)?;
        }
        Ok(lhs)
    }

    fn make_binary(&mut self, op: BinOp, lhs: Expr, rhs: Expr, line: u32) -> PResult<Expr> {
        let (lhs, rhs, ty) = if op.is_logical() {
            (self.to_bool(lhs)?, self.to_bool(rhs)?, Type::Bool)
        } else {
            for side in [&lhs, &rhs] {
                if side.ty != Type::Int {
                    return Self::type_err(line, format!("operator `{}` needs integer operands, found {}", op.symbol(), side.ty));
                }
            }
            (lhs, rhs, if op.is_comparison() { Type::Bool } else { Type::Int })
        };
        let line = lhs.line;
        Ok(Expr { id: self.id(), line, ty, kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)) })
    }

    fn unary(&mut self) -> PResult<Expr> {
        let line = self.line();
        match self.peek() {
            Tok::Minus => {
                self.bump();
                let e = self.unary()?;
                if e.ty != Type::Int {
                    return Self::type_err(line, "unary `-` needs an integer operand");
                }
                Ok(Expr { id: self.id(), line, ty: Type::Int, kind: ExprKind::Unary(UnOp::Neg, Box::new(e)) })
            }
            Tok::Bang => {
                self.bump();
                let e = self.unary()?;
                let e = self.to_bool(e)?;
                Ok(Expr { id: self.id(), line, ty: Type::Bool, kind: ExprKind::Unary(UnOp::Not, Box::new(e)) })
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let line = self.line();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr { id: self.id(), line, ty: Type::Int, kind: ExprKind::IntLit(v) })
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::KwSizeof => {
                self.bump();
                self.expect(Tok::LParen)?;
                let (name, _) = self.ident()?;
                self.expect(Tok::RParen)?;
                match self.lookup(&name) {
                    Some(VarKind::Array(size)) => {
                        Ok(Expr { id: self.id(), line, ty: Type::Int, kind: ExprKind::SizeOf { name, size } })
                    }
                    Some(_) => Self::type_err(line, format!("sizeof needs a fixed-size array, `{name}` is not one")),
                    None => Self::type_err(line, format!("`{name}` is not declared")),
                }
            }
            Tok::Ident(name) => {
                if *self.peek_at(1) == Tok::LParen {
                    return match name.as_str() {
                        "nondet_int" => {
                            self.bump();
                            self.bump();
                            self.expect(Tok::RParen)?;
                            Ok(Expr { id: self.id(), line, ty: Type::Int, kind: ExprKind::Call { callee: Callee::NondetInt, args: vec![] } })
                        }
                        "malloc" => Self::type_err(line, "malloc may only initialize or assign a buffer variable"),
                        _ if self.functions.contains_key(&name) || self.current_fn.as_ref().is_some_and(|(n, _)| *n == name) => {
                            Self::type_err(line, format!("call to `{name}` must be a whole statement or assignment"))
                        }
                        _ => Self::type_err(line, format!("function `{name}` is not declared before use")),
                    };
                }
                self.bump();
                let Some(kind) = self.lookup(&name) else {
                    return Self::type_err(line, format!("`{name}` is not declared"));
                };
                if *self.peek() == Tok::LBracket {
                    if kind == VarKind::Int {
                        return Self::type_err(line, format!("`{name}` is not a buffer"));
                    }
                    self.bump();
                    let offset = self.expr()?;
                    if offset.ty != Type::Int {
                        return Self::type_err(line, "index must be an integer");
                    }
                    self.expect(Tok::RBracket)?;
                    let base = Expr { id: self.id(), line, ty: Type::Buf, kind: ExprKind::Var(name) };
                    return Ok(Expr {
                        id: self.id(),
                        line,
                        ty: Type::Int,
                        kind: ExprKind::Index { base: Box::new(base), offset: Box::new(offset) },
                    });
                }
                let ty = if kind == VarKind::Int { Type::Int } else { Type::Buf };
                Ok(Expr { id: self.id(), line, ty, kind: ExprKind::Var(name) })
            }
            other => self.syntax(format!("expected expression, found {}", other.describe())),
        }
    }
}

fn is_builtin(name: &str) -> bool {
    matches!(name, "malloc" | "nondet_int")
}

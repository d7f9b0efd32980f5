//! Canonical Mini-C printer. Output always re-parses to the same AST shape.

use super::ast::*;

const INDENT: &str = "    ";

pub fn print_program(p: &Program) -> String {
    print_program_annotated(p, &|_| Vec::new())
}

/// Print with extra `//` comment lines before selected statements.
pub fn print_program_annotated(p: &Program, notes: &dyn Fn(NodeId) -> Vec<String>) -> String {
    let mut out = String::new();
    for g in &p.globals {
        match g.init {
            Some(v) => out.push_str(&format!("int {} = {v};\n", g.name)),
            None => out.push_str(&format!("int {};\n", g.name)),
        }
    }
    for (i, f) in p.functions.iter().enumerate() {
        if i > 0 || !p.globals.is_empty() {
            out.push('\n');
        }
        let params: Vec<String> = f.params.iter().map(|p| format!("{} {}", p.ty, p.name)).collect();
        out.push_str(&format!("{} {}({}) {{\n", f.ret, f.name, params.join(", ")));
        for s in &f.body {
            for l in stmt_lines(s, 1, notes) {
                out.push_str(&l);
                out.push('\n');
            }
        }
        out.push_str("}\n");
    }
    out
}

pub fn stmt_to_string(s: &Stmt) -> String {
    stmt_lines(s, 0, &|_| Vec::new()).join("\n")
}

fn pad(indent: usize) -> String {
    INDENT.repeat(indent)
}

fn stmt_lines(s: &Stmt, indent: usize, notes: &dyn Fn(NodeId) -> Vec<String>) -> Vec<String> {
    let p = pad(indent);
    let mut out: Vec<String> = notes(s.id).into_iter().map(|n| format!("{p}// {n}")).collect();
    match &s.kind {
        StmtKind::Block(stmts) => {
            out.push(format!("{p}{{"));
            for c in stmts {
                out.extend(stmt_lines(c, indent + 1, notes));
            }
            out.push(format!("{p}}}"));
        }
        StmtKind::If { cond, then_branch, else_branch } => {
            out.extend(attach(format!("if ({})", expr_to_string(cond)), then_branch, indent, notes));
            if let Some(e) = else_branch {
                let mut arm = attach(String::new(), e, indent, notes);
                let first = arm.remove(0);
                let first = first.trim_start();
                let last = out.last_mut().expect("then arm printed");
                if last.trim_end().ends_with('}') {
                    last.push_str(" else");
                    if !first.is_empty() {
                        last.push(' ');
                        last.push_str(first);
                    }
                } else if first.is_empty() {
                    out.push(format!("{p}else"));
                } else {
                    out.push(format!("{p}else {first}"));
                }
                out.extend(arm);
            }
        }
        StmtKind::While { cond, body } => {
            out.extend(attach(format!("while ({})", expr_to_string(cond)), body, indent, notes));
        }
        StmtKind::For { init, cond, step, body } => {
            let init = init.as_ref().map(|s| simple_text(s)).unwrap_or_default();
            let step = step.as_ref().map(|s| simple_text(s)).unwrap_or_default();
            let header = format!("for ({init}; {}; {step})", expr_to_string(cond));
            out.extend(attach(header, body, indent, notes));
        }
        _ => out.push(format!("{p}{};", simple_text(s))),
    }
    out
}

/// Header followed by an arm; blocks open on the header line.
fn attach(header: String, body: &Stmt, indent: usize, notes: &dyn Fn(NodeId) -> Vec<String>) -> Vec<String> {
    let p = pad(indent);
    let sep = if header.is_empty() { "" } else { " " };
    match &body.kind {
        StmtKind::Block(stmts) if notes(body.id).is_empty() => {
            let mut out = vec![format!("{p}{header}{sep}{{")];
            for c in stmts {
                out.extend(stmt_lines(c, indent + 1, notes));
            }
            out.push(format!("{p}}}"));
            out
        }
        _ => {
            let mut out = vec![format!("{p}{header}")];
            out.extend(stmt_lines(body, indent + 1, notes));
            out
        }
    }
}

/// Statement text without the trailing `;` (used inside `for` headers).
fn simple_text(s: &Stmt) -> String {
    match &s.kind {
        StmtKind::Decl { name, kind } => match kind {
            DeclKind::Int(None) => format!("int {name}"),
            DeclKind::Int(Some(e)) => format!("int {name} = {}", expr_to_string(e)),
            DeclKind::Array { elem: ElemType::Char, len } => format!("char {name}[{len}]"),
            DeclKind::Array { elem: ElemType::Int, len } => format!("int {name}[{len}]"),
            DeclKind::Buf(None) => format!("buf {name}"),
            DeclKind::Buf(Some(e)) => format!("buf {name} = {}", expr_to_string(e)),
        },
        StmtKind::Assign { target, value } => match target {
            LValue::Var(v) => {
                if let ExprKind::Binary(op @ (BinOp::Add | BinOp::Sub), a, b) = &value.kind {
                    if a.as_var() == Some(v.as_str()) && b.kind == ExprKind::IntLit(1) {
                        return format!("{v}{}", if *op == BinOp::Add { "++" } else { "--" });
                    }
                }
                format!("{v} = {}", expr_to_string(value))
            }
            LValue::Index(ix) => format!("{} = {}", expr_to_string(ix), expr_to_string(value)),
        },
        StmtKind::Return(None) => "return".into(),
        StmtKind::Return(Some(e)) => format!("return {}", expr_to_string(e)),
        StmtKind::Expr(e) => expr_to_string(e),
        _ => stmt_to_string(s),
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    match &e.kind {
        ExprKind::IntLit(v) => v.to_string(),
        ExprKind::Var(v) => v.clone(),
        ExprKind::SizeOf { name, .. } => format!("sizeof({name})"),
        ExprKind::Index { base, offset } => format!("{}[{}]", expr_to_string(base), expr_to_string(offset)),
        ExprKind::Call { callee, args } => {
            let name = match callee {
                Callee::Malloc => "malloc",
                Callee::NondetInt => "nondet_int",
                Callee::User(n) => n,
            };
            let args: Vec<String> = args.iter().map(expr_to_string).collect();
            format!("{name}({})", args.join(", "))
        }
        ExprKind::Unary(op, a) => {
            let inner = expr_to_string(a);
            let wrap = matches!(a.kind, ExprKind::Binary(..) | ExprKind::Unary(..))
                || matches!(a.kind, ExprKind::IntLit(v) if v < 0);
            let sym = if *op == UnOp::Neg { "-" } else { "!" };
            if wrap {
                format!("{sym}({inner})")
            } else {
                format!("{sym}{inner}")
            }
        }
        ExprKind::Binary(op, a, b) => {
            let prec = op.precedence();
            let left = operand(a, prec, false);
            let right = operand(b, prec, true);
            format!("{left} {} {right}", op.symbol())
        }
    }
}

fn operand(e: &Expr, parent: u8, right: bool) -> String {
    let s = expr_to_string(e);
    let needs = match &e.kind {
        ExprKind::Binary(op, ..) => op.precedence() < parent || (right && op.precedence() == parent),
        ExprKind::IntLit(v) => *v < 0,
        _ => false,
    };
    if needs {
        format!("({s})")
    } else {
        s
    }
}

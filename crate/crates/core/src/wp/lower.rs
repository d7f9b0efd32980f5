use crate::lang::{BinOp, Expr, ExprKind, UnOp};
use crate::solver::{CmpOp, Constraint, LinExpr};

/// Integer expression as a term over program variable names. `None` when the
/// expression reads memory, consumes input, or calls a function.
pub fn lower_expr(e: &Expr) -> Option<LinExpr> {
    Some(match &e.kind {
        ExprKind::IntLit(v) => LinExpr::constant(*v),
        ExprKind::SizeOf { size, .. } => LinExpr::constant(*size),
        ExprKind::Var(v) => LinExpr::var(v.clone()),
        ExprKind::Unary(UnOp::Neg, a) => lower_expr(a)?.neg(),
        ExprKind::Binary(op, a, b) if !op.is_comparison() && !op.is_logical() => {
            let (x, y) = (lower_expr(a)?, lower_expr(b)?);
            match op {
                BinOp::Add => x.add(&y),
                BinOp::Sub => x.sub(&y),
                BinOp::Mul => x.mul(&y),
                BinOp::Div => x.div(&y),
                BinOp::Rem => x.rem(&y),
                _ => unreachable!(),
            }
        }
        _ => return None,
    })
}

/// Boolean expression as a constraint over program variable names.
pub fn lower_cond(e: &Expr) -> Option<Constraint> {
    Some(match &e.kind {
        ExprKind::Binary(BinOp::And, a, b) => Constraint::and([lower_cond(a)?, lower_cond(b)?]),
        ExprKind::Binary(BinOp::Or, a, b) => Constraint::or([lower_cond(a)?, lower_cond(b)?]),
        ExprKind::Unary(UnOp::Not, a) => lower_cond(a)?.negate(),
        ExprKind::Binary(op, a, b) if op.is_comparison() => {
            Constraint::cmp(&lower_expr(a)?, cmp_op(*op), &lower_expr(b)?)
        }
        _ => Constraint::cmp(&lower_expr(e)?, CmpOp::Ne, &LinExpr::constant(0)),
    })
}

pub fn cmp_op(op: BinOp) -> CmpOp {
    match op {
        BinOp::Lt => CmpOp::Lt,
        BinOp::Le => CmpOp::Le,
        BinOp::Gt => CmpOp::Gt,
        BinOp::Ge => CmpOp::Ge,
        BinOp::Eq => CmpOp::Eq,
        BinOp::Ne => CmpOp::Ne,
        _ => panic!("not a comparison: {op:?}"),
    }
}

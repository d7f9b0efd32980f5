use std::collections::BTreeSet;

use crate::lang::{BinOp, Expr, ExprKind, NodeId, Type};
use crate::solver::{CmpOp, Constraint, LinExpr};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Leaf {
    Var(String),
    SizeOf(String, i64),
    Const(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

/// `first ± leaf ± leaf ...`, left associative.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    pub first: Leaf,
    pub rest: Vec<(Sign, Leaf)>,
}

/// Comparison operators in enumeration order.
pub const OPS: [CmpOp; 4] = [CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ne];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cmp {
    pub lhs: Term,
    pub op: usize,
    pub rhs: Term,
}

impl Leaf {
    fn lin(&self) -> LinExpr {
        match self {
            Leaf::Var(v) => LinExpr::var(v.clone()),
            Leaf::SizeOf(_, k) | Leaf::Const(k) => LinExpr::constant(*k),
        }
    }

    fn expr(&self, ids: &mut u32, line: u32) -> Expr {
        let kind = match self {
            Leaf::Var(v) => ExprKind::Var(v.clone()),
            Leaf::SizeOf(a, k) => ExprKind::SizeOf { name: a.clone(), size: *k },
            Leaf::Const(k) => ExprKind::IntLit(*k),
        };
        mk(ids, line, Type::Int, kind)
    }
}

fn mk(ids: &mut u32, line: u32, ty: Type, kind: ExprKind) -> Expr {
    *ids += 1;
    Expr { id: NodeId(*ids), line, ty, kind }
}

impl Term {
    pub fn size(&self) -> usize {
        1 + 2 * self.rest.len()
    }

    pub fn is_const(&self) -> bool {
        self.rest.is_empty() && matches!(self.first, Leaf::Const(_))
    }

    pub fn lin(&self) -> LinExpr {
        let mut acc = self.first.lin();
        for (s, l) in &self.rest {
            acc = match s {
                Sign::Plus => acc.add(&l.lin()),
                Sign::Minus => acc.sub(&l.lin()),
            };
        }
        acc
    }

    /// AST with fresh ids above `*ids`.
    pub fn expr(&self, ids: &mut u32, line: u32) -> Expr {
        let mut acc = self.first.expr(ids, line);
        for (s, l) in &self.rest {
            let op = if *s == Sign::Plus { BinOp::Add } else { BinOp::Sub };
            let r = l.expr(ids, line);
            acc = mk(ids, line, Type::Int, ExprKind::Binary(op, Box::new(acc), Box::new(r)));
        }
        acc
    }
}

impl Cmp {
    pub fn size(&self) -> usize {
        self.lhs.size() + self.rhs.size() + 1
    }

    pub fn constraint(&self) -> Constraint {
        Constraint::cmp(&self.lhs.lin(), OPS[self.op], &self.rhs.lin())
    }

    pub fn expr(&self, ids: &mut u32, line: u32) -> Expr {
        let l = self.lhs.expr(ids, line);
        let r = self.rhs.expr(ids, line);
        let op = match OPS[self.op] {
            CmpOp::Lt => BinOp::Lt,
            CmpOp::Le => BinOp::Le,
            CmpOp::Eq => BinOp::Eq,
            _ => BinOp::Ne,
        };
        mk(ids, line, Type::Bool, ExprKind::Binary(op, Box::new(l), Box::new(r)))
    }
}

/// Terminals and size-indexed term lists.
pub struct Grammar {
    /// `terms[k]` holds the terms of size `2k + 1`, sorted.
    terms: Vec<Vec<Term>>,
}

impl Grammar {
    /// Terms use each variable at most once and at most one constant, placed last.
    pub fn new(vars: &[String], arrays: &[(String, i64)], consts: &[i64], max_size: usize) -> Self {
        let mut leaves: Vec<Leaf> = vars.iter().map(|v| Leaf::Var(v.clone())).collect();
        leaves.extend(arrays.iter().map(|(a, k)| Leaf::SizeOf(a.clone(), *k)));
        let mut cs: BTreeSet<i64> = [0, 1].into();
        cs.extend(consts.iter().copied());
        let consts: Vec<Leaf> = cs.into_iter().map(Leaf::Const).collect();

        let mut terms: Vec<Vec<Term>> = vec![];
        let mut first: Vec<Term> = leaves.iter().chain(&consts).map(|l| Term { first: l.clone(), rest: vec![] }).collect();
        first.sort();
        terms.push(first);
        let mut k = 1;
        while 2 * k + 1 < max_size {
            let mut next = vec![];
            for t in &terms[k - 1] {
                if t.is_const() || t.rest.last().is_some_and(|(_, l)| matches!(l, Leaf::Const(_))) {
                    continue;
                }
                for l in leaves.iter().chain(consts.iter().filter(|c| **c != Leaf::Const(0))) {
                    if t.first == *l || t.rest.iter().any(|(_, x)| x == l) {
                        continue;
                    }
                    for s in [Sign::Plus, Sign::Minus] {
                        let mut n = t.clone();
                        n.rest.push((s, l.clone()));
                        next.push(n);
                    }
                }
            }
            next.sort();
            terms.push(next);
            k += 1;
        }
        Grammar { terms }
    }

    /// Terms of exactly `size`.
    pub fn terms(&self, size: usize) -> &[Term] {
        if size % 2 == 0 {
            return &[];
        }
        self.terms.get(size / 2).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Comparisons of exactly `size`, lexicographic, skipping those whose
    /// canonical constraint is in `seen` (which is updated).
    pub fn comparisons(&self, size: usize, seen: &mut BTreeSet<Constraint>, budget: &mut usize) -> Vec<(Cmp, Constraint)> {
        let mut out = vec![];
        for a in (1..size.saturating_sub(1)).step_by(2) {
            let b = size - 1 - a;
            for lhs in self.terms(a) {
                for rhs in self.terms(b) {
                    if lhs == rhs || (lhs.is_const() && rhs.is_const()) {
                        continue;
                    }
                    for op in 0..OPS.len() {
                        if *budget == 0 {
                            return sorted(out);
                        }
                        *budget -= 1;
                        let cmp = Cmp { lhs: lhs.clone(), op, rhs: rhs.clone() };
                        let c = cmp.constraint();
                        if matches!(c, Constraint::True | Constraint::False) || !seen.insert(c.clone()) {
                            continue;
                        }
                        out.push((cmp, c));
                    }
                }
            }
        }
        sorted(out)
    }
}

fn sorted(mut v: Vec<(Cmp, Constraint)>) -> Vec<(Cmp, Constraint)> {
    v.sort_by(|x, y| x.0.cmp(&y.0));
    v
}

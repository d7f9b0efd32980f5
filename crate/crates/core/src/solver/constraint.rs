//! Quantifier-free linear integer constraints.
//!
//! A [`Constraint`] is a boolean combination of [`Atom`]s, each of which
//! compares a [`LinExpr`] against zero. Nonlinear residue (products of two
//! symbolic terms, symbolic division, buffer reads) is wrapped in an
//! [`Opaque`] symbol so that the surrounding formula stays linear.
//!
//! Every constructor returns a canonical form: negations are pushed into
//! the atoms, `and`/`or` are flattened with constants folded away, and
//! atoms are divided through by the gcd of their coefficients.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Named(String),
    Opaque(Box<Opaque>),
}

/// A nonlinear term that the decision procedure treats as an atomic symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Opaque {
    Mul(LinExpr, LinExpr),
    Div(LinExpr, LinExpr),
    Rem(LinExpr, LinExpr),
    /// Contents of a buffer at an offset.
    Select(String, LinExpr),
}

impl Symbol {
    pub fn named(name: impl Into<String>) -> Self {
        Symbol::Named(name.into())
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Symbol::Named(n) => Some(n),
            Symbol::Opaque(_) => None,
        }
    }

    fn collect_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Symbol::Named(n) => {
                out.insert(n.clone());
            }
            Symbol::Opaque(op) => match op.as_ref() {
                Opaque::Mul(a, b) | Opaque::Div(a, b) | Opaque::Rem(a, b) => {
                    a.collect_names(out);
                    b.collect_names(out);
                }
                Opaque::Select(_, off) => off.collect_names(out),
            },
        }
    }

    fn eval(&self, env: &dyn Fn(&str) -> Option<i64>) -> Option<i64> {
        match self {
            Symbol::Named(n) => env(n),
            Symbol::Opaque(op) => match op.as_ref() {
                Opaque::Mul(a, b) => a.eval(env)?.checked_mul(b.eval(env)?),
                Opaque::Div(a, b) => a.eval(env)?.checked_div(b.eval(env)?),
                Opaque::Rem(a, b) => a.eval(env)?.checked_rem(b.eval(env)?),
                Opaque::Select(..) => None,
            },
        }
    }

    fn substitute(&self, var: &str, with: &LinExpr) -> LinExpr {
        match self {
            Symbol::Named(n) if n == var => with.clone(),
            Symbol::Named(_) => LinExpr::symbol(self.clone()),
            Symbol::Opaque(op) => match op.as_ref() {
                Opaque::Mul(a, b) => a.substitute(var, with).mul(&b.substitute(var, with)),
                Opaque::Div(a, b) => a.substitute(var, with).div(&b.substitute(var, with)),
                Opaque::Rem(a, b) => a.substitute(var, with).rem(&b.substitute(var, with)),
                Opaque::Select(buf, off) => LinExpr::symbol(Symbol::Opaque(Box::new(
                    Opaque::Select(buf.clone(), off.substitute(var, with)),
                ))),
            },
        }
    }
}

/// `Σ coeff·symbol + constant`, with zero coefficients never stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinExpr {
    terms: BTreeMap<Symbol, i64>,
    constant: i64,
}

impl LinExpr {
    pub fn constant(c: i64) -> Self {
        LinExpr {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn var(name: impl Into<String>) -> Self {
        Self::symbol(Symbol::named(name))
    }

    pub fn symbol(sym: Symbol) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(sym, 1);
        LinExpr { terms, constant: 0 }
    }

    pub fn select(buf: impl Into<String>, offset: LinExpr) -> Self {
        Self::symbol(Symbol::Opaque(Box::new(Opaque::Select(buf.into(), offset))))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Symbol, i64)> {
        self.terms.iter().map(|(s, &c)| (s, c))
    }

    pub fn constant_part(&self) -> i64 {
        self.constant
    }

    pub fn coeff(&self, sym: &Symbol) -> i64 {
        self.terms.get(sym).copied().unwrap_or(0)
    }

    pub fn as_constant(&self) -> Option<i64> {
        self.terms.is_empty().then_some(self.constant)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_opaque(&self) -> bool {
        self.terms.keys().any(|s| matches!(s, Symbol::Opaque(_)))
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        out.constant += other.constant;
        for (sym, &c) in &other.terms {
            out.add_term(sym.clone(), c);
        }
        out
    }

    fn add_term(&mut self, sym: Symbol, c: i64) {
        let entry = self.terms.entry(sym).or_insert(0);
        *entry += c;
        if *entry == 0 {
            self.terms.retain(|_, v| *v != 0);
        }
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.scale(-1))
    }

    pub fn neg(&self) -> LinExpr {
        self.scale(-1)
    }

    pub fn scale(&self, k: i64) -> LinExpr {
        if k == 0 {
            return LinExpr::constant(0);
        }
        LinExpr {
            terms: self.terms.iter().map(|(s, &c)| (s.clone(), c * k)).collect(),
            constant: self.constant * k,
        }
    }

    pub fn offset(&self, k: i64) -> LinExpr {
        let mut out = self.clone();
        out.constant += k;
        out
    }

    /// Product; stays linear when either side is constant.
    pub fn mul(&self, other: &LinExpr) -> LinExpr {
        match (self.as_constant(), other.as_constant()) {
            (Some(k), _) => other.scale(k),
            (_, Some(k)) => self.scale(k),
            _ => {
                let (a, b) = if self <= other { (self, other) } else { (other, self) };
                LinExpr::symbol(Symbol::Opaque(Box::new(Opaque::Mul(a.clone(), b.clone()))))
            }
        }
    }

    /// Truncating division. Folds only when both sides are constant and the
    /// divisor is nonzero.
    pub fn div(&self, other: &LinExpr) -> LinExpr {
        match (self.as_constant(), other.as_constant()) {
            (Some(a), Some(b)) if b != 0 => LinExpr::constant(a / b),
            _ => LinExpr::symbol(Symbol::Opaque(Box::new(Opaque::Div(
                self.clone(),
                other.clone(),
            )))),
        }
    }

    pub fn rem(&self, other: &LinExpr) -> LinExpr {
        match (self.as_constant(), other.as_constant()) {
            (Some(a), Some(b)) if b != 0 => LinExpr::constant(a % b),
            _ => LinExpr::symbol(Symbol::Opaque(Box::new(Opaque::Rem(
                self.clone(),
                other.clone(),
            )))),
        }
    }

    pub fn substitute(&self, var: &str, with: &LinExpr) -> LinExpr {
        let mut out = LinExpr::constant(self.constant);
        for (sym, &c) in &self.terms {
            out = out.add(&sym.substitute(var, with).scale(c));
        }
        out
    }

    pub fn eval(&self, env: &dyn Fn(&str) -> Option<i64>) -> Option<i64> {
        let mut acc = self.constant;
        for (sym, &c) in &self.terms {
            acc = acc.checked_add(sym.eval(env)?.checked_mul(c)?)?;
        }
        Some(acc)
    }

    /// Names of every named symbol, including those nested in opaque terms.
    pub fn names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut BTreeSet<String>) {
        for sym in self.terms.keys() {
            sym.collect_names(out);
        }
    }

    fn gcd_of_coeffs(&self) -> i64 {
        self.terms.values().fold(0, |g, &c| gcd(g, c.abs()))
    }

    fn split_signs(&self) -> (LinExpr, LinExpr) {
        let mut pos = LinExpr::default();
        let mut neg = LinExpr::default();
        for (s, &c) in &self.terms {
            if c > 0 {
                pos.terms.insert(s.clone(), c);
            } else {
                neg.terms.insert(s.clone(), -c);
            }
        }
        (pos, neg)
    }
}

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// Comparison operators accepted by [`Constraint::cmp`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    pub fn holds(self, a: i64, b: i64) -> bool {
        match self {
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
        }
    }
}

/// Canonical relation of an atom against zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    /// `expr <= 0`
    Le,
    /// `expr == 0`
    Eq,
    /// `expr != 0`
    Ne,
}

/// `expr rel 0`; strict comparisons are tightened into `Le` on construction.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub expr: LinExpr,
    pub rel: Rel,
}

impl Atom {
    fn negate(&self) -> Constraint {
        match self.rel {
            // ¬(e <= 0)  ⇔  e >= 1  ⇔  -e + 1 <= 0
            Rel::Le => Constraint::atom(self.expr.neg().offset(1), Rel::Le),
            Rel::Eq => Constraint::atom(self.expr.clone(), Rel::Ne),
            Rel::Ne => Constraint::atom(self.expr.clone(), Rel::Eq),
        }
    }

    pub fn eval(&self, env: &dyn Fn(&str) -> Option<i64>) -> Option<bool> {
        let v = self.expr.eval(env)?;
        Some(match self.rel {
            Rel::Le => v <= 0,
            Rel::Eq => v == 0,
            Rel::Ne => v != 0,
        })
    }

    /// Sides for display: `(lhs, op, rhs)` with positive coefficients on the
    /// left where possible, e.g. `i - G + 1 <= 0` reads `i < G`.
    fn sides(&self) -> (LinExpr, &'static str, LinExpr) {
        let (pos, neg) = self.expr.split_signs();
        let c = self.expr.constant;
        match self.rel {
            Rel::Le if !pos.terms.is_empty() => (pos, "<", neg.offset(1 - c)),
            Rel::Le => (neg, ">=", LinExpr::constant(c)),
            Rel::Eq | Rel::Ne => {
                let op = if self.rel == Rel::Eq { "==" } else { "!=" };
                if pos.terms.is_empty() {
                    (neg, op, LinExpr::constant(c))
                } else {
                    (pos, op, neg.offset(-c))
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    True,
    False,
    Atom(Atom),
    And(Vec<Constraint>),
    Or(Vec<Constraint>),
}

impl Constraint {
    pub fn bool(b: bool) -> Self {
        if b {
            Constraint::True
        } else {
            Constraint::False
        }
    }

    /// Canonical atom `expr rel 0`.
    pub fn atom(expr: LinExpr, rel: Rel) -> Self {
        if let Some(c) = expr.as_constant() {
            return Constraint::bool(match rel {
                Rel::Le => c <= 0,
                Rel::Eq => c == 0,
                Rel::Ne => c != 0,
            });
        }
        let g = expr.gcd_of_coeffs();
        let c = expr.constant;
        let mut expr = expr;
        match rel {
            Rel::Le => {
                expr.constant = div_ceil(c, g);
                for v in expr.terms.values_mut() {
                    *v /= g;
                }
            }
            Rel::Eq | Rel::Ne => {
                if c % g != 0 {
                    return Constraint::bool(rel == Rel::Ne);
                }
                let lead = expr.terms.values().next().copied().unwrap_or(1);
                let g = if lead < 0 { -g } else { g };
                expr.constant = c / g;
                for v in expr.terms.values_mut() {
                    *v /= g;
                }
            }
        }
        Constraint::Atom(Atom { expr, rel })
    }

    pub fn cmp(lhs: &LinExpr, op: CmpOp, rhs: &LinExpr) -> Self {
        let d = lhs.sub(rhs);
        match op {
            CmpOp::Le => Self::atom(d, Rel::Le),
            CmpOp::Lt => Self::atom(d.offset(1), Rel::Le),
            CmpOp::Ge => Self::atom(d.neg(), Rel::Le),
            CmpOp::Gt => Self::atom(d.neg().offset(1), Rel::Le),
            CmpOp::Eq => Self::atom(d, Rel::Eq),
            CmpOp::Ne => Self::atom(d, Rel::Ne),
        }
    }

    pub fn and(parts: impl IntoIterator<Item = Constraint>) -> Self {
        let mut out: Vec<Constraint> = Vec::new();
        for p in parts {
            match p {
                Constraint::True => {}
                Constraint::False => return Constraint::False,
                Constraint::And(inner) => {
                    for q in inner {
                        if !out.contains(&q) {
                            out.push(q);
                        }
                    }
                }
                other => {
                    if !out.contains(&other) {
                        out.push(other);
                    }
                }
            }
        }
        match out.len() {
            0 => Constraint::True,
            1 => out.pop().unwrap(),
            _ => Constraint::And(out),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = Constraint>) -> Self {
        let mut out: Vec<Constraint> = Vec::new();
        for p in parts {
            match p {
                Constraint::False => {}
                Constraint::True => return Constraint::True,
                Constraint::Or(inner) => {
                    for q in inner {
                        if !out.contains(&q) {
                            out.push(q);
                        }
                    }
                }
                other => {
                    if !out.contains(&other) {
                        out.push(other);
                    }
                }
            }
        }
        match out.len() {
            0 => Constraint::False,
            1 => out.pop().unwrap(),
            _ => Constraint::Or(out),
        }
    }

    pub fn negate(&self) -> Self {
        match self {
            Constraint::True => Constraint::False,
            Constraint::False => Constraint::True,
            Constraint::Atom(a) => a.negate(),
            Constraint::And(ps) => Constraint::or(ps.iter().map(Constraint::negate)),
            Constraint::Or(ps) => Constraint::and(ps.iter().map(Constraint::negate)),
        }
    }

    pub fn implies(&self, then: &Constraint) -> Self {
        Constraint::or([self.negate(), then.clone()])
    }

    pub fn iff(&self, other: &Constraint) -> Self {
        Constraint::and([self.implies(other), other.implies(self)])
    }

    /// Rebuilds the formula through the canonicalizing constructors.
    pub fn canonical(&self) -> Self {
        match self {
            Constraint::True | Constraint::False => self.clone(),
            Constraint::Atom(a) => Constraint::atom(a.expr.clone(), a.rel),
            Constraint::And(ps) => Constraint::and(ps.iter().map(Constraint::canonical)),
            Constraint::Or(ps) => Constraint::or(ps.iter().map(Constraint::canonical)),
        }
    }

    /// Capture-free replacement of a named symbol, canonicalized.
    pub fn substitute(&self, var: &str, with: &LinExpr) -> Self {
        match self {
            Constraint::True | Constraint::False => self.clone(),
            Constraint::Atom(a) => Constraint::atom(a.expr.substitute(var, with), a.rel),
            Constraint::And(ps) => Constraint::and(ps.iter().map(|p| p.substitute(var, with))),
            Constraint::Or(ps) => Constraint::or(ps.iter().map(|p| p.substitute(var, with))),
        }
    }

    /// Three-valued evaluation; `None` when a symbol is unbound or an opaque
    /// term cannot be evaluated.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<i64>) -> Option<bool> {
        match self {
            Constraint::True => Some(true),
            Constraint::False => Some(false),
            Constraint::Atom(a) => a.eval(env),
            Constraint::And(ps) => {
                let mut unknown = false;
                for p in ps {
                    match p.eval(env) {
                        Some(false) => return Some(false),
                        None => unknown = true,
                        Some(true) => {}
                    }
                }
                (!unknown).then_some(true)
            }
            Constraint::Or(ps) => {
                let mut unknown = false;
                for p in ps {
                    match p.eval(env) {
                        Some(true) => return Some(true),
                        None => unknown = true,
                        Some(false) => {}
                    }
                }
                (!unknown).then_some(false)
            }
        }
    }

    pub fn eval_model(&self, model: &BTreeMap<String, i64>) -> Option<bool> {
        self.eval(&|n| model.get(n).copied())
    }

    pub fn atoms(&self) -> Vec<&Atom> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom>) {
        match self {
            Constraint::Atom(a) => out.push(a),
            Constraint::And(ps) | Constraint::Or(ps) => {
                for p in ps {
                    p.collect_atoms(out);
                }
            }
            _ => {}
        }
    }

    /// Every named symbol, including those nested in opaque terms.
    pub fn free_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for a in self.atoms() {
            a.expr.collect_names(&mut out);
        }
        out
    }

    pub fn has_opaque(&self) -> bool {
        self.atoms().iter().any(|a| a.expr.has_opaque())
    }

    /// Number of nodes, used for budgeting.
    pub fn size(&self) -> usize {
        match self {
            Constraint::True | Constraint::False | Constraint::Atom(_) => 1,
            Constraint::And(ps) | Constraint::Or(ps) => 1 + ps.iter().map(Self::size).sum::<usize>(),
        }
    }

    /// Prefix s-expression form, e.g. `(and (< i G) (>= i 0))`.
    pub fn to_sexpr(&self) -> String {
        let mut s = String::new();
        write_sexpr(self, &mut s);
        s
    }
}

fn write_sexpr(c: &Constraint, out: &mut String) {
    match c {
        Constraint::True => out.push_str("true"),
        Constraint::False => out.push_str("false"),
        Constraint::Atom(a) => {
            let (l, op, r) = a.sides();
            let op = if op == "==" { "=" } else { op };
            out.push('(');
            out.push_str(op);
            out.push(' ');
            out.push_str(&lin_sexpr(&l));
            out.push(' ');
            out.push_str(&lin_sexpr(&r));
            out.push(')');
        }
        Constraint::And(ps) | Constraint::Or(ps) => {
            out.push_str(if matches!(c, Constraint::And(_)) { "(and" } else { "(or" });
            for p in ps {
                out.push(' ');
                write_sexpr(p, out);
            }
            out.push(')');
        }
    }
}

fn symbol_sexpr(sym: &Symbol) -> String {
    match sym {
        Symbol::Named(n) => n.clone(),
        Symbol::Opaque(op) => match op.as_ref() {
            Opaque::Mul(a, b) => format!("(* {} {})", lin_sexpr(a), lin_sexpr(b)),
            Opaque::Div(a, b) => format!("(div {} {})", lin_sexpr(a), lin_sexpr(b)),
            Opaque::Rem(a, b) => format!("(mod {} {})", lin_sexpr(a), lin_sexpr(b)),
            Opaque::Select(buf, off) => format!("(select {} {})", buf, lin_sexpr(off)),
        },
    }
}

pub(crate) fn lin_sexpr(e: &LinExpr) -> String {
    let mut parts: Vec<String> = e
        .terms
        .iter()
        .map(|(s, &c)| {
            if c == 1 {
                symbol_sexpr(s)
            } else {
                format!("(* {} {})", c, symbol_sexpr(s))
            }
        })
        .collect();
    if e.constant != 0 || parts.is_empty() {
        parts.push(e.constant.to_string());
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        format!("(+ {})", parts.join(" "))
    }
}

fn symbol_infix(sym: &Symbol) -> String {
    match sym {
        Symbol::Named(n) => n.clone(),
        Symbol::Opaque(op) => match op.as_ref() {
            Opaque::Mul(a, b) => format!("({}) * ({})", a, b),
            Opaque::Div(a, b) => format!("({}) / ({})", a, b),
            Opaque::Rem(a, b) => format!("({}) % ({})", a, b),
            Opaque::Select(buf, off) => format!("{}[{}]", buf, off),
        },
    }
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (s, &c) in &self.terms {
            let name = symbol_infix(s);
            let mag = c.abs();
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if c < 0 { "-" } else { "+" })?;
            }
            if mag == 1 {
                write!(f, "{}", name)?;
            } else {
                write!(f, "{}*{}", mag, name)?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant > 0 {
            write!(f, " + {}", self.constant)
        } else if self.constant < 0 {
            write!(f, " - {}", -self.constant)
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (l, op, r) = self.sides();
        write!(f, "{} {} {}", l, op, r)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::True => write!(f, "true"),
            Constraint::False => write!(f, "false"),
            Constraint::Atom(a) => write!(f, "{}", a),
            Constraint::And(ps) | Constraint::Or(ps) => {
                let sep = if matches!(self, Constraint::And(_)) { " && " } else { " || " };
                for (i, p) in ps.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{}", sep)?;
                    }
                    match p {
                        Constraint::And(_) | Constraint::Or(_) => write!(f, "({})", p)?,
                        _ => write!(f, "{}", p)?,
                    }
                }
                Ok(())
            }
        }
    }
}

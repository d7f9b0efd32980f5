//! Concrete reference interpreter. Every bounds and divisor check is built in,
//! independent of the instrumentation side table.

use std::collections::BTreeMap;

use crate::instrument::CheckKind;
use crate::lang::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Returned(i64),
    Violation { kind: CheckKind, node: NodeId, line: u32 },
    StepLimit,
    Overflow,
}

impl Outcome {
    pub fn is_violation(&self) -> bool {
        matches!(self, Outcome::Violation { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Val {
    Int(i64),
    Buf(usize),
}

struct Alloc {
    size: i64,
    data: BTreeMap<i64, i64>,
}

enum Flow {
    Normal,
    Return(Option<i64>),
}

struct Machine<'a> {
    program: &'a Program,
    inputs: &'a [i64],
    consumed: usize,
    heap: Vec<Alloc>,
    globals: BTreeMap<String, i64>,
    steps: u64,
    max_steps: u64,
}

type Env = BTreeMap<String, Val>;
type R<T> = Result<T, Outcome>;

/// Run `main`; `nondet_int()` reads `inputs` in order, then yields 0.
pub fn run(program: &Program, inputs: &[i64], max_steps: u64) -> Outcome {
    let mut m = Machine {
        program,
        inputs,
        consumed: 0,
        heap: vec![],
        globals: program.globals.iter().map(|g| (g.name.clone(), g.init.unwrap_or(0))).collect(),
        steps: 0,
        max_steps,
    };
    match m.call(program.main(), vec![]) {
        Ok(v) => Outcome::Returned(v),
        Err(o) => o,
    }
}

impl Machine<'_> {
    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.max_steps {
            Err(Outcome::StepLimit)
        } else {
            Ok(())
        }
    }

    fn call(&mut self, f: &FunctionDef, args: Vec<Val>) -> R<i64> {
        let mut env: Env = f.params.iter().map(|p| p.name.clone()).zip(args).collect();
        for s in &f.body {
            if let Flow::Return(v) = self.stmt(s, &mut env)? {
                return Ok(v.unwrap_or(0));
            }
        }
        Ok(0)
    }

    fn read(&self, env: &Env, name: &str) -> Val {
        match env.get(name) {
            Some(v) => *v,
            None => Val::Int(*self.globals.get(name).expect("declared variable")),
        }
    }

    fn write(&mut self, env: &mut Env, name: &str, v: Val) {
        if env.contains_key(name) || !self.globals.contains_key(name) {
            env.insert(name.to_string(), v);
        } else if let Val::Int(i) = v {
            self.globals.insert(name.to_string(), i);
        }
    }

    fn stmt(&mut self, s: &Stmt, env: &mut Env) -> R<Flow> {
        self.tick()?;
        match &s.kind {
            StmtKind::Decl { name, kind } => {
                let v = match kind {
                    DeclKind::Int(None) => Val::Int(0),
                    DeclKind::Int(Some(e)) | DeclKind::Buf(Some(e)) => self.value(e, env)?,
                    DeclKind::Buf(None) => unreachable!("parser requires an initializer"),
                    DeclKind::Array { len, .. } => {
                        self.heap.push(Alloc { size: *len, data: BTreeMap::new() });
                        Val::Buf(self.heap.len() - 1)
                    }
                };
                env.insert(name.clone(), v);
            }
            StmtKind::Assign { target, value } => match target {
                LValue::Var(v) => {
                    let x = self.value(value, env)?;
                    self.write(env, v, x);
                }
                LValue::Index(ix) => {
                    let (a, off) = self.locate(ix, env)?;
                    let x = self.int(value, env)?;
                    self.heap[a].data.insert(off, x);
                }
            },
            StmtKind::If { cond, then_branch, else_branch } => {
                if self.int(cond, env)? != 0 {
                    return self.stmt(then_branch, env);
                } else if let Some(e) = else_branch {
                    return self.stmt(e, env);
                }
            }
            StmtKind::While { cond, body } => {
                while self.int(cond, env)? != 0 {
                    if let Flow::Return(v) = self.stmt(body, env)? {
                        return Ok(Flow::Return(v));
                    }
                    self.tick()?;
                }
            }
            StmtKind::For { init, cond, step, body } => {
                if let Some(i) = init {
                    self.stmt(i, env)?;
                }
                while self.int(cond, env)? != 0 {
                    if let Flow::Return(v) = self.stmt(body, env)? {
                        return Ok(Flow::Return(v));
                    }
                    if let Some(st) = step {
                        self.stmt(st, env)?;
                    }
                    self.tick()?;
                }
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => Some(self.int(e, env)?),
                    None => None,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::Expr(e) => {
                self.value(e, env)?;
            }
            StmtKind::Block(ss) => {
                for c in ss {
                    if let Flow::Return(v) = self.stmt(c, env)? {
                        return Ok(Flow::Return(v));
                    }
                }
            }
        }
        Ok(Flow::Normal)
    }

    fn int(&mut self, e: &Expr, env: &mut Env) -> R<i64> {
        match self.value(e, env)? {
            Val::Int(i) => Ok(i),
            Val::Buf(_) => unreachable!("type checker keeps buffers out of arithmetic"),
        }
    }

    /// Evaluate base and offset of an Index node and run its bounds checks.
    fn locate(&mut self, e: &Expr, env: &mut Env) -> R<(usize, i64)> {
        let ExprKind::Index { base, offset } = &e.kind else { unreachable!() };
        let Val::Buf(a) = self.value(base, env)? else { unreachable!() };
        let off = self.int(offset, env)?;
        let size = self.heap[a].size;
        if off >= size {
            return Err(Outcome::Violation { kind: CheckKind::HeapBoundUpper, node: e.id, line: e.line });
        }
        if off < 0 {
            return Err(Outcome::Violation { kind: CheckKind::HeapBoundLower, node: e.id, line: e.line });
        }
        Ok((a, off))
    }

    fn value(&mut self, e: &Expr, env: &mut Env) -> R<Val> {
        let i = match &e.kind {
            ExprKind::IntLit(v) => *v,
            ExprKind::SizeOf { size, .. } => *size,
            ExprKind::Var(v) => return Ok(self.read(env, v)),
            ExprKind::Index { .. } => {
                let (a, off) = self.locate(e, env)?;
                self.heap[a].data.get(&off).copied().unwrap_or(0)
            }
            ExprKind::Unary(UnOp::Neg, a) => self.int(a, env)?.checked_neg().ok_or(Outcome::Overflow)?,
            ExprKind::Unary(UnOp::Not, a) => (self.int(a, env)? == 0) as i64,
            ExprKind::Binary(BinOp::And, a, b) => (self.int(a, env)? != 0 && self.int(b, env)? != 0) as i64,
            ExprKind::Binary(BinOp::Or, a, b) => (self.int(a, env)? != 0 || self.int(b, env)? != 0) as i64,
            ExprKind::Binary(op, a, b) => {
                let x = self.int(a, env)?;
                let y = self.int(b, env)?;
                match op {
                    BinOp::Add => x.checked_add(y).ok_or(Outcome::Overflow)?,
                    BinOp::Sub => x.checked_sub(y).ok_or(Outcome::Overflow)?,
                    BinOp::Mul => x.checked_mul(y).ok_or(Outcome::Overflow)?,
                    BinOp::Div | BinOp::Rem => {
                        if y == 0 {
                            return Err(Outcome::Violation { kind: CheckKind::DivByZero, node: e.id, line: e.line });
                        }
                        let r = if *op == BinOp::Div { x.checked_div(y) } else { x.checked_rem(y) };
                        r.ok_or(Outcome::Overflow)?
                    }
                    BinOp::Lt => (x < y) as i64,
                    BinOp::Le => (x <= y) as i64,
                    BinOp::Gt => (x > y) as i64,
                    BinOp::Ge => (x >= y) as i64,
                    BinOp::Eq => (x == y) as i64,
                    BinOp::Ne => (x != y) as i64,
                    BinOp::And | BinOp::Or => unreachable!(),
                }
            }
            ExprKind::Call { callee, args } => match callee {
                Callee::NondetInt => {
                    let v = self.inputs.get(self.consumed).copied().unwrap_or(0);
                    self.consumed += 1;
                    v
                }
                Callee::Malloc => {
                    let n = self.int(&args[0], env)?;
                    self.heap.push(Alloc { size: n, data: BTreeMap::new() });
                    return Ok(Val::Buf(self.heap.len() - 1));
                }
                Callee::User(name) => {
                    let mut vals = Vec::with_capacity(args.len());
                    for a in args {
                        vals.push(self.value(a, env)?);
                    }
                    let f = self.program.function(name).expect("declared function");
                    self.call(f, vals)?
                }
            },
        };
        Ok(Val::Int(i))
    }
}

/// Number of `nondet_int()` call sites in the program (an upper bound on inputs per loop-free run).
pub fn nondet_sites(p: &Program) -> usize {
    let mut n = 0;
    for f in &p.functions {
        for s in &f.body {
            s.walk(&mut |s| {
                for e in s.exprs() {
                    e.walk(&mut |e| {
                        if matches!(e.kind, ExprKind::Call { callee: Callee::NondetInt, .. }) {
                            n += 1;
                        }
                    })
                }
            });
        }
    }
    n
}

//! Bounded all-path symbolic execution over the instrumented program.

mod report;

use std::collections::BTreeMap;

pub use report::*;

use crate::instrument::{CheckKind, Instrumented};
use crate::lang::*;
use crate::solver::{CmpOp, Constraint, LinExpr, SatResult, Solver, SolverConfig};
use crate::wp::{lower_cond, lower_expr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecBounds {
    /// Body visits per loop entry.
    pub unroll: u32,
    pub max_paths: usize,
}

impl Default for ExecBounds {
    fn default() -> Self {
        ExecBounds { unroll: 64, max_paths: 4096 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExecOptions {
    pub bounds: ExecBounds,
    pub solver: SolverConfig,
    /// Extra initial path condition over input symbols.
    pub assume: Option<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
enum SymVal {
    Int(LinExpr),
    Buf(usize),
}

#[derive(Debug, Clone)]
struct Frame {
    serial: u32,
    env: BTreeMap<String, SymVal>,
}

#[derive(Debug, Clone)]
enum Work<'p> {
    Stmt(&'p Stmt),
    LoopEnter(&'p Stmt),
    LoopHead(&'p Stmt),
    FrameEnd { func: &'p FunctionDef, call: NodeId, target: Option<String> },
}

#[derive(Debug, Clone)]
struct State<'p> {
    id: String,
    frames: Vec<Frame>,
    globals: BTreeMap<String, LinExpr>,
    heap: Vec<AllocationRecord>,
    mem: Vec<Vec<(LinExpr, LinExpr)>>,
    pc: Vec<Constraint>,
    trace: Vec<TraceEvent>,
    counters: BTreeMap<(u32, NodeId), u32>,
    inputs: usize,
    quotients: usize,
    next_frame: u32,
    log: Vec<LogEvent>,
    work: Vec<Work<'p>>,
}

impl State<'_> {
    fn frame(&self) -> &Frame {
        self.frames.last().expect("a frame is active")
    }

    fn serial(&self) -> u32 {
        self.frame().serial
    }

    fn lookup(&self, name: &str) -> SymVal {
        match self.frame().env.get(name) {
            Some(v) => v.clone(),
            None => SymVal::Int(self.globals.get(name).cloned().unwrap_or_else(|| panic!("undefined variable `{name}`"))),
        }
    }

    fn assign(&mut self, name: &str, v: SymVal) {
        let frame = self.frames.last_mut().expect("a frame is active");
        if frame.env.contains_key(name) || !self.globals.contains_key(name) {
            frame.env.insert(name.to_string(), v);
        } else if let SymVal::Int(e) = v {
            self.globals.insert(name.to_string(), e);
        }
    }

    fn snapshot(&self) -> BTreeMap<String, LinExpr> {
        let mut out = self.globals.clone();
        for (k, v) in &self.frame().env {
            if let SymVal::Int(e) = v {
                out.insert(k.clone(), e.clone());
            }
        }
        out
    }

    fn log(&mut self, kind: LogKind) {
        let ev = LogEvent { frame: self.serial(), pc_len: self.pc.len(), kind };
        self.log.push(ev);
    }

    fn path_condition(&self) -> Constraint {
        Constraint::and(self.pc.iter().cloned())
    }

    fn add(&mut self, c: Constraint) {
        if c != Constraint::True {
            self.pc.push(c);
        }
    }
}

struct Engine<'p> {
    program: &'p Program,
    inst: &'p Instrumented,
    opts: ExecOptions,
    solver: Solver,
    reports: BTreeMap<(NodeId, CheckKind), CrashReport>,
    paths: Vec<PathRecord>,
    bound_hit: bool,
}

/// Explore every feasible path of `main` up to the bounds.
pub fn execute(inst: &Instrumented, opts: &ExecOptions) -> ExecutionResult {
    let program = &inst.program;
    let mut engine = Engine {
        program,
        inst,
        opts: opts.clone(),
        solver: Solver::new(opts.solver.clone()),
        reports: BTreeMap::new(),
        paths: vec![],
        bound_hit: false,
    };
    let main = program.main();
    let mut init = State {
        id: String::new(),
        frames: vec![Frame { serial: 0, env: BTreeMap::new() }],
        globals: program.globals.iter().map(|g| (g.name.clone(), LinExpr::constant(g.init.unwrap_or(0)))).collect(),
        heap: vec![],
        mem: vec![],
        pc: vec![],
        trace: vec![("IN".into(), "main".into())],
        counters: BTreeMap::new(),
        inputs: 0,
        quotients: 0,
        next_frame: 1,
        log: vec![],
        work: vec![Work::FrameEnd { func: main, call: main.id, target: None }],
    };
    for s in main.body.iter().rev() {
        init.work.push(Work::Stmt(s));
    }
    if let Some(a) = &opts.assume {
        init.add(a.clone());
    }

    let mut stack = vec![init];
    let mut path_cap_hit = false;
    while let Some(st) = stack.pop() {
        if engine.paths.len() >= opts.bounds.max_paths {
            path_cap_hit = true;
            engine.bound_hit = true;
            break;
        }
        let next = engine.run(st);
        for s in next.into_iter().rev() {
            stack.push(s);
        }
    }

    let mut crash_reports: Vec<CrashReport> = engine.reports.into_values().collect();
    crash_reports.sort_by(|a, b| {
        (a.crash_line, a.cfc_template, &a.failing_paths[0].path_id).cmp(&(b.crash_line, b.cfc_template, &b.failing_paths[0].path_id))
    });
    ExecutionResult {
        crash_reports,
        paths_explored: engine.paths.len(),
        bound_hit: engine.bound_hit,
        path_cap_hit,
        paths: engine.paths,
    }
}

type Many<'p, T> = Vec<(State<'p>, T)>;

impl<'p> Engine<'p> {
    /// Run a state until it finishes or forks. Forked children come back true-branch first.
    fn run(&mut self, mut st: State<'p>) -> Vec<State<'p>> {
        loop {
            let Some(w) = st.work.pop() else {
                unreachable!("main's frame end completes the path");
            };
            let mut next = self.step(st, w);
            match next.len() {
                1 => st = next.pop().expect("one state"),
                _ => return next,
            }
        }
    }

    fn finish(&mut self, st: &State<'p>, end: PathEnd) {
        if end == PathEnd::Truncated {
            self.bound_hit = true;
        }
        self.paths.push(PathRecord { id: st.id.clone(), path_condition: st.path_condition(), end });
    }

    fn feasible(&self, st: &State<'p>, extra: &Constraint) -> bool {
        match extra {
            Constraint::True => true,
            Constraint::False => false,
            c => {
                let q = Constraint::and(st.pc.iter().cloned().chain([c.clone()]));
                self.solver.is_feasible(&q).unwrap_or(true)
            }
        }
    }

    /// Split on `c`; children are labelled with a branch bit. True side first.
    fn fork(&mut self, st: State<'p>, c: &Constraint) -> Vec<(State<'p>, bool)> {
        let t = self.feasible(&st, c);
        let nc = c.negate();
        let f = self.feasible(&st, &nc);
        let mut out = Vec::new();
        if t && f {
            let mut a = st.clone();
            a.id.push('1');
            a.add(c.clone());
            let mut b = st;
            b.id.push('0');
            b.add(nc);
            out.push((a, true));
            out.push((b, false));
        } else if t {
            let mut a = st;
            a.id.push('1');
            a.add(c.clone());
            out.push((a, true));
        } else if f {
            let mut b = st;
            b.id.push('0');
            b.add(nc);
            out.push((b, false));
        } else {
            // The path condition itself became unsatisfiable.
            self.finish(&st, PathEnd::Killed);
        }
        out
    }

    fn step(&mut self, mut st: State<'p>, w: Work<'p>) -> Vec<State<'p>> {
        match w {
            Work::Stmt(s) => self.stmt(st, s),
            Work::LoopEnter(s) => {
                st.counters.insert((st.serial(), s.id), 0);
                st.work.push(Work::LoopHead(s));
                vec![st]
            }
            Work::LoopHead(s) => {
                let cond = s.cond().expect("loop has a condition");
                let prog = lower_cond(cond);
                let mut out = vec![];
                for (st, c) in self.cond(st, cond) {
                    let env = st.snapshot();
                    let pc_len = st.pc.len();
                    for (mut child, taken) in self.fork(st, &c) {
                        child.log.push(LogEvent {
                            frame: child.serial(),
                            pc_len,
                            kind: LogKind::Branch { owner: s.id, taken, cond: prog.clone(), env: env.clone() },
                        });
                        if taken {
                            let key = (child.serial(), s.id);
                            let n = child.counters.get(&key).copied().unwrap_or(0);
                            if n >= self.opts.bounds.unroll {
                                self.finish(&child, PathEnd::Truncated);
                                continue;
                            }
                            child.counters.insert(key, n + 1);
                            child.work.push(Work::LoopHead(s));
                            if let StmtKind::For { step: Some(step), .. } = &s.kind {
                                child.work.push(Work::Stmt(step));
                            }
                            let body = match &s.kind {
                                StmtKind::While { body, .. } | StmtKind::For { body, .. } => body,
                                _ => unreachable!(),
                            };
                            child.work.push(Work::Stmt(body));
                        }
                        out.push(child);
                    }
                }
                out
            }
            Work::FrameEnd { func, call, target } => self.return_from(st, func, call, target, LinExpr::constant(0)),
        }
    }

    fn return_from(&mut self, mut st: State<'p>, func: &FunctionDef, call: NodeId, target: Option<String>, value: LinExpr) -> Vec<State<'p>> {
        st.trace.push(("OUT".into(), func.name.clone()));
        if st.frames.len() == 1 {
            self.finish(&st, PathEnd::Returned(value));
            return vec![];
        }
        st.frames.pop();
        let mut vars = self.program.globals_written(&func.name);
        if let Some(t) = target {
            st.assign(&t, SymVal::Int(value));
            vars.insert(0, t);
        }
        if !vars.is_empty() {
            st.log(LogKind::Havoc { node: call, vars });
        }
        vec![st]
    }

    fn stmt(&mut self, mut st: State<'p>, s: &'p Stmt) -> Vec<State<'p>> {
        if !matches!(s.kind, StmtKind::Block(_) | StmtKind::While { .. } | StmtKind::For { .. }) {
            let env = st.snapshot();
            st.log(LogKind::Stmt { node: s.id, env });
        }
        match &s.kind {
            StmtKind::Block(stmts) => {
                for c in stmts.iter().rev() {
                    st.work.push(Work::Stmt(c));
                }
                vec![st]
            }
            StmtKind::Decl { name, kind } => match kind {
                DeclKind::Array { len, .. } => {
                    let id = st.heap.len();
                    st.heap.push(AllocationRecord {
                        alloc_id: id,
                        size: LinExpr::constant(*len),
                        site: s.id,
                        site_line: s.line,
                        size_source: Some(SizeSource::Const(*len)),
                        var: name.clone(),
                    });
                    st.mem.push(vec![]);
                    st.frames.last_mut().expect("frame").env.insert(name.clone(), SymVal::Buf(id));
                    vec![st]
                }
                DeclKind::Int(None) => {
                    st.frames.last_mut().expect("frame").env.insert(name.clone(), SymVal::Int(LinExpr::constant(0)));
                    st.log(LogKind::Assign { node: s.id, var: name.clone(), value: Some(LinExpr::constant(0)) });
                    vec![st]
                }
                DeclKind::Int(Some(e)) | DeclKind::Buf(Some(e)) => {
                    if e.user_call().is_some() {
                        // Bind first so the callee's return can assign it.
                        st.frames.last_mut().expect("frame").env.insert(name.clone(), SymVal::Int(LinExpr::constant(0)));
                        return self.call(st, e, s.id, Some(name.clone()));
                    }
                    let var = name.clone();
                    self.value(st, e)
                        .into_iter()
                        .map(|(mut st, v)| {
                            if let (SymVal::Buf(a), true) = (&v, matches!(e.kind, ExprKind::Call { .. })) {
                                st.heap[*a].var = var.clone();
                            }
                            if matches!(v, SymVal::Int(_)) {
                                st.log(LogKind::Assign { node: s.id, var: var.clone(), value: lower_expr(e) });
                            }
                            st.frames.last_mut().expect("frame").env.insert(var.clone(), v);
                            st
                        })
                        .collect()
                }
                DeclKind::Buf(None) => unreachable!("parser requires an initializer"),
            },
            StmtKind::Assign { target: LValue::Var(x), value } => {
                if value.user_call().is_some() {
                    return self.call(st, value, s.id, Some(x.clone()));
                }
                self.value(st, value)
                    .into_iter()
                    .map(|(mut st, v)| {
                        if matches!(v, SymVal::Int(_)) {
                            st.log(LogKind::Assign { node: s.id, var: x.clone(), value: lower_expr(value) });
                        }
                        st.assign(x, v);
                        st
                    })
                    .collect()
            }
            StmtKind::Assign { target: LValue::Index(ix), value } => {
                let mut out = vec![];
                for (st, (a, off)) in self.locate(st, ix) {
                    for (mut st, v) in self.value(st, value) {
                        let SymVal::Int(v) = v else { unreachable!() };
                        st.mem[a].push((off.clone(), v));
                        out.push(st);
                    }
                }
                out
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let prog = lower_cond(cond);
                let mut out = vec![];
                for (st, c) in self.cond(st, cond) {
                    let env = st.snapshot();
                    let pc_len = st.pc.len();
                    for (mut child, taken) in self.fork(st, &c) {
                        child.log.push(LogEvent {
                            frame: child.serial(),
                            pc_len,
                            kind: LogKind::Branch { owner: s.id, taken, cond: prog.clone(), env: env.clone() },
                        });
                        if taken {
                            child.work.push(Work::Stmt(then_branch));
                        } else if let Some(e) = else_branch {
                            child.work.push(Work::Stmt(e));
                        }
                        out.push(child);
                    }
                }
                out
            }
            StmtKind::While { .. } => {
                st.work.push(Work::LoopEnter(s));
                vec![st]
            }
            StmtKind::For { init, .. } => {
                st.work.push(Work::LoopEnter(s));
                if let Some(i) = init {
                    st.work.push(Work::Stmt(i));
                }
                vec![st]
            }
            StmtKind::Return(e) => {
                let results: Many<'p, LinExpr> = match e {
                    Some(e) => self.value(st, e).into_iter().map(|(s, v)| (s, as_int(v))).collect(),
                    None => vec![(st, LinExpr::constant(0))],
                };
                let mut out = vec![];
                for (mut st, v) in results {
                    loop {
                        match st.work.pop() {
                            Some(Work::FrameEnd { func, call, target }) => {
                                out.extend(self.return_from(st, func, call, target, v));
                                break;
                            }
                            Some(_) => {}
                            None => unreachable!("frame end marker missing"),
                        }
                    }
                }
                out
            }
            StmtKind::Expr(e) => {
                if e.user_call().is_some() {
                    return self.call(st, e, s.id, None);
                }
                self.value(st, e).into_iter().map(|(s, _)| s).collect()
            }
        }
    }

    fn call(&mut self, st: State<'p>, e: &'p Expr, stmt: NodeId, target: Option<String>) -> Vec<State<'p>> {
        let (name, args) = e.user_call().expect("user call");
        let f = self.program.function(name).expect("declared function");
        self.values(st, args)
            .into_iter()
            .map(|(mut st, vals)| {
                let serial = st.next_frame;
                st.next_frame += 1;
                let env = f.params.iter().map(|p| p.name.clone()).zip(vals).collect();
                st.frames.push(Frame { serial, env });
                st.trace.push(("IN".into(), f.name.clone()));
                st.work.push(Work::FrameEnd { func: f, call: stmt, target: target.clone() });
                for s in f.body.iter().rev() {
                    st.work.push(Work::Stmt(s));
                }
                st
            })
            .collect()
    }

    fn values(&mut self, st: State<'p>, es: &'p [Expr]) -> Many<'p, Vec<SymVal>> {
        let mut acc: Many<'p, Vec<SymVal>> = vec![(st, vec![])];
        for e in es {
            let mut next = vec![];
            for (st, vs) in acc {
                for (st, v) in self.value(st, e) {
                    let mut vs = vs.clone();
                    vs.push(v);
                    next.push((st, vs));
                }
            }
            acc = next;
        }
        acc
    }

    fn ints(&mut self, st: State<'p>, a: &'p Expr, b: &'p Expr) -> Many<'p, (LinExpr, LinExpr)> {
        let mut out = vec![];
        for (st, x) in self.value(st, a) {
            for (st, y) in self.value(st, b) {
                out.push((st, (as_int(x.clone()), as_int(y))));
            }
        }
        out
    }

    /// Condition as a constraint over input symbols.
    fn cond(&mut self, st: State<'p>, e: &'p Expr) -> Many<'p, Constraint> {
        match &e.kind {
            ExprKind::Binary(op @ (BinOp::And | BinOp::Or), a, b) => {
                let is_and = *op == BinOp::And;
                let mut out = vec![];
                for (st, ca) in self.cond(st, a) {
                    if !b.has_effects() {
                        for (st, cb) in self.cond(st, b) {
                            let c = if is_and { Constraint::and([ca.clone(), cb]) } else { Constraint::or([ca.clone(), cb]) };
                            out.push((st, c));
                        }
                        continue;
                    }
                    // Short circuit: the right side only runs when the left does not decide.
                    for (st, taken) in self.fork(st, &ca) {
                        if taken == is_and {
                            out.extend(self.cond(st, b));
                        } else {
                            out.push((st, Constraint::bool(!is_and)));
                        }
                    }
                }
                out
            }
            ExprKind::Unary(UnOp::Not, a) => self.cond(st, a).into_iter().map(|(s, c)| (s, c.negate())).collect(),
            ExprKind::Binary(op, a, b) if op.is_comparison() => {
                let op = crate::wp::lower::cmp_op(*op);
                self.ints(st, a, b).into_iter().map(|(s, (x, y))| (s, Constraint::cmp(&x, op, &y))).collect()
            }
            _ => self
                .value(st, e)
                .into_iter()
                .map(|(s, v)| (s, Constraint::cmp(&as_int(v), CmpOp::Ne, &LinExpr::constant(0))))
                .collect(),
        }
    }

    fn value(&mut self, mut st: State<'p>, e: &'p Expr) -> Many<'p, SymVal> {
        match &e.kind {
            ExprKind::IntLit(v) => vec![(st, SymVal::Int(LinExpr::constant(*v)))],
            ExprKind::SizeOf { size, .. } => vec![(st, SymVal::Int(LinExpr::constant(*size)))],
            ExprKind::Var(v) => {
                let val = st.lookup(v);
                vec![(st, val)]
            }
            ExprKind::Unary(UnOp::Neg, a) => self.value(st, a).into_iter().map(|(s, v)| (s, SymVal::Int(as_int(v).neg()))).collect(),
            ExprKind::Unary(UnOp::Not, _) | ExprKind::Binary(BinOp::And | BinOp::Or, ..) => {
                unreachable!("boolean expressions only appear as conditions")
            }
            ExprKind::Binary(op, _, _) if op.is_comparison() => unreachable!("comparisons only appear as conditions"),
            ExprKind::Binary(op, a, b) => {
                let mut out = vec![];
                for (st, (x, y)) in self.ints(st, a, b) {
                    match op {
                        BinOp::Add => out.push((st, SymVal::Int(x.add(&y)))),
                        BinOp::Sub => out.push((st, SymVal::Int(x.sub(&y)))),
                        BinOp::Mul => out.push((st, SymVal::Int(x.mul(&y)))),
                        BinOp::Div | BinOp::Rem => {
                            if let Some(st) = self.check_div(st, e, b, &y) {
                                let (st, v) = divide(st, &x, &y, *op == BinOp::Rem);
                                out.push((st, SymVal::Int(v)));
                            }
                        }
                        _ => unreachable!(),
                    }
                }
                out
            }
            ExprKind::Index { .. } => {
                let mut out = vec![];
                for (st, (a, off)) in self.locate(st, e) {
                    out.extend(self.read(st, a, off).into_iter().map(|(s, v)| (s, SymVal::Int(v))));
                }
                out
            }
            ExprKind::Call { callee, args } => match callee {
                Callee::NondetInt => {
                    let sym = LinExpr::var(format!("$in{}", st.inputs));
                    st.inputs += 1;
                    vec![(st, SymVal::Int(sym))]
                }
                Callee::Malloc => {
                    let mut out = vec![];
                    for (mut st, v) in self.value(st, &args[0]) {
                        let id = st.heap.len();
                        let size_source = match &args[0].kind {
                            ExprKind::Var(g) if self.program.global(g).is_some_and(|g| g.synthetic) => {
                                Some(SizeSource::Global(g.clone()))
                            }
                            ExprKind::IntLit(k) => Some(SizeSource::Const(*k)),
                            _ => None,
                        };
                        st.heap.push(AllocationRecord {
                            alloc_id: id,
                            size: as_int(v),
                            site: e.id,
                            site_line: e.line,
                            size_source,
                            var: String::new(),
                        });
                        st.mem.push(vec![]);
                        out.push((st, SymVal::Buf(id)));
                    }
                    out
                }
                Callee::User(_) => unreachable!("user calls are statement-level"),
            },
        }
    }

    /// Read memory at a possibly symbolic offset; forks on aliasing with earlier writes.
    fn read(&mut self, st: State<'p>, a: usize, off: LinExpr) -> Many<'p, LinExpr> {
        let writes = st.mem[a].clone();
        let mut pending = vec![st];
        let mut out = vec![];
        for (woff, wval) in writes.iter().rev() {
            let eq = Constraint::cmp(&off, CmpOp::Eq, woff);
            let mut still = vec![];
            for st in pending {
                for (st, same) in self.fork_quiet(st, &eq) {
                    if same {
                        out.push((st, wval.clone()));
                    } else {
                        still.push(st);
                    }
                }
            }
            pending = still;
            if pending.is_empty() {
                break;
            }
        }
        out.extend(pending.into_iter().map(|s| (s, LinExpr::constant(0))));
        out
    }

    /// Like `fork`, but decided conditions do not add a branch bit.
    fn fork_quiet(&mut self, st: State<'p>, c: &Constraint) -> Vec<(State<'p>, bool)> {
        match c {
            Constraint::True => vec![(st, true)],
            Constraint::False => vec![(st, false)],
            _ => self.fork(st, c),
        }
    }

    /// Evaluate an Index node's base and offset, running its bounds checks.
    fn locate(&mut self, st: State<'p>, e: &'p Expr) -> Many<'p, (usize, LinExpr)> {
        let ExprKind::Index { base, offset } = &e.kind else { unreachable!() };
        let SymVal::Buf(a) = st.lookup(base.as_var().expect("index base is a variable")) else {
            unreachable!("index base is a buffer")
        };
        let mut out = vec![];
        for (st, off) in self.value(st, offset) {
            let off = as_int(off);
            let size = st.heap[a].size.clone();
            let upper = Constraint::cmp(&off, CmpOp::Lt, &size);
            let lower = Constraint::cmp(&off, CmpOp::Ge, &LinExpr::constant(0));
            let mut st = Some(st);
            for (kind, check) in [(CheckKind::HeapBoundUpper, upper), (CheckKind::HeapBoundLower, lower)] {
                if let Some(s) = st.take() {
                    st = self.check(s, e, kind, check, offset, Some(a), &off);
                }
            }
            if let Some(st) = st {
                out.push((st, (a, off)));
            }
        }
        out
    }

    fn check_div(&mut self, st: State<'p>, e: &'p Expr, divisor: &'p Expr, y: &LinExpr) -> Option<State<'p>> {
        let check = Constraint::cmp(y, CmpOp::Ne, &LinExpr::constant(0));
        self.check(st, e, CheckKind::DivByZero, check, divisor, None, y)
    }

    /// Query `pc ∧ ¬check`; record a failing path when satisfiable and continue under `check`.
    #[allow(clippy::too_many_arguments)]
    fn check(
        &mut self,
        mut st: State<'p>,
        e: &'p Expr,
        kind: CheckKind,
        check: Constraint,
        operand: &'p Expr,
        alloc: Option<usize>,
        value: &LinExpr,
    ) -> Option<State<'p>> {
        let Some(sc) = self.inst.check_for(e.id, kind) else {
            // Class disabled: a definite crash still ends the path.
            if check == Constraint::False {
                self.finish(&st, PathEnd::Killed);
                return None;
            }
            if kind == CheckKind::DivByZero && !self.feasible(&st, &check) {
                self.finish(&st, PathEnd::Killed);
                return None;
            }
            st.add(check.clone());
            return Some(st);
        };
        let violation = check.negate();
        if violation != Constraint::False {
            let query = Constraint::and(st.pc.iter().cloned().chain([violation.clone()]));
            let res = self.solver.check_sat(&query);
            let (unconfirmed, model) = match res {
                SatResult::Sat(m) => (false, Some(m)),
                SatResult::Unsat => (false, None),
                SatResult::Unknown(_) => (true, Some(BTreeMap::new())),
            };
            if let Some(model) = model {
                let alloc_rec = alloc.map(|a| st.heap[a].clone());
                let check_prog = program_check(kind, operand, alloc_rec.as_ref());
                let witness_value = value.eval(&|n| model.get(n).copied());
                let fp = FailingPath {
                    path_id: st.id.clone(),
                    path_condition: query,
                    pc_parts: st.pc.clone(),
                    violation: violation.clone(),
                    witness: model,
                    witness_value,
                    inputs: st.inputs,
                    alloc: alloc_rec,
                    check_prog,
                    log: st.log.clone(),
                    frame: st.serial(),
                    trace: st.trace.clone(),
                };
                let stmt = self.stmt_of(e.id);
                let report = self.reports.entry((e.id, kind)).or_insert_with(|| CrashReport {
                    cfc: render_cfc(kind, sc.buffer.as_deref(), sc.divisor.as_deref()),
                    cfc_template: kind,
                    crash_node: e.id,
                    crash_stmt: stmt,
                    crash_line: e.line,
                    function: sc.function.clone(),
                    buffer: sc.buffer.clone(),
                    divisor: sc.divisor.clone(),
                    trace: fp.trace.clone(),
                    instrumented_path: Default::default(),
                    failing_paths: vec![],
                    unconfirmed: false,
                });
                report.unconfirmed |= unconfirmed;
                report.failing_paths.push(fp);
            }
        }
        let prog = program_check(kind, operand, alloc.map(|a| &st.heap[a]));
        if !self.feasible(&st, &check) {
            self.finish(&st, PathEnd::Killed);
            return None;
        }
        st.add(check);
        st.log(LogKind::Assume { node: e.id, check: prog });
        Some(st)
    }

    fn stmt_of(&self, node: NodeId) -> NodeId {
        self.inst.checks.iter().find(|c| c.guarded_node == node).map(|c| c.stmt).unwrap_or(node)
    }
}

fn as_int(v: SymVal) -> LinExpr {
    match v {
        SymVal::Int(e) => e,
        SymVal::Buf(_) => unreachable!("buffer used as integer"),
    }
}

/// The check over program variables at the crash statement.
fn program_check(kind: CheckKind, operand: &Expr, alloc: Option<&AllocationRecord>) -> Option<Constraint> {
    let x = lower_expr(operand)?;
    Some(match kind {
        CheckKind::HeapBoundUpper => Constraint::cmp(&x, CmpOp::Lt, &alloc?.size_source.as_ref()?.as_lin()),
        CheckKind::HeapBoundLower => Constraint::cmp(&x, CmpOp::Ge, &LinExpr::constant(0)),
        CheckKind::DivByZero => Constraint::cmp(&x, CmpOp::Ne, &LinExpr::constant(0)),
    })
}

/// Truncating division. Constant divisors get an exact encoding with a fresh
/// quotient symbol; symbolic divisors stay opaque.
fn divide<'p>(mut st: State<'p>, x: &LinExpr, y: &LinExpr, rem: bool) -> (State<'p>, LinExpr) {
    let (Some(c), None) = (y.as_constant(), x.as_constant()) else {
        return (st, if rem { x.rem(y) } else { x.div(y) });
    };
    let q = LinExpr::var(format!("$q{}", st.quotients));
    st.quotients += 1;
    let m = c.abs();
    // t = trunc(x / m); quotient is t or -t depending on the sign of c.
    let mt = q.scale(m);
    let zero = LinExpr::constant(0);
    let nonneg = Constraint::and([
        Constraint::cmp(x, CmpOp::Ge, &zero),
        Constraint::cmp(&mt, CmpOp::Le, x),
        Constraint::cmp(x, CmpOp::Le, &mt.offset(m - 1)),
    ]);
    let neg = Constraint::and([
        Constraint::cmp(x, CmpOp::Lt, &zero),
        Constraint::cmp(&mt.offset(-(m - 1)), CmpOp::Le, x),
        Constraint::cmp(x, CmpOp::Le, &mt),
    ]);
    st.add(Constraint::or([nonneg, neg]));
    let quotient = if c > 0 { q.clone() } else { q.neg() };
    if rem {
        (st, x.sub(&quotient.scale(c)))
    } else {
        (st, quotient)
    }
}

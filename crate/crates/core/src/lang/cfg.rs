//! Intraprocedural control-flow graph over leaf statements.

use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;

pub type BlockId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeLabel {
    Always,
    True,
    False,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CfgStmt {
    /// Statement node; for branch conditions, the owning If/While/For.
    pub id: NodeId,
    pub line: u32,
    pub defs: Vec<String>,
    pub uses: Vec<String>,
    pub is_cond: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BasicBlock {
    pub id: BlockId,
    pub stmts: Vec<CfgStmt>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cfg {
    pub function: String,
    pub blocks: Vec<BasicBlock>,
    pub edges: Vec<(BlockId, BlockId, EdgeLabel)>,
    pub entry: BlockId,
    pub exit: BlockId,
    pub stmt_of: BTreeMap<NodeId, BlockId>,
}

impl Cfg {
    /// Bare graph, for analyses that only need the shape.
    pub fn from_edges(n: usize, entry: BlockId, edges: &[(BlockId, BlockId)]) -> Cfg {
        Cfg {
            function: String::new(),
            blocks: (0..n).map(|id| BasicBlock { id, stmts: vec![] }).collect(),
            edges: edges.iter().map(|&(a, b)| (a, b, EdgeLabel::Always)).collect(),
            entry,
            exit: n.saturating_sub(1),
            stmt_of: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn succs(&self, b: BlockId) -> Vec<BlockId> {
        self.edges.iter().filter(|e| e.0 == b).map(|e| e.1).collect()
    }

    pub fn preds(&self, b: BlockId) -> Vec<BlockId> {
        self.edges.iter().filter(|e| e.1 == b).map(|e| e.0).collect()
    }

    pub fn labeled_succs(&self, b: BlockId) -> Vec<(BlockId, EdgeLabel)> {
        self.edges.iter().filter(|e| e.0 == b).map(|e| (e.1, e.2)).collect()
    }

    /// Block and index of a statement.
    pub fn position(&self, id: NodeId) -> Option<(BlockId, usize)> {
        let b = *self.stmt_of.get(&id)?;
        let i = self.blocks[b].stmts.iter().position(|s| s.id == id)?;
        Some((b, i))
    }

    /// Statement-level dominance (reflexive).
    pub fn stmt_dominates(&self, dom: &[BTreeSet<BlockId>], a: NodeId, b: NodeId) -> bool {
        match (self.position(a), self.position(b)) {
            (Some((ba, ia)), Some((bb, ib))) => {
                if ba == bb {
                    ia <= ib
                } else {
                    dom[bb].contains(&ba)
                }
            }
            _ => false,
        }
    }

    /// Shortest backward distance (in statements) from `to` back to `from`, if `from` reaches `to`.
    pub fn stmt_distance(&self, from: NodeId, to: NodeId) -> Option<usize> {
        let (fb, fi) = self.position(from)?;
        let (tb, ti) = self.position(to)?;
        if fb == tb && fi <= ti {
            return Some(ti - fi);
        }
        let mut dist: BTreeMap<BlockId, usize> = BTreeMap::new();
        let mut heap = std::collections::BinaryHeap::new();
        heap.push(std::cmp::Reverse((self.blocks[fb].stmts.len() - fi, fb)));
        let mut best: Option<usize> = None;
        while let Some(std::cmp::Reverse((cost, b))) = heap.pop() {
            if dist.get(&b).is_some_and(|&d| d < cost) {
                continue;
            }
            for s in self.succs(b) {
                if s == tb {
                    best = Some(best.map_or(cost + ti, |r| r.min(cost + ti)));
                }
                let c = cost + self.blocks[s].stmts.len();
                if dist.get(&s).is_none_or(|&d| c < d) {
                    dist.insert(s, c);
                    heap.push(std::cmp::Reverse((c, s)));
                }
            }
        }
        best
    }
}

struct Builder<'p> {
    program: &'p Program,
    blocks: Vec<BasicBlock>,
    edges: Vec<(BlockId, BlockId, EdgeLabel)>,
    stmt_of: BTreeMap<NodeId, BlockId>,
    current: BlockId,
    exit: BlockId,
}

impl Builder<'_> {
    fn new_block(&mut self) -> BlockId {
        let id = self.blocks.len();
        self.blocks.push(BasicBlock { id, stmts: vec![] });
        id
    }

    fn edge(&mut self, a: BlockId, b: BlockId, l: EdgeLabel) {
        self.edges.push((a, b, l));
    }

    fn push(&mut self, s: &Stmt, is_cond: bool) {
        let (defs, uses) = if is_cond {
            (vec![], s.cond().map(expr_uses).unwrap_or_default())
        } else {
            defs_uses(self.program, s)
        };
        self.stmt_of.insert(s.id, self.current);
        self.blocks[self.current].stmts.push(CfgStmt { id: s.id, line: s.line, defs, uses, is_cond });
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Block(stmts) => {
                self.stmt_of.insert(s.id, self.current);
                for c in stmts {
                    self.stmt(c);
                }
            }
            StmtKind::If { then_branch, else_branch, .. } => {
                self.push(s, true);
                let cond = self.current;
                let t = self.new_block();
                self.edge(cond, t, EdgeLabel::True);
                self.current = t;
                self.stmt(then_branch);
                let t_end = self.current;
                let join;
                if let Some(e) = else_branch {
                    let eb = self.new_block();
                    self.edge(cond, eb, EdgeLabel::False);
                    self.current = eb;
                    self.stmt(e);
                    let e_end = self.current;
                    join = self.new_block();
                    self.edge(e_end, join, EdgeLabel::Always);
                } else {
                    join = self.new_block();
                    self.edge(cond, join, EdgeLabel::False);
                }
                self.edge(t_end, join, EdgeLabel::Always);
                self.current = join;
            }
            StmtKind::While { body, .. } => self.looping(s, None, None, body),
            StmtKind::For { init, step, body, .. } => self.looping(s, init.as_deref(), step.as_deref(), body),
            StmtKind::Return(_) => {
                self.push(s, false);
                let exit = self.exit;
                self.edge(self.current, exit, EdgeLabel::Always);
                self.current = self.new_block();
            }
            _ => self.push(s, false),
        }
    }

    fn looping(&mut self, s: &Stmt, init: Option<&Stmt>, step: Option<&Stmt>, body: &Stmt) {
        if let Some(i) = init {
            self.stmt(i);
        }
        let header = self.new_block();
        self.edge(self.current, header, EdgeLabel::Always);
        self.current = header;
        self.push(s, true);
        let b = self.new_block();
        self.edge(header, b, EdgeLabel::True);
        self.current = b;
        self.stmt(body);
        if let Some(st) = step {
            let sb = self.new_block();
            self.edge(self.current, sb, EdgeLabel::Always);
            self.current = sb;
            self.stmt(st);
        }
        self.edge(self.current, header, EdgeLabel::Always);
        let out = self.new_block();
        self.edge(header, out, EdgeLabel::False);
        self.current = out;
    }
}

/// Build the CFG of one function. Block 0 is an empty entry; the last block is the exit.
pub fn build_cfg(program: &Program, f: &FunctionDef) -> Cfg {
    let mut b = Builder {
        program,
        blocks: vec![],
        edges: vec![],
        stmt_of: BTreeMap::new(),
        current: 0,
        exit: 0,
    };
    let entry = b.new_block();
    b.exit = b.new_block();
    let first = b.new_block();
    b.edge(entry, first, EdgeLabel::Always);
    b.current = first;
    for s in &f.body {
        b.stmt(s);
    }
    let exit = b.exit;
    b.edge(b.current, exit, EdgeLabel::Always);

    // Drop unreachable blocks and renumber in creation order, moving exit last.
    let mut reach = BTreeSet::new();
    let mut stack = vec![entry];
    while let Some(x) = stack.pop() {
        if reach.insert(x) {
            stack.extend(b.edges.iter().filter(|e| e.0 == x).map(|e| e.1));
        }
    }
    let mut order: Vec<BlockId> = (0..b.blocks.len()).filter(|x| reach.contains(x) && *x != exit).collect();
    order.push(exit);
    let remap: BTreeMap<BlockId, BlockId> = order.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let blocks = order
        .iter()
        .map(|&old| BasicBlock { id: remap[&old], stmts: std::mem::take(&mut b.blocks[old].stmts) })
        .collect::<Vec<_>>();
    let mut edges: Vec<_> = b
        .edges
        .iter()
        .filter(|e| reach.contains(&e.0))
        .map(|&(x, y, l)| (remap[&x], remap[&y], l))
        .collect();
    edges.sort();
    edges.dedup();
    let stmt_of = b
        .stmt_of
        .into_iter()
        .filter_map(|(id, blk)| remap.get(&blk).filter(|_| reach.contains(&blk)).map(|&nb| (id, nb)))
        .collect();
    let n = blocks.len();
    Cfg { function: f.name.clone(), blocks, edges, entry: 0, exit: n - 1, stmt_of }
}

pub fn expr_uses(e: &Expr) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    e.walk(&mut |x| match &x.kind {
        ExprKind::Var(v) if x.ty == Type::Int => {
            if !out.contains(v) {
                out.push(v.clone());
            }
        }
        _ => {}
    });
    out
}

/// Integer variables written and read by a leaf statement.
pub fn defs_uses(p: &Program, s: &Stmt) -> (Vec<String>, Vec<String>) {
    let mut uses = Vec::new();
    for e in s.exprs() {
        for u in expr_uses(e) {
            if !uses.contains(&u) {
                uses.push(u);
            }
        }
    }
    let mut defs: Vec<String> = s.defined_var().map(|v| vec![v.to_string()]).unwrap_or_default();
    for e in s.exprs() {
        e.walk(&mut |x| {
            if let Some((callee, _)) = x.user_call() {
                for g in p.globals_written(callee) {
                    if !defs.contains(&g) {
                        defs.push(g);
                    }
                }
            }
        });
    }
    (defs, uses)
}

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::instrument::CheckKind;
use crate::lang::NodeId;
use crate::solver::{Constraint, LinExpr, Model};

pub type TraceEvent = (String, String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SizeSource {
    /// Malloc-site global holding the requested size.
    Global(String),
    /// Declared length of a fixed-size array.
    Const(i64),
}

impl SizeSource {
    pub fn as_lin(&self) -> LinExpr {
        match self {
            SizeSource::Global(g) => LinExpr::var(g.clone()),
            SizeSource::Const(k) => LinExpr::constant(*k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllocationRecord {
    pub alloc_id: usize,
    pub size: LinExpr,
    pub site: NodeId,
    pub site_line: u32,
    pub size_source: Option<SizeSource>,
    /// Variable first bound to the allocation.
    pub var: String,
}

/// One step of a path, in program-level terms, for backward propagation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEvent {
    /// Serial of the call frame the event happened in.
    pub frame: u32,
    /// Number of path-condition conjuncts in force when the event happened.
    pub pc_len: usize,
    pub kind: LogKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LogKind {
    /// A leaf statement or an `if` starts executing; `env` holds integer variables in scope.
    Stmt { node: NodeId, env: BTreeMap<String, LinExpr> },
    /// `var := value`; `None` means the value is not expressible over program variables.
    Assign { node: NodeId, var: String, value: Option<LinExpr> },
    /// Variables with unknown new values (call results, globals written by callees).
    Havoc { node: NodeId, vars: Vec<String> },
    /// A branch of `owner` was taken. `env` is the state before the decision.
    Branch { owner: NodeId, taken: bool, cond: Option<Constraint>, env: BTreeMap<String, LinExpr> },
    /// An earlier check on this path was assumed to hold.
    Assume { node: NodeId, check: Option<Constraint> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FailingPath {
    pub path_id: String,
    /// Path condition at the violation, including the negated check.
    pub path_condition: Constraint,
    /// Conjuncts of the path condition before the violation, in order.
    pub pc_parts: Vec<Constraint>,
    /// Negated check over input symbols.
    pub violation: Constraint,
    pub witness: Model,
    /// Offset (heap) or divisor (division) under the witness.
    pub witness_value: Option<i64>,
    /// Number of inputs the path had consumed at the violation.
    pub inputs: usize,
    pub alloc: Option<AllocationRecord>,
    /// The check in program variables at the crash statement.
    pub check_prog: Option<Constraint>,
    pub log: Vec<LogEvent>,
    /// Frame serial of the crashing function.
    pub frame: u32,
    pub trace: Vec<TraceEvent>,
}

impl FailingPath {
    /// Inputs in consumption order, missing ones default to 0.
    pub fn witness_inputs(&self) -> Vec<i64> {
        (0..self.inputs).map(|k| self.witness.get(&format!("$in{k}")).copied().unwrap_or(0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrashReport {
    pub cfc: String,
    pub cfc_template: CheckKind,
    pub crash_node: NodeId,
    pub crash_stmt: NodeId,
    pub crash_line: u32,
    pub function: String,
    pub buffer: Option<String>,
    pub divisor: Option<String>,
    pub trace: Vec<TraceEvent>,
    pub instrumented_path: PathBuf,
    pub failing_paths: Vec<FailingPath>,
    /// A violation query came back unknown.
    pub unconfirmed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathEnd {
    Returned(LinExpr),
    /// Loop unroll bound reached with the guard still satisfiable.
    Truncated,
    /// An assumed check contradicted the path condition.
    Killed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathRecord {
    pub id: String,
    pub path_condition: Constraint,
    pub end: PathEnd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionResult {
    pub crash_reports: Vec<CrashReport>,
    pub paths_explored: usize,
    pub bound_hit: bool,
    /// Set when exploration stopped at the path cap.
    pub path_cap_hit: bool,
    pub paths: Vec<PathRecord>,
}

impl ExecutionResult {
    pub fn has_unconfirmed(&self) -> bool {
        self.crash_reports.iter().any(|r| r.unconfirmed)
    }
}

/// Surface form of a crash-free constraint.
pub fn render_cfc(template: CheckKind, buffer: Option<&str>, divisor: Option<&str>) -> String {
    match template {
        CheckKind::HeapBoundUpper => {
            let v = buffer.unwrap_or("?");
            format!("access({v}) < base({v})+size({v})")
        }
        CheckKind::HeapBoundLower => {
            let v = buffer.unwrap_or("?");
            format!("access({v}) >= base({v})")
        }
        CheckKind::DivByZero => format!("{} != 0", divisor.unwrap_or("?")),
    }
}

//! Repair of heap overflows and divide-by-zero errors in Mini-C.

pub mod solver;
pub mod lang;
pub mod instrument;
pub mod interp;
pub mod wp;
pub mod symex;
pub mod fixloc;
pub mod synth;
pub mod driver;

pub use driver::{repair, repair_source, RepairOptions, RepairOutcome, RepairReport, Verdict};
pub use fixloc::{FixKind, FixLocation};
pub use instrument::ErrorClasses;
pub use lang::{parse, LangError, Program};
pub use solver::{Constraint, LinExpr, SatResult, Solver, SolverConfig, Validity};
pub use symex::{CrashReport, ExecBounds, ExecOptions};
pub use synth::{Patch, SynthConfig, Template};
pub use wp::{Obligation, WpMode};

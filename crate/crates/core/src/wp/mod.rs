//! Backward propagation of crash-free constraints.

pub mod lower;
mod propagate;

pub use lower::{lower_cond, lower_expr};
pub use propagate::{propagate, wp_stmt, Obligation, Snapshot, WpMode};

//! Mini-C front end: lexer, parser, typed AST, CFG.

pub mod ast;
pub mod cfg;
pub mod dom;
mod lexer;
mod parser;
pub mod pretty;
pub mod scope;

pub use ast::*;
pub use cfg::{build_cfg, BasicBlock, BlockId, Cfg, CfgStmt, EdgeLabel};
pub use dom::{dominators, post_dominators};
pub use parser::parse;
pub use pretty::{expr_to_string, print_program, stmt_to_string};
pub use scope::{int_scopes, scopes, Scope};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LangError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("type error at line {line}: {msg}")]
    Type { line: u32, msg: String },
}

impl LangError {
    pub fn line(&self) -> u32 {
        match self {
            LangError::Syntax { line, .. } | LangError::Type { line, .. } => *line,
        }
    }
}

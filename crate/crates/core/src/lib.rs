//! Analyses and transformations for finding predicates that can be abstracted
//! away without changing the outcome of an assertion check.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs: parsing and printing MiniImp, control-flow and
//! dataflow facts, extended value slices, the ITP criteria, the program
//! transformations and a bounded-exhaustive checker that drives the
//! property-checking workflow.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod ast;
pub mod cfg;
pub mod checker;
pub mod dataflow;
pub mod evslice;
pub mod itp;
pub mod parser;
pub mod pretty;
pub mod transform;
pub mod workflow;

pub use ast::{Arm, BinOp, BlockPath, Decl, Expr, Init, Program, Stmt, StmtPath, UnOp};
pub use cfg::{Cfg, EdgeLabel, Loop, NodeId, NodeKind, VarId};
pub use checker::{CheckConfig, TerminalStatus, Trace, Verdict, ViolatingSuffix};
pub use itp::{CriteriaReport, PredicateSite};
pub use parser::{parse, ParseError};
pub use pretty::pretty_print;
pub use workflow::{run_workflow, WorkflowReport};

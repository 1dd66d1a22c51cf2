//! Signature rules: a small boolean language over header fields, per-packet
//! and sliding-window evaluation, and the builtin attack catalog.

pub mod ast;
mod builtin;
mod engine;
mod eval;
mod parser;
mod windowed;

pub use ast::{
    Cmp, CountExpr, Duration, DurationUnit, Expr, Field, FieldType, RuleKind, Severity, SignatureRule,
    Value,
};
pub use builtin::{ack_scan_rule, builtin_catalog, param_usage_histogram, ACK_SCAN_RULE, BUILTIN_RULES};
pub use engine::{Alert, RuleEngine};
pub use eval::{eval_expr, eval_rule};
pub use parser::parse_rules;
pub use windowed::{
    eval_windowed, OrderingError, StreamClock, WindowedCounter, WindowedRule, ORDER_TOLERANCE_MICROS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleErrorKind {
    Syntax,
    UnknownField,
    TypeMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct RuleError {
    pub kind: RuleErrorKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

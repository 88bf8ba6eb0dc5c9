//! Scalar expression language for Lagrangians and metric entries.
//!
//! ```text
//! expr  := term {("+"|"-") term}
//! term  := unary {("*"|"/") unary}
//! unary := ["-"] power
//! power := atom ["^" unary]
//! atom  := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")"
//! ```
//!
//! Variables are `t1..t9`, `x1..x9` and `v{i}_{α}` (for example `v2_1`
//! for `x^2_1`). Functions: `sin cos tan exp log sqrt sinh cosh abs`.

mod ast;
mod format;
mod lexer;
mod parser;

pub use ast::{BinOp, Expr, ExprKind, Func};
pub use format::format;
pub use parser::{parse, ParseDiagnostic};

//! A small query language over probability spaces.
//!
//! Grammar (version [`GRAMMAR_VERSION`]):
//!
//! ```text
//! query   := bracket | expect
//! bracket := "P(" event "|" tail ")"
//! tail    := event | opexpr "|" event
//! expect  := "E[" opexpr ["|" event] "]"
//! event   := term { "&" term }
//! term    := IDENT | set | "Omega" ["@" NUMBER]
//! set     := "{" label { "," label } "}"
//! label   := IDENT | NUMBER
//! opexpr  := IDENT [ "(" IDENT ")" ]
//! ```
//!
//! `Omega` is the whole space; `Omega@t` is the space advanced to time
//! `t` by the model's dynamics and is only legal as the closing event
//! of a bracket. `P(Omega|X|B)` is the sandwich form of a conditional
//! expectation, `E[X|B]` the bracket form; they evaluate identically.

mod ast;
mod eval;
mod parser;
mod token;

pub use ast::{AstNode, EventExpr, OpExpr};
pub use eval::{EvalContext, EvalError, Func};
pub use parser::{parse_query, LangError, ParseError};
pub use token::{tokenize, LexError, Token, TokenKind};

/// Bumped whenever the grammar above changes shape.
pub const GRAMMAR_VERSION: &str = "pbn-1";

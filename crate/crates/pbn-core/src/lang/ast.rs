//! Query syntax trees and their canonical rendering. `Display` output
//! parses back to an equal tree, which the round-trip tests lean on.

use std::fmt;

/// An event position inside a query.
#[derive(Debug, Clone, PartialEq)]
pub enum EventExpr {
    /// Named event from the evaluation context.
    Name(String),
    /// Explicit set of outcome labels.
    Set(Vec<String>),
    /// The whole space, optionally advanced to a time.
    Omega { time: Option<f64> },
    Intersect(Box<EventExpr>, Box<EventExpr>),
}

/// An observable position inside a query.
#[derive(Debug, Clone, PartialEq)]
pub enum OpExpr {
    Observable(String),
    Apply { func: String, observable: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum AstNode {
    /// `P(A|B)`
    Bracket { bra: EventExpr, ket: EventExpr },
    /// `P(Omega|X|B)`
    Sandwich { bra: EventExpr, op: OpExpr, ket: EventExpr },
    /// `E[X]` or `E[X|H]`
    Expect { op: OpExpr, given: Option<EventExpr> },
}

impl fmt::Display for EventExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventExpr::Name(name) => f.write_str(name),
            EventExpr::Set(labels) => {
                f.write_str("{")?;
                for (i, label) in labels.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(label)?;
                }
                f.write_str("}")
            }
            EventExpr::Omega { time: None } => f.write_str("Omega"),
            EventExpr::Omega { time: Some(t) } => write!(f, "Omega@{t}"),
            EventExpr::Intersect(a, b) => write!(f, "{a}&{b}"),
        }
    }
}

impl fmt::Display for OpExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpExpr::Observable(name) => f.write_str(name),
            OpExpr::Apply { func, observable } => write!(f, "{func}({observable})"),
        }
    }
}

impl fmt::Display for AstNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AstNode::Bracket { bra, ket } => write!(f, "P({bra}|{ket})"),
            AstNode::Sandwich { bra, op, ket } => write!(f, "P({bra}|{op}|{ket})"),
            AstNode::Expect { op, given: None } => write!(f, "E[{op}]"),
            AstNode::Expect { op, given: Some(h) } => write!(f, "E[{op}|{h}]"),
        }
    }
}

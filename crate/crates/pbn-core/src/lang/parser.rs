//! Recursive-descent parser for query strings.
//!
//! Two tokens of lookahead settle the one ambiguity in the grammar:
//! after `P(event|` an identifier followed by `|` or `(` starts an
//! observable, anything else continues as an event.

use std::fmt;

use super::ast::{AstNode, EventExpr, OpExpr};
use super::token::{tokenize, LexError, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset of the offending token (input length at end of input).
    pub position: usize,
    pub expected: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "expected {} at byte {}", self.expected, self.position)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LangError {
    Lex(LexError),
    Parse(ParseError),
}

impl LangError {
    pub fn position(&self) -> usize {
        match self {
            LangError::Lex(e) => e.position,
            LangError::Parse(e) => e.position,
        }
    }
}

impl fmt::Display for LangError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LangError::Lex(e) => e.fmt(f),
            LangError::Parse(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for LangError {}

impl From<LexError> for LangError {
    fn from(e: LexError) -> Self {
        LangError::Lex(e)
    }
}

impl From<ParseError> for LangError {
    fn from(e: ParseError) -> Self {
        LangError::Parse(e)
    }
}

/// Whether a term may carry a time tag. Only the final event of a
/// bracket may, and only as its sole term.
#[derive(Clone, Copy, PartialEq, Eq)]
enum TagPolicy {
    AllowSolo,
    Forbid,
}

/// Parses one complete query; trailing input is an error.
pub fn parse_query(input: &str) -> Result<AstNode, LangError> {
    let tokens = tokenize(input)?;
    let mut parser = Parser { input, tokens, pos: 0 };
    let node = parser.query()?;
    if parser.pos < parser.tokens.len() {
        return Err(parser.error("end of input").into());
    }
    Ok(node)
}

struct Parser<'a> {
    input: &'a str,
    tokens: Vec<Token>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self) -> Option<TokenKind> {
        self.peek().map(|t| t.kind)
    }

    fn peek_kind_at(&self, offset: usize) -> Option<TokenKind> {
        self.tokens.get(self.pos + offset).map(|t| t.kind)
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos];
        self.pos += 1;
        t
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        ParseError {
            position: self.peek().map_or(self.input.len(), |t| t.start),
            expected: expected.into(),
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<Token, ParseError> {
        if self.peek_kind() == Some(kind) {
            Ok(self.advance())
        } else {
            Err(self.error(kind.describe()))
        }
    }

    fn expect_ident(&mut self, expected: &str) -> Result<String, ParseError> {
        if self.peek_kind() == Some(TokenKind::Ident) {
            let t = self.advance();
            Ok(t.text(self.input).to_string())
        } else {
            Err(self.error(expected))
        }
    }

    fn query(&mut self) -> Result<AstNode, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::POpen) => self.bracket(),
            Some(TokenKind::EOpen) => self.expectation(),
            _ => Err(self.error("`P(` or `E[`")),
        }
    }

    fn bracket(&mut self) -> Result<AstNode, ParseError> {
        self.expect(TokenKind::POpen)?;
        let bra_start = self.peek().map_or(self.input.len(), |t| t.start);
        let bra = self.event(TagPolicy::Forbid)?;
        self.expect(TokenKind::Pipe)?;
        let sandwich = self.peek_kind() == Some(TokenKind::Ident)
            && matches!(
                self.peek_kind_at(1),
                Some(TokenKind::Pipe) | Some(TokenKind::LParen)
            );
        if sandwich {
            if bra != (EventExpr::Omega { time: None }) {
                return Err(ParseError {
                    position: bra_start,
                    expected: "`Omega` on the left of a sandwich".into(),
                });
            }
            let op = self.opexpr()?;
            self.expect(TokenKind::Pipe)?;
            let ket = self.event(TagPolicy::AllowSolo)?;
            self.expect(TokenKind::RParen)?;
            Ok(AstNode::Sandwich { bra, op, ket })
        } else {
            let ket = self.event(TagPolicy::AllowSolo)?;
            self.expect(TokenKind::RParen)?;
            Ok(AstNode::Bracket { bra, ket })
        }
    }

    fn expectation(&mut self) -> Result<AstNode, ParseError> {
        self.expect(TokenKind::EOpen)?;
        let op = self.opexpr()?;
        let given = if self.peek_kind() == Some(TokenKind::Pipe) {
            self.advance();
            Some(self.event(TagPolicy::Forbid)?)
        } else {
            None
        };
        self.expect(TokenKind::RBrack)?;
        Ok(AstNode::Expect { op, given })
    }

    fn opexpr(&mut self) -> Result<OpExpr, ParseError> {
        let name = self.expect_ident("an observable name")?;
        if self.peek_kind() == Some(TokenKind::LParen) {
            self.advance();
            let observable = self.expect_ident("an observable name")?;
            self.expect(TokenKind::RParen)?;
            Ok(OpExpr::Apply { func: name, observable })
        } else {
            Ok(OpExpr::Observable(name))
        }
    }

    fn event(&mut self, tag: TagPolicy) -> Result<EventExpr, ParseError> {
        let mut expr = self.term(tag)?;
        while self.peek_kind() == Some(TokenKind::Amp) {
            if matches!(expr, EventExpr::Omega { time: Some(_) }) {
                return Err(self.error("no `&` after a time-tagged Omega"));
            }
            self.advance();
            let rhs = self.term(TagPolicy::Forbid)?;
            expr = EventExpr::Intersect(Box::new(expr), Box::new(rhs));
        }
        Ok(expr)
    }

    fn term(&mut self, tag: TagPolicy) -> Result<EventExpr, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::Ident) => {
                let t = self.advance();
                Ok(EventExpr::Name(t.text(self.input).to_string()))
            }
            Some(TokenKind::LBrace) => self.set(),
            Some(TokenKind::Omega) => {
                self.advance();
                if self.peek_kind() == Some(TokenKind::At) {
                    if tag == TagPolicy::Forbid {
                        return Err(self.error(
                            "no time tag here (only the final Omega of a bracket takes one)",
                        ));
                    }
                    self.advance();
                    let num = self.expect(TokenKind::Number)?;
                    let time = num
                        .text(self.input)
                        .parse::<f64>()
                        .expect("number lexeme parses as f64");
                    Ok(EventExpr::Omega { time: Some(time) })
                } else {
                    Ok(EventExpr::Omega { time: None })
                }
            }
            _ => Err(self.error("an event (identifier, `{...}`, or `Omega`)")),
        }
    }

    fn set(&mut self) -> Result<EventExpr, ParseError> {
        self.expect(TokenKind::LBrace)?;
        let mut labels = vec![self.set_member()?];
        while self.peek_kind() == Some(TokenKind::Comma) {
            self.advance();
            labels.push(self.set_member()?);
        }
        self.expect(TokenKind::RBrace)?;
        Ok(EventExpr::Set(labels))
    }

    fn set_member(&mut self) -> Result<String, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::Ident) | Some(TokenKind::Number) => {
                let t = self.advance();
                Ok(t.text(self.input).to_string())
            }
            _ => Err(self.error("an outcome label")),
        }
    }
}

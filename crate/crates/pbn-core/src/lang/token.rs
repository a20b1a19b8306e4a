//! Lexer for the query grammar. Tokens carry byte spans into the
//! input; the opening pairs `P(` and `E[` are single tokens so an
//! identifier that merely starts with P or E never collides.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    POpen,
    EOpen,
    Pipe,
    Amp,
    At,
    LBrace,
    RBrace,
    LParen,
    RParen,
    RBrack,
    Comma,
    Ident,
    Number,
    Omega,
}

impl TokenKind {
    pub fn describe(&self) -> &'static str {
        match self {
            TokenKind::POpen => "`P(`",
            TokenKind::EOpen => "`E[`",
            TokenKind::Pipe => "`|`",
            TokenKind::Amp => "`&`",
            TokenKind::At => "`@`",
            TokenKind::LBrace => "`{`",
            TokenKind::RBrace => "`}`",
            TokenKind::LParen => "`(`",
            TokenKind::RParen => "`)`",
            TokenKind::RBrack => "`]`",
            TokenKind::Comma => "`,`",
            TokenKind::Ident => "identifier",
            TokenKind::Number => "number",
            TokenKind::Omega => "`Omega`",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn text<'a>(&self, input: &'a str) -> &'a str {
        &input[self.start..self.end]
    }
}

/// An unrecognized byte. `position` is a byte offset into the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LexError {
    pub position: usize,
}

impl fmt::Display for LexError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unrecognized character at byte {}", self.position)
    }
}

impl std::error::Error for LexError {}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn tokenize(input: &str) -> Result<Vec<Token>, LexError> {
    let bytes = input.as_bytes();
    let mut tokens = Vec::new();
    let mut chars = input.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        let single = |kind: TokenKind| Token {
            kind,
            start,
            end: start + c.len_utf8(),
        };
        match c {
            'P' if bytes.get(start + 1) == Some(&b'(') => {
                chars.next();
                tokens.push(Token {
                    kind: TokenKind::POpen,
                    start,
                    end: start + 2,
                });
            }
            'E' if bytes.get(start + 1) == Some(&b'[') => {
                chars.next();
                tokens.push(Token {
                    kind: TokenKind::EOpen,
                    start,
                    end: start + 2,
                });
            }
            '|' => tokens.push(single(TokenKind::Pipe)),
            '&' => tokens.push(single(TokenKind::Amp)),
            '@' => tokens.push(single(TokenKind::At)),
            '{' => tokens.push(single(TokenKind::LBrace)),
            '}' => tokens.push(single(TokenKind::RBrace)),
            '(' => tokens.push(single(TokenKind::LParen)),
            ')' => tokens.push(single(TokenKind::RParen)),
            ']' => tokens.push(single(TokenKind::RBrack)),
            ',' => tokens.push(single(TokenKind::Comma)),
            _ if c.is_ascii_digit() => {
                let mut end = start + 1;
                while let Some(&(i, d)) = chars.peek() {
                    if d.is_ascii_digit() {
                        chars.next();
                        end = i + 1;
                    } else {
                        break;
                    }
                }
                // a fractional part needs a digit after the dot
                if let Some(&(dot, '.')) = chars.peek() {
                    if input[dot + 1..].starts_with(|d: char| d.is_ascii_digit()) {
                        chars.next();
                        end = dot + 1;
                        while let Some(&(i, d)) = chars.peek() {
                            if d.is_ascii_digit() {
                                chars.next();
                                end = i + 1;
                            } else {
                                break;
                            }
                        }
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Number,
                    start,
                    end,
                });
            }
            _ if is_ident_start(c) => {
                let mut end = start + 1;
                while let Some(&(i, d)) = chars.peek() {
                    if is_ident_continue(d) {
                        chars.next();
                        end = i + 1;
                    } else {
                        break;
                    }
                }
                let kind = if &input[start..end] == "Omega" {
                    TokenKind::Omega
                } else {
                    TokenKind::Ident
                };
                tokens.push(Token { kind, start, end });
            }
            _ => return Err(LexError { position: start }),
        }
    }
    Ok(tokens)
}

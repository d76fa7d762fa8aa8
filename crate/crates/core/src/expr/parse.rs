use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{Expr, Op, Terminal};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unexpected `{token}` at offset {offset}")]
    UnexpectedToken { token: String, offset: usize },
    #[error("unknown symbol `{symbol}` at offset {offset}")]
    UnknownSymbol { symbol: String, offset: usize },
    #[error("`{op}` takes {expected} argument(s), found {found}")]
    Arity { op: Op, expected: usize, found: usize },
    #[error("trailing input at offset {offset}")]
    Trailing { offset: usize },
}

impl ParseError {
    /// The offending symbol for [`ParseError::UnknownSymbol`].
    pub fn unknown_symbol(&self) -> Option<&str> {
        match self {
            ParseError::UnknownSymbol { symbol, .. } => Some(symbol),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn tokenize(src: &str) -> Vec<(usize, Tok<'_>)> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if b.is_ascii_whitespace() {
            i += 1;
        } else if b == b'(' {
            out.push((i, Tok::Open));
            i += 1;
        } else if b == b')' {
            out.push((i, Tok::Close));
            i += 1;
        } else {
            let start = i;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'(' && bytes[i] != b')' {
                i += 1;
            }
            out.push((start, Tok::Atom(&src[start..i])));
        }
    }
    out
}

/// Parses the prefix s-expression grammar
/// `expr := "(" op expr+ ")" | "x"<index> | <decimal> | "pi"`.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(src);
    let mut pos = 0;
    let e = parse_expr(&toks, &mut pos)?;
    if let Some(&(offset, _)) = toks.get(pos) {
        return Err(ParseError::Trailing { offset });
    }
    Ok(e)
}

fn parse_atom(atom: &str, offset: usize) -> Result<Terminal, ParseError> {
    if atom == "pi" {
        return Ok(Terminal::Const(PI));
    }
    if let Some(idx) = atom.strip_prefix('x') {
        if !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(i) = idx.parse() {
                return Ok(Terminal::Var(i));
            }
        }
    }
    let first = atom.as_bytes()[0];
    if first.is_ascii_digit() || first == b'-' || first == b'+' || first == b'.' {
        if let Ok(v) = atom.parse::<f64>() {
            if v.is_finite() {
                return Ok(Terminal::Const(v));
            }
        }
    }
    Err(ParseError::UnknownSymbol { symbol: atom.to_string(), offset })
}

fn parse_expr(toks: &[(usize, Tok<'_>)], pos: &mut usize) -> Result<Expr, ParseError> {
    let &(offset, tok) = toks.get(*pos).ok_or(ParseError::UnexpectedEnd)?;
    *pos += 1;
    match tok {
        Tok::Atom(a) => parse_atom(a, offset).map(Expr::Leaf),
        Tok::Close => Err(ParseError::UnexpectedToken { token: ")".into(), offset }),
        Tok::Open => {
            let &(op_offset, op_tok) = toks.get(*pos).ok_or(ParseError::UnexpectedEnd)?;
            *pos += 1;
            let op = match op_tok {
                Tok::Atom(sym) => Op::from_symbol(sym)
                    .ok_or_else(|| ParseError::UnknownSymbol { symbol: sym.to_string(), offset: op_offset })?,
                Tok::Open => return Err(ParseError::UnexpectedToken { token: "(".into(), offset: op_offset }),
                Tok::Close => return Err(ParseError::UnexpectedToken { token: ")".into(), offset: op_offset }),
            };
            let mut children = Vec::new();
            loop {
                match toks.get(*pos) {
                    None => return Err(ParseError::UnexpectedEnd),
                    Some(&(_, Tok::Close)) => {
                        *pos += 1;
                        break;
                    }
                    Some(_) => children.push(parse_expr(toks, pos)?),
                }
            }
            if children.len() != op.arity() {
                return Err(ParseError::Arity { op, expected: op.arity(), found: children.len() });
            }
            Ok(Expr::Apply(op, children))
        }
    }
}

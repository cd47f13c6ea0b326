// SPDX-License-Identifier: Apache-2.0

//! Tokenizer and S-expression reader shared by the design format.

use super::{ParseError, Pos};

const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Open,
    Close,
    Atom(String),
    Str(String),
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Open => "(".into(),
            Tok::Close => ")".into(),
            Tok::Atom(a) => a.clone(),
            Tok::Str(s) => format!("{s:?}"),
        }
    }
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut pos = Pos { line: 1, col: 1 };
    let advance = |c: char, pos: &mut Pos| {
        if c == '\n' {
            pos.line += 1;
            pos.col = 1;
        } else {
            pos.col += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let start = pos;
        match c {
            c if c.is_whitespace() => {
                chars.next();
                advance(c, &mut pos);
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                    advance(c, &mut pos);
                }
            }
            '(' | ')' => {
                chars.next();
                advance(c, &mut pos);
                out.push((if c == '(' { Tok::Open } else { Tok::Close }, start));
            }
            '"' => {
                chars.next();
                advance(c, &mut pos);
                let mut s = String::new();
                loop {
                    let Some(c) = chars.next() else {
                        return Err(ParseError::syntax(start, "\"", "unterminated string"));
                    };
                    advance(c, &mut pos);
                    match c {
                        '"' => break,
                        '\\' => {
                            let Some(e) = chars.next() else {
                                return Err(ParseError::syntax(start, "\"", "unterminated string"));
                            };
                            advance(e, &mut pos);
                            s.push(match e {
                                'n' => '\n',
                                't' => '\t',
                                other => other,
                            });
                        }
                        other => s.push(other),
                    }
                }
                out.push((Tok::Str(s), start));
            }
            _ => {
                let mut atom = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | ';' | '"') {
                        break;
                    }
                    atom.push(c);
                    chars.next();
                    advance(c, &mut pos);
                }
                out.push((Tok::Atom(atom), start));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Sexp {
    Atom(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub(crate) fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub(crate) fn describe(&self) -> String {
        match self {
            Sexp::Atom(a, _) => a.clone(),
            Sexp::List(..) => "(".into(),
        }
    }
}

/// Reads one S-expression starting at `toks[*i]`, which must be `(` or an
/// atom.
pub(crate) fn read(toks: &[(Tok, Pos)], i: &mut usize) -> Result<Sexp, ParseError> {
    read_at(toks, i, 0)
}

fn read_at(toks: &[(Tok, Pos)], i: &mut usize, depth: usize) -> Result<Sexp, ParseError> {
    let Some((tok, pos)) = toks.get(*i) else {
        let end = toks.last().map(|t| t.1).unwrap_or(Pos { line: 1, col: 1 });
        return Err(ParseError::syntax(end, "<eof>", "expected an expression"));
    };
    *i += 1;
    match tok {
        Tok::Atom(a) => Ok(Sexp::Atom(a.clone(), *pos)),
        Tok::Open => {
            if depth >= MAX_DEPTH {
                return Err(ParseError::syntax(*pos, "(", "expression nested too deeply"));
            }
            let mut items = Vec::new();
            loop {
                match toks.get(*i) {
                    Some((Tok::Close, _)) => {
                        *i += 1;
                        return Ok(Sexp::List(items, *pos));
                    }
                    Some(_) => items.push(read_at(toks, i, depth + 1)?),
                    None => return Err(ParseError::syntax(*pos, "(", "unbalanced parenthesis")),
                }
            }
        }
        other => Err(ParseError::syntax(*pos, &other.describe(), "expected an expression")),
    }
}

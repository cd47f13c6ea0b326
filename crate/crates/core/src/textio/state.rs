// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::{ParseError, Pos};
use crate::interp::CcdfgState;
use crate::ir::{VarName, Width};

#[derive(Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Equals,
}

fn tokenize(text: &str) -> Vec<(Tok, Pos)> {
    let mut out = Vec::new();
    let mut pos = Pos { line: 1, col: 1 };
    let mut chars = text.chars().peekable();
    let step = |c: char, pos: &mut Pos| {
        if c == '\n' {
            pos.line += 1;
            pos.col = 1;
        } else {
            pos.col += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let start = pos;
        if c.is_whitespace() || c == ';' {
            chars.next();
            step(c, &mut pos);
        } else if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
                step(c, &mut pos);
            }
        } else if c == '=' {
            chars.next();
            step(c, &mut pos);
            out.push((Tok::Equals, start));
        } else {
            let mut word = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() || matches!(c, ';' | '=' | '#') {
                    break;
                }
                word.push(c);
                chars.next();
                step(c, &mut pos);
            }
            out.push((Tok::Word(word), start));
        }
    }
    out
}

fn number(word: &str, pos: Pos) -> Result<u64, ParseError> {
    let parsed = match word.strip_prefix("0x").or_else(|| word.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => word.parse::<u64>(),
    };
    parsed.map_err(|e| {
        use std::num::IntErrorKind::*;
        match e.kind() {
            PosOverflow => ParseError::Range {
                pos,
                message: format!("`{word}` exceeds 64 bits"),
            },
            _ => ParseError::syntax(pos, word, "expected a number"),
        }
    })
}

fn in_width(raw: u64, width: Width, pos: Pos) -> Result<u64, ParseError> {
    width.value(raw).map(|v| v.bits()).map_err(|e| ParseError::Range {
        pos,
        message: e.to_string(),
    })
}

fn name(word: &str, pos: Pos) -> Result<VarName, ParseError> {
    VarName::new(word).map_err(|_| ParseError::syntax(pos, word, "invalid name"))
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Vars,
    Mem,
    Ptrs,
}

pub fn parse_state(text: &str) -> Result<CcdfgState, ParseError> {
    parse_state_with_width(text, Width::default())
}

/// Parses a `.cstate` file: `vars:`, `mem:` and `ptrs:` sections of
/// `key=value` entries separated by whitespace or `;`. `#` starts a comment.
pub fn parse_state_with_width(text: &str, width: Width) -> Result<CcdfgState, ParseError> {
    let toks = tokenize(text);
    let mut state = CcdfgState::new(width);
    let mut section = None;
    let mut seen_sections = BTreeSet::new();
    let mut seen_vars = BTreeSet::new();
    let mut i = 0;
    while i < toks.len() {
        let (tok, pos) = &toks[i];
        let Tok::Word(word) = tok else {
            return Err(ParseError::syntax(*pos, "=", "expected a section or key"));
        };
        if let Some(header) = word.strip_suffix(':') {
            let s = match header {
                "vars" => Section::Vars,
                "mem" => Section::Mem,
                "ptrs" => Section::Ptrs,
                _ => return Err(ParseError::syntax(*pos, word, "unknown section")),
            };
            if !seen_sections.insert(s) {
                return Err(ParseError::semantic(*pos, format!("section `{word}` given twice")));
            }
            section = Some(s);
            i += 1;
            continue;
        }
        let Some(section) = section else {
            return Err(ParseError::syntax(*pos, word, "entry before any section"));
        };
        let (value_word, vpos) = match (toks.get(i + 1), toks.get(i + 2)) {
            (Some((Tok::Equals, _)), Some((Tok::Word(v), vpos))) => (v, *vpos),
            (Some((t, p)), _) if *t != Tok::Equals => {
                let token = match t {
                    Tok::Word(w) => w.as_str(),
                    Tok::Equals => "=",
                };
                return Err(ParseError::syntax(*p, token, "expected `=`"));
            }
            _ => return Err(ParseError::syntax(*pos, word, "expected key=value")),
        };
        let value = in_width(number(value_word, vpos)?, width, vpos)?;
        match section {
            Section::Vars => {
                let var = name(word, *pos)?;
                if !seen_vars.insert(var.clone()) {
                    return Err(ParseError::semantic(*pos, format!("duplicate variable `{var}`")));
                }
                state.set(var, width.wrap(value));
            }
            Section::Mem => {
                let addr = in_width(number(word, *pos)?, width, *pos)?;
                if state.memory.insert(addr, width.wrap(value)).is_some() {
                    return Err(ParseError::semantic(*pos, format!("duplicate address {addr}")));
                }
            }
            Section::Ptrs => {
                let ptr = name(word, *pos)?;
                if state.pointers.insert(ptr.clone(), value).is_some() {
                    return Err(ParseError::semantic(*pos, format!("duplicate pointer `{ptr}`")));
                }
            }
        }
        i += 3;
    }
    Ok(state)
}

pub fn serialize_state(s: &CcdfgState) -> String {
    let mut out = String::from("vars:");
    for (k, v) in s.bindings() {
        let _ = write!(out, " {k}={v}");
    }
    out.push_str("\nmem:");
    for (k, v) in &s.memory {
        let _ = write!(out, " {k}={v}");
    }
    out.push_str("\nptrs:");
    for (k, v) in &s.pointers {
        let _ = write!(out, " {k}={v}");
    }
    out.push('\n');
    out
}

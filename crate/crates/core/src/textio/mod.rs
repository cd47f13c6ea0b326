// SPDX-License-Identifier: Apache-2.0

//! Textual formats.
//!
//! Designs (`.ccdfg`) use a region syntax wrapped around S-expression
//! statements:
//!
//! ```text
//! ccdfg-format 1
//! design sequential
//! entry Entry
//! pre:
//! loop:
//!   step X
//!     micro (i (phi ((0 Entry) (i' Z))))
//!   step Y
//!     micro (i' (add i 1))
//!   step Z
//!     micro (store (gep q i) i)
//! post:
//! ```
//!
//! Pipelined designs use `design pipelined` with `prologue:`, `fullstage:`
//! and `epilogue:` regions. State files (`.cstate`) have `vars:`, `mem:` and
//! `ptrs:` sections of `key=value` entries.

mod design;
mod sexpr;
mod state;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ir::{BlockLabel, Ccdfg, PipelinedCcdfg};

pub use design::{parse_ccdfg, parse_ccdfg_bytes, serialize_ccdfg};
pub use state::{parse_state, parse_state_with_width, serialize_state};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("SyntaxError at {pos} near `{token}`: {message}")]
    Syntax { pos: Pos, token: String, message: String },
    #[error("SemanticError at {pos}: {message}")]
    Semantic { pos: Pos, message: String },
    #[error("RangeError at {pos}: {message}")]
    Range { pos: Pos, message: String },
}

impl ParseError {
    pub(crate) fn syntax(pos: Pos, token: &str, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            pos,
            token: token.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn semantic(pos: Pos, message: impl Into<String>) -> Self {
        ParseError::Semantic {
            pos,
            message: message.into(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ParseError::Syntax { .. } => "SyntaxError",
            ParseError::Semantic { .. } => "SemanticError",
            ParseError::Range { .. } => "RangeError",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Design {
    Sequential(Ccdfg),
    Pipelined(PipelinedCcdfg),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CcdfgDocument {
    pub version: String,
    pub design: Design,
    pub meta: BTreeMap<String, String>,
}

impl CcdfgDocument {
    pub fn sequential(c: Ccdfg) -> Self {
        CcdfgDocument {
            version: FORMAT_VERSION.into(),
            design: Design::Sequential(c),
            meta: BTreeMap::new(),
        }
    }

    pub fn pipelined(p: PipelinedCcdfg) -> Self {
        CcdfgDocument {
            version: FORMAT_VERSION.into(),
            design: Design::Pipelined(p),
            meta: BTreeMap::new(),
        }
    }

    /// The design as the three regions of a sequential run. A pipelined
    /// design repeats its full stage.
    pub fn regions(&self) -> Ccdfg {
        match &self.design {
            Design::Sequential(c) => c.clone(),
            Design::Pipelined(p) => Ccdfg {
                entry: BlockLabel::new("Entry").expect("identifier"),
                pre: p.prologue.clone(),
                body: p.fullstage.clone(),
                post: p.epilogue.clone(),
            },
        }
    }

    /// Label a run starts after when the caller names none.
    pub fn start_label(&self) -> Option<BlockLabel> {
        match &self.design {
            Design::Sequential(c) => Some(c.entry.clone()),
            Design::Pipelined(_) => None,
        }
    }

    fn meta_usize(&self, key: &str) -> Result<Option<usize>, RunCountError> {
        self.meta
            .get(key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| RunCountError::BadMeta {
                    key: key.into(),
                    value: v.clone(),
                })
            })
            .transpose()
    }

    /// Body traversals for `k` source iterations. A pipelined document
    /// carrying `interval` and `m` meta covers ceil(m / interval) of them
    /// in its prologue and epilogue.
    pub fn body_iterations(&self, k: u64) -> Result<u64, RunCountError> {
        let Design::Pipelined(_) = self.design else {
            return Ok(k);
        };
        match (self.meta_usize("interval")?, self.meta_usize("m")?) {
            (Some(interval), Some(m)) if interval > 0 => {
                let covered = m.div_ceil(interval) as u64;
                if k <= covered {
                    return Err(RunCountError::TooFew { min: covered + 1 });
                }
                Ok(k - covered)
            }
            _ => Ok(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunCountError {
    #[error("meta `{key}` = `{value}` is not a number")]
    BadMeta { key: String, value: String },
    #[error("this pipelined design runs at least {min} iterations")]
    TooFew { min: u64 },
}

// SPDX-License-Identifier: Apache-2.0

//! The clocked control data flow graph (CCDFG) data model.
//!
//! A sequential design is three regions of scheduling steps: the steps
//! before the loop, the loop body, and the steps after the loop. Every
//! scheduling step is one clock cycle and holds an ordered list of
//! microsteps, each of which groups statements that may run concurrently.

mod rwsets;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use rwsets::{read_set, statement_rw, Clash, ReadWriteSets};
pub use validate::{validate_pipelinable, validate_pipelined, Diagnostic, Rule};

/// Suffix reserved for shadow variables created by the pipeliner.
pub const SHADOW_SUFFIX: &str = "_reg";

/// Default bit width of every value.
pub const DEFAULT_WIDTH: u32 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrError {
    #[error("invalid identifier `{0}`")]
    InvalidName(String),
    #[error("bit width {0} out of range 1..=64")]
    InvalidWidth(u32),
    #[error("value {value} does not fit in {width} bits")]
    ValueOutOfRange { value: u64, width: u32 },
    #[error("microstep must contain at least one statement")]
    EmptyMicrostep,
    #[error("variable `{0}` written twice in one microstep")]
    DoubleWrite(VarName),
    #[error("phi for `{target}` names predecessor `{pred}` twice")]
    DuplicatePhiPred { target: VarName, pred: BlockLabel },
    #[error("shadow name `{0}` is already in use")]
    NameCollision(VarName),
}

/// Bit width of the value domain. All arithmetic wraps modulo `2^bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Width(u32);

impl Width {
    pub fn new(bits: u32) -> Result<Self, IrError> {
        if (1..=64).contains(&bits) {
            Ok(Width(bits))
        } else {
            Err(IrError::InvalidWidth(bits))
        }
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn mask(self) -> u64 {
        if self.0 == 64 {
            u64::MAX
        } else {
            (1u64 << self.0) - 1
        }
    }

    pub fn wrap(self, raw: u64) -> Value {
        Value(raw & self.mask())
    }

    pub fn value(self, raw: u64) -> Result<Value, IrError> {
        if raw & !self.mask() != 0 {
            return Err(IrError::ValueOutOfRange {
                value: raw,
                width: self.0,
            });
        }
        Ok(Value(raw))
    }
}

impl Default for Width {
    fn default() -> Self {
        Width(DEFAULT_WIDTH)
    }
}

/// A bit vector of the configured width. Only [`Width`] can build one, so a
/// `Value` is always in range for the width that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Value(u64);

impl Value {
    pub const ZERO: Value = Value(0);

    pub fn bits(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '\''))
}

macro_rules! identifier_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(name: impl Into<String>) -> Result<Self, IrError> {
                let name = name.into();
                if is_identifier(&name) {
                    Ok($name(name))
                } else {
                    Err(IrError::InvalidName(name))
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

identifier_newtype!(
    /// Variable name: `[A-Za-z_][A-Za-z0-9_.']*`.
    VarName
);
identifier_newtype!(
    /// Name of a scheduling step.
    BlockLabel
);

impl VarName {
    pub fn is_shadow(&self) -> bool {
        self.0.ends_with(SHADOW_SUFFIX)
    }
}

/// Returns `base_reg`, or `NameCollision` if that name is already taken.
pub fn fresh_shadow_name(base: &VarName, taken: &BTreeSet<VarName>) -> Result<VarName, IrError> {
    let candidate = VarName(format!("{}{}", base.0, SHADOW_SUFFIX));
    if taken.contains(&candidate) {
        Err(IrError::NameCollision(candidate))
    } else {
        Ok(candidate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Xor,
    And,
    Or,
    Shl,
    Lshr,
    Eq,
    Lt,
}

impl BinOp {
    pub const ALL: [BinOp; 10] = [
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Xor,
        BinOp::And,
        BinOp::Or,
        BinOp::Shl,
        BinOp::Lshr,
        BinOp::Eq,
        BinOp::Lt,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::Xor => "xor",
            BinOp::And => "and",
            BinOp::Or => "or",
            BinOp::Shl => "shl",
            BinOp::Lshr => "lshr",
            BinOp::Eq => "eq",
            BinOp::Lt => "lt",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<BinOp> {
        BinOp::ALL.into_iter().find(|op| op.mnemonic() == s)
    }
}

/// Arithmetic operands are atoms: a variable or a literal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Operand {
    Var(VarName),
    Const(u64),
}

impl Operand {
    fn var(&self) -> Option<&VarName> {
        match self {
            Operand::Var(v) => Some(v),
            Operand::Const(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Expression {
    Const(u64),
    Var(VarName),
    Binary {
        op: BinOp,
        lhs: Operand,
        rhs: Operand,
    },
    Load(Box<Expression>),
    /// Address arithmetic: `pointers[base] + offset`.
    GetElemPtr {
        base: VarName,
        offset: Box<Expression>,
    },
}

impl Expression {
    pub fn binary(op: BinOp, lhs: Operand, rhs: Operand) -> Self {
        Expression::Binary { op, lhs, rhs }
    }

    /// Variables read from the bindings. Pointer-table names (the base of a
    /// `GetElemPtr`) are a separate namespace and are not included.
    pub fn vars(&self, out: &mut BTreeSet<VarName>) {
        match self {
            Expression::Const(_) => {}
            Expression::Var(v) => {
                out.insert(v.clone());
            }
            Expression::Binary { lhs, rhs, .. } => {
                out.extend(lhs.var().cloned());
                out.extend(rhs.var().cloned());
            }
            Expression::Load(addr) => addr.vars(out),
            Expression::GetElemPtr { offset, .. } => offset.vars(out),
        }
    }

    pub fn pointers(&self, out: &mut BTreeSet<VarName>) {
        match self {
            Expression::Const(_) | Expression::Var(_) | Expression::Binary { .. } => {}
            Expression::Load(addr) => addr.pointers(out),
            Expression::GetElemPtr { base, offset } => {
                out.insert(base.clone());
                offset.pointers(out);
            }
        }
    }

    pub fn has_load(&self) -> bool {
        match self {
            Expression::Load(_) => true,
            Expression::GetElemPtr { offset, .. } => offset.has_load(),
            _ => false,
        }
    }

    /// Replaces every read of `from` with a read of `to`.
    pub fn rename_var(&self, from: &VarName, to: &VarName) -> Expression {
        let operand = |o: &Operand| match o {
            Operand::Var(v) if v == from => Operand::Var(to.clone()),
            other => other.clone(),
        };
        match self {
            Expression::Var(v) if v == from => Expression::Var(to.clone()),
            Expression::Const(_) | Expression::Var(_) => self.clone(),
            Expression::Binary { op, lhs, rhs } => Expression::Binary {
                op: *op,
                lhs: operand(lhs),
                rhs: operand(rhs),
            },
            Expression::Load(addr) => Expression::Load(Box::new(addr.rename_var(from, to))),
            Expression::GetElemPtr { base, offset } => Expression::GetElemPtr {
                base: base.clone(),
                offset: Box::new(offset.rename_var(from, to)),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PhiChoice {
    pub value: Expression,
    pub pred: BlockLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Statement {
    Assign {
        target: VarName,
        rhs: Expression,
    },
    Store {
        addr: Expression,
        value: Expression,
    },
    /// `target := phi[(value, pred), (value, pred)]`. Build with
    /// [`Statement::phi`] so that the two predecessors are distinct.
    Phi {
        target: VarName,
        choices: [PhiChoice; 2],
    },
}

impl Statement {
    pub fn assign(target: VarName, rhs: Expression) -> Self {
        Statement::Assign { target, rhs }
    }

    pub fn store(addr: Expression, value: Expression) -> Self {
        Statement::Store { addr, value }
    }

    pub fn phi(target: VarName, first: PhiChoice, second: PhiChoice) -> Result<Self, IrError> {
        if first.pred == second.pred {
            return Err(IrError::DuplicatePhiPred {
                target,
                pred: first.pred,
            });
        }
        Ok(Statement::Phi {
            target,
            choices: [first, second],
        })
    }

    pub fn target(&self) -> Option<&VarName> {
        match self {
            Statement::Assign { target, .. } | Statement::Phi { target, .. } => Some(target),
            Statement::Store { .. } => None,
        }
    }

    pub fn is_phi(&self) -> bool {
        matches!(self, Statement::Phi { .. })
    }

    /// Every binding variable the statement mentions.
    pub fn vars(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        match self {
            Statement::Assign { target, rhs } => {
                out.insert(target.clone());
                rhs.vars(&mut out);
            }
            Statement::Store { addr, value } => {
                addr.vars(&mut out);
                value.vars(&mut out);
            }
            Statement::Phi { target, choices } => {
                out.insert(target.clone());
                for c in choices {
                    c.value.vars(&mut out);
                }
            }
        }
        out
    }

    pub fn pointers(&self) -> BTreeSet<VarName> {
        let mut out = BTreeSet::new();
        match self {
            Statement::Assign { rhs, .. } => rhs.pointers(&mut out),
            Statement::Store { addr, value } => {
                addr.pointers(&mut out);
                value.pointers(&mut out);
            }
            Statement::Phi { choices, .. } => {
                for c in choices {
                    c.value.pointers(&mut out);
                }
            }
        }
        out
    }

    /// Rewrites reads of `from` into reads of `to`; the write target is kept.
    pub fn rename_reads(&self, from: &VarName, to: &VarName) -> Statement {
        match self {
            Statement::Assign { target, rhs } => Statement::Assign {
                target: target.clone(),
                rhs: rhs.rename_var(from, to),
            },
            Statement::Store { addr, value } => Statement::Store {
                addr: addr.rename_var(from, to),
                value: value.rename_var(from, to),
            },
            Statement::Phi { target, choices } => Statement::Phi {
                target: target.clone(),
                choices: choices.clone().map(|c| PhiChoice {
                    value: c.value.rename_var(from, to),
                    pred: c.pred,
                }),
            },
        }
    }
}

/// Statements grouped for concurrent execution. Nonempty, and no variable is
/// written twice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Microstep {
    statements: Vec<Statement>,
}

impl Microstep {
    pub fn new(statements: Vec<Statement>) -> Result<Self, IrError> {
        if statements.is_empty() {
            return Err(IrError::EmptyMicrostep);
        }
        let mut written = BTreeSet::new();
        for st in &statements {
            if let Some(t) = st.target() {
                if !written.insert(t.clone()) {
                    return Err(IrError::DoubleWrite(t.clone()));
                }
            }
        }
        Ok(Microstep { statements })
    }

    pub fn statements(&self) -> &[Statement] {
        &self.statements
    }

    /// Applies `f` to every statement. `f` must not change write targets,
    /// which keeps the no-double-write invariant intact.
    pub(crate) fn map_statements(&self, f: impl FnMut(&Statement) -> Statement) -> Microstep {
        Microstep {
            statements: self.statements.iter().map(f).collect(),
        }
    }
}

/// Explicit control transfer at the end of a step. Regions already imply
/// fall-through and the loop backedge, so terminators only matter to
/// [`validate_pipelinable`]; the interpreter does not follow them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Terminator {
    Jump(BlockLabel),
    Branch {
        cond: Operand,
        taken: BlockLabel,
        not_taken: BlockLabel,
    },
}

/// One clock cycle worth of microsteps.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SchedulingStep {
    pub label: BlockLabel,
    pub microsteps: Vec<Microstep>,
    pub terminator: Option<Terminator>,
}

impl SchedulingStep {
    pub fn new(label: BlockLabel, microsteps: Vec<Microstep>) -> Self {
        SchedulingStep {
            label,
            microsteps,
            terminator: None,
        }
    }

    pub fn statements(&self) -> impl Iterator<Item = &Statement> {
        self.microsteps.iter().flat_map(|m| m.statements.iter())
    }
}

/// A sequential design: `pre` (Entry region), the loop body, `post` (Exit
/// region). `entry` names the block control arrives from before `pre`; it is
/// the φ predecessor for the first loop iteration when `pre` is empty and the
/// default previous-block label for runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ccdfg {
    pub entry: BlockLabel,
    pub pre: Vec<SchedulingStep>,
    pub body: Vec<SchedulingStep>,
    pub post: Vec<SchedulingStep>,
}

impl Ccdfg {
    /// Label a φ in the first loop step sees on first entry.
    pub fn loop_entry_pred(&self) -> &BlockLabel {
        self.pre.last().map(|s| &s.label).unwrap_or(&self.entry)
    }

    /// Label a φ in the first loop step sees on the backedge.
    pub fn backedge_pred(&self) -> Option<&BlockLabel> {
        self.body.last().map(|s| &s.label)
    }

    pub fn steps(&self) -> impl Iterator<Item = &SchedulingStep> {
        self.pre.iter().chain(&self.body).chain(&self.post)
    }

    pub fn vars(&self) -> BTreeSet<VarName> {
        all_vars(self.steps())
    }

    pub fn labels(&self) -> BTreeSet<BlockLabel> {
        let mut out: BTreeSet<_> = self.steps().map(|s| s.label.clone()).collect();
        out.insert(self.entry.clone());
        out
    }
}

/// The pipelined design: prologue, full stage (carries the backedge) and
/// epilogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PipelinedCcdfg {
    pub prologue: Vec<SchedulingStep>,
    pub fullstage: Vec<SchedulingStep>,
    pub epilogue: Vec<SchedulingStep>,
}

impl PipelinedCcdfg {
    pub fn steps(&self) -> impl Iterator<Item = &SchedulingStep> {
        self.prologue.iter().chain(&self.fullstage).chain(&self.epilogue)
    }

    pub fn vars(&self) -> BTreeSet<VarName> {
        all_vars(self.steps())
    }
}

pub(crate) fn all_vars<'a>(steps: impl Iterator<Item = &'a SchedulingStep>) -> BTreeSet<VarName> {
    let mut out = BTreeSet::new();
    for st in steps.flat_map(|s| s.statements()) {
        out.extend(st.vars());
    }
    out
}

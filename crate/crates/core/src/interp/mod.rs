// SPDX-License-Identifier: Apache-2.0

//! Operational semantics of CCDFGs.
//!
//! Statements inside a microstep run in order, microsteps inside a scheduling
//! step run in order, and every scheduling step is one clock cycle. A φ
//! resolves against the label of the previously executed scheduling step.

mod state;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ir::{BinOp, BlockLabel, Expression, Operand, PhiChoice, SchedulingStep, Statement, Value, VarName};

pub use state::CcdfgState;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum ExecError {
    #[error("UnboundVariable: `{0}`")]
    UnboundVariable(VarName),
    #[error("UnmappedAddress: {0}")]
    UnmappedAddress(u64),
    #[error("UnknownPointer: `{0}`")]
    UnknownPointer(VarName),
    #[error("PhiUndefined: phi for `{target}` reached from {}", prev.as_ref().map(|l| l.as_str()).unwrap_or("<none>"))]
    PhiUndefined { target: VarName, prev: Option<BlockLabel> },
    #[error("EmptyRegion: region has no scheduling steps")]
    EmptyRegion,
}

impl ExecError {
    pub fn kind(&self) -> &'static str {
        match self {
            ExecError::UnboundVariable(_) => "UnboundVariable",
            ExecError::UnmappedAddress(_) => "UnmappedAddress",
            ExecError::UnknownPointer(_) => "UnknownPointer",
            ExecError::PhiUndefined { .. } => "PhiUndefined",
            ExecError::EmptyRegion => "EmptyRegion",
        }
    }
}

/// The previously executed scheduling step, `None` before any step ran.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExecContext {
    pub prev_bb: Option<BlockLabel>,
}

impl ExecContext {
    pub fn after(label: &BlockLabel) -> Self {
        ExecContext {
            prev_bb: Some(label.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub cycle: u64,
    pub label: BlockLabel,
    pub state: CcdfgState,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One line per cycle listing the bindings, memory words and pointers
    /// that changed in that cycle.
    pub fn records(&self, initial: &CcdfgState) -> Vec<TraceRecord> {
        let mut prev = initial;
        let mut out = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let mut changed = Vec::new();
            for (name, value) in e.state.bindings() {
                if prev.get(name.as_str()) != Some(*value) {
                    changed.push((name.to_string(), *value));
                }
            }
            for (addr, value) in &e.state.memory {
                if prev.memory.get(addr) != Some(value) {
                    changed.push((format!("mem[{addr}]"), *value));
                }
            }
            out.push(TraceRecord {
                cycle: e.cycle,
                label: e.label.clone(),
                changed,
            });
            prev = &e.state;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub cycle: u64,
    pub label: BlockLabel,
    pub changed: Vec<(String, Value)>,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cycle={} step={}", self.cycle, self.label)?;
        for (name, value) in &self.changed {
            write!(f, " {name}={value}")?;
        }
        Ok(())
    }
}

fn operand(o: &Operand, s: &CcdfgState) -> Result<Value, ExecError> {
    match o {
        Operand::Const(c) => Ok(s.width().wrap(*c)),
        Operand::Var(v) => s.get(v.as_str()).ok_or_else(|| ExecError::UnboundVariable(v.clone())),
    }
}

fn apply(op: BinOp, a: u64, b: u64, bits: u32) -> u64 {
    match op {
        BinOp::Add => a.wrapping_add(b),
        BinOp::Sub => a.wrapping_sub(b),
        BinOp::Mul => a.wrapping_mul(b),
        BinOp::Xor => a ^ b,
        BinOp::And => a & b,
        BinOp::Or => a | b,
        BinOp::Shl if b < u64::from(bits) => a << b,
        BinOp::Lshr if b < u64::from(bits) => a >> b,
        BinOp::Shl | BinOp::Lshr => 0,
        BinOp::Eq => u64::from(a == b),
        BinOp::Lt => u64::from(a < b),
    }
}

pub fn evaluate_expr(e: &Expression, s: &CcdfgState) -> Result<Value, ExecError> {
    let w = s.width();
    match e {
        Expression::Const(c) => Ok(w.wrap(*c)),
        Expression::Var(v) => operand(&Operand::Var(v.clone()), s),
        Expression::Binary { op, lhs, rhs } => {
            let a = operand(lhs, s)?.bits();
            let b = operand(rhs, s)?.bits();
            Ok(w.wrap(apply(*op, a, b, w.bits())))
        }
        Expression::Load(addr) => {
            let a = evaluate_expr(addr, s)?.bits();
            s.memory.get(&a).copied().ok_or(ExecError::UnmappedAddress(a))
        }
        Expression::GetElemPtr { base, offset } => {
            let b = *s
                .pointers
                .get(base)
                .ok_or_else(|| ExecError::UnknownPointer(base.clone()))?;
            let off = evaluate_expr(offset, s)?.bits();
            Ok(w.wrap(b.wrapping_add(off)))
        }
    }
}

/// Picks the choice whose predecessor is `prev`, checking the first choice
/// first.
pub fn choose<'a>(choices: &'a [PhiChoice; 2], prev: Option<&BlockLabel>) -> Option<&'a Expression> {
    let prev = prev?;
    choices.iter().find(|c| c.pred == *prev).map(|c| &c.value)
}

pub fn execute_statement(st: &Statement, s: &mut CcdfgState, ctx: &ExecContext) -> Result<(), ExecError> {
    match st {
        Statement::Assign { target, rhs } => {
            let value = evaluate_expr(rhs, s)?;
            s.set(target.clone(), value);
        }
        Statement::Store { addr, value } => {
            let a = evaluate_expr(addr, s)?.bits();
            let v = evaluate_expr(value, s)?;
            s.memory.insert(a, v);
        }
        Statement::Phi { target, choices } => {
            let expr = choose(choices, ctx.prev_bb.as_ref()).ok_or_else(|| ExecError::PhiUndefined {
                target: target.clone(),
                prev: ctx.prev_bb.clone(),
            })?;
            let value = evaluate_expr(expr, s)?;
            s.set(target.clone(), value);
        }
    }
    Ok(())
}

/// Label of the last step of a region: what a φ at the loop head sees after
/// the backedge.
pub fn prefix(blocks: &[SchedulingStep]) -> Result<&BlockLabel, ExecError> {
    blocks.last().map(|b| &b.label).ok_or(ExecError::EmptyRegion)
}

/// Executes scheduling steps, counting cycles and optionally recording a
/// trace.
#[derive(Debug, Default)]
pub struct Interpreter {
    cycle: u64,
    trace: Option<Trace>,
}

impl Interpreter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_trace() -> Self {
        Interpreter {
            cycle: 0,
            trace: Some(Trace::default()),
        }
    }

    /// Scheduling steps executed so far.
    pub fn cycles(&self) -> u64 {
        self.cycle
    }

    pub fn take_trace(&mut self) -> Option<Trace> {
        self.trace.take()
    }

    pub fn run_block(&mut self, step: &SchedulingStep, s: &mut CcdfgState, ctx: &ExecContext) -> Result<(), ExecError> {
        for st in step.statements() {
            execute_statement(st, s, ctx)?;
        }
        self.cycle += 1;
        if let Some(trace) = &mut self.trace {
            trace.entries.push(TraceEntry {
                cycle: self.cycle,
                label: step.label.clone(),
                state: s.clone(),
            });
        }
        Ok(())
    }

    /// Runs `blocks` in order and returns the label of the last block run,
    /// or `prev` when `blocks` is empty.
    pub fn run_block_set(
        &mut self,
        blocks: &[SchedulingStep],
        s: &mut CcdfgState,
        prev: Option<&BlockLabel>,
    ) -> Result<Option<BlockLabel>, ExecError> {
        let mut ctx = ExecContext { prev_bb: prev.cloned() };
        for b in blocks {
            self.run_block(b, s, &ctx)?;
            ctx.prev_bb = Some(b.label.clone());
        }
        Ok(ctx.prev_bb)
    }

    /// Runs the loop body `iterations` times. The first iteration sees
    /// `prev`; later ones see the last body step.
    pub fn run_blocks_iters(
        &mut self,
        body: &[SchedulingStep],
        s: &mut CcdfgState,
        iterations: u64,
        prev: Option<&BlockLabel>,
    ) -> Result<Option<BlockLabel>, ExecError> {
        let mut prev = prev.cloned();
        for _ in 0..iterations {
            prev = self.run_block_set(body, s, prev.as_ref())?;
        }
        Ok(prev)
    }

    /// Pre region, `iterations` loop iterations, post region.
    pub fn run_ccdfg(
        &mut self,
        pre: &[SchedulingStep],
        body: &[SchedulingStep],
        post: &[SchedulingStep],
        iterations: u64,
        s: &mut CcdfgState,
        prev: Option<&BlockLabel>,
    ) -> Result<(), ExecError> {
        let prev = self.run_block_set(pre, s, prev)?;
        let prev = self.run_blocks_iters(body, s, iterations, prev.as_ref())?;
        self.run_block_set(post, s, prev.as_ref())?;
        Ok(())
    }

    /// Prologue once, then the full stage `k` times; no epilogue.
    pub fn run_ccdfg_k(
        &mut self,
        prologue: &[SchedulingStep],
        fullstage: &[SchedulingStep],
        k: u64,
        s: &mut CcdfgState,
        prev: Option<&BlockLabel>,
    ) -> Result<(), ExecError> {
        let prev = self.run_block_set(prologue, s, prev)?;
        self.run_blocks_iters(fullstage, s, k, prev.as_ref())?;
        Ok(())
    }
}

pub fn run_block(step: &SchedulingStep, s: &CcdfgState, ctx: &ExecContext) -> Result<CcdfgState, ExecError> {
    let mut out = s.clone();
    Interpreter::new().run_block(step, &mut out, ctx)?;
    Ok(out)
}

pub fn run_block_set(
    blocks: &[SchedulingStep],
    s: &CcdfgState,
    prev: Option<&BlockLabel>,
) -> Result<CcdfgState, ExecError> {
    let mut out = s.clone();
    Interpreter::new().run_block_set(blocks, &mut out, prev)?;
    Ok(out)
}

pub fn run_blocks_iters(
    body: &[SchedulingStep],
    s: &CcdfgState,
    iterations: u64,
    prev: Option<&BlockLabel>,
) -> Result<CcdfgState, ExecError> {
    let mut out = s.clone();
    Interpreter::new().run_blocks_iters(body, &mut out, iterations, prev)?;
    Ok(out)
}

pub fn run_ccdfg(
    pre: &[SchedulingStep],
    body: &[SchedulingStep],
    post: &[SchedulingStep],
    iterations: u64,
    init: &CcdfgState,
    prev: Option<&BlockLabel>,
) -> Result<CcdfgState, ExecError> {
    let mut out = init.clone();
    Interpreter::new().run_ccdfg(pre, body, post, iterations, &mut out, prev)?;
    Ok(out)
}

pub fn run_ccdfg_k(
    prologue: &[SchedulingStep],
    fullstage: &[SchedulingStep],
    k: u64,
    init: &CcdfgState,
    prev: Option<&BlockLabel>,
) -> Result<CcdfgState, ExecError> {
    let mut out = init.clone();
    Interpreter::new().run_ccdfg_k(prologue, fullstage, k, &mut out, prev)?;
    Ok(out)
}

#[cfg(test)]
mod tests;

// SPDX-License-Identifier: Apache-2.0

//! Differential checkers relating a pipelined design to its sequential
//! source.
//!
//! Both sides are normalized before comparison: shadow registers are dropped
//! ([`get_real`]) and bindings are sorted by name ([`in_order`]). Equality is
//! then exact over bindings, memory and pointers.

mod sample;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::interp::{CcdfgState, ExecError, Interpreter};
use crate::ir::{read_set, BlockLabel, PipelinedCcdfg, SchedulingStep, Value, VarName};

pub use sample::{live_ins, pointer_names, random_state, sample_states, sweep, StateSpace, Subject, SweepConfig};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error("InvalidParams: {reason}")]
    InvalidParams { reason: String },
    #[error("PreconditionViolation: {reason}")]
    PreconditionViolation { reason: String },
    #[error("{side} side failed: {source}")]
    Exec { side: Side, source: ExecError },
}

impl EquivError {
    pub fn kind(&self) -> &'static str {
        match self {
            EquivError::InvalidParams { .. } => "InvalidParams",
            EquivError::PreconditionViolation { .. } => "PreconditionViolation",
            EquivError::Exec { source, .. } => source.kind(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Pipelined,
    Sequential,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Pipelined => "pipelined",
            Side::Sequential => "sequential",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Correctness,
    Invariant,
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckKind::Correctness => "correctness",
            CheckKind::Invariant => "invariant",
        })
    }
}

/// Knobs for the checkers. Turning off `strip_shadows` exists to show that
/// the comparison really depends on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CheckOptions {
    pub strip_shadows: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { strip_shadows: true }
    }
}

/// Drops shadow-register bindings.
pub fn get_real(s: &CcdfgState) -> CcdfgState {
    let mut out = s.clone();
    out.retain_bindings(|n| !n.is_shadow());
    out
}

/// Sorts bindings by name.
pub fn in_order(s: &CcdfgState) -> CcdfgState {
    let mut out = s.clone();
    out.sort_bindings();
    out
}

/// Normalizes the pipelined side. The sequential side only gets
/// [`in_order`]: it never holds shadow registers.
fn normalize(s: &CcdfgState, opts: &CheckOptions) -> CcdfgState {
    if opts.strip_shadows {
        in_order(&get_real(s))
    } else {
        in_order(s)
    }
}

/// The sequential reading of the work in flight after the prologue: the
/// first `m` steps of one iteration, then the first `m - I` of the next, and
/// so on while the count stays positive.
pub fn get_m_blocks_seq(m: usize, body: &[SchedulingStep], interval: usize) -> Result<Vec<SchedulingStep>, EquivError> {
    if interval == 0 {
        return Err(EquivError::InvalidParams {
            reason: "interval must be positive".into(),
        });
    }
    if m > body.len() {
        return Err(EquivError::InvalidParams {
            reason: format!("m = {m} exceeds the loop length {}", body.len()),
        });
    }
    let mut out = Vec::new();
    let mut take = m;
    while take > 0 {
        out.extend_from_slice(&body[..take]);
        take = take.saturating_sub(interval);
    }
    Ok(out)
}

/// Where two normalized states first differ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "at", rename_all = "lowercase")]
pub enum Location {
    Var(VarName),
    Mem(u64),
    Ptr(VarName),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Var(v) => write!(f, "var:{v}"),
            Location::Mem(a) => write!(f, "mem:{a}"),
            Location::Ptr(p) => write!(f, "ptr:{p}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub location: Location,
    pub lhs: Option<u64>,
    pub rhs: Option<u64>,
}

fn opt(v: Option<u64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} lhs={} rhs={}", self.location, opt(self.lhs), opt(self.rhs))
    }
}

/// First difference between two states: bindings by name, then memory by
/// address, then pointers.
pub fn first_divergence(lhs: &CcdfgState, rhs: &CcdfgState) -> Option<Divergence> {
    let names: BTreeSet<&VarName> = lhs.bindings().iter().chain(rhs.bindings()).map(|(n, _)| n).collect();
    for n in names {
        let (a, b) = (lhs.get(n.as_str()), rhs.get(n.as_str()));
        if a != b {
            return Some(Divergence {
                location: Location::Var(n.clone()),
                lhs: a.map(Value::bits),
                rhs: b.map(Value::bits),
            });
        }
    }
    let addrs: BTreeSet<u64> = lhs.memory.keys().chain(rhs.memory.keys()).copied().collect();
    for a in addrs {
        let (x, y) = (lhs.memory.get(&a), rhs.memory.get(&a));
        if x != y {
            return Some(Divergence {
                location: Location::Mem(a),
                lhs: x.map(|v| v.bits()),
                rhs: y.map(|v| v.bits()),
            });
        }
    }
    let ptrs: BTreeSet<&VarName> = lhs.pointers.keys().chain(rhs.pointers.keys()).collect();
    for p in ptrs {
        let (x, y) = (lhs.pointers.get(p), rhs.pointers.get(p));
        if x != y {
            return Some(Divergence {
                location: Location::Ptr(p.clone()),
                lhs: x.copied(),
                rhs: y.copied(),
            });
        }
    }
    None
}

/// Outcome of one check at one `k`. Normalized states are kept only for
/// failures.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub check: CheckKind,
    pub k: u64,
    pub sample: Option<usize>,
    pub passed: bool,
    pub lhs_state: Option<CcdfgState>,
    pub rhs_state: Option<CcdfgState>,
    pub first_divergence: Option<Divergence>,
}

impl CheckReport {
    fn compare(check: CheckKind, k: u64, lhs: CcdfgState, rhs: CcdfgState) -> Self {
        let first_divergence = first_divergence(&lhs, &rhs);
        let passed = first_divergence.is_none() && lhs == rhs;
        CheckReport {
            check,
            k,
            sample: None,
            passed,
            lhs_state: (!passed).then_some(lhs),
            rhs_state: (!passed).then_some(rhs),
            first_divergence,
        }
    }

    /// `check=correctness k=3 sample=0 result=PASS`, with the divergence
    /// appended on failure.
    pub fn line(&self) -> String {
        let mut out = format!("check={} k={}", self.check, self.k);
        if let Some(s) = self.sample {
            out.push_str(&format!(" sample={s}"));
        }
        out.push_str(if self.passed { " result=PASS" } else { " result=FAIL" });
        if let Some(d) = &self.first_divergence {
            out.push_str(&format!(" divergence={d}"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("reports serialize")
    }
}

fn exec<T>(side: Side, r: Result<T, ExecError>) -> Result<T, EquivError> {
    r.map_err(|source| EquivError::Exec { side, source })
}

fn run_seq(
    pre: &[SchedulingStep],
    body: &[SchedulingStep],
    tail: &[SchedulingStep],
    iterations: u64,
    init: &CcdfgState,
    prev: Option<&BlockLabel>,
) -> Result<CcdfgState, EquivError> {
    let mut s = init.clone();
    exec(
        Side::Sequential,
        Interpreter::new().run_ccdfg(pre, body, tail, iterations, &mut s, prev),
    )?;
    Ok(s)
}

fn check_k(k: u64) -> Result<(), EquivError> {
    if k == 0 {
        return Err(EquivError::InvalidParams {
            reason: "k must be at least 1".into(),
        });
    }
    Ok(())
}

/// Prologue plus `k` full-stage traversals against the sequential pre region,
/// `k - 1` loop iterations and the in-flight work of [`get_m_blocks_seq`].
#[allow(clippy::too_many_arguments)]
pub fn check_invariant(
    p: &PipelinedCcdfg,
    seq_pre: &[SchedulingStep],
    seq_loop: &[SchedulingStep],
    interval: usize,
    m: usize,
    k: u64,
    init: &CcdfgState,
    prev: Option<&BlockLabel>,
) -> Result<CheckReport, EquivError> {
    check_invariant_with(
        p,
        seq_pre,
        seq_loop,
        interval,
        m,
        k,
        init,
        prev,
        &CheckOptions::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn check_invariant_with(
    p: &PipelinedCcdfg,
    seq_pre: &[SchedulingStep],
    seq_loop: &[SchedulingStep],
    interval: usize,
    m: usize,
    k: u64,
    init: &CcdfgState,
    prev: Option<&BlockLabel>,
    opts: &CheckOptions,
) -> Result<CheckReport, EquivError> {
    check_k(k)?;
    let tail = get_m_blocks_seq(m, seq_loop, interval)?;
    let mut lhs = init.clone();
    exec(
        Side::Pipelined,
        Interpreter::new().run_ccdfg_k(&p.prologue, &p.fullstage, k, &mut lhs, prev),
    )?;
    let rhs = run_seq(seq_pre, seq_loop, &tail, k - 1, init, prev)?;
    Ok(CheckReport::compare(
        CheckKind::Invariant,
        k,
        normalize(&lhs, opts),
        in_order(&rhs),
    ))
}

/// The whole pipelined design with `k` full-stage traversals against
/// `k - 1 + ceil(m / I)` sequential loop iterations after `seq_pre`.
#[allow(clippy::too_many_arguments)]
pub fn check_correctness(
    p: &PipelinedCcdfg,
    seq_pre: &[SchedulingStep],
    seq_loop: &[SchedulingStep],
    interval: usize,
    m: usize,
    k: u64,
    init: &CcdfgState,
    prev: Option<&BlockLabel>,
) -> Result<CheckReport, EquivError> {
    check_correctness_with(
        p,
        seq_pre,
        seq_loop,
        interval,
        m,
        k,
        init,
        prev,
        &CheckOptions::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn check_correctness_with(
    p: &PipelinedCcdfg,
    seq_pre: &[SchedulingStep],
    seq_loop: &[SchedulingStep],
    interval: usize,
    m: usize,
    k: u64,
    init: &CcdfgState,
    prev: Option<&BlockLabel>,
    opts: &CheckOptions,
) -> Result<CheckReport, EquivError> {
    check_k(k)?;
    if interval == 0 {
        return Err(EquivError::InvalidParams {
            reason: "interval must be positive".into(),
        });
    }
    let mut lhs = init.clone();
    exec(
        Side::Pipelined,
        Interpreter::new().run_ccdfg(&p.prologue, &p.fullstage, &p.epilogue, k, &mut lhs, prev),
    )?;
    let iterations = k - 1 + m.div_ceil(interval) as u64;
    let rhs = run_seq(seq_pre, seq_loop, &[], iterations, init, prev)?;
    Ok(CheckReport::compare(
        CheckKind::Correctness,
        k,
        normalize(&lhs, opts),
        in_order(&rhs),
    ))
}

/// Runs `a; b` and `b; a` from each state and compares the normalized
/// results. Both orders failing with the same error counts as agreement.
///
/// Steps whose footprints overlap (including any two memory accesses) are
/// rejected up front.
pub fn check_commutability(a: &SchedulingStep, b: &SchedulingStep, states: &[CcdfgState]) -> Result<bool, EquivError> {
    if let Some(clash) = read_set(a).clash(&read_set(b)) {
        return Err(EquivError::PreconditionViolation {
            reason: format!("steps {} and {} conflict ({clash:?})", a.label, b.label),
        });
    }
    let run = |first: &SchedulingStep, second: &SchedulingStep, s: &CcdfgState| {
        let mut out = s.clone();
        let mut it = Interpreter::new();
        it.run_block_set(std::slice::from_ref(first), &mut out, None)?;
        it.run_block_set(std::slice::from_ref(second), &mut out, None)?;
        Ok::<_, ExecError>(in_order(&out))
    };
    Ok(states.iter().all(|s| run(a, b, s) == run(b, a, s)))
}

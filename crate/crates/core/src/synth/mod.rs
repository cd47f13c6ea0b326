// SPDX-License-Identifier: Apache-2.0

//! Reference loop pipeliner.
//!
//! [`pipeline`] runs validation, φ-elimination, shadow-register insertion
//! and superstep construction in that order. Construction never backtracks:
//! if the requested interval would reorder two dependent scheduling steps it
//! fails with [`SynthesisError::HazardConflict`].

mod phi;
mod shadow;
mod superstep;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ir::{validate_pipelinable, BlockLabel, Ccdfg, Diagnostic, PipelinedCcdfg, VarName};
use crate::textio::CcdfgDocument;

pub use phi::phi_elimination;
pub use shadow::{shadow_insertion, ShadowPlan};
pub use superstep::{superstep_construction, SuperstepOrigin};

/// What two reordered scheduling steps both touch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum HazardResource {
    Var(VarName),
    Memory,
}

impl fmt::Display for HazardResource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HazardResource::Var(v) => write!(f, "`{v}`"),
            HazardResource::Memory => f.write_str("memory"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum SynthesisError {
    #[error("HazardConflict: step {reader_step} of a later iteration would run before step {writer_step} of an earlier one, both touching {resource}")]
    HazardConflict {
        writer_step: BlockLabel,
        reader_step: BlockLabel,
        resource: HazardResource,
    },
    #[error("NameCollision: `{var}` already exists")]
    NameCollision { var: VarName },
    #[error("InvalidParams: {reason}")]
    InvalidParams { reason: String },
    #[error("NotPipelinable: {}", diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    NotPipelinable { diagnostics: Vec<Diagnostic> },
}

impl SynthesisError {
    pub fn kind(&self) -> &'static str {
        match self {
            SynthesisError::HazardConflict { .. } => "HazardConflict",
            SynthesisError::NameCollision { .. } => "NameCollision",
            SynthesisError::InvalidParams { .. } => "InvalidParams",
            SynthesisError::NotPipelinable { .. } => "NotPipelinable",
        }
    }

    pub(crate) fn invalid(reason: impl Into<String>) -> Self {
        SynthesisError::InvalidParams { reason: reason.into() }
    }
}

/// Pipeline interval, prologue length `m` (scheduling steps of the first
/// iteration run before the full stage) and the number of overlapped
/// iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PipelineParams {
    pub interval: usize,
    pub m: usize,
    pub depth: usize,
}

impl PipelineParams {
    /// Sequential loop iterations (after the unwound first one) that match
    /// `k` traversals of the full stage plus the epilogue.
    pub fn sequential_iterations(&self, k: u64) -> u64 {
        k - 1 + self.m.div_ceil(self.interval) as u64
    }
}

/// `m = loop_len - interval`; requires `interval < loop_len`.
pub fn compute_m(loop_len: usize, interval: usize) -> Result<usize, SynthesisError> {
    if interval == 0 {
        return Err(SynthesisError::invalid("interval must be positive"));
    }
    if interval >= loop_len {
        return Err(SynthesisError::invalid(format!(
            "interval {interval} must be smaller than the loop length {loop_len}"
        )));
    }
    Ok(loop_len - interval)
}

/// Everything the pipeliner produced, including the φ-free sequential
/// design the checkers compare against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineOutput {
    pub pipelined: PipelinedCcdfg,
    pub params: PipelineParams,
    /// φ-eliminated design without shadow registers. Its `pre` ends with the
    /// unwound first iteration.
    pub sequential: Ccdfg,
    pub shadows: BTreeSet<VarName>,
    pub origins: Vec<SuperstepOrigin>,
}

impl PipelineOutput {
    /// The pipelined design as a document whose meta records the
    /// parameters, shadow registers and superstep composition.
    pub fn document(&self) -> CcdfgDocument {
        let mut doc = CcdfgDocument::pipelined(self.pipelined.clone());
        doc.meta.insert("interval".into(), self.params.interval.to_string());
        doc.meta.insert("m".into(), self.params.m.to_string());
        doc.meta.insert("depth".into(), self.params.depth.to_string());
        let shadows: Vec<&str> = self.shadows.iter().map(|s| s.as_str()).collect();
        doc.meta.insert("shadows".into(), shadows.join(" "));
        for o in &self.origins {
            let parts: Vec<String> = o.components.iter().map(|(s, i)| format!("{s}@{i}")).collect();
            doc.meta.insert(format!("superstep.{}", o.label), parts.join(" "));
        }
        doc
    }
}

/// Validate, eliminate φ, insert shadow registers and build supersteps.
///
/// With `interval` equal to the loop length no iterations overlap and the
/// prologue holds the whole first iteration (`m = loop_len`).
pub fn pipeline(c: &Ccdfg, interval: usize) -> Result<PipelineOutput, SynthesisError> {
    let diagnostics = validate_pipelinable(c);
    if !diagnostics.is_empty() {
        return Err(SynthesisError::NotPipelinable { diagnostics });
    }
    let sequential = phi_elimination(c)?;
    let len = sequential.body.len();
    if interval == 0 || interval > len {
        return Err(SynthesisError::invalid(format!(
            "interval {interval} outside 1..={len}"
        )));
    }
    let plan = ShadowPlan::compute(&sequential.body, interval, &sequential.vars())?;
    let body = plan.apply(&sequential.body);
    let split = c.pre.len();
    let mut pre = sequential.pre[..split].to_vec();
    pre.extend(plan.apply(&sequential.pre[split..]));
    let m = if interval == len {
        len
    } else {
        compute_m(len, interval)?
    };
    let (pipelined, origins) = superstep::construct(&pre, &body, interval, m)?;
    Ok(PipelineOutput {
        pipelined,
        params: PipelineParams {
            interval,
            m,
            depth: len.div_ceil(interval),
        },
        sequential,
        shadows: plan.shadow_names(),
        origins,
    })
}

/// `base`, or `base.2`, `base.3`, ... whichever is free first.
pub(crate) fn fresh_label(base: &str, taken: &mut BTreeSet<BlockLabel>) -> BlockLabel {
    let mut n = 1;
    loop {
        let name = if n == 1 {
            base.to_string()
        } else {
            format!("{base}.{n}")
        };
        let label = BlockLabel::new(name).expect("generated labels are identifiers");
        if taken.insert(label.clone()) {
            return label;
        }
        n += 1;
    }
}

#[cfg(test)]
mod tests;

// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use super::{fresh_label, SynthesisError};
use crate::ir::{validate_pipelinable, BlockLabel, Ccdfg, PhiChoice, SchedulingStep, Statement};

/// Replaces each φ `v := φ((σ, entry), (τ, back))` by `v := τ` in the loop and
/// appends one unwound iteration, with `v := σ`, to the pre region. The
/// unwound steps get fresh labels (`X.first`).
///
/// Pre-region jumps are dropped since regions already fall through.
pub fn phi_elimination(c: &Ccdfg) -> Result<Ccdfg, SynthesisError> {
    let diagnostics = validate_pipelinable(c);
    if !diagnostics.is_empty() {
        return Err(SynthesisError::NotPipelinable { diagnostics });
    }
    let entry = c.loop_entry_pred().clone();
    let back = c.backedge_pred().cloned();
    let pick = |choices: &[PhiChoice; 2], pred: Option<&BlockLabel>| {
        choices
            .iter()
            .find(|ch| Some(&ch.pred) == pred)
            .map(|ch| ch.value.clone())
            .expect("validated φ names both predecessors")
    };
    let replace = |step: &SchedulingStep, pred: Option<&BlockLabel>| {
        let microsteps = step
            .microsteps
            .iter()
            .map(|ms| {
                ms.map_statements(|st| match st {
                    Statement::Phi { target, choices } => Statement::assign(target.clone(), pick(choices, pred)),
                    other => other.clone(),
                })
            })
            .collect();
        SchedulingStep {
            label: step.label.clone(),
            microsteps,
            terminator: step.terminator.clone(),
        }
    };

    let mut taken: BTreeSet<BlockLabel> = c.labels();
    let mut pre: Vec<SchedulingStep> = c
        .pre
        .iter()
        .map(|s| SchedulingStep {
            terminator: None,
            ..s.clone()
        })
        .collect();
    for step in &c.body {
        let mut first = replace(step, Some(&entry));
        first.label = fresh_label(&format!("{}.first", step.label), &mut taken);
        first.terminator = None;
        pre.push(first);
    }
    let body = c.body.iter().map(|s| replace(s, back.as_ref())).collect();
    Ok(Ccdfg {
        entry: c.entry.clone(),
        pre,
        body,
        post: c.post.clone(),
    })
}

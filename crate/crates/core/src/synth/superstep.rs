// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{fresh_label, HazardResource, SynthesisError};
use crate::ir::{read_set, BlockLabel, Clash, PipelinedCcdfg, SchedulingStep};

/// Which source steps a superstep was built from, oldest iteration first.
/// Iterations are numbered from 1 (the unwound first iteration) for a single
/// traversal of the full stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuperstepOrigin {
    pub label: BlockLabel,
    pub components: Vec<(BlockLabel, usize)>,
}

impl fmt::Display for SuperstepOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} =", self.label)?;
        for (step, iter) in &self.components {
            write!(f, " {step}@{iter}")?;
        }
        Ok(())
    }
}

/// Rejects intervals that would run step `s'` of a later iteration before a
/// conflicting step `s` of an earlier one, i.e. any pair with `s > s' + I`.
/// Steps of the unwound first iteration are checked as the earlier side too.
pub(crate) fn check_hazards(
    first: &[SchedulingStep],
    body: &[SchedulingStep],
    interval: usize,
) -> Result<(), SynthesisError> {
    let body_rw: Vec<_> = body.iter().map(read_set).collect();
    for s in 0..body.len() {
        let mut older = vec![(&body[s], body_rw[s].clone())];
        if let Some(f) = first.get(s) {
            older.push((f, read_set(f)));
        }
        for s2 in 0..body.len() {
            if s <= s2 + interval {
                continue;
            }
            for (step, rw) in &older {
                let newer = &body[s2];
                let clash = rw.clash(&body_rw[s2]);
                let (writer, reader, resource) = match clash {
                    None => continue,
                    Some(Clash::WriteRead(v)) | Some(Clash::WriteWrite(v)) => (*step, newer, HazardResource::Var(v)),
                    Some(Clash::ReadWrite(v)) => (newer, *step, HazardResource::Var(v)),
                    Some(Clash::Memory) if rw.mem_writes => (*step, newer, HazardResource::Memory),
                    Some(Clash::Memory) => (newer, *step, HazardResource::Memory),
                };
                return Err(SynthesisError::HazardConflict {
                    writer_step: writer.label.clone(),
                    reader_step: reader.label.clone(),
                    resource,
                });
            }
        }
    }
    Ok(())
}

/// Builds prologue, full stage and epilogue from a φ-free design whose `pre`
/// ends with the unwound first iteration (`body.len()` steps).
pub fn superstep_construction(
    pre: &[SchedulingStep],
    body: &[SchedulingStep],
    interval: usize,
    m: usize,
) -> Result<PipelinedCcdfg, SynthesisError> {
    construct(pre, body, interval, m).map(|(p, _)| p)
}

/// Iteration `j` (0 is the unwound one) starts at cycle `j * I`. Cycle `c`
/// concatenates the steps `c - j * I` of all live iterations, oldest first,
/// so a later iteration sees values an earlier one produced in the same
/// cycle. Cycles `0..m` form the prologue, the next `I` the full stage, the
/// rest drain the remaining iterations.
pub(crate) fn construct(
    pre: &[SchedulingStep],
    body: &[SchedulingStep],
    interval: usize,
    m: usize,
) -> Result<(PipelinedCcdfg, Vec<SuperstepOrigin>), SynthesisError> {
    let len = body.len();
    if interval == 0 || interval > len {
        return Err(SynthesisError::invalid(format!(
            "interval {interval} outside 1..={len}"
        )));
    }
    if m == 0 || m > len || m + interval < len {
        return Err(SynthesisError::invalid(format!(
            "m = {m} must lie in {}..={len}",
            (len - interval).max(1)
        )));
    }
    if pre.len() < len {
        return Err(SynthesisError::invalid(
            "pre region is shorter than one unwound iteration",
        ));
    }
    let (kept, first) = pre.split_at(pre.len() - len);
    for s in m..len {
        if first[s].microsteps != body[s].microsteps {
            return Err(SynthesisError::invalid(format!(
                "unwound step {} differs from loop step {} but would run in the full stage",
                first[s].label, body[s].label
            )));
        }
    }
    check_hazards(first, body, interval)?;

    let iterations = m.div_ceil(interval) + 1;
    let last_cycle = (iterations - 1) * interval + len;
    let mut taken: BTreeSet<BlockLabel> = kept.iter().map(|s| s.label.clone()).collect();
    let mut origins = Vec::new();
    let mut regions: [Vec<SchedulingStep>; 3] = Default::default();
    for c in 0..last_cycle {
        let (region, prefix, idx) = if c < m {
            (0, "pro", c)
        } else if c < m + interval {
            (1, "full", c - m)
        } else {
            (2, "epi", c - m - interval)
        };
        let label = fresh_label(&format!("{prefix}.{idx}"), &mut taken);
        let mut microsteps = Vec::new();
        let mut components = Vec::new();
        for j in 0..iterations {
            let Some(s) = c.checked_sub(j * interval).filter(|&s| s < len) else {
                continue;
            };
            let src = if j == 0 { &first[s] } else { &body[s] };
            microsteps.extend(src.microsteps.iter().cloned());
            components.push((body[s].label.clone(), j + 1));
        }
        origins.push(SuperstepOrigin {
            label: label.clone(),
            components,
        });
        regions[region].push(SchedulingStep::new(label, microsteps));
    }
    let [pro, fullstage, epilogue] = regions;
    let mut prologue: Vec<SchedulingStep> = kept
        .iter()
        .map(|s| SchedulingStep {
            terminator: None,
            ..s.clone()
        })
        .collect();
    prologue.extend(pro);
    Ok((
        PipelinedCcdfg {
            prologue,
            fullstage,
            epilogue,
        },
        origins,
    ))
}

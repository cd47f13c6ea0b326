// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use super::SynthesisError;
use crate::ir::{
    all_vars, fresh_shadow_name, read_set, Expression, IrError, Microstep, SchedulingStep, Statement, VarName,
};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct Round {
    /// step index -> copies `(shadow, source)` appended as a trailing microstep
    copies: BTreeMap<usize, Vec<(VarName, VarName)>>,
    /// step index -> reads to redirect `(from, to)`
    renames: BTreeMap<usize, Vec<(VarName, VarName)>>,
}

impl Round {
    fn is_empty(&self) -> bool {
        self.copies.is_empty()
    }
}

/// Shadow registers for one loop body at one interval.
///
/// A variable `x` written only in step `w` and read in a step `r` more than
/// `interval` steps later would be overwritten by the next iteration before
/// the read. The plan copies it into `x_reg` at the end of step
/// `w + interval` and redirects reads in `(w + I, w + 2I]` to the copy.
/// Longer distances chain `x_reg_reg` at `w + 2I`, and so on.
///
/// The same plan applies to the unwound first iteration, which has the same
/// step layout as the loop.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ShadowPlan {
    rounds: Vec<Round>,
}

impl ShadowPlan {
    /// Computes rounds until the body needs no more shadows. In practice the
    /// second round is always empty, since every shadow is read within one
    /// interval of its copy.
    pub fn compute(
        body: &[SchedulingStep],
        interval: usize,
        taken: &BTreeSet<VarName>,
    ) -> Result<ShadowPlan, SynthesisError> {
        if interval == 0 {
            return Err(SynthesisError::invalid("interval must be positive"));
        }
        let mut taken = taken.clone();
        taken.extend(all_vars(body.iter()));
        let mut plan = ShadowPlan::default();
        let mut current = body.to_vec();
        loop {
            let round = plan_round(&current, interval, &mut taken)?;
            if round.is_empty() {
                return Ok(plan);
            }
            current = apply_round(&round, &current);
            plan.rounds.push(round);
        }
    }

    pub fn apply(&self, steps: &[SchedulingStep]) -> Vec<SchedulingStep> {
        self.rounds
            .iter()
            .fold(steps.to_vec(), |acc, round| apply_round(round, &acc))
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn shadow_names(&self) -> BTreeSet<VarName> {
        self.rounds
            .iter()
            .flat_map(|r| r.copies.values().flatten().map(|(s, _)| s.clone()))
            .collect()
    }
}

fn collision(e: IrError) -> SynthesisError {
    match e {
        IrError::NameCollision(var) => SynthesisError::NameCollision { var },
        other => SynthesisError::invalid(other.to_string()),
    }
}

fn plan_round(
    body: &[SchedulingStep],
    interval: usize,
    taken: &mut BTreeSet<VarName>,
) -> Result<Round, SynthesisError> {
    let sets: Vec<_> = body.iter().map(read_set).collect();
    let mut writers: BTreeMap<&VarName, Vec<usize>> = BTreeMap::new();
    for (i, rw) in sets.iter().enumerate() {
        for v in &rw.writes {
            writers.entry(v).or_default().push(i);
        }
    }
    let mut round = Round::default();
    for (var, ws) in writers {
        let [w] = ws[..] else { continue };
        let far_reads: Vec<usize> = (w + interval + 1..body.len())
            .filter(|&r| sets[r].reads.contains(var))
            .collect();
        let Some(&last) = far_reads.last() else {
            continue;
        };
        let levels = (last - w).div_ceil(interval) - 1;
        let mut chain = vec![var.clone()];
        for n in 1..=levels {
            let name = fresh_shadow_name(&chain[n - 1], taken).map_err(collision)?;
            taken.insert(name.clone());
            round
                .copies
                .entry(w + n * interval)
                .or_default()
                .push((name.clone(), chain[n - 1].clone()));
            chain.push(name);
        }
        for r in far_reads {
            let level = (r - w).div_ceil(interval) - 1;
            round
                .renames
                .entry(r)
                .or_default()
                .push((var.clone(), chain[level].clone()));
        }
    }
    Ok(round)
}

fn apply_round(round: &Round, steps: &[SchedulingStep]) -> Vec<SchedulingStep> {
    steps
        .iter()
        .enumerate()
        .map(|(i, step)| {
            let mut out = step.clone();
            if let Some(renames) = round.renames.get(&i) {
                out.microsteps = out
                    .microsteps
                    .iter()
                    .map(|ms| {
                        ms.map_statements(|st| {
                            renames
                                .iter()
                                .fold(st.clone(), |acc, (from, to)| acc.rename_reads(from, to))
                        })
                    })
                    .collect();
            }
            if let Some(copies) = round.copies.get(&i) {
                let stmts = copies
                    .iter()
                    .map(|(shadow, src)| Statement::assign(shadow.clone(), Expression::Var(src.clone())))
                    .collect();
                out.microsteps
                    .push(Microstep::new(stmts).expect("distinct shadow targets"));
            }
            out
        })
        .collect()
}

/// Inserts shadow registers into a φ-free loop body for the given interval.
pub fn shadow_insertion(body: &[SchedulingStep], interval: usize) -> Result<Vec<SchedulingStep>, SynthesisError> {
    let plan = ShadowPlan::compute(body, interval, &BTreeSet::new())?;
    Ok(plan.apply(body))
}

// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::{BlockLabel, Ccdfg, PipelinedCcdfg, SchedulingStep, Terminator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    Structural,
    NestedLoop,
    SingleEntryExit,
    NoBranching,
    PhiPlacement,
    ReservedSuffix,
}

impl Rule {
    pub fn id(self) -> &'static str {
        match self {
            Rule::Structural => "structural",
            Rule::NestedLoop => "nested-loop",
            Rule::SingleEntryExit => "single-entry-exit",
            Rule::NoBranching => "no-branching",
            Rule::PhiPlacement => "phi-placement",
            Rule::ReservedSuffix => "reserved-suffix",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub rule: Rule,
    pub step: Option<BlockLabel>,
    pub message: String,
}

impl Diagnostic {
    fn new(rule: Rule, step: Option<&BlockLabel>, message: impl Into<String>) -> Self {
        Diagnostic {
            rule,
            step: step.cloned(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.rule.id())?;
        if let Some(step) = &self.step {
            write!(f, " step {step}:")?;
        }
        write!(f, " {}", self.message)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Region {
    Pre,
    Body,
    Post,
}

fn duplicate_labels<'a>(
    steps: impl Iterator<Item = &'a SchedulingStep>,
    extra: Option<&BlockLabel>,
    out: &mut Vec<Diagnostic>,
) {
    let mut seen = BTreeSet::new();
    if let Some(e) = extra {
        seen.insert(e.clone());
    }
    for s in steps {
        if !seen.insert(s.label.clone()) {
            out.push(Diagnostic::new(
                Rule::Structural,
                Some(&s.label),
                "duplicate step label",
            ));
        }
    }
}

/// Checks the pipelinable-loop restrictions: no nested loop, a single entry
/// and exit, no branching between scheduling steps, and φ-statements only in
/// the first loop step with the entry and backedge predecessors. Also rejects
/// variable names that use the reserved shadow suffix.
pub fn validate_pipelinable(c: &Ccdfg) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if c.body.is_empty() {
        out.push(Diagnostic::new(Rule::Structural, None, "loop region is empty"));
    }
    duplicate_labels(c.steps(), Some(&c.entry), &mut out);

    let flat: Vec<(Region, &SchedulingStep)> = c
        .pre
        .iter()
        .map(|s| (Region::Pre, s))
        .chain(c.body.iter().map(|s| (Region::Body, s)))
        .chain(c.post.iter().map(|s| (Region::Post, s)))
        .collect();
    let position: BTreeMap<&BlockLabel, usize> = flat.iter().enumerate().map(|(i, (_, s))| (&s.label, i)).collect();
    let body_start = c.pre.len();
    let body_end = c.pre.len() + c.body.len();

    for (idx, (region, step)) in flat.iter().enumerate() {
        let Some(term) = &step.terminator else { continue };
        let is_backedge = |target: usize| *region == Region::Body && idx + 1 == body_end && target == body_start;
        let targets: Vec<&BlockLabel> = match term {
            Terminator::Jump(t) => vec![t],
            Terminator::Branch { taken, not_taken, .. } => vec![taken, not_taken],
        };
        let mut resolved = Vec::new();
        for t in &targets {
            match position.get(t) {
                Some(&p) => resolved.push(p),
                None => out.push(Diagnostic::new(
                    Rule::Structural,
                    Some(&step.label),
                    format!("jump to unknown step `{t}`"),
                )),
            }
        }
        if resolved.len() != targets.len() {
            continue;
        }
        if resolved.iter().any(|&t| t <= idx && !is_backedge(t)) {
            out.push(Diagnostic::new(
                Rule::NestedLoop,
                Some(&step.label),
                "backward edge other than the loop backedge",
            ));
            continue;
        }
        match term {
            Terminator::Branch { .. } => {
                let (rule, what) = if *region == Region::Body {
                    (Rule::NoBranching, "conditional branch inside the loop")
                } else {
                    (Rule::SingleEntryExit, "conditional branch outside the loop")
                };
                out.push(Diagnostic::new(rule, Some(&step.label), what));
            }
            Terminator::Jump(_) => {
                let t = resolved[0];
                if t == idx + 1 || is_backedge(t) {
                    continue;
                }
                if *region != Region::Body || !(body_start..body_end).contains(&t) {
                    out.push(Diagnostic::new(
                        Rule::SingleEntryExit,
                        Some(&step.label),
                        "jump bypasses the single loop entry or exit",
                    ));
                } else {
                    out.push(Diagnostic::new(
                        Rule::NoBranching,
                        Some(&step.label),
                        "jump skips loop steps",
                    ));
                }
            }
        }
    }

    let entry_pred = c.loop_entry_pred();
    let back_pred = c.backedge_pred();
    for (i, step) in c.steps().enumerate() {
        for st in step.statements() {
            let super::Statement::Phi { target, choices } = st else {
                continue;
            };
            if i != body_start || c.body.is_empty() {
                out.push(Diagnostic::new(
                    Rule::PhiPlacement,
                    Some(&step.label),
                    format!("phi for `{target}` outside the first loop step"),
                ));
                continue;
            }
            let preds: BTreeSet<&BlockLabel> = choices.iter().map(|ch| &ch.pred).collect();
            let expected: BTreeSet<&BlockLabel> = [Some(entry_pred), back_pred].into_iter().flatten().collect();
            if preds != expected {
                out.push(Diagnostic::new(
                    Rule::PhiPlacement,
                    Some(&step.label),
                    format!(
                        "phi for `{target}` must choose between `{entry_pred}` and `{}`",
                        back_pred.map(|l| l.as_str()).unwrap_or("?")
                    ),
                ));
            }
        }
    }

    let mut reported = BTreeSet::new();
    for step in c.steps() {
        for st in step.statements() {
            for var in st.vars() {
                if var.is_shadow() && reported.insert(var.clone()) {
                    out.push(Diagnostic::new(
                        Rule::ReservedSuffix,
                        Some(&step.label),
                        format!("variable `{var}` uses the reserved shadow suffix"),
                    ));
                }
            }
        }
    }
    out
}

/// Structural checks for a pipelined design: a nonempty full stage, unique
/// labels, no φ and no explicit control transfer.
pub fn validate_pipelined(p: &PipelinedCcdfg) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if p.fullstage.is_empty() {
        out.push(Diagnostic::new(Rule::Structural, None, "full stage is empty"));
    }
    duplicate_labels(p.steps(), None, &mut out);
    for step in p.steps() {
        if step.statements().any(|s| s.is_phi()) {
            out.push(Diagnostic::new(
                Rule::PhiPlacement,
                Some(&step.label),
                "pipelined designs are phi-free",
            ));
        }
        if step.terminator.is_some() {
            out.push(Diagnostic::new(
                Rule::NoBranching,
                Some(&step.label),
                "pipelined steps carry no terminators",
            ));
        }
    }
    out
}

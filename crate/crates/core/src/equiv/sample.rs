// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_correctness_with, check_invariant_with, CheckKind, CheckOptions, CheckReport, EquivError};
use crate::interp::CcdfgState;
use crate::ir::{BlockLabel, Ccdfg, Expression, PipelinedCcdfg, SchedulingStep, Statement, VarName, Width};
use crate::synth::PipelineOutput;

/// Variables a run of `c` reads before writing them, in program order. A φ
/// only reads its loop-entry choice here: the backedge value is always
/// written by the previous iteration.
pub fn live_ins(c: &Ccdfg) -> BTreeSet<VarName> {
    let entry = c.loop_entry_pred();
    let mut written = BTreeSet::new();
    let mut out = BTreeSet::new();
    for st in c.steps().flat_map(|s| s.statements()) {
        let mut reads = BTreeSet::new();
        for e in statement_exprs(st, entry) {
            e.vars(&mut reads);
        }
        out.extend(reads.into_iter().filter(|v| !written.contains(v)));
        if let Some(t) = st.target() {
            written.insert(t.clone());
        }
    }
    out
}

fn statement_exprs<'a>(st: &'a Statement, entry: &BlockLabel) -> Vec<&'a Expression> {
    match st {
        Statement::Assign { rhs, .. } => vec![rhs],
        Statement::Store { addr, value } => vec![addr, value],
        Statement::Phi { choices, .. } => choices.iter().filter(|c| c.pred == *entry).map(|c| &c.value).collect(),
    }
}

pub fn pointer_names<'a>(steps: impl IntoIterator<Item = &'a SchedulingStep>) -> BTreeSet<VarName> {
    steps
        .into_iter()
        .flat_map(|s| s.statements())
        .flat_map(|st| st.pointers())
        .collect()
}

/// What a random initial state binds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    pub vars: BTreeSet<VarName>,
    pub pointers: BTreeSet<VarName>,
    pub mem_size: u64,
    pub width: Width,
}

impl StateSpace {
    /// Binds every variable of `c`, not just the live-ins, so a step run
    /// too early reads a wrong value instead of an unbound one.
    pub fn for_design(c: &Ccdfg, mem_size: u64, width: Width) -> Self {
        StateSpace {
            vars: c.vars(),
            pointers: pointer_names(c.steps()),
            mem_size,
            width,
        }
    }

    pub fn live_ins(c: &Ccdfg, mem_size: u64, width: Width) -> Self {
        StateSpace {
            vars: live_ins(c),
            ..Self::for_design(c, mem_size, width)
        }
    }
}

/// Random values for every variable and memory word; pointers land in the
/// lower half of memory so small offsets stay mapped.
pub fn random_state(space: &StateSpace, rng: &mut impl Rng) -> CcdfgState {
    let mask = space.width.mask();
    let mut s = CcdfgState::new(space.width);
    for v in &space.vars {
        s.set(v.clone(), space.width.wrap(rng.gen::<u64>() & mask));
    }
    for a in 0..space.mem_size {
        s.memory.insert(a, space.width.wrap(rng.gen::<u64>() & mask));
    }
    let half = (space.mem_size / 2).max(1);
    for p in &space.pointers {
        s.pointers.insert(p.clone(), rng.gen_range(0..half));
    }
    s
}

/// A pipelined design together with the sequential design it must match.
#[derive(Debug, Clone, Copy)]
pub struct Subject<'a> {
    pub pipelined: &'a PipelinedCcdfg,
    pub sequential: &'a Ccdfg,
    pub interval: usize,
    pub m: usize,
}

impl<'a> Subject<'a> {
    pub fn from_output(out: &'a PipelineOutput) -> Self {
        Subject {
            pipelined: &out.pipelined,
            sequential: &out.sequential,
            interval: out.params.interval,
            m: out.params.m,
        }
    }

    pub fn check(
        &self,
        kind: CheckKind,
        k: u64,
        init: &CcdfgState,
        opts: &CheckOptions,
    ) -> Result<CheckReport, EquivError> {
        let seq = self.sequential;
        let check = match kind {
            CheckKind::Correctness => check_correctness_with,
            CheckKind::Invariant => check_invariant_with,
        };
        check(
            self.pipelined,
            &seq.pre,
            &seq.body,
            self.interval,
            self.m,
            k,
            init,
            Some(&seq.entry),
            opts,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepConfig {
    pub k_max: u64,
    pub samples: usize,
    pub seed: u64,
    pub mem_size: u64,
    pub width: Width,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            k_max: 8,
            samples: 20,
            seed: 0,
            mem_size: 16,
            width: Width::default(),
        }
    }
}

/// Sample `n` comes from ChaCha8 stream `n` of `seed`, so it is the same
/// state for every `k`.
pub fn sample_states(space: &StateSpace, seed: u64, samples: usize) -> Vec<CcdfgState> {
    (0..samples)
        .map(|n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(n as u64);
            random_state(space, &mut rng)
        })
        .collect()
}

/// Runs `kind` for every `k` in `1..=k_max` and every sample, `k` outermost.
pub fn sweep(
    subject: &Subject<'_>,
    kind: CheckKind,
    cfg: &SweepConfig,
    opts: &CheckOptions,
) -> Result<Vec<CheckReport>, EquivError> {
    let space = StateSpace::for_design(subject.sequential, cfg.mem_size, cfg.width);
    let states = sample_states(&space, cfg.seed, cfg.samples);
    let mut out = Vec::with_capacity(states.len() * cfg.k_max as usize);
    for k in 1..=cfg.k_max {
        for (n, init) in states.iter().enumerate() {
            let mut report = subject.check(kind, k, init, opts)?;
            report.sample = Some(n);
            out.push(report);
        }
    }
    Ok(out)
}

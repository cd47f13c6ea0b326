// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use serde::Serialize;

use super::{Expression, SchedulingStep, Statement, VarName};

/// Syntactic read/write footprint. Memory is tracked coarsely: any load sets
/// `mem_reads`, any store sets `mem_writes`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReadWriteSets {
    pub reads: BTreeSet<VarName>,
    pub writes: BTreeSet<VarName>,
    pub mem_reads: bool,
    pub mem_writes: bool,
}

/// What two footprints clash on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Clash {
    /// `self` writes the variable, `other` reads it.
    WriteRead(VarName),
    /// `self` reads the variable, `other` writes it.
    ReadWrite(VarName),
    WriteWrite(VarName),
    Memory,
}

impl ReadWriteSets {
    pub fn union(&mut self, other: &ReadWriteSets) {
        self.reads.extend(other.reads.iter().cloned());
        self.writes.extend(other.writes.iter().cloned());
        self.mem_reads |= other.mem_reads;
        self.mem_writes |= other.mem_writes;
    }

    pub fn touches_memory(&self) -> bool {
        self.mem_reads || self.mem_writes
    }

    /// First clash between `self` (executing first in program order) and
    /// `other`, or `None` when the two may be reordered. Two memory accesses
    /// always clash, even two loads.
    pub fn clash(&self, other: &ReadWriteSets) -> Option<Clash> {
        if let Some(v) = self.writes.intersection(&other.reads).next() {
            return Some(Clash::WriteRead(v.clone()));
        }
        if let Some(v) = self.reads.intersection(&other.writes).next() {
            return Some(Clash::ReadWrite(v.clone()));
        }
        if let Some(v) = self.writes.intersection(&other.writes).next() {
            return Some(Clash::WriteWrite(v.clone()));
        }
        if self.touches_memory() && other.touches_memory() {
            return Some(Clash::Memory);
        }
        None
    }
}

fn expr_rw(e: &Expression, out: &mut ReadWriteSets) {
    e.vars(&mut out.reads);
    out.mem_reads |= e.has_load();
}

pub fn statement_rw(st: &Statement) -> ReadWriteSets {
    let mut out = ReadWriteSets::default();
    match st {
        Statement::Assign { target, rhs } => {
            expr_rw(rhs, &mut out);
            out.writes.insert(target.clone());
        }
        Statement::Store { addr, value } => {
            expr_rw(addr, &mut out);
            expr_rw(value, &mut out);
            out.mem_writes = true;
        }
        Statement::Phi { target, choices } => {
            for c in choices {
                expr_rw(&c.value, &mut out);
            }
            out.writes.insert(target.clone());
        }
    }
    out
}

/// Footprint of a whole scheduling step.
pub fn read_set(step: &SchedulingStep) -> ReadWriteSets {
    let mut out = ReadWriteSets::default();
    for st in step.statements() {
        out.union(&statement_rw(st));
    }
    out
}

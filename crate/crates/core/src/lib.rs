// SPDX-License-Identifier: Apache-2.0

//! Clocked control data flow graphs (CCDFGs) for loop pipelining.
//!
//! * [`ir`]: the data model, pipelinable-loop validation and read/write sets.
//! * [`textio`]: the `.ccdfg` design and `.cstate` state formats.
//! * [`interp`]: executable semantics, including φ resolution.
//! * [`synth`]: the reference pipeliner (φ-elimination, shadow registers,
//!   superstep construction with hazard analysis).
//! * [`equiv`]: state normalization and the dynamic correctness and
//!   invariant checkers.
//! * [`cli`]: the `ccdfg` command-line front end.

pub mod cli;
pub mod equiv;
pub mod interp;
pub mod ir;
pub mod synth;
pub mod textio;

#[cfg(test)]
pub(crate) mod fixtures;

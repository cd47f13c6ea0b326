// SPDX-License-Identifier: Apache-2.0

use crate::ir::{BlockLabel, Ccdfg, VarName};
use crate::textio::{parse_ccdfg, Design};

pub const FIG1: &str = include_str!("../corpus/fig1.ccdfg");
pub const MEMSCALE: &str = include_str!("../corpus/memscale.ccdfg");
pub const XORCHAIN: &str = include_str!("../corpus/xorchain.ccdfg");
pub const HAZARD: &str = include_str!("../corpus/hazard.ccdfg");
pub const COUNT: &str = include_str!("../corpus/count.ccdfg");
pub const BRANCHING: &str = include_str!("../corpus/branching.ccdfg");
pub const FIG1_INIT: &str = include_str!("../corpus/fig1_init.cstate");

pub fn design(text: &str) -> Ccdfg {
    match parse_ccdfg(text).expect("corpus parses").design {
        Design::Sequential(c) => c,
        Design::Pipelined(_) => panic!("expected a sequential design"),
    }
}

pub fn v(s: &str) -> VarName {
    VarName::new(s).unwrap()
}

pub fn l(s: &str) -> BlockLabel {
    BlockLabel::new(s).unwrap()
}

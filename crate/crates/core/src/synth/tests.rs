// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::fixtures::{self, design, l, v};
use crate::interp::{run_ccdfg, CcdfgState, Interpreter};
use crate::ir::{BinOp, Expression, Operand, SchedulingStep, Statement};
use crate::textio::parse_state;

fn fig1() -> Ccdfg {
    design(fixtures::FIG1)
}

fn fig1_state() -> CcdfgState {
    parse_state(fixtures::FIG1_INIT).unwrap()
}

fn xor_state(seed: u64, key: u64) -> CcdfgState {
    parse_state(&format!("vars: seed={seed} key={key}")).unwrap()
}

fn real(mut s: CcdfgState) -> CcdfgState {
    s.retain_bindings(|n| !n.is_shadow());
    s.sort_bindings();
    s
}

/// Runs the pipelined design with `k` full-stage traversals and the
/// sequential reference for the matching iteration count.
fn both_sides(out: &PipelineOutput, k: u64, init: &CcdfgState) -> (CcdfgState, CcdfgState) {
    let p = &out.pipelined;
    let lhs = run_ccdfg(&p.prologue, &p.fullstage, &p.epilogue, k, init, None).unwrap();
    let seq = &out.sequential;
    let n = out.params.sequential_iterations(k);
    let rhs = run_ccdfg(&seq.pre, &seq.body, &[], n, init, Some(&seq.entry)).unwrap();
    (real(lhs), real(rhs))
}

fn labels(steps: &[SchedulingStep]) -> Vec<&str> {
    steps.iter().map(|s| s.label.as_str()).collect()
}

#[test]
fn compute_m_examples() {
    assert_eq!(compute_m(3, 1), Ok(2));
    assert_eq!(compute_m(4, 2), Ok(2));
    assert_eq!(compute_m(3, 3).unwrap_err().kind(), "InvalidParams");
    assert_eq!(compute_m(3, 0).unwrap_err().kind(), "InvalidParams");
    assert_eq!(compute_m(2, 5).unwrap_err().kind(), "InvalidParams");
}

#[test]
fn phi_elimination_fig1() {
    let c = fig1();
    let c1 = phi_elimination(&c).unwrap();
    assert!(c1.steps().flat_map(|s| s.statements()).all(|s| !s.is_phi()));
    assert_eq!(labels(&c1.pre), ["X.first", "Y.first", "Z.first"]);
    assert_eq!(labels(&c1.body), ["X", "Y", "Z"]);
    let first: Vec<_> = c1.pre[0].statements().cloned().collect();
    assert_eq!(
        first,
        [
            Statement::assign(v("i"), Expression::Const(0)),
            Statement::assign(v("a"), Expression::Const(0)),
        ]
    );
    let loop_x: Vec<_> = c1.body[0].statements().cloned().collect();
    assert_eq!(
        loop_x,
        [
            Statement::assign(v("i"), Expression::Var(v("i'"))),
            Statement::assign(v("a"), Expression::Var(v("a'"))),
        ]
    );
}

#[test]
fn phi_elimination_preserves_runs() {
    let c = fig1();
    let c1 = phi_elimination(&c).unwrap();
    let init = fig1_state();
    for n in 1..=8 {
        let want = run_ccdfg(&c.pre, &c.body, &c.post, n, &init, Some(&c.entry)).unwrap();
        let got = run_ccdfg(&c1.pre, &c1.body, &c1.post, n - 1, &init, Some(&c1.entry)).unwrap();
        assert_eq!(real(got), real(want), "n = {n}");
    }
}

#[test]
fn phi_elimination_rejects_invalid() {
    let err = phi_elimination(&design(fixtures::BRANCHING)).unwrap_err();
    assert_eq!(err.kind(), "NotPipelinable");
}

#[test]
fn fig1_interval_one() {
    let out = pipeline(&fig1(), 1).unwrap();
    assert_eq!(
        out.params,
        PipelineParams {
            interval: 1,
            m: 2,
            depth: 3
        }
    );
    let p = &out.pipelined;
    assert_eq!(labels(&p.prologue), ["pro.0", "pro.1"]);
    assert_eq!(labels(&p.fullstage), ["full.0"]);
    assert_eq!(labels(&p.epilogue), ["epi.0", "epi.1"]);
    let shown: Vec<String> = out.origins.iter().map(|o| o.to_string()).collect();
    assert_eq!(
        shown,
        [
            "pro.0 = X@1",
            "pro.1 = Y@1 X@2",
            "full.0 = Z@1 Y@2 X@3",
            "epi.0 = Z@2 Y@3",
            "epi.1 = Z@3",
        ]
    );
    assert_eq!(out.shadows.iter().map(|s| s.as_str()).collect::<Vec<_>>(), ["i_reg"]);
    assert!(validate_pipelined_ok(p));
}

fn validate_pipelined_ok(p: &PipelinedCcdfg) -> bool {
    crate::ir::validate_pipelined(p).is_empty()
}

#[test]
fn fig1_latency() {
    let c = fig1();
    let init = fig1_state();
    let mut seq = Interpreter::new();
    let mut s = init.clone();
    seq.run_ccdfg(&c.pre, &c.body, &c.post, 3, &mut s, Some(&c.entry))
        .unwrap();
    assert_eq!(seq.cycles(), 9);

    let out = pipeline(&c, 1).unwrap();
    let p = &out.pipelined;
    let mut pipe = Interpreter::new();
    let mut t = init.clone();
    pipe.run_ccdfg(&p.prologue, &p.fullstage, &p.epilogue, 1, &mut t, None)
        .unwrap();
    assert_eq!(pipe.cycles(), 5);
    assert_eq!(real(t), real(s));
}

#[test]
fn fig1_matches_sequential_for_many_k() {
    let out = pipeline(&fig1(), 1).unwrap();
    for k in 1..=10 {
        let (lhs, rhs) = both_sides(&out, k, &fig1_state());
        assert_eq!(lhs, rhs, "k = {k}");
    }
}

#[test]
fn fig1_other_intervals() {
    let out = pipeline(&fig1(), 2).unwrap();
    assert_eq!(out.params.m, 1);
    assert!(out.shadows.is_empty());
    for k in 1..=6 {
        let (lhs, rhs) = both_sides(&out, k, &fig1_state());
        assert_eq!(lhs, rhs, "k = {k}");
    }
    let out = pipeline(&fig1(), 3).unwrap();
    assert_eq!(out.params.m, 3);
    assert_eq!(out.pipelined.fullstage.len(), 3);
    assert!(out.pipelined.epilogue.is_empty());
}

#[test]
fn hazard_design() {
    let c = design(fixtures::HAZARD);
    let err = pipeline(&c, 1).unwrap_err();
    match err {
        SynthesisError::HazardConflict {
            writer_step,
            reader_step,
            resource,
        } => {
            assert_eq!(writer_step, l("Z"));
            assert_eq!(reader_step, l("X"));
            assert_eq!(resource, HazardResource::Var(v("c'")));
        }
        other => panic!("unexpected {other:?}"),
    }
    // at I = 2 the producer and consumer share a cycle, oldest first
    let init = parse_state("vars:").unwrap();
    for interval in [2, 3] {
        let out = pipeline(&c, interval).unwrap();
        for k in 1..=5 {
            let (lhs, rhs) = both_sides(&out, k, &init);
            assert_eq!(lhs, rhs);
        }
    }
}

#[test]
fn interval_out_of_range() {
    assert_eq!(pipeline(&fig1(), 0).unwrap_err().kind(), "InvalidParams");
    assert_eq!(pipeline(&fig1(), 4).unwrap_err().kind(), "InvalidParams");
}

#[test]
fn not_pipelinable() {
    let err = pipeline(&design(fixtures::BRANCHING), 1).unwrap_err();
    assert_eq!(err.kind(), "NotPipelinable");
    assert!(err.to_string().contains("no-branching"), "{err}");
}

#[test]
fn single_step_loop_is_trivial() {
    let out = pipeline(&design(fixtures::COUNT), 1).unwrap();
    assert_eq!(out.params.m, 1);
    assert_eq!(out.pipelined.prologue.len(), 1);
    assert_eq!(out.pipelined.fullstage.len(), 1);
    assert!(out.pipelined.epilogue.is_empty());
    let init = parse_state("vars:").unwrap();
    for k in 1..=4 {
        let (lhs, rhs) = both_sides(&out, k, &init);
        assert_eq!(lhs, rhs);
    }
}

#[test]
fn memscale_intervals() {
    let c = design(fixtures::MEMSCALE);
    assert_eq!(pipeline(&c, 1).unwrap_err().kind(), "HazardConflict");
    let init =
        parse_state("vars: base=2 scale=3\nmem: 0=1 1=2 2=3 3=4 4=5 5=6 6=7 7=8 8=9 9=10\nptrs: src=0 dst=20").unwrap();
    for interval in [2, 3, 4] {
        let out = pipeline(&c, interval).unwrap();
        for k in 1..=6 {
            let (lhs, rhs) = both_sides(&out, k, &init);
            assert_eq!(lhs, rhs, "I = {interval}, k = {k}");
        }
    }
    let out = pipeline(&c, 2).unwrap();
    assert_eq!(out.shadows.iter().map(|s| s.as_str()).collect::<Vec<_>>(), ["j_reg"]);
}

#[test]
fn xorchain_chained_shadows() {
    let out = pipeline(&design(fixtures::XORCHAIN), 1).unwrap();
    let names: Vec<_> = out.shadows.iter().map(|s| s.as_str()).collect();
    assert_eq!(names, ["h_reg", "h_reg_reg", "h_reg_reg_reg", "x1_reg"]);
    for k in 1..=8 {
        let (lhs, rhs) = both_sides(&out, k, &xor_state(0xdead_beef, 0x1234_5678));
        assert_eq!(lhs, rhs, "k = {k}");
    }
}

#[test]
fn statements_are_conserved() {
    for (text, interval) in [
        (fixtures::FIG1, 1),
        (fixtures::FIG1, 2),
        (fixtures::MEMSCALE, 2),
        (fixtures::XORCHAIN, 1),
        (fixtures::XORCHAIN, 2),
    ] {
        let c = design(text);
        let out = pipeline(&c, interval).unwrap();
        let plan = ShadowPlan::compute(&out.sequential.body, interval, &out.sequential.vars()).unwrap();
        let body = plan.apply(&out.sequential.body);
        let first = plan.apply(&out.sequential.pre[c.pre.len()..]);
        let mut want: BTreeMap<String, i64> = BTreeMap::new();
        let mut count = |st: &Statement, d: i64| {
            *want.entry(format!("{st:?}")).or_default() += d;
        };
        for st in c.pre.iter().chain(&first).flat_map(|s| s.statements()) {
            count(st, 1);
        }
        for _ in 0..out.params.m.div_ceil(interval) {
            for st in body.iter().flat_map(|s| s.statements()) {
                count(st, 1);
            }
        }
        for st in out.pipelined.steps().flat_map(|s| s.statements()) {
            count(st, -1);
        }
        want.retain(|_, n| *n != 0);
        assert!(want.is_empty(), "{want:?}");
    }
}

#[test]
fn shadow_insertion_idempotent() {
    let c1 = phi_elimination(&design(fixtures::XORCHAIN)).unwrap();
    for interval in 1..=5 {
        let once = shadow_insertion(&c1.body, interval).unwrap();
        let twice = shadow_insertion(&once, interval).unwrap();
        assert_eq!(once, twice);
    }
}

#[test]
fn shadow_name_collision() {
    let text = "ccdfg-format 1\ndesign sequential\npre:\nloop:\n  step A\n    micro (x (add y 1))\n  step B\n    micro (x_reg (add y 2))\n  step C\n    micro (z (add x 1))\npost:\n";
    let c = design(text);
    let err = shadow_insertion(&c.body, 1).unwrap_err();
    assert_eq!(err, SynthesisError::NameCollision { var: v("x_reg") });
}

#[test]
fn shadow_placement() {
    let text = "ccdfg-format 1\ndesign sequential\npre:\nloop:\n  step A\n    micro (x (add y 1))\n  step B\n    micro (t (add y 0))\n  step C\n    micro (z (add x 1))\npost:\n";
    let c = design(text);
    let out = shadow_insertion(&c.body, 1).unwrap();
    let b: Vec<_> = out[1].statements().cloned().collect();
    assert_eq!(b.last(), Some(&Statement::assign(v("x_reg"), Expression::Var(v("x")))));
    let z: Vec<_> = out[2].statements().cloned().collect();
    assert_eq!(
        z,
        [Statement::assign(
            v("z"),
            Expression::binary(BinOp::Add, Operand::Var(v("x_reg")), Operand::Const(1))
        )]
    );
    assert_eq!(shadow_insertion(&c.body, 2).unwrap(), c.body);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shadows_preserve_sequential_semantics(
        seed in 0u64..=u64::from(u32::MAX),
        key in 0u64..=u64::from(u32::MAX),
        interval in 1usize..=5,
        n in 1u64..6,
    ) {
        let c1 = phi_elimination(&design(fixtures::XORCHAIN)).unwrap();
        let plan = ShadowPlan::compute(&c1.body, interval, &c1.vars()).unwrap();
        let first = plan.apply(&c1.pre);
        let body = plan.apply(&c1.body);
        let init = xor_state(seed, key);
        let with = run_ccdfg(&first, &body, &[], n, &init, None).unwrap();
        let without = run_ccdfg(&c1.pre, &c1.body, &[], n, &init, None).unwrap();
        prop_assert_eq!(real(with), real(without));
    }
}

#[test]
fn superstep_counts() {
    for interval in 1..=3 {
        let out = pipeline(&fig1(), interval).unwrap();
        let p = &out.pipelined;
        assert_eq!(p.fullstage.len(), interval);
        let total = p.prologue.len() + p.fullstage.len() + p.epilogue.len();
        assert_eq!(total, out.params.m.div_ceil(interval) * interval + 3);
    }
}

// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::fixtures::{self, l, v};
use crate::ir::{read_set, Microstep, Width};
use crate::textio::parse_state;

fn state(text: &str) -> CcdfgState {
    parse_state(text).unwrap()
}

fn val(s: &CcdfgState, name: &str) -> u64 {
    s.get(name).unwrap_or_else(|| panic!("`{name}` unbound")).bits()
}

/// Straight-line model of the Fig. 1 loop, written against plain integers:
/// `a = (a + 3) ^ mem[p + (i & 7)]; mem[q + i] = a`.
struct Fig1Oracle {
    i: u32,
    a: u32,
    i_next: u32,
    a_next: u32,
    s: u32,
    t: u32,
    mem: BTreeMap<u64, u32>,
}

fn fig1_oracle(mut mem: BTreeMap<u64, u32>, p: u32, q: u32, iterations: u32) -> Fig1Oracle {
    let (mut i, mut a, mut i_next, mut a_next, mut s, mut t) = (0u32, 0u32, 0u32, 0u32, 0u32, 0u32);
    for n in 0..iterations {
        if n > 0 {
            i = i_next;
            a = a_next;
        }
        s = a.wrapping_add(3);
        t = mem[&u64::from(p.wrapping_add(i & 7))];
        i_next = i.wrapping_add(1);
        a_next = s ^ t;
        mem.insert(u64::from(q.wrapping_add(i)), a_next);
    }
    Fig1Oracle {
        i,
        a,
        i_next,
        a_next,
        s,
        t,
        mem,
    }
}

fn fig1_init_mem() -> BTreeMap<u64, u32> {
    [5, 9, 14, 2, 7, 1, 3, 8]
        .into_iter()
        .enumerate()
        .map(|(k, x)| (k as u64, x))
        .collect()
}

fn assert_matches_oracle(s: &CcdfgState, o: &Fig1Oracle) {
    assert_eq!(val(s, "i"), u64::from(o.i));
    assert_eq!(val(s, "a"), u64::from(o.a));
    assert_eq!(val(s, "i'"), u64::from(o.i_next));
    assert_eq!(val(s, "a'"), u64::from(o.a_next));
    assert_eq!(val(s, "s"), u64::from(o.s));
    assert_eq!(val(s, "t"), u64::from(o.t));
    let mem: BTreeMap<u64, u32> = s.memory.iter().map(|(k, x)| (*k, x.bits() as u32)).collect();
    assert_eq!(mem, o.mem);
}

#[test]
fn evaluate_add() {
    let s = state("vars: a=0");
    let e = Expression::binary(BinOp::Add, Operand::Var(v("a")), Operand::Const(3));
    assert_eq!(evaluate_expr(&e, &s).unwrap().bits(), 3);
    let s = state("vars: a=4294967295");
    assert_eq!(evaluate_expr(&e, &s).unwrap().bits(), 2);
}

#[test]
fn evaluate_ops() {
    let s = state("vars: a=6 b=3");
    let ev = |op| {
        evaluate_expr(&Expression::binary(op, Operand::Var(v("a")), Operand::Var(v("b"))), &s)
            .unwrap()
            .bits()
    };
    assert_eq!(ev(BinOp::Sub), 3);
    assert_eq!(ev(BinOp::Mul), 18);
    assert_eq!(ev(BinOp::Xor), 5);
    assert_eq!(ev(BinOp::And), 2);
    assert_eq!(ev(BinOp::Or), 7);
    assert_eq!(ev(BinOp::Shl), 48);
    assert_eq!(ev(BinOp::Lshr), 0);
    assert_eq!(ev(BinOp::Eq), 0);
    assert_eq!(ev(BinOp::Lt), 0);
    let s = state("vars: a=1");
    let shl = Expression::binary(BinOp::Shl, Operand::Var(v("a")), Operand::Const(32));
    assert_eq!(evaluate_expr(&shl, &s).unwrap().bits(), 0);
    let sub = Expression::binary(BinOp::Sub, Operand::Const(0), Operand::Const(1));
    assert_eq!(evaluate_expr(&sub, &s).unwrap().bits(), 0xffff_ffff);
}

#[test]
fn evaluate_memory() {
    let s = state("vars: i=2\nmem: 5=42\nptrs: p=3");
    let gep = Expression::GetElemPtr {
        base: v("p"),
        offset: Box::new(Expression::Var(v("i"))),
    };
    assert_eq!(evaluate_expr(&gep, &s).unwrap().bits(), 5);
    let load = Expression::Load(Box::new(gep));
    assert_eq!(evaluate_expr(&load, &s).unwrap().bits(), 42);
    let miss = Expression::Load(Box::new(Expression::Const(6)));
    assert_eq!(evaluate_expr(&miss, &s), Err(ExecError::UnmappedAddress(6)));
    let bad = Expression::GetElemPtr {
        base: v("r"),
        offset: Box::new(Expression::Const(0)),
    };
    assert_eq!(evaluate_expr(&bad, &s), Err(ExecError::UnknownPointer(v("r"))));
}

#[test]
fn evaluate_unbound() {
    let s = CcdfgState::new(Width::default());
    assert_eq!(
        evaluate_expr(&Expression::Var(v("x")), &s),
        Err(ExecError::UnboundVariable(v("x")))
    );
}

proptest! {
    #[test]
    fn const_is_identity(c in 0u64..=u64::from(u32::MAX)) {
        let s = CcdfgState::new(Width::default());
        prop_assert_eq!(evaluate_expr(&Expression::Const(c), &s).unwrap().bits(), c);
    }
}

fn fig1() -> Ccdfg {
    fixtures::design(fixtures::FIG1)
}

use crate::ir::Ccdfg;

#[test]
fn phi_resolution() {
    let c = fig1();
    let phi_i = c.body[0].microsteps[0].statements()[0].clone();
    let mut s = state("vars: i'=4");
    execute_statement(&phi_i, &mut s, &ExecContext::after(&l("Entry"))).unwrap();
    assert_eq!(val(&s, "i"), 0);
    execute_statement(&phi_i, &mut s, &ExecContext::after(&l("Z"))).unwrap();
    assert_eq!(val(&s, "i"), 4);
    assert_eq!(
        execute_statement(&phi_i, &mut s, &ExecContext::after(&l("Y"))),
        Err(ExecError::PhiUndefined {
            target: v("i"),
            prev: Some(l("Y"))
        })
    );
    assert!(matches!(
        execute_statement(&phi_i, &mut s, &ExecContext::default()),
        Err(ExecError::PhiUndefined { prev: None, .. })
    ));
}

#[test]
fn replace_var_keeps_position() {
    let mut s = state("vars: b=1 a=2");
    execute_statement(
        &Statement::assign(v("b"), Expression::Const(7)),
        &mut s,
        &ExecContext::default(),
    )
    .unwrap();
    execute_statement(
        &Statement::assign(v("c"), Expression::Const(9)),
        &mut s,
        &ExecContext::default(),
    )
    .unwrap();
    let names: Vec<_> = s.bindings().iter().map(|(n, x)| (n.as_str(), x.bits())).collect();
    assert_eq!(names, vec![("b", 7), ("a", 2), ("c", 9)]);
}

#[test]
fn run_block_x() {
    let c = fig1();
    let s = run_block(&c.body[0], &state(""), &ExecContext::after(&l("Entry"))).unwrap();
    assert_eq!(val(&s, "i"), 0);
    assert_eq!(val(&s, "a"), 0);
    assert_eq!(s.bindings().len(), 2);
}

#[test]
fn run_block_self_assign_and_unbound() {
    let step = SchedulingStep::new(
        l("S"),
        vec![Microstep::new(vec![Statement::assign(v("x"), Expression::Var(v("x")))]).unwrap()],
    );
    let s0 = state("vars: x=5");
    assert_eq!(run_block(&step, &s0, &ExecContext::default()).unwrap(), s0);
    assert_eq!(
        run_block(&step, &state(""), &ExecContext::default()),
        Err(ExecError::UnboundVariable(v("x")))
    );
}

#[test]
fn block_set_threading() {
    let s0 = state("vars: z=3");
    assert_eq!(run_block_set(&[], &s0, Some(&l("P"))).unwrap(), s0);

    // the second block's phi sees the first block's label
    let text = "ccdfg-format 1\ndesign sequential\npre:\n  step A\n    micro (x 1)\n  step B\n    micro (y (phi ((10 A) (20 Q))))\nloop:\n  step Q\n    micro (x 2)\npost:\n";
    let c = fixtures::design(text);
    let s = run_block_set(&c.pre, &state(""), None).unwrap();
    assert_eq!(val(&s, "y"), 10);
    assert_eq!(prefix(&c.pre).unwrap(), &l("B"));
}

#[test]
fn prefix_cases() {
    let c = fig1();
    assert_eq!(prefix(&c.body).unwrap(), &l("Z"));
    assert_eq!(prefix(&c.body[..1]).unwrap(), &l("X"));
    assert_eq!(prefix(&[]), Err(ExecError::EmptyRegion));
}

#[test]
fn fig1_iterations_match_oracle() {
    let c = fig1();
    let init = state(fixtures::FIG1_INIT);
    assert_eq!(run_blocks_iters(&c.body, &init, 0, Some(&l("Entry"))).unwrap(), init);
    for n in 1..=10 {
        let s = run_blocks_iters(&c.body, &init, n, Some(&l("Entry"))).unwrap();
        assert_matches_oracle(&s, &fig1_oracle(fig1_init_mem(), 0, 8, n as u32));
        let full = run_ccdfg(&c.pre, &c.body, &c.post, n, &init, Some(&c.entry)).unwrap();
        assert_eq!(full, s);
    }
    // one iteration from Entry: i'=1, a'=(0+3)^mem[0]
    let s = run_blocks_iters(&c.body, &init, 1, Some(&l("Entry"))).unwrap();
    assert_eq!(val(&s, "i'"), 1);
    assert_eq!(val(&s, "a'"), 3 ^ 5);
}

#[test]
fn three_iterations_take_nine_cycles() {
    let c = fig1();
    let mut interp = Interpreter::with_trace();
    let mut s = state(fixtures::FIG1_INIT);
    interp
        .run_ccdfg(&c.pre, &c.body, &c.post, 3, &mut s, Some(&c.entry))
        .unwrap();
    let trace = interp.take_trace().unwrap();
    assert_eq!(trace.len(), 9);
    assert_eq!(interp.cycles(), 9);
    let labels: Vec<_> = trace.entries.iter().map(|e| e.label.as_str()).collect();
    assert_eq!(labels, ["X", "Y", "Z", "X", "Y", "Z", "X", "Y", "Z"]);
    let cycles: Vec<_> = trace.entries.iter().map(|e| e.cycle).collect();
    assert_eq!(cycles, (1..=9).collect::<Vec<_>>());
}

#[test]
fn cycle_accounting_with_pre_and_post() {
    let c = fixtures::design(fixtures::MEMSCALE);
    let init = state("vars: base=0 scale=3\nmem: 0=1 1=2 2=3 3=4 4=5 5=6 6=7 7=8\nptrs: src=0 dst=16");
    // the exit code reads `sum`, which only the loop binds
    for k in 1..5 {
        let mut interp = Interpreter::with_trace();
        let mut s = init.clone();
        interp
            .run_ccdfg(&c.pre, &c.body, &c.post, k, &mut s, Some(&c.entry))
            .unwrap();
        let expected = c.pre.len() + k as usize * c.body.len() + c.post.len();
        assert_eq!(interp.take_trace().unwrap().len(), expected);
    }
    // sum of (j & 7 + 1) * 3 for j in 0..4, stored at dst+0 by the exit code
    let s = run_ccdfg(&c.pre, &c.body, &c.post, 4, &init, Some(&c.entry)).unwrap();
    assert_eq!(val(&s, "total"), 3 * (1 + 2 + 3 + 4));
    assert_eq!(s.memory[&16].bits(), 30);
}

#[test]
fn run_ccdfg_compositions() {
    let c = fixtures::design(fixtures::MEMSCALE);
    let init = state("vars: base=0 scale=3 j=1 sum=5\nmem: 0=1 1=2 2=3 3=4 4=5 5=6 6=7 7=8\nptrs: src=0 dst=16");
    // phi-free body: drop the phi step to get a plain loop
    let body = &c.body[1..];
    for k in 0..4 {
        let lhs = run_ccdfg(&c.pre, body, &[], k, &init, None).unwrap();
        let pre = run_block_set(&c.pre, &init, None).unwrap();
        let rhs = run_blocks_iters(body, &pre, k, Some(prefix(body).unwrap())).unwrap();
        assert_eq!(lhs, rhs);
    }
    assert_eq!(run_ccdfg(&[], body, &[], 0, &init, None).unwrap(), init);

    for k in 1..4 {
        let a = run_ccdfg_k(&c.pre, body, k, &init, None).unwrap();
        let b = run_blocks_iters(body, &run_block_set(&c.pre, &init, None).unwrap(), k, None).unwrap();
        assert_eq!(a, b);
        let next = run_ccdfg_k(&c.pre, body, k + 1, &init, None).unwrap();
        assert_eq!(next, run_blocks_iters(body, &a, 1, None).unwrap());
    }
}

#[test]
fn deterministic() {
    let c = fig1();
    let run = || {
        let mut interp = Interpreter::with_trace();
        let mut s = state(fixtures::FIG1_INIT);
        interp
            .run_ccdfg(&c.pre, &c.body, &c.post, 4, &mut s, Some(&c.entry))
            .unwrap();
        (s, interp.take_trace())
    };
    assert_eq!(run(), run());
}

#[test]
fn trace_records_show_changes() {
    let c = fig1();
    let init = state(fixtures::FIG1_INIT);
    let mut interp = Interpreter::with_trace();
    let mut s = init.clone();
    interp
        .run_ccdfg(&c.pre, &c.body, &c.post, 1, &mut s, Some(&c.entry))
        .unwrap();
    let records = interp.take_trace().unwrap().records(&init);
    assert_eq!(records[0].to_string(), "cycle=1 step=X i=0 a=0");
    assert_eq!(records[2].to_string(), "cycle=3 step=Z mem[8]=6");
}

fn arb_statement() -> impl Strategy<Value = Statement> {
    let var = prop::sample::select(vec!["a", "b", "c", "d", "e"]).prop_map(v);
    let operand = prop_oneof![var.clone().prop_map(Operand::Var), (0u64..16).prop_map(Operand::Const)];
    let op = prop::sample::select(BinOp::ALL.to_vec());
    let addr = (0u64..8).prop_map(|o| Expression::GetElemPtr {
        base: v("p"),
        offset: Box::new(Expression::Const(o)),
    });
    let expr = prop_oneof![
        (op, operand.clone(), operand).prop_map(|(o, a, b)| Expression::binary(o, a, b)),
        var.clone().prop_map(Expression::Var),
        addr.clone().prop_map(|a| Expression::Load(Box::new(a))),
    ];
    prop_oneof![
        3 => (var, expr.clone()).prop_map(|(t, e)| Statement::assign(t, e)),
        1 => (addr, expr).prop_map(|(a, e)| Statement::store(a, e)),
    ]
}

fn full_state(seed: [u64; 5]) -> CcdfgState {
    let mut s = CcdfgState::new(Width::default());
    for (name, x) in ["a", "b", "c", "d", "e"].iter().zip(seed) {
        s.set(v(name), Width::default().wrap(x));
    }
    for addr in 0..8 {
        s.memory
            .insert(addr, Width::default().wrap(seed[0].wrapping_mul(addr + 1)));
    }
    s.pointers.insert(v("p"), 0);
    s
}

proptest! {
    #[test]
    fn frame_property(sts in prop::collection::vec(arb_statement(), 1..5), seed in any::<[u64; 5]>()) {
        let micro: Vec<Microstep> = sts
            .into_iter()
            .map(|st| Microstep::new(vec![st]).unwrap())
            .collect();
        let step = SchedulingStep::new(l("S"), micro);
        let rw = read_set(&step);
        let before = full_state(seed);
        let after = run_block(&step, &before, &ExecContext::default()).unwrap();
        for (name, value) in after.bindings() {
            if !rw.writes.contains(name) {
                prop_assert_eq!(before.get(name.as_str()), Some(*value));
            }
        }
        if !rw.mem_writes {
            prop_assert_eq!(&before.memory, &after.memory);
        }
        prop_assert_eq!(&before.pointers, &after.pointers);
    }
}

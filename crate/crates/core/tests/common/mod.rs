// SPDX-License-Identifier: Apache-2.0

//! Random sequential designs for property tests.

use ccdfg::ir::{
    validate_pipelinable, BinOp, BlockLabel, Ccdfg, Expression, Microstep, Operand, PhiChoice, SchedulingStep,
    Statement, VarName,
};
use proptest::prelude::*;

const VARS: [&str; 5] = ["a", "b", "c", "d", "e"];

fn v(s: &str) -> VarName {
    VarName::new(s).unwrap()
}

fn l(s: &str) -> BlockLabel {
    BlockLabel::new(s).unwrap()
}

fn var() -> impl Strategy<Value = VarName> {
    prop::sample::select(VARS.to_vec()).prop_map(v)
}

fn operand() -> impl Strategy<Value = Operand> {
    prop_oneof![3 => var().prop_map(Operand::Var), 1 => (0u64..16).prop_map(Operand::Const)]
}

fn masked(x: VarName) -> Expression {
    Expression::GetElemPtr {
        base: v("p"),
        offset: Box::new(Expression::binary(BinOp::And, Operand::Var(x), Operand::Const(7))),
    }
}

fn statement() -> impl Strategy<Value = Statement> {
    prop_oneof![
        6 => (var(), prop::sample::select(BinOp::ALL.to_vec()), operand(), operand())
            .prop_map(|(t, op, a, b)| Statement::assign(t, Expression::binary(op, a, b))),
        1 => (var(), var()).prop_map(|(t, x)| Statement::assign(t, Expression::Load(Box::new(masked(x))))),
        1 => (var(), var()).prop_map(|(x, y)| Statement::store(masked(x), Expression::Var(y))),
    ]
}

fn microstep() -> impl Strategy<Value = Microstep> {
    prop::collection::vec(statement(), 1..3).prop_filter_map("double write", |s| Microstep::new(s).ok())
}

pub fn design() -> impl Strategy<Value = Ccdfg> {
    let steps = prop::collection::vec(prop::collection::vec(microstep(), 1..3), 1..6);
    let phis = prop::collection::vec((var(), 0u64..16, var()), 0..3);
    (steps, phis).prop_filter_map("invalid design", |(steps, phis)| {
        let n = steps.len();
        let back = l(&format!("S{}", n - 1));
        let mut body: Vec<SchedulingStep> = steps
            .into_iter()
            .enumerate()
            .map(|(i, ms)| SchedulingStep::new(l(&format!("S{i}")), ms))
            .collect();
        let phi_stmts: Vec<Statement> = phis
            .into_iter()
            .filter_map(|(t, init, from)| {
                Statement::phi(
                    t,
                    PhiChoice {
                        value: Expression::Const(init),
                        pred: l("Entry"),
                    },
                    PhiChoice {
                        value: Expression::Var(from),
                        pred: back.clone(),
                    },
                )
                .ok()
            })
            .collect();
        if !phi_stmts.is_empty() {
            body[0].microsteps.insert(0, Microstep::new(phi_stmts).ok()?);
        }
        let c = Ccdfg {
            entry: l("Entry"),
            pre: Vec::new(),
            body,
            post: Vec::new(),
        };
        validate_pipelinable(&c).is_empty().then_some(c)
    })
}

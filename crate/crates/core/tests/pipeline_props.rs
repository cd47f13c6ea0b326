// SPDX-License-Identifier: Apache-2.0

//! Random loops: every interval either reports a hazard or yields a pipeline
//! both checkers accept.

mod common;

use ccdfg::equiv::{sweep, CheckKind, CheckOptions, Subject, SweepConfig};
use ccdfg::synth::{pipeline, SynthesisError};
use common::design;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pipelines_are_sound(c in design(), seed in any::<u64>()) {
        let len = c.body.len();
        for interval in 1..=len {
            let out = match pipeline(&c, interval) {
                Ok(out) => out,
                Err(SynthesisError::HazardConflict { .. }) if interval < len => continue,
                Err(e) => return Err(TestCaseError::fail(format!("I = {interval}: {e}"))),
            };
            let cfg = SweepConfig { k_max: 4, samples: 3, seed, ..SweepConfig::default() };
            for kind in [CheckKind::Correctness, CheckKind::Invariant] {
                let reports = sweep(&Subject::from_output(&out), kind, &cfg, &CheckOptions::default())
                    .map_err(|e| TestCaseError::fail(format!("I = {interval}: {e}")))?;
                if let Some(r) = reports.iter().find(|r| !r.passed) {
                    return Err(TestCaseError::fail(format!("I = {interval}: {}", r.line())));
                }
            }
        }
    }
}

// SPDX-License-Identifier: Apache-2.0

//! Builds a C program against the generated header and the static library.

use std::path::{Path, PathBuf};
use std::process::Command;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let here = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libccdfg_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let exe = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("ccdfg_smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-I"])
        .arg(here.join("include"))
        .arg(here.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let corpus = here.join("../core/corpus");
    let out = Command::new(&exe)
        .arg(corpus.join("fig1.ccdfg"))
        .arg(corpus.join("fig1_init.cstate"))
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout.trim(), "interval=1 m=2 depth=3 cycles=5 mem10=13 checks=40/40");
}

// SPDX-License-Identifier: Apache-2.0

//! C ABI over the `ccdfg` library.
//!
//! Designs, pipelines and states cross the boundary as opaque handles that
//! the caller frees with the matching `_free` function. Every fallible call
//! returns a [`CcdfgStatus`]; on failure [`ccdfg_last_error`] describes what
//! went wrong on the calling thread. Strings handed out by the library are
//! released with [`ccdfg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ccdfg::equiv::{self, CheckKind, CheckOptions, Subject, SweepConfig};
use ccdfg::interp::{CcdfgState as State, Interpreter};
use ccdfg::ir::{validate_pipelinable, validate_pipelined, Width};
use ccdfg::synth::{self, PipelineOutput, SynthesisError};
use ccdfg::textio::{self, CcdfgDocument, Design};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcdfgStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    Invalid = 4,
    ExecError = 5,
    HazardConflict = 6,
    SynthesisError = 7,
    InvalidParams = 8,
    CheckFailed = 9,
    NotFound = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcdfgCheckKind {
    Correctness = 0,
    Invariant = 1,
}

/// Sweep settings for [`ccdfg_pipeline_check`]. `width_bits` of 0 means 64.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CcdfgCheckConfig {
    pub k_max: u64,
    pub samples: u64,
    pub seed: u64,
    pub mem_size: u64,
    pub width_bits: u32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CcdfgCheckResult {
    pub passed: u64,
    pub total: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CcdfgPipelineParams {
    pub interval: usize,
    pub m: usize,
    pub depth: usize,
}

/// A parsed `.ccdfg` document, sequential or pipelined.
pub struct CcdfgDesign(CcdfgDocument);

/// A pipelined design together with the sequential design it came from.
pub struct CcdfgPipeline(PipelineOutput);

/// Variable bindings, memory and pointers.
pub struct CcdfgState(State);

struct Fail {
    status: CcdfgStatus,
    message: String,
}

impl Fail {
    fn new(status: CcdfgStatus, message: impl Into<String>) -> Self {
        Fail {
            status,
            message: message.into(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CcdfgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CcdfgStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(fail.message);
            fail.status
        }
        Err(_) => {
            set_last_error("Panic: internal error".into());
            CcdfgStatus::Panic
        }
    }
}

unsafe fn arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail::new(CcdfgStatus::NullArgument, format!("NullArgument: `{name}` is null")))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a CStr, Fail> {
    if p.is_null() {
        return Err(Fail::new(
            CcdfgStatus::NullArgument,
            format!("NullArgument: `{name}` is null"),
        ));
    }
    Ok(CStr::from_ptr(p))
}

unsafe fn utf8<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    c_str(p, name)?
        .to_str()
        .map_err(|_| Fail::new(CcdfgStatus::InvalidUtf8, format!("InvalidUtf8: `{name}` is not UTF-8")))
}

unsafe fn put<T>(out: *mut T, value: T, name: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::new(
            CcdfgStatus::NullArgument,
            format!("NullArgument: `{name}` is null"),
        ));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c =
        CString::new(s).map_err(|_| Fail::new(CcdfgStatus::InvalidParams, "InvalidParams: text holds a nul byte"))?;
    put(out, c.into_raw(), "out")
}

fn width(bits: u32) -> Result<Width, Fail> {
    if bits == 0 {
        return Ok(Width::default());
    }
    Width::new(bits).map_err(|e| Fail::new(CcdfgStatus::InvalidParams, format!("InvalidParams: {e}")))
}

fn synthesis_fail(e: &SynthesisError) -> Fail {
    let status = match e {
        SynthesisError::HazardConflict { .. } => CcdfgStatus::HazardConflict,
        SynthesisError::InvalidParams { .. } => CcdfgStatus::InvalidParams,
        SynthesisError::NameCollision { .. } | SynthesisError::NotPipelinable { .. } => CcdfgStatus::SynthesisError,
    };
    Fail::new(status, format!("{}: {e}", e.kind()))
}

/// Message for the most recent failing call on this thread, or null.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ccdfg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` is null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a `.ccdfg` document.
///
/// # Safety
/// `text` is a nul-terminated string; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_design_parse(text: *const c_char, out: *mut *mut CcdfgDesign) -> CcdfgStatus {
    guard(|| {
        let bytes = c_str(text, "text")?.to_bytes();
        let doc = textio::parse_ccdfg_bytes(bytes)
            .map_err(|e| Fail::new(CcdfgStatus::ParseError, format!("{}: {e}", e.kind())))?;
        put(out, Box::into_raw(Box::new(CcdfgDesign(doc))), "out")
    })
}

/// # Safety
/// `d` is null or a live design handle.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_design_free(d: *mut CcdfgDesign) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// 1 for a pipelined document, 0 for a sequential one.
///
/// # Safety
/// `d` is a live design handle.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_design_is_pipelined(d: *const CcdfgDesign) -> i32 {
    d.as_ref()
        .map_or(0, |d| i32::from(matches!(d.0.design, Design::Pipelined(_))))
}

/// Checks the structural rules. Returns `Invalid` with one diagnostic per
/// line in the last error when any rule is broken.
///
/// # Safety
/// `d` is a live design handle.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_design_validate(d: *const CcdfgDesign) -> CcdfgStatus {
    guard(|| {
        let d = arg(d, "design")?;
        let diagnostics = match &d.0.design {
            Design::Sequential(c) => validate_pipelinable(c),
            Design::Pipelined(p) => validate_pipelined(p),
        };
        if diagnostics.is_empty() {
            return Ok(());
        }
        let lines: Vec<String> = diagnostics.iter().map(|d| d.to_string()).collect();
        Err(Fail::new(CcdfgStatus::Invalid, lines.join("\n")))
    })
}

/// Writes the canonical text of a design; free it with `ccdfg_string_free`.
///
/// # Safety
/// `d` is a live design handle; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_design_serialize(d: *const CcdfgDesign, out: *mut *mut c_char) -> CcdfgStatus {
    guard(|| {
        let d = arg(d, "design")?;
        put_string(out, textio::serialize_ccdfg(&d.0))
    })
}

/// Parses a `.cstate` document at `width_bits` (0 means 64).
///
/// # Safety
/// `text` is a nul-terminated string; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_state_parse(
    text: *const c_char,
    width_bits: u32,
    out: *mut *mut CcdfgState,
) -> CcdfgStatus {
    guard(|| {
        let text = utf8(text, "text")?;
        let s = textio::parse_state_with_width(text, width(width_bits)?)
            .map_err(|e| Fail::new(CcdfgStatus::ParseError, format!("{}: {e}", e.kind())))?;
        put(out, Box::into_raw(Box::new(CcdfgState(s))), "out")
    })
}

/// # Safety
/// `s` is null or a live state handle.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_state_free(s: *mut CcdfgState) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` is a live state handle; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_state_serialize(s: *const CcdfgState, out: *mut *mut c_char) -> CcdfgStatus {
    guard(|| {
        let s = arg(s, "state")?;
        put_string(out, textio::serialize_state(&equiv::in_order(&s.0)))
    })
}

/// Value bound to variable `name`; `NotFound` when unbound.
///
/// # Safety
/// `s` is a live state handle, `name` a nul-terminated string and `out`
/// points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_state_var(s: *const CcdfgState, name: *const c_char, out: *mut u64) -> CcdfgStatus {
    guard(|| {
        let s = arg(s, "state")?;
        let name = utf8(name, "name")?;
        let v =
            s.0.get(name)
                .ok_or_else(|| Fail::new(CcdfgStatus::NotFound, format!("NotFound: `{name}` is unbound")))?;
        put(out, v.bits(), "out")
    })
}

/// Memory word at `addr`; `NotFound` when unmapped.
///
/// # Safety
/// `s` is a live state handle; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_state_mem(s: *const CcdfgState, addr: u64, out: *mut u64) -> CcdfgStatus {
    guard(|| {
        let s = arg(s, "state")?;
        let v =
            s.0.memory
                .get(&addr)
                .ok_or_else(|| Fail::new(CcdfgStatus::NotFound, format!("NotFound: address {addr} is unmapped")))?;
        put(out, v.bits(), "out")
    })
}

/// Runs `iterations` source iterations of a design from `init`, as the
/// `run` command does. `out_cycles` may be null.
///
/// # Safety
/// `d` and `init` are live handles; `out_state` points to writable storage;
/// `out_cycles` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_run(
    d: *const CcdfgDesign,
    init: *const CcdfgState,
    iterations: u64,
    out_state: *mut *mut CcdfgState,
    out_cycles: *mut u64,
) -> CcdfgStatus {
    guard(|| {
        let doc = &arg(d, "design")?.0;
        let init = arg(init, "init")?;
        if out_state.is_null() {
            return Err(Fail::new(
                CcdfgStatus::NullArgument,
                "NullArgument: `out_state` is null",
            ));
        }
        let body_runs = doc
            .body_iterations(iterations)
            .map_err(|e| Fail::new(CcdfgStatus::InvalidParams, format!("InvalidParams: {e}")))?;
        let c = doc.regions();
        let mut state = init.0.clone();
        let mut interp = Interpreter::new();
        interp
            .run_ccdfg(
                &c.pre,
                &c.body,
                &c.post,
                body_runs,
                &mut state,
                doc.start_label().as_ref(),
            )
            .map_err(|e| Fail::new(CcdfgStatus::ExecError, format!("{}: {e}", e.kind())))?;
        if !out_cycles.is_null() {
            out_cycles.write(interp.cycles());
        }
        put(out_state, Box::into_raw(Box::new(CcdfgState(state))), "out_state")
    })
}

/// Pipelines a sequential design at initiation interval `interval`.
///
/// # Safety
/// `d` is a live design handle; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_pipeline(
    d: *const CcdfgDesign,
    interval: usize,
    out: *mut *mut CcdfgPipeline,
) -> CcdfgStatus {
    guard(|| {
        let c = match &arg(d, "design")?.0.design {
            Design::Sequential(c) => c,
            Design::Pipelined(_) => {
                return Err(Fail::new(
                    CcdfgStatus::InvalidParams,
                    "InvalidParams: design is already pipelined",
                ))
            }
        };
        let p = synth::pipeline(c, interval).map_err(|e| synthesis_fail(&e))?;
        put(out, Box::into_raw(Box::new(CcdfgPipeline(p))), "out")
    })
}

/// # Safety
/// `p` is null or a live pipeline handle.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_pipeline_free(p: *mut CcdfgPipeline) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` is a live pipeline handle; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_pipeline_params(p: *const CcdfgPipeline, out: *mut CcdfgPipelineParams) -> CcdfgStatus {
    guard(|| {
        let params = arg(p, "pipeline")?.0.params;
        put(
            out,
            CcdfgPipelineParams {
                interval: params.interval,
                m: params.m,
                depth: params.depth,
            },
            "out",
        )
    })
}

/// The pipelined design as a new design handle, meta included.
///
/// # Safety
/// `p` is a live pipeline handle; `out` points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_pipeline_design(p: *const CcdfgPipeline, out: *mut *mut CcdfgDesign) -> CcdfgStatus {
    guard(|| {
        let doc = arg(p, "pipeline")?.0.document();
        put(out, Box::into_raw(Box::new(CcdfgDesign(doc))), "out")
    })
}

#[no_mangle]
pub extern "C" fn ccdfg_check_config_default() -> CcdfgCheckConfig {
    let d = SweepConfig::default();
    CcdfgCheckConfig {
        k_max: d.k_max,
        samples: d.samples as u64,
        seed: d.seed,
        mem_size: d.mem_size,
        width_bits: d.width.bits(),
    }
}

/// Sweeps a checker over k = 1..=k_max and seeded random states. Returns
/// `CheckFailed` with the first failing report in the last error when any
/// check fails; `out` is filled either way. A null `config` uses the
/// defaults.
///
/// # Safety
/// `p` is a live pipeline handle; `config` is null or readable; `out`
/// points to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ccdfg_pipeline_check(
    p: *const CcdfgPipeline,
    kind: CcdfgCheckKind,
    config: *const CcdfgCheckConfig,
    out: *mut CcdfgCheckResult,
) -> CcdfgStatus {
    guard(|| {
        let p = &arg(p, "pipeline")?.0;
        if out.is_null() {
            return Err(Fail::new(CcdfgStatus::NullArgument, "NullArgument: `out` is null"));
        }
        let c = config.as_ref().copied().unwrap_or_else(|| ccdfg_check_config_default());
        let cfg = SweepConfig {
            k_max: c.k_max,
            samples: usize::try_from(c.samples)
                .map_err(|_| Fail::new(CcdfgStatus::InvalidParams, "InvalidParams: too many samples"))?,
            seed: c.seed,
            mem_size: c.mem_size,
            width: width(c.width_bits)?,
        };
        let kind = match kind {
            CcdfgCheckKind::Correctness => CheckKind::Correctness,
            CcdfgCheckKind::Invariant => CheckKind::Invariant,
        };
        let reports = equiv::sweep(&Subject::from_output(p), kind, &cfg, &CheckOptions::default())
            .map_err(|e| Fail::new(CcdfgStatus::ExecError, format!("{}: {e}", e.kind())))?;
        let passed = reports.iter().filter(|r| r.passed).count() as u64;
        out.write(CcdfgCheckResult {
            passed,
            total: reports.len() as u64,
        });
        match reports.iter().find(|r| !r.passed) {
            Some(r) => Err(Fail::new(CcdfgStatus::CheckFailed, r.line())),
            None => Ok(()),
        }
    })
}

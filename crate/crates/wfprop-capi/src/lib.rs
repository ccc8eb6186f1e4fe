//! C ABI over the wfprop engine: opaque handles, status codes, and a
//! thread-local last-error message. All returned pointers are owned by the
//! library and released with the matching `_free`.

use libc::c_char;
use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::ptr;
use std::time::Duration;
use wfprop::engine::Propagators;
use wfprop::program::{Program, ProgramClass};
use wfprop::solver::{self, Heuristic, SolverConfig};

/// Status codes returned by fallible functions.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum WfpropStatus {
    Ok = 0,
    ParseError = 1,
    InvalidArgument = 2,
    GuardExceeded = 3,
    /// Propagation under the given assumptions conflicted.
    Conflict = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let cstr = CString::new(msg).unwrap_or_else(|_| {
        CString::new("error message contained an interior nul byte").expect("static message")
    });
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(cstr));
}

/// Message for the most recent failure on this thread, or null. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wfprop_last_error() -> *const c_char {
    LAST_ERROR.with(|e| {
        e.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(ptr::null())
    })
}

/// An immutable parsed program.
pub struct WfpropProgram {
    inner: Program,
}

/// A finished solve: answer sets and statistics.
pub struct WfpropResult {
    answers: Vec<CString>,
    branches: u64,
    conflicts: u64,
    complete: bool,
}

/// # Safety
/// `text` must be a valid nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wfprop_program_parse(
    text: *const c_char,
    out: *mut *mut WfpropProgram,
) -> WfpropStatus {
    if text.is_null() || out.is_null() {
        set_error("null argument".into());
        return WfpropStatus::InvalidArgument;
    }
    let text = match CStr::from_ptr(text).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("program text is not valid UTF-8".into());
            return WfpropStatus::InvalidArgument;
        }
    };
    match wfprop::parse_program(text) {
        Ok(program) => {
            *out = Box::into_raw(Box::new(WfpropProgram { inner: program }));
            WfpropStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            WfpropStatus::ParseError
        }
    }
}

/// # Safety
/// `program` must come from `wfprop_program_parse` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn wfprop_program_free(program: *mut WfpropProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// # Safety
/// `program` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wfprop_program_atom_count(program: *const WfpropProgram) -> usize {
    program.as_ref().map_or(0, |p| p.inner.n_atoms())
}

/// # Safety
/// `program` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wfprop_program_body_count(program: *const WfpropProgram) -> usize {
    program.as_ref().map_or(0, |p| p.inner.n_bodies())
}

/// # Safety
/// `program` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wfprop_program_rule_count(program: *const WfpropProgram) -> usize {
    program.as_ref().map_or(0, |p| p.inner.rules().len())
}

/// 0 = unary, 1 = component-unary, 2 = general, -1 = bad handle.
///
/// # Safety
/// `program` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wfprop_program_class(program: *const WfpropProgram) -> i32 {
    match program.as_ref() {
        Some(p) => match p.inner.class() {
            ProgramClass::Unary => 0,
            ProgramClass::ComponentUnary => 1,
            ProgramClass::General => 2,
        },
        None => -1,
    }
}

fn parse_props_arg(props: *const c_char) -> Result<Propagators, WfpropStatus> {
    if props.is_null() {
        return Ok(Propagators::up_fl());
    }
    let s = unsafe { CStr::from_ptr(props) }.to_str().map_err(|_| {
        set_error("propagator list is not valid UTF-8".into());
        WfpropStatus::InvalidArgument
    })?;
    Propagators::parse(s).map_err(|e| {
        set_error(e.to_string());
        WfpropStatus::InvalidArgument
    })
}

/// Enumerate answer sets. `props` is a comma list (`"up,fl,dom"`; null means
/// `up,fl`), `enum_limit` 0 enumerates all, `time_limit_ms` 0 means no
/// budget.
///
/// # Safety
/// `program` must be a live handle, `out` a valid pointer, `props` null or a
/// valid nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn wfprop_solve(
    program: *const WfpropProgram,
    props: *const c_char,
    enum_limit: usize,
    time_limit_ms: u64,
    seed: u64,
    out: *mut *mut WfpropResult,
) -> WfpropStatus {
    let Some(program) = program.as_ref() else {
        set_error("null program handle".into());
        return WfpropStatus::InvalidArgument;
    };
    if out.is_null() {
        set_error("null output pointer".into());
        return WfpropStatus::InvalidArgument;
    }
    let props = match parse_props_arg(props) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let config = SolverConfig {
        props,
        heuristic: Heuristic::LowestIndexTrueFirst,
        enum_limit: (enum_limit > 0).then_some(enum_limit),
        time_budget: (time_limit_ms > 0).then(|| Duration::from_millis(time_limit_ms)),
        seed,
    };
    let result = solver::solve(&program.inner, &config, &[]);
    let answers = result
        .answer_set_names(&program.inner)
        .into_iter()
        .map(|names| CString::new(names.join(" ")).expect("atom names contain no nul bytes"))
        .collect();
    *out = Box::into_raw(Box::new(WfpropResult {
        answers,
        branches: result.stats.branches,
        conflicts: result.stats.conflicts,
        complete: result.complete,
    }));
    WfpropStatus::Ok
}

/// # Safety
/// `result` must come from `wfprop_solve` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn wfprop_result_free(result: *mut WfpropResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wfprop_result_answer_count(result: *const WfpropResult) -> usize {
    result.as_ref().map_or(0, |r| r.answers.len())
}

/// Space-joined sorted atom names of answer set `index`, or null. The string
/// is owned by the result handle.
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wfprop_result_answer(
    result: *const WfpropResult,
    index: usize,
) -> *const c_char {
    result
        .as_ref()
        .and_then(|r| r.answers.get(index))
        .map(|s| s.as_ptr())
        .unwrap_or(ptr::null())
}

/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wfprop_result_branches(result: *const WfpropResult) -> u64 {
    result.as_ref().map_or(0, |r| r.branches)
}

/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wfprop_result_conflicts(result: *const WfpropResult) -> u64 {
    result.as_ref().map_or(0, |r| r.conflicts)
}

/// Whether enumeration ran to exhaustion (no limit or budget cut it short).
///
/// # Safety
/// `result` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn wfprop_result_complete(result: *const WfpropResult) -> bool {
    result.as_ref().is_some_and(|r| r.complete)
}

/// Root propagation fixpoint as a newline-joined listing (one literal with
/// its propagator tag per line), written to `*out` as a malloc-style string
/// released with `wfprop_string_free`. `assume` is a comma list like
/// `"t:a,f:b"` (null for none). Returns `Conflict` when propagation fails;
/// `*out` then holds the conflict description.
///
/// # Safety
/// `program` must be a live handle, `out` valid, strings nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn wfprop_propagate(
    program: *const WfpropProgram,
    props: *const c_char,
    assume: *const c_char,
    out: *mut *mut c_char,
) -> WfpropStatus {
    let Some(program) = program.as_ref() else {
        set_error("null program handle".into());
        return WfpropStatus::InvalidArgument;
    };
    if out.is_null() {
        set_error("null output pointer".into());
        return WfpropStatus::InvalidArgument;
    }
    let props = match parse_props_arg(props) {
        Ok(p) => p,
        Err(status) => return status,
    };
    let mut assumptions = Vec::new();
    if !assume.is_null() {
        let s = match CStr::from_ptr(assume).to_str() {
            Ok(s) => s,
            Err(_) => {
                set_error("assumption list is not valid UTF-8".into());
                return WfpropStatus::InvalidArgument;
            }
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (positive, name) = match part.split_once(':') {
                Some(("t", name)) => (true, name.trim()),
                Some(("f", name)) => (false, name.trim()),
                _ => {
                    set_error(format!(
                        "bad assumption '{part}' (expected t:atom or f:atom)"
                    ));
                    return WfpropStatus::InvalidArgument;
                }
            };
            let Some(atom) = program.inner.find_atom(name) else {
                set_error(format!("unknown atom '{name}'"));
                return WfpropStatus::InvalidArgument;
            };
            assumptions.push(wfprop::Literal {
                var: wfprop::Var::Atom(atom),
                positive,
            });
        }
    }
    let (text, status) = match solver::root_fixpoint(&program.inner, props, &assumptions) {
        Ok(eng) => (eng.trail_lines(false).join("\n"), WfpropStatus::Ok),
        Err((eng, conflict)) => (eng.conflict_display(&conflict), WfpropStatus::Conflict),
    };
    let cstring = CString::new(text).expect("listing contains no nul bytes");
    *out = cstring.into_raw();
    status
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn wfprop_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

//! Exercises the exported C ABI functions through the Rust side.

use std::ffi::CStr;
use std::ptr;
use wfprop_capi::*;

const EXAMPLE_1: &std::ffi::CStr =
    c"a :- not b.\nb :- not a.\nc :- d.\nd :- c.\ne :- f.\nf :- e.\nc :- a.\ne :- not a.";

unsafe fn parse(text: &std::ffi::CStr) -> *mut WfpropProgram {
    let mut out = ptr::null_mut();
    let status = wfprop_program_parse(text.as_ptr(), &mut out);
    assert!(matches!(status, WfpropStatus::Ok));
    out
}

#[test]
fn parse_and_inspect() {
    unsafe {
        let p = parse(EXAMPLE_1);
        assert_eq!(wfprop_program_atom_count(p), 6);
        assert_eq!(wfprop_program_body_count(p), 7);
        assert_eq!(wfprop_program_rule_count(p), 8);
        assert_eq!(wfprop_program_class(p), 0);
        wfprop_program_free(p);
    }
}

#[test]
fn parse_error_reported() {
    unsafe {
        let mut out = ptr::null_mut();
        let status = wfprop_program_parse(c"p :- .".as_ptr(), &mut out);
        assert!(matches!(status, WfpropStatus::ParseError));
        let msg = CStr::from_ptr(wfprop_last_error()).to_str().unwrap();
        assert!(msg.contains("line 1"));
    }
}

#[test]
fn solve_round_trip() {
    unsafe {
        let p = parse(EXAMPLE_1);
        let mut result = ptr::null_mut();
        let status = wfprop_solve(p, c"up,fl,dom".as_ptr(), 0, 0, 0, &mut result);
        assert!(matches!(status, WfpropStatus::Ok));
        assert_eq!(wfprop_result_answer_count(result), 2);
        let first = CStr::from_ptr(wfprop_result_answer(result, 0))
            .to_str()
            .unwrap();
        assert_eq!(first, "a c d");
        assert!(wfprop_result_complete(result));
        assert!(wfprop_result_answer(result, 5).is_null());
        wfprop_result_free(result);
        wfprop_program_free(p);
    }
}

#[test]
fn propagate_with_assumption() {
    unsafe {
        let p = parse(EXAMPLE_1);
        let mut out = ptr::null_mut();
        let status = wfprop_propagate(p, c"up,fl,dom".as_ptr(), c"t:c".as_ptr(), &mut out);
        assert!(matches!(status, WfpropStatus::Ok));
        let listing = CStr::from_ptr(out).to_str().unwrap();
        assert!(listing.contains("Ta (dom)"));
        wfprop_string_free(out);
        wfprop_program_free(p);
    }
}

#[test]
fn propagate_conflict_status() {
    unsafe {
        let p = parse(c"a :- not a.");
        let mut out = ptr::null_mut();
        let status = wfprop_propagate(p, ptr::null(), c"t:a".as_ptr(), &mut out);
        assert!(matches!(status, WfpropStatus::Conflict));
        let msg = CStr::from_ptr(out).to_str().unwrap();
        assert!(msg.contains("conflict"));
        wfprop_string_free(out);
        wfprop_program_free(p);
    }
}

#[test]
fn invalid_props_rejected() {
    unsafe {
        let p = parse(c"p.");
        let mut result = ptr::null_mut();
        let status = wfprop_solve(p, c"up,dom".as_ptr(), 0, 0, 0, &mut result);
        assert!(matches!(status, WfpropStatus::InvalidArgument));
        wfprop_program_free(p);
    }
}

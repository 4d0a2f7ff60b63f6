//! C ABI for the tgalg library.
//!
//! Graphs travel as opaque handles; analysis results travel as JSON
//! strings in the same schema the CLI emits with `--format json`.
//! Every fallible call returns a status code and leaves a thread-local
//! error message readable through [`tgalg_last_error`].
//!
//! Ownership rules: handles from `tgalg_graph_load_*` are released with
//! `tgalg_graph_free`; strings written to an out-pointer are released
//! with `tgalg_string_free`. The pointer returned by `tgalg_last_error`
//! is borrowed and only valid until the next failing call on the same
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::path::PathBuf;

use num_complex::Complex64;
use tgalg::cli::{decide_report, shift_analyze_report, validate_report};
use tgalg::error::Error;
use tgalg::finiteness::{decide, Verdict};
use tgalg::graph::{load_graph_path, load_graph_str, TopGraph};

/// Success.
pub const TGALG_OK: c_int = 0;
/// A null or otherwise unusable argument.
pub const TGALG_ERR_ARGUMENT: c_int = 2;
/// Input rejected: unreadable file, schema violation, failed precondition.
pub const TGALG_ERR_INPUT: c_int = 3;
/// Internal invariant failure.
pub const TGALG_ERR_INTERNAL: c_int = 4;

/// Verdict codes for `tgalg_decide_finiteness_json`.
pub const TGALG_VERDICT_CONSISTENT_WITH_FINITE: c_int = 0;
pub const TGALG_VERDICT_INFINITE: c_int = 1;
pub const TGALG_VERDICT_INCONCLUSIVE: c_int = 2;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn code_for(err: &Error) -> c_int {
    match err {
        Error::Internal(_) => TGALG_ERR_INTERNAL,
        _ => TGALG_ERR_INPUT,
    }
}

fn fail(err: &Error) -> c_int {
    set_error(&err.to_string());
    code_for(err)
}

fn fail_argument(message: &str) -> c_int {
    set_error(message);
    TGALG_ERR_ARGUMENT
}

/// An opaque graph handle.
pub struct TgalgGraph {
    inner: TopGraph,
}

unsafe fn write_string(out: *mut *mut c_char, body: String) -> c_int {
    match CString::new(body) {
        Ok(s) => {
            unsafe { *out = s.into_raw() };
            TGALG_OK
        }
        Err(_) => {
            set_error("result contained an interior NUL byte");
            TGALG_ERR_INTERNAL
        }
    }
}

/// Message describing the most recent failure on this thread. Borrowed;
/// valid until the next failing call. Never null.
#[no_mangle]
pub extern "C" fn tgalg_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses a graph document from a NUL-terminated TOML string.
///
/// # Safety
/// `text` must point to a valid NUL-terminated string and `out` to a
/// writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn tgalg_graph_load_str(
    text: *const c_char,
    out: *mut *mut TgalgGraph,
) -> c_int {
    if text.is_null() || out.is_null() {
        return fail_argument("tgalg_graph_load_str: null argument");
    }
    let text = match unsafe { CStr::from_ptr(text) }.to_str() {
        Ok(t) => t,
        Err(_) => return fail_argument("tgalg_graph_load_str: text is not UTF-8"),
    };
    match load_graph_str(text) {
        Ok(graph) => {
            unsafe { *out = Box::into_raw(Box::new(TgalgGraph { inner: graph })) };
            TGALG_OK
        }
        Err(e) => fail(&e),
    }
}

/// Loads a graph document from a file path.
///
/// # Safety
/// `path` must point to a valid NUL-terminated string and `out` to a
/// writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn tgalg_graph_load_path(
    path: *const c_char,
    out: *mut *mut TgalgGraph,
) -> c_int {
    if path.is_null() || out.is_null() {
        return fail_argument("tgalg_graph_load_path: null argument");
    }
    let path = match unsafe { CStr::from_ptr(path) }.to_str() {
        Ok(p) => PathBuf::from(p),
        Err(_) => return fail_argument("tgalg_graph_load_path: path is not UTF-8"),
    };
    match load_graph_path(&path) {
        Ok(graph) => {
            unsafe { *out = Box::into_raw(Box::new(TgalgGraph { inner: graph })) };
            TGALG_OK
        }
        Err(e) => fail(&e),
    }
}

/// Releases a graph handle. Null is ignored.
///
/// # Safety
/// `graph` must be a handle from `tgalg_graph_load_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tgalg_graph_free(graph: *mut TgalgGraph) {
    if !graph.is_null() {
        drop(unsafe { Box::from_raw(graph) });
    }
}

/// Number of vertices; 0 for a null handle.
///
/// # Safety
/// `graph` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn tgalg_graph_vertex_count(graph: *const TgalgGraph) -> usize {
    if graph.is_null() {
        return 0;
    }
    unsafe { &*graph }.inner.vertex_count()
}

/// Number of edges; 0 for a null handle.
///
/// # Safety
/// `graph` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn tgalg_graph_edge_count(graph: *const TgalgGraph) -> usize {
    if graph.is_null() {
        return 0;
    }
    unsafe { &*graph }.inner.edge_count()
}

/// Structural validation report as JSON.
///
/// # Safety
/// `graph` must be a live handle; `out_json` must be writable. On
/// success the caller owns the string and frees it with
/// `tgalg_string_free`.
#[no_mangle]
pub unsafe extern "C" fn tgalg_validate_json(
    graph: *const TgalgGraph,
    out_json: *mut *mut c_char,
) -> c_int {
    if graph.is_null() || out_json.is_null() {
        return fail_argument("tgalg_validate_json: null argument");
    }
    let g = &unsafe { &*graph }.inner;
    let report = validate_report(g);
    match serde_json::to_string_pretty(&report) {
        Ok(body) => unsafe { write_string(out_json, body) },
        Err(e) => {
            set_error(&e.to_string());
            TGALG_ERR_INTERNAL
        }
    }
}

/// Runs the finiteness decision. `eps` points to `eps_len` positive
/// reals (may be null when `eps_len` is 0 and `exact` is nonzero).
/// Writes the JSON report to `out_json` and, when `out_verdict` is not
/// null, one of the `TGALG_VERDICT_*` codes.
///
/// # Safety
/// `graph` must be a live handle; `eps` must point to `eps_len` readable
/// doubles when non-null; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tgalg_decide_finiteness_json(
    graph: *const TgalgGraph,
    eps: *const f64,
    eps_len: usize,
    exact: bool,
    out_json: *mut *mut c_char,
    out_verdict: *mut c_int,
) -> c_int {
    if graph.is_null() || out_json.is_null() {
        return fail_argument("tgalg_decide_finiteness_json: null argument");
    }
    if eps.is_null() && eps_len > 0 {
        return fail_argument("tgalg_decide_finiteness_json: eps is null but eps_len > 0");
    }
    let g = &unsafe { &*graph }.inner;
    let eps_list: Vec<f64> = if eps_len == 0 {
        Vec::new()
    } else {
        unsafe { std::slice::from_raw_parts(eps, eps_len) }.to_vec()
    };
    let verdict = match decide(g, &eps_list, exact) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    if !out_verdict.is_null() {
        unsafe {
            *out_verdict = match verdict.verdict {
                Verdict::ConsistentWithFinite => TGALG_VERDICT_CONSISTENT_WITH_FINITE,
                Verdict::Infinite => TGALG_VERDICT_INFINITE,
                Verdict::Inconclusive => TGALG_VERDICT_INCONCLUSIVE,
            };
        }
    }
    let report = decide_report(g, &verdict, &eps_list, exact);
    match serde_json::to_string_pretty(&report) {
        Ok(body) => unsafe { write_string(out_json, body) },
        Err(e) => {
            set_error(&e.to_string());
            TGALG_ERR_INTERNAL
        }
    }
}

/// Analyzes the weighted shift of a directed tree. Weights are given per
/// vertex in graph order: `weights_re` is required, `weights_im` may be
/// null for real weights.
///
/// # Safety
/// `graph` must be a live handle; the weight arrays must hold `len`
/// readable doubles each when non-null; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tgalg_shift_analyze_json(
    graph: *const TgalgGraph,
    weights_re: *const f64,
    weights_im: *const f64,
    len: usize,
    out_json: *mut *mut c_char,
) -> c_int {
    if graph.is_null() || out_json.is_null() || weights_re.is_null() {
        return fail_argument("tgalg_shift_analyze_json: null argument");
    }
    let g = &unsafe { &*graph }.inner;
    if len != g.vertex_count() {
        return fail_argument("tgalg_shift_analyze_json: weight count differs from vertex count");
    }
    let re = unsafe { std::slice::from_raw_parts(weights_re, len) };
    let weights: Vec<Complex64> = if weights_im.is_null() {
        re.iter().map(|&r| Complex64::new(r, 0.0)).collect()
    } else {
        let im = unsafe { std::slice::from_raw_parts(weights_im, len) };
        re.iter()
            .zip(im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect()
    };
    match shift_analyze_report(g, weights) {
        Ok(report) => match serde_json::to_string_pretty(&report) {
            Ok(body) => unsafe { write_string(out_json, body) },
            Err(e) => {
                set_error(&e.to_string());
                TGALG_ERR_INTERNAL
            }
        },
        Err(e) => fail(&e),
    }
}

/// Releases a string produced by this library. Null is ignored.
///
/// # Safety
/// `s` must originate from a tgalg out-parameter and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn tgalg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    const LOOP_GRAPH: &str =
        "[[vertices]]\nid = \"v\"\n[[edges]]\nid = \"e\"\nsrc = \"v\"\nrng = \"v\"\n";

    fn load(text: &str) -> *mut TgalgGraph {
        let c_text = CString::new(text).unwrap();
        let mut handle: *mut TgalgGraph = ptr::null_mut();
        let code = unsafe { tgalg_graph_load_str(c_text.as_ptr(), &mut handle) };
        assert_eq!(code, TGALG_OK);
        assert!(!handle.is_null());
        handle
    }

    fn take_string(ptr: *mut c_char) -> String {
        assert!(!ptr.is_null());
        let s = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap().to_string();
        unsafe { tgalg_string_free(ptr) };
        s
    }

    #[test]
    fn load_validate_free_round_trip() {
        let handle = load(LOOP_GRAPH);
        assert_eq!(unsafe { tgalg_graph_vertex_count(handle) }, 1);
        assert_eq!(unsafe { tgalg_graph_edge_count(handle) }, 1);
        let mut json: *mut c_char = ptr::null_mut();
        let code = unsafe { tgalg_validate_json(handle, &mut json) };
        assert_eq!(code, TGALG_OK);
        let body = take_string(json);
        assert!(body.contains("\"s_injective\": true"), "{body}");
        unsafe { tgalg_graph_free(handle) };
    }

    #[test]
    fn decide_finiteness_loop_graph() {
        let handle = load(LOOP_GRAPH);
        let mut json: *mut c_char = ptr::null_mut();
        let mut verdict: c_int = -1;
        let code = unsafe {
            tgalg_decide_finiteness_json(handle, ptr::null(), 0, true, &mut json, &mut verdict)
        };
        assert_eq!(code, TGALG_OK);
        assert_eq!(verdict, TGALG_VERDICT_CONSISTENT_WITH_FINITE);
        let body = take_string(json);
        assert!(body.contains("consistent-with-finite"), "{body}");
        unsafe { tgalg_graph_free(handle) };
    }

    #[test]
    fn decide_finiteness_double_loop_is_infinite() {
        let handle = load(
            "[[vertices]]\nid = \"v\"\n[[edges]]\nid = \"e\"\nsrc = \"v\"\nrng = \"v\"\n[[edges]]\nid = \"f\"\nsrc = \"v\"\nrng = \"v\"\n",
        );
        let mut json: *mut c_char = ptr::null_mut();
        let mut verdict: c_int = -1;
        let eps = [0.5f64];
        let code = unsafe {
            tgalg_decide_finiteness_json(handle, eps.as_ptr(), 1, false, &mut json, &mut verdict)
        };
        assert_eq!(code, TGALG_OK);
        assert_eq!(verdict, TGALG_VERDICT_INFINITE);
        take_string(json);
        unsafe { tgalg_graph_free(handle) };
    }

    #[test]
    fn shift_analyze_four_vertex_tree() {
        let handle = load(
            "[[vertices]]\nid = \"1\"\n[[vertices]]\nid = \"2\"\n[[vertices]]\nid = \"3\"\n[[vertices]]\nid = \"4\"\n\
             [[edges]]\nid = \"a\"\nsrc = \"1\"\nrng = \"2\"\n\
             [[edges]]\nid = \"b\"\nsrc = \"2\"\nrng = \"3\"\n\
             [[edges]]\nid = \"c\"\nsrc = \"2\"\nrng = \"4\"\n",
        );
        let re = [0.0, 1.0, 1.0, 1.0];
        let mut json: *mut c_char = ptr::null_mut();
        let code =
            unsafe { tgalg_shift_analyze_json(handle, re.as_ptr(), ptr::null(), 4, &mut json) };
        assert_eq!(code, TGALG_OK);
        let body = take_string(json);
        assert!(body.contains("\"ker_dim\": 2"), "{body}");
        assert!(body.contains("\"coker_dim\": 2"), "{body}");
        unsafe { tgalg_graph_free(handle) };
    }

    #[test]
    fn errors_set_message_and_code() {
        let c_text = CString::new("[[vertices]]\nid = \"v\"\ncolor = \"red\"\n").unwrap();
        let mut handle: *mut TgalgGraph = ptr::null_mut();
        let code = unsafe { tgalg_graph_load_str(c_text.as_ptr(), &mut handle) };
        assert_eq!(code, TGALG_ERR_INPUT);
        assert!(handle.is_null());
        let msg = unsafe { CStr::from_ptr(tgalg_last_error()) }
            .to_str()
            .unwrap();
        assert!(msg.contains("schema"), "{msg}");

        let code = unsafe { tgalg_graph_load_str(ptr::null(), &mut handle) };
        assert_eq!(code, TGALG_ERR_ARGUMENT);

        // Rejecting a shift analysis on a graph with loops.
        let loop_handle = load(LOOP_GRAPH);
        let re = [1.0f64];
        let mut json: *mut c_char = ptr::null_mut();
        let code = unsafe {
            tgalg_shift_analyze_json(loop_handle, re.as_ptr(), ptr::null(), 1, &mut json)
        };
        assert_eq!(code, TGALG_ERR_INPUT);
        let msg = unsafe { CStr::from_ptr(tgalg_last_error()) }
            .to_str()
            .unwrap();
        assert!(msg.contains("loops"), "{msg}");
        unsafe { tgalg_graph_free(loop_handle) };
    }
}

//! C ABI over `dgs-core`.
//!
//! Every function returns a [`DgsStatus`]; results come back through out
//! pointers. Handles are opaque and owned by the caller until passed to the
//! matching `*_free` / `*_end` / `*_commit` / `*_abort`. Transactions keep
//! their graph alive, so freeing a graph with open transactions is safe.
//! After a non-OK status, `dgs_last_error` describes the failure on the
//! calling thread.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use dgs_core::types::{CcMode, ContainerKind};
use dgs_core::{Error, Graph, GraphConfig, ReadTxn, WriteTxn};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DgsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Aborted = 4,
    VertexNotFound = 5,
    Unsupported = 6,
    Internal = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DgsContainer {
    Unsorted = 0,
    Sorted = 1,
    Pma = 2,
    Segsl = 3,
    Cow = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DgsCc {
    Fine = 0,
    Coarse = 1,
    Off = 2,
}

/// Opaque graph handle.
pub struct DgsGraph {
    graph: Arc<Graph>,
}

/// Opaque read transaction.
pub struct DgsRead {
    // Declared before `_graph` so it drops first.
    txn: ReadTxn<'static>,
    _graph: Arc<Graph>,
}

/// Opaque write transaction.
pub struct DgsWrite {
    txn: Option<WriteTxn<'static>>,
    _graph: Arc<Graph>,
}

/// Receives one neighbor per call during `dgs_read_scan`.
pub type DgsNeighborFn = Option<unsafe extern "C" fn(ctx: *mut c_void, v: u64)>;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> DgsStatus {
    match e {
        Error::Config(_) => DgsStatus::Config,
        Error::Aborted(_) => DgsStatus::Aborted,
        Error::VertexNotFound(_) => DgsStatus::VertexNotFound,
        Error::Unsupported(_) => DgsStatus::Unsupported,
        Error::InvalidArgument(_) | Error::WorkloadMismatch(_) | Error::EmptySamples => {
            DgsStatus::InvalidArgument
        }
        _ => DgsStatus::Internal,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (DgsStatus, String)>) -> DgsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DgsStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("panic inside the library");
            DgsStatus::Panic
        }
    }
}

fn fail(e: Error) -> (DgsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (DgsStatus, String) {
    (DgsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (DgsStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (DgsStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread; empty after success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dgs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Create a graph with default tuning for the given container and regime.
#[no_mangle]
pub unsafe extern "C" fn dgs_graph_new(
    container: DgsContainer,
    cc: DgsCc,
    out_graph: *mut *mut DgsGraph,
) -> DgsStatus {
    guard(|| {
        let slot = out(out_graph, "out_graph")?;
        *slot = ptr::null_mut();
        let container = match container {
            DgsContainer::Unsorted => ContainerKind::Unsorted,
            DgsContainer::Sorted => ContainerKind::Sorted,
            DgsContainer::Pma => ContainerKind::Pma,
            DgsContainer::Segsl => ContainerKind::Segsl,
            DgsContainer::Cow => ContainerKind::Cow,
        };
        let cc = match cc {
            DgsCc::Fine => CcMode::Fine,
            DgsCc::Coarse => CcMode::Coarse,
            DgsCc::Off => CcMode::Off,
        };
        let graph = Graph::new(GraphConfig::new(container, cc)).map_err(fail)?;
        *slot = Box::into_raw(Box::new(DgsGraph {
            graph: Arc::new(graph),
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dgs_graph_free(graph: *mut DgsGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Latest committed timestamp.
#[no_mangle]
pub unsafe extern "C" fn dgs_graph_now(graph: *const DgsGraph, out_ts: *mut u64) -> DgsStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        *out(out_ts, "out_ts")? = g.graph.now().0;
        Ok(())
    })
}

/// Bulk-load `count` edges given as `pairs[2i] -> pairs[2i + 1]`.
#[no_mangle]
pub unsafe extern "C" fn dgs_graph_load(graph: *const DgsGraph, pairs: *const u64, count: usize) -> DgsStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        if count == 0 {
            return Ok(());
        }
        if pairs.is_null() {
            return Err(null("pairs"));
        }
        let raw = std::slice::from_raw_parts(pairs, count * 2);
        let edges: Vec<(u64, u64)> = raw.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        g.graph.load_edges(&edges).map_err(fail)
    })
}

/// Single-edge insert transaction; `out_ts` may be null.
#[no_mangle]
pub unsafe extern "C" fn dgs_insert_edge(graph: *const DgsGraph, u: u64, v: u64, out_ts: *mut u64) -> DgsStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        let ts = g.graph.insert_edge(u, v).map_err(fail)?;
        if let Some(o) = out_ts.as_mut() {
            *o = ts.0;
        }
        Ok(())
    })
}

/// Single-edge delete transaction; `out_ts` may be null.
#[no_mangle]
pub unsafe extern "C" fn dgs_delete_edge(graph: *const DgsGraph, u: u64, v: u64, out_ts: *mut u64) -> DgsStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        let ts = g.graph.delete_edge(u, v).map_err(fail)?;
        if let Some(o) = out_ts.as_mut() {
            *o = ts.0;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dgs_read_begin(graph: *const DgsGraph, out_read: *mut *mut DgsRead) -> DgsStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        let slot = out(out_read, "out_read")?;
        let arc = Arc::clone(&g.graph);
        // SAFETY: the transaction borrows the graph inside `arc`, which the
        // handle owns and drops after the transaction.
        let txn: ReadTxn<'static> = std::mem::transmute(arc.begin_read());
        *slot = Box::into_raw(Box::new(DgsRead { txn, _graph: arc }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dgs_read_end(read: *mut DgsRead) {
    if !read.is_null() {
        drop(Box::from_raw(read));
    }
}

#[no_mangle]
pub unsafe extern "C" fn dgs_read_start_ts(read: *const DgsRead, out_ts: *mut u64) -> DgsStatus {
    guard(|| {
        let r = deref(read, "read")?;
        *out(out_ts, "out_ts")? = r.txn.start_ts().0;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn dgs_read_search(read: *const DgsRead, u: u64, v: u64, out_found: *mut bool) -> DgsStatus {
    guard(|| {
        let r = deref(read, "read")?;
        *out(out_found, "out_found")? = r.txn.search_edge(u, v);
        Ok(())
    })
}

/// Call `f(ctx, v)` for every neighbor of `u`; `out_count` may be null.
#[no_mangle]
pub unsafe extern "C" fn dgs_read_scan(
    read: *const DgsRead,
    u: u64,
    f: DgsNeighborFn,
    ctx: *mut c_void,
    out_count: *mut usize,
) -> DgsStatus {
    guard(|| {
        let r = deref(read, "read")?;
        let f = f.ok_or_else(|| null("callback"))?;
        let n = r.txn.scan_neighbors(u, |v| f(ctx, v));
        if let Some(o) = out_count.as_mut() {
            *o = n;
        }
        Ok(())
    })
}

/// Copy up to `cap` neighbors of `u` into `buf`; `out_degree` receives the
/// full count so callers can retry with a larger buffer.
#[no_mangle]
pub unsafe extern "C" fn dgs_read_neighbors(
    read: *const DgsRead,
    u: u64,
    buf: *mut u64,
    cap: usize,
    out_degree: *mut usize,
) -> DgsStatus {
    guard(|| {
        let r = deref(read, "read")?;
        let degree = out(out_degree, "out_degree")?;
        if cap > 0 && buf.is_null() {
            return Err(null("buf"));
        }
        let mut n = 0usize;
        r.txn.scan_neighbors(u, |v| {
            if n < cap {
                *buf.add(n) = v;
            }
            n += 1;
        });
        *degree = n;
        Ok(())
    })
}

/// Open a write transaction over the `count` vertices in `delta_v`.
#[no_mangle]
pub unsafe extern "C" fn dgs_write_begin(
    graph: *const DgsGraph,
    delta_v: *const u64,
    count: usize,
    out_write: *mut *mut DgsWrite,
) -> DgsStatus {
    guard(|| {
        let g = deref(graph, "graph")?;
        let slot = out(out_write, "out_write")?;
        *slot = ptr::null_mut();
        let ids: &[u64] = if count == 0 {
            &[]
        } else if delta_v.is_null() {
            return Err(null("delta_v"));
        } else {
            std::slice::from_raw_parts(delta_v, count)
        };
        let arc = Arc::clone(&g.graph);
        let txn = arc.begin_write(ids.iter().copied()).map_err(fail)?;
        // SAFETY: as in `dgs_read_begin`.
        let txn: WriteTxn<'static> = std::mem::transmute(txn);
        *slot = Box::into_raw(Box::new(DgsWrite {
            txn: Some(txn),
            _graph: arc,
        }));
        Ok(())
    })
}

unsafe fn write_op(write: *mut DgsWrite, u: u64, v: u64, insert: bool) -> DgsStatus {
    guard(|| {
        let w = out(write, "write")?;
        let txn = w
            .txn
            .as_mut()
            .ok_or_else(|| (DgsStatus::Aborted, "transaction already finished".to_string()))?;
        let r = if insert {
            txn.insert_edge(u, v)
        } else {
            txn.delete_edge(u, v)
        };
        r.map_err(fail)
    })
}

/// On failure the transaction is aborted; it must still be released with
/// `dgs_write_abort`.
#[no_mangle]
pub unsafe extern "C" fn dgs_write_insert(write: *mut DgsWrite, u: u64, v: u64) -> DgsStatus {
    write_op(write, u, v, true)
}

#[no_mangle]
pub unsafe extern "C" fn dgs_write_delete(write: *mut DgsWrite, u: u64, v: u64) -> DgsStatus {
    write_op(write, u, v, false)
}

/// Commit and release the handle; `out_ts` may be null.
#[no_mangle]
pub unsafe extern "C" fn dgs_write_commit(write: *mut DgsWrite, out_ts: *mut u64) -> DgsStatus {
    guard(|| {
        if write.is_null() {
            return Err(null("write"));
        }
        let mut w = Box::from_raw(write);
        let txn = w
            .txn
            .take()
            .ok_or_else(|| (DgsStatus::Aborted, "transaction already finished".to_string()))?;
        let ts = txn.commit().map_err(fail)?;
        if let Some(o) = out_ts.as_mut() {
            *o = ts.0;
        }
        Ok(())
    })
}

/// Roll back and release the handle.
#[no_mangle]
pub unsafe extern "C" fn dgs_write_abort(write: *mut DgsWrite) {
    if !write.is_null() {
        let mut w = Box::from_raw(write);
        if let Some(t) = w.txn.take() {
            t.abort();
        }
    }
}

//! C ABI for chaoskit.
//!
//! Every function returns a [`ChaosStatus`] and writes results through out
//! pointers. On failure a message is kept per thread and can be copied out with
//! [`chaoskit_last_error`]. Handles are opaque, created by `_new`/`_solve`
//! functions and released by the matching `_free`.
//!
//! # Safety
//!
//! Pointers must be valid for the stated lengths and handles must come from
//! this library and not be used after being freed.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chaoskit::field::{covariance, FieldModel, KernelSpec, TimeGrid};
use chaoskit::montecarlo::PathSampler;
use chaoskit::multiindex::TruncationSpec;
use chaoskit::sode::{solve_propagator, PropagatorOptions, SodeProblem};
use chaoskit::spde::{check_parabolicity, solve_heat_closed, HeatInput, HeatProblem, SpatialGrid};
use chaoskit::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChaosStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// Output buffer shorter than required.
    BufferTooSmall = 3,
    UnsupportedField = 4,
    NotFirstOrder = 5,
    NegativeVariance = 6,
    UnstableStep = 7,
    SingularDiagonal = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChaosKernelKind {
    Wiener = 0,
    /// Parameter: Hurst index.
    Fbm = 1,
    /// Parameter: rate `b`.
    OuStable = 2,
    OuUnstable = 3,
}

/// Field model on a uniform time grid.
pub struct ChaosField(FieldModel);

/// Chaos coefficients of a scalar Wick-linear equation.
pub struct ChaosSodeSolution {
    mean: Vec<f64>,
    second_moment: Vec<f64>,
    indices: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChaosNormBound {
    pub k0: f64,
    pub k1: f64,
    /// `(k0 + k1)²`
    pub bound: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ChaosParabolicity {
    pub holds: bool,
    /// NaN when the condition holds on the whole grid.
    pub first_violation_t: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> ChaosStatus {
    match e {
        Error::UnsupportedField(_) | Error::HypothesesUnverifiable(_) => ChaosStatus::UnsupportedField,
        Error::NotFirstOrder(_) => ChaosStatus::NotFirstOrder,
        Error::NegativeVariance { .. } => ChaosStatus::NegativeVariance,
        Error::UnstableStep(_) => ChaosStatus::UnstableStep,
        Error::SingularDiagonal(_) => ChaosStatus::SingularDiagonal,
        _ => ChaosStatus::InvalidArgument,
    }
}

enum Fail {
    Status(ChaosStatus, String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn null(what: &str) -> Fail {
    Fail::Status(ChaosStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ChaosStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ChaosStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            ChaosStatus::Panic
        }
    }
}

unsafe fn field_ref<'a>(h: *const ChaosField) -> Result<&'a FieldModel, Fail> {
    h.as_ref().map(|f| &f.0).ok_or_else(|| null("field handle"))
}

unsafe fn out_slice<'a>(buf: *mut f64, len: usize, needed: usize) -> Result<&'a mut [f64], Fail> {
    if buf.is_null() {
        return Err(null("output buffer"));
    }
    if len < needed {
        return Err(Fail::Status(ChaosStatus::BufferTooSmall, format!("buffer holds {len} values, {needed} needed")));
    }
    Ok(std::slice::from_raw_parts_mut(buf, needed))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

/// Copies the last error message of this thread, NUL-terminated and truncated
/// to `len` bytes. Returns the full message length plus one.
#[no_mangle]
pub unsafe extern "C" fn chaoskit_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}

/// Static NUL-terminated version string.
#[no_mangle]
pub extern "C" fn chaoskit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn chaoskit_field_new(
    kind: ChaosKernelKind,
    param: f64,
    t_end: f64,
    n_cells: usize,
    basis_dim: usize,
    out: *mut *mut ChaosField,
) -> ChaosStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let kernel = match kind {
            ChaosKernelKind::Wiener => KernelSpec::Wiener,
            ChaosKernelKind::Fbm => KernelSpec::Fbm { hurst: param },
            ChaosKernelKind::OuStable => KernelSpec::OuStable { b: param },
            ChaosKernelKind::OuUnstable => KernelSpec::OuUnstable { b: param },
        };
        let model = FieldModel::build(kernel, TimeGrid::new(t_end, n_cells)?, basis_dim)?;
        write(out, Box::into_raw(Box::new(ChaosField(model))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn chaoskit_field_free(field: *mut ChaosField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Number of time nodes, `n_cells + 1`.
#[no_mangle]
pub unsafe extern "C" fn chaoskit_field_n_nodes(field: *const ChaosField, out: *mut usize) -> ChaosStatus {
    guard(|| write(out, field_ref(field)?.grid().n_nodes()))
}

/// `R(t,t)` on the grid nodes.
#[no_mangle]
pub unsafe extern "C" fn chaoskit_field_variance(field: *const ChaosField, buf: *mut f64, len: usize) -> ChaosStatus {
    guard(|| {
        let v = field_ref(field)?.variance();
        out_slice(buf, len, v.len())?.copy_from_slice(&v);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn chaoskit_field_covariance(
    field: *const ChaosField,
    t: f64,
    s: f64,
    out: *mut f64,
) -> ChaosStatus {
    guard(|| {
        let m = field_ref(field)?;
        let horizon = m.grid().t_end();
        if !(0.0..=horizon).contains(&t) || !(0.0..=horizon).contains(&s) {
            return Err(Fail::Lib(Error::InvalidParameter(format!("times must lie in [0, {horizon}]"))));
        }
        write(out, covariance(m.kernel(), t, s))
    })
}

/// `M̃_k(t_j) = ∫_0^{t_j} (𝒦* m_k)`, `1 ≤ k ≤ basis_dim`.
#[no_mangle]
pub unsafe extern "C" fn chaoskit_field_mtilde(
    field: *const ChaosField,
    k: usize,
    buf: *mut f64,
    len: usize,
) -> ChaosStatus {
    guard(|| {
        let m = field_ref(field)?;
        if k == 0 || k > m.basis_dim() {
            return Err(Fail::Lib(Error::InvalidParameter(format!("k must lie in 1..={}", m.basis_dim()))));
        }
        let v = m.mtilde(k);
        out_slice(buf, len, v.len())?.copy_from_slice(v);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn chaoskit_field_norm_bound(field: *const ChaosField, out: *mut ChaosNormBound) -> ChaosStatus {
    guard(|| {
        let b = field_ref(field)?.norm_bound()?;
        write(out, ChaosNormBound { k0: b.k0, k1: b.k1, bound: b.bound })
    })
}

/// Discrete estimate of the operator norm of `𝒦*`.
#[no_mangle]
pub unsafe extern "C" fn chaoskit_field_galerkin_norm(field: *const ChaosField, out: *mut f64) -> ChaosStatus {
    guard(|| write(out, field_ref(field)?.galerkin_norm()))
}

/// Samples `X(t_j)` at every node; `buf` receives `n_paths × n_nodes` values,
/// path-major.
#[no_mangle]
pub unsafe extern "C" fn chaoskit_sample_paths(
    field: *const ChaosField,
    n_paths: usize,
    seed: u64,
    buf: *mut f64,
    len: usize,
) -> ChaosStatus {
    guard(|| {
        let m = field_ref(field)?;
        let n1 = m.grid().n_nodes();
        let needed = n_paths
            .checked_mul(n1)
            .ok_or_else(|| Fail::Lib(Error::InvalidParameter("too many paths".into())))?;
        let out = out_slice(buf, len, needed)?;
        let nodes: Vec<usize> = (0..n1).collect();
        let ens = PathSampler::new(m, &nodes)?.sample(n_paths, seed);
        for i in 0..n_paths {
            out[i * n1..(i + 1) * n1].copy_from_slice(ens.path(i));
        }
        Ok(())
    })
}

/// Solves `du = a u dt + σ u ⋄ dX`, `u(0) = u0`, with constant `a`, `σ`.
/// `prune_tol ≤ 0` keeps every coefficient.
#[no_mangle]
pub unsafe extern "C" fn chaoskit_sode_solve(
    field: *const ChaosField,
    max_order: usize,
    max_dim: usize,
    drift: f64,
    sigma: f64,
    u0: f64,
    prune_tol: f64,
    out: *mut *mut ChaosSodeSolution,
) -> ChaosStatus {
    guard(|| {
        let m = field_ref(field)?.clone();
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let n1 = m.grid().n_nodes();
        let mut p = SodeProblem::new(m, TruncationSpec::new(max_order, max_dim)?)
            .with_drift(vec![drift; n1])
            .with_u0(u0);
        p.sigma = vec![vec![sigma; n1]];
        let opts = PropagatorOptions { prune_tol: (prune_tol > 0.0).then_some(prune_tol) };
        let sol = solve_propagator(&p, opts)?;
        let s = ChaosSodeSolution {
            mean: sol.process.mean(),
            second_moment: sol.process.second_moment(),
            indices: sol.process.len(),
        };
        write(out, Box::into_raw(Box::new(s)))
    })
}

#[no_mangle]
pub unsafe extern "C" fn chaoskit_sode_free(sol: *mut ChaosSodeSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Number of stored chaos coefficients.
#[no_mangle]
pub unsafe extern "C" fn chaoskit_sode_indices(sol: *const ChaosSodeSolution, out: *mut usize) -> ChaosStatus {
    guard(|| write(out, sol.as_ref().ok_or_else(|| null("solution handle"))?.indices))
}

/// `E u(t_j)` and `E u(t_j)²`; either buffer may be null.
#[no_mangle]
pub unsafe extern "C" fn chaoskit_sode_moments(
    sol: *const ChaosSodeSolution,
    mean: *mut f64,
    second_moment: *mut f64,
    len: usize,
) -> ChaosStatus {
    guard(|| {
        let s = sol.as_ref().ok_or_else(|| null("solution handle"))?;
        if !mean.is_null() {
            out_slice(mean, len, s.mean.len())?.copy_from_slice(&s.mean);
        }
        if !second_moment.is_null() {
            out_slice(second_moment, len, s.second_moment.len())?.copy_from_slice(&s.second_moment);
        }
        Ok(())
    })
}

unsafe fn heat(
    field: *const ChaosField,
    a: f64,
    sigma: f64,
    length: f64,
    u0: *const f64,
    n_x: usize,
) -> Result<HeatProblem, Fail> {
    let m = field_ref(field)?.clone();
    if u0.is_null() {
        return Err(null("initial data"));
    }
    let space = SpatialGrid::new(length, n_x)?;
    let u0 = std::slice::from_raw_parts(u0, n_x).to_vec();
    Ok(HeatProblem::constant(m, space, a, sigma, u0)?)
}

/// Non-explosion condition of `du = a u_xx dt + σ u_x ⋄ dX` on the field's grid.
#[no_mangle]
pub unsafe extern "C" fn chaoskit_heat_parabolicity(
    field: *const ChaosField,
    a: f64,
    sigma: f64,
    out: *mut ChaosParabolicity,
) -> ChaosStatus {
    guard(|| {
        let p = heat(field, a, sigma, 1.0, [0.0, 0.0].as_ptr(), 2)?;
        let r = check_parabolicity(&p);
        write(out, ChaosParabolicity { holds: r.holds, first_violation_t: r.first_violation_t.unwrap_or(f64::NAN) })
    })
}

/// `E u(t_node, x_i)` of the heat equation on the periodic grid
/// `x_i = i·length/n_x`; fails with `NegativeVariance` where the condition is
/// violated.
#[no_mangle]
pub unsafe extern "C" fn chaoskit_heat_mean(
    field: *const ChaosField,
    a: f64,
    sigma: f64,
    length: f64,
    u0: *const f64,
    n_x: usize,
    node: usize,
    buf: *mut f64,
    len: usize,
) -> ChaosStatus {
    guard(|| {
        let p = heat(field, a, sigma, length, u0, n_x)?;
        if node >= p.model().grid().n_nodes() {
            return Err(Fail::Lib(Error::InvalidParameter(format!("node {node} is outside the time grid"))));
        }
        let out = out_slice(buf, len, n_x)?;
        let u = solve_heat_closed(&p, HeatInput::Moment, &[node])?;
        out.copy_from_slice(&u[0]);
        Ok(())
    })
}

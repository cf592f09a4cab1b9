//! C ABI for the msgain toolkit.
//!
//! Objects cross the boundary as opaque handles created by `msgain_*_new`
//! and released by the matching `msgain_*_free`. Every fallible call returns
//! an [`MsgainStatus`]; on failure a description is available from
//! [`msgain_last_error_message`] on the same thread until the next call.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::ptr;
use std::slice;

use msgain::lti::{h2_norm_sq, H2Method};
use msgain::mc::{simulate_two_agent, Classification, NoiseModel, SimConfig};
use msgain::ms::{is_ms_stable, ms_operator_radius, MsMethod};
use msgain::stabilizability::{
    condition_case1, condition_case2, condition_consensus, jury_gain_interval, optimal_gain_case1, Condition,
    StabilizabilityVerdict,
};
use msgain::{closed_loop_block, Error, FrequencyGrid, TransferFunction, TransferMatrix, UncertaintyCovariance};

/// Opaque SISO transfer function.
pub struct MsgainTransferFunction(TransferFunction);

/// Opaque transfer matrix.
pub struct MsgainTransferMatrix(TransferMatrix);

/// Opaque uncertainty covariance.
pub struct MsgainCovariance(UncertaintyCovariance);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsgainStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unstable = 3,
    Singular = 4,
    NotConverged = 5,
    Dimension = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsgainMethod {
    KronVec = 0,
    PowerIter = 1,
    ClosedForm = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsgainCondition {
    CaseOne = 0,
    CaseTwo = 1,
    Consensus = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsgainClassification {
    Bounded = 0,
    Divergent = 1,
    Inconclusive = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsgainVerdict {
    pub rho: f64,
    pub stable: bool,
    pub margin: f64,
    pub method: MsgainMethod,
    pub grid_points: usize,
    pub marginal: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsgainStabVerdict {
    pub lhs: f64,
    pub feasible: bool,
    pub condition: MsgainCondition,
    pub sufficient_only: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsgainSimSummary {
    pub classification: MsgainClassification,
    pub growth_rate: f64,
    /// NaN when no ratio could be formed.
    pub step_ratio: f64,
    pub steps_completed: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> MsgainStatus {
    match err {
        Error::UnstableLyapunov { .. }
        | Error::UnstableH2
        | Error::UnstableBlock { .. }
        | Error::StablePlant { .. }
        | Error::ClosedLoopUnstable { .. }
        | Error::PoleOutsideUnitDisk { .. }
        | Error::NoStabilizingGain => MsgainStatus::Unstable,
        Error::SingularLoop | Error::EvaluationAtPole { .. } | Error::PoleZeroCoincidence(_) => {
            MsgainStatus::Singular
        }
        Error::NotConverged { .. } => MsgainStatus::NotConverged,
        Error::Dimension(_) => MsgainStatus::Dimension,
        Error::QuadratureInconsistency { .. } | Error::Io(_) => MsgainStatus::Internal,
        _ => MsgainStatus::InvalidArgument,
    }
}

/// Run `f`, translating errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), Error>>(f: F) -> MsgainStatus {
    clear_error();
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok(Ok(())) => MsgainStatus::Ok,
        Ok(Err(e)) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            MsgainStatus::Internal
        }
    }
}

macro_rules! non_null {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            clear_error();
            set_error("null pointer argument".into());
            return MsgainStatus::NullPointer;
        }
    };
}

/// # Safety
/// `ptr` must be null with `len == 0`, or point to `len` readable doubles.
unsafe fn read_slice<'a>(ptr: *const f64, len: usize) -> &'a [f64] {
    if len == 0 {
        &[]
    } else {
        // SAFETY: guaranteed by the caller.
        unsafe { slice::from_raw_parts(ptr, len) }
    }
}

fn grid(points: usize) -> Result<FrequencyGrid, Error> {
    FrequencyGrid::new(points)
}

fn stab_out(v: StabilizabilityVerdict) -> MsgainStabVerdict {
    MsgainStabVerdict {
        lhs: v.lhs,
        feasible: v.feasible,
        condition: match v.condition {
            Condition::CaseOne => MsgainCondition::CaseOne,
            Condition::CaseTwo => MsgainCondition::CaseTwo,
            Condition::Consensus => MsgainCondition::Consensus,
        },
        sufficient_only: v.sufficient_only,
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next msgain call on this thread.
#[no_mangle]
pub extern "C" fn msgain_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn msgain_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Create `num(z)/den(z)` from descending-power coefficient arrays.
///
/// # Safety
/// `num` and `den` must point to `num_len` and `den_len` doubles; `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_tf_new(
    num: *const f64,
    num_len: usize,
    den: *const f64,
    den_len: usize,
    out: *mut *mut MsgainTransferFunction,
) -> MsgainStatus {
    non_null!(out);
    if (num.is_null() && num_len > 0) || den.is_null() {
        return guard(|| Err(Error::Parse("null coefficient array".into())));
    }
    // SAFETY: lengths and pointers checked above, validity guaranteed by the caller.
    let (n, d) = unsafe { (read_slice(num, num_len), read_slice(den, den_len)) };
    guard(|| {
        let tf = TransferFunction::from_coeffs(n, d)?;
        // SAFETY: out is non-null and writable.
        unsafe { *out = Box::into_raw(Box::new(MsgainTransferFunction(tf))) };
        Ok(())
    })
}

/// # Safety
/// `tf` must be null or a handle from [`msgain_tf_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn msgain_tf_free(tf: *mut MsgainTransferFunction) {
    if !tf.is_null() {
        // SAFETY: handle was produced by Box::into_raw.
        drop(unsafe { Box::from_raw(tf) });
    }
}

/// Frequency response at `e^{j omega}`.
///
/// # Safety
/// `tf` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_tf_evaluate(
    tf: *const MsgainTransferFunction,
    omega: f64,
    re: *mut f64,
    im: *mut f64,
) -> MsgainStatus {
    non_null!(tf, re, im);
    // SAFETY: checked non-null; liveness guaranteed by the caller.
    let tf = unsafe { &(*tf).0 };
    guard(|| {
        let v = tf.evaluate(omega)?;
        // SAFETY: checked non-null.
        unsafe {
            *re = v.re;
            *im = v.im;
        }
        Ok(())
    })
}

/// # Safety
/// `tf` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_tf_is_schur_stable(
    tf: *const MsgainTransferFunction,
    tol: f64,
    out: *mut bool,
) -> MsgainStatus {
    non_null!(tf, out);
    // SAFETY: checked non-null.
    let tf = unsafe { &(*tf).0 };
    guard(|| {
        // SAFETY: checked non-null.
        unsafe { *out = tf.is_schur_stable(tol) };
        Ok(())
    })
}

/// Squared H2 norm; `use_quadrature` selects trapezoid quadrature on
/// `grid_points` nodes instead of the Lyapunov route.
///
/// # Safety
/// `tf` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_tf_h2_norm_sq(
    tf: *const MsgainTransferFunction,
    use_quadrature: bool,
    grid_points: usize,
    out: *mut f64,
) -> MsgainStatus {
    non_null!(tf, out);
    // SAFETY: checked non-null.
    let tf = unsafe { &(*tf).0 };
    guard(|| {
        let method = if use_quadrature {
            H2Method::Quadrature
        } else {
            H2Method::Lyapunov
        };
        let v = h2_norm_sq(tf, method, grid(grid_points)?)?;
        // SAFETY: checked non-null.
        unsafe { *out = v };
        Ok(())
    })
}

/// Covariance from a row-major `m x m` array.
///
/// # Safety
/// `data` must point to `m * m` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_cov_new(
    m: usize,
    data: *const f64,
    out: *mut *mut MsgainCovariance,
) -> MsgainStatus {
    non_null!(data, out);
    // SAFETY: caller guarantees m*m readable doubles.
    let vals = unsafe { read_slice(data, m * m) };
    guard(|| {
        let pi = UncertaintyCovariance::from_row_slice(m, vals)?;
        // SAFETY: checked non-null.
        unsafe { *out = Box::into_raw(Box::new(MsgainCovariance(pi))) };
        Ok(())
    })
}

/// Two-channel covariance `[[s1sq, s12], [s12, s2sq]]`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_cov_two_channel(
    s1sq: f64,
    s2sq: f64,
    s12: f64,
    out: *mut *mut MsgainCovariance,
) -> MsgainStatus {
    non_null!(out);
    guard(|| {
        let pi = UncertaintyCovariance::two_channel(s1sq, s2sq, s12)?;
        // SAFETY: checked non-null.
        unsafe { *out = Box::into_raw(Box::new(MsgainCovariance(pi))) };
        Ok(())
    })
}

/// # Safety
/// `cov` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn msgain_cov_free(cov: *mut MsgainCovariance) {
    if !cov.is_null() {
        // SAFETY: handle was produced by Box::into_raw.
        drop(unsafe { Box::from_raw(cov) });
    }
}

/// 2x2 closed-loop block seen by the input/output uncertainty pair when the
/// constant gain `k` closes the loop around `plant`.
///
/// # Safety
/// `plant` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_closed_loop_block(
    plant: *const MsgainTransferFunction,
    k: f64,
    out: *mut *mut MsgainTransferMatrix,
) -> MsgainStatus {
    non_null!(plant, out);
    // SAFETY: checked non-null.
    let plant = unsafe { &(*plant).0 };
    guard(|| {
        let g = closed_loop_block(plant, k)?;
        // SAFETY: checked non-null.
        unsafe { *out = Box::into_raw(Box::new(MsgainTransferMatrix(g))) };
        Ok(())
    })
}

/// 1x1 transfer matrix wrapping a copy of `tf`.
///
/// # Safety
/// `tf` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_tm_from_tf(
    tf: *const MsgainTransferFunction,
    out: *mut *mut MsgainTransferMatrix,
) -> MsgainStatus {
    non_null!(tf, out);
    // SAFETY: checked non-null.
    let tf = unsafe { &(*tf).0 };
    guard(|| {
        // SAFETY: checked non-null.
        unsafe { *out = Box::into_raw(Box::new(MsgainTransferMatrix(TransferMatrix::scalar(tf.clone())))) };
        Ok(())
    })
}

/// # Safety
/// `tm` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn msgain_tm_free(tm: *mut MsgainTransferMatrix) {
    if !tm.is_null() {
        // SAFETY: handle was produced by Box::into_raw.
        drop(unsafe { Box::from_raw(tm) });
    }
}

/// Mean-square small-gain test, Kronecker form.
///
/// # Safety
/// `g` and `cov` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_is_ms_stable(
    g: *const MsgainTransferMatrix,
    cov: *const MsgainCovariance,
    grid_points: usize,
    out: *mut MsgainVerdict,
) -> MsgainStatus {
    non_null!(g, cov, out);
    // SAFETY: checked non-null.
    let (g, pi) = unsafe { (&(*g).0, &(*cov).0) };
    guard(|| {
        let v = is_ms_stable(g, pi, grid(grid_points)?)?;
        let method = match v.method {
            MsMethod::KronVec => MsgainMethod::KronVec,
            MsMethod::PowerIter => MsgainMethod::PowerIter,
            MsMethod::ClosedForm => MsgainMethod::ClosedForm,
        };
        // SAFETY: checked non-null.
        unsafe {
            *out = MsgainVerdict {
                rho: v.rho,
                stable: v.stable,
                margin: v.margin,
                method,
                grid_points: v.grid_points,
                marginal: v.marginal,
            }
        };
        Ok(())
    })
}

/// Spectral radius of the cone operator by power iteration.
///
/// # Safety
/// `g` and `cov` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_ms_operator_radius(
    g: *const MsgainTransferMatrix,
    cov: *const MsgainCovariance,
    grid_points: usize,
    max_iters: usize,
    tol: f64,
    out: *mut f64,
) -> MsgainStatus {
    non_null!(g, cov, out);
    // SAFETY: checked non-null.
    let (g, pi) = unsafe { (&(*g).0, &(*cov).0) };
    guard(|| {
        let r = ms_operator_radius(g, pi, grid(grid_points)?, max_iters, tol)?;
        // SAFETY: checked non-null.
        unsafe { *out = r };
        Ok(())
    })
}

/// # Safety
/// `cov` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_condition_case1(
    p1: f64,
    cov: *const MsgainCovariance,
    out: *mut MsgainStabVerdict,
) -> MsgainStatus {
    non_null!(cov, out);
    // SAFETY: checked non-null.
    let pi = unsafe { &(*cov).0 };
    guard(|| {
        let v = condition_case1(p1, pi)?;
        // SAFETY: checked non-null.
        unsafe { *out = stab_out(v) };
        Ok(())
    })
}

/// # Safety
/// `cov` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_condition_case2(
    p1: f64,
    s1: f64,
    cov: *const MsgainCovariance,
    out: *mut MsgainStabVerdict,
) -> MsgainStatus {
    non_null!(cov, out);
    // SAFETY: checked non-null.
    let pi = unsafe { &(*cov).0 };
    guard(|| {
        let v = condition_case2(p1, s1, pi)?;
        // SAFETY: checked non-null.
        unsafe { *out = stab_out(v) };
        Ok(())
    })
}

/// # Safety
/// `cov` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_condition_consensus(
    p1: f64,
    cov: *const MsgainCovariance,
    out: *mut MsgainStabVerdict,
) -> MsgainStatus {
    non_null!(cov, out);
    // SAFETY: checked non-null.
    let pi = unsafe { &(*cov).0 };
    guard(|| {
        let v = condition_consensus(p1, pi)?;
        // SAFETY: checked non-null.
        unsafe { *out = stab_out(v) };
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_optimal_gain_case1(p1: f64, out: *mut f64) -> MsgainStatus {
    non_null!(out);
    guard(|| {
        let k = optimal_gain_case1(p1)?;
        // SAFETY: checked non-null.
        unsafe { *out = k };
        Ok(())
    })
}

/// # Safety
/// `kmin` and `kmax` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_jury_gain_interval(
    p1: f64,
    s1: f64,
    kmin: *mut f64,
    kmax: *mut f64,
) -> MsgainStatus {
    non_null!(kmin, kmax);
    guard(|| {
        let (lo, hi) = jury_gain_interval(p1, s1)?;
        // SAFETY: checked non-null.
        unsafe {
            *kmin = lo;
            *kmax = hi;
        }
        Ok(())
    })
}

/// Monte Carlo run of the two-agent error recursion from `e(0) = 1`.
///
/// # Safety
/// `cov` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msgain_simulate_two_agent(
    p1: f64,
    k: f64,
    cov: *const MsgainCovariance,
    horizon: usize,
    trials: usize,
    seed: u64,
    out: *mut MsgainSimSummary,
) -> MsgainStatus {
    non_null!(cov, out);
    // SAFETY: checked non-null.
    let pi = unsafe { &(*cov).0 };
    guard(|| {
        let model = NoiseModel::new(pi, seed)?;
        let cfg = SimConfig {
            horizon,
            trials,
            input_variance: 0.0,
            initial_state: Vec::new(),
            seed: seed.wrapping_add(1),
        };
        let r = simulate_two_agent(p1, k, &model, &cfg)?;
        let classification = match r.classification {
            Classification::Bounded => MsgainClassification::Bounded,
            Classification::Divergent => MsgainClassification::Divergent,
            Classification::Inconclusive => MsgainClassification::Inconclusive,
        };
        // SAFETY: checked non-null.
        unsafe {
            *out = MsgainSimSummary {
                classification,
                growth_rate: r.growth_rate,
                step_ratio: r.step_ratio.unwrap_or(f64::NAN),
                steps_completed: r.variance_traj.len(),
            }
        };
        Ok(())
    })
}

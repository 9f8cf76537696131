//! C ABI for geometry pairs and online learners.
//!
//! Pairs and learners are opaque heap handles released with their `_free`
//! function. Every fallible call returns a [`RomdStatus`]; on failure the
//! message is available from [`romd_last_error`] on the same thread. Vectors
//! are passed as a pointer plus a length that must equal the pair dimension.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use reparam_omd::domains::Domain;
use reparam_omd::learners::{eg_step, ogd_step, omd_step, OgdState, OmdState};
use reparam_omd::{Error, GeometryPair, Regularizer};

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RomdStatus {
    Ok = 0,
    InvalidInput = 1,
    Config = 2,
    Numerical = 3,
    CheckFailed = 4,
    NullPointer = 5,
    Panic = 6,
}

/// Learner selected by [`romd_learner_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RomdLearnerKind {
    /// Mirror descent on `x`.
    Omd = 0,
    /// Projected gradient descent on `u`, played at `x = q(u)`.
    Ogd = 1,
    /// Closed-form exponentiated gradient (entropy pairs only).
    Eg = 2,
}

/// A regularizer, its reparameterization map and the primal domain.
pub struct RomdPair(GeometryPair);

/// An online learner holding its own copy of a pair.
pub struct RomdLearner {
    pair: GeometryPair,
    kind: RomdLearnerKind,
    iterate: Iterate,
}

enum Iterate {
    Primal(OmdState),
    Reparam(OgdState),
}

enum Failure {
    Core(Error),
    Null(&'static str),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RomdStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => (RomdStatus::Ok, String::new()),
        Ok(Err(Failure::Null(what))) => (RomdStatus::NullPointer, format!("null pointer: {what}")),
        Ok(Err(Failure::Core(e))) => {
            let status = match e {
                Error::InvalidInput(_) => RomdStatus::InvalidInput,
                Error::Config(_) => RomdStatus::Config,
                Error::Numerical(_) => RomdStatus::Numerical,
                Error::CheckFailed(_) => RomdStatus::CheckFailed,
            };
            (status, e.to_string())
        }
        Err(_) => (RomdStatus::Panic, "internal panic".to_string()),
    };
    set_last_error(msg);
    status
}

unsafe fn input<'a>(
    p: *const f64,
    len: usize,
    want: usize,
    what: &'static str,
) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    if len != want {
        return Err(Error::invalid(format!(
            "{what}: length {len} does not match dimension {want}"
        ))
        .into());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(
    p: *mut f64,
    len: usize,
    want: usize,
    what: &'static str,
) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    if len != want {
        return Err(Error::invalid(format!(
            "{what}: length {len} does not match dimension {want}"
        ))
        .into());
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn pair_ref<'a>(pair: *const RomdPair) -> Result<&'a GeometryPair, Failure> {
    pair.as_ref().map(|p| &p.0).ok_or(Failure::Null("pair"))
}

unsafe fn emit_pair(
    out: *mut *mut RomdPair,
    make: impl FnOnce() -> reparam_omd::Result<GeometryPair>,
) -> RomdStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = ptr::null_mut();
        let pair = make()?;
        *out = Box::into_raw(Box::new(RomdPair(pair)));
        Ok(())
    })
}

/// Message of the last failed call on this thread, or an empty string.
///
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn romd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn romd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Entropy on the clipped simplex with the quarter-square map.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn romd_pair_eg(
    dim: usize,
    eps_min: f64,
    out: *mut *mut RomdPair,
) -> RomdStatus {
    emit_pair(out, || GeometryPair::eg(dim, eps_min))
}

/// Log-barrier on the box `[eps, 1]^dim` with the exponential map.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn romd_pair_log_barrier(
    dim: usize,
    eps: f64,
    out: *mut *mut RomdPair,
) -> RomdStatus {
    emit_pair(out, || GeometryPair::log_barrier(dim, eps))
}

/// Tempered regularizer on the nonnegative unit `p`-ball with the power map.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn romd_pair_tempered(
    dim: usize,
    tau: f64,
    p: f64,
    out: *mut *mut RomdPair,
) -> RomdStatus {
    emit_pair(out, || GeometryPair::tempered(dim, tau, p))
}

/// Squared Euclidean norm on the box `[lo, hi]^dim` with the identity map.
///
/// # Safety
/// `out` must be null or valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn romd_pair_euclidean_box(
    dim: usize,
    lo: f64,
    hi: f64,
    out: *mut *mut RomdPair,
) -> RomdStatus {
    emit_pair(out, || {
        GeometryPair::euclidean(Domain::uniform_box(dim, lo, hi)?)
    })
}

/// Release a pair. Null is ignored.
///
/// # Safety
/// `pair` must be null or a handle from a `romd_pair_*` constructor not yet freed.
#[no_mangle]
pub unsafe extern "C" fn romd_pair_free(pair: *mut RomdPair) {
    if !pair.is_null() {
        drop(Box::from_raw(pair));
    }
}

/// Dimension of a pair, or 0 for null.
///
/// # Safety
/// `pair` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn romd_pair_dim(pair: *const RomdPair) -> usize {
    pair.as_ref().map_or(0, |p| p.0.dim())
}

/// Center point of the primal domain.
///
/// # Safety
/// `pair` must be a live handle and `out_x` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn romd_pair_center(
    pair: *const RomdPair,
    out_x: *mut f64,
    len: usize,
) -> RomdStatus {
    guard(|| {
        let pair = pair_ref(pair)?;
        output(out_x, len, pair.dim(), "out_x")?.copy_from_slice(&pair.primal.center());
        Ok(())
    })
}

/// `x = q(u)`.
///
/// # Safety
/// `pair` must be a live handle, `u` valid for `len` reads and `out_x` for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn romd_pair_to_primal(
    pair: *const RomdPair,
    u: *const f64,
    len: usize,
    out_x: *mut f64,
) -> RomdStatus {
    guard(|| {
        let pair = pair_ref(pair)?;
        let u = input(u, len, pair.dim(), "u")?;
        let x = pair.to_primal(u)?;
        output(out_x, len, pair.dim(), "out_x")?.copy_from_slice(&x);
        Ok(())
    })
}

/// `u = q⁻¹(x)`.
///
/// # Safety
/// `pair` must be a live handle, `x` valid for `len` reads and `out_u` for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn romd_pair_to_reparam(
    pair: *const RomdPair,
    x: *const f64,
    len: usize,
    out_u: *mut f64,
) -> RomdStatus {
    guard(|| {
        let pair = pair_ref(pair)?;
        let x = input(x, len, pair.dim(), "x")?;
        let u = pair.to_reparam(x)?;
        output(out_u, len, pair.dim(), "out_u")?.copy_from_slice(&u);
        Ok(())
    })
}

/// Largest entrywise gap between `[∇²R(q(u))]⁻¹` and `J_q(u) J_q(u)ᵀ`.
///
/// # Safety
/// `pair` must be a live handle, `u` valid for `len` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn romd_pair_identity_deviation(
    pair: *const RomdPair,
    u: *const f64,
    len: usize,
    out: *mut f64,
) -> RomdStatus {
    guard(|| {
        let pair = pair_ref(pair)?;
        let u = input(u, len, pair.dim(), "u")?;
        let dev = pair.identity_deviation(u)?;
        output(out, 1, 1, "out")?[0] = dev;
        Ok(())
    })
}

/// One mirror descent step from `x` with primal gradient `grad`.
///
/// # Safety
/// `pair` must be a live handle, `x` and `grad` valid for `len` reads and `out_x` for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn romd_omd_step(
    pair: *const RomdPair,
    x: *const f64,
    grad: *const f64,
    len: usize,
    eta: f64,
    out_x: *mut f64,
) -> RomdStatus {
    guard(|| {
        let pair = pair_ref(pair)?;
        let x = input(x, len, pair.dim(), "x")?;
        let g = input(grad, len, pair.dim(), "grad")?;
        if !pair.primal.membership(x, 1e-9)? {
            return Err(Error::invalid(format!("x is outside {}", pair.primal.describe())).into());
        }
        let step = omd_step(pair, &OmdState::new(x.to_vec(), eta), g)?;
        output(out_x, len, pair.dim(), "out_x")?.copy_from_slice(&step.state.x);
        Ok(())
    })
}

/// One projected gradient step on `u`, where `grad` is the primal gradient at `q(u)`.
///
/// # Safety
/// `pair` must be a live handle, `u` and `grad` valid for `len` reads and `out_u` for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn romd_ogd_step(
    pair: *const RomdPair,
    u: *const f64,
    grad: *const f64,
    len: usize,
    eta: f64,
    out_u: *mut f64,
) -> RomdStatus {
    guard(|| {
        let pair = pair_ref(pair)?;
        let u = input(u, len, pair.dim(), "u")?;
        let g = input(grad, len, pair.dim(), "grad")?;
        let g_tilde = pair.reparam.chain_gradient(u, g)?;
        let step = ogd_step(pair, &OgdState::new(u.to_vec(), eta), &g_tilde)?;
        output(out_u, len, pair.dim(), "out_u")?.copy_from_slice(&step.state.u);
        Ok(())
    })
}

/// Create a learner with step size `eta`, starting at `x0` or at the domain center when `x0` is null.
///
/// # Safety
/// `pair` must be a live handle, `x0` null or valid for `len` reads, and `out` valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn romd_learner_new(
    pair: *const RomdPair,
    kind: RomdLearnerKind,
    eta: f64,
    x0: *const f64,
    len: usize,
    out: *mut *mut RomdLearner,
) -> RomdStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        *out = ptr::null_mut();
        let pair = pair_ref(pair)?.clone();
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::config(format!("step size must be positive, got {eta}")).into());
        }
        if kind == RomdLearnerKind::Eg && pair.regularizer != Regularizer::NegativeEntropy {
            return Err(
                Error::config("the exponentiated gradient learner needs the entropy pair").into(),
            );
        }
        let x = if x0.is_null() {
            pair.primal.center()
        } else {
            let x = input(x0, len, pair.dim(), "x0")?.to_vec();
            if !pair.primal.membership(&x, 1e-9)? {
                return Err(Error::config(format!(
                    "initial point is outside {}",
                    pair.primal.describe()
                ))
                .into());
            }
            x
        };
        let iterate = match kind {
            RomdLearnerKind::Ogd => Iterate::Reparam(OgdState::new(pair.reparam.inverse(&x)?, eta)),
            _ => Iterate::Primal(OmdState::new(x, eta)),
        };
        *out = Box::into_raw(Box::new(RomdLearner {
            pair,
            kind,
            iterate,
        }));
        Ok(())
    })
}

/// Release a learner. Null is ignored.
///
/// # Safety
/// `learner` must be null or a handle from [`romd_learner_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn romd_learner_free(learner: *mut RomdLearner) {
    if !learner.is_null() {
        drop(Box::from_raw(learner));
    }
}

/// Round index of the point the learner will play next, starting at 1. Returns 0 for null.
///
/// # Safety
/// `learner` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn romd_learner_round(learner: *const RomdLearner) -> usize {
    learner.as_ref().map_or(0, |l| match &l.iterate {
        Iterate::Primal(s) => s.t,
        Iterate::Reparam(s) => s.t,
    })
}

/// Primal point the learner plays this round.
///
/// # Safety
/// `learner` must be a live handle and `out_x` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn romd_learner_point(
    learner: *const RomdLearner,
    out_x: *mut f64,
    len: usize,
) -> RomdStatus {
    guard(|| {
        let l = learner.as_ref().ok_or(Failure::Null("learner"))?;
        let x = match &l.iterate {
            Iterate::Primal(s) => s.x.clone(),
            Iterate::Reparam(s) => l.pair.reparam.forward(&s.u)?,
        };
        output(out_x, len, l.pair.dim(), "out_x")?.copy_from_slice(&x);
        Ok(())
    })
}

/// Feed the loss gradient at the played point and advance one round.
///
/// On failure the learner keeps its current point.
///
/// # Safety
/// `learner` must be a live handle and `grad` valid for `len` reads.
#[no_mangle]
pub unsafe extern "C" fn romd_learner_update(
    learner: *mut RomdLearner,
    grad: *const f64,
    len: usize,
) -> RomdStatus {
    guard(|| {
        let l = learner.as_mut().ok_or(Failure::Null("learner"))?;
        let g = input(grad, len, l.pair.dim(), "grad")?;
        let next = match &l.iterate {
            Iterate::Primal(s) if l.kind == RomdLearnerKind::Eg => Iterate::Primal(OmdState {
                x: eg_step(&s.x, g, s.eta, &l.pair.primal)?,
                eta: s.eta,
                t: s.t + 1,
            }),
            Iterate::Primal(s) => Iterate::Primal(omd_step(&l.pair, s, g)?.state),
            Iterate::Reparam(s) => {
                let g_tilde = l.pair.reparam.chain_gradient(&s.u, g)?;
                Iterate::Reparam(ogd_step(&l.pair, s, &g_tilde)?.state)
            }
        };
        l.iterate = next;
        Ok(())
    })
}
